//! Shared cases for the criterion benches.

use plateau_core::fixtures::{cone_complex, domain_for, unit_circle};
use plateau_core::{BoundarySystem, FaceComplex, GridDomain};

/// Unit circle, its domain at spacing `h`, and the flat disk.
pub fn disk_case(h: f64) -> (BoundarySystem, GridDomain, FaceComplex) {
    let m = unit_circle();
    let d = domain_for(&m, h, 6.0);
    let x = cone_complex(&d, &m, [0.0; 3]);
    (m, d, x)
}
