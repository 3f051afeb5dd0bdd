//! Boundary systems and candidate surfaces shared by the test suites, the
//! scenario runner and the benches.

use std::f64::consts::{PI, TAU};

use crate::error::Result;
use crate::geometry::P3;
use crate::grid::{cone_triangles, rasterize_triangles, Face, FaceComplex, GridDomain, Triangle};
use crate::linking::{circle, BoundarySystem, Loop};

pub const Z: P3 = [0.0, 0.0, 1.0];

pub fn ring(z: f64, radius: f64, sides: usize) -> Loop {
    circle([0.0, 0.0, z], Z, radius, sides).expect("nondegenerate circle")
}

pub fn unit_circle() -> BoundarySystem {
    BoundarySystem::new(vec![ring(0.0, 1.0, 64)]).expect("one loop")
}

/// Two coaxial circles of radius `radius` at heights `±sep/2`.
pub fn coaxial(sep: f64, radius: f64) -> BoundarySystem {
    BoundarySystem::new(vec![ring(-0.5 * sep, radius, 96), ring(0.5 * sep, radius, 96)]).expect("disjoint loops")
}

/// Three coaxial unit circles at heights `0`, `g1`, `g1 + g2`.
pub fn three_circles(g1: f64, g2: f64) -> BoundarySystem {
    BoundarySystem::new(vec![ring(0.0, 1.0, 96), ring(g1, 1.0, 96), ring(g1 + g2, 1.0, 96)]).expect("disjoint loops")
}

/// Fixtures with 1, 2 and 3 components, each spanned by the cone from its
/// centroid.
pub fn multi_component(c: usize) -> BoundarySystem {
    let loops = match c {
        1 => vec![ring(0.0, 1.0, 64)],
        2 => vec![ring(-0.5, 1.0, 64), ring(0.5, 1.0, 64)],
        _ => vec![ring(-0.6, 1.0, 64), ring(0.0, 0.8, 64), ring(0.6, 1.0, 64)],
    };
    BoundarySystem::new(loops).expect("disjoint loops")
}

/// Boundary of a Möbius band of core radius 1 and the band itself.
pub fn moebius(n: usize, half_width: f64) -> (Loop, Vec<Triangle>) {
    let pt = |th: f64, s: f64| {
        let r = 1.0 + s * (0.5 * th).cos();
        [r * th.cos(), r * th.sin(), s * (0.5 * th).sin()]
    };
    let boundary: Vec<P3> = (0..2 * n).map(|i| pt(2.0 * TAU * i as f64 / (2 * n) as f64, half_width)).collect();
    let mut tris = Vec::new();
    for i in 0..n {
        let (a, b) = (TAU * i as f64 / n as f64, TAU * (i + 1) as f64 / n as f64);
        for (s0, s1) in [(-half_width, 0.0), (0.0, half_width)] {
            tris.push([pt(a, s0), pt(b, s0), pt(b, s1)]);
            tris.push([pt(a, s0), pt(b, s1), pt(a, s1)]);
        }
    }
    (Loop::new(boundary).expect("embedded boundary"), tris)
}

pub fn hopf() -> (Loop, Loop) {
    let a = circle([0.0; 3], Z, 1.0, 48).expect("circle");
    let b = circle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 48).expect("circle");
    (a, b)
}

pub fn split_pair() -> (Loop, Loop) {
    let a = circle([0.0; 3], Z, 1.0, 48).expect("circle");
    let b = circle([3.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 48).expect("circle");
    (a, b)
}

/// The (2,4) torus link: two (1,2) curves on a torus, linking twice.
pub fn torus_link_24(samples: usize) -> (Loop, Loop) {
    let (big, small) = (2.0, 0.7);
    let comp = |phase: f64| {
        let v = (0..samples)
            .map(|k| {
                let t = TAU * k as f64 / samples as f64;
                let w = 2.0 * t + phase;
                [(big + small * w.cos()) * t.cos(), (big + small * w.cos()) * t.sin(), small * w.sin()]
            })
            .collect();
        Loop::new(v).expect("embedded torus curve")
    };
    (comp(0.0), comp(PI))
}

/// Domain around `m` with a margin of `margin_cells` cells.
pub fn domain_for(m: &BoundarySystem, h: f64, margin_cells: f64) -> GridDomain {
    let (lo, hi) = m.bbox();
    GridDomain::around(lo, hi, h, margin_cells * h).expect("positive size")
}

/// Rasterized cone over every component of `m` from the common apex `q`.
pub fn cone_complex(d: &GridDomain, m: &BoundarySystem, q: P3) -> FaceComplex {
    let tris: Vec<Triangle> = m.components.iter().flat_map(|l| cone_triangles(q, l.vertices())).collect();
    rasterize_triangles(d, &tris)
}

/// Flat disk spanning the unit circle with the faces near the center removed.
pub fn punctured_disk(d: &GridDomain, m: &BoundarySystem) -> FaceComplex {
    let mut x = cone_complex(d, m, [0.0; 3]);
    x.retain(|f| {
        let p = f.center(d);
        p[0].abs() > 0.2 || p[1].abs() > 0.2 || p[2].abs() > 0.5 * d.h
    });
    x
}

/// Möbius boundary, its domain at resolution `h`, and the rasterized band.
pub fn moebius_fixture(h: f64) -> (BoundarySystem, FaceComplex) {
    let (b, tris) = moebius(64, 0.4);
    let m = BoundarySystem::new(vec![b]).expect("one loop");
    let d = domain_for(&m, h, 6.0);
    let x = rasterize_triangles(&d, &tris);
    (m, x)
}

/// Tentacled disk: the flat unit disk plus a vertical fin of `rows × cols`
/// faces rising from it. Returns the boundary, the clean disk and the
/// tentacled complex. The fin area is `rows·cols·h²`.
pub fn tentacled_disk(h: f64, rows: usize, cols: usize) -> Result<(BoundarySystem, FaceComplex, FaceComplex)> {
    let m = unit_circle();
    let height = rows as f64 * h;
    let d = GridDomain::around([-1.0, -1.0, 0.0], [1.0, 1.0, height], h, 6.0 * h)?;
    let clean = cone_complex(&d, &m, [0.0; 3]);
    let base = d.cube_of([0.25 + 0.5 * h, -0.5 * cols as f64 * h + 0.5 * h, 0.5 * h]);
    let mut hairy = clean.clone();
    for r in 0..rows as i32 {
        for c in 0..cols as i32 {
            hairy.insert(Face::new(0, [base[0] as i32, base[1] as i32 + c, base[2] as i32 + r]))?;
        }
    }
    Ok((m, clean, hairy))
}

/// Tentacle with area `eps` at resolution `h`: a fin 8 faces wide.
pub fn tentacle_for_mass(h: f64, eps: f64) -> Result<(BoundarySystem, FaceComplex, FaceComplex)> {
    let faces = (eps / (h * h)).round() as usize;
    let cols = 8;
    tentacled_disk(h, faces.div_ceil(cols), cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::linking_number;

    #[test]
    fn link_fixtures() {
        let (a, b) = hopf();
        assert_eq!(linking_number(&a, &b).unwrap().abs(), 1);
        let (a, b) = split_pair();
        assert_eq!(linking_number(&a, &b).unwrap(), 0);
        let (a, b) = torus_link_24(64);
        assert_eq!(linking_number(&a, &b).unwrap().abs(), 2);
    }

    #[test]
    fn tentacle_has_requested_mass() {
        let h = 1.0 / 16.0;
        let (_, clean, hairy) = tentacle_for_mass(h, 0.5).unwrap();
        assert!((hairy.area() - clean.area() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn puncture_removes_center_faces() {
        let m = unit_circle();
        let d = domain_for(&m, 1.0 / 16.0, 6.0);
        let full = cone_complex(&d, &m, [0.0; 3]);
        let p = punctured_disk(&d, &m);
        assert!(p.len() < full.len());
    }
}
