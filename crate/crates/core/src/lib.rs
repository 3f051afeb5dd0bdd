pub mod chains;
pub mod constructions;
pub mod error;
pub mod exterior;
pub mod fixtures;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod lattice;
pub mod linking;
pub mod measure;
pub mod minimizer;
pub mod norms;
pub mod spanning;

pub use chains::forms::{FormBounds, Poly, PolyForm, TestForm};
pub use chains::{JetChain, JetElement, VectorField};
pub use error::{Error, Result};
pub use exterior::{KVector, MassInterval};
pub use grid::{Face, FaceComplex, GridDomain};
pub use linking::{BoundarySystem, Loop};
pub use measure::{DensityTable, Region};
pub use minimizer::{MinimizeOptions, MinimizeOutput, MoveKind, SearchOptions};
pub use spanning::{CertifyOptions, SpanStatus, SpanningVerdict};
