//! Quadrature realization of the film chain attached to a candidate surface.

use serde::{Deserialize, Serialize};

use super::cells::gauss_legendre;
use super::{boundary, JetChain};
use crate::error::{Error, Result};
use crate::exterior::KVector;
use crate::geometry::{lerp, sub, P3};
use crate::grid::FaceComplex;
use crate::linking::BoundarySystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilmChain {
    /// Positive Dirac 3-chain: one node per face centroid, weighted by face area.
    pub j: JetChain,
    /// Gauss quadrature 1-chain of the boundary polygons.
    pub m_tilde: JetChain,
    /// `E_Y M̃` with `Y` interpolated linearly along each segment.
    pub ey_m: JetChain,
    /// `S_X = ∂J_X + E_Y M̃`.
    pub s: JetChain,
}

/// Quadrature 1-chain of every boundary segment with `q` Gauss nodes.
pub fn boundary_quadrature(m: &BoundarySystem, q: usize) -> Result<JetChain> {
    let (nodes, weights) = gauss_legendre(q.max(1));
    let mut elems = Vec::new();
    for l in &m.components {
        for (a, b) in l.segments() {
            let t = sub(b, a);
            for (s, w) in nodes.iter().zip(&weights) {
                let p = lerp(a, b, *s);
                elems.push((p.to_vec(), KVector::vector(&t).scale(*w), vec![]));
            }
        }
    }
    JetChain::from_basis_elements(3, 1, elems)
}

/// Build `(J_X, S_X)` for a spanning complex. `y[i][v]` is the unit normal at
/// vertex `v` of component `i`; `q` is the number of Gauss nodes per segment.
pub fn film_chain_quadrature(x: &FaceComplex, m: &BoundarySystem, y: &[Vec<P3>], q: usize) -> Result<FilmChain> {
    if x.is_empty() {
        return Err(Error::Empty("face complex"));
    }
    if y.len() != m.len() {
        return Err(Error::DimensionMismatch(y.len(), m.len()));
    }
    for (l, yl) in m.components.iter().zip(y) {
        if yl.len() != l.len() {
            return Err(Error::DimensionMismatch(yl.len(), l.len()));
        }
    }
    let d = &x.domain;
    let vol = KVector::basis(3, &[1, 2, 3])?;
    let j =
        JetChain::from_basis_elements(3, 3, x.iter().map(|f| (f.center(d).to_vec(), vol.scale(d.h * d.h), vec![])))?;
    let m_tilde = boundary_quadrature(m, q)?;
    let (nodes, weights) = gauss_legendre(q.max(1));
    let mut elems = Vec::new();
    for (l, yl) in m.components.iter().zip(y) {
        let nv = l.len();
        for (i, (a, b)) in l.segments().enumerate() {
            let t = KVector::vector(&sub(b, a));
            for (s, w) in nodes.iter().zip(&weights) {
                let p = lerp(a, b, *s);
                let yv = lerp(yl[i], yl[(i + 1) % nv], *s);
                elems.push((p.to_vec(), KVector::vector(&yv).wedge(&t)?.scale(*w), vec![]));
            }
        }
    }
    let ey_m = JetChain::from_basis_elements(3, 2, elems)?;
    let s = boundary(&j)?.add(&ey_m)?;
    Ok(FilmChain { j, m_tilde, ey_m, s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::forms::{Poly, PolyForm};
    use crate::chains::{extrude, pair, VectorField};
    use crate::constructions::{cone_set, ConeBase};
    use crate::grid::{Face, GridDomain};
    use crate::linking::circle;
    use nalgebra::DMatrix;

    fn disk() -> (FaceComplex, BoundarySystem, Vec<Vec<P3>>) {
        let l = circle([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, 64).unwrap();
        let y = vec![l.vertices().to_vec()];
        let m = BoundarySystem::new(vec![l]).unwrap();
        let d = GridDomain::around([-1.0; 3], [1.0; 3], 0.125, 0.25).unwrap();
        let cone =
            cone_set(&ConeBase::Circle { center: [0.0; 3], normal: [0.0, 0.0, 1.0], radius: 1.0 }, [0.0; 3], 1.0)
                .unwrap();
        (cone.rasterize(&d), m, y)
    }

    fn quadratic() -> Poly {
        let mut f = Poly::constant(3, 0.5);
        f.add_term(vec![2, 0, 0], 1.0);
        f.add_term(vec![0, 1, 1], -0.7);
        f
    }

    #[test]
    fn volume_pairing_is_area() {
        let (x, m, y) = disk();
        let film = film_chain_quadrature(&x, &m, &y, 3).unwrap();
        let mut dv = PolyForm::zero(3, 3);
        dv.set(&[1, 2, 3], Poly::constant(3, 1.0)).unwrap();
        assert!((pair(&film.j, &dv).unwrap() - x.area()).abs() < 1e-12);
    }

    #[test]
    fn one_face_is_single_node() {
        let d = GridDomain::new([0.0; 3], 0.25, [4, 4, 4]).unwrap();
        let f = Face::new(2, [1, 2, 1]);
        let x = FaceComplex::from_faces(d.clone(), [f]).unwrap();
        let l = circle([0.5; 3], [0.0, 0.0, 1.0], 0.1, 8).unwrap();
        let y = vec![vec![[1.0, 0.0, 0.0]; 8]];
        let m = BoundarySystem::new(vec![l]).unwrap();
        let film = film_chain_quadrature(&x, &m, &y, 2).unwrap();
        let mut w = PolyForm::zero(3, 3);
        w.set(&[1, 2, 3], quadratic()).unwrap();
        let c = f.center(&d);
        assert!((pair(&film.j, &w).unwrap() - 0.0625 * quadratic().eval(&c)).abs() < 1e-14);
    }

    #[test]
    fn film_boundary_is_prederived_boundary_curve() {
        let (x, m, y) = disk();
        let film = film_chain_quadrature(&x, &m, &y, 3).unwrap();
        // the vertex normals are the radial field restricted to the circle
        let yf = VectorField::Affine { a: DMatrix::from_diagonal_element(3, 3, 1.0), b: vec![0.0; 3] };
        let p_y = extrude(&yf, &boundary(&film.m_tilde).unwrap())
            .unwrap()
            .add(&boundary(&extrude(&yf, &film.m_tilde).unwrap()).unwrap())
            .unwrap();
        let ds = boundary(&film.s).unwrap();
        for (i, idx) in [[1usize], [2], [3]].iter().enumerate() {
            let mut w = PolyForm::zero(3, 1);
            let mut f = quadratic();
            f.add_term(vec![0, 0, 1], i as f64);
            w.set(idx, f).unwrap();
            let lhs = pair(&ds, &w).unwrap();
            let rhs = pair(&p_y, &w).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn empty_complex_is_rejected() {
        let (x, m, y) = disk();
        let e = FaceComplex::new(x.domain.clone());
        assert!(film_chain_quadrature(&e, &m, &y, 2).is_err());
    }
}
