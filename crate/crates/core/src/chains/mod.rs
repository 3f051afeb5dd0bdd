//! Finite differential chains: Dirac chains decorated with prederivative
//! directions, and the operator algebra acting on them.
//!
//! An element `(p; α; [i₁..i_j])` stands for `P_{e_{i_j}} ⋯ P_{e_{i₁}} (p; α)`.
//! Direction vectors are expanded in the coordinate basis on construction, so
//! every identity that holds by linearity in the directions holds structurally.

pub mod cells;

pub mod film;

pub mod forms;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::KVector;
use forms::{Poly, TestForm};

const DROP_REL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetElement {
    pub p: Vec<f64>,
    pub alpha: KVector,
    /// Sorted 1-based basis directions.
    pub dirs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
struct ElemKey {
    p: Vec<f64>,
    dirs: Vec<usize>,
}

impl Eq for ElemKey {}

impl Ord for ElemKey {
    fn cmp(&self, o: &Self) -> Ordering {
        for (a, b) in self.p.iter().zip(&o.p) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                c => return c,
            }
        }
        self.dirs.cmp(&o.dirs)
    }
}

impl PartialOrd for ElemKey {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Accumulates elements and produces a canonical [`JetChain`].
struct Builder {
    n: usize,
    k: usize,
    map: BTreeMap<ElemKey, KVector>,
}

impl Builder {
    fn new(n: usize, k: usize) -> Builder {
        Builder { n, k, map: BTreeMap::new() }
    }

    fn push(&mut self, p: &[f64], alpha: KVector, mut dirs: Vec<usize>) {
        if alpha.is_zero() {
            return;
        }
        debug_assert_eq!((alpha.n(), alpha.k()), (self.n, self.k));
        dirs.sort_unstable();
        // -0.0 and 0.0 must merge
        let p = p.iter().map(|&x| if x == 0.0 { 0.0 } else { x }).collect();
        let key = ElemKey { p, dirs };
        match self.map.get_mut(&key) {
            Some(a) => *a = a.add(&alpha).expect("matching grade"),
            None => {
                self.map.insert(key, alpha);
            }
        }
    }

    fn finish(self) -> JetChain {
        let max = self.map.values().fold(0.0f64, |m, a| m.max(a.max_abs()));
        let cut = max * DROP_REL;
        let elements = self
            .map
            .into_iter()
            .filter(|(_, a)| !a.is_zero() && a.max_abs() >= cut)
            .map(|(key, alpha)| JetElement { p: key.p, alpha, dirs: key.dirs })
            .collect();
        JetChain { n: self.n, k: self.k, elements }
    }
}

/// Canonical finite jet chain of grade `k` in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetChain {
    n: usize,
    k: usize,
    elements: Vec<JetElement>,
}

impl JetChain {
    pub fn zero(n: usize, k: usize) -> JetChain {
        JetChain { n, k, elements: Vec::new() }
    }

    pub fn dirac(p: &[f64], alpha: KVector) -> Result<JetChain> {
        if p.len() != alpha.n() {
            return Err(Error::DimensionMismatch(p.len(), alpha.n()));
        }
        let mut b = Builder::new(alpha.n(), alpha.k());
        b.push(p, alpha, vec![]);
        Ok(b.finish())
    }

    /// Build from elements with arbitrary direction vectors, expanding each
    /// direction in the coordinate basis.
    pub fn from_elements<I>(n: usize, k: usize, elems: I) -> Result<JetChain>
    where
        I: IntoIterator<Item = (Vec<f64>, KVector, Vec<Vec<f64>>)>,
    {
        let mut b = Builder::new(n, k);
        for (p, alpha, dirs) in elems {
            check_elem(n, k, &p, &alpha)?;
            for d in &dirs {
                if d.len() != n {
                    return Err(Error::DimensionMismatch(d.len(), n));
                }
            }
            for (c, idx) in expand_dirs(&dirs) {
                b.push(&p, alpha.scale(c), idx);
            }
        }
        Ok(b.finish())
    }

    /// Build from elements whose directions are already basis indices.
    pub fn from_basis_elements<I>(n: usize, k: usize, elems: I) -> Result<JetChain>
    where
        I: IntoIterator<Item = (Vec<f64>, KVector, Vec<usize>)>,
    {
        let mut b = Builder::new(n, k);
        for (p, alpha, dirs) in elems {
            check_elem(n, k, &p, &alpha)?;
            if dirs.iter().any(|&d| d == 0 || d > n) {
                return Err(Error::InvalidIndex(dirs, n));
            }
            b.push(&p, alpha, dirs);
        }
        Ok(b.finish())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn elements(&self) -> &[JetElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.elements.is_empty()
    }

    /// Largest number of derivative directions on any element.
    pub fn order(&self) -> usize {
        self.elements.iter().map(|e| e.dirs.len()).max().unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.elements.iter().fold(0.0, |m, e| m.max(e.alpha.max_abs()))
    }

    fn rebuild<F>(&self, n: usize, k: usize, mut f: F) -> Result<JetChain>
    where
        F: FnMut(&JetElement, &mut Builder) -> Result<()>,
    {
        let mut b = Builder::new(n, k);
        for e in &self.elements {
            f(e, &mut b)?;
        }
        Ok(b.finish())
    }

    fn check_same(&self, o: &JetChain) -> Result<()> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch(self.n, o.n));
        }
        if self.k != o.k {
            return Err(Error::GradeMismatch(self.k, o.k));
        }
        Ok(())
    }

    pub fn axpy(&self, a: f64, o: &JetChain) -> Result<JetChain> {
        self.check_same(o)?;
        let mut b = Builder::new(self.n, self.k);
        for e in &self.elements {
            b.push(&e.p, e.alpha.clone(), e.dirs.clone());
        }
        for e in &o.elements {
            b.push(&e.p, e.alpha.scale(a), e.dirs.clone());
        }
        Ok(b.finish())
    }

    pub fn add(&self, o: &JetChain) -> Result<JetChain> {
        self.axpy(1.0, o)
    }

    pub fn sub(&self, o: &JetChain) -> Result<JetChain> {
        self.axpy(-1.0, o)
    }

    pub fn scale(&self, a: f64) -> JetChain {
        self.rebuild(self.n, self.k, |e, b| {
            b.push(&e.p, e.alpha.scale(a), e.dirs.clone());
            Ok(())
        })
        .expect("scaling cannot fail")
    }

    /// Structural equality up to a relative coefficient tolerance.
    pub fn approx_eq(&self, o: &JetChain, rel: f64) -> bool {
        match self.sub(o) {
            Ok(d) => d.max_abs() <= rel * self.max_abs().max(o.max_abs()).max(f64::MIN_POSITIVE),
            Err(_) => false,
        }
    }

    /// Underlying point set.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = self.elements.iter().map(|e| e.p.clone()).collect();
        pts.dedup();
        pts
    }
}

fn check_elem(n: usize, k: usize, p: &[f64], alpha: &KVector) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch(p.len(), n));
    }
    if alpha.n() != n {
        return Err(Error::DimensionMismatch(alpha.n(), n));
    }
    if alpha.k() != k {
        return Err(Error::GradeMismatch(alpha.k(), k));
    }
    Ok(())
}

/// Multilinear expansion of a list of direction vectors into basis index
/// lists with coefficients.
fn expand_dirs(dirs: &[Vec<f64>]) -> Vec<(f64, Vec<usize>)> {
    let mut acc = vec![(1.0, Vec::new())];
    for d in dirs {
        let mut next = Vec::new();
        for (c, idx) in &acc {
            for (i, &x) in d.iter().enumerate() {
                if x != 0.0 {
                    let mut j = idx.clone();
                    j.push(i + 1);
                    next.push((c * x, j));
                }
            }
        }
        acc = next;
    }
    acc
}

/// Vector fields admitted by extrusion and retraction.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorField {
    Constant(Vec<f64>),
    /// `X(p) = A p + b`.
    Affine {
        a: DMatrix<f64>,
        b: Vec<f64>,
    },
    /// Polynomial components; only order-0 chains are supported unless affine.
    Poly(Vec<Poly>),
}

impl VectorField {
    pub fn n(&self) -> usize {
        match self {
            VectorField::Constant(v) => v.len(),
            VectorField::Affine { b, .. } => b.len(),
            VectorField::Poly(p) => p.len(),
        }
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        match self {
            VectorField::Constant(v) => v.clone(),
            VectorField::Affine { a, b } => {
                (0..b.len()).map(|i| b[i] + (0..p.len()).map(|j| a[(i, j)] * p[j]).sum::<f64>()).collect()
            }
            VectorField::Poly(c) => c.iter().map(|q| q.eval(p)).collect(),
        }
    }

    /// `DX(e_j)` when the field is affine (zero for constant fields).
    fn derivative_column(&self, j: usize) -> Option<Vec<f64>> {
        match self {
            VectorField::Constant(v) => Some(vec![0.0; v.len()]),
            VectorField::Affine { a, .. } => Some(a.column(j - 1).iter().copied().collect()),
            VectorField::Poly(c) => {
                if c.iter().all(|q| q.degree() <= 1) {
                    Some(c.iter().map(|q| q.deriv(j - 1).eval(&vec![0.0; q.n])).collect())
                } else {
                    None
                }
            }
        }
    }

    /// Component polynomials, for pairing-level checks against forms.
    pub fn to_polys(&self) -> Vec<Poly> {
        let n = self.n();
        match self {
            VectorField::Constant(v) => v.iter().map(|&c| Poly::constant(n, c)).collect(),
            VectorField::Affine { a, b } => (0..n)
                .map(|i| {
                    let mut p = Poly::constant(n, b[i]);
                    for j in 0..n {
                        p = p.add(&Poly::coord(n, j).scale(a[(i, j)]));
                    }
                    p
                })
                .collect(),
            VectorField::Poly(c) => c.clone(),
        }
    }
}

fn without(dirs: &[usize], pos: usize) -> Vec<usize> {
    let mut d = dirs.to_vec();
    d.remove(pos);
    d
}

/// Shared Leibniz expansion for extrusion/retraction by a field that is
/// affine on jets: `op_{X}(p;α;D) = (p; op_{X(p)} α; D) + Σ_{u∈D} (p; op_{DX(u)} α; D∖u)`.
fn leibniz_field<F>(x: &VectorField, j: &JetChain, k_out: usize, op: F) -> Result<JetChain>
where
    F: Fn(&[f64], &KVector) -> Result<KVector>,
{
    if x.n() != j.n {
        return Err(Error::DimensionMismatch(x.n(), j.n));
    }
    j.rebuild(j.n, k_out, |e, b| {
        b.push(&e.p, op(&x.eval(&e.p), &e.alpha)?, e.dirs.clone());
        for (pos, &u) in e.dirs.iter().enumerate() {
            let du = x.derivative_column(u).ok_or(Error::UnsupportedFieldOrder)?;
            if du.iter().any(|&c| c != 0.0) {
                b.push(&e.p, op(&du, &e.alpha)?, without(&e.dirs, pos));
            }
        }
        Ok(())
    })
}

/// Extrusion `E_X(p;α) = (p; X(p)∧α)`.
pub fn extrude(x: &VectorField, j: &JetChain) -> Result<JetChain> {
    if j.k + 1 > j.n {
        return Err(Error::GradeOverflow { k: j.k, l: 1, n: j.n });
    }
    leibniz_field(x, j, j.k + 1, |v, a| KVector::vector(v).wedge(a))
}

/// Retraction `E†_X`, termwise on basis simples.
pub fn retract(x: &VectorField, j: &JetChain) -> Result<JetChain> {
    if j.k == 0 {
        return Err(Error::GradeUnderflow);
    }
    leibniz_field(x, j, j.k - 1, |v, a| a.interior(v))
}

/// Prederivative `P_v`: appends `v` to the directions of every element.
pub fn prederive(v: &[f64], j: &JetChain) -> Result<JetChain> {
    if v.len() != j.n {
        return Err(Error::DimensionMismatch(v.len(), j.n));
    }
    j.rebuild(j.n, j.k, |e, b| {
        for (i, &c) in v.iter().enumerate() {
            if c != 0.0 {
                let mut d = e.dirs.clone();
                d.push(i + 1);
                b.push(&e.p, e.alpha.scale(c), d);
            }
        }
        Ok(())
    })
}

/// Boundary `∂ = Σ_i P_{e_i} E†_{e_i}`.
pub fn boundary(j: &JetChain) -> Result<JetChain> {
    if j.k == 0 {
        return Err(Error::GradeUnderflow);
    }
    let n = j.n;
    j.rebuild(n, j.k - 1, |e, b| {
        for i in 1..=n {
            let mut ei = vec![0.0; n];
            ei[i - 1] = 1.0;
            let r = e.alpha.interior(&ei)?;
            if !r.is_zero() {
                let mut d = e.dirs.clone();
                d.push(i);
                b.push(&e.p, r, d);
            }
        }
        Ok(())
    })
}

/// Multiplication by a polynomial function, acting on jets by Leibniz:
/// `f·(p;α;D) = Σ_{S⊆D} ∂_S f(p) (p; α; D∖S)`.
pub fn multiply(f: &Poly, j: &JetChain) -> Result<JetChain> {
    if f.n != j.n {
        return Err(Error::DimensionMismatch(f.n, j.n));
    }
    j.rebuild(j.n, j.k, |e, b| {
        let m = e.dirs.len();
        for mask in 0u32..(1 << m) {
            let taken: Vec<usize> = (0..m).filter(|t| mask >> t & 1 == 1).map(|t| e.dirs[t]).collect();
            let rest: Vec<usize> = (0..m).filter(|t| mask >> t & 1 == 0).map(|t| e.dirs[t]).collect();
            let c = f.deriv_multi(&taken).eval(&e.p);
            if c != 0.0 {
                b.push(&e.p, e.alpha.scale(c), rest);
            }
        }
        Ok(())
    })
}

/// Differentiable maps admitted by pushforward.
pub trait ChainMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, p: &[f64]) -> Vec<f64>;
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64>;
    fn is_affine(&self) -> bool;
}

/// `F(p) = L p + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub l: DMatrix<f64>,
    pub c: Vec<f64>,
}

impl ChainMap for AffineMap {
    fn dim_in(&self) -> usize {
        self.l.ncols()
    }
    fn dim_out(&self) -> usize {
        self.l.nrows()
    }
    fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.l.nrows()).map(|i| self.c[i] + (0..p.len()).map(|j| self.l[(i, j)] * p[j]).sum::<f64>()).collect()
    }
    fn jacobian(&self, _p: &[f64]) -> DMatrix<f64> {
        self.l.clone()
    }
    fn is_affine(&self) -> bool {
        true
    }
}

/// Polynomial map given by its components.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    pub comps: Vec<Poly>,
}

impl ChainMap for PolyMap {
    fn dim_in(&self) -> usize {
        self.comps.first().map(|p| p.n).unwrap_or(0)
    }
    fn dim_out(&self) -> usize {
        self.comps.len()
    }
    fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let m = self.dim_in();
        DMatrix::from_fn(self.comps.len(), m, |i, j| self.comps[i].deriv(j).eval(p))
    }
    fn is_affine(&self) -> bool {
        self.comps.iter().all(|c| c.degree() <= 1)
    }
}

/// Pushforward `F_*(p;α) = (F(p); Λ^k DF_p α)`; for affine `F` directions are
/// carried along as `DF(u)`.
pub fn pushforward(f: &dyn ChainMap, j: &JetChain) -> Result<JetChain> {
    if f.dim_in() != j.n {
        return Err(Error::DimensionMismatch(f.dim_in(), j.n));
    }
    if j.order() > 0 && !f.is_affine() {
        return Err(Error::UnsupportedFieldOrder);
    }
    let m = f.dim_out();
    if j.k > m {
        return Err(Error::GradeOverflow { k: j.k, l: 0, n: m });
    }
    j.rebuild(m, j.k, |e, b| {
        let l = f.jacobian(&e.p);
        let q = f.apply(&e.p);
        let a = e.alpha.linear_map(&l)?;
        if a.is_zero() {
            return Ok(());
        }
        let dirs: Vec<Vec<f64>> = e.dirs.iter().map(|&d| l.column(d - 1).iter().copied().collect()).collect();
        for (c, idx) in expand_dirs(&dirs) {
            b.push(&q, a.scale(c), idx);
        }
        Ok(())
    })
}

/// Cartesian wedge `(p;α) ×̂ (q;β) = ((p,q); ι₁α ∧ ι₂β)` of order-0 chains.
pub fn cartesian_wedge(a: &JetChain, bch: &JetChain) -> Result<JetChain> {
    if a.order() > 0 {
        return Err(Error::OrderTooHigh(a.order()));
    }
    if bch.order() > 0 {
        return Err(Error::OrderTooHigh(bch.order()));
    }
    let n = a.n + bch.n;
    let mut out = Builder::new(n, a.k + bch.k);
    for x in &a.elements {
        let ax = x.alpha.embed(0, n)?;
        for y in &bch.elements {
            let by = y.alpha.embed(a.n, n)?;
            let mut p = x.p.clone();
            p.extend_from_slice(&y.p);
            out.push(&p, ax.wedge(&by)?, vec![]);
        }
    }
    Ok(out.finish())
}

/// Pairing `⟨J, ω⟩`: for each element the iterated directional derivative
/// of `p ↦ ω(p)(α)` along its directions.
pub fn pair(j: &JetChain, w: &dyn TestForm) -> Result<f64> {
    if w.n() != j.n {
        return Err(Error::DimensionMismatch(w.n(), j.n));
    }
    if w.degree() != j.k {
        return Err(Error::GradeMismatch(w.degree(), j.k));
    }
    if let Some(mo) = w.max_order() {
        if j.order() > mo {
            return Err(Error::InsufficientFormOrder { have: mo, need: j.order() });
        }
    }
    let mut s = 0.0;
    for e in &j.elements {
        s += w.eval(&e.p, &e.dirs)?.inner(&e.alpha)?;
    }
    Ok(s)
}

/// Both sides of Stokes' theorem `⟨∂J, ω⟩ = ⟨J, dω⟩` for a polynomial form.
pub fn stokes_check(j: &JetChain, w: &forms::PolyForm) -> Result<(f64, f64)> {
    let lhs = pair(&boundary(j)?, w)?;
    let rhs = pair(j, &w.d()?)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::forms::{PolyForm, WaveForm};
    use super::*;

    fn e(n: usize, idx: &[usize]) -> KVector {
        KVector::basis(n, idx).unwrap()
    }

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i - 1] = 1.0;
        v
    }

    #[test]
    fn extrusion_examples() {
        let p = [0.2, 0.1, -0.3];
        let j = JetChain::dirac(&p, e(3, &[1, 2])).unwrap();
        let x = VectorField::Constant(unit(3, 3));
        assert_eq!(extrude(&x, &j).unwrap(), JetChain::dirac(&p, e(3, &[1, 2, 3])).unwrap());
        let j1 = JetChain::dirac(&p, e(3, &[1])).unwrap();
        let x1 = VectorField::Constant(vec![0.3, -1.0, 2.0]);
        assert!(extrude(&x1, &extrude(&x1, &j1).unwrap()).unwrap().is_zero());
        assert!(extrude(&VectorField::Constant(unit(3, 1)), &j1).unwrap().is_zero());
    }

    #[test]
    fn retraction_examples() {
        let p = [1.0, 2.0, 3.0];
        let j = JetChain::dirac(&p, e(3, &[1, 2])).unwrap();
        assert_eq!(retract(&VectorField::Constant(unit(3, 1)), &j).unwrap(), JetChain::dirac(&p, e(3, &[2])).unwrap());
        assert!(retract(&VectorField::Constant(unit(3, 3)), &j).unwrap().is_zero());
        let j0 = JetChain::dirac(&p, KVector::scalar(3, 1.0)).unwrap();
        assert_eq!(retract(&VectorField::Constant(unit(3, 1)), &j0), Err(Error::GradeUnderflow));
    }

    #[test]
    fn boundary_of_grade_one_element() {
        let p = [0.5, -0.5];
        let j = JetChain::dirac(&p, e(2, &[1])).unwrap();
        let want = JetChain::from_basis_elements(2, 0, [(p.to_vec(), KVector::scalar(2, 1.0), vec![1])]).unwrap();
        assert_eq!(boundary(&j).unwrap(), want);
        let j0 = JetChain::dirac(&p, KVector::scalar(2, 1.0)).unwrap();
        assert!(boundary(&j0).is_err());
    }

    #[test]
    fn prederivatives_commute_structurally() {
        let j = JetChain::dirac(&[0.0, 1.0, 2.0], e(3, &[2, 3])).unwrap();
        let u = [0.3, -0.2, 1.0];
        let v = [1.5, 0.0, -0.7];
        let a = prederive(&u, &prederive(&v, &j).unwrap()).unwrap();
        let b = prederive(&v, &prederive(&u, &j).unwrap()).unwrap();
        assert!(a.approx_eq(&b, 1e-15));
        let single = prederive(&v, &j).unwrap();
        let direct = JetChain::from_elements(3, 2, [(vec![0.0, 1.0, 2.0], e(3, &[2, 3]), vec![v.to_vec()])]).unwrap();
        assert_eq!(single, direct);
    }

    #[test]
    fn pushforward_examples() {
        let j = JetChain::dirac(&[0.5, 1.0], e(2, &[1, 2])).unwrap();
        let id = AffineMap { l: DMatrix::identity(2, 2), c: vec![0.0, 0.0] };
        assert_eq!(pushforward(&id, &j).unwrap(), j);
        let two = AffineMap { l: DMatrix::identity(2, 2) * 2.0, c: vec![0.0, 0.0] };
        assert_eq!(pushforward(&two, &j).unwrap(), JetChain::dirac(&[1.0, 2.0], e(2, &[1, 2]).scale(4.0)).unwrap());
    }

    #[test]
    fn square_map_kills_two_point_segment_quadrature() {
        // two-point Gauss rule on (−1, 1): nodes ±1/√3, unit weights
        let s = 1.0 / 3f64.sqrt();
        let j = JetChain::from_basis_elements(1, 1, [(vec![-s], e(1, &[1]), vec![]), (vec![s], e(1, &[1]), vec![])])
            .unwrap();
        let x = Poly::coord(1, 0);
        let f = PolyMap { comps: vec![x.mul(&x)] };
        let pushed = pushforward(&f, &j).unwrap();
        assert!(pushed.is_zero());
        let mut w = PolyForm::zero(1, 1);
        w.set(&[1], x.pow(3).add(&Poly::constant(1, 2.0))).unwrap();
        let pulled = w.pullback(&f.comps).unwrap();
        assert!(pair(&j, &pulled).unwrap().abs() < 1e-14);
        assert_eq!(pair(&pushed, &w).unwrap(), 0.0);
    }

    #[test]
    fn cartesian_wedge_examples() {
        let p = JetChain::dirac(&[1.0], KVector::scalar(1, 1.0)).unwrap();
        let q = JetChain::dirac(&[2.0, 3.0], KVector::scalar(2, 1.0)).unwrap();
        assert_eq!(
            cartesian_wedge(&p, &q).unwrap(),
            JetChain::dirac(&[1.0, 2.0, 3.0], KVector::scalar(3, 1.0)).unwrap()
        );
        let p1 = JetChain::dirac(&[1.0, 0.0], e(2, &[1])).unwrap();
        let q1 = JetChain::dirac(&[2.0, 3.0], e(2, &[1])).unwrap();
        assert_eq!(cartesian_wedge(&p1, &q1).unwrap(), JetChain::dirac(&[1.0, 0.0, 2.0, 3.0], e(4, &[1, 3])).unwrap());
        assert!(cartesian_wedge(&prederive(&[1.0, 0.0], &p1).unwrap(), &q1).is_err());
    }

    #[test]
    fn pairing_order_one_is_directional_derivative() {
        let w = WaveForm { xi: vec![0.7, -1.1], phase: 0.3, covector: KVector::vector(&[1.0, 0.5]), scale: 1.0 };
        let p = [0.2, 0.4];
        let v = [0.6, -0.8];
        let j = JetChain::from_elements(2, 1, [(p.to_vec(), e(2, &[1]), vec![v.to_vec()])]).unwrap();
        let t = 1e-6;
        let f = |s: f64| {
            let q = [p[0] + s * v[0], p[1] + s * v[1]];
            pair(&JetChain::dirac(&q, e(2, &[1])).unwrap(), &w).unwrap()
        };
        let fd = (f(t) - f(-t)) / (2.0 * t);
        assert!((pair(&j, &w).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn affine_extrusion_is_dual_to_interior_product() {
        let a = DMatrix::from_row_slice(3, 3, &[0.2, -1.0, 0.5, 0.3, 0.0, 1.2, -0.7, 0.4, 0.1]);
        let x = VectorField::Affine { a, b: vec![0.1, 0.2, -0.3] };
        let j = JetChain::from_elements(
            3,
            1,
            [(vec![0.3, -0.2, 0.5], e(3, &[2]), vec![vec![1.0, 0.5, 0.0], vec![0.0, -1.0, 2.0]])],
        )
        .unwrap();
        let (x0, x1, x2) = (Poly::coord(3, 0), Poly::coord(3, 1), Poly::coord(3, 2));
        let mut w = PolyForm::zero(3, 2);
        w.set(&[1, 2], x0.mul(&x1).mul(&x2)).unwrap();
        w.set(&[1, 3], x1.pow(3)).unwrap();
        w.set(&[2, 3], x0.pow(2).mul(&x2)).unwrap();
        let lhs = pair(&extrude(&x, &j).unwrap(), &w).unwrap();
        let rhs = pair(&j, &w.interior(&x.to_polys()).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        let j2 =
            JetChain::from_elements(3, 2, [(vec![0.3, -0.2, 0.5], e(3, &[1, 2]), vec![vec![1.0, 0.5, 0.0]])]).unwrap();
        let mut w1 = PolyForm::zero(3, 1);
        w1.set(&[1], x0.mul(&x2)).unwrap();
        w1.set(&[3], x1.pow(2)).unwrap();
        let lhs = pair(&retract(&x, &j2).unwrap(), &w1).unwrap();
        let rhs = pair(&j2, &w1.wedge_flat(&x.to_polys()).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn non_affine_field_rejects_jets() {
        let x = VectorField::Poly(vec![Poly::coord(2, 0).pow(2), Poly::constant(2, 1.0)]);
        let j0 = JetChain::dirac(&[1.0, 2.0], e(2, &[1])).unwrap();
        assert!(extrude(&x, &j0).is_ok());
        let j1 = prederive(&[1.0, 0.0], &j0).unwrap();
        assert_eq!(extrude(&x, &j1), Err(Error::UnsupportedFieldOrder));
    }

    #[test]
    fn insufficient_form_order_is_an_error() {
        let w = super::forms::ClippedRadial { center: vec![0.0], offset: 0.5 };
        let j = prederive(&[1.0], &JetChain::dirac(&[0.0], KVector::scalar(1, 1.0)).unwrap()).unwrap();
        assert!(matches!(pair(&j, &w), Err(Error::InsufficientFormOrder { .. })));
    }

    #[test]
    fn serde_round_trip() {
        let j = JetChain::from_elements(2, 1, [(vec![0.1, 0.2], e(2, &[1]), vec![vec![1.0, 2.0]])]).unwrap();
        let s = serde_json::to_string(&j).unwrap();
        let back: JetChain = serde_json::from_str(&s).unwrap();
        assert_eq!(j, back);
    }
}
