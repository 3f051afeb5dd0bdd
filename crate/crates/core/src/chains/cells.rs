//! Oriented affine cells (simplices and axis boxes), their boundaries, the
//! affine cone operator, and Gauss quadrature chains that represent them.

use serde::{Deserialize, Serialize};

use super::forms::TestForm;
use super::{pair, prederive, JetChain};
use crate::error::{Error, Result};
use crate::exterior::KVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellShape {
    Simplex(Vec<Vec<f64>>),
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineCell {
    pub shape: CellShape,
    pub sign: f64,
}

const DEGENERATE_REL: f64 = 1e-12;

impl AffineCell {
    pub fn simplex(vertices: Vec<Vec<f64>>) -> Result<AffineCell> {
        let cell = AffineCell { shape: CellShape::Simplex(vertices), sign: 1.0 };
        let n = cell.n();
        if let CellShape::Simplex(v) = &cell.shape {
            if v.is_empty() || v.iter().any(|p| p.len() != n) || v.len() > n + 1 {
                return Err(Error::Precondition("simplex vertices".into()));
            }
        }
        if cell.is_degenerate() {
            return Err(Error::Precondition("simplex vertices are affinely dependent".into()));
        }
        Ok(cell)
    }

    pub fn axis_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<AffineCell> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Precondition("box corners must satisfy lo <= hi".into()));
        }
        Ok(AffineCell { shape: CellShape::Box { lo, hi }, sign: 1.0 })
    }

    pub fn negated(&self) -> AffineCell {
        AffineCell { shape: self.shape.clone(), sign: -self.sign }
    }

    pub fn n(&self) -> usize {
        match &self.shape {
            CellShape::Simplex(v) => v[0].len(),
            CellShape::Box { lo, .. } => lo.len(),
        }
    }

    pub fn k(&self) -> usize {
        match &self.shape {
            CellShape::Simplex(v) => v.len() - 1,
            CellShape::Box { lo, hi } => lo.iter().zip(hi).filter(|(a, b)| a < b).count(),
        }
    }

    fn box_axes(lo: &[f64], hi: &[f64]) -> Vec<usize> {
        (0..lo.len()).filter(|&i| lo[i] < hi[i]).collect()
    }

    /// Oriented k-vector spanned by the cell, scaled to k!·volume for
    /// simplices and to the volume for boxes.
    pub fn orientation(&self) -> KVector {
        let n = self.n();
        match &self.shape {
            CellShape::Simplex(v) => {
                let edges: Vec<Vec<f64>> =
                    v[1..].iter().map(|p| p.iter().zip(&v[0]).map(|(a, b)| a - b).collect()).collect();
                KVector::simple(n, &edges).expect("dimensions checked").scale(self.sign)
            }
            CellShape::Box { lo, hi } => {
                let axes = Self::box_axes(lo, hi);
                let vol: f64 = axes.iter().map(|&i| hi[i] - lo[i]).product();
                let idx: Vec<usize> = axes.iter().map(|i| i + 1).collect();
                KVector::basis(n, &idx).expect("valid axes").scale(self.sign * vol)
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match &self.shape {
            CellShape::Simplex(v) => {
                if v.len() == 1 {
                    return false;
                }
                let scale: f64 = v[1..]
                    .iter()
                    .map(|p| p.iter().zip(&v[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                    .product();
                self.orientation().norm() <= DEGENERATE_REL * scale
            }
            CellShape::Box { .. } => false,
        }
    }

    /// Oriented simplices whose sum is this cell (boxes use the Kuhn split).
    pub fn to_simplices(&self) -> Vec<AffineCell> {
        match &self.shape {
            CellShape::Simplex(_) => vec![self.clone()],
            CellShape::Box { lo, hi } => {
                let axes = Self::box_axes(lo, hi);
                let mut out = Vec::new();
                for (perm, sgn) in permutations(axes.len()) {
                    let mut verts = vec![lo.clone()];
                    let mut cur = lo.clone();
                    for &t in &perm {
                        let a = axes[t];
                        cur[a] = hi[a];
                        verts.push(cur.clone());
                    }
                    out.push(AffineCell { shape: CellShape::Simplex(verts), sign: self.sign * sgn });
                }
                out
            }
        }
    }

    /// Oriented geometric boundary.
    pub fn boundary(&self) -> Result<Vec<AffineCell>> {
        if self.k() == 0 {
            return Err(Error::GradeUnderflow);
        }
        match &self.shape {
            CellShape::Simplex(v) => Ok((0..v.len())
                .map(|i| {
                    let mut w = v.clone();
                    w.remove(i);
                    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                    AffineCell { shape: CellShape::Simplex(w), sign: self.sign * s }
                })
                .collect()),
            CellShape::Box { lo, hi } => {
                let axes = Self::box_axes(lo, hi);
                let mut out = Vec::new();
                for (t, &a) in axes.iter().enumerate() {
                    let s = if t % 2 == 0 { 1.0 } else { -1.0 };
                    let mut top_lo = lo.clone();
                    top_lo[a] = hi[a];
                    let mut bot_hi = hi.clone();
                    bot_hi[a] = lo[a];
                    out.push(AffineCell { shape: CellShape::Box { lo: top_lo, hi: hi.clone() }, sign: self.sign * s });
                    out.push(AffineCell { shape: CellShape::Box { lo: lo.clone(), hi: bot_hi }, sign: -self.sign * s });
                }
                Ok(out)
            }
        }
    }

    /// Gauss quadrature Dirac chain exact for polynomial integrands of the given degree.
    pub fn quadrature(&self, degree: usize) -> Result<JetChain> {
        let n = self.n();
        let k = self.k();
        let mut elems: Vec<(Vec<f64>, KVector, Vec<usize>)> = Vec::new();
        match &self.shape {
            CellShape::Simplex(v) => {
                let w = self.orientation();
                if k == 0 {
                    return JetChain::dirac(&v[0], KVector::scalar(n, self.sign));
                }
                let q = (degree + k).div_ceil(2).max(1);
                let (nodes, weights) = gauss_legendre(q);
                for idx in tensor_indices(q, k) {
                    let t: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
                    let mut wt: f64 = idx.iter().map(|&i| weights[i]).product();
                    let mut y = Vec::with_capacity(k);
                    let mut prod = 1.0;
                    for (i, ti) in t.iter().enumerate() {
                        prod *= ti;
                        y.push(prod);
                        wt *= ti.powi((k - 1 - i) as i32);
                    }
                    let mut x = v[0].clone();
                    for i in 0..k {
                        for c in 0..n {
                            x[c] += y[i] * (v[i + 1][c] - v[i][c]);
                        }
                    }
                    elems.push((x, w.scale(wt), vec![]));
                }
            }
            CellShape::Box { lo, hi } => {
                let axes = Self::box_axes(lo, hi);
                let orient = self.orientation();
                if k == 0 {
                    return JetChain::dirac(lo, KVector::scalar(n, self.sign));
                }
                let q = (degree + 1).div_ceil(2).max(1);
                let (nodes, weights) = gauss_legendre(q);
                for idx in tensor_indices(q, k) {
                    let mut x = lo.clone();
                    let mut wt = 1.0;
                    for (t, &a) in axes.iter().enumerate() {
                        x[a] = lo[a] + nodes[idx[t]] * (hi[a] - lo[a]);
                        wt *= weights[idx[t]];
                    }
                    elems.push((x, orient.scale(wt), vec![]));
                }
            }
        }
        JetChain::from_basis_elements(n, k, elems)
    }

    pub fn pair(&self, w: &dyn TestForm, degree: usize) -> Result<f64> {
        pair(&self.quadrature(degree)?, w)
    }
}

/// Finite formal sum of oriented cells of a common grade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellChain {
    pub n: usize,
    pub k: usize,
    pub cells: Vec<AffineCell>,
}

impl CellChain {
    pub fn new(n: usize, k: usize, cells: Vec<AffineCell>) -> Result<CellChain> {
        for c in &cells {
            if c.n() != n {
                return Err(Error::DimensionMismatch(c.n(), n));
            }
            if c.k() != k {
                return Err(Error::GradeMismatch(c.k(), k));
            }
        }
        Ok(CellChain { n, k, cells })
    }

    pub fn single(c: AffineCell) -> CellChain {
        CellChain { n: c.n(), k: c.k(), cells: vec![c] }
    }

    pub fn boundary(&self) -> Result<CellChain> {
        if self.k == 0 {
            return Err(Error::GradeUnderflow);
        }
        let mut cells = Vec::new();
        for c in &self.cells {
            cells.extend(c.boundary()?);
        }
        Ok(CellChain { n: self.n, k: self.k - 1, cells })
    }

    pub fn cone(&self, q: &[f64]) -> Result<CellChain> {
        let mut cells = Vec::new();
        for c in &self.cells {
            cells.extend(cone_join(c, q)?);
        }
        Ok(CellChain { n: self.n, k: self.k + 1, cells })
    }

    pub fn quadrature(&self, degree: usize) -> Result<JetChain> {
        let mut acc = JetChain::zero(self.n, self.k);
        for c in &self.cells {
            acc = acc.add(&c.quadrature(degree)?)?;
        }
        Ok(acc)
    }

    pub fn pair(&self, w: &dyn TestForm, degree: usize) -> Result<f64> {
        self.cells.iter().map(|c| c.pair(w, degree)).sum()
    }
}

/// Join of a cell with the apex `q`, oriented so that `κ∂ + ∂κ = Id` on
/// cells of grade ≥ 1. Degenerate joins are dropped.
pub fn cone_join(sigma: &AffineCell, q: &[f64]) -> Result<Vec<AffineCell>> {
    if q.len() != sigma.n() {
        return Err(Error::DimensionMismatch(q.len(), sigma.n()));
    }
    if sigma.k() + 1 > sigma.n() {
        return Err(Error::GradeOverflow { k: sigma.k(), l: 1, n: sigma.n() });
    }
    let mut out = Vec::new();
    for s in sigma.to_simplices() {
        if let CellShape::Simplex(v) = &s.shape {
            let mut w = vec![q.to_vec()];
            w.extend(v.iter().cloned());
            let c = AffineCell { shape: CellShape::Simplex(w), sign: s.sign };
            if !c.is_degenerate() {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Dipole of a cell in direction `v`: the quadrature chain with one
/// prederivative direction per node, pairing as `d/dt|₀ ∫_{σ+tv} ω`.
pub fn dipole_cell(sigma: &AffineCell, v: &[f64], degree: usize) -> Result<JetChain> {
    if v.iter().all(|&c| c == 0.0) {
        return Err(Error::Precondition("dipole direction must be nonzero".into()));
    }
    prederive(v, &sigma.quadrature(degree)?)
}

/// Translate a cell by `v`.
pub fn translate(sigma: &AffineCell, v: &[f64]) -> AffineCell {
    let sh = |p: &Vec<f64>| p.iter().zip(v).map(|(a, b)| a + b).collect::<Vec<f64>>();
    let shape = match &sigma.shape {
        CellShape::Simplex(vs) => CellShape::Simplex(vs.iter().map(sh).collect()),
        CellShape::Box { lo, hi } => CellShape::Box { lo: sh(lo), hi: sh(hi) },
    };
    AffineCell { shape, sign: sigma.sign }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=q {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn tensor_indices(q: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..q).map(move |i| {
                    let mut w = v.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    out
}

fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out.into_iter()
        .map(|p| {
            let inv = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            let s = if inv % 2 == 0 { 1.0 } else { -1.0 };
            (p, s)
        })
        .collect()
}
