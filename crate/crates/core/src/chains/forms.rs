//! Test forms: evaluation of `∂_D ω(p)` as a covector, plus certified
//! bounds on the B^j seminorms used for dual (lower) norm estimates.
//!
//! Covectors reuse [`KVector`] with coefficients read in the dual basis.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exterior::{wedge_sign, Blade, KVector};

/// Certified bounds on `|ω|_{B^j}` for `j = 0..bounds.len()`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FormBounds {
    pub per_order: Vec<f64>,
}

impl FormBounds {
    pub fn new(per_order: Vec<f64>) -> Self {
        FormBounds { per_order }
    }

    /// `‖ω‖_{B^r} = max_{j ≤ r} |ω|_{B^j}`, or an error when some order is uncertified.
    pub fn norm(&self, r: usize) -> Result<f64> {
        if self.per_order.len() <= r {
            return Err(Error::UncertifiedForm(r));
        }
        Ok(self.per_order[..=r].iter().fold(0.0, |m, &b| m.max(b)))
    }
}

pub trait TestForm: Send + Sync {
    fn n(&self) -> usize;
    fn degree(&self) -> usize;
    /// Covector coefficients of the iterated partial derivative of ω at `p`
    /// along the 1-based basis directions `dirs`.
    fn eval(&self, p: &[f64], dirs: &[usize]) -> Result<KVector>;
    /// Highest derivative order supported; `None` means unbounded.
    fn max_order(&self) -> Option<usize>;
    fn bounds(&self) -> FormBounds;
}

/// Polynomial in n variables: exponent vector → coefficient.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    pub n: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(n: usize) -> Poly {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Poly {
        let mut p = Poly::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    /// The coordinate function `x_i` (0-based).
    pub fn coord(n: usize, i: usize) -> Poly {
        let mut e = vec![0; n];
        e[i] = 1;
        let mut p = Poly::zero(n);
        p.add_term(e, 1.0);
        p
    }

    pub fn add_term(&mut self, exp: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.entry(exp).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()).sum()
    }

    pub fn deriv(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(f, c * e[i] as f64);
            }
        }
        out
    }

    pub fn deriv_multi(&self, dirs: &[usize]) -> Poly {
        dirs.iter().fold(self.clone(), |p, &d| p.deriv(d - 1))
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, a: f64) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), a * c);
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            for (f, d) in &o.terms {
                let g = e.iter().zip(f).map(|(a, b)| a + b).collect();
                out.add_term(g, c * d);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::constant(self.n, 1.0), |acc, _| acc.mul(self))
    }

    /// `self ∘ g`, where `g` maps R^m → R^{self.n}.
    pub fn compose(&self, g: &[Poly]) -> Poly {
        assert_eq!(g.len(), self.n);
        let m = g.first().map(|p| p.n).unwrap_or(0);
        let mut out = Poly::zero(m);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(m, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&g[i].pow(k));
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Upper bound on `sup |p|` over the cube `[-r, r]^n`.
    pub fn sup_bound(&self, r: f64) -> f64 {
        self.terms.iter().map(|(e, c)| c.abs() * r.powi(e.iter().sum::<u32>() as i32)).sum()
    }
}

/// A k-form with polynomial coefficients; all derivatives are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyForm {
    pub n: usize,
    pub k: usize,
    pub coeffs: BTreeMap<Blade, Poly>,
    /// Half-width of the cube on which the declared bounds are certified.
    pub domain_radius: f64,
}

impl PolyForm {
    pub fn zero(n: usize, k: usize) -> PolyForm {
        PolyForm { n, k, coeffs: BTreeMap::new(), domain_radius: 1.0 }
    }

    pub fn with_domain(mut self, r: f64) -> PolyForm {
        self.domain_radius = r;
        self
    }

    /// Set the coefficient of `dx_I` (1-based strictly increasing indices).
    pub fn set(&mut self, idx: &[usize], p: Poly) -> Result<()> {
        if idx.len() != self.k {
            return Err(Error::GradeMismatch(idx.len(), self.k));
        }
        let b = Blade::from_indices(idx, self.n)?;
        if p.is_zero() {
            self.coeffs.remove(&b);
        } else {
            self.coeffs.insert(b, p);
        }
        Ok(())
    }

    fn accumulate(&mut self, b: Blade, p: Poly) {
        let e = self.coeffs.entry(b).or_insert_with(|| Poly::zero(p.n));
        *e = e.add(&p);
        if e.is_zero() {
            self.coeffs.remove(&b);
        }
    }

    pub fn coeff(&self, idx: &[usize]) -> Poly {
        Blade::from_indices(idx, self.n)
            .ok()
            .and_then(|b| self.coeffs.get(&b).cloned())
            .unwrap_or_else(|| Poly::zero(self.n))
    }

    pub fn poly_degree(&self) -> u32 {
        self.coeffs.values().map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &PolyForm) -> Result<PolyForm> {
        if (self.n, self.k) != (o.n, o.k) {
            return Err(Error::GradeMismatch(self.k, o.k));
        }
        let mut out = self.clone();
        for (b, p) in &o.coeffs {
            out.accumulate(*b, p.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, a: f64) -> PolyForm {
        let mut out = self.clone();
        for p in out.coeffs.values_mut() {
            *p = p.scale(a);
        }
        out
    }

    /// Exterior derivative `dω = Σ_I Σ_j ∂_j f_I dx_j ∧ dx_I`.
    pub fn d(&self) -> Result<PolyForm> {
        if self.k >= self.n {
            return Err(Error::GradeOverflow { k: self.k, l: 1, n: self.n });
        }
        let mut out = PolyForm::zero(self.n, self.k + 1).with_domain(self.domain_radius);
        for (b, f) in &self.coeffs {
            for j in 1..=self.n {
                let bj = Blade(1 << (j - 1));
                let s = wedge_sign(bj, *b);
                if s != 0.0 {
                    out.accumulate(Blade(b.0 | bj.0), f.deriv(j - 1).scale(s));
                }
            }
        }
        Ok(out)
    }

    /// Interior product `i_X ω` for a polynomial vector field `X`:
    /// `(i_X ω)(α) = ω(X ∧ α)`.
    pub fn interior(&self, x: &[Poly]) -> Result<PolyForm> {
        if self.k == 0 {
            return Err(Error::GradeUnderflow);
        }
        let mut out = PolyForm::zero(self.n, self.k - 1).with_domain(self.domain_radius);
        for (b, f) in &self.coeffs {
            for i in b.indices() {
                let bi = Blade(1 << (i - 1));
                let rest = Blade(b.0 & !bi.0);
                let s = wedge_sign(bi, rest);
                out.accumulate(rest, f.mul(&x[i - 1]).scale(s));
            }
        }
        Ok(out)
    }

    /// `X♭ ∧ ω` for a polynomial vector field `X`.
    pub fn wedge_flat(&self, x: &[Poly]) -> Result<PolyForm> {
        if self.k >= self.n {
            return Err(Error::GradeOverflow { k: self.k, l: 1, n: self.n });
        }
        let mut out = PolyForm::zero(self.n, self.k + 1).with_domain(self.domain_radius);
        for (b, f) in &self.coeffs {
            for i in 1..=self.n {
                let bi = Blade(1 << (i - 1));
                let s = wedge_sign(bi, *b);
                if s != 0.0 {
                    out.accumulate(Blade(b.0 | bi.0), f.mul(&x[i - 1]).scale(s));
                }
            }
        }
        Ok(out)
    }

    /// Multiply every coefficient by the scalar polynomial `g`.
    pub fn mul_scalar(&self, g: &Poly) -> PolyForm {
        let mut out = self.clone();
        for p in out.coeffs.values_mut() {
            *p = p.mul(g);
        }
        out.coeffs.retain(|_, p| !p.is_zero());
        out
    }

    /// Lie derivative `L_X ω = i_X dω + d i_X ω`.
    pub fn lie(&self, x: &[Poly]) -> Result<PolyForm> {
        let a = if self.k < self.n { self.d()?.interior(x)? } else { PolyForm::zero(self.n, self.k) };
        let b = if self.k > 0 { self.interior(x)?.d()? } else { PolyForm::zero(self.n, self.k) };
        a.add(&b)
    }

    /// Pullback `F*ω` along a polynomial map `F: R^m → R^n` given by its
    /// component polynomials.
    pub fn pullback(&self, f: &[Poly]) -> Result<PolyForm> {
        if f.len() != self.n {
            return Err(Error::DimensionMismatch(f.len(), self.n));
        }
        let m = f.first().map(|p| p.n).ok_or(Error::Empty("map components"))?;
        if self.k > m {
            return Ok(PolyForm::zero(m, 0));
        }
        let jac: Vec<Vec<Poly>> = f.iter().map(|fi| (0..m).map(|j| fi.deriv(j)).collect()).collect();
        let mut out = PolyForm::zero(m, self.k).with_domain(self.domain_radius);
        let composed: Vec<(Blade, Poly)> = self.coeffs.iter().map(|(b, p)| (*b, p.compose(f))).collect();
        for src in blades_of_grade(m, self.k) {
            let cols = src.indices();
            let mut acc = Poly::zero(m);
            for (b, g) in &composed {
                let rows = b.indices();
                let minor = poly_det(&rows, &cols, &jac);
                if !minor.is_zero() {
                    acc = acc.add(&g.mul(&minor));
                }
            }
            if !acc.is_zero() {
                out.coeffs.insert(src, acc);
            }
        }
        Ok(out)
    }

    /// Certified bounds on the cube `[-R, R]^n`: `|ω|_{B^j} ≤ sup |D^j ω|`
    /// with the covector comass bounded by its Euclidean norm.
    pub fn certified_bounds(&self, max_j: usize) -> FormBounds {
        let r = self.domain_radius;
        let mut per = Vec::with_capacity(max_j + 1);
        for j in 0..=max_j {
            let mut total = 0.0;
            for f in self.coeffs.values() {
                for dirs in multi_indices(self.n, j) {
                    let b = f.deriv_multi(&dirs).sup_bound(r);
                    total += b * b;
                }
            }
            per.push(total.sqrt());
        }
        FormBounds::new(per)
    }
}

pub(crate) fn blades_of_grade(n: usize, k: usize) -> Vec<Blade> {
    let mut v: Vec<Blade> = (0u32..(1u32 << n)).filter(|m| m.count_ones() as usize == k).map(Blade).collect();
    v.sort();
    v
}

fn multi_indices(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..j {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..=n).map(move |i| {
                    let mut w = v.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    out
}

/// Determinant of the polynomial minor with the given 1-based rows and cols.
fn poly_det(rows: &[usize], cols: &[usize], jac: &[Vec<Poly>]) -> Poly {
    let k = rows.len();
    let m = jac.first().map(|r| r[0].n).unwrap_or(0);
    if k == 0 {
        return Poly::constant(m, 1.0);
    }
    let mut acc = Poly::zero(m);
    for (c, &col) in cols.iter().enumerate() {
        let entry = &jac[rows[0] - 1][col - 1];
        if entry.is_zero() {
            continue;
        }
        let sub_cols: Vec<usize> = cols.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, &x)| x).collect();
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc.add(&entry.mul(&poly_det(&rows[1..], &sub_cols, jac)).scale(sign));
    }
    acc
}

impl TestForm for PolyForm {
    fn n(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.k
    }
    fn eval(&self, p: &[f64], dirs: &[usize]) -> Result<KVector> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch(p.len(), self.n));
        }
        let c = self.coeffs.iter().map(|(b, f)| (*b, f.deriv_multi(dirs).eval(p))).collect();
        Ok(KVector::from_blades(self.n, self.k, c))
    }
    fn max_order(&self) -> Option<usize> {
        None
    }
    fn bounds(&self) -> FormBounds {
        self.certified_bounds(3)
    }
}

/// `ω(x) = s · cos(ξ·x + φ) · c` with a constant covector `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveForm {
    pub xi: Vec<f64>,
    pub phase: f64,
    pub covector: KVector,
    pub scale: f64,
}

impl WaveForm {
    pub fn constant(covector: KVector) -> WaveForm {
        let n = covector.n();
        WaveForm { xi: vec![0.0; n], phase: 0.0, covector, scale: 1.0 }
    }

    /// Rescale so that `‖ω‖_{B^r} ≤ 1` is certified.
    pub fn normalized(mut self, r: usize) -> WaveForm {
        self.scale = 1.0;
        let b = self.bounds().norm(r).unwrap_or(1.0);
        if b > 0.0 {
            self.scale = 1.0 / b;
        }
        self
    }
}

impl TestForm for WaveForm {
    fn n(&self) -> usize {
        self.covector.n()
    }
    fn degree(&self) -> usize {
        self.covector.k()
    }
    fn eval(&self, p: &[f64], dirs: &[usize]) -> Result<KVector> {
        let theta: f64 = self.xi.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + self.phase;
        let j = dirs.len() as f64;
        let amp: f64 = dirs.iter().map(|&d| self.xi[d - 1]).product();
        let v = (theta + j * std::f64::consts::FRAC_PI_2).cos();
        Ok(self.covector.scale(self.scale * amp * v))
    }
    fn max_order(&self) -> Option<usize> {
        None
    }
    fn bounds(&self) -> FormBounds {
        let xi = self.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c = self.covector.norm() * self.scale.abs();
        FormBounds::new((0..8).map(|j| c * xi.powi(j)).collect())
    }
}

/// Scalar function `clamp(offset − |x − center|, −1, 1)`: bounded by 1 and
/// 1-Lipschitz, so `‖ω‖_{B^1} ≤ 1`. Only order-0 evaluation is available.
#[derive(Clone, Debug, PartialEq)]
pub struct ClippedRadial {
    pub center: Vec<f64>,
    pub offset: f64,
}

impl TestForm for ClippedRadial {
    fn n(&self) -> usize {
        self.center.len()
    }
    fn degree(&self) -> usize {
        0
    }
    fn eval(&self, p: &[f64], dirs: &[usize]) -> Result<KVector> {
        if !dirs.is_empty() {
            return Err(Error::InsufficientFormOrder { have: 0, need: dirs.len() });
        }
        let d = p.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Ok(KVector::scalar(self.n(), (self.offset - d).clamp(-1.0, 1.0)))
    }
    fn max_order(&self) -> Option<usize> {
        Some(0)
    }
    fn bounds(&self) -> FormBounds {
        FormBounds::new(vec![1.0, 1.0])
    }
}

type FormFn = dyn Fn(&[f64]) -> KVector + Send + Sync;

/// Form given by a callback; derivatives by central finite differences.
/// Bounds are whatever the caller declares.
#[derive(Clone)]
pub struct FnForm {
    pub n: usize,
    pub k: usize,
    pub f: Arc<FormFn>,
    pub step: f64,
    pub max_order: usize,
    pub declared: FormBounds,
}

impl FnForm {
    fn fd(&self, p: &[f64], dirs: &[usize]) -> KVector {
        match dirs.split_last() {
            None => (self.f)(p),
            Some((&d, rest)) => {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[d - 1] += self.step;
                b[d - 1] -= self.step;
                let fa = self.fd(&a, rest);
                let fb = self.fd(&b, rest);
                fa.sub(&fb).expect("same grade").scale(0.5 / self.step)
            }
        }
    }
}

impl TestForm for FnForm {
    fn n(&self) -> usize {
        self.n
    }
    fn degree(&self) -> usize {
        self.k
    }
    fn eval(&self, p: &[f64], dirs: &[usize]) -> Result<KVector> {
        if dirs.len() > self.max_order {
            return Err(Error::InsufficientFormOrder { have: self.max_order, need: dirs.len() });
        }
        Ok(self.fd(p, dirs))
    }
    fn max_order(&self) -> Option<usize> {
        Some(self.max_order)
    }
    fn bounds(&self) -> FormBounds {
        self.declared.clone()
    }
}
