//! Exterior algebra of R^n: k-vectors in the lexicographic basis with the
//! induced inner product and two-sided mass bounds.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ambient dimension (index sets are stored as bitmasks).
pub const MAX_DIM: usize = 32;

const DROP_REL: f64 = 1e-14;

/// Basis blade `e_I` stored as a bitmask; bit `i-1` set means index `i ∈ I`.
///
/// Ordered lexicographically on the increasing index tuple for equal grades.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Blade(pub u32);

impl Blade {
    pub fn from_indices(idx: &[usize], n: usize) -> Result<Blade> {
        let mut mask = 0u32;
        let mut prev = 0usize;
        for &i in idx {
            if i == 0 || i > n || i <= prev {
                return Err(Error::InvalidIndex(idx.to_vec(), n));
            }
            mask |= 1 << (i - 1);
            prev = i;
        }
        Ok(Blade(mask))
    }

    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|b| self.0 >> b & 1 == 1).map(|b| b + 1).collect()
    }

    pub fn grade(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> (i - 1) & 1 == 1
    }
}

impl Ord for Blade {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.grade().cmp(&other.grade()) {
            Ordering::Equal => {}
            o => return o,
        }
        let d = self.0 ^ other.0;
        if d == 0 {
            return Ordering::Equal;
        }
        let low = d & d.wrapping_neg();
        if self.0 & low != 0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for Blade {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sign of `e_A ∧ e_B` relative to `e_{A∪B}`; zero when the sets overlap.
pub fn wedge_sign(a: Blade, b: Blade) -> f64 {
    if a.0 & b.0 != 0 {
        return 0.0;
    }
    let mut swaps = 0u32;
    let mut rest = b.0;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a.0 >> j).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Two-sided bound on the mass of a k-vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassInterval {
    pub lower: f64,
    pub upper: f64,
}

impl MassInterval {
    pub fn exact(v: f64) -> Self {
        MassInterval { lower: v, upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

impl std::ops::Add for MassInterval {
    type Output = MassInterval;
    fn add(self, o: MassInterval) -> MassInterval {
        MassInterval { lower: self.lower + o.lower, upper: self.upper + o.upper }
    }
}

/// A grade-k element of Λ^k(R^n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "KVectorRepr", try_from = "KVectorRepr")]
pub struct KVector {
    n: usize,
    k: usize,
    coeffs: BTreeMap<Blade, f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct KVectorRepr {
    n: usize,
    k: usize,
    terms: Vec<(Vec<usize>, f64)>,
}

impl From<KVector> for KVectorRepr {
    fn from(v: KVector) -> Self {
        KVectorRepr { n: v.n, k: v.k, terms: v.terms().collect() }
    }
}

impl TryFrom<KVectorRepr> for KVector {
    type Error = Error;
    fn try_from(r: KVectorRepr) -> Result<Self> {
        KVector::from_terms(r.n, r.k, r.terms)
    }
}

impl KVector {
    pub fn zero(n: usize, k: usize) -> KVector {
        assert!(n <= MAX_DIM && k <= n, "KVector::zero({n}, {k})");
        KVector { n, k, coeffs: BTreeMap::new() }
    }

    pub fn scalar(n: usize, c: f64) -> KVector {
        let mut v = KVector::zero(n, 0);
        v.coeffs.insert(Blade(0), c);
        v.canonicalize();
        v
    }

    /// Basis element `e_I`; `idx` must be strictly increasing and 1-based.
    pub fn basis(n: usize, idx: &[usize]) -> Result<KVector> {
        if n > MAX_DIM {
            return Err(Error::InvalidIndex(idx.to_vec(), n));
        }
        let b = Blade::from_indices(idx, n)?;
        let mut v = KVector::zero(n, idx.len());
        v.coeffs.insert(b, 1.0);
        Ok(v)
    }

    pub fn from_terms<I>(n: usize, k: usize, terms: I) -> Result<KVector>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        if n > MAX_DIM || k > n {
            return Err(Error::GradeOverflow { k, l: 0, n });
        }
        let mut v = KVector::zero(n, k);
        for (idx, c) in terms {
            if idx.len() != k {
                return Err(Error::GradeMismatch(idx.len(), k));
            }
            let b = Blade::from_indices(&idx, n)?;
            *v.coeffs.entry(b).or_insert(0.0) += c;
        }
        v.canonicalize();
        Ok(v)
    }

    /// Grade-1 vector with the given components.
    pub fn vector(v: &[f64]) -> KVector {
        let n = v.len();
        let mut out = KVector::zero(n, 1);
        for (i, &c) in v.iter().enumerate() {
            out.coeffs.insert(Blade(1 << i), c);
        }
        out.canonicalize();
        out
    }

    /// The simple k-vector `v₁ ∧ ⋯ ∧ v_k`.
    pub fn simple(n: usize, vs: &[Vec<f64>]) -> Result<KVector> {
        let mut acc = KVector::scalar(n, 1.0);
        for v in vs {
            if v.len() != n {
                return Err(Error::DimensionMismatch(v.len(), n));
            }
            acc = acc.wedge(&KVector::vector(v))?;
        }
        Ok(acc)
    }

    pub(crate) fn from_blades(n: usize, k: usize, coeffs: BTreeMap<Blade, f64>) -> KVector {
        let mut v = KVector { n, k, coeffs };
        v.canonicalize();
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Terms in lexicographic order of their index tuples.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.coeffs.iter().map(|(b, &c)| (b.indices(), c))
    }

    pub fn coeff(&self, idx: &[usize]) -> f64 {
        Blade::from_indices(idx, self.n).ok().and_then(|b| self.coeffs.get(&b).copied()).unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn canonicalize(&mut self) {
        let m = self.max_abs();
        let cut = m * DROP_REL;
        self.coeffs.retain(|_, c| *c != 0.0 && c.abs() >= cut);
    }

    fn check_same(&self, o: &KVector) -> Result<()> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch(self.n, o.n));
        }
        if self.k != o.k {
            return Err(Error::GradeMismatch(self.k, o.k));
        }
        Ok(())
    }

    pub fn add(&self, o: &KVector) -> Result<KVector> {
        self.axpy(1.0, o)
    }

    pub fn sub(&self, o: &KVector) -> Result<KVector> {
        self.axpy(-1.0, o)
    }

    /// `self + a·o`.
    pub fn axpy(&self, a: f64, o: &KVector) -> Result<KVector> {
        self.check_same(o)?;
        let mut c = self.coeffs.clone();
        for (b, v) in &o.coeffs {
            *c.entry(*b).or_insert(0.0) += a * v;
        }
        Ok(KVector::from_blades(self.n, self.k, c))
    }

    pub fn scale(&self, a: f64) -> KVector {
        let c = self.coeffs.iter().map(|(b, v)| (*b, a * v)).collect();
        KVector::from_blades(self.n, self.k, c)
    }

    pub fn neg(&self) -> KVector {
        self.scale(-1.0)
    }

    pub fn wedge(&self, o: &KVector) -> Result<KVector> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch(self.n, o.n));
        }
        if self.k + o.k > self.n {
            return Err(Error::GradeOverflow { k: self.k, l: o.k, n: self.n });
        }
        let mut c = BTreeMap::new();
        for (a, x) in &self.coeffs {
            for (b, y) in &o.coeffs {
                let s = wedge_sign(*a, *b);
                if s != 0.0 {
                    *c.entry(Blade(a.0 | b.0)).or_insert(0.0) += s * x * y;
                }
            }
        }
        Ok(KVector::from_blades(self.n, self.k + o.k, c))
    }

    pub fn inner(&self, o: &KVector) -> Result<f64> {
        self.check_same(o)?;
        Ok(self.coeffs.iter().filter_map(|(b, x)| o.coeffs.get(b).map(|y| x * y)).sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn l1(&self) -> f64 {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    /// Retraction `E†_v` on a constant k-vector: for `e_{i₁}∧⋯∧e_{i_k}` this is
    /// `Σ_j (−1)^{j+1} v_{i_j} e_{I∖i_j}`.
    pub fn interior(&self, v: &[f64]) -> Result<KVector> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch(v.len(), self.n));
        }
        if self.k == 0 {
            return Err(Error::GradeUnderflow);
        }
        let mut c = BTreeMap::new();
        for (b, x) in &self.coeffs {
            let mut sign = 1.0;
            for i in b.indices() {
                let vi = v[i - 1];
                if vi != 0.0 {
                    *c.entry(Blade(b.0 & !(1 << (i - 1)))).or_insert(0.0) += sign * vi * x;
                }
                sign = -sign;
            }
        }
        Ok(KVector::from_blades(self.n, self.k - 1, c))
    }

    /// Image under the k-th exterior power of the linear map `l` (rows index
    /// the target space, columns the source).
    pub fn linear_map(&self, l: &DMatrix<f64>) -> Result<KVector> {
        if l.ncols() != self.n {
            return Err(Error::DimensionMismatch(l.ncols(), self.n));
        }
        let m = l.nrows();
        if self.k > m {
            return Err(Error::GradeOverflow { k: self.k, l: 0, n: m });
        }
        let cols: Vec<KVector> =
            (0..self.n).map(|j| KVector::vector(&l.column(j).iter().copied().collect::<Vec<_>>())).collect();
        let mut out = KVector::zero(m, self.k);
        for (b, x) in &self.coeffs {
            let mut acc = KVector::scalar(m, *x);
            for i in b.indices() {
                acc = acc.wedge(&cols[i - 1])?;
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Push into `R^{new_n}` by shifting every index by `offset`.
    pub fn embed(&self, offset: usize, new_n: usize) -> Result<KVector> {
        if offset + self.n > new_n {
            return Err(Error::DimensionMismatch(offset + self.n, new_n));
        }
        let c = self.coeffs.iter().map(|(b, x)| (Blade(b.0 << offset), *x)).collect();
        Ok(KVector::from_blades(new_n, self.k, c))
    }

    /// Complement map `e_I ↦ σ(I) e_{I^c}` with `e_I ∧ σ(I)e_{I^c} = e_{1..n}`;
    /// an isometry that preserves simplicity, hence mass.
    fn complement(&self) -> KVector {
        let full = if self.n == 32 { u32::MAX } else { (1u32 << self.n) - 1 };
        let c = self
            .coeffs
            .iter()
            .map(|(b, x)| {
                let cb = Blade(full & !b.0);
                (cb, wedge_sign(*b, cb) * x)
            })
            .collect();
        KVector::from_blades(self.n, self.n - self.k, c)
    }

    /// Mass interval. Exact for grades 0, 1, n−1, n (everything is simple) and
    /// for grades 2 and n−2, where the upper bound comes from the normal form
    /// `Σ λ_i u_i∧w_i` of the associated skew matrix. Otherwise the upper bound
    /// is the sum of absolute basis coefficients.
    pub fn mass(&self) -> MassInterval {
        let lower = self.norm();
        let (n, k) = (self.n, self.k);
        if k <= 1 || k + 1 >= n {
            return MassInterval::exact(lower);
        }
        let upper = if k == 2 {
            skew_nuclear_half(self)
        } else if k + 2 == n {
            skew_nuclear_half(&self.complement())
        } else {
            self.l1()
        };
        MassInterval { lower, upper: upper.max(lower) }
    }
}

/// Half the nuclear norm of the skew matrix of a 2-vector; equals the sum of
/// the normal-form coefficients, i.e. the cost of an explicit decomposition
/// into orthogonal simple 2-vectors.
fn skew_nuclear_half(v: &KVector) -> f64 {
    debug_assert_eq!(v.k, 2);
    let n = v.n;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (b, x) in &v.coeffs {
        let idx = b.indices();
        let (i, j) = (idx[0] - 1, idx[1] - 1);
        a[(i, j)] = *x;
        a[(j, i)] = -*x;
    }
    let sv = a.singular_values();
    sv.iter().sum::<f64>() / 2.0
}
