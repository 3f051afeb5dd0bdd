//! Randomized operator-identity and norm-inequality suites for the chain
//! algebra, with a pluggable boundary operator for negative controls.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chains::cells::{AffineCell, CellChain};
use crate::chains::forms::{blades_of_grade, Poly, PolyForm, TestForm, WaveForm};
use crate::chains::{
    boundary, cartesian_wedge, extrude, multiply, pair, prederive, pushforward, retract, AffineMap, JetChain,
    VectorField,
};
use crate::error::{Error, Result};
use crate::exterior::KVector;
use crate::norms::{b1_flat_exact, br_lower, br_upper, DEFAULT_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Structural,
    Stokes,
    Cone,
    Pushforward,
    Norms,
    Flat,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Structural, Suite::Stokes, Suite::Cone, Suite::Pushforward, Suite::Norms, Suite::Flat];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Structural => "structural",
            Suite::Stokes => "stokes",
            Suite::Cone => "cone",
            Suite::Pushforward => "pushforward",
            Suite::Norms => "norms",
            Suite::Flat => "flat",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Schema(format!("unknown suite {s:?}")))
    }
}

/// Parse a selector: `all`, or a comma-separated list of suite names.
pub fn parse_selector(s: &str) -> Result<Vec<Suite>> {
    if s == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

/// The boundary operator under test. Everything else is fixed.
#[derive(Clone, Copy)]
pub struct Operators {
    pub boundary: fn(&JetChain) -> Result<JetChain>,
}

impl Default for Operators {
    fn default() -> Self {
        Operators { boundary }
    }
}

fn flipped_boundary(j: &JetChain) -> Result<JetChain> {
    let mut e1 = vec![0.0; j.n()];
    e1[0] = 1.0;
    let t = prederive(&e1, &retract(&VectorField::Constant(e1.clone()), j)?)?;
    boundary(j)?.axpy(-2.0, &t)
}

impl Operators {
    /// Boundary with the sign of its `P_{e₁} E†_{e₁}` term flipped.
    pub fn corrupted() -> Operators {
        Operators { boundary: flipped_boundary }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "chain", rename_all = "lowercase")]
pub enum Witness {
    Jet(JetChain),
    Cells(CellChain),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed residual (relative, or `lower / (C·upper)` for inequalities).
    pub worst: f64,
    pub tolerance: f64,
    /// First failing input.
    pub witness: Option<Witness>,
}

impl CheckResult {
    fn new(suite: Suite, name: &str, tolerance: f64) -> CheckResult {
        CheckResult { suite, name: name.into(), trials: 0, failures: 0, worst: 0.0, tolerance, witness: None }
    }

    fn record(&mut self, residual: f64, witness: impl FnOnce() -> Witness) {
        self.trials += 1;
        if residual.is_nan() || residual > self.worst {
            self.worst = if residual.is_nan() { f64::INFINITY } else { residual };
        }
        if !(residual <= self.tolerance) {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn error(&mut self, w: Witness) {
        self.record(f64::INFINITY, || w);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityConfig {
    pub seed: u64,
    /// Random jet chains for the structural and pairing suites.
    pub chains: usize,
    /// Random cells for Stokes and cone checks.
    pub cells: usize,
    /// Random chains per norm inequality.
    pub norm_chains: usize,
    pub flat_pairs: usize,
}

impl IdentityConfig {
    pub fn with_seed(seed: u64) -> IdentityConfig {
        IdentityConfig { seed, chains: 500, cells: 100, norm_chains: 200, flat_pairs: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }

    pub fn suite_passed(&self, s: Suite) -> bool {
        self.checks.iter().filter(|c| c.suite == s).all(|c| c.passed())
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<12} {:<33} {:>7} {:>5} {:>12} {:>9}  result\n",
            "suite", "check", "trials", "fail", "worst", "tol"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<12} {:<33} {:>7} {:>5} {:>12.3e} {:>9.0e}  {}\n",
                c.suite.name(),
                c.name,
                c.trials,
                c.failures,
                c.worst,
                c.tolerance,
                if c.passed() { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

const STRUCT_TOL: f64 = 1e-12;
const PAIR_TOL: f64 = 1e-9;
const SOUND_SLACK: f64 = 1e-12;

pub fn run(suites: &[Suite], cfg: &IdentityConfig, ops: &Operators) -> IdentityReport {
    let mut checks = Vec::new();
    for (i, s) in Suite::ALL.iter().enumerate() {
        if !suites.contains(s) {
            continue;
        }
        // one stream per suite
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(i as u64));
        checks.extend(match s {
            Suite::Structural => structural(&mut rng, cfg.chains, ops),
            Suite::Stokes => stokes(&mut rng, cfg.chains, cfg.cells, ops),
            Suite::Cone => cone(&mut rng, cfg.cells),
            Suite::Pushforward => pushforward_duality(&mut rng, cfg.chains),
            Suite::Norms => norm_bounds(&mut rng, cfg.norm_chains),
            Suite::Flat => flat(&mut rng, cfg.flat_pairs),
        });
    }
    IdentityReport { seed: cfg.seed, checks }
}

// ---------------------------------------------------------------- generators

fn coord(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        // coarse lattice so that elements collide and merge
        rng.gen_range(-8i32..=8) as f64 / 8.0
    } else {
        rng.gen_range(-1.0..1.0)
    }
}

fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| coord(rng)).collect()
}

fn vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_kvector(rng: &mut ChaCha8Rng, n: usize, k: usize) -> KVector {
    let mut terms: Vec<(Vec<usize>, f64)> = Vec::new();
    for b in blades_of_grade(n, k) {
        if rng.gen_bool(0.7) {
            terms.push((b.indices(), rng.gen_range(-1.0..1.0)));
        }
    }
    if terms.is_empty() {
        let b = blades_of_grade(n, k);
        let i = rng.gen_range(0..b.len());
        return KVector::basis(n, &b[i].indices()).expect("valid blade");
    }
    KVector::from_terms(n, k, terms).expect("valid blades")
}

/// Random jet chain with at most `max_elems` elements, each with up to
/// `max_order` basis directions.
pub fn random_chain(rng: &mut ChaCha8Rng, n: usize, k: usize, max_elems: usize, max_order: usize) -> JetChain {
    let m = rng.gen_range(1..=max_elems);
    let elems: Vec<_> = (0..m)
        .map(|_| {
            let j = rng.gen_range(0..=max_order);
            let dirs = (0..j).map(|_| rng.gen_range(1..=n)).collect();
            (point(rng, n), random_kvector(rng, n, k), dirs)
        })
        .collect();
    JetChain::from_basis_elements(n, k, elems).expect("well-formed random chain")
}

fn random_field(rng: &mut ChaCha8Rng, n: usize, affine: bool) -> VectorField {
    if affine {
        VectorField::Affine { a: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)), b: vector(rng, n) }
    } else {
        VectorField::Constant(vector(rng, n))
    }
}

pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: u32, terms: usize) -> Poly {
    let mut p = Poly::zero(n);
    for _ in 0..terms {
        let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=deg)).collect();
        if e.iter().sum::<u32>() <= deg {
            p.add_term(e, rng.gen_range(-1.0..1.0));
        }
    }
    p
}

pub fn random_form(rng: &mut ChaCha8Rng, n: usize, k: usize, deg: u32) -> PolyForm {
    let mut w = PolyForm::zero(n, k);
    for b in blades_of_grade(n, k) {
        w.set(&b.indices(), random_poly(rng, n, deg, 5)).expect("grade matches");
    }
    w
}

fn random_cell(rng: &mut ChaCha8Rng, n: usize, k: usize) -> AffineCell {
    loop {
        let c = if rng.gen_bool(0.3) {
            let lo = point(rng, n);
            let mut hi = lo.clone();
            let mut axes: Vec<usize> = (0..n).collect();
            for t in 0..k {
                let s = rng.gen_range(t..n);
                axes.swap(t, s);
                hi[axes[t]] += rng.gen_range(0.2..1.0);
            }
            AffineCell::axis_box(lo, hi)
        } else {
            AffineCell::simplex((0..=k).map(|_| vector(rng, n)).collect())
        };
        if let Ok(c) = c {
            if !c.is_degenerate() {
                return if rng.gen_bool(0.5) { c } else { c.negated() };
            }
        }
    }
}

// ------------------------------------------------------------------- helpers

/// Grade overflow and underflow act as the zero operator.
fn or_zero(r: Result<JetChain>, n: usize, k: usize) -> Result<JetChain> {
    match r {
        Err(Error::GradeOverflow { .. }) | Err(Error::GradeUnderflow) => Ok(JetChain::zero(n, k)),
        other => other,
    }
}

fn rel_residual(lhs: &JetChain, rhs: &JetChain, scale: f64) -> f64 {
    match lhs.sub(rhs) {
        Ok(d) => d.max_abs() / scale.max(lhs.max_abs()).max(rhs.max_abs()).max(f64::MIN_POSITIVE),
        Err(_) => f64::INFINITY,
    }
}

fn pair_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn inner_poly(v: &VectorField, w: &VectorField) -> Poly {
    let (a, b) = (v.to_polys(), w.to_polys());
    a.iter().zip(&b).fold(Poly::zero(v.n()), |acc, (x, y)| acc.add(&x.mul(y)))
}

// -------------------------------------------------------------------- suites

fn structural(rng: &mut ChaCha8Rng, count: usize, ops: &Operators) -> Vec<CheckResult> {
    let mut dd = CheckResult::new(Suite::Structural, "boundary_squared_zero", STRUCT_TOL);
    let mut pp = CheckResult::new(Suite::Structural, "prederivatives_commute", STRUCT_TOL);
    let mut ee = CheckResult::new(Suite::Structural, "extrusion_squared_zero", STRUCT_TOL);
    let mut comm = CheckResult::new(Suite::Structural, "extrusion_retraction_anticommute", STRUCT_TOL);
    let mut cartan = CheckResult::new(Suite::Structural, "prederivative_homotopy", STRUCT_TOL);
    let bd = ops.boundary;
    for _ in 0..count {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(0..=n);
        let j = random_chain(rng, n, k, 20, 2);
        let w = || Witness::Jet(j.clone());
        let s = j.max_abs();

        {
            let n2 = rng.gen_range(2..=4);
            let k2 = rng.gen_range(2..=n2);
            let j2 = random_chain(rng, n2, k2, 20, 2);
            match bd(&j2).and_then(|b| bd(&b)) {
                Ok(r) => dd.record(r.max_abs() / j2.max_abs(), || Witness::Jet(j2.clone())),
                Err(_) => dd.error(Witness::Jet(j2.clone())),
            }
        }

        let (u, v) = (vector(rng, n), vector(rng, n));
        match (prederive(&u, &j).and_then(|x| prederive(&v, &x)), prederive(&v, &j).and_then(|x| prederive(&u, &x))) {
            (Ok(a), Ok(b)) => pp.record(rel_residual(&a, &b, s), w),
            _ => pp.error(w()),
        }

        let x = random_field(rng, n, false);
        match or_zero(extrude(&x, &j), n, (k + 1).min(n)).and_then(|e| or_zero(extrude(&x, &e), n, (k + 2).min(n))) {
            Ok(r) => ee.record(r.max_abs() / s, w),
            Err(_) => ee.error(w()),
        }

        // V, W affine on half of the trials; the identity then holds with
        // ⟨V,W⟩ acting as a polynomial multiplier
        let affine = rng.gen_bool(0.5);
        let (vf, wf) = (random_field(rng, n, affine), random_field(rng, n, affine));
        let lhs = (|| {
            let a = or_zero(retract(&wf, &j), n, k.saturating_sub(1))?;
            let a = if a.k() + 1 == k { or_zero(extrude(&vf, &a), n, k)? } else { JetChain::zero(n, k) };
            let b = or_zero(extrude(&vf, &j), n, (k + 1).min(n))?;
            let b = if b.k() == k + 1 { or_zero(retract(&wf, &b), n, k)? } else { JetChain::zero(n, k) };
            a.add(&b)
        })();
        match (lhs, multiply(&inner_poly(&vf, &wf), &j)) {
            (Ok(a), Ok(b)) => comm.record(rel_residual(&a, &b, s), w),
            _ => comm.error(w()),
        }

        {
            // dipole chains at most
            let j = random_chain(rng, n, k, 20, 1);
            let w = || Witness::Jet(j.clone());
            let s = j.max_abs();
            let xv = vector(rng, n);
            let xf = VectorField::Constant(xv.clone());
            let rhs = (|| {
                let a = if k >= 1 { or_zero(extrude(&xf, &bd(&j)?), n, k)? } else { JetChain::zero(n, k) };
                let b = or_zero(extrude(&xf, &j), n, (k + 1).min(n))?;
                let b = if b.k() == k + 1 { bd(&b)? } else { JetChain::zero(n, k) };
                a.add(&b)
            })();
            match (prederive(&xv, &j), rhs) {
                (Ok(a), Ok(b)) => cartan.record(rel_residual(&a, &b, s), w),
                _ => cartan.error(w()),
            }
        }
    }
    vec![dd, pp, ee, comm, cartan]
}

fn stokes(rng: &mut ChaCha8Rng, chains: usize, cells: usize, ops: &Operators) -> Vec<CheckResult> {
    let mut jets = CheckResult::new(Suite::Stokes, "stokes_jet_chains", PAIR_TOL);
    let mut cl = CheckResult::new(Suite::Stokes, "stokes_cells", PAIR_TOL);
    let bd = ops.boundary;
    for _ in 0..chains {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=n);
        let j = random_chain(rng, n, k, 20, 2);
        let deg = rng.gen_range(0..=4);
        let om = random_form(rng, n, k - 1, deg);
        let w = || Witness::Jet(j.clone());
        let r = (|| Ok::<_, Error>((pair(&bd(&j)?, &om)?, pair(&j, &om.d()?)?)))();
        match r {
            Ok((a, b)) => jets.record(pair_residual(a, b), w),
            Err(_) => jets.error(w()),
        }
    }
    for _ in 0..cells {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=n);
        let c = CellChain::single(random_cell(rng, n, k));
        let deg = rng.gen_range(0..=4);
        let om = random_form(rng, n, k - 1, deg);
        let w = || Witness::Cells(c.clone());
        let r = (|| Ok::<_, Error>((c.boundary()?.pair(&om, 4)?, c.pair(&om.d()?, 4)?)))();
        match r {
            Ok((a, b)) => cl.record(pair_residual(a, b), w),
            Err(_) => cl.error(w()),
        }
    }
    vec![jets, cl]
}

fn cone(rng: &mut ChaCha8Rng, cells: usize) -> Vec<CheckResult> {
    let mut res = CheckResult::new(Suite::Cone, "cone_homotopy_cells", PAIR_TOL);
    for _ in 0..cells {
        let n = rng.gen_range(2..=4);
        let k = rng.gen_range(1..n);
        let c = CellChain::single(random_cell(rng, n, k));
        let q = point(rng, n);
        let deg = rng.gen_range(0..=4);
        let om = random_form(rng, n, k, deg);
        let w = || Witness::Cells(c.clone());
        let r = (|| {
            let a = c.boundary()?.cone(&q)?.pair(&om, 4)?;
            let b = c.cone(&q)?.boundary()?.pair(&om, 4)?;
            Ok::<_, Error>((a + b, c.pair(&om, 4)?))
        })();
        match r {
            Ok((a, b)) => res.record(pair_residual(a, b), w),
            Err(_) => res.error(w()),
        }
    }
    vec![res]
}

fn pushforward_duality(rng: &mut ChaCha8Rng, count: usize) -> Vec<CheckResult> {
    let mut res = CheckResult::new(Suite::Pushforward, "pushforward_pullback_duality", STRUCT_TOL);
    for _ in 0..count {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(0..=n);
        let j = random_chain(rng, n, k, 20, 1);
        let l = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let c = vector(rng, n);
        let comps: Vec<Poly> = (0..n)
            .map(|i| (0..n).fold(Poly::constant(n, c[i]), |p, t| p.add(&Poly::coord(n, t).scale(l[(i, t)]))))
            .collect();
        let f = AffineMap { l, c };
        let deg = rng.gen_range(0..=3);
        let om = random_form(rng, n, k, deg);
        let w = || Witness::Jet(j.clone());
        let r = (|| Ok::<_, Error>((pair(&pushforward(&f, &j)?, &om)?, pair(&j, &om.pullback(&comps)?)?)))();
        match r {
            Ok((a, b)) => res.record(pair_residual(a, b), w),
            Err(_) => res.error(w()),
        }
    }
    vec![res]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Upper bound for `‖X‖_{B^r}` on `[-1,1]^n`.
fn field_norm(x: &VectorField, r: usize) -> f64 {
    match x {
        VectorField::Constant(v) => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
        VectorField::Affine { a, b } => {
            let fa = a.norm();
            let sup = b.iter().map(|c| c * c).sum::<f64>().sqrt() + fa * (b.len() as f64).sqrt();
            if r >= 1 {
                sup.max(fa)
            } else {
                sup
            }
        }
        VectorField::Poly(_) => f64::INFINITY,
    }
}

/// Test forms with certified bounds valid on `[-1,1]^n`.
fn lower_forms(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Box<dyn TestForm>> {
    let mut out: Vec<Box<dyn TestForm>> = Vec::new();
    for _ in 0..3 {
        out.push(Box::new(WaveForm::constant(random_kvector(rng, n, k))));
    }
    for _ in 0..4 {
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        out.push(Box::new(WaveForm {
            xi,
            phase: rng.gen_range(0.0..6.3),
            covector: random_kvector(rng, n, k),
            scale: 1.0,
        }));
    }
    for _ in 0..3 {
        let deg = rng.gen_range(1..=2);
        out.push(Box::new(random_form(rng, n, k, deg)));
    }
    out
}

fn lower(a: &JetChain, r: usize, forms: &[Box<dyn TestForm>]) -> Result<f64> {
    let refs: Vec<&dyn TestForm> = forms.iter().map(|f| f.as_ref()).collect();
    Ok(br_lower(a, r, &refs)?.lower)
}

fn upper(a: &JetChain, r: usize) -> Result<f64> {
    Ok(br_upper(a, r, DEFAULT_BUDGET)?.upper)
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs <= rhs * (1.0 + SOUND_SLACK) + SOUND_SLACK {
        if rhs > 0.0 {
            lhs / rhs
        } else {
            0.0
        }
    } else {
        f64::INFINITY
    }
}

fn norm_bounds(rng: &mut ChaCha8Rng, count: usize) -> Vec<CheckResult> {
    let mut bd = CheckResult::new(Suite::Norms, "boundary_bound", 1.0);
    let mut ex = CheckResult::new(Suite::Norms, "extrusion_bound", 1.0);
    let mut rt = CheckResult::new(Suite::Norms, "retraction_bound", 1.0);
    let mut pv = CheckResult::new(Suite::Norms, "prederivative_bound", 1.0);
    let mut cw = CheckResult::new(Suite::Norms, "interval_product_bound", 1.0);
    for _ in 0..count {
        let n = rng.gen_range(1..=4);
        let r = rng.gen_range(0..=1);

        // ‖∂A‖_{B^{r+1}} ≤ k n ‖A‖_{B^r}
        let k = rng.gen_range(1..=n);
        let a = random_chain(rng, n, k, 20, 0);
        let forms = lower_forms(rng, n, k - 1);
        match (|| Ok::<_, Error>((lower(&boundary(&a)?, r + 1, &forms)?, upper(&a, r)?)))() {
            Ok((l, u)) => bd.record(ratio(l, (k * n) as f64 * u), || Witness::Jet(a.clone())),
            Err(_) => bd.error(Witness::Jet(a.clone())),
        }

        // ‖E_X A‖_{B^r} ≤ n² 2^r ‖X‖_{B^r} ‖A‖_{B^r}
        {
            let k = rng.gen_range(0..n);
            let a = random_chain(rng, n, k, 20, 0);
            let x = {
                let af = rng.gen_bool(0.5);
                random_field(rng, n, af)
            };
            let c = (n * n) as f64 * 2f64.powi(r as i32) * field_norm(&x, r);
            let forms = lower_forms(rng, n, k + 1);
            match (|| Ok::<_, Error>((lower(&extrude(&x, &a)?, r, &forms)?, upper(&a, r)?)))() {
                Ok((l, u)) => ex.record(ratio(l, c * u), || Witness::Jet(a.clone())),
                Err(_) => ex.error(Witness::Jet(a.clone())),
            }
        }

        // ‖E†_X A‖_{B^r} ≤ k C(n,k) ‖X‖_{B^r} ‖A‖_{B^r}
        let k = rng.gen_range(1..=n);
        let a = random_chain(rng, n, k, 20, 0);
        let x = {
            let af = rng.gen_bool(0.5);
            random_field(rng, n, af)
        };
        let c = k as f64 * binomial(n, k) * field_norm(&x, r);
        let forms = lower_forms(rng, n, k - 1);
        match (|| Ok::<_, Error>((lower(&retract(&x, &a)?, r, &forms)?, upper(&a, r)?)))() {
            Ok((l, u)) => rt.record(ratio(l, c * u), || Witness::Jet(a.clone())),
            Err(_) => rt.error(Witness::Jet(a.clone())),
        }

        // ‖P_v A‖_{B^{r+1}} ≤ |v| ‖A‖_{B^r}
        let k = rng.gen_range(0..=n);
        let a = random_chain(rng, n, k, 20, 0);
        let v = vector(rng, n);
        let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let forms = lower_forms(rng, n, k);
        match (|| Ok::<_, Error>((lower(&prederive(&v, &a)?, r + 1, &forms)?, upper(&a, r)?)))() {
            Ok((l, u)) => pv.record(ratio(l, vn * u), || Witness::Jet(a.clone())),
            Err(_) => pv.error(Witness::Jet(a.clone())),
        }

        // ‖[a,b]~ ×̂ A‖_{B^r} ≤ (b − a) ‖A‖_{B^r}
        let n2 = rng.gen_range(1..=3);
        let k = rng.gen_range(0..=n2);
        let a = random_chain(rng, n2, k, 20, 0);
        let lo = rng.gen_range(-1.0..0.5);
        let hi = rng.gen_range(lo + 0.01..1.0);
        let forms = lower_forms(rng, n2 + 1, k + 1);
        let r2 = (|| {
            let iv = AffineCell::axis_box(vec![lo], vec![hi])?.quadrature(4)?;
            Ok::<_, Error>((lower(&cartesian_wedge(&iv, &a)?, r, &forms)?, upper(&a, r)?))
        })();
        match r2 {
            Ok((l, u)) => cw.record(ratio(l, (hi - lo) * u), || Witness::Jet(a.clone())),
            Err(_) => cw.error(Witness::Jet(a.clone())),
        }
    }
    vec![bd, ex, rt, pv, cw]
}

fn flat(rng: &mut ChaCha8Rng, count: usize) -> Vec<CheckResult> {
    let mut res = CheckResult::new(Suite::Flat, "flat_norm_of_point_pair", 1e-9);
    for _ in 0..count {
        let n = rng.gen_range(1..=4);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let d = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let a = JetChain::from_basis_elements(
            n,
            0,
            [(p, KVector::scalar(n, 1.0), vec![]), (q, KVector::scalar(n, -1.0), vec![])],
        )
        .expect("grade 0");
        match b1_flat_exact(&a) {
            Ok(f) if f.verify(&a, 1e-9) => res.record((f.value - d.min(2.0)).abs(), || Witness::Jet(a.clone())),
            _ => res.error(Witness::Jet(a.clone())),
        }
    }
    vec![res]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> IdentityConfig {
        IdentityConfig { seed, chains: 60, cells: 20, norm_chains: 20, flat_pairs: 20 }
    }

    #[test]
    fn full_suite_passes() {
        let rep = run(&Suite::ALL, &small(42), &Operators::default());
        assert!(rep.passed(), "{}", rep.table());
    }

    #[test]
    fn selector_restricts_suites() {
        let s = parse_selector("stokes").unwrap();
        let rep = run(&s, &small(1), &Operators::default());
        assert!(rep.checks.iter().all(|c| c.suite == Suite::Stokes));
        assert_eq!(rep.checks.len(), 2);
        assert!(parse_selector("bogus").is_err());
    }

    #[test]
    fn corrupted_boundary_is_caught_with_witness() {
        let rep = run(&[Suite::Structural, Suite::Stokes], &small(7), &Operators::corrupted());
        assert!(!rep.passed());
        let bad = rep.checks.iter().find(|c| c.name == "stokes_jet_chains").unwrap();
        assert!(bad.failures > 0);
        let Some(Witness::Jet(j)) = &bad.witness else { panic!("missing witness") };
        assert!(!j.is_zero());
        // any sum of P_a E†_b squares to zero, so this check cannot see the flip
        assert!(rep.checks.iter().find(|c| c.name == "boundary_squared_zero").unwrap().passed());
    }

    #[test]
    fn same_seed_same_report() {
        let a = run(&Suite::ALL, &small(3), &Operators::default());
        let b = run(&Suite::ALL, &small(3), &Operators::default());
        assert_eq!(a, b);
    }
}
