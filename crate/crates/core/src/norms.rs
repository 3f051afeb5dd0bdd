//! Mass norm, two-sided bounds for the B^r norm of Dirac chains, and the
//! exact flat norm of scalar 0-chains via min-cost transport.

use serde::{Deserialize, Serialize};

use crate::chains::forms::TestForm;
use crate::chains::{pair, JetChain};
use crate::error::{Error, Result};
use crate::exterior::{KVector, MassInterval};

/// Greedy matching radius for `br_upper`.
pub const MATCH_RADIUS: f64 = 2.0;
/// Default node budget for `br_upper`.
pub const DEFAULT_BUDGET: usize = 10_000;

/// A j-difference chain `Δ_{s}(p; α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceGerm {
    pub p: Vec<f64>,
    pub alpha: KVector,
    pub s: Vec<Vec<f64>>,
}

impl DifferenceGerm {
    pub fn order(&self) -> usize {
        self.s.len()
    }

    pub fn cost(&self) -> f64 {
        self.s.iter().map(|u| norm(u)).product::<f64>() * self.alpha.mass().upper
    }

    /// The `2^j` Dirac terms of the germ.
    pub fn expand(&self) -> Vec<(Vec<f64>, KVector)> {
        let mut out = vec![(self.p.clone(), self.alpha.clone())];
        for u in &self.s {
            let mut next = Vec::with_capacity(out.len() * 2);
            for (p, a) in out {
                let q: Vec<f64> = p.iter().zip(u).map(|(x, y)| x + y).collect();
                next.push((q, a.clone()));
                next.push((p, a.neg()));
            }
            out = next;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub witness_decomposition: Option<Vec<DifferenceGerm>>,
    /// Index into the supplied form list of the maximizing form.
    pub witness_form: Option<usize>,
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn require_dirac(a: &JetChain) -> Result<()> {
    if a.order() > 0 {
        return Err(Error::OrderTooHigh(a.order()));
    }
    Ok(())
}

pub fn mass_norm(a: &JetChain) -> Result<MassInterval> {
    require_dirac(a)?;
    Ok(a.elements().iter().fold(MassInterval::exact(0.0), |acc, e| acc + e.alpha.mass()))
}

/// Reassemble a decomposition into a canonical Dirac chain.
pub fn reassemble(n: usize, k: usize, germs: &[DifferenceGerm]) -> Result<JetChain> {
    JetChain::from_basis_elements(n, k, germs.iter().flat_map(|g| g.expand()).map(|(p, a)| (p, a, vec![])))
}

/// Overlap of opposite-sign coefficients, signed like `beta`.
fn opposite_overlap(alpha: &KVector, beta: &KVector) -> Option<KVector> {
    let n = alpha.n();
    let terms: Vec<(Vec<usize>, f64)> = beta
        .terms()
        .filter_map(|(idx, b)| {
            let a = alpha.coeff(&idx);
            (a * b < 0.0).then(|| (idx, b.signum() * a.abs().min(b.abs())))
        })
        .collect();
    if terms.is_empty() {
        return None;
    }
    KVector::from_terms(n, alpha.k(), terms).ok().filter(|g| !g.is_zero())
}

/// Correction germs for `Δ_{s_to}(p;γ) − Δ_{s_from}(p;γ)` after matching the
/// vectors of the two sets, telescoping one vector at a time.
fn correction(p: &[f64], gamma: &KVector, s_to: &[Vec<f64>], s_from: &[Vec<f64>]) -> Vec<DifferenceGerm> {
    let m = s_to.len();
    let perm = best_matching(s_to, s_from);
    let b: Vec<Vec<f64>> = perm.iter().map(|&i| s_from[i].clone()).collect();
    let mut out = Vec::new();
    for t in 0..m {
        let diff: Vec<f64> = s_to[t].iter().zip(&b[t]).map(|(x, y)| x - y).collect();
        if diff.iter().all(|&d| d == 0.0) {
            continue;
        }
        let base: Vec<f64> = p.iter().zip(&b[t]).map(|(x, y)| x + y).collect();
        let mut s: Vec<Vec<f64>> = s_to[..t].to_vec();
        s.extend(b[t + 1..].iter().cloned());
        s.push(diff);
        out.push(DifferenceGerm { p: base, alpha: gamma.clone(), s });
    }
    out
}

fn best_matching(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<usize> {
    fn rec(
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
        acc: f64,
    ) {
        if acc >= best.0 {
            return;
        }
        let t = cur.len();
        if t == a.len() {
            *best = (acc, cur.clone());
            return;
        }
        for i in 0..b.len() {
            if !used[i] {
                let d: f64 = a[t].iter().zip(&b[i]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                used[i] = true;
                cur.push(i);
                rec(a, b, used, cur, best, acc + d);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut best = (f64::INFINITY, (0..a.len()).collect());
    rec(a, b, &mut vec![false; b.len()], &mut Vec::new(), &mut best, 0.0);
    best.1
}

/// Upper bound on `‖A‖_{B^r}` from a greedy decomposition into difference
/// chains. Deterministic for a given budget; the decomposition for `r + 1`
/// extends the one for `r`, so the bound is nonincreasing in `r`.
pub fn br_upper(a: &JetChain, r: usize, budget: usize) -> Result<NormEstimate> {
    require_dirac(a)?;
    let mut germs: Vec<DifferenceGerm> =
        a.elements().iter().map(|e| DifferenceGerm { p: e.p.clone(), alpha: e.alpha.clone(), s: vec![] }).collect();
    let mut nodes = 0usize;
    for level in 0..r {
        let idx: Vec<usize> = (0..germs.len()).filter(|&i| germs[i].order() == level).collect();
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (x, &i) in idx.iter().enumerate() {
            for &j in &idx[x + 1..] {
                let d = dist(&germs[i].p, &germs[j].p);
                if d < MATCH_RADIUS && d > 0.0 {
                    cands.push((d, i, j));
                }
            }
        }
        cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (d, i, j) in cands {
            if nodes >= budget {
                break;
            }
            nodes += 1;
            let Some(gamma) = opposite_overlap(&germs[i].alpha, &germs[j].alpha) else {
                continue;
            };
            let (gi, gj) = (&germs[i], &germs[j]);
            let si: f64 = gi.s.iter().map(|u| norm(u)).product();
            let sj: f64 = gj.s.iter().map(|u| norm(u)).product();
            let new_i = gi.alpha.add(&gamma)?;
            let new_j = gj.alpha.sub(&gamma)?;
            let u: Vec<f64> = gj.p.iter().zip(&gi.p).map(|(x, y)| x - y).collect();
            let mut s = gj.s.clone();
            s.push(u);
            let joined = DifferenceGerm { p: gi.p.clone(), alpha: gamma.clone(), s };
            let corr = correction(&gi.p, &gamma, &gj.s, &gi.s);
            let old = gi.cost() + gj.cost();
            let new = si * new_i.mass().upper
                + sj * new_j.mass().upper
                + joined.cost()
                + corr.iter().map(|g| g.cost()).sum::<f64>();
            debug_assert!(d > 0.0);
            if new < old * (1.0 - 1e-12) {
                germs[i].alpha = new_i;
                germs[j].alpha = new_j;
                germs.push(joined);
                germs.extend(corr);
            }
        }
        germs.retain(|g| !g.alpha.is_zero() && g.alpha.max_abs() > 0.0);
    }
    germs.retain(|g| !g.alpha.is_zero());
    let upper = germs.iter().map(|g| g.cost()).sum();
    Ok(NormEstimate { lower: 0.0, upper, witness_decomposition: Some(germs), witness_form: None })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Lower bound `max |⟨A, ω⟩| / ‖ω‖_{B^r}` over the supplied forms.
pub fn br_lower(a: &JetChain, r: usize, forms: &[&dyn TestForm]) -> Result<NormEstimate> {
    if a.order() > r {
        return Err(Error::OrderTooHigh(a.order()));
    }
    let mut best = (0.0, None);
    for (i, w) in forms.iter().enumerate() {
        let b = w.bounds().norm(r)?;
        if b <= 0.0 {
            continue;
        }
        let v = pair(a, *w)?.abs() / b;
        if v > best.0 {
            best = (v, Some(i));
        }
    }
    Ok(NormEstimate { lower: best.0, upper: f64::INFINITY, witness_decomposition: None, witness_form: best.1 })
}

/// Combined estimate: greedy decomposition above, sampled forms below.
pub fn br_estimate(a: &JetChain, r: usize, forms: &[&dyn TestForm], budget: usize) -> Result<NormEstimate> {
    let up = br_upper(a, r, budget)?;
    let lo = br_lower(a, r, forms)?;
    Ok(NormEstimate {
        lower: lo.lower.min(up.upper),
        upper: up.upper,
        witness_decomposition: up.witness_decomposition,
        witness_form: lo.witness_form,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatNorm {
    pub value: f64,
    /// Dual function at each element: `|f| ≤ 1`, 1-Lipschitz, `Σ a_i f_i = value`.
    pub potentials: Vec<f64>,
    pub dual_value: f64,
    /// Transport plan `(from, to, amount)`; `None` is the ground node.
    pub plan: Vec<(Option<usize>, Option<usize>, f64)>,
}

impl FlatNorm {
    /// Re-check feasibility of the dual certificate against the chain.
    pub fn verify(&self, a: &JetChain, tol: f64) -> bool {
        let e = a.elements();
        if e.len() != self.potentials.len() {
            return false;
        }
        let f = &self.potentials;
        for i in 0..e.len() {
            if f[i].abs() > 1.0 + tol {
                return false;
            }
            for j in 0..e.len() {
                if f[i] - f[j] > dist(&e[i].p, &e[j].p) + tol {
                    return false;
                }
            }
        }
        let dv: f64 = e.iter().zip(f).map(|(x, fi)| x.alpha.coeff(&[]) * fi).sum();
        (dv - self.value).abs() <= tol * (1.0 + self.value)
    }
}

/// Exact flat (B¹) norm of a grade-0 Dirac chain:
/// `min Σ|t_ab| d(a,b) + Σ|r_a|` solved as uncapacitated min-cost flow on the
/// points plus a ground node (unit cost to and from ground), with the
/// optimal node potentials returned as the dual certificate.
pub fn b1_flat_exact(a: &JetChain) -> Result<FlatNorm> {
    require_dirac(a)?;
    if a.k() != 0 {
        return Err(Error::GradeMismatch(a.k(), 0));
    }
    let e = a.elements();
    let m = e.len();
    if m == 0 {
        return Ok(FlatNorm { value: 0.0, potentials: vec![], dual_value: 0.0, plan: vec![] });
    }
    let g = m;
    let nn = m + 1;
    let mut cost = vec![vec![0.0; nn]; nn];
    for i in 0..m {
        for j in 0..m {
            cost[i][j] = dist(&e[i].p, &e[j].p);
        }
        cost[i][g] = 1.0;
        cost[g][i] = 1.0;
    }
    let mut excess: Vec<f64> = e.iter().map(|x| x.alpha.coeff(&[])).collect();
    excess.push(-excess.iter().sum::<f64>());
    let scale = excess.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let tol = 1e-13 * scale.max(1.0);
    // flow[u][v] on the complete digraph; forward arcs are uncapacitated,
    // reverse residual arcs carry flow[v][u].
    let mut flow = vec![vec![0.0; nn]; nn];
    let residual = |flow: &Vec<Vec<f64>>, u: usize, v: usize| -> Option<f64> {
        if u == v {
            None
        } else if flow[v][u] > tol {
            Some(-cost[v][u])
        } else {
            Some(cost[u][v])
        }
    };
    let mut iters = 0;
    loop {
        let sources: Vec<usize> = (0..nn).filter(|&v| excess[v] > tol).collect();
        if sources.is_empty() {
            break;
        }
        iters += 1;
        if iters > 4 * nn * nn + 16 {
            return Err(Error::NonConvergence("flat norm transport".into()));
        }
        let (dist_to, pred) = bellman_ford(nn, &sources, |u, v| residual(&flow, u, v));
        let sink = (0..nn)
            .filter(|&v| excess[v] < -tol)
            .min_by(|&x, &y| dist_to[x].total_cmp(&dist_to[y]).then(x.cmp(&y)))
            .ok_or_else(|| Error::NonConvergence("unbalanced transport".into()))?;
        let mut path = vec![sink];
        while let Some(p) = pred[*path.last().unwrap()] {
            path.push(p);
            if path.len() > nn {
                return Err(Error::NonConvergence("negative residual cycle".into()));
            }
        }
        path.reverse();
        let src = path[0];
        let mut amt = excess[src].min(-excess[sink]);
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if flow[v][u] > tol {
                amt = amt.min(flow[v][u]);
            }
        }
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if flow[v][u] > tol {
                flow[v][u] -= amt;
                if flow[v][u] < tol {
                    flow[v][u] = 0.0;
                }
            } else {
                flow[u][v] += amt;
            }
        }
        excess[src] -= amt;
        excess[sink] += amt;
    }
    let mut value = 0.0;
    let mut plan = Vec::new();
    for u in 0..nn {
        for v in 0..nn {
            if flow[u][v] > 0.0 {
                value += flow[u][v] * cost[u][v];
                let tag = |x: usize| if x == g { None } else { Some(x) };
                plan.push((tag(u), tag(v), flow[u][v]));
            }
        }
    }
    // potentials from shortest distances in the final residual graph
    let all: Vec<usize> = (0..nn).collect();
    let (pi, _) = bellman_ford(nn, &all, |u, v| residual(&flow, u, v));
    let potentials: Vec<f64> = (0..m).map(|i| (pi[g] - pi[i]).clamp(-1.0, 1.0)).collect();
    let dual_value = e.iter().zip(&potentials).map(|(x, f)| x.alpha.coeff(&[]) * f).sum();
    Ok(FlatNorm { value, potentials, dual_value, plan })
}

/// Shortest distances from a set of zero-distance roots.
fn bellman_ford<F>(nn: usize, roots: &[usize], arc: F) -> (Vec<f64>, Vec<Option<usize>>)
where
    F: Fn(usize, usize) -> Option<f64>,
{
    let mut d = vec![f64::INFINITY; nn];
    let mut pred = vec![None; nn];
    for &r in roots {
        d[r] = 0.0;
    }
    for _ in 0..nn {
        let mut changed = false;
        for u in 0..nn {
            if !d[u].is_finite() {
                continue;
            }
            for v in 0..nn {
                if let Some(c) = arc(u, v) {
                    if d[u] + c < d[v] - 1e-15 {
                        d[v] = d[u] + c;
                        pred[v] = Some(u);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    (d, pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::forms::{ClippedRadial, WaveForm};
    use proptest::prelude::*;

    fn pt(n: usize, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[0] = x;
        v
    }

    fn pair_chain(p: &[f64], q: &[f64]) -> JetChain {
        JetChain::dirac(p, KVector::scalar(p.len(), 1.0))
            .unwrap()
            .sub(&JetChain::dirac(q, KVector::scalar(p.len(), 1.0)).unwrap())
            .unwrap()
    }

    #[test]
    fn mass_of_dirac_chains() {
        let a = JetChain::dirac(&[0.0, 0.0], KVector::basis(2, &[1]).unwrap()).unwrap();
        let b = JetChain::dirac(&[1.0, 0.0], KVector::basis(2, &[2]).unwrap()).unwrap();
        let m = mass_norm(&a.add(&b).unwrap()).unwrap();
        assert_eq!((m.lower, m.upper), (2.0, 2.0));
        let c = JetChain::dirac(&[0.0, 0.0], KVector::basis(2, &[2]).unwrap()).unwrap();
        let m = mass_norm(&a.add(&c).unwrap()).unwrap();
        assert!((m.lower - 2f64.sqrt()).abs() < 1e-15 && m.is_exact());
    }

    #[test]
    fn single_element_upper_is_mass() {
        let a = JetChain::dirac(&[0.3, 0.1, 0.0], KVector::basis(3, &[1, 3]).unwrap().scale(2.5)).unwrap();
        for r in 0..3 {
            assert_eq!(br_upper(&a, r, DEFAULT_BUDGET).unwrap().upper, 2.5);
        }
    }

    #[test]
    fn dipole_pair_upper_is_clipped_distance() {
        for d in [0.1, 0.5, 1.0, 1.9, 2.0, 3.5] {
            let a = pair_chain(&pt(2, 0.0), &pt(2, d));
            let u = br_upper(&a, 1, DEFAULT_BUDGET).unwrap().upper;
            assert!((u - d.min(2.0)).abs() < 1e-15, "d={d}: {u}");
            assert!((br_upper(&a, 0, DEFAULT_BUDGET).unwrap().upper - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn second_difference_reassembles_cheaply() {
        let p = vec![0.2, -0.1, 0.4];
        let u = vec![0.1, 0.05, 0.0];
        let v = vec![0.0, -0.2, 0.15];
        let alpha = KVector::basis(3, &[1, 2]).unwrap().scale(1.5);
        let g = DifferenceGerm { p: p.clone(), alpha: alpha.clone(), s: vec![u.clone(), v.clone()] };
        let a = reassemble(3, 2, &[g]).unwrap();
        assert_eq!(a.len(), 4);
        let est = br_upper(&a, 2, DEFAULT_BUDGET).unwrap();
        let bound = norm(&u) * norm(&v) * 1.5;
        assert!(est.upper <= bound * (1.0 + 1e-9), "{} vs {}", est.upper, bound);
        let back = reassemble(3, 2, est.witness_decomposition.as_ref().unwrap()).unwrap();
        assert!(snapped(&back).sub(&snapped(&a)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn lower_bounds() {
        let a = JetChain::dirac(&[0.0, 0.0], KVector::basis(2, &[1]).unwrap()).unwrap();
        let w = WaveForm::constant(KVector::basis(2, &[1]).unwrap());
        let est = br_lower(&a, 1, &[&w]).unwrap();
        assert_eq!(est.lower, 1.0);
        let d = 1.3;
        let b = pair_chain(&[0.0, 0.0], &[d, 0.0]);
        let w = ClippedRadial { center: vec![0.0, 0.0], offset: d.min(2.0) / 2.0 };
        assert!((br_lower(&b, 1, &[&w]).unwrap().lower - d).abs() < 1e-15);
        assert!(matches!(br_lower(&b, 2, &[&w]), Err(Error::UncertifiedForm(2))));
        let pos = JetChain::dirac(&[0.0, 0.0], KVector::scalar(2, 0.7))
            .unwrap()
            .add(&JetChain::dirac(&[0.5, 1.0], KVector::scalar(2, 1.1)).unwrap())
            .unwrap();
        let one = WaveForm::constant(KVector::scalar(2, 1.0));
        let lo = br_lower(&pos, 1, &[&one]).unwrap().lower;
        let up = br_upper(&pos, 1, DEFAULT_BUDGET).unwrap().upper;
        assert!((lo - 1.8).abs() < 1e-15 && (up - 1.8).abs() < 1e-15);
    }

    #[test]
    fn flat_norm_examples() {
        assert_eq!(b1_flat_exact(&JetChain::zero(3, 0)).unwrap().value, 0.0);
        let one = JetChain::dirac(&[1.0, 2.0], KVector::scalar(2, 1.0)).unwrap();
        let f = b1_flat_exact(&one).unwrap();
        assert!((f.value - 1.0).abs() < 1e-15 && f.verify(&one, 1e-12));
        for d in [0.0001, 0.7, 1.99, 2.0, 2.5, 10.0] {
            let a = pair_chain(&[0.0, 0.0, 0.0], &[0.0, d, 0.0]);
            let f = b1_flat_exact(&a).unwrap();
            assert!((f.value - d.min(2.0)).abs() < 1e-12, "d={d}");
            assert!(f.verify(&a, 1e-12));
        }
    }

    #[test]
    fn flat_norm_transport_chooses_cheap_matching() {
        // +1 at 0, +1 at 3, -1 at 0.5, -1 at 3.4: two local transports
        let mk = |x: f64, c: f64| JetChain::dirac(&[x], KVector::scalar(1, c)).unwrap();
        let a = mk(0.0, 1.0).add(&mk(3.0, 1.0)).unwrap().add(&mk(0.5, -1.0)).unwrap().add(&mk(3.4, -1.0)).unwrap();
        let f = b1_flat_exact(&a).unwrap();
        assert!((f.value - 0.9).abs() < 1e-12);
        assert!(f.verify(&a, 1e-12));
    }

    /// Germ expansion recomputes points in floating point, so compare after
    /// snapping coordinates.
    fn snapped(a: &JetChain) -> JetChain {
        JetChain::from_basis_elements(
            a.n(),
            a.k(),
            a.elements()
                .iter()
                .map(|e| (e.p.iter().map(|x| (x * 1e9).round() / 1e9).collect(), e.alpha.clone(), vec![])),
        )
        .unwrap()
    }

    fn chain_strategy() -> impl Strategy<Value = JetChain> {
        prop::collection::vec(((-1.5f64..1.5, -1.5f64..1.5), -2.0f64..2.0), 1..8).prop_map(|v| {
            JetChain::from_basis_elements(
                2,
                0,
                v.into_iter().map(|((x, y), c)| (vec![x, y], KVector::scalar(2, c), vec![])),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn sandwich_brackets_flat_norm(a in chain_strategy()) {
            let f = b1_flat_exact(&a).unwrap();
            prop_assert!(f.verify(&a, 1e-9));
            let up = br_upper(&a, 1, DEFAULT_BUDGET).unwrap().upper;
            prop_assert!(f.value <= up + 1e-9);
            let forms: Vec<WaveForm> = (0..6)
                .map(|i| WaveForm {
                    xi: vec![(i as f64 * 0.7).cos(), (i as f64 * 1.3).sin()],
                    phase: i as f64,
                    covector: KVector::scalar(2, 1.0),
                    scale: 1.0,
                }.normalized(1))
                .collect();
            let refs: Vec<&dyn TestForm> = forms.iter().map(|w| w as &dyn TestForm).collect();
            let lo = br_lower(&a, 1, &refs).unwrap().lower;
            prop_assert!(lo <= f.value + 1e-9);
        }

        #[test]
        fn upper_is_monotone_in_r(a in chain_strategy()) {
            let u0 = br_upper(&a, 0, DEFAULT_BUDGET).unwrap().upper;
            let u1 = br_upper(&a, 1, DEFAULT_BUDGET).unwrap().upper;
            let u2 = br_upper(&a, 2, DEFAULT_BUDGET).unwrap().upper;
            prop_assert!(u1 <= u0 + 1e-12 && u2 <= u1 + 1e-12);
        }

        #[test]
        fn witness_reassembles(a in chain_strategy()) {
            let est = br_upper(&a, 2, DEFAULT_BUDGET).unwrap();
            let back = reassemble(2, 0, est.witness_decomposition.as_ref().unwrap()).unwrap();
            let diff = snapped(&back).sub(&snapped(&a)).unwrap();
            prop_assert!(diff.max_abs() <= 1e-9 * (1.0 + a.max_abs()));
        }
    }
}
