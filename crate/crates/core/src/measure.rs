//! Areas, sphere slices, density ratios and sequence diagnostics.
//!
//! On face complexes every quantity here is exact up to floating point:
//! faces are axis squares, so ball and sphere intersections reduce to
//! disc/rectangle areas and circle/rectangle arc lengths in the face plane.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, P3};
use crate::grid::{Face, FaceComplex, GridDomain};
use crate::linking::{fmt_g9, BoundarySystem};

/// Volume of the unit ball in R^m.
pub fn alpha(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => alpha(m - 2) * TAU / m as f64,
    }
}

pub fn area(x: &FaceComplex) -> f64 {
    x.area()
}

fn face_rect(d: &GridDomain, f: &Face) -> (usize, f64, [f64; 2], [f64; 2]) {
    let c = f.corners(d);
    let (u, v) = f.plane_axes();
    let a = f.axis();
    (a, c[0][a], [c[0][u], c[0][v]], [c[2][u], c[2][v]])
}

/// ∫ √(R² − X²) dX.
fn semicircle_antideriv(x: f64, r: f64) -> f64 {
    let t = (x / r).clamp(-1.0, 1.0);
    let x = t * r;
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * t.asin())
}

/// Area of `{X ≤ x, Y ≤ y} ∩ disc(0, R)`.
fn quadrant_area(x: f64, y: f64, r: f64) -> f64 {
    let xm = x.min(r);
    if xm <= -r || y <= -r {
        return 0.0;
    }
    let s = |a: f64, b: f64| {
        let (a, b) = (a.max(-r), b.min(xm));
        if b > a {
            semicircle_antideriv(b, r) - semicircle_antideriv(a, r)
        } else {
            0.0
        }
    };
    let lin = |a: f64, b: f64| {
        let (a, b) = (a.max(-r), b.min(xm));
        if b > a {
            b - a
        } else {
            0.0
        }
    };
    if y >= r {
        return 2.0 * s(-r, r);
    }
    let w = (r * r - y * y).sqrt();
    let middle = y * lin(-w, w) + s(-w, w);
    if y >= 0.0 {
        middle + 2.0 * (s(-r, -w) + s(w, r))
    } else {
        middle
    }
}

/// Area of a disc intersected with an axis rectangle.
pub fn disc_rect_area(center: [f64; 2], r: f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let (x0, x1) = (lo[0] - center[0], hi[0] - center[0]);
    let (y0, y1) = (lo[1] - center[1], hi[1] - center[1]);
    let a = quadrant_area(x1, y1, r) - quadrant_area(x0, y1, r) - quadrant_area(x1, y0, r) + quadrant_area(x0, y0, r);
    a.max(0.0)
}

/// Angle intervals of a circle lying in a closed axis rectangle.
pub fn circle_rect_arcs(center: [f64; 2], r: f64, lo: [f64; 2], hi: [f64; 2]) -> Vec<(f64, f64)> {
    if r <= 0.0 {
        return Vec::new();
    }
    let mut ang = vec![0.0, TAU];
    let mut push = |t: f64| ang.push(t.rem_euclid(TAU));
    for k in 0..2 {
        for e in [lo[k], hi[k]] {
            let s = (e - center[k]) / r;
            if s.abs() <= 1.0 {
                if k == 0 {
                    let t = s.acos();
                    push(t);
                    push(-t);
                } else {
                    let t = s.asin();
                    push(t);
                    push(PI - t);
                }
            }
        }
    }
    ang.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in ang.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let m = 0.5 * (w[0] + w[1]);
        let p = [center[0] + r * m.cos(), center[1] + r * m.sin()];
        if p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1] {
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

/// Length of a circle inside a closed axis rectangle.
pub fn circle_rect_length(center: [f64; 2], r: f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
    circle_rect_arcs(center, r, lo, hi).iter().map(|(a, b)| r * (b - a)).sum()
}

/// Polylines of `x(p, t) = X ∩ fr O(p, t)`, one per face arc, with steps at most `max_step`.
pub fn slice_curves(x: &FaceComplex, p: P3, t: f64, max_step: f64) -> Vec<Vec<P3>> {
    let d = &x.domain;
    let mut out = Vec::new();
    for f in faces_near(x, p, t) {
        let (a, c, lo, hi) = face_rect(d, f);
        let rho2 = t * t - (c - p[a]) * (c - p[a]);
        if rho2 <= 0.0 {
            continue;
        }
        let rho = rho2.sqrt();
        let (u, v) = f.plane_axes();
        for (t0, t1) in circle_rect_arcs([p[u], p[v]], rho, lo, hi) {
            let n = ((rho * (t1 - t0) / max_step).ceil() as usize).max(1);
            let pts = (0..=n)
                .map(|i| {
                    let th = t0 + (t1 - t0) * i as f64 / n as f64;
                    let mut q = [0.0; 3];
                    q[a] = c;
                    q[u] = p[u] + rho * th.cos();
                    q[v] = p[v] + rho * th.sin();
                    q
                })
                .collect();
            out.push(pts);
        }
    }
    out
}

/// Area of one face inside the open ball `O(p, r)`.
pub fn face_ball_area(d: &GridDomain, f: &Face, p: P3, r: f64) -> f64 {
    let (a, c, lo, hi) = face_rect(d, f);
    let rho2 = r * r - (c - p[a]) * (c - p[a]);
    if rho2 <= 0.0 {
        return 0.0;
    }
    let (u, v) = f.plane_axes();
    disc_rect_area([p[u], p[v]], rho2.sqrt(), lo, hi)
}

/// Length of one face's intersection with the sphere `fr O(p, t)`.
pub fn face_sphere_length(d: &GridDomain, f: &Face, p: P3, t: f64) -> f64 {
    let (a, c, lo, hi) = face_rect(d, f);
    let rho2 = t * t - (c - p[a]) * (c - p[a]);
    if rho2 <= 0.0 {
        return 0.0;
    }
    let (u, v) = f.plane_axes();
    circle_rect_length([p[u], p[v]], rho2.sqrt(), lo, hi)
}

fn faces_near<'a>(x: &'a FaceComplex, p: P3, r: f64) -> impl Iterator<Item = &'a Face> + 'a {
    let d = &x.domain;
    x.iter().filter(move |f| {
        let c = f.center(d);
        dist(c, p) <= r + d.h
    })
}

/// `S²(X ∩ O(p, r))`, exact for face complexes.
pub fn ball_area(x: &FaceComplex, p: P3, r: f64) -> f64 {
    faces_near(x, p, r).map(|f| face_ball_area(&x.domain, f, p, r)).sum()
}

/// `S²(X ∩ W)` for the open box `W = (lo, hi)`.
pub fn box_area(x: &FaceComplex, lo: P3, hi: P3) -> f64 {
    let d = &x.domain;
    x.iter()
        .map(|f| {
            let (a, c, flo, fhi) = face_rect(d, f);
            if c <= lo[a] || c >= hi[a] {
                return 0.0;
            }
            let (u, v) = f.plane_axes();
            let w = (fhi[0].min(hi[u]) - flo[0].max(lo[u])).max(0.0);
            let h = (fhi[1].min(hi[v]) - flo[1].max(lo[v])).max(0.0);
            w * h
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceProfile {
    pub center: P3,
    pub radii: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Trapezoid accumulation of `lengths`.
    pub cumulative: Vec<f64>,
}

impl SliceProfile {
    pub fn f(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }
}

pub fn slice(x: &FaceComplex, p: P3, r_max: f64, k: usize) -> Result<SliceProfile> {
    if k < 2 {
        return Err(Error::Precondition("slice needs at least two radii".into()));
    }
    let near: Vec<&Face> = faces_near(x, p, r_max).collect();
    let radii: Vec<f64> = (0..=k).map(|i| r_max * i as f64 / k as f64).collect();
    let lengths: Vec<f64> =
        radii.iter().map(|&t| near.iter().map(|f| face_sphere_length(&x.domain, f, p, t)).sum()).collect();
    let mut cumulative = vec![0.0; k + 1];
    for i in 1..=k {
        cumulative[i] = cumulative[i - 1] + 0.5 * (radii[i] - radii[i - 1]) * (lengths[i] + lengths[i - 1]);
    }
    Ok(SliceProfile { center: p, radii, lengths, cumulative })
}

/// Open axis box standing in for the ambient open set `U`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: P3,
    pub hi: P3,
}

impl Region {
    pub fn of_domain(d: &GridDomain) -> Region {
        Region { lo: d.origin, hi: d.upper() }
    }

    pub fn contains_ball(&self, p: P3, r: f64) -> bool {
        (0..3).all(|k| p[k] - r > self.lo[k] && p[k] + r < self.hi[k])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub center: P3,
    pub r: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
}

impl DensityTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p_x,p_y,p_z,r,ratio\n");
        for r in &self.rows {
            let c = r.center;
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_g9(c[0]),
                fmt_g9(c[1]),
                fmt_g9(c[2]),
                fmt_g9(r.r),
                fmt_g9(r.ratio)
            ));
        }
        s
    }
}

fn check_gamma(m: &BoundarySystem, u: &Region, p: P3, r: f64) -> Result<()> {
    if !m.is_empty() && m.distance(p) <= r {
        return Err(Error::Precondition(format!("ball ({p:?}, {r}) meets M")));
    }
    if !u.contains_ball(p, r) {
        return Err(Error::Precondition(format!("ball ({p:?}, {r}) leaves U")));
    }
    Ok(())
}

/// `S²(X(p,r)) / (α₂ r²)` per ball.
pub fn density_ratios(x: &FaceComplex, m: &BoundarySystem, u: &Region, balls: &[(P3, f64)]) -> Result<DensityTable> {
    let mut rows = Vec::with_capacity(balls.len());
    for &(p, r) in balls {
        check_gamma(m, u, p, r)?;
        rows.push(DensityRow { center: p, r, ratio: ball_area(x, p, r) / (PI * r * r) });
    }
    Ok(DensityTable { rows })
}

/// Uniform samples of the faces, `n × n` per face at cell centers.
pub fn sample_points(x: &FaceComplex, n: usize) -> Vec<P3> {
    let d = &x.domain;
    let mut out = Vec::with_capacity(x.len() * n * n);
    for f in x.iter() {
        let c = f.corners(d);
        let (u, v) = f.plane_axes();
        for i in 0..n {
            for j in 0..n {
                let mut p = c[0];
                p[u] += d.h * (i as f64 + 0.5) / n as f64;
                p[v] += d.h * (j as f64 + 0.5) / n as f64;
                out.push(p);
            }
        }
    }
    out
}

struct Buckets {
    cell: f64,
    map: HashMap<[i64; 3], Vec<usize>>,
}

impl Buckets {
    fn new(cell: f64) -> Buckets {
        Buckets { cell, map: HashMap::new() }
    }

    fn key(&self, p: P3) -> [i64; 3] {
        p.map(|c| (c / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: P3, i: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(i);
    }

    fn near(&self, p: P3, reach: i64) -> impl Iterator<Item = usize> + '_ {
        let k = self.key(p);
        (-reach..=reach).flat_map(move |a| {
            (-reach..=reach).flat_map(move |b| {
                (-reach..=reach)
                    .flat_map(move |c| self.map.get(&[k[0] + a, k[1] + b, k[2] + c]).into_iter().flatten().copied())
            })
        })
    }
}

/// Upper estimate of `S^m_δ` for a sampled set (not certified).
///
/// Disjoint balls centered on uncovered samples are packed at radii
/// `δ/2, δ/4, …` down to twice the sample spacing, each shrunk to the
/// clearance left by earlier balls. A ball whose samples fill less than
/// `PACKING_FILL` of its `m`-measure waits for a finer level. What remains
/// is covered greedily. Each ball is charged at the radius reaching its
/// newly covered samples.
pub fn spherical_upper(points: &[P3], m: usize, delta: f64) -> f64 {
    const PACKING_FILL: f64 = 0.7;
    if points.is_empty() {
        return 0.0;
    }
    let spacing = sample_spacing(points).max(1e-6 * delta);
    let cell_measure = spacing.powi(m as i32);
    let mut covered = vec![false; points.len()];
    let mut total = 0.0;
    let mut balls: Vec<(P3, f64)> = Vec::new();
    let mut r = 0.5 * delta;
    let pts = Buckets::build(points, 0.5 * delta);
    let mut ball_index = Buckets::new(delta);
    let mut inside = Vec::new();
    while r >= 2.0 * spacing {
        for i in 0..points.len() {
            if covered[i] {
                continue;
            }
            let p = points[i];
            let clearance =
                ball_index.near(p, 1).map(|b| dist(balls[b].0, p) - balls[b].1).fold(f64::INFINITY, f64::min);
            let rr = r.min(clearance);
            if rr < 0.5 * r {
                continue;
            }
            inside.clear();
            let mut reach: f64 = 0.0;
            for j in pts.near(p, ((rr / pts.cell).ceil() as i64).max(1)) {
                let dj = dist(points[j], p);
                if dj <= rr && !covered[j] {
                    inside.push(j);
                    reach = reach.max(dj);
                }
            }
            if (inside.len() as f64) * cell_measure < PACKING_FILL * alpha(m) * rr.powi(m as i32) {
                continue;
            }
            for &j in &inside {
                covered[j] = true;
            }
            ball_index.insert(p, balls.len());
            balls.push((p, rr));
            total += alpha(m) * reach.powi(m as i32);
        }
        r *= 0.5;
    }
    let r = r.max(spacing);
    for i in 0..points.len() {
        if covered[i] {
            continue;
        }
        let p = points[i];
        let mut reach: f64 = 0.0;
        for j in pts.near(p, ((r / pts.cell).ceil() as i64).max(1)) {
            if !covered[j] && dist(points[j], p) <= r {
                covered[j] = true;
                reach = reach.max(dist(points[j], p));
            }
        }
        total += alpha(m) * reach.powi(m as i32);
    }
    total
}

/// Upper estimate of `H^m_δ`: samples bucketed into cubes of diameter δ,
/// each bucket charged by the diameter of its bounding box.
pub fn hausdorff_upper(points: &[P3], m: usize, delta: f64) -> f64 {
    let side = delta / 3f64.sqrt();
    let mut boxes: HashMap<[i64; 3], (P3, P3)> = HashMap::new();
    for &p in points {
        let k = p.map(|c| (c / side).floor() as i64);
        let e = boxes.entry(k).or_insert((p, p));
        for a in 0..3 {
            e.0[a] = e.0[a].min(p[a]);
            e.1[a] = e.1[a].max(p[a]);
        }
    }
    boxes.values().map(|(lo, hi)| alpha(m) * (0.5 * dist(*lo, *hi)).powi(m as i32)).sum()
}

impl Buckets {
    fn build(points: &[P3], cell: f64) -> Buckets {
        let mut b = Buckets::new(cell);
        for (i, &p) in points.iter().enumerate() {
            b.insert(p, i);
        }
        b
    }
}

/// Median nearest-neighbour distance of a sample.
fn sample_spacing(points: &[P3]) -> f64 {
    if points.len() < 2 {
        return f64::MIN_POSITIVE;
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = dist(lo, hi).max(f64::MIN_POSITIVE);
    let cell = extent / (points.len() as f64).sqrt().max(1.0);
    let b = Buckets::build(points, cell);
    let step = (points.len() / 256).max(1);
    let mut nn: Vec<f64> = (0..points.len())
        .step_by(step)
        .map(|i| {
            let mut reach = 1;
            loop {
                let best = b
                    .near(points[i], reach)
                    .filter(|&j| j != i)
                    .map(|j| dist(points[i], points[j]))
                    .fold(f64::INFINITY, f64::min);
                if best <= reach as f64 * cell || reach > 64 {
                    break best;
                }
                reach *= 2;
            }
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    nn[nn.len() / 2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityLevel {
    pub k: usize,
    pub eps: f64,
    pub samples: usize,
    /// Minimum of `S²(X_k(p,r)) / r²` over sampled balls with `r > ε_k`.
    pub min_ratio: Option<f64>,
    pub argmin: Option<(P3, f64)>,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub a: f64,
    pub levels: Vec<RegularityLevel>,
    pub no_data: bool,
}

impl RegularityReport {
    pub fn violated(&self) -> bool {
        self.levels.iter().any(|l| l.violations > 0)
    }
}

/// Random ball in `Γ(X, M, U)` with radius in `(lo, hi]`, centered on a face.
fn sample_gamma_ball(
    x: &FaceComplex,
    faces: &[Face],
    m: &BoundarySystem,
    u: &Region,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(P3, f64)> {
    if faces.is_empty() || hi <= lo {
        return None;
    }
    let d = &x.domain;
    for _ in 0..64 {
        let f = faces[rng.gen_range(0..faces.len())];
        let c = f.corners(d);
        let (a, b) = f.plane_axes();
        let mut p = c[0];
        p[a] += rng.gen_range(0.0..d.h);
        p[b] += rng.gen_range(0.0..d.h);
        let r = lo * (hi / lo).powf(rng.gen_range(0.0f64..1.0)).max(1.0 + 1e-9);
        if check_gamma(m, u, p, r).is_ok() {
            return Some((p, r));
        }
    }
    None
}

/// Empirical lower density check along a sequence; `eps` defaults to `2^{-k}`.
pub fn reifenberg_regular_check(
    seq: &[FaceComplex],
    m: &BoundarySystem,
    u: &Region,
    a: f64,
    eps: Option<&[f64]>,
    r_max: f64,
    budget: usize,
    seed: u64,
) -> RegularityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::new();
    for (k, x) in seq.iter().enumerate() {
        let e = eps.and_then(|v| v.get(k).copied()).unwrap_or(0.5f64.powi(k as i32));
        let faces: Vec<Face> = x.iter().copied().collect();
        let mut lvl = RegularityLevel { k, eps: e, samples: 0, min_ratio: None, argmin: None, violations: 0 };
        for _ in 0..budget {
            let Some((p, r)) = sample_gamma_ball(x, &faces, m, u, e, r_max, &mut rng) else { continue };
            lvl.samples += 1;
            let ratio = ball_area(x, p, r) / (r * r);
            if ratio < a {
                lvl.violations += 1;
            }
            if lvl.min_ratio.is_none_or(|q| ratio < q) {
                lvl.min_ratio = Some(ratio);
                lvl.argmin = Some((p, r));
            }
        }
        levels.push(lvl);
    }
    let no_data = levels.iter().all(|l| l.samples == 0);
    RegularityReport { a, levels, no_data }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub lo: P3,
    pub hi: P3,
    pub limit_area: f64,
    pub liminf: f64,
    pub limsup: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LscReport {
    pub windows: Vec<WindowCheck>,
}

impl LscReport {
    pub fn violations(&self) -> usize {
        self.windows.iter().filter(|w| w.violation).count()
    }
}

/// Compare `S²(X₀ ∩ W)` with the tail infimum of `S²(X_k ∩ W)` over the
/// second half of the sequence.
pub fn lsc_check(seq: &[FaceComplex], x0: &FaceComplex, windows: &[(P3, P3)], tol: f64) -> LscReport {
    let tail = &seq[seq.len() / 2..];
    let windows = windows
        .iter()
        .map(|&(lo, hi)| {
            let limit_area = box_area(x0, lo, hi);
            let vals: Vec<f64> = tail.iter().map(|x| box_area(x, lo, hi)).collect();
            let liminf = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let limsup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let violation = !vals.is_empty() && limit_area > liminf * (1.0 + tol) + tol;
            WindowCheck { lo, hi, limit_area, liminf, limsup, violation }
        })
        .collect();
    LscReport { windows }
}

/// Tail-infimum density estimate of β over sampled `Γ` balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: Option<f64>,
    pub worst_ball: Option<(P3, f64)>,
    pub balls: usize,
}

pub fn beta_estimate(
    seq: &[FaceComplex],
    m: &BoundarySystem,
    u: &Region,
    r_min: f64,
    r_max: f64,
    budget: usize,
    seed: u64,
) -> BetaEstimate {
    let Some(last) = seq.last() else {
        return BetaEstimate { beta: None, worst_ball: None, balls: 0 };
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let faces: Vec<Face> = last.iter().copied().collect();
    let tail = &seq[seq.len() / 2..];
    let mut best: Option<(f64, (P3, f64))> = None;
    let mut balls = 0;
    for _ in 0..budget {
        let Some((p, r)) = sample_gamma_ball(last, &faces, m, u, r_min, r_max, &mut rng) else { continue };
        balls += 1;
        let liminf = tail.iter().map(|x| ball_area(x, p, r) / (PI * r * r)).fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(b, _)| liminf < b) {
            best = Some((liminf, (p, r)));
        }
    }
    BetaEstimate { beta: best.map(|b| b.0), worst_ball: best.map(|b| b.1), balls }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cone_triangles, rasterize_triangles};
    use crate::linking::circle;
    use proptest::prelude::*;
    use rand::Rng;

    fn plane(n: i32, h: f64) -> FaceComplex {
        let d = GridDomain::new([0.0; 3], h, [n as usize, n as usize, n as usize]).unwrap();
        let k = n / 2;
        FaceComplex::from_faces(d, (1..n - 1).flat_map(|i| (1..n - 1).map(move |j| Face::new(2, [i, j, k])))).unwrap()
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(alpha(0), 1.0);
        assert_eq!(alpha(1), 2.0);
        assert!((alpha(2) - PI).abs() < 1e-15);
        assert!((alpha(3) - 4.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn face_area_is_exact() {
        let d = GridDomain::new([0.0; 3], 0.5, [8, 8, 8]).unwrap();
        let x = FaceComplex::from_faces(d, (0..10).map(|i| Face::new(0, [1, i % 5 + 1, i / 5 + 1]))).unwrap();
        assert_eq!(area(&x), 2.5);
        assert_eq!(area(&FaceComplex::new(x.domain.clone())), 0.0);
    }

    #[test]
    fn disc_rect_matches_closed_forms() {
        // disc fully inside
        assert!((disc_rect_area([0.0, 0.0], 1.0, [-2.0, -2.0], [2.0, 2.0]) - PI).abs() < 1e-14);
        // quarter disc
        assert!((disc_rect_area([0.0, 0.0], 1.0, [0.0, 0.0], [2.0, 2.0]) - PI / 4.0).abs() < 1e-14);
        // half disc
        assert!((disc_rect_area([0.0, 0.0], 1.0, [-2.0, 0.0], [2.0, 2.0]) - PI / 2.0).abs() < 1e-14);
        // square inside the disc
        assert!((disc_rect_area([0.0, 0.0], 2.0, [-1.0, -1.0], [1.0, 1.0]) - 4.0).abs() < 1e-14);
        // circular segment of height 1/2 in the unit disc: acos(1/2) - (1/2)√(3/4)
        let seg = (0.5f64).acos() - 0.5 * 0.75f64.sqrt();
        assert!((disc_rect_area([0.0, 0.0], 1.0, [0.5, -2.0], [2.0, 2.0]) - seg).abs() < 1e-14);
    }

    #[test]
    fn arc_lengths() {
        assert!((circle_rect_length([0.0, 0.0], 1.0, [-2.0, -2.0], [2.0, 2.0]) - TAU).abs() < 1e-14);
        assert!((circle_rect_length([0.0, 0.0], 1.0, [0.0, 0.0], [2.0, 2.0]) - PI / 2.0).abs() < 1e-14);
        assert_eq!(circle_rect_length([5.0, 5.0], 1.0, [0.0, 0.0], [1.0, 1.0]), 0.0);
    }

    #[test]
    fn plane_slice_is_great_circles() {
        let x = plane(32, 1.0 / 16.0);
        let p = [1.0 + 1e-3, 1.0 - 2e-3, 1.0];
        let s = slice(&x, p, 0.5, 64).unwrap();
        for (t, l) in s.radii.iter().zip(&s.lengths) {
            assert!((l - TAU * t).abs() < 1e-9, "{t} {l}");
        }
        assert!((s.f() - PI * 0.25).abs() < 1e-9);
        assert!((ball_area(&x, p, 0.5) - PI * 0.25).abs() < 1e-12);
    }

    #[test]
    fn far_ball_is_empty() {
        let x = plane(16, 1.0 / 8.0);
        let s = slice(&x, [1.0, 1.0, 1.6], 0.5, 8).unwrap();
        assert!(s.lengths.iter().all(|&l| l == 0.0));
        assert_eq!(ball_area(&x, [1.0, 1.0, 1.6], 0.5), 0.0);
        assert!(slice(&x, [1.0; 3], 0.5, 1).is_err());
    }

    #[test]
    fn flat_density_is_one() {
        let x = plane(32, 1.0 / 16.0);
        let u = Region::of_domain(&x.domain);
        let m = BoundarySystem { components: vec![] };
        let t = density_ratios(&x, &m, &u, &[([1.0, 1.0, 1.0], 0.5), ([1.0, 1.0, 1.6], 0.3)]).unwrap();
        assert!((t.rows[0].ratio - 1.0).abs() < 1e-12);
        assert_eq!(t.rows[1].ratio, 0.0);
        assert!(t.to_csv().starts_with("p_x,p_y,p_z,r,ratio\n1,1,1,0.5,1\n"));
        assert!(density_ratios(&x, &m, &u, &[([1.0, 1.0, 1.0], 1.5)]).is_err());
    }

    #[test]
    fn triple_junction_density() {
        // half-planes {x=0,y≥0}, {y=0,x≥0}, {y=0,x≤0} meeting along the z axis
        let h = 1.0 / 16.0;
        let d = GridDomain::new([-2.0; 3], h, [64, 64, 64]).unwrap();
        let mut faces = Vec::new();
        for i in 2..62 {
            for k in 2..62 {
                if i >= 32 {
                    faces.push(Face::new(0, [32, i, k]));
                }
                faces.push(Face::new(1, [i, 32, k]));
            }
        }
        let x = FaceComplex::from_faces(d, faces).unwrap();
        let r = ball_area(&x, [0.0, 0.0, 0.0], 1.0) / PI;
        assert!((r - 1.5).abs() < 1e-12, "{r}");
    }

    #[test]
    fn spherical_estimates() {
        assert_eq!(spherical_upper(&[[0.3, 0.1, 0.0]], 0, 0.1), 1.0);
        let seg: Vec<P3> = (0..=2000).map(|i| [i as f64 / 2000.0, 0.0, 0.0]).collect();
        let l = spherical_upper(&seg, 1, 0.1);
        assert!((l - 1.0).abs() < 0.1, "{l}");
        let sq: Vec<P3> = (0..200)
            .flat_map(|i| (0..200).map(move |j| [(i as f64 + 0.5) / 200.0, (j as f64 + 0.5) / 200.0, 0.0]))
            .collect();
        let a = spherical_upper(&sq, 2, 0.1);
        assert!((a - 1.0).abs() < 0.15, "{a}");
        let hu = hausdorff_upper(&sq, 2, 0.1);
        assert!(1.0 <= a * 1.15 && a <= 4.0 * hu, "{a} {hu}");
    }

    #[test]
    fn rasterized_disk_area() {
        let h = 1.0 / 64.0;
        let c = circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 128).unwrap();
        let d = GridDomain::around([-1.0; 3], [1.0; 3], h, 4.0 * h).unwrap();
        let x = rasterize_triangles(&d, &cone_triangles([0.0; 3], c.vertices()));
        assert!((area(&x) / PI - 1.0).abs() < 0.05);
    }

    #[test]
    fn regularity_flags_tentacles() {
        let x = plane(32, 1.0 / 16.0);
        let u = Region::of_domain(&x.domain);
        let m = BoundarySystem { components: vec![] };
        let seq = vec![x.clone(), x.clone(), x.clone()];
        let rep = reifenberg_regular_check(&seq, &m, &u, 0.5, Some(&[0.1, 0.1, 0.1]), 0.4, 50, 1);
        assert!(!rep.no_data && !rep.violated());
        let d = x.domain.clone();
        let hair = FaceComplex::from_faces(d, (4..28).map(|k| Face::new(0, [16, 16, k]))).unwrap();
        let rep = reifenberg_regular_check(&[hair], &m, &u, 0.5, Some(&[0.2]), 0.5, 50, 1);
        assert!(rep.violated());
        let rep = reifenberg_regular_check(&seq, &m, &u, 0.5, None, 0.4, 0, 1);
        assert!(rep.no_data);
    }

    #[test]
    fn lsc_windows() {
        let x = plane(32, 1.0 / 16.0);
        let w = [([0.5, 0.5, 0.9], [1.5, 1.5, 1.1])];
        let r = lsc_check(&[x.clone(), x.clone()], &x, &w, 1e-9);
        assert_eq!(r.violations(), 0);
        assert!((r.windows[0].limit_area - 1.0).abs() < 1e-12);
        // mass escaping the window: liminf drops, the limit keeps its own mass
        let empty = FaceComplex::new(x.domain.clone());
        let r = lsc_check(&[x.clone(), x.clone()], &empty, &w, 1e-9);
        assert_eq!(r.violations(), 0);
        assert!(r.windows[0].limsup > r.windows[0].limit_area);
        let r = lsc_check(&[empty.clone(), empty], &x, &w, 1e-9);
        assert_eq!(r.violations(), 1);
    }

    proptest! {
        #[test]
        fn slicing_inequality_random_faces(seed in 0u64..500, px in 0.6f64..1.4, py in 0.6f64..1.4, pz in 0.6f64..1.4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = 1.0 / 32.0;
            let d = GridDomain::new([0.0; 3], h, [64, 64, 64]).unwrap();
            let faces: Vec<Face> = (0..300)
                .map(|_| Face::new(rng.gen_range(0..3), [rng.gen_range(10..54), rng.gen_range(10..54), rng.gen_range(10..54)]))
                .collect();
            let x = FaceComplex::from_faces(d, faces).unwrap();
            let p = [px, py, pz];
            let r = 0.5;
            let s = slice(&x, p, r, 64).unwrap();
            prop_assert!(s.f() <= ball_area(&x, p, r) * 1.02 + 1e-12);
            prop_assert!(s.cumulative.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
