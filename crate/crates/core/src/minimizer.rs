//! Discrete area minimization over spanning face complexes.
//!
//! Candidates come from three sources: the cone baseline, minimum-mass
//! integer chains in a fixed homology class (max-flow on the dual cube
//! graph), and a strict-descent local search whose moves are the surgeries of
//! [`crate::constructions`]. Every accepted state is re-certified.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{apply_surgery, haircut, HaircutOptions, Surgery, SurgeryRecord};
use crate::error::{Error, Result};
use crate::geometry::{dist, hull_distance, point_segment_dist, tri_area, P3};
use crate::grid::{
    band_triangles, cone_triangles, cube_faces, rasterize_signed, rasterize_triangles, Face, FaceComplex, GridDomain,
    Triangle,
};
use crate::linking::{loop_distance, BoundarySystem, Loop};
use crate::measure::{
    alpha, beta_estimate, lsc_check, reifenberg_regular_check, BetaEstimate, LscReport, Region, RegularityReport,
};
use crate::spanning::{certifier_visible, certify_spanning, collar_cubes, region_touches, CertifyOptions, SpanStatus};

// ---------------------------------------------------------------------------
// Brackets

/// `c₀ = diam(U)·Σ H¹(M_i)`.
pub fn c0(m: &BoundarySystem, u: &GridDomain) -> f64 {
    u.diameter() * m.total_length()
}

/// Largest discrete curvature `2 sin(θ/2)/√(l₋l₊)` over the vertices of a
/// polygon; exact (= 1/R) on regular polygons inscribed in a circle of radius R.
pub fn curvature_bound(l: &Loop) -> f64 {
    let v = l.vertices();
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            let (u, w) = (crate::geometry::sub(b, a), crate::geometry::sub(c, b));
            let (lu, lw) = (crate::geometry::norm(u), crate::geometry::norm(w));
            let cos = (crate::geometry::dot(u, w) / (lu * lw)).clamp(-1.0, 1.0);
            2.0 * (0.5 * cos.acos()).sin() / (lu * lw).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Area constant of the nearest-point projection onto `M_i` restricted to
/// the ε-tube: `(1 + εκ)²`.
pub fn tube_constant(l: &Loop, eps: f64) -> f64 {
    (1.0 + eps * curvature_bound(l)).powi(2)
}

/// `a₀ = α₂ε²/C`: area any spanning set must place inside the ε-tube of `M_i`.
pub fn lower_bound_a0(m: &BoundarySystem, i: usize, eps: f64) -> Result<f64> {
    let l = m.components.get(i).ok_or_else(|| Error::Precondition(format!("no component {i}")))?;
    if !(eps > 0.0) {
        return Err(Error::Precondition("tube radius must be positive".into()));
    }
    if eps * curvature_bound(l) >= 1.0 {
        return Err(Error::Precondition(format!("ε = {eps} exceeds the curvature radius")));
    }
    for (j, other) in m.components.iter().enumerate() {
        if j != i && eps >= 0.5 * loop_distance(l, other).0 {
            return Err(Error::Precondition(format!("ε = {eps} exceeds half the distance to component {j}")));
        }
    }
    Ok(alpha(2) * eps * eps / tube_constant(l, eps))
}

/// Tube radius used for the bracket: half the admissible maximum.
pub fn default_tube_radius(m: &BoundarySystem) -> f64 {
    let mut eps = f64::INFINITY;
    for (i, l) in m.components.iter().enumerate() {
        eps = eps.min(1.0 / curvature_bound(l));
        for other in &m.components[i + 1..] {
            eps = eps.min(0.5 * loop_distance(l, other).0);
        }
    }
    0.5 * eps
}

/// Sum of the per-component bounds; the tubes are disjoint.
pub fn a0_total(m: &BoundarySystem) -> Result<f64> {
    let eps = default_tube_radius(m);
    (0..m.len()).map(|i| lower_bound_a0(m, i, eps)).sum()
}

/// Allowance for rasterizing a polyhedral surface of area `a` spanning a
/// curve of length `l`: cubical area is at most √3 times the area, plus a
/// boundary strip.
pub fn raster_slack(polyhedral_area: f64, length: f64, h: f64) -> f64 {
    (3f64.sqrt() - 1.0) * polyhedral_area + 2.0 * h * length
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub apex: P3,
    pub complex: FaceComplex,
    pub area: f64,
    pub polyhedral_area: f64,
    pub c0: f64,
    pub slack: f64,
}

pub fn centroid(m: &BoundarySystem) -> P3 {
    let mut c = [0.0; 3];
    let mut n = 0.0;
    for p in m.vertices() {
        c = crate::geometry::add(c, p);
        n += 1.0;
    }
    crate::geometry::scale(c, 1.0 / n)
}

/// Rasterized cone `C_q(M)`, certified.
pub fn cone_baseline(m: &BoundarySystem, q: P3, d: &GridDomain, opts: &CertifyOptions) -> Result<Baseline> {
    let hull: Vec<P3> = m.vertices().collect();
    if hull_distance(&hull, q) > 1e-9 * d.diameter() {
        return Err(Error::Precondition("cone apex outside the convex hull of M".into()));
    }
    let tris: Vec<Triangle> = m.components.iter().flat_map(|l| cone_triangles(q, l.vertices())).collect();
    let polyhedral_area = tris.iter().map(|t| tri_area(t[0], t[1], t[2])).sum();
    let complex = rasterize_triangles(d, &tris);
    let v = certify_spanning(&complex, m, opts)?;
    if v.status != SpanStatus::Spans {
        return Err(Error::Certification("cone baseline does not span; grid too coarse".into()));
    }
    Ok(Baseline {
        apex: q,
        area: complex.area(),
        complex,
        polyhedral_area,
        c0: c0(m, d),
        slack: raster_slack(polyhedral_area, m.total_length(), d.h),
    })
}

// ---------------------------------------------------------------------------
// Max-flow

struct Flow {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<i64>,
}

impl Flow {
    fn new(n: usize) -> Flow {
        Flow { adj: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn add(&mut self, a: usize, b: usize, ab: i64, ba: i64) {
        let e = self.to.len() as u32;
        self.to.push(b as u32);
        self.cap.push(ab);
        self.to.push(a as u32);
        self.cap.push(ba);
        self.adj[a].push(e);
        self.adj[b].push(e + 1);
    }

    fn levels(&self, s: usize) -> Vec<i32> {
        let mut level = vec![-1; self.adj.len()];
        let mut queue = std::collections::VecDeque::from([s]);
        level[s] = 0;
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// Dinic's algorithm.
    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        loop {
            let mut level = self.levels(s);
            if level[t] < 0 {
                return total;
            }
            let mut it = vec![0usize; self.adj.len()];
            let mut stack: Vec<usize> = Vec::new();
            let mut u = s;
            loop {
                if u == t {
                    let f = stack.iter().map(|&e| self.cap[e]).min().expect("path");
                    for &e in &stack {
                        self.cap[e] -= f;
                        self.cap[e ^ 1] += f;
                    }
                    total += f;
                    let k = stack.iter().position(|&e| self.cap[e] == 0).expect("saturated edge");
                    stack.truncate(k);
                    u = if k == 0 { s } else { self.to[stack[k - 1]] as usize };
                    continue;
                }
                let mut advanced = false;
                while it[u] < self.adj[u].len() {
                    let e = self.adj[u][it[u]] as usize;
                    let v = self.to[e] as usize;
                    if self.cap[e] > 0 && level[v] == level[u] + 1 {
                        stack.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    it[u] += 1;
                }
                if !advanced {
                    if u == s {
                        break;
                    }
                    level[u] = -1;
                    let e = stack.pop().expect("nonempty path");
                    u = self.to[e ^ 1] as usize;
                    it[u] += 1;
                }
            }
        }
    }

    fn source_side(&self, s: usize) -> Vec<bool> {
        self.levels(s).into_iter().map(|l| l >= 0).collect()
    }
}

// ---------------------------------------------------------------------------
// Minimum-mass chains

/// Integer 2-chain on the faces of a grid; the coefficient of a face is the
/// signed crossing number of its dual segment oriented along `+axis`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceChain {
    pub domain: GridDomain,
    pub coeffs: BTreeMap<Face, i32>,
}

impl FaceChain {
    pub fn mass(&self) -> f64 {
        self.coeffs.values().map(|c| c.unsigned_abs() as f64).sum::<f64>() * self.domain.h * self.domain.h
    }

    pub fn support(&self) -> FaceComplex {
        FaceComplex::from_faces(self.domain.clone(), self.coeffs.iter().filter(|(_, &c)| c != 0).map(|(f, _)| *f))
            .expect("chain faces lie in the domain")
    }
}

fn cube_id(d: &GridDomain, c: [i64; 3]) -> Option<usize> {
    d.has_cube(c).then(|| ((c[0] as usize * d.dims[1]) + c[1] as usize) * d.dims[2] + c[2] as usize)
}

fn all_faces(d: &GridDomain) -> impl Iterator<Item = Face> + '_ {
    (0..3).flat_map(move |a| {
        let n = [d.dims[0] + (a == 0) as usize, d.dims[1] + (a == 1) as usize, d.dims[2] + (a == 2) as usize];
        (0..n[0]).flat_map(move |i| {
            (0..n[1]).flat_map(move |j| (0..n[2]).map(move |k| Face::new(a, [i as i32, j as i32, k as i32])))
        })
    })
}

/// One steepest step `S ↦ S + sgn·δχ_A` with `A` chosen by a minimum cut.
fn descent_step(chain: &FaceChain, sgn: i32) -> FaceChain {
    let d = &chain.domain;
    let n = d.cube_count();
    let (s, t) = (n, n + 1);
    let mut g = Flow::new(n + 2);
    let mut unary = vec![0i64; n];
    for f in all_faces(d) {
        let c = sgn * chain.coeffs.get(&f).copied().unwrap_or(0);
        let (neg, pos) = f.cubes();
        match (cube_id(d, neg), cube_id(d, pos)) {
            (Some(a), Some(b)) => match c {
                0 => g.add(a, b, 1, 1),
                c if c > 0 => {
                    unary[b] += 1;
                    unary[a] -= 1;
                }
                _ => {
                    unary[b] -= 1;
                    unary[a] += 1;
                }
            },
            (None, Some(b)) => unary[b] += ((c + 1).abs() - c.abs()) as i64,
            (Some(a), None) => unary[a] += ((c - 1).abs() - c.abs()) as i64,
            (None, None) => {}
        }
    }
    // positive unary cost is paid when the cube joins A (source side)
    for (i, &u) in unary.iter().enumerate() {
        if u > 0 {
            g.add(i, t, u, 0);
        } else if u < 0 {
            g.add(s, i, -u, 0);
        }
    }
    g.max_flow(s, t);
    let side = g.source_side(s);
    let mut coeffs = chain.coeffs.clone();
    for f in all_faces(d) {
        let (neg, pos) = f.cubes();
        let x = |c| cube_id(d, c).map_or(0, |i| side[i] as i32);
        let delta = x(pos) - x(neg);
        if delta != 0 {
            let e = coeffs.entry(f).or_insert(0);
            *e += sgn * delta;
            if *e == 0 {
                coeffs.remove(&f);
            }
        }
    }
    FaceChain { domain: d.clone(), coeffs }
}

/// Minimum-mass chain homologous to `chain` with the same boundary. The
/// mass is an L♮-convex function of the 3-chain added, so alternating
/// `±χ_A` cut steps stop at the global minimum.
pub fn min_mass_chain(chain: &FaceChain, max_rounds: usize) -> (FaceChain, usize) {
    let mut cur = chain.clone();
    let mut rounds = 0;
    let mut stalled = 0;
    let mut sgn = 1;
    while rounds < max_rounds && stalled < 2 {
        let next = descent_step(&cur, sgn);
        rounds += 1;
        if next.mass() < cur.mass() - 1e-12 * cur.domain.h * cur.domain.h {
            cur = next;
            stalled = 0;
        } else {
            stalled += 1;
        }
        sgn = -sgn;
    }
    (cur, rounds)
}

pub fn signed_chain(d: &GridDomain, tris: &[Triangle]) -> FaceChain {
    FaceChain { domain: d.clone(), coeffs: rasterize_signed(d, tris) }
}

/// Minimum-mass surface for a single boundary curve, seeded by the cone
/// from its centroid.
pub fn mincut_exact(m: &BoundarySystem, d: &GridDomain, opts: &CertifyOptions) -> Result<FaceComplex> {
    if m.len() != 1 {
        return Err(Error::Precondition(format!("mincut_exact needs one component, got {}", m.len())));
    }
    let l = &m.components[0];
    let seed = signed_chain(d, &cone_triangles(l.centroid(), l.vertices()));
    if seed.coeffs.is_empty() {
        return Err(Error::Precondition("seed disk does not rasterize".into()));
    }
    let x = min_mass_chain(&seed, 64).0.support();
    let v = certify_spanning(&x, m, opts)?;
    if v.status != SpanStatus::Spans {
        return Err(Error::Certification("minimum cut does not span".into()));
    }
    Ok(x)
}

/// Resample a loop at `n` points equally spaced in arclength.
pub fn resample(l: &Loop, n: usize) -> Vec<P3> {
    (0..n).map(|k| l.point_at(k as f64 / n as f64).0).collect()
}

/// Ruled band from `a` to `b` with the cyclic alignment of least total
/// rung length; `b` may be reversed if that is shorter.
pub fn band_between(a: &Loop, b: &Loop) -> Result<Vec<Triangle>> {
    let n = a.len().max(b.len()).max(128);
    let pa = resample(a, n);
    let mut best: Option<(f64, Vec<P3>)> = None;
    for rev in [false, true] {
        let mut pb = resample(b, n);
        if rev {
            pb.reverse();
        }
        for k in 0..n {
            let cost: f64 = (0..n).map(|i| dist(pa[i], pb[(i + k) % n])).sum();
            if best.as_ref().is_none_or(|(c, _)| cost < *c - 1e-12) {
                best = Some((cost, (0..n).map(|i| pb[(i + k) % n]).collect()));
            }
        }
    }
    band_triangles(&pa, &best.expect("n > 0").1)
}

// ---------------------------------------------------------------------------
// Partition candidates

/// Set partitions of `0..k` in restricted-growth order.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, k: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == k {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            go(i + 1, k, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        go(i + 1, k, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum spanning tree of a block under loop distance (Prim, ties by index).
fn block_tree(m: &BoundarySystem, block: &[usize]) -> Vec<(usize, usize)> {
    let mut inside = vec![block[0]];
    let mut edges = Vec::new();
    while inside.len() < block.len() {
        let mut best: Option<(f64, usize, usize)> = None;
        for &i in &inside {
            for &j in block.iter().filter(|j| !inside.contains(j)) {
                let dd = loop_distance(&m.components[i], &m.components[j]).0;
                if best.is_none_or(|b| dd < b.0) {
                    best = Some((dd, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("block not exhausted");
        edges.push((i.min(j), i.max(j)));
        inside.push(j);
    }
    edges
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub blocks: Vec<Vec<usize>>,
    pub complex: FaceComplex,
    pub area: f64,
    pub status: SpanStatus,
}

/// For every partition of the components: each singleton gets its
/// minimum-mass disk, each larger block the union of minimum-mass surfaces
/// between loops joined in its distance tree. Candidates are certified.
pub fn partition_candidates(m: &BoundarySystem, d: &GridDomain, opts: &CertifyOptions) -> Result<Vec<Candidate>> {
    let k = m.len();
    let partitions =
        if k <= 5 { set_partitions(k) } else { vec![(0..k).map(|i| vec![i]).collect(), vec![(0..k).collect()]] };
    let mut disks = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    for p in &partitions {
        for b in p {
            if b.len() == 1 {
                disks.insert(b[0]);
            } else {
                pairs.extend(block_tree(m, b));
            }
        }
    }
    let disk_cuts: BTreeMap<usize, FaceComplex> = disks
        .par_iter()
        .map(|&i| {
            let l = &m.components[i];
            (i, min_mass_chain(&signed_chain(d, &cone_triangles(l.centroid(), l.vertices())), 64).0.support())
        })
        .collect();
    let pair_cuts: BTreeMap<(usize, usize), FaceComplex> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let tris = band_between(&m.components[i], &m.components[j])?;
            Ok(((i, j), min_mass_chain(&signed_chain(d, &tris), 64).0.support()))
        })
        .collect::<Result<_>>()?;
    partitions
        .par_iter()
        .map(|p| {
            let mut x = FaceComplex::new(d.clone());
            for b in p {
                if b.len() == 1 {
                    x = x.union(&disk_cuts[&b[0]]);
                } else {
                    for e in block_tree(m, b) {
                        x = x.union(&pair_cuts[&e]);
                    }
                }
            }
            let status = certify_spanning(&x, m, opts)?.status;
            Ok(Candidate { blocks: p.clone(), area: x.area(), complex: x, status })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Topology classification

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    /// Groups of boundary components joined by the complex, sorted.
    pub blocks: Vec<Vec<usize>>,
    /// Face components touching no boundary component.
    pub floating: usize,
    pub face_components: usize,
}

/// Face-adjacency components, each tagged with the boundary components it
/// reaches (face center within 1.5h); components sharing a boundary curve
/// are joined.
pub fn classify_topology(x: &FaceComplex, m: &BoundarySystem) -> Topology {
    let d = &x.domain;
    let comps = x.components();
    let mut parent: Vec<usize> = (0..m.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut touched = vec![false; m.len()];
    let mut floating = 0;
    for comp in &comps {
        let mut inc = BTreeSet::new();
        for f in comp {
            let c = f.center(d);
            for (i, l) in m.components.iter().enumerate() {
                if l.segments().any(|(a, b)| point_segment_dist(c, a, b) <= 1.5 * d.h) {
                    inc.insert(i);
                }
            }
        }
        if inc.is_empty() {
            floating += 1;
            continue;
        }
        let v: Vec<usize> = inc.into_iter().collect();
        for &i in &v {
            touched[i] = true;
        }
        for w in v.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..m.len() {
        if touched[i] {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
    }
    Topology { blocks: groups.into_values().collect(), floating, face_components: comps.len() }
}

/// Largest distance from a face corner of `X` to the convex hull of `M`.
pub fn hull_excess(x: &FaceComplex, m: &BoundarySystem) -> f64 {
    let hull: Vec<P3> = m.vertices().collect();
    let corners: BTreeSet<[i32; 3]> = x.iter().flat_map(|f| f.corner_indices()).collect();
    corners.par_iter().map(|c| hull_distance(&hull, x.domain.vertex(c.map(|v| v as i64)))).reduce(|| 0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Catenoid

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catenoid {
    /// Neck radius.
    pub a: f64,
    pub area: f64,
}

/// Stable catenoid `r(z) = a cosh(z/a)` spanning two coaxial circles of
/// radius `radius` at distance `sep`, if one exists.
pub fn catenoid(sep: f64, radius: f64) -> Option<Catenoid> {
    if !(sep > 0.0 && radius > 0.0) {
        return None;
    }
    // t tanh t = 1 at the fold
    let mut ts = 1.2f64;
    for _ in 0..50 {
        let g = ts * ts.tanh() - 1.0;
        let dg = ts.tanh() + ts / ts.cosh().powi(2);
        ts -= g / dg;
    }
    // radius = a cosh(t) with t = sep/(2a)
    let g = |t: f64| sep * t.cosh() - 2.0 * t * radius;
    if g(ts) > 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, ts);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let a = sep / (2.0 * t);
    Some(Catenoid { a, area: PI * a * (sep + a * (sep / a).sinh()) })
}

/// `(area, connected)` of the better of the catenoid and the two disks.
pub fn coaxial_best(sep: f64, radius: f64) -> (f64, bool) {
    let disks = 2.0 * PI * radius * radius;
    match catenoid(sep, radius) {
        Some(c) if c.area < disks => (c.area, true),
        _ => (disks, false),
    }
}

// ---------------------------------------------------------------------------
// Local search

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    FaceDelete,
    CubeCollapse,
    CutAndCone,
    GridSquash,
    Haircut,
    HullClamp,
}

impl MoveKind {
    pub const ALL: [MoveKind; 6] = [
        MoveKind::FaceDelete,
        MoveKind::CubeCollapse,
        MoveKind::CutAndCone,
        MoveKind::GridSquash,
        MoveKind::Haircut,
        MoveKind::HullClamp,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub moves: Vec<MoveKind>,
    /// Maximum number of certifications.
    pub budget: usize,
    pub max_accepted: usize,
    /// Random proposals per round for the sampled moves.
    pub samples: usize,
    pub seed: u64,
    pub kn: f64,
    pub certify: CertifyOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            moves: MoveKind::ALL.to_vec(),
            budget: 400,
            max_accepted: 200,
            samples: 8,
            seed: 0,
            kn: 1.0,
            certify: CertifyOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    pub initial: FaceComplex,
    pub current: FaceComplex,
    pub area: f64,
    pub seed: u64,
    pub log: Vec<SurgeryRecord>,
    #[serde(skip)]
    pub cache: HashMap<u64, SpanStatus>,
    pub certifications: usize,
    pub accepted: usize,
    /// Every proposal of the exhaustive moves was tried and rejected.
    pub local_minimum: bool,
    pub trace: Vec<f64>,
}

pub fn complex_hash(x: &FaceComplex) -> u64 {
    let mut h = DefaultHasher::new();
    x.faces().hash(&mut h);
    h.finish()
}

impl SearchState {
    fn status(&mut self, x: &FaceComplex, m: &BoundarySystem, opts: &CertifyOptions) -> Result<SpanStatus> {
        let key = complex_hash(x);
        if let Some(&s) = self.cache.get(&key) {
            return Ok(s);
        }
        self.certifications += 1;
        let s = certify_spanning(x, m, opts)?.status;
        self.cache.insert(key, s);
        Ok(s)
    }

    /// Re-apply the move log to the initial complex.
    pub fn replay(&self, m: &BoundarySystem) -> Result<FaceComplex> {
        crate::constructions::replay(&self.initial, m, &self.log)
    }
}

fn proposals(
    x: &FaceComplex,
    m: &BoundarySystem,
    opts: &SearchOptions,
    rng: &mut ChaCha8Rng,
    haircut_done: bool,
) -> Vec<Surgery> {
    let d = &x.domain;
    let collar = collar_cubes(d, m);
    let mut out = Vec::new();
    for kind in &opts.moves {
        match kind {
            MoveKind::FaceDelete => {
                out.extend(certifier_visible(x, m).into_iter().map(|face| Surgery::FaceDelete { face }));
            }
            MoveKind::CubeCollapse => {
                let mut count: BTreeMap<[i64; 3], usize> = BTreeMap::new();
                for f in x.iter() {
                    let (a, b) = f.cubes();
                    for c in [a, b] {
                        if d.has_cube(c) {
                            *count.entry(c).or_insert(0) += 1;
                        }
                    }
                }
                for (c, k) in count {
                    if k >= 4 && !region_touches(&BTreeSet::from([c]), &collar) {
                        out.push(Surgery::CubeFlip { cube: c });
                    }
                }
            }
            MoveKind::CutAndCone => {
                let faces: Vec<&Face> = x.iter().collect();
                for _ in 0..opts.samples {
                    if faces.is_empty() {
                        break;
                    }
                    let p = faces[rng.gen_range(0..faces.len())].center(d);
                    let r = d.h * rng.gen_range(2.0..6.0);
                    if m.distance(p) > r + 1e-9 {
                        out.push(Surgery::CutAndCone { p, r, apex: p });
                    }
                }
            }
            MoveKind::GridSquash => {
                let faces: Vec<&Face> = x.iter().collect();
                for _ in 0..opts.samples {
                    if faces.is_empty() {
                        break;
                    }
                    let (_, c) = faces[rng.gen_range(0..faces.len())].cubes();
                    let size = rng.gen_range(2..=4i64);
                    let lo = c.map(|v| v - rng.gen_range(0..size));
                    let inside = (0..3).all(|k| lo[k] >= 0 && (lo[k] + size) as usize <= d.dims[k]);
                    if inside && !region_touches(&crate::constructions::box_cubes(lo, size), &collar) {
                        out.push(Surgery::GridSquash { lo, size, kn: opts.kn });
                    }
                }
            }
            MoveKind::Haircut => {
                if !haircut_done {
                    out.push(Surgery::Collapse { margin: 1, max_steps: usize::MAX });
                }
            }
            MoveKind::HullClamp => out.push(Surgery::HullClamp),
        }
    }
    out
}

fn is_exhaustive(s: &Surgery) -> bool {
    matches!(s, Surgery::FaceDelete { .. } | Surgery::CubeFlip { .. } | Surgery::HullClamp | Surgery::Collapse { .. })
}

/// Strict-descent search. Each round evaluates all proposals, sorts the
/// improving ones by (area, proposal order) and accepts the first that
/// certifies.
pub fn local_search(m: &BoundarySystem, init: &FaceComplex, opts: &SearchOptions) -> Result<SearchState> {
    let mut state = SearchState {
        initial: init.clone(),
        current: init.clone(),
        area: init.area(),
        seed: opts.seed,
        log: Vec::new(),
        cache: HashMap::new(),
        certifications: 0,
        accepted: 0,
        local_minimum: false,
        trace: vec![init.area()],
    };
    if state.status(init, m, &opts.certify)? != SpanStatus::Spans {
        return Err(Error::Certification("initial complex does not span".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut haircut_done = !opts.moves.contains(&MoveKind::Haircut);
    if !haircut_done {
        // the haircut pass runs first and only once
        let ho = HaircutOptions { kn: opts.kn, certify: opts.certify.clone(), ..Default::default() };
        let out = haircut(&state.current, m, &ho)?;
        haircut_done = true;
        if out.complex.area() < state.area {
            state.log.extend(out.records);
            state.current = out.complex;
            state.area = state.current.area();
            state.accepted += 1;
            state.trace.push(state.area);
        }
    }
    'rounds: while state.accepted < opts.max_accepted && state.certifications < opts.budget {
        let props = proposals(&state.current, m, opts, &mut rng, haircut_done);
        let all_exhaustive = props.iter().all(is_exhaustive);
        let h2 = state.current.domain.h.powi(2);
        let mut scored: Vec<(f64, usize, FaceComplex)> = props
            .par_iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let y = match s {
                    Surgery::FaceDelete { face } => {
                        let mut y = state.current.clone();
                        y.remove(face);
                        y
                    }
                    _ => apply_surgery(&state.current, m, s).ok()?,
                };
                let a = y.area();
                (a < state.area - 1e-9 * h2).then_some((a, i, y))
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (a, i, y) in scored {
            if state.certifications >= opts.budget {
                break 'rounds;
            }
            let before = SpanStatus::Spans;
            let after = state.status(&y, m, &opts.certify)?;
            if after == SpanStatus::Spans {
                state.log.push(SurgeryRecord {
                    surgery: props[i].clone(),
                    area_before: state.area,
                    area_after: a,
                    verdict_before: before,
                    verdict_after: after,
                    note: String::new(),
                });
                state.current = y;
                state.area = a;
                state.accepted += 1;
                state.trace.push(a);
                continue 'rounds;
            }
        }
        state.local_minimum = all_exhaustive;
        if all_exhaustive || props.is_empty() {
            break;
        }
        // sampled moves found nothing this round; draw again until the budget ends
        if !props.iter().any(|s| !is_exhaustive(s)) {
            break;
        }
        state.certifications += 1;
    }
    let final_status = certify_spanning(&state.current, m, &opts.certify)?.status;
    if final_status != SpanStatus::Spans {
        return Err(Error::Certification("final state lost spanning".into()));
    }
    Ok(state)
}

// ---------------------------------------------------------------------------
// Sequence diagnostics

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticOptions {
    /// Lower density constant for the regularity table.
    pub a: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub budget: usize,
    pub seed: u64,
    /// β below `1 − tol` is flagged.
    pub tol: f64,
    /// LSC windows; defaults to the octants of `U`.
    pub windows: Option<Vec<(P3, P3)>>,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        DiagnosticOptions { a: 0.5, r_min: 0.0, r_max: 0.0, budget: 200, seed: 0, tol: 0.1, windows: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub beta: BetaEstimate,
    pub beta_flagged: bool,
    pub regularity: RegularityReport,
    pub lsc: LscReport,
    pub final_area: f64,
    pub areas: Vec<f64>,
}

pub fn octants(u: &Region) -> Vec<(P3, P3)> {
    let mid = [0, 1, 2].map(|k| 0.5 * (u.lo[k] + u.hi[k]));
    (0..8)
        .map(|b: usize| {
            let mut lo = u.lo;
            let mut hi = mid;
            for k in 0..3 {
                if (b >> k) & 1 == 1 {
                    lo[k] = mid[k];
                    hi[k] = u.hi[k];
                }
            }
            (lo, hi)
        })
        .collect()
}

/// β estimate, Reifenberg regularity table and LSC windows for a sequence
/// on a common grid; `r_min`/`r_max` of zero default to `2h` and `16h`.
pub fn sequence_diagnostics(
    states: &[FaceComplex],
    m: &BoundarySystem,
    u: &Region,
    opts: &DiagnosticOptions,
) -> Result<SequenceReport> {
    let last = states.last().ok_or(Error::Empty("sequence"))?;
    let h = last.domain.h;
    if states.iter().any(|x| x.domain != last.domain) {
        return Err(Error::Precondition("sequence must share one grid".into()));
    }
    let r_min = if opts.r_min > 0.0 { opts.r_min } else { 2.0 * h };
    let r_max = if opts.r_max > 0.0 { opts.r_max } else { 16.0 * h };
    let beta = beta_estimate(states, m, u, r_min, r_max, opts.budget, opts.seed);
    let beta_flagged = beta.beta.is_some_and(|b| b < 1.0 - opts.tol);
    let eps: Vec<f64> = vec![r_min; states.len()];
    let regularity = reifenberg_regular_check(states, m, u, opts.a, Some(&eps), r_max, opts.budget, opts.seed ^ 0x9e37);
    let windows = opts.windows.clone().unwrap_or_else(|| octants(u));
    let lsc = lsc_check(states, last, &windows, 1e-9);
    Ok(SequenceReport {
        beta,
        beta_flagged,
        regularity,
        lsc,
        final_area: last.area(),
        areas: states.iter().map(FaceComplex::area).collect(),
    })
}

// ---------------------------------------------------------------------------
// Pipeline

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub search: SearchOptions,
    /// Skip the local search after the cut candidates.
    pub cuts_only: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { search: SearchOptions { budget: 60, ..Default::default() }, cuts_only: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub a0: f64,
    pub area: f64,
    pub baseline: f64,
    pub c0: f64,
    pub slack: f64,
}

impl Bracket {
    pub fn holds(&self) -> bool {
        self.a0 <= self.area && self.area <= self.baseline && self.baseline <= self.c0 + self.slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOutput {
    pub baseline: Baseline,
    pub candidates: Vec<Candidate>,
    /// Index of the best spanning candidate, if it beat the baseline.
    pub start: Option<usize>,
    pub search: SearchState,
    pub best: FaceComplex,
    pub area: f64,
    pub bracket: Bracket,
    pub hull_excess: f64,
    pub topology: Topology,
}

/// Baseline, partition cuts, then local search from the best spanning start.
pub fn minimize(m: &BoundarySystem, d: &GridDomain, opts: &MinimizeOptions) -> Result<MinimizeOutput> {
    let copts = &opts.search.certify;
    let baseline = cone_baseline(m, centroid(m), d, copts)?;
    let candidates = partition_candidates(m, d, copts)?;
    let start = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.status == SpanStatus::Spans && c.area < baseline.area)
        .min_by(|a, b| a.1.area.total_cmp(&b.1.area).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let init = start.map_or(&baseline.complex, |i| &candidates[i].complex);
    let mut sopts = opts.search.clone();
    if opts.cuts_only {
        sopts.moves.clear();
    }
    let search = local_search(m, init, &sopts)?;
    let best = search.current.clone();
    let area = best.area();
    let bracket = Bracket { a0: a0_total(m)?, area, baseline: baseline.area, c0: baseline.c0, slack: baseline.slack };
    Ok(MinimizeOutput {
        hull_excess: hull_excess(&best, m),
        topology: classify_topology(&best, m),
        baseline,
        candidates,
        start,
        search,
        best,
        area,
        bracket,
    })
}

pub fn cube_flip_gain(x: &FaceComplex, c: [i64; 3]) -> i64 {
    cube_faces(c).iter().map(|f| if x.contains(f) { 1 } else { -1 }).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::circle;
    use proptest::prelude::*;
    use rand::Rng;

    fn disk_setup(h: f64) -> (BoundarySystem, GridDomain) {
        let m = BoundarySystem::new(vec![circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 64).unwrap()]).unwrap();
        let (lo, hi) = m.bbox();
        (m, GridDomain::around(lo, hi, h, 6.0 * h).unwrap())
    }

    fn coaxial(sep: f64) -> BoundarySystem {
        BoundarySystem::new(vec![
            circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 96).unwrap(),
            circle([0.0, 0.0, sep], [0.0, 0.0, 1.0], 1.0, 96).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn catenoid_limits() {
        let c = catenoid(1e-4, 1.0).unwrap();
        assert!((c.area - 2.0 * PI * 1e-4).abs() < 1e-9);
        assert!(catenoid(1.4, 1.0).is_none());
        // neck matches the boundary
        let c = catenoid(1.0, 1.0).unwrap();
        assert!((c.a * (0.5 / c.a).cosh() - 1.0).abs() < 1e-12);
        assert!(coaxial_best(0.3, 1.0).1);
        assert!(!coaxial_best(2.0, 1.0).1);
    }

    #[test]
    fn a0_for_unit_circle() {
        let (m, _) = disk_setup(0.1);
        assert!((curvature_bound(&m.components[0]) - 1.0).abs() < 1e-12);
        let a0 = lower_bound_a0(&m, 0, 0.1).unwrap();
        assert!(a0 >= 0.0259);
        assert!(lower_bound_a0(&m, 0, 0.05).unwrap() < a0);
        assert!(lower_bound_a0(&m, 0, 1.5).is_err());
    }

    #[test]
    fn c0_for_unit_circle() {
        let (m, _) = disk_setup(0.1);
        let u = GridDomain::new([-1.0; 3], 4.0 / 3f64.sqrt() / 2.0, [2, 2, 2]).unwrap();
        assert!((c0(&m, &u) - 4.0 * m.total_length()).abs() < 1e-12);
    }

    #[test]
    fn baseline_disk_area() {
        let (m, d) = disk_setup(1.0 / 32.0);
        let b = cone_baseline(&m, [0.0; 3], &d, &CertifyOptions::default()).unwrap();
        assert!((b.area - PI).abs() / PI < 0.05, "{}", b.area);
        assert!(b.area <= b.c0 + b.slack);
        assert!(cone_baseline(&m, [0.0, 0.0, 0.5], &d, &CertifyOptions::default()).is_err());
    }

    #[test]
    fn mincut_of_planar_circle_is_flat() {
        let (m, d) = disk_setup(1.0 / 16.0);
        let x = mincut_exact(&m, &d, &CertifyOptions::default()).unwrap();
        let b = cone_baseline(&m, [0.0; 3], &d, &CertifyOptions::default()).unwrap();
        assert!(x.area() <= b.area);
        assert!(x.iter().all(|f| f.axis() == 2));
        assert!(mincut_exact(&coaxial(0.5), &d, &CertifyOptions::default()).is_err());
    }

    #[test]
    fn mincut_beats_cone_for_wavy_circle() {
        let pts: Vec<P3> = (0..128)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 128.0;
                [t.cos(), t.sin(), 0.2 * (3.0 * t).sin()]
            })
            .collect();
        let m = BoundarySystem::new(vec![Loop::new(pts).unwrap()]).unwrap();
        let (lo, hi) = m.bbox();
        let d = GridDomain::around(lo, hi, 1.0 / 16.0, 6.0 / 16.0).unwrap();
        let x = mincut_exact(&m, &d, &CertifyOptions::default()).unwrap();
        let b = cone_baseline(&m, centroid(&m), &d, &CertifyOptions::default()).unwrap();
        assert!(x.area() <= b.area);
    }

    #[test]
    fn coaxial_pair_switches_topology() {
        let h = 1.0 / 12.0;
        for (sep, connected) in [(0.4, true), (2.0, false)] {
            let m = coaxial(sep);
            let (lo, hi) = m.bbox();
            let d = GridDomain::around(lo, hi, h, 6.0 * h).unwrap();
            let out = minimize(&m, &d, &MinimizeOptions { cuts_only: true, ..Default::default() }).unwrap();
            assert!(out.bracket.holds(), "{:?}", out.bracket);
            assert_eq!(out.topology.blocks.len() == 1, connected, "sep {sep}: {:?}", out.topology);
            assert!(out.hull_excess <= 3f64.sqrt() * h);
        }
    }

    #[test]
    fn waist_no_worse_than_rasterized_cylinder() {
        let h = 1.0 / 12.0;
        let m = coaxial(0.4);
        let (lo, hi) = m.bbox();
        let d = GridDomain::around(lo, hi, h, 6.0 * h).unwrap();
        let cyl = rasterize_triangles(&d, &band_between(&m.components[0], &m.components[1]).unwrap());
        let out = minimize(&m, &d, &MinimizeOptions { cuts_only: true, ..Default::default() }).unwrap();
        assert!(out.area <= cyl.area());
        assert!(out.area < 2.0 * PI);
    }

    #[test]
    fn disk_accepts_no_face_deletion() {
        let (m, d) = disk_setup(1.0 / 8.0);
        let x = mincut_exact(&m, &d, &CertifyOptions::default()).unwrap();
        let opts = SearchOptions { moves: vec![MoveKind::FaceDelete], budget: 10_000, ..Default::default() };
        let s = local_search(&m, &x, &opts).unwrap();
        assert_eq!(s.accepted, 0);
        assert!(s.local_minimum);
        assert_eq!(s.current, x);
    }

    #[test]
    fn search_descends_and_replays() {
        let (m, d) = disk_setup(1.0 / 10.0);
        let b = cone_baseline(&m, [0.0; 3], &d, &CertifyOptions::default()).unwrap();
        let mut x = b.complex.clone();
        let c = d.cube_of([0.2, 0.1, 0.3]);
        for f in cube_faces(c) {
            x.insert(f).unwrap();
        }
        let opts = SearchOptions { budget: 80, seed: 7, ..Default::default() };
        let s = local_search(&m, &x, &opts).unwrap();
        assert!(s.area < x.area());
        assert!(s.trace.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(s.replay(&m).unwrap(), s.current);
        let again = local_search(&m, &x, &opts).unwrap();
        assert_eq!(again.current, s.current);
    }

    #[test]
    fn constant_sequence_beta_is_min_ratio() {
        let (m, d) = disk_setup(1.0 / 16.0);
        let x = mincut_exact(&m, &d, &CertifyOptions::default()).unwrap();
        let u = Region::of_domain(&d);
        let r = sequence_diagnostics(&[x.clone(), x.clone()], &m, &u, &DiagnosticOptions::default()).unwrap();
        let (p, rad) = r.beta.worst_ball.unwrap();
        let ratio = crate::measure::ball_area(&x, p, rad) / (PI * rad * rad);
        assert_eq!(r.beta.beta.unwrap(), ratio);
        assert!(r.beta.beta.unwrap() >= 0.9);
        assert_eq!(r.lsc.violations(), 0);
    }

    #[test]
    fn tentacle_sequence_is_flagged() {
        let (m, d) = disk_setup(1.0 / 16.0);
        let x = mincut_exact(&m, &d, &CertifyOptions::default()).unwrap();
        let mut hairy = x.clone();
        let c = d.cube_of([0.3, 0.2, 0.0]);
        for k in 1..6 {
            hairy.insert(Face::new(0, [c[0] as i32, c[1] as i32, c[2] as i32 + k])).unwrap();
        }
        let u = Region::of_domain(&d);
        let opts = DiagnosticOptions { budget: 2000, ..Default::default() };
        let r = sequence_diagnostics(&[hairy.clone(), hairy], &m, &u, &opts).unwrap();
        assert!(r.beta_flagged, "{:?}", r.beta);
        assert!(r.beta.beta.unwrap() < 0.7);
    }

    #[test]
    fn partitions_count_bell_numbers() {
        assert_eq!(set_partitions(1).len(), 1);
        assert_eq!(set_partitions(3).len(), 5);
        assert_eq!(set_partitions(4).len(), 15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn descent_never_increases_mass(seed in 0u64..1000) {
            let d = GridDomain::new([0.0; 3], 1.0, [5, 5, 5]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut coeffs = BTreeMap::new();
            for _ in 0..12 {
                let f = Face::new(rng.gen_range(0..3), [rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4)]);
                coeffs.insert(f, if rng.gen_bool(0.5) { 1 } else { -1 });
            }
            let c = FaceChain { domain: d, coeffs };
            let (out, _) = min_mass_chain(&c, 32);
            prop_assert!(out.mass() <= c.mass());
            // same boundary: the difference is a coboundary, so it pairs to
            // zero with every dual cycle around a grid edge
            let diff = |f: &Face| out.coeffs.get(f).copied().unwrap_or(0) - c.coeffs.get(f).copied().unwrap_or(0);
            for a in 0..3usize {
                for i in 1..4 { for j in 1..4 { for k in 1..4 {
                    let (u, v) = ((a + 1) % 3, (a + 2) % 3);
                    let mut p = [i, j, k];
                    let f1 = Face::new(u, p);
                    p[v] -= 1; let f2 = Face::new(u, p); p[v] += 1;
                    let g1 = Face::new(v, p);
                    p[u] -= 1; let g2 = Face::new(v, p);
                    let circ = diff(&f1) - diff(&f2) - diff(&g1) + diff(&g2);
                    prop_assert_eq!(circ, 0);
                }}}
            }
        }
    }
}
