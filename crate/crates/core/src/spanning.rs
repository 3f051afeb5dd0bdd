//! Spanning certification for face complexes.
//!
//! The complement of `X` is sampled on the half-step grid: a node is blocked
//! when it lies on a closed face of `X` or in a closed grid cube meeting `M`
//! (the collar). Edges between free nodes never meet `|X|` or the collar, so
//! every cycle of the free graph is a loop in the complement. Its linking
//! vector is read off an integer cochain counting signed crossings with cones
//! over the components of `M`; fundamental cycles of a spanning forest give
//! generators, and the verdict is a lattice membership test.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    add, convex_sets_intersect, dist, orient2d, sat_axes, scale, segment_hits_rect, segment_segment_closest,
    segment_triangle, sub, Crossing, P3,
};
use crate::grid::{cube_faces, Face, FaceComplex, GridDomain, Triangle};
use crate::lattice::hnf;
use crate::linking::{classify_link, normal_frame, BoundarySystem, Loop};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkMode {
    /// Test links are single embedded loops.
    SingleLoop,
    /// Test links may be disjoint unions of loops.
    MultiComponent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub ell: i64,
    pub mode: LinkMode,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { ell: 1, mode: LinkMode::SingleLoop, seed: 0x5a4e }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpanStatus {
    Spans,
    NotSpanning,
}

/// Generators of the image of `H₁(free graph component) → Z^c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentLattice {
    /// Distinct nonzero linking vectors of fundamental cycles.
    pub generators: Vec<Vec<i64>>,
    /// Non-tree edge realizing each generator: half-step node and axis.
    pub edges: Vec<([i64; 3], u8)>,
    pub hnf_basis: Vec<Vec<i128>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub ell: i64,
    pub mode: LinkMode,
    pub components: usize,
    pub free_nodes: usize,
    pub graph_components: usize,
    pub apexes: Vec<P3>,
    pub lattices: Vec<ComponentLattice>,
}

/// Integer combination of generator edges of one graph component whose
/// linking vector is `±ℓ e_i`, kept when no single loop could be verified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWitness {
    pub target: Vec<i64>,
    pub terms: Vec<(([i64; 3], u8), i128)>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanningVerdict {
    pub status: SpanStatus,
    pub witness: Option<Loop>,
    pub witness_linking: Option<Vec<i64>>,
    pub class_witness: Option<ClassWitness>,
    pub certificate: Certificate,
}

impl Certificate {
    /// Re-run the lattice test from the stored generators.
    pub fn decide(&self) -> (SpanStatus, Option<(usize, usize)>) {
        let c = self.components;
        let targets: Vec<Vec<i64>> = (0..c)
            .map(|i| {
                let mut v = vec![0; c];
                v[i] = self.ell;
                v
            })
            .collect();
        let check = |gens: &[Vec<i64>]| {
            if gens.is_empty() {
                return None;
            }
            let h = hnf(gens);
            (0..c).find(|&i| h.contains(&targets[i]))
        };
        match self.mode {
            LinkMode::SingleLoop => {
                for (k, l) in self.lattices.iter().enumerate() {
                    if let Some(i) = check(&l.generators) {
                        return (SpanStatus::NotSpanning, Some((k, i)));
                    }
                }
            }
            LinkMode::MultiComponent => {
                let all: Vec<Vec<i64>> = self.lattices.iter().flat_map(|l| l.generators.iter().cloned()).collect();
                if let Some(i) = check(&all) {
                    return (SpanStatus::NotSpanning, Some((usize::MAX, i)));
                }
            }
        }
        (SpanStatus::Spans, None)
    }

    /// Stored HNF bases agree with a recomputation and the verdict reproduces.
    pub fn verify(&self, status: SpanStatus) -> bool {
        let bases_ok = self.lattices.iter().all(|l| l.generators.is_empty() || hnf(&l.generators).basis == l.hnf_basis);
        bases_ok && self.decide().0 == status
    }
}

struct FineGrid {
    n: [usize; 3],
}

impl FineGrid {
    fn idx(&self, f: [i64; 3]) -> usize {
        (f[0] as usize * self.n[1] + f[1] as usize) * self.n[2] + f[2] as usize
    }

    fn node(&self, mut i: usize) -> [i64; 3] {
        let z = i % self.n[2];
        i /= self.n[2];
        let y = i % self.n[1];
        [(i / self.n[1]) as i64, y as i64, z as i64]
    }

    fn len(&self) -> usize {
        self.n.iter().product()
    }

    fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n[1] * self.n[2],
            1 => self.n[2],
            _ => 1,
        }
    }
}

/// Closed grid cubes meeting `M`.
pub fn collar_cubes(domain: &GridDomain, m: &BoundarySystem) -> BTreeSet<[i64; 3]> {
    let eps = 1e-9 * domain.h;
    let mut out = BTreeSet::new();
    for comp in &m.components {
        for (a, b) in comp.segments() {
            out.extend(domain.cubes_meeting_segment(a, b, eps));
        }
    }
    out
}

/// Resolution preconditions of the certifier.
pub fn check_resolution(x: &FaceComplex, m: &BoundarySystem) -> Result<()> {
    let d = &x.domain;
    let h = d.h;
    if m.is_empty() {
        return Err(Error::Precondition("empty boundary system".into()));
    }
    let (lo, hi) = m.bbox();
    let up = d.upper();
    for k in 0..3 {
        if lo[k] - d.origin[k] < 2.0 * h || up[k] - hi[k] < 2.0 * h {
            return Err(Error::Precondition("boundary closer than 2h to the domain frontier".into()));
        }
    }
    if let Some(f) = x.iter().find(|f| f.touches_frontier(d)) {
        return Err(Error::Precondition(format!("face {f:?} touches the domain frontier")));
    }
    let sep = 2.0 * 3f64.sqrt() * h + 0.5 * h;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let (dd, _, _) = crate::linking::loop_distance(&m.components[i], &m.components[j]);
            if dd <= sep {
                return Err(Error::Precondition(format!(
                    "tube unresolved: components {i} and {j} are {dd:.3e} apart at h = {h}"
                )));
            }
        }
        // arcs of one component may not come back close to each other
        let c = &m.components[i];
        let segs: Vec<(P3, P3)> = c.segments().collect();
        let n = segs.len();
        let mut arc = vec![0.0; n + 1];
        for s in 0..n {
            arc[s + 1] = arc[s] + dist(segs[s].0, segs[s].1);
        }
        let total = arc[n];
        for s in 0..n {
            for t in s + 1..n {
                let along = (arc[t] - arc[s + 1]).max(0.0).min(total - arc[t + 1] + arc[s]);
                if along <= 2.0 * sep {
                    continue;
                }
                let (dd, _, _) = segment_segment_closest(segs[s].0, segs[s].1, segs[t].0, segs[t].1);
                if dd <= sep {
                    return Err(Error::Precondition(format!("tube unresolved: component {i} pinches at h = {h}")));
                }
            }
        }
    }
    Ok(())
}

fn blocked_nodes(x: &FaceComplex, collar: &BTreeSet<[i64; 3]>, g: &FineGrid) -> Vec<bool> {
    let mut blocked = vec![false; g.len()];
    for f in x.iter() {
        for n in f.fine_nodes() {
            blocked[g.idx(n)] = true;
        }
    }
    for c in collar {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    blocked[g.idx([2 * c[0] + i, 2 * c[1] + j, 2 * c[2] + k])] = true;
                }
            }
        }
    }
    blocked
}

/// Signed crossings of free `+axis` edges with the cone from `apex` over a
/// loop; `None` when some free edge meets the cone non-transversally.
fn cone_cochain(
    d: &GridDomain,
    g: &FineGrid,
    blocked: &[bool],
    apex: P3,
    comp: &Loop,
) -> Option<HashMap<(usize, u8), i32>> {
    let step = 0.5 * d.h;
    let mut w: HashMap<(usize, u8), i32> = HashMap::new();
    let free_edge = |n: [i64; 3], a: usize| -> bool {
        let mut m = n;
        m[a] += 1;
        if n[a] < 0 || m[a] as usize >= g.n[a] {
            return false;
        }
        !blocked[g.idx(n)] && !blocked[g.idx(m)]
    };
    for (m0, m1) in comp.segments() {
        let tri = [apex, m0, m1];
        for a in 0..3 {
            let (u, v) = ((a + 1) % 3, (a + 2) % 3);
            let p2 = tri.map(|p| [p[u], p[v]]);
            let lo_u = tri.iter().map(|p| p[u]).fold(f64::INFINITY, f64::min);
            let hi_u = tri.iter().map(|p| p[u]).fold(f64::NEG_INFINITY, f64::max);
            let lo_v = tri.iter().map(|p| p[v]).fold(f64::INFINITY, f64::min);
            let hi_v = tri.iter().map(|p| p[v]).fold(f64::NEG_INFINITY, f64::max);
            let lo_a = tri.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
            let hi_a = tri.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
            let ju0 = (((lo_u - d.origin[u]) / step).floor() as i64).max(0);
            let ju1 = (((hi_u - d.origin[u]) / step).ceil() as i64).min(g.n[u] as i64 - 1);
            let jv0 = (((lo_v - d.origin[v]) / step).floor() as i64).max(0);
            let jv1 = (((hi_v - d.origin[v]) / step).ceil() as i64).min(g.n[v] as i64 - 1);
            let ea0 = (((lo_a - d.origin[a]) / step).floor() as i64 - 1).max(0);
            let ea1 = (((hi_a - d.origin[a]) / step).ceil() as i64 + 1).min(g.n[a] as i64 - 2);
            let flat = orient2d(p2[0], p2[1], p2[2]) == 0;
            let normal = crate::geometry::cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
            for ju in ju0..=ju1 {
                for jv in jv0..=jv1 {
                    let mut node = [0i64; 3];
                    node[u] = ju;
                    node[v] = jv;
                    let q = [d.origin[u] + ju as f64 * step, d.origin[v] + jv as f64 * step];
                    let o = [orient2d(p2[0], p2[1], q), orient2d(p2[1], p2[2], q), orient2d(p2[2], p2[0], q)];
                    let range = if flat {
                        // the triangle is parallel to this axis: only lines in its plane can touch it
                        if o.iter().any(|&s| s != 0) {
                            continue;
                        }
                        ea0..=ea1
                    } else {
                        let inside = o.iter().all(|&s| s >= 0) || o.iter().all(|&s| s <= 0);
                        if !inside {
                            continue;
                        }
                        let t =
                            tri[0][a] - (normal[u] * (q[0] - tri[0][u]) + normal[v] * (q[1] - tri[0][v])) / normal[a];
                        let e = ((t - d.origin[a]) / step).floor() as i64;
                        (e - 1).max(ea0)..=(e + 1).min(ea1)
                    };
                    for e in range {
                        node[a] = e;
                        if !free_edge(node, a) {
                            continue;
                        }
                        let mut next = node;
                        next[a] += 1;
                        match segment_triangle(d.fine_pos(node), d.fine_pos(next), tri[0], tri[1], tri[2]) {
                            Crossing::None => {}
                            Crossing::Transverse(s) => *w.entry((g.idx(node), a as u8)).or_insert(0) += s as i32,
                            Crossing::Degenerate => return None,
                        }
                    }
                }
            }
        }
    }
    w.retain(|_, v| *v != 0);
    Some(w)
}

struct Forest {
    comp: Vec<u32>,
    parent: Vec<u32>,
    depth: Vec<u32>,
    phi: Vec<i64>,
    roots: Vec<usize>,
}

const NONE: u32 = u32::MAX;

fn edge_weight(
    w: &[HashMap<(usize, u8), i32>],
    c: usize,
    from: usize,
    a: usize,
    forward: bool,
    g: &FineGrid,
    out: &mut [i64],
) {
    let base = if forward { from } else { from - g.stride(a) };
    let sgn = if forward { 1 } else { -1 };
    for i in 0..c {
        out[i] = w[i].get(&(base, a as u8)).map_or(0, |&x| sgn * x as i64);
    }
}

fn neighbors(g: &FineGrid, i: usize) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
    let n = g.node(i);
    (0..3).flat_map(move |a| {
        let s = g.stride(a);
        let fwd = ((n[a] as usize) + 1 < g.n[a]).then(|| (i + s, a, true));
        let bwd = (n[a] > 0).then(|| (i - s, a, false));
        fwd.into_iter().chain(bwd)
    })
}

fn build_forest(g: &FineGrid, blocked: &[bool], w: &[HashMap<(usize, u8), i32>], c: usize) -> Forest {
    let len = g.len();
    let mut f = Forest {
        comp: vec![NONE; len],
        parent: vec![NONE; len],
        depth: vec![0; len],
        phi: vec![0; len * c],
        roots: Vec::new(),
    };
    let mut queue = VecDeque::new();
    let mut tmp = vec![0i64; c];
    for start in 0..len {
        if blocked[start] || f.comp[start] != NONE {
            continue;
        }
        let id = f.roots.len() as u32;
        f.roots.push(start);
        f.comp[start] = id;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for (v, a, fwd) in neighbors(g, u) {
                if blocked[v] || f.comp[v] != NONE {
                    continue;
                }
                f.comp[v] = id;
                f.parent[v] = u as u32;
                f.depth[v] = f.depth[u] + 1;
                edge_weight(w, c, u, a, fwd, g, &mut tmp);
                for i in 0..c {
                    f.phi[v * c + i] = f.phi[u * c + i] + tmp[i];
                }
                queue.push_back(v);
            }
        }
    }
    f
}

fn tree_path_to(f: &Forest, mut u: usize, stop: usize) -> Vec<usize> {
    let mut out = vec![u];
    while u != stop {
        u = f.parent[u] as usize;
        out.push(u);
    }
    out
}

fn lca(f: &Forest, mut u: usize, mut v: usize) -> usize {
    while f.depth[u] > f.depth[v] {
        u = f.parent[u] as usize;
    }
    while f.depth[v] > f.depth[u] {
        v = f.parent[v] as usize;
    }
    while u != v {
        u = f.parent[u] as usize;
        v = f.parent[v] as usize;
    }
    u
}

/// Node sequence of the fundamental cycle of the non-tree edge `u → v`.
fn fundamental_cycle(f: &Forest, u: usize, v: usize) -> Vec<usize> {
    let l = lca(f, u, v);
    let mut down = tree_path_to(f, u, l);
    down.reverse();
    let up = tree_path_to(f, v, l);
    down.extend(up[..up.len() - 1].iter().copied());
    down
}

fn drop_collinear(pts: Vec<P3>) -> Vec<P3> {
    let n = pts.len();
    if n < 4 {
        return pts;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = pts[(i + n - 1) % n];
        let b = pts[i];
        let c = pts[(i + 1) % n];
        let d1 = sub(b, a);
        let d2 = sub(c, b);
        let same = crate::geometry::norm(crate::geometry::cross(d1, d2)) == 0.0 && crate::geometry::dot(d1, d2) > 0.0;
        if !same {
            out.push(b);
        }
    }
    out
}

/// Exact check that no segment of the loop meets a face of `X` (touching counts).
pub fn loop_avoids(x: &FaceComplex, l: &Loop) -> bool {
    let d = &x.domain;
    let eps = 1e-9 * d.h;
    for (p, q) in l.segments() {
        let lo = [0, 1, 2].map(|k| ((p[k].min(q[k]) - d.origin[k]) / d.h).floor() as i64 - 1);
        let hi = [0, 1, 2].map(|k| ((p[k].max(q[k]) - d.origin[k]) / d.h).floor() as i64 + 1);
        for a in 0..3 {
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let f = Face::new(a, [i as i32, j as i32, k as i32]);
                        if !x.contains(&f) {
                            continue;
                        }
                        let c = f.corners(d);
                        let (u, v) = f.plane_axes();
                        if segment_hits_rect(p, q, a, c[0][a], [c[0][u], c[0][v]], [c[2][u], c[2][v]], eps) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// Certify whether `X` (together with the collar of `M`) meets every
/// ℓ-link of `M` that is realizable in the half-step complement graph.
pub fn certify_spanning(x: &FaceComplex, m: &BoundarySystem, opts: &CertifyOptions) -> Result<SpanningVerdict> {
    check_resolution(x, m)?;
    if opts.ell < 1 {
        return Err(Error::Precondition("ℓ must be positive".into()));
    }
    let d = &x.domain;
    let g = FineGrid { n: d.fine_dims() };
    let collar = collar_cubes(d, m);
    let blocked = blocked_nodes(x, &collar, &g);
    let c = m.len();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut apexes = Vec::with_capacity(c);
    let mut w = Vec::with_capacity(c);
    for comp in &m.components {
        let mut done = None;
        for _ in 0..32 {
            let jitter = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let apex = add(comp.centroid(), scale(jitter, d.h));
            if let Some(cw) = cone_cochain(d, &g, &blocked, apex, comp) {
                done = Some((apex, cw));
                break;
            }
        }
        let (apex, cw) = done.ok_or_else(|| Error::NonConvergence("no generic cone apex".into()))?;
        apexes.push(apex);
        w.push(cw);
    }

    let forest = build_forest(&g, &blocked, &w, c);
    let ncomp = forest.roots.len();
    let mut per: Vec<BTreeMap<Vec<i64>, (usize, usize)>> = vec![BTreeMap::new(); ncomp];
    let mut tmp = vec![0i64; c];
    for u in 0..g.len() {
        if blocked[u] {
            continue;
        }
        let n = g.node(u);
        for a in 0..3 {
            if n[a] as usize + 1 >= g.n[a] {
                continue;
            }
            let v = u + g.stride(a);
            if blocked[v] || forest.parent[v] == u as u32 || forest.parent[u] == v as u32 {
                continue;
            }
            edge_weight(&w, c, u, a, true, &g, &mut tmp);
            let vec: Vec<i64> = (0..c).map(|i| forest.phi[u * c + i] + tmp[i] - forest.phi[v * c + i]).collect();
            if vec.iter().any(|&z| z != 0) {
                per[forest.comp[u] as usize].entry(vec).or_insert((u, a));
            }
        }
    }

    let lattices: Vec<ComponentLattice> = per
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| {
            let generators: Vec<Vec<i64>> = p.keys().cloned().collect();
            let edges = p.values().map(|&(u, a)| (g.node(u), a as u8)).collect();
            let hnf_basis = hnf(&generators).basis;
            ComponentLattice { generators, edges, hnf_basis }
        })
        .collect();
    let certificate = Certificate {
        ell: opts.ell,
        mode: opts.mode,
        components: c,
        free_nodes: blocked.iter().filter(|b| !**b).count(),
        graph_components: ncomp,
        apexes,
        lattices,
    };
    let (status, hit) = certificate.decide();
    let mut verdict =
        SpanningVerdict { status, witness: None, witness_linking: None, class_witness: None, certificate };
    let Some((lat_idx, target_comp)) = hit else {
        return Ok(verdict);
    };
    let mut target = vec![0i64; c];
    target[target_comp] = opts.ell;
    if lat_idx == usize::MAX {
        verdict.class_witness =
            Some(ClassWitness { target, terms: Vec::new(), reason: "realized only by a multi-component link".into() });
        return Ok(verdict);
    }
    let lat = &verdict.certificate.lattices[lat_idx];
    let to_idx = |e: &([i64; 3], u8)| (g.idx(e.0), g.idx(e.0) + g.stride(e.1 as usize));
    let neg: Vec<i64> = target.iter().map(|z| -z).collect();
    let direct = lat.generators.iter().position(|v| *v == target || *v == neg);
    let mut reason = String::new();
    let candidate = if let Some(k) = direct {
        let (u, v) = to_idx(&lat.edges[k]);
        let pts: Vec<P3> = fundamental_cycle(&forest, u, v).into_iter().map(|i| d.fine_pos(g.node(i))).collect();
        Loop::new(drop_collinear(pts)).ok()
    } else {
        let h = hnf(&lat.generators);
        let combo = h.input_combination(&target).expect("lattice contains the target");
        let terms: Vec<((usize, usize), i128)> =
            lat.edges.iter().zip(&combo).filter(|(_, &k)| k != 0).map(|(e, &k)| (to_idx(e), k)).collect();
        (0..6).find_map(|s| concatenated_loop(&forest, &g, d, &terms, opts.seed.wrapping_add(s)))
    };
    match candidate {
        Some(l) => match classify_link(&l, m) {
            Ok(cls) if cls.l_link(opts.ell) == Some(target_comp) && loop_avoids(x, &l) => {
                verdict.witness_linking = Some(cls.linking);
                verdict.witness = Some(l);
                return Ok(verdict);
            }
            Ok(cls) => reason = format!("loop verification failed (linking {:?})", cls.linking),
            Err(e) => reason = format!("loop verification failed: {e}"),
        },
        None => reason.push_str("no embedded loop assembled"),
    }
    let h = hnf(&lat.generators);
    let combo = h.input_combination(&target).expect("lattice contains the target");
    verdict.class_witness = Some(ClassWitness {
        target,
        terms: lat.edges.iter().zip(combo).filter(|(_, k)| *k != 0).map(|(e, k)| (*e, k)).collect(),
        reason,
    });
    Ok(verdict)
}

/// Concatenate generator cycles through the forest root, each pass shifted
/// by its own small generic offset so that the polygon is embedded.
fn concatenated_loop(
    f: &Forest,
    g: &FineGrid,
    d: &GridDomain,
    terms: &[((usize, usize), i128)],
    seed: u64,
) -> Option<Loop> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = 0.0625 * 0.5 * d.h;
    let mut offset = || [rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r)];
    let root = f.roots[f.comp[terms.first()?.0 .0] as usize];
    let pos = |i: usize| d.fine_pos(g.node(i));
    let mut pts = Vec::new();
    for &((u, v), k) in terms {
        let (a, b) = if k > 0 { (u, v) } else { (v, u) };
        for _ in 0..k.unsigned_abs() {
            let (o1, o2) = (offset(), offset());
            let mut out = tree_path_to(f, a, root);
            out.reverse();
            pts.extend(out.into_iter().map(|i| add(pos(i), o1)));
            let back = tree_path_to(f, b, root);
            pts.extend(back.into_iter().map(|i| add(pos(i), o2)));
        }
    }
    if pts.len() > 200_000 {
        return None;
    }
    pts.dedup();
    Loop::new(pts).ok()
}

/// Outcome of random falsification.
#[derive(Clone, Debug, PartialEq)]
pub enum SampledVerdict {
    NotSpanning(Loop),
    NoWitnessFound(usize),
}

/// Obstacle for sampled spanning tests.
pub enum Obstacle<'a> {
    Faces(&'a FaceComplex),
    Mesh(&'a [Triangle]),
}

impl Obstacle<'_> {
    fn hit_by(&self, l: &Loop) -> bool {
        match self {
            Obstacle::Faces(x) => !loop_avoids(x, l),
            Obstacle::Mesh(tris) => l
                .segments()
                .any(|(p, q)| tris.iter().any(|t| !matches!(segment_triangle(p, q, t[0], t[1], t[2]), Crossing::None))),
        }
    }
}

/// Random simple links of `M`: tilted, Fourier-perturbed circles about
/// points of one component, kept only when verified simple.
pub fn sampled_spanning(
    obstacle: &Obstacle,
    m: &BoundarySystem,
    k: usize,
    min_radius: f64,
    seed: u64,
) -> SampledVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = m.bbox();
    let diam = dist(lo, hi).max(min_radius * 4.0);
    let mut tried = 0;
    let mut attempts = 0;
    while tried < k && attempts < 20 * k + 100 {
        attempts += 1;
        let i = rng.gen_range(0..m.len());
        let (p, t, _) = m.components[i].point_at(rng.gen_range(0.0..1.0));
        let (n, b) = normal_frame(t);
        // first samples are plain meridians; later ones grow and wobble
        let radius =
            if tried < k / 4 + 1 { min_radius * rng.gen_range(1.0..1.5) } else { rng.gen_range(min_radius..diam) };
        let tilt = if tried < k / 4 + 1 { 0.0 } else { rng.gen_range(-0.4..0.4) };
        let amp: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))).collect();
        let sides = 48;
        let pts: Vec<P3> = (0..sides)
            .map(|s| {
                let th = std::f64::consts::TAU * s as f64 / sides as f64;
                let mut r = 1.0;
                for (j, (a1, a2)) in amp.iter().enumerate() {
                    let f = (j + 2) as f64;
                    r += a1 * (f * th).cos() + a2 * (f * th).sin();
                }
                let r = radius * r;
                let dir = add(scale(n, th.cos()), scale(b, th.sin()));
                add(add(p, scale(dir, r)), scale(t, tilt * r * th.sin()))
            })
            .collect();
        let Ok(l) = Loop::new(pts) else { continue };
        match classify_link(&l, m) {
            Ok(c) if c.simple_link().is_some() => {}
            _ => continue,
        }
        tried += 1;
        if !obstacle.hit_by(&l) {
            return SampledVerdict::NotSpanning(l);
        }
    }
    SampledVerdict::NoWitnessFound(tried)
}

/// Faces whose removal changes the certifier's complement graph: each has a
/// half-step node off the collar that no other face covers.
pub fn certifier_visible(x: &FaceComplex, m: &BoundarySystem) -> BTreeSet<Face> {
    let collar = collar_cubes(&x.domain, m);
    let mut count: HashMap<[i64; 3], u32> = HashMap::new();
    for f in x.iter() {
        for n in f.fine_nodes() {
            *count.entry(n).or_insert(0) += 1;
        }
    }
    let in_collar = |n: [i64; 3]| {
        // a node lies in the closed cubes with index floor((n-1)/2)..=floor(n/2)
        let lo = n.map(|v| (v - 1).div_euclid(2));
        let hi = n.map(|v| v.div_euclid(2));
        (lo[0]..=hi[0]).any(|i| (lo[1]..=hi[1]).any(|j| (lo[2]..=hi[2]).any(|k| collar.contains(&[i, j, k]))))
    };
    x.iter().filter(|f| f.fine_nodes().any(|n| count[&n] == 1 && !in_collar(n))).copied().collect()
}

/// Iteratively drop faces invisible to the certifier, in sorted order.
pub fn prune_invisible(x: &FaceComplex, m: &BoundarySystem) -> FaceComplex {
    let mut cur = x.clone();
    loop {
        let vis = certifier_visible(&cur, m);
        let hidden: Vec<Face> = cur.iter().filter(|f| !vis.contains(f)).copied().collect();
        let Some(f) = hidden.first() else { return cur };
        cur.remove(f);
    }
}

// ---------------------------------------------------------------------------
// Deformation catalog

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Deformation {
    Identity,
    /// Radial projection from the center of cube `center` onto the frontier
    /// of the digital ball of cubes whose centers lie within `radius`.
    RadialFrontier {
        center: [i64; 3],
        radius: f64,
    },
    /// Radial projection onto the frontier of a box of cubes `lo..lo+size`.
    CubeFrontier {
        lo: [i64; 3],
        size: i64,
    },
    /// Free-face collapses inside the box of cubes `lo..=hi`.
    SkeletonCollapse {
        lo: [i64; 3],
        hi: [i64; 3],
        max_steps: usize,
    },
    /// Coordinate clamp onto the box of grid nodes `lo..=hi`.
    HullClamp {
        lo: [i64; 3],
        hi: [i64; 3],
    },
}

/// Do two sets of closed cubes meet?
pub fn region_touches(region: &BTreeSet<[i64; 3]>, collar: &BTreeSet<[i64; 3]>) -> bool {
    // closed cubes meet iff their indices differ by at most one per axis
    region
        .iter()
        .any(|c| (-1..=1).any(|i| (-1..=1).any(|j| (-1..=1).any(|k| collar.contains(&[c[0] + i, c[1] + j, c[2] + k])))))
}

/// Does the closed face miss every cube of `collar`?
pub fn face_clear_of(collar: &BTreeSet<[i64; 3]>, f: &Face) -> bool {
    f.corner_indices().iter().all(|c| {
        (0..8).all(|b| {
            let cube = [0, 1, 2].map(|k| c[k] as i64 - ((b >> k) & 1) as i64);
            !collar.contains(&cube)
        })
    })
}

pub fn digital_ball(d: &GridDomain, center: [i64; 3], radius: f64) -> BTreeSet<[i64; 3]> {
    let p = d.cube_center(center);
    let r = (radius / d.h).ceil() as i64 + 1;
    let mut out = BTreeSet::new();
    for i in -r..=r {
        for j in -r..=r {
            for k in -r..=r {
                let c = [center[0] + i, center[1] + j, center[2] + k];
                if d.has_cube(c) && dist(d.cube_center(c), p) <= radius {
                    out.insert(c);
                }
            }
        }
    }
    out
}

/// Image of `X` under radial projection from `p` onto the frontier of a
/// star-shaped union of cubes. Frontier faces hit by the projection of some
/// face inside the region are kept conservatively.
pub fn radial_project(x: &FaceComplex, region: &BTreeSet<[i64; 3]>, p: P3) -> Result<FaceComplex> {
    let d = &x.domain;
    let mut frontier: Vec<(Face, i8)> = Vec::new();
    for &c in region {
        for (k, f) in cube_faces(c).into_iter().enumerate() {
            let a = k / 2;
            let mut nb = c;
            nb[a] += if k % 2 == 0 { -1 } else { 1 };
            if !region.contains(&nb) {
                frontier.push((f, if k % 2 == 0 { -1 } else { 1 }));
            }
        }
    }
    for (f, s) in &frontier {
        let plane = d.coord(f.axis(), f.idx[f.axis()] as i64);
        let side = (plane - p[f.axis()]) * *s as f64;
        if side <= 0.0 {
            return Err(Error::Precondition("region is not star-shaped about the projection center".into()));
        }
    }
    let interior = |f: &Face| {
        let (a, b) = f.cubes();
        region.contains(&a) && region.contains(&b)
    };
    let moved: Vec<Face> = x.iter().filter(|f| interior(f)).copied().collect();
    let mut out = x.clone();
    for f in &moved {
        out.remove(f);
    }
    let e = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let eps = 1e-9 * d.h;
    for (g, _) in &frontier {
        let gc = g.corners(d);
        let mut pyr = gc.to_vec();
        pyr.push(p);
        let lateral: Vec<P3> = gc.iter().map(|&q| sub(q, p)).collect();
        let mut normals = e.to_vec();
        for i in 0..4 {
            normals.push(crate::geometry::cross(lateral[i], lateral[(i + 1) % 4]));
        }
        let axes = sat_axes(&normals, &e, &lateral);
        if moved.iter().any(|f| convex_sets_intersect(&f.corners(d), &pyr, &axes, eps)) {
            out.insert(*g)?;
        }
    }
    Ok(out)
}

/// Repeatedly remove faces inside `region` that have an edge no other face uses.
pub fn collapse_free_faces(x: &FaceComplex, region: impl Fn(&Face) -> bool, max_steps: usize) -> (FaceComplex, usize) {
    let mut cur = x.clone();
    let mut steps = 0;
    while steps < max_steps {
        let inc = cur.edge_incidence();
        let free: Vec<Face> =
            cur.iter().filter(|f| region(f) && f.edges().iter().any(|e| inc[e] == 1)).copied().collect();
        if free.is_empty() {
            break;
        }
        for f in free {
            if steps >= max_steps {
                break;
            }
            cur.remove(&f);
            steps += 1;
        }
    }
    (cur, steps)
}

/// Coordinate clamp of every face onto a box of grid nodes; faces that
/// degenerate to segments are dropped (they carry no area).
pub fn clamp_to_box(x: &FaceComplex, lo: [i64; 3], hi: [i64; 3]) -> Result<FaceComplex> {
    let mut out = FaceComplex::new(x.domain.clone());
    for f in x.iter() {
        let cs = f.corner_indices().map(|c| [0, 1, 2].map(|k| (c[k] as i64).clamp(lo[k], hi[k])));
        let mut mn = cs[0];
        let mut mx = cs[0];
        for c in &cs {
            for k in 0..3 {
                mn[k] = mn[k].min(c[k]);
                mx[k] = mx[k].max(c[k]);
            }
        }
        let extent: Vec<usize> = (0..3).filter(|&k| mx[k] > mn[k]).collect();
        if extent.len() == 2 {
            let a = (0..3).find(|k| !extent.contains(k)).unwrap();
            out.insert(Face::new(a, [mn[0] as i32, mn[1] as i32, mn[2] as i32]))?;
        }
    }
    Ok(out)
}

/// Apply a catalog deformation whose support misses the collar of `M`.
pub fn deform(x: &FaceComplex, m: &BoundarySystem, phi: &Deformation) -> Result<FaceComplex> {
    let d = &x.domain;
    let collar = collar_cubes(d, m);
    match phi {
        Deformation::Identity => Ok(x.clone()),
        Deformation::RadialFrontier { center, radius } => {
            let region = digital_ball(d, *center, *radius);
            if region.is_empty() || region_touches(&region, &collar) {
                return Err(Error::Precondition("deformation region touches M".into()));
            }
            radial_project(x, &region, d.cube_center(*center))
        }
        Deformation::CubeFrontier { lo, size } => {
            if *size < 1 {
                return Err(Error::Precondition("empty cube region".into()));
            }
            let mut region = BTreeSet::new();
            for i in 0..*size {
                for j in 0..*size {
                    for k in 0..*size {
                        let c = [lo[0] + i, lo[1] + j, lo[2] + k];
                        if !d.has_cube(c) {
                            return Err(Error::Precondition("cube region leaves the grid".into()));
                        }
                        region.insert(c);
                    }
                }
            }
            if region_touches(&region, &collar) {
                return Err(Error::Precondition("deformation region touches M".into()));
            }
            let mid = size / 2;
            radial_project(x, &region, d.cube_center([lo[0] + mid, lo[1] + mid, lo[2] + mid]))
        }
        Deformation::SkeletonCollapse { lo, hi, max_steps } => {
            let region: BTreeSet<[i64; 3]> = (lo[0]..=hi[0])
                .flat_map(|i| (lo[1]..=hi[1]).flat_map(move |j| (lo[2]..=hi[2]).map(move |k| [i, j, k])))
                .collect();
            if region_touches(&region, &collar) {
                return Err(Error::Precondition("deformation region touches M".into()));
            }
            let inside = |f: &Face| {
                f.corner_indices().iter().all(|c| (0..3).all(|k| c[k] as i64 >= lo[k] && c[k] as i64 <= hi[k] + 1))
            };
            Ok(collapse_free_faces(x, inside, *max_steps).0)
        }
        Deformation::HullClamp { lo, hi } => {
            // the clamp must fix the collar pointwise
            for c in &collar {
                if (0..3).any(|k| c[k] < lo[k] || c[k] + 1 > hi[k]) {
                    return Err(Error::Precondition("clamp box does not contain the collar of M".into()));
                }
            }
            clamp_to_box(x, *lo, *hi)
        }
    }
}

/// Cells of mixed dimension with face weights, as produced by surgeries
/// before the measure-zero skeleton is discarded.
#[derive(Clone, Debug, Default)]
pub struct WeightedComplex {
    pub faces: BTreeMap<Face, f64>,
    pub edges: BTreeSet<crate::grid::Edge>,
    pub vertices: BTreeSet<[i32; 3]>,
}

/// Keep only faces of positive weight; cells of dimension below two carry
/// no area and have zero density everywhere.
pub fn core(domain: &GridDomain, w: &WeightedComplex) -> Result<FaceComplex> {
    FaceComplex::from_faces(domain.clone(), w.faces.iter().filter(|(_, &v)| v > 0.0).map(|(f, _)| *f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cone_triangles, rasterize_triangles};
    use crate::linking::circle;
    use proptest::prelude::*;
    use rand::Rng;

    const H: f64 = 1.0 / 16.0;

    fn ring(z: f64) -> Loop {
        circle([0.0, 0.0, z], [0.0, 0.0, 1.0], 1.0, 48).unwrap()
    }

    fn domain_for(m: &BoundarySystem) -> GridDomain {
        let (lo, hi) = m.bbox();
        GridDomain::around(lo, hi, H, 6.0 * H).unwrap()
    }

    fn disk(d: &GridDomain, c: &Loop) -> FaceComplex {
        rasterize_triangles(d, &cone_triangles(c.centroid(), c.vertices()))
    }

    fn opts(ell: i64) -> CertifyOptions {
        CertifyOptions { ell, ..Default::default() }
    }

    #[test]
    fn cone_over_circle_spans() {
        let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
        let d = domain_for(&m);
        let x = disk(&d, &m.components[0]);
        let v = certify_spanning(&x, &m, &opts(1)).unwrap();
        assert_eq!(v.status, SpanStatus::Spans);
        assert!(v.certificate.verify(SpanStatus::Spans));
    }

    #[test]
    fn punctured_disk_has_verified_witness() {
        let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
        let d = domain_for(&m);
        let mut x = disk(&d, &m.components[0]);
        let c = d.cube_of([0.0; 3]);
        x.retain(|f| {
            let p = f.center(&d);
            p[0].abs() > 0.2 || p[1].abs() > 0.2 || (p[2] - d.cube_center(c)[2]).abs() > 0.5
        });
        let v = certify_spanning(&x, &m, &opts(1)).unwrap();
        assert_eq!(v.status, SpanStatus::NotSpanning);
        let w = v.witness.expect("embedded witness");
        assert!(loop_avoids(&x, &w));
        assert_eq!(classify_link(&w, &m).unwrap().simple_link(), Some(0));
        assert!(v.certificate.verify(SpanStatus::NotSpanning));
    }

    #[test]
    fn empty_complex_does_not_span() {
        let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
        let d = domain_for(&m);
        let v = certify_spanning(&FaceComplex::new(d), &m, &opts(1)).unwrap();
        assert_eq!(v.status, SpanStatus::NotSpanning);
        assert!(v.witness.is_some());
    }

    #[test]
    fn two_circles_need_both_disks() {
        let m = BoundarySystem::new(vec![ring(0.0), ring(1.0)]).unwrap();
        let d = domain_for(&m);
        let d0 = disk(&d, &m.components[0]);
        let both = d0.union(&disk(&d, &m.components[1]));
        assert_eq!(certify_spanning(&both, &m, &opts(1)).unwrap().status, SpanStatus::Spans);
        let v = certify_spanning(&d0, &m, &opts(1)).unwrap();
        assert_eq!(v.status, SpanStatus::NotSpanning);
        let w = v.witness.unwrap();
        assert_eq!(classify_link(&w, &m).unwrap().simple_link(), Some(1));
    }

    fn moebius(n: usize, half_width: f64) -> (Loop, Vec<Triangle>) {
        let pt = |th: f64, s: f64| {
            let r = 1.0 + s * (0.5 * th).cos();
            [r * th.cos(), r * th.sin(), s * (0.5 * th).sin()]
        };
        let tau = std::f64::consts::TAU;
        let boundary: Vec<P3> = (0..2 * n).map(|i| pt(2.0 * tau * i as f64 / (2 * n) as f64, half_width)).collect();
        let mut tris = Vec::new();
        for i in 0..n {
            let (a, b) = (tau * i as f64 / n as f64, tau * (i + 1) as f64 / n as f64);
            for (s0, s1) in [(-half_width, 0.0), (0.0, half_width)] {
                tris.push([pt(a, s0), pt(b, s0), pt(b, s1)]);
                tris.push([pt(a, s0), pt(b, s1), pt(a, s1)]);
            }
        }
        (Loop::new(boundary).unwrap(), tris)
    }

    #[test]
    fn moebius_band_spans_only_at_level_one() {
        let (b, tris) = moebius(64, 0.4);
        let m = BoundarySystem::new(vec![b]).unwrap();
        let d = domain_for(&m);
        let x = rasterize_triangles(&d, &tris);
        assert_eq!(certify_spanning(&x, &m, &opts(1)).unwrap().status, SpanStatus::Spans);
        let v = certify_spanning(&x, &m, &opts(2)).unwrap();
        assert_eq!(v.status, SpanStatus::NotSpanning);
        let w = v.witness.expect("embedded 2-link");
        assert_eq!(classify_link(&w, &m).unwrap().l_link(2), Some(0));
    }

    #[test]
    fn sampled_never_beats_certified() {
        let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
        let d = domain_for(&m);
        let x = disk(&d, &m.components[0]);
        match sampled_spanning(&Obstacle::Faces(&x), &m, 40, 3.0 * H, 7) {
            SampledVerdict::NoWitnessFound(k) => assert!(k > 0),
            SampledVerdict::NotSpanning(_) => panic!("sampled witness through a certified spanning complex"),
        }
        let empty = FaceComplex::new(d);
        assert!(matches!(
            sampled_spanning(&Obstacle::Faces(&empty), &m, 10, 3.0 * H, 7),
            SampledVerdict::NotSpanning(_)
        ));
    }

    #[test]
    fn frontier_touching_faces_are_rejected() {
        let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
        let d = domain_for(&m);
        let mut x = disk(&d, &m.components[0]);
        x.insert(Face::new(0, [0, 1, 1])).unwrap();
        assert!(matches!(certify_spanning(&x, &m, &opts(1)), Err(Error::Precondition(_))));
    }

    #[test]
    fn catalog_deformations_keep_spanning() {
        let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
        let d = domain_for(&m);
        let x = disk(&d, &m.components[0]);
        let c = d.cube_of([0.0, 0.0, 0.0]);
        let moves = [
            Deformation::RadialFrontier { center: c, radius: 0.3 },
            Deformation::CubeFrontier { lo: [c[0] - 2, c[1] - 2, c[2] - 2], size: 5 },
            Deformation::SkeletonCollapse {
                lo: [c[0] - 4, c[1] - 4, c[2] - 4],
                hi: [c[0] + 4, c[1] + 4, c[2] + 4],
                max_steps: 100,
            },
        ];
        for phi in &moves {
            let y = deform(&x, &m, phi).unwrap();
            assert_eq!(certify_spanning(&y, &m, &opts(1)).unwrap().status, SpanStatus::Spans, "{phi:?}");
        }
        let near = Deformation::RadialFrontier { center: d.cube_of([1.0, 0.0, 0.0]), radius: 0.2 };
        assert!(deform(&x, &m, &near).is_err());
    }

    #[test]
    fn invisible_faces_do_not_matter() {
        let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
        let d = domain_for(&m);
        let x = disk(&d, &m.components[0]);
        let y = prune_invisible(&x, &m);
        assert!(y.len() <= x.len());
        assert_eq!(certify_spanning(&y, &m, &opts(1)).unwrap().status, SpanStatus::Spans);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn adding_faces_preserves_spanning(seed in 0u64..1000) {
            let m = BoundarySystem::new(vec![ring(0.0)]).unwrap();
            let d = domain_for(&m);
            let mut x = disk(&d, &m.components[0]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..30 {
                let f = Face::new(rng.gen_range(0..3), [rng.gen_range(2..30), rng.gen_range(2..30), rng.gen_range(2..30)]);
                if f.in_domain(&d) && !f.touches_frontier(&d) {
                    x.insert(f).unwrap();
                }
            }
            prop_assert_eq!(certify_spanning(&x, &m, &opts(1)).unwrap().status, SpanStatus::Spans);
        }
    }
}
