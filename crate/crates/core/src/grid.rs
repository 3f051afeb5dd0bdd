//! Cubical grids and face complexes: closed axis-aligned unit squares of a
//! bounded grid, with exact area, adjacency and rasterization of polyhedral
//! surfaces.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_triangle, Crossing, P3};
use crate::linking::fmt_g9;

pub type Triangle = [P3; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub origin: P3,
    pub h: f64,
    /// Number of cubes along each axis.
    pub dims: [usize; 3],
}

impl GridDomain {
    pub fn new(origin: P3, h: f64, dims: [usize; 3]) -> Result<GridDomain> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Precondition(format!("grid step {h} must be positive")));
        }
        if dims.contains(&0) {
            return Err(Error::Precondition("grid has an empty axis".into()));
        }
        Ok(GridDomain { origin, h, dims })
    }

    /// Smallest grid with nodes on `h·Z³` covering `[lo − margin, hi + margin]`.
    pub fn around(lo: P3, hi: P3, h: f64, margin: f64) -> Result<GridDomain> {
        let mut origin = [0.0; 3];
        let mut dims = [0; 3];
        for k in 0..3 {
            let a = ((lo[k] - margin) / h).floor();
            let b = ((hi[k] + margin) / h).ceil();
            origin[k] = a * h;
            dims[k] = (b - a).max(1.0) as usize;
        }
        GridDomain::new(origin, h, dims)
    }

    pub fn coord(&self, axis: usize, i: i64) -> f64 {
        self.origin[axis] + i as f64 * self.h
    }

    pub fn vertex(&self, idx: [i64; 3]) -> P3 {
        [self.coord(0, idx[0]), self.coord(1, idx[1]), self.coord(2, idx[2])]
    }

    pub fn upper(&self) -> P3 {
        self.vertex([self.dims[0] as i64, self.dims[1] as i64, self.dims[2] as i64])
    }

    pub fn cube_box(&self, c: [i64; 3]) -> (P3, P3) {
        (self.vertex(c), self.vertex([c[0] + 1, c[1] + 1, c[2] + 1]))
    }

    pub fn cube_center(&self, c: [i64; 3]) -> P3 {
        let h2 = 0.5 * self.h;
        [self.coord(0, c[0]) + h2, self.coord(1, c[1]) + h2, self.coord(2, c[2]) + h2]
    }

    pub fn has_cube(&self, c: [i64; 3]) -> bool {
        (0..3).all(|k| c[k] >= 0 && (c[k] as usize) < self.dims[k])
    }

    /// Cube containing `p` (floor), possibly out of range.
    pub fn cube_of(&self, p: P3) -> [i64; 3] {
        let f = |k: usize| ((p[k] - self.origin[k]) / self.h).floor() as i64;
        [f(0), f(1), f(2)]
    }

    pub fn cubes(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nx as i64).flat_map(move |i| (0..ny as i64).flat_map(move |j| (0..nz as i64).map(move |k| [i, j, k])))
    }

    pub fn cube_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn diameter(&self) -> f64 {
        crate::geometry::dist(self.origin, self.upper())
    }

    /// Half-step refinement used by the certifier: `2·dims + 1` nodes per axis.
    pub fn fine_dims(&self) -> [usize; 3] {
        [2 * self.dims[0] + 1, 2 * self.dims[1] + 1, 2 * self.dims[2] + 1]
    }

    pub fn fine_pos(&self, f: [i64; 3]) -> P3 {
        let g = 0.5 * self.h;
        [self.origin[0] + f[0] as f64 * g, self.origin[1] + f[1] as f64 * g, self.origin[2] + f[2] as f64 * g]
    }

    /// Cubes whose closed box meets the closed segment, within `eps`.
    pub fn cubes_meeting_segment(&self, a: P3, b: P3, eps: f64) -> Vec<[i64; 3]> {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for k in 0..3 {
            let m = a[k].min(b[k]) - eps;
            let x = a[k].max(b[k]) + eps;
            lo[k] = (((m - self.origin[k]) / self.h).floor() as i64 - 1).max(0);
            hi[k] = (((x - self.origin[k]) / self.h).floor() as i64 + 1).min(self.dims[k] as i64 - 1);
        }
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let (bl, bh) = self.cube_box([i, j, k]);
                    if segment_meets_box(
                        a,
                        b,
                        [bl[0] - eps, bl[1] - eps, bl[2] - eps],
                        [bh[0] + eps, bh[1] + eps, bh[2] + eps],
                    ) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }
}

/// Closed segment against a closed box (slab clipping).
pub fn segment_meets_box(a: P3, b: P3, lo: P3, hi: P3) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..3 {
        let d = b[k] - a[k];
        if d == 0.0 {
            if a[k] < lo[k] || a[k] > hi[k] {
                return false;
            }
        } else {
            let (mut u, mut v) = ((lo[k] - a[k]) / d, (hi[k] - a[k]) / d);
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
            t0 = t0.max(u);
            t1 = t1.min(v);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Closed unit square in the plane `x_axis = origin + idx[axis]·h`, spanning
/// `[idx[b], idx[b]+1]` in the two other axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Face {
    pub axis: u8,
    pub idx: [i32; 3],
}

/// Grid segment from vertex `idx` to `idx + e_axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub axis: u8,
    pub idx: [i32; 3],
}

fn unit(axis: usize) -> [i32; 3] {
    let mut e = [0; 3];
    e[axis] = 1;
    e
}

fn plus(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

impl Face {
    pub fn new(axis: usize, idx: [i32; 3]) -> Face {
        Face { axis: axis as u8, idx }
    }

    pub fn axis(&self) -> usize {
        self.axis as usize
    }

    /// The two in-plane axes in cyclic order.
    pub fn plane_axes(&self) -> (usize, usize) {
        let a = self.axis();
        ((a + 1) % 3, (a + 2) % 3)
    }

    pub fn corner_indices(&self) -> [[i32; 3]; 4] {
        let (u, v) = self.plane_axes();
        let (eu, ev) = (unit(u), unit(v));
        let p = self.idx;
        [p, plus(p, eu), plus(plus(p, eu), ev), plus(p, ev)]
    }

    pub fn corners(&self, d: &GridDomain) -> [P3; 4] {
        self.corner_indices().map(|c| d.vertex([c[0] as i64, c[1] as i64, c[2] as i64]))
    }

    pub fn center(&self, d: &GridDomain) -> P3 {
        let (u, v) = self.plane_axes();
        let mut c = d.vertex([self.idx[0] as i64, self.idx[1] as i64, self.idx[2] as i64]);
        c[u] += 0.5 * d.h;
        c[v] += 0.5 * d.h;
        c
    }

    /// Cubes on the negative and positive side along the normal axis.
    pub fn cubes(&self) -> ([i64; 3], [i64; 3]) {
        let p = [self.idx[0] as i64, self.idx[1] as i64, self.idx[2] as i64];
        let mut m = p;
        m[self.axis()] -= 1;
        (m, p)
    }

    pub fn edges(&self) -> [Edge; 4] {
        let (u, v) = self.plane_axes();
        let p = self.idx;
        [
            Edge { axis: u as u8, idx: p },
            Edge { axis: v as u8, idx: plus(p, unit(u)) },
            Edge { axis: u as u8, idx: plus(p, unit(v)) },
            Edge { axis: v as u8, idx: p },
        ]
    }

    pub fn in_domain(&self, d: &GridDomain) -> bool {
        let a = self.axis();
        (0..3).all(|k| {
            let i = self.idx[k];
            if k == a {
                i >= 0 && i as usize <= d.dims[k]
            } else {
                i >= 0 && (i as usize) < d.dims[k]
            }
        })
    }

    /// Does the closed square meet the frontier of the domain box?
    pub fn touches_frontier(&self, d: &GridDomain) -> bool {
        let a = self.axis();
        (0..3).any(|k| {
            let i = self.idx[k];
            if k == a {
                i == 0 || i as usize == d.dims[k]
            } else {
                i == 0 || i as usize + 1 == d.dims[k]
            }
        })
    }

    /// Fine-grid nodes (half step) of the closed square: 3 × 3.
    pub fn fine_nodes(&self) -> impl Iterator<Item = [i64; 3]> {
        let (u, v) = self.plane_axes();
        let base = [2 * self.idx[0] as i64, 2 * self.idx[1] as i64, 2 * self.idx[2] as i64];
        (0..3).flat_map(move |s| {
            (0..3).map(move |t| {
                let mut f = base;
                f[u] += s;
                f[v] += t;
                f
            })
        })
    }

    pub fn translate(&self, by: [i32; 3]) -> Face {
        Face { axis: self.axis, idx: plus(self.idx, by) }
    }
}

impl Edge {
    pub fn endpoints(&self) -> ([i32; 3], [i32; 3]) {
        (self.idx, plus(self.idx, unit(self.axis as usize)))
    }
}

/// The six faces of a cube.
pub fn cube_faces(c: [i64; 3]) -> [Face; 6] {
    let p = [c[0] as i32, c[1] as i32, c[2] as i32];
    let mut out = [Face::new(0, p); 6];
    for a in 0..3 {
        out[2 * a] = Face::new(a, p);
        out[2 * a + 1] = Face::new(a, plus(p, unit(a)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceComplex {
    pub domain: GridDomain,
    faces: BTreeSet<Face>,
}

impl FaceComplex {
    pub fn new(domain: GridDomain) -> FaceComplex {
        FaceComplex { domain, faces: BTreeSet::new() }
    }

    pub fn from_faces(domain: GridDomain, faces: impl IntoIterator<Item = Face>) -> Result<FaceComplex> {
        let mut x = FaceComplex::new(domain);
        for f in faces {
            x.insert(f)?;
        }
        Ok(x)
    }

    pub fn insert(&mut self, f: Face) -> Result<bool> {
        if !f.in_domain(&self.domain) {
            return Err(Error::InvalidFace(format!("{f:?} outside the grid")));
        }
        Ok(self.faces.insert(f))
    }

    pub fn remove(&mut self, f: &Face) -> bool {
        self.faces.remove(f)
    }

    pub fn contains(&self, f: &Face) -> bool {
        self.faces.contains(f)
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn faces(&self) -> &BTreeSet<Face> {
        &self.faces
    }

    pub fn iter(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter()
    }

    /// `|faces|·h²`.
    pub fn area(&self) -> f64 {
        self.faces.len() as f64 * self.domain.h * self.domain.h
    }

    pub fn with_faces(&self, faces: BTreeSet<Face>) -> FaceComplex {
        FaceComplex { domain: self.domain.clone(), faces }
    }

    pub fn union(&self, other: &FaceComplex) -> FaceComplex {
        self.with_faces(self.faces.union(&other.faces).copied().collect())
    }

    pub fn difference(&self, other: &FaceComplex) -> FaceComplex {
        self.with_faces(self.faces.difference(&other.faces).copied().collect())
    }

    pub fn retain(&mut self, f: impl FnMut(&Face) -> bool) {
        self.faces.retain(f)
    }

    /// Number of faces of `X` incident to each grid edge.
    pub fn edge_incidence(&self) -> HashMap<Edge, usize> {
        let mut m = HashMap::new();
        for f in &self.faces {
            for e in f.edges() {
                *m.entry(e).or_insert(0) += 1;
            }
        }
        m
    }

    /// Connected components under sharing an edge, each sorted.
    pub fn components(&self) -> Vec<Vec<Face>> {
        let mut by_edge: HashMap<Edge, Vec<Face>> = HashMap::new();
        for f in &self.faces {
            for e in f.edges() {
                by_edge.entry(e).or_default().push(*f);
            }
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &f in &self.faces {
            if seen.contains(&f) {
                continue;
            }
            let mut comp = vec![f];
            seen.insert(f);
            let mut i = 0;
            while i < comp.len() {
                let g = comp[i];
                for e in g.edges() {
                    for &n in &by_edge[&e] {
                        if seen.insert(n) {
                            comp.push(n);
                        }
                    }
                }
                i += 1;
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    /// V − E + F of the closed complex.
    pub fn euler_characteristic(&self) -> i64 {
        let mut verts = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for f in &self.faces {
            for c in f.corner_indices() {
                verts.insert(c);
            }
            for e in f.edges() {
                edges.insert(e);
            }
        }
        verts.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }

    pub fn bbox(&self) -> Option<(P3, P3)> {
        if self.faces.is_empty() {
            return None;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for f in &self.faces {
            for c in f.corners(&self.domain) {
                for k in 0..3 {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                }
            }
        }
        Some((lo, hi))
    }

    /// Half-step nodes of all faces; a point set whose Hausdorff distance to
    /// `|X|` is at most `h/(2√2)`.
    pub fn sample_nodes(&self) -> BTreeSet<[i64; 3]> {
        self.faces.iter().flat_map(|f| f.fine_nodes()).collect()
    }

    /// Hausdorff distance between the half-step node sets of two complexes on
    /// a common grid (within `h/√2` of the true distance between `|X|` and `|Y|`).
    pub fn hausdorff(&self, other: &FaceComplex) -> f64 {
        let a = self.sample_nodes();
        let b = other.sample_nodes();
        if a.is_empty() || b.is_empty() {
            return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
        }
        let g = 0.5 * self.domain.h;
        directed_hausdorff(&a, &b).max(directed_hausdorff(&b, &a)) * g
    }

    /// Sorted `axis i j k` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for f in &self.faces {
            s.push_str(&format!("{} {} {} {}\n", f.axis, f.idx[0], f.idx[1], f.idx[2]));
        }
        s
    }

    pub fn from_text(domain: GridDomain, text: &str) -> Result<FaceComplex> {
        let mut x = FaceComplex::new(domain);
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<i32> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidFace(format!("line {}: {e}", ln + 1)))?;
            if v.len() != 4 || !(0..3).contains(&v[0]) {
                return Err(Error::InvalidFace(format!("line {}: expected `axis i j k`", ln + 1)));
            }
            x.insert(Face::new(v[0] as usize, [v[1], v[2], v[3]]))?;
        }
        Ok(x)
    }

    fn indexed_vertices(&self) -> (BTreeMap<[i32; 3], usize>, Vec<P3>) {
        let mut idx = BTreeMap::new();
        for f in &self.faces {
            for c in f.corner_indices() {
                idx.insert(c, 0);
            }
        }
        let mut pts = Vec::with_capacity(idx.len());
        for (i, (c, slot)) in idx.iter_mut().enumerate() {
            *slot = i;
            pts.push(self.domain.vertex([c[0] as i64, c[1] as i64, c[2] as i64]));
        }
        (idx, pts)
    }

    pub fn to_obj(&self) -> String {
        let (idx, pts) = self.indexed_vertices();
        let mut s = String::new();
        for p in &pts {
            s.push_str(&format!("v {} {} {}\n", fmt_g9(p[0]), fmt_g9(p[1]), fmt_g9(p[2])));
        }
        for f in &self.faces {
            let c = f.corner_indices().map(|c| idx[&c] + 1);
            s.push_str(&format!("f {} {} {} {}\n", c[0], c[1], c[2], c[3]));
        }
        s
    }

    pub fn to_off(&self) -> String {
        let (idx, pts) = self.indexed_vertices();
        let mut s = format!("OFF\n{} {} 0\n", pts.len(), self.faces.len());
        for p in &pts {
            s.push_str(&format!("{} {} {}\n", fmt_g9(p[0]), fmt_g9(p[1]), fmt_g9(p[2])));
        }
        for f in &self.faces {
            let c = f.corner_indices().map(|c| idx[&c]);
            s.push_str(&format!("4 {} {} {} {}\n", c[0], c[1], c[2], c[3]));
        }
        s
    }
}

fn directed_hausdorff(a: &BTreeSet<[i64; 3]>, b: &BTreeSet<[i64; 3]>) -> f64 {
    // bucket b by coarse cells, then search shells outward
    let cell = 8i64;
    let key = |p: &[i64; 3]| [p[0].div_euclid(cell), p[1].div_euclid(cell), p[2].div_euclid(cell)];
    let mut buckets: HashMap<[i64; 3], Vec<[i64; 3]>> = HashMap::new();
    for p in b {
        buckets.entry(key(p)).or_default().push(*p);
    }
    let mut worst = 0.0f64;
    for p in a {
        let k = key(p);
        let mut best = f64::INFINITY;
        let mut r = 0i64;
        loop {
            for i in -r..=r {
                for j in -r..=r {
                    for l in -r..=r {
                        if i.abs().max(j.abs()).max(l.abs()) != r {
                            continue;
                        }
                        if let Some(v) = buckets.get(&[k[0] + i, k[1] + j, k[2] + l]) {
                            for q in v {
                                let d = (((p[0] - q[0]).pow(2) + (p[1] - q[1]).pow(2) + (p[2] - q[2]).pow(2)) as f64)
                                    .sqrt();
                                best = best.min(d);
                            }
                        }
                    }
                }
            }
            // every point in shell r+1 or beyond is at least r·cell away
            if best <= (r * cell) as f64 || r > 1 << 16 {
                break;
            }
            r += 1;
        }
        worst = worst.max(best);
    }
    worst
}

/// Faces whose dual segment (between the centers of the two adjacent cubes)
/// meets some triangle; touching counts.
pub fn rasterize_triangles(domain: &GridDomain, tris: &[Triangle]) -> FaceComplex {
    let mut out = FaceComplex::new(domain.clone());
    for t in tris {
        for_dual_candidates(domain, t, |f, a, b| {
            if !matches!(segment_triangle(a, b, t[0], t[1], t[2]), Crossing::None) {
                out.faces.insert(f);
            }
        });
    }
    out
}

/// Integer rasterization: each face carries the signed intersection number
/// of its dual segment (oriented along `+axis`) with the triangle chain.
/// Dual segments are shifted by a tiny generic offset so that no crossing is
/// degenerate; faces with zero total are omitted.
pub fn rasterize_signed(domain: &GridDomain, tris: &[Triangle]) -> BTreeMap<Face, i32> {
    let offsets = [[0.137, 0.291, 0.173], [-0.211, 0.087, 0.313], [0.059, -0.241, 0.197], [0.301, 0.163, -0.089]];
    let shifted = |a: P3, b: P3, off: [f64; 3]| {
        let d = crate::geometry::scale(off, 1e-6 * domain.h);
        (crate::geometry::add(a, d), crate::geometry::add(b, d))
    };
    let mut hits: BTreeMap<Face, Vec<usize>> = BTreeMap::new();
    for (ti, t) in tris.iter().enumerate() {
        for_dual_candidates(domain, t, |f, a, b| {
            let touched = std::iter::once((a, b))
                .chain(offsets.iter().map(|&o| shifted(a, b, o)))
                .any(|(p, q)| !matches!(segment_triangle(p, q, t[0], t[1], t[2]), Crossing::None));
            if touched {
                hits.entry(f).or_default().push(ti);
            }
        });
    }
    let mut out = BTreeMap::new();
    for (f, cand) in hits {
        let (a0, b0) = dual_segment(domain, &f);
        let mut total = None;
        for off in offsets {
            let (a, b) = shifted(a0, b0, off);
            let mut s = 0i32;
            let mut ok = true;
            for &ti in &cand {
                let t = &tris[ti];
                match segment_triangle(a, b, t[0], t[1], t[2]) {
                    Crossing::None => {}
                    Crossing::Transverse(x) => s += x as i32,
                    Crossing::Degenerate => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                total = Some(s);
                break;
            }
        }
        if let Some(s) = total.filter(|&s| s != 0) {
            out.insert(f, s);
        }
    }
    out
}

fn dual_segment(d: &GridDomain, f: &Face) -> (P3, P3) {
    let c = f.center(d);
    let a = f.axis();
    let (mut p, mut q) = (c, c);
    p[a] -= 0.5 * d.h;
    q[a] += 0.5 * d.h;
    (p, q)
}

fn for_dual_candidates(d: &GridDomain, t: &Triangle, mut visit: impl FnMut(Face, P3, P3)) {
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for k in 0..3 {
        let m = t.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let x = t.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        lo[k] = ((m - d.origin[k]) / d.h).floor() as i64 - 1;
        hi[k] = ((x - d.origin[k]) / d.h).floor() as i64 + 1;
    }
    for a in 0..3 {
        for i in lo[0]..=hi[0] + (a == 0) as i64 {
            for j in lo[1]..=hi[1] + (a == 1) as i64 {
                for k in lo[2]..=hi[2] + (a == 2) as i64 {
                    let f = Face::new(a, [i as i32, j as i32, k as i32]);
                    if !f.in_domain(d) {
                        continue;
                    }
                    let (p, q) = dual_segment(d, &f);
                    visit(f, p, q);
                }
            }
        }
    }
}

/// Triangulated cone from `apex` over a closed polygon.
pub fn cone_triangles(apex: P3, polygon: &[P3]) -> Vec<Triangle> {
    let n = polygon.len();
    (0..n).map(|i| [apex, polygon[i], polygon[(i + 1) % n]]).collect()
}

/// Ruled band between two closed polygons with matching vertex counts.
pub fn band_triangles(a: &[P3], b: &[P3]) -> Result<Vec<Triangle>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let n = a.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        out.push([a[i], a[j], b[j]]);
        out.push([a[i], b[j], b[i]]);
    }
    Ok(out)
}

pub fn triangles_area(tris: &[Triangle]) -> f64 {
    tris.iter().map(|t| crate::geometry::tri_area(t[0], t[1], t[2])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::circle;

    fn unit_grid(n: usize) -> GridDomain {
        GridDomain::new([0.0; 3], 1.0, [n, n, n]).unwrap()
    }

    #[test]
    fn area_is_face_count_times_h2() {
        let d = GridDomain::new([0.0; 3], 0.5, [4, 4, 4]).unwrap();
        let faces = (0..4).flat_map(|i| (0..3).map(move |j| Face::new(2, [i, j, 1]))).take(10);
        let x = FaceComplex::from_faces(d.clone(), faces).unwrap();
        assert_eq!(x.area(), 2.5);
        assert_eq!(FaceComplex::new(d).area(), 0.0);
    }

    #[test]
    fn out_of_domain_face_rejected() {
        let mut x = FaceComplex::new(unit_grid(2));
        assert!(x.insert(Face::new(0, [2, 1, 1])).is_ok());
        assert!(x.insert(Face::new(0, [3, 1, 1])).is_err());
        assert!(x.insert(Face::new(0, [1, 2, 1])).is_err());
    }

    #[test]
    fn cube_surface_topology() {
        let d = unit_grid(3);
        let x = FaceComplex::from_faces(d, cube_faces([1, 1, 1])).unwrap();
        assert_eq!(x.euler_characteristic(), 2);
        assert_eq!(x.components().len(), 1);
        assert!(x.edge_incidence().values().all(|&c| c == 2));
    }

    #[test]
    fn rasterized_disk_area() {
        let h = 1.0 / 64.0;
        let m = circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 256).unwrap();
        let d = GridDomain::around([-1.0, -1.0, 0.0], [1.0, 1.0, 0.0], h, 4.0 * h).unwrap();
        let x = rasterize_triangles(&d, &cone_triangles([0.0; 3], m.vertices()));
        assert!(x.iter().all(|f| f.axis() == 2));
        assert!((x.area() - std::f64::consts::PI).abs() < 0.05 * std::f64::consts::PI, "{}", x.area());
        assert_eq!(x.components().len(), 1);
        assert_eq!(x.euler_characteristic(), 1);
    }

    #[test]
    fn signed_raster_of_tilted_square_is_oriented() {
        let d = GridDomain::new([-2.0, -2.0, -2.0], 0.25, [16, 16, 16]).unwrap();
        let sq = [[-1.0, -1.0, 0.1], [1.0, -1.0, 0.3], [1.0, 1.0, 0.3], [-1.0, 1.0, 0.1]];
        let tris = vec![[sq[0], sq[1], sq[2]], [sq[0], sq[2], sq[3]]];
        let s = rasterize_signed(&d, &tris);
        assert!(!s.is_empty());
        assert!(s.iter().all(|(f, &c)| c == 1 || (f.axis() == 0 && c == -1)));
        let z: usize = s.iter().filter(|(f, _)| f.axis() == 2).count();
        assert_eq!(z, 64);
    }

    #[test]
    fn hausdorff_of_shifted_sheet() {
        let d = unit_grid(6);
        let a = FaceComplex::from_faces(d.clone(), [Face::new(2, [1, 1, 2]), Face::new(2, [2, 1, 2])]).unwrap();
        let b = FaceComplex::from_faces(d, [Face::new(2, [1, 1, 3]), Face::new(2, [2, 1, 3])]).unwrap();
        assert!((a.hausdorff(&b) - 1.0).abs() < 1e-12);
        assert_eq!(a.hausdorff(&a), 0.0);
    }

    #[test]
    fn text_and_obj_are_deterministic() {
        let d = unit_grid(2);
        let x = FaceComplex::from_faces(d.clone(), [Face::new(1, [0, 1, 0])]).unwrap();
        let y = FaceComplex::from_text(d, &x.to_text()).unwrap();
        assert_eq!(x, y);
        let obj = x.to_obj();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 1);
        assert!(x.to_off().starts_with("OFF\n4 1 0\n"));
    }

    #[test]
    fn segment_box_cases() {
        assert!(segment_meets_box([-1.0, 0.5, 0.5], [2.0, 0.5, 0.5], [0.0; 3], [1.0; 3]));
        assert!(segment_meets_box([1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [0.0; 3], [1.0; 3]));
        assert!(!segment_meets_box([1.5, 0.0, 0.0], [2.0, 2.0, 2.0], [0.0; 3], [1.0; 3]));
    }
}
