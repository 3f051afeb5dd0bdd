//! Polygonal loops in R³, exact linking numbers, the Gauss-integral cross
//! check, and generators of simple links and ℓ-links.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    add, cross, dist, dot, norm, normalize, orient2d, scale, segment_segment_closest, segment_triangle,
    segments_intersect_3d, sub, Crossing, P3,
};
use crate::lattice::integer_kernel;

/// Closed polygon; the last vertex connects back to the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<P3>", into = "Vec<P3>")]
pub struct Loop {
    vertices: Vec<P3>,
}

impl TryFrom<Vec<P3>> for Loop {
    type Error = Error;
    fn try_from(v: Vec<P3>) -> Result<Loop> {
        Loop::new(v)
    }
}

impl From<Loop> for Vec<P3> {
    fn from(l: Loop) -> Vec<P3> {
        l.vertices
    }
}

impl Loop {
    /// Validated simple closed polygon.
    pub fn new(vertices: Vec<P3>) -> Result<Loop> {
        let l = Loop { vertices };
        l.validate()?;
        Ok(l)
    }

    /// Skip the O(N²) simplicity check; callers must know the polygon is simple.
    pub fn new_unchecked(vertices: Vec<P3>) -> Loop {
        Loop { vertices }
    }

    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return Err(Error::InvalidLoop(format!("{n} vertices")));
        }
        if v.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidLoop("non-finite vertex".into()));
        }
        for i in 0..n {
            if v[i] == v[(i + 1) % n] {
                return Err(Error::InvalidLoop(format!("repeated vertex at {i}")));
            }
        }
        for i in 0..n {
            // adjacent segments may only share their common vertex
            let (a, b, c) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
            if collinear(a, b, c) && dot(sub(b, a), sub(c, b)) < 0.0 {
                return Err(Error::InvalidLoop(format!("backtrack at {}", (i + 1) % n)));
            }
        }
        let boxes: Vec<(P3, P3)> = (0..n).map(|i| seg_box(v[i], v[(i + 1) % n])).collect();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if !boxes_overlap(&boxes[i], &boxes[j]) {
                    continue;
                }
                if segments_intersect_3d(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(Error::InvalidLoop(format!("segments {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[P3] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = (P3, P3)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| dist(a, b)).sum()
    }

    pub fn centroid(&self) -> P3 {
        let s = self.vertices.iter().fold([0.0; 3], |acc, &p| add(acc, p));
        scale(s, 1.0 / self.vertices.len() as f64)
    }

    pub fn reversed(&self) -> Loop {
        let mut v = self.vertices.clone();
        v.reverse();
        Loop { vertices: v }
    }

    pub fn map(&self, mut f: impl FnMut(P3) -> P3) -> Loop {
        Loop { vertices: self.vertices.iter().map(|&p| f(p)).collect() }
    }

    pub fn bbox(&self) -> (P3, P3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Point and unit tangent at arclength fraction `t ∈ [0, 1)`.
    pub fn point_at(&self, t: f64) -> (P3, P3, usize) {
        let total = self.length();
        let mut target = t.rem_euclid(1.0) * total;
        for (i, (a, b)) in self.segments().enumerate() {
            let l = dist(a, b);
            if target <= l || i + 1 == self.len() {
                let s = (target / l).min(1.0);
                return (crate::geometry::lerp(a, b, s), normalize(sub(b, a)), i);
            }
            target -= l;
        }
        unreachable!("loop has at least one segment")
    }

    /// One `x y z` line per vertex, `%.9g`-style.
    pub fn to_txt(&self) -> String {
        let mut s = String::new();
        for p in &self.vertices {
            s.push_str(&format!("{} {} {}\n", fmt_g9(p[0]), fmt_g9(p[1]), fmt_g9(p[2])));
        }
        s
    }

    pub fn from_txt(text: &str) -> Result<Loop> {
        let mut v = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidLoop(format!("line {}: {e}", ln + 1)))?;
            if nums.len() != 3 {
                return Err(Error::InvalidLoop(format!("line {}: expected 3 numbers", ln + 1)));
            }
            v.push([nums[0], nums[1], nums[2]]);
        }
        Loop::new(v)
    }
}

/// C `%.9g` formatting.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let m = format!("{:.8e}", x);
    let (mant, e) = m.split_once('e').unwrap();
    let e: i32 = e.parse().unwrap();
    if !(-4..9).contains(&e) {
        format!("{}e{}{:02}", trim_zeros(mant), if e < 0 { '-' } else { '+' }, e.abs())
    } else {
        trim_zeros(&format!("{:.*}", (8 - e) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn collinear(a: P3, b: P3, c: P3) -> bool {
    orient2d([a[0], a[1]], [b[0], b[1]], [c[0], c[1]]) == 0
        && orient2d([a[1], a[2]], [b[1], b[2]], [c[1], c[2]]) == 0
        && orient2d([a[0], a[2]], [b[0], b[2]], [c[0], c[2]]) == 0
}

fn seg_box(a: P3, b: P3) -> (P3, P3) {
    ([a[0].min(b[0]), a[1].min(b[1]), a[2].min(b[2])], [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])])
}

fn boxes_overlap(a: &(P3, P3), b: &(P3, P3)) -> bool {
    (0..3).all(|k| a.0[k] <= b.1[k] && b.0[k] <= a.1[k])
}

/// Disjoint union of oriented loops `M = ⊔ M_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySystem {
    pub components: Vec<Loop>,
}

impl BoundarySystem {
    pub fn new(components: Vec<Loop>) -> Result<BoundarySystem> {
        for i in 0..components.len() {
            for j in i + 1..components.len() {
                check_disjoint(&components[i], &components[j])?;
            }
        }
        Ok(BoundarySystem { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(|l| l.length()).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = P3> + '_ {
        self.components.iter().flat_map(|l| l.vertices().iter().copied())
    }

    pub fn bbox(&self) -> (P3, P3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in self.vertices() {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Distance from `p` to the polygonal set.
    pub fn distance(&self, p: P3) -> f64 {
        self.components
            .iter()
            .flat_map(|l| l.segments())
            .map(|(a, b)| crate::geometry::point_segment_dist(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// One closed polyline object per component.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        let mut base = 1;
        for (i, l) in self.components.iter().enumerate() {
            s.push_str(&format!("o loop{i}\n"));
            for p in l.vertices() {
                s.push_str(&format!("v {} {} {}\n", fmt_g9(p[0]), fmt_g9(p[1]), fmt_g9(p[2])));
            }
            let idx: Vec<String> = (0..l.len()).chain([0]).map(|k| (base + k).to_string()).collect();
            s.push_str(&format!("l {}\n", idx.join(" ")));
            base += l.len();
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("loop,vertex,x,y,z\n");
        for (i, l) in self.components.iter().enumerate() {
            for (k, p) in l.vertices().iter().enumerate() {
                s.push_str(&format!("{i},{k},{},{},{}\n", fmt_g9(p[0]), fmt_g9(p[1]), fmt_g9(p[2])));
            }
        }
        s
    }
}

/// Minimum distance between two loops with the realizing points.
pub fn loop_distance(a: &Loop, b: &Loop) -> (f64, P3, P3) {
    let mut best = (f64::INFINITY, [0.0; 3], [0.0; 3]);
    for (a0, a1) in a.segments() {
        for (b0, b1) in b.segments() {
            let r = segment_segment_closest(a0, a1, b0, b1);
            if r.0 < best.0 {
                best = r;
            }
        }
    }
    best
}

fn check_disjoint(a: &Loop, b: &Loop) -> Result<()> {
    for (a0, a1) in a.segments() {
        for (b0, b1) in b.segments() {
            if segments_intersect_3d(a0, a1, b0, b1) {
                let (_, p, _) = segment_segment_closest(a0, a1, b0, b1);
                return Err(Error::LoopsIntersect(p));
            }
        }
    }
    Ok(())
}

const MAX_DIRECTION_TRIES: usize = 64;

/// Deterministic sequence of pseudo-random unit directions.
pub fn direction_sequence(seed: u64, count: usize) -> Vec<P3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n = norm(v);
            if n > 0.1 && n <= 1.0 {
                break scale(v, 1.0 / n);
            }
        })
        .collect()
}

/// Signed intersection count of `b` with the cone over `a` from the apex
/// placed far along `d`; `None` when some crossing is not transverse.
pub fn linking_number_along(a: &Loop, b: &Loop, d: P3) -> Option<i64> {
    let (lo, hi) = a.bbox();
    let (lo2, hi2) = b.bbox();
    let diam = (0..3).map(|k| hi[k].max(hi2[k]) - lo[k].min(lo2[k])).fold(0.0, f64::max);
    let apex = add(a.centroid(), scale(d, 4.0 * diam + 1.0));
    cone_intersection(a, apex, b)
}

/// Signed crossings of `b` through the triangles `(apex, a_i, a_{i+1})`.
pub fn cone_intersection(a: &Loop, apex: P3, b: &Loop) -> Option<i64> {
    let mut total = 0i64;
    for (a0, a1) in a.segments() {
        for (b0, b1) in b.segments() {
            match segment_triangle(b0, b1, apex, a0, a1) {
                Crossing::None => {}
                Crossing::Transverse(s) => total += s as i64,
                Crossing::Degenerate => return None,
            }
        }
    }
    Some(total)
}

/// Exact integer linking number.
pub fn linking_number(a: &Loop, b: &Loop) -> Result<i64> {
    check_disjoint(a, b)?;
    for d in direction_sequence(0x5eed_11e7, MAX_DIRECTION_TRIES) {
        if let Some(l) = linking_number_along(a, b, d) {
            return Ok(l);
        }
    }
    Err(Error::NonConvergence("no generic projection direction found".into()))
}

/// Solid-angle contribution of a segment pair to the Gauss integral (exact
/// closed form for straight segments), divided by 4π.
fn gauss_pair(a1: P3, a2: P3, b1: P3, b2: P3) -> f64 {
    let r13 = sub(b1, a1);
    let r14 = sub(b2, a1);
    let r23 = sub(b1, a2);
    let r24 = sub(b2, a2);
    let c = [cross(r13, r14), cross(r14, r24), cross(r24, r23), cross(r23, r13)];
    if c.iter().any(|v| norm(*v) == 0.0) {
        return 0.0;
    }
    let n: Vec<P3> = c.iter().map(|&v| normalize(v)).collect();
    let asin = |x: f64| x.clamp(-1.0, 1.0).asin();
    let omega = asin(dot(n[0], n[1])) + asin(dot(n[1], n[2])) + asin(dot(n[2], n[3])) + asin(dot(n[3], n[0]));
    let s = dot(cross(sub(b2, b1), sub(a2, a1)), r13);
    let sign = if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    };
    sign * omega / (4.0 * std::f64::consts::PI)
}

fn gauss_sum(a: &Loop, b: &Loop) -> f64 {
    let mut total = 0.0;
    for (a0, a1) in a.segments() {
        for (b0, b1) in b.segments() {
            total += gauss_pair(a0, a1, b0, b1);
        }
    }
    total
}

fn subdivide(l: &Loop) -> Loop {
    let mut v = Vec::with_capacity(2 * l.len());
    for (a, b) in l.segments() {
        v.push(a);
        v.push(crate::geometry::lerp(a, b, 0.5));
    }
    Loop { vertices: v }
}

/// Gauss linking integral as a sum of exact segment-pair solid angles.
/// Segments are subdivided while the estimate is farther than `tol` from
/// an integer, up to a fixed budget.
pub fn gauss_linking(a: &Loop, b: &Loop, tol: f64) -> Result<f64> {
    check_disjoint(a, b)?;
    let (mut a, mut b) = (a.clone(), b.clone());
    for _ in 0..4 {
        let g = gauss_sum(&a, &b);
        if (g - g.round()).abs() < tol {
            return Ok(g);
        }
        a = subdivide(&a);
        b = subdivide(&b);
    }
    Err(Error::NonConvergence(format!("Gauss integral not within {tol} of an integer")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkClass {
    pub linking: Vec<i64>,
    /// `(i, L)` when `L(S, M_i) = L ≠ 0` and all other entries vanish.
    pub single: Option<(usize, i64)>,
}

impl LinkClass {
    pub fn simple_link(&self) -> Option<usize> {
        self.l_link(1)
    }

    /// Component index when this is an ℓ-link.
    pub fn l_link(&self, ell: i64) -> Option<usize> {
        match self.single {
            Some((i, l)) if l.abs() == ell => Some(i),
            _ => None,
        }
    }
}

pub fn classify_vector(linking: Vec<i64>) -> LinkClass {
    let nz: Vec<usize> = (0..linking.len()).filter(|&i| linking[i] != 0).collect();
    let single = (nz.len() == 1).then(|| (nz[0], linking[nz[0]]));
    LinkClass { linking, single }
}

pub fn classify_link(s: &Loop, m: &BoundarySystem) -> Result<LinkClass> {
    let v = m.components.iter().map(|c| linking_number(s, c)).collect::<Result<Vec<_>>>()?;
    Ok(classify_vector(v))
}

/// Orthonormal frame `(N, B)` normal to the unit tangent `t`.
pub fn normal_frame(t: P3) -> (P3, P3) {
    let e = if t[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let n = normalize(cross(t, e));
    let b = cross(t, n);
    (n, b)
}

pub const MERIDIAN_SIDES: usize = 16;

fn circle_in_plane(p: P3, n: P3, b: P3, r: f64, sides: usize, phase: f64) -> Vec<P3> {
    (0..sides)
        .map(|k| {
            let th = phase + 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
            add(p, add(scale(n, r * th.cos()), scale(b, r * th.sin())))
        })
        .collect()
}

/// Polygonal meridians of `M_i` at `count` arclength positions, each
/// verified to be a simple link of `M` at component `i`.
pub fn meridian_links(m: &BoundarySystem, i: usize, radius: f64, count: usize, seed: u64) -> Result<Vec<Loop>> {
    let comp = m.components.get(i).ok_or_else(|| Error::Precondition(format!("no component {i}")))?;
    for (j, other) in m.components.iter().enumerate() {
        if j != i && radius >= 0.5 * loop_distance(comp, other).0 {
            return Err(Error::Precondition(format!(
                "meridian radius {radius} not below half the distance to component {j}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.gen_range(0.0..1.0);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let t = (offset + k as f64) / count as f64;
        let (p, tan, _) = comp.point_at(t);
        let (n, b) = normal_frame(tan);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let lp = Loop::new(circle_in_plane(p, n, b, radius, MERIDIAN_SIDES, phase))?;
        let cls = classify_link(&lp, m).map_err(|e| Error::Precondition(format!("meridian {k}: {e}")))?;
        if cls.simple_link() != Some(i) {
            return Err(Error::Precondition(format!(
                "meridian {k} of radius {radius} is not a simple link (linking {:?})",
                cls.linking
            )));
        }
        out.push(lp);
    }
    Ok(out)
}

/// Embedded curve winding twice around `M_i` near the point at arclength
/// fraction `t`: radius oscillates in `[ρ − δ, ρ + δ]` and the curve shifts
/// along the tangent so the two passes never meet. Links `M_i` twice.
pub fn doubled_meridian(m: &BoundarySystem, i: usize, t: f64, rho: f64, delta: f64, sides: usize) -> Result<Loop> {
    let comp = m.components.get(i).ok_or_else(|| Error::Precondition(format!("no component {i}")))?;
    if !(delta > 0.0 && delta < rho) {
        return Err(Error::Precondition("need 0 < δ < ρ".into()));
    }
    let (p, tan, _) = comp.point_at(t);
    let (n, b) = normal_frame(tan);
    let pts = (0..2 * sides)
        .map(|k| {
            let s = 4.0 * std::f64::consts::PI * k as f64 / (2 * sides) as f64;
            let r = rho + delta * (s / 2.0).cos();
            add(p, add(add(scale(n, r * s.cos()), scale(b, r * s.sin())), scale(tan, delta * (s / 2.0).sin())))
        })
        .collect();
    Loop::new(pts)
}

/// Integer kernel shared by homomorphisms `Z^c → Z` given as rows.
pub fn common_kernel(maps: &[Vec<i64>]) -> Vec<Vec<i128>> {
    integer_kernel(maps)
}

/// Planar circle of radius `r` about `center` with normal `axis`.
pub fn circle(center: P3, axis: P3, r: f64, sides: usize) -> Result<Loop> {
    let (n, b) = normal_frame(normalize(axis));
    Loop::new(circle_in_plane(center, n, b, r, sides, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn hopf() -> (Loop, Loop) {
        let a = circle([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, 48).unwrap();
        let b = circle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 48).unwrap();
        (a, b)
    }

    pub(crate) fn torus_link_24(samples: usize) -> (Loop, Loop) {
        let (big, small) = (2.0, 0.7);
        let comp = |phase: f64| {
            let v = (0..samples)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
                    let w = 2.0 * t + phase;
                    [(big + small * w.cos()) * t.cos(), (big + small * w.cos()) * t.sin(), small * w.sin()]
                })
                .collect();
            Loop::new(v).unwrap()
        };
        (comp(0.0), comp(std::f64::consts::PI))
    }

    #[test]
    fn hopf_split_and_torus_link() {
        let (a, b) = hopf();
        let l = linking_number(&a, &b).unwrap();
        assert_eq!(l.abs(), 1);
        assert_eq!(linking_number(&b, &a).unwrap(), l);
        assert_eq!(linking_number(&a.reversed(), &b).unwrap(), -l);
        let far = b.map(|p| add(p, [10.0, 0.0, 0.0]));
        assert_eq!(linking_number(&a, &far).unwrap(), 0);
        let (c, d) = torus_link_24(64);
        assert_eq!(linking_number(&c, &d).unwrap().abs(), 2);
    }

    #[test]
    fn gauss_integral_matches_and_fixes_sign() {
        let (a, b) = hopf();
        let g = gauss_linking(&a, &b, 1e-6).unwrap();
        assert!((g - linking_number(&a, &b).unwrap() as f64).abs() < 1e-9, "{g}");
        let (c, d) = torus_link_24(64);
        let g = gauss_linking(&c, &d, 1e-6).unwrap();
        assert!((g - linking_number(&c, &d).unwrap() as f64).abs() < 1e-9, "{g}");
        let far = b.map(|p| add(p, [10.0, 0.0, 0.0]));
        assert!(gauss_linking(&a, &far, 1e-6).unwrap().abs() < 1e-9);
        let big = |l: &Loop| l.map(|p| scale(p, 10.0));
        let g10 = gauss_linking(&big(&a), &big(&b), 1e-6).unwrap();
        assert!((g10 - gauss_linking(&a, &b, 1e-6).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn projection_direction_independence() {
        let (c, d) = torus_link_24(64);
        let want = linking_number(&c, &d).unwrap();
        for dir in direction_sequence(7, 20) {
            if let Some(l) = linking_number_along(&c, &d, dir) {
                assert_eq!(l, want);
            }
        }
    }

    #[test]
    fn intersecting_loops_are_rejected() {
        let a = Loop::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]).unwrap();
        let b = Loop::new(vec![[1.0, 0.0, -1.0], [1.0, 0.0, 1.0], [3.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(linking_number(&a, &b), Err(Error::LoopsIntersect(_))));
    }

    #[test]
    fn invalid_loops() {
        assert!(Loop::new(vec![[0.0; 3], [1.0, 0.0, 0.0]]).is_err());
        assert!(Loop::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).is_err());
        // bow tie
        let bow = vec![[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(Loop::new(bow).is_err());
    }

    #[test]
    fn meridians_of_circle() {
        let m = BoundarySystem::new(vec![circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 64).unwrap()]).unwrap();
        let ls = meridian_links(&m, 0, 0.2, 8, 3).unwrap();
        assert_eq!(ls.len(), 8);
        for l in &ls {
            assert_eq!(classify_link(l, &m).unwrap().simple_link(), Some(0));
        }
    }

    #[test]
    fn meridians_of_second_component_and_radius_guard() {
        let m = BoundarySystem::new(vec![
            circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 64).unwrap(),
            circle([0.0, 0.0, 0.5], [0.0, 0.0, 1.0], 1.0, 64).unwrap(),
        ])
        .unwrap();
        for l in meridian_links(&m, 1, 0.1, 4, 1).unwrap() {
            let c = classify_link(&l, &m).unwrap();
            assert_eq!(c.linking[0], 0);
            assert_eq!(c.linking[1].abs(), 1);
        }
        assert!(meridian_links(&m, 1, 0.5, 4, 1).is_err());
    }

    #[test]
    fn doubled_meridian_is_a_two_link() {
        let m = BoundarySystem::new(vec![circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 64).unwrap()]).unwrap();
        let l = doubled_meridian(&m, 0, 0.1, 0.2, 0.05, 24).unwrap();
        let c = classify_link(&l, &m).unwrap();
        assert_eq!(c.l_link(2), Some(0));
        assert_eq!(c.simple_link(), None);
    }

    #[test]
    fn loop_encircling_two_components() {
        // two parallel unit circles; a long thin loop threads both
        let m = BoundarySystem::new(vec![
            circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 32).unwrap(),
            circle([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 1.0, 32).unwrap(),
            circle([5.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, 32).unwrap(),
        ])
        .unwrap();
        let s = Loop::new(vec![[0.9, 0.0, -1.0], [0.9, 0.0, 2.0], [1.1, 0.0, 2.0], [1.1, 0.0, -1.0]]).unwrap();
        let c = classify_link(&s, &m).unwrap();
        assert_eq!(c.linking.iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1, 1, 0]);
        assert!(c.simple_link().is_none());
    }

    #[test]
    fn text_round_trip() {
        let (a, _) = hopf();
        let back = Loop::from_txt(&a.to_txt()).unwrap();
        for (p, q) in a.vertices().iter().zip(back.vertices()) {
            assert!(dist(*p, *q) < 1e-8);
        }
        assert_eq!(fmt_g9(0.5), "0.5");
        assert_eq!(fmt_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g9(-2.0), "-2");
        assert_eq!(fmt_g9(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1.0e10), "1e+10");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn jitter_inside_tube_keeps_linking(seed in 0u64..1000) {
            let (a, b) = hopf();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = b.map(|p| {
                let e = [rng.gen_range(-0.02..0.02), rng.gen_range(-0.02..0.02), rng.gen_range(-0.02..0.02)];
                add(p, e)
            });
            prop_assume!(loop_distance(&a, &j).0 > 0.05);
            prop_assert_eq!(linking_number(&a, &j).unwrap(), linking_number(&a, &b).unwrap());
        }

        #[test]
        fn gauss_rounds_to_exact(dx in -0.5f64..0.5, dz in -0.5f64..0.5) {
            let (a, _) = hopf();
            let b = circle([1.0 + dx, 0.0, dz], [0.0, 1.0, 0.0], 1.0, 24).unwrap();
            prop_assume!(loop_distance(&a, &b).0 > 1e-3);
            let g = gauss_linking(&a, &b, 1e-4).unwrap();
            prop_assert!((g - linking_number(&a, &b).unwrap() as f64).abs() < 1e-4);
        }
    }

    #[test]
    fn loop_system_obj_has_one_polyline_per_loop() {
        let a = circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 8).unwrap();
        let b = circle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 8).unwrap();
        let obj = BoundarySystem::new(vec![a, b]).unwrap().to_obj();
        assert_eq!(obj.lines().filter(|l| l.starts_with("o ")).count(), 2);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 16);
        assert!(obj.contains("l 9 10 11 12 13 14 15 16 9\n"));
    }
}
