//! Small 3-vector helpers and exact orientation predicates.

use robust::{Coord, Coord3D};

pub type P3 = [f64; 3];

pub fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: P3, b: P3) -> f64 {
    norm(sub(a, b))
}

pub fn lerp(a: P3, b: P3, t: f64) -> P3 {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

pub fn normalize(a: P3) -> P3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Sign of `det[b − a, c − a, d − a]`: positive when `d` lies on the side
/// of plane `abc` that `(b − a) × (c − a)` points to. Exact.
pub fn orient3d(a: P3, b: P3, c: P3, d: P3) -> i8 {
    let c3 = |p: P3| Coord3D { x: p[0], y: p[1], z: p[2] };
    let v = robust::orient3d(c3(a), c3(b), c3(c), c3(d));
    // robust uses det[a − d, b − d, c − d], the opposite orientation
    if v > 0.0 {
        -1
    } else if v < 0.0 {
        1
    } else {
        0
    }
}

/// Sign of `(b − a) × (c − a)`: positive for a counterclockwise triple. Exact.
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> i8 {
    let c2 = |p: [f64; 2]| Coord { x: p[0], y: p[1] };
    let v = robust::orient2d(c2(a), c2(b), c2(c));
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Outcome of an exact segment–triangle test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    None,
    /// Transverse crossing through the open triangle; the sign is `+1` when the
    /// segment runs toward the triangle's normal side.
    Transverse(i8),
    /// Touches an edge, vertex or lies in the plane.
    Degenerate,
}

pub fn segment_triangle(p0: P3, p1: P3, a: P3, b: P3, c: P3) -> Crossing {
    let s0 = orient3d(a, b, c, p0);
    let s1 = orient3d(a, b, c, p1);
    if s0 == s1 && s0 != 0 {
        return Crossing::None;
    }
    if s0 == 0 && s1 == 0 {
        return if coplanar_segment_triangle(p0, p1, a, b, c) { Crossing::Degenerate } else { Crossing::None };
    }
    let e0 = orient3d(p0, p1, a, b);
    let e1 = orient3d(p0, p1, b, c);
    let e2 = orient3d(p0, p1, c, a);
    let pos = e0 > 0 || e1 > 0 || e2 > 0;
    let neg = e0 < 0 || e1 < 0 || e2 < 0;
    if pos && neg {
        return Crossing::None;
    }
    if s0 == 0 || s1 == 0 || e0 == 0 || e1 == 0 || e2 == 0 {
        return Crossing::Degenerate;
    }
    Crossing::Transverse(if s1 > 0 { 1 } else { -1 })
}

fn dominant_drop(n: P3) -> (usize, usize) {
    let ax = n.iter().map(|x| x.abs()).collect::<Vec<_>>();
    if ax[0] >= ax[1] && ax[0] >= ax[2] {
        (1, 2)
    } else if ax[1] >= ax[2] {
        (2, 0)
    } else {
        (0, 1)
    }
}

fn coplanar_segment_triangle(p0: P3, p1: P3, a: P3, b: P3, c: P3) -> bool {
    let n = cross(sub(b, a), sub(c, a));
    let (i, j) = dominant_drop(n);
    let pr = |p: P3| [p[i], p[j]];
    let (q0, q1, ta, tb, tc) = (pr(p0), pr(p1), pr(a), pr(b), pr(c));
    let inside = |q: [f64; 2]| {
        let o = [orient2d(ta, tb, q), orient2d(tb, tc, q), orient2d(tc, ta, q)];
        !(o.iter().any(|&x| x > 0) && o.iter().any(|&x| x < 0))
    };
    inside(q0)
        || inside(q1)
        || segments_intersect_2d(q0, q1, ta, tb)
        || segments_intersect_2d(q0, q1, tb, tc)
        || segments_intersect_2d(q0, q1, tc, ta)
}

/// Closed 2D segment intersection. Exact.
pub fn segments_intersect_2d(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let o1 = orient2d(a, b, c);
    let o2 = orient2d(a, b, d);
    let o3 = orient2d(c, d, a);
    let o4 = orient2d(c, d, b);
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 && !(o1 == 0 && o2 == 0) {
        return true;
    }
    let on = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    (o1 == 0 && on(a, b, c)) || (o2 == 0 && on(a, b, d)) || (o3 == 0 && on(c, d, a)) || (o4 == 0 && on(c, d, b))
}

/// Closed 3D segment intersection. Exact.
pub fn segments_intersect_3d(a: P3, b: P3, c: P3, d: P3) -> bool {
    if orient3d(a, b, c, d) != 0 {
        return false;
    }
    let n = cross(sub(b, a), sub(d, c));
    let n = if norm(n) > 0.0 {
        n
    } else {
        // parallel or degenerate: use any normal of the common plane
        let m = cross(sub(b, a), sub(c, a));
        if norm(m) > 0.0 {
            m
        } else {
            let u = sub(b, a);
            let u = if norm(u) > 0.0 { u } else { sub(d, c) };
            let e = if u[0].abs() <= u[1].abs() && u[0].abs() <= u[2].abs() {
                [1.0, 0.0, 0.0]
            } else if u[1].abs() <= u[2].abs() {
                [0.0, 1.0, 0.0]
            } else {
                [0.0, 0.0, 1.0]
            };
            cross(u, e)
        }
    };
    let (i, j) = dominant_drop(n);
    let pr = |p: P3| [p[i], p[j]];
    if !segments_intersect_2d(pr(a), pr(b), pr(c), pr(d)) {
        return false;
    }
    // the projection is injective on the common plane unless every point is collinear
    let m = cross(sub(b, a), sub(c, a));
    if norm(m) == 0.0 && norm(cross(sub(b, a), sub(d, a))) == 0.0 {
        // all collinear: compare along the line
        let u = sub(b, a);
        let k = (0..3).max_by(|&x, &y| u[x].abs().total_cmp(&u[y].abs())).unwrap();
        let (lo1, hi1) = (a[k].min(b[k]), a[k].max(b[k]));
        let (lo2, hi2) = (c[k].min(d[k]), c[k].max(d[k]));
        return lo1 <= hi2 && lo2 <= hi1;
    }
    true
}

/// Closest points between segments `[p0,p1]` and `[q0,q1]`.
pub fn segment_segment_closest(p0: P3, p1: P3, q0: P3, q1: P3) -> (f64, P3, P3) {
    let d1 = sub(p1, p0);
    let d2 = sub(q1, q0);
    let r = sub(p0, q0);
    let a = dot(d1, d1);
    let e = dot(d2, d2);
    let f = dot(d2, r);
    let (mut s, mut t);
    if a <= 0.0 && e <= 0.0 {
        s = 0.0;
        t = 0.0;
    } else if a <= 0.0 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(d1, r);
        if e <= 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(d1, d2);
            let denom = a * e - b * b;
            s = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    let cp = lerp(p0, p1, s);
    let cq = lerp(q0, q1, t);
    (dist(cp, cq), cp, cq)
}

pub fn point_segment_dist(p: P3, a: P3, b: P3) -> f64 {
    let d = sub(b, a);
    let l = dot(d, d);
    let t = if l > 0.0 { (dot(sub(p, a), d) / l).clamp(0.0, 1.0) } else { 0.0 };
    dist(p, lerp(a, b, t))
}

/// Closed segment against an axis-aligned closed rectangle lying in the
/// plane `x_axis = c` with extents `lo..hi` in the two other axes (cyclic
/// order). Conservative: near-touches within `eps` count as hits.
pub fn segment_hits_rect(p0: P3, p1: P3, axis: usize, c: f64, lo: [f64; 2], hi: [f64; 2], eps: f64) -> bool {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let (a0, a1) = (p0[axis] - c, p1[axis] - c);
    if (a0 > eps && a1 > eps) || (a0 < -eps && a1 < -eps) {
        return false;
    }
    let inside = |x: f64, y: f64| x >= lo[0] - eps && x <= hi[0] + eps && y >= lo[1] - eps && y <= hi[1] + eps;
    if a0.abs() <= eps && a1.abs() <= eps {
        // in-plane: clip the 2D segment against the rectangle
        return clip_2d([p0[u], p0[v]], [p1[u], p1[v]], [lo[0] - eps, lo[1] - eps], [hi[0] + eps, hi[1] + eps]);
    }
    if a0.abs() <= eps && inside(p0[u], p0[v]) {
        return true;
    }
    if a1.abs() <= eps && inside(p1[u], p1[v]) {
        return true;
    }
    if a0 == a1 {
        return false;
    }
    let t = a0 / (a0 - a1);
    if !(0.0..=1.0).contains(&t) {
        return false;
    }
    let x = p0[u] + t * (p1[u] - p0[u]);
    let y = p0[v] + t * (p1[v] - p0[v]);
    inside(x, y)
}

/// Liang–Barsky test: does the segment meet the closed box?
pub fn clip_2d(p: [f64; 2], q: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        let d = q[k] - p[k];
        for (num, den) in [(p[k] - lo[k], -d), (hi[k] - p[k], d)] {
            if den == 0.0 {
                if num < 0.0 {
                    return false;
                }
            } else {
                let r = num / den;
                if den < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
    }
    t0 <= t1
}

/// Area of triangle `abc`.
pub fn tri_area(a: P3, b: P3, c: P3) -> f64 {
    0.5 * norm(cross(sub(b, a), sub(c, a)))
}

/// Separating-axis test for two convex point sets over the given axes.
/// Conservative: a gap of at most `eps` along every axis counts as contact.
pub fn convex_sets_intersect(a: &[P3], b: &[P3], axes: &[P3], eps: f64) -> bool {
    for &ax in axes {
        if norm(ax) == 0.0 {
            continue;
        }
        let ax = normalize(ax);
        let (mut a_lo, mut a_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in a {
            let t = dot(p, ax);
            a_lo = a_lo.min(t);
            a_hi = a_hi.max(t);
        }
        let (mut b_lo, mut b_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in b {
            let t = dot(p, ax);
            b_lo = b_lo.min(t);
            b_hi = b_hi.max(t);
        }
        if a_lo > b_hi + eps || b_lo > a_hi + eps {
            return false;
        }
    }
    true
}

/// Candidate separating axes for two polytopes from their face normals and
/// edge directions.
pub fn sat_axes(normals: &[P3], edges_a: &[P3], edges_b: &[P3]) -> Vec<P3> {
    let mut out = normals.to_vec();
    for &e in edges_a {
        for &f in edges_b {
            out.push(cross(e, f));
        }
    }
    out
}

/// Nearest point of the convex hull of `pts` to `p` (Wolfe's algorithm).
pub fn nearest_in_hull(pts: &[P3], p: P3) -> P3 {
    assert!(!pts.is_empty(), "empty point set");
    let q: Vec<P3> = pts.iter().map(|&x| sub(x, p)).collect();
    let scale_sq = q.iter().map(|&x| dot(x, x)).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale_sq;
    let first = (0..q.len()).min_by(|&i, &j| dot(q[i], q[i]).total_cmp(&dot(q[j], q[j]))).unwrap();
    let mut set = vec![first];
    let mut lam = vec![1.0];
    let combo = |set: &[usize], w: &[f64]| set.iter().zip(w).fold([0.0; 3], |acc, (&i, &l)| add(acc, scale(q[i], l)));
    for _ in 0..1000 {
        let x = combo(&set, &lam);
        let j = (0..q.len()).min_by(|&i, &k| dot(x, q[i]).total_cmp(&dot(x, q[k]))).unwrap();
        if dot(x, x) - dot(x, q[j]) <= tol || set.contains(&j) || set.len() >= 4 && affine_min(&q, &set).is_none() {
            return add(x, p);
        }
        set.push(j);
        lam.push(0.0);
        loop {
            let Some(mu) = affine_min(&q, &set) else { break };
            if mu.iter().all(|&m| m > 1e-14) {
                lam = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lam.iter().zip(&mu) {
                if *m <= 1e-14 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lam.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            let keep: Vec<usize> = (0..set.len()).filter(|&i| lam[i] > 1e-14).collect();
            set = keep.iter().map(|&i| set[i]).collect();
            lam = keep.iter().map(|&i| lam[i]).collect();
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
        }
    }
    add(combo(&set, &lam), p)
}

/// Weights `μ` (summing to 1) of the minimum-norm point of the affine hull.
fn affine_min(q: &[P3], set: &[usize]) -> Option<Vec<f64>> {
    let m = set.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(m + 1, m + 1);
    let mut b = nalgebra::DVector::<f64>::zeros(m + 1);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = dot(q[set[i]], q[set[j]]);
        }
        a[(i, m)] = 1.0;
        a[(m, i)] = 1.0;
    }
    b[m] = 1.0;
    let sol = a.lu().solve(&b)?;
    let mu: Vec<f64> = (0..m).map(|i| sol[i]).collect();
    mu.iter().all(|x| x.is_finite()).then_some(mu)
}

pub fn hull_distance(pts: &[P3], p: P3) -> f64 {
    dist(p, nearest_in_hull(pts, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn orientation_conventions() {
        let o = [0.0; 3];
        assert_eq!(orient3d(o, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]), 1);
        assert_eq!(orient3d(o, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.3, 0.0]), 0);
        assert_eq!(orient2d([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]), 1);
    }

    #[test]
    fn exact_near_degenerate_orientation() {
        assert_eq!(orient2d([0.1, 0.1], [0.2, 0.2], [0.3, 0.3]), 0);
        let up = f64::from_bits(0.3f64.to_bits() + 1);
        assert_eq!(orient2d([0.1, 0.1], [0.2, 0.2], [0.3, up]), 1);
    }

    #[test]
    fn segment_triangle_cases() {
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert_eq!(segment_triangle([0.2, 0.2, -1.0], [0.2, 0.2, 1.0], a, b, c), Crossing::Transverse(1));
        assert_eq!(segment_triangle([0.2, 0.2, 1.0], [0.2, 0.2, -1.0], a, b, c), Crossing::Transverse(-1));
        assert_eq!(segment_triangle([0.8, 0.8, -1.0], [0.8, 0.8, 1.0], a, b, c), Crossing::None);
        assert_eq!(segment_triangle([0.5, 0.0, -1.0], [0.5, 0.0, 1.0], a, b, c), Crossing::Degenerate);
        assert_eq!(segment_triangle([0.2, 0.2, 0.0], [0.2, 0.2, 1.0], a, b, c), Crossing::Degenerate);
    }

    #[test]
    fn segments_3d() {
        assert!(segments_intersect_3d([0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]));
        assert!(!segments_intersect_3d([0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.1], [0.0, 1.0, 0.1]));
        assert!(segments_intersect_3d([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]));
        assert!(!segments_intersect_3d([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]));
    }

    #[test]
    fn rect_hits() {
        let lo = [0.0, 0.0];
        let hi = [1.0, 1.0];
        assert!(segment_hits_rect([0.5, 0.5, -1.0], [0.5, 0.5, 1.0], 2, 0.0, lo, hi, 0.0));
        assert!(!segment_hits_rect([1.5, 0.5, -1.0], [1.5, 0.5, 1.0], 2, 0.0, lo, hi, 0.0));
        assert!(segment_hits_rect([-1.0, 0.5, 0.0], [0.5, 0.8, 0.0], 2, 0.0, lo, hi, 0.0));
        assert!(!segment_hits_rect([-1.0, 0.5, 0.0], [0.0, 2.0, 0.0], 2, 0.0, lo, hi, 0.0));
        // x-normal face: extents are in (y, z)
        assert!(segment_hits_rect([-1.0, 0.5, 0.2], [1.0, 0.5, 0.2], 0, 0.0, lo, hi, 0.0));
    }

    proptest! {
        #[test]
        fn closest_distance_is_not_beaten_by_samples(
            p in prop::array::uniform12(-2.0f64..2.0)
        ) {
            let (a, b, c, d) = ([p[0], p[1], p[2]], [p[3], p[4], p[5]], [p[6], p[7], p[8]], [p[9], p[10], p[11]]);
            let (m, _, _) = segment_segment_closest(a, b, c, d);
            for i in 0..=10 {
                for j in 0..=10 {
                    let x = lerp(a, b, i as f64 / 10.0);
                    let y = lerp(c, d, j as f64 / 10.0);
                    prop_assert!(m <= dist(x, y) + 1e-12);
                }
            }
        }

        #[test]
        fn crossing_sign_flips_with_direction(
            p in prop::array::uniform6(-2.0f64..2.0)
        ) {
            let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.2, 0.1], [0.1, 1.0, -0.2]);
            let (p0, p1) = ([p[0], p[1], p[2]], [p[3], p[4], p[5]]);
            match (segment_triangle(p0, p1, a, b, c), segment_triangle(p1, p0, a, b, c)) {
                (Crossing::Transverse(s), Crossing::Transverse(t)) => prop_assert_eq!(s, -t),
                (x, y) => prop_assert_eq!(x, y),
            }
        }
    }

    #[test]
    fn hull_distance_cases() {
        let sq = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(hull_distance(&sq, [0.5, 0.5, 0.0]) < 1e-12);
        assert!((hull_distance(&sq, [0.5, 0.5, 2.0]) - 2.0).abs() < 1e-12);
        assert!((hull_distance(&sq, [2.0, 0.5, 0.0]) - 1.0).abs() < 1e-12);
        assert!((hull_distance(&sq, [2.0, 2.0, 0.0]) - 2f64.sqrt()).abs() < 1e-12);
        let circle: Vec<P3> = (0..64)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 64.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        assert!((hull_distance(&circle, [3.0, 0.0, 4.0]) - (4.0f64 + 16.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn sat_square_vs_pyramid() {
        let f = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let apex = [0.5, 0.5, 1.0];
        let g = [[0.4, 0.4, -1.0], [0.6, 0.4, -1.0], [0.6, 0.6, -1.0], [0.4, 0.6, -1.0]];
        let mut pyr = g.to_vec();
        pyr.push(apex);
        let e = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let lat: Vec<P3> = g.iter().map(|&c| sub(c, apex)).collect();
        let axes = sat_axes(&e, &e, &lat);
        assert!(convex_sets_intersect(&f, &pyr, &axes, 0.0));
        let far: Vec<P3> = f.iter().map(|&c| add(c, [3.0, 0.0, 0.0])).collect();
        assert!(!convex_sets_intersect(&far, &pyr, &axes, 0.0));
    }

    proptest! {
        #[test]
        fn hull_nearest_is_optimal(px in -3.0f64..3.0, py in -3.0f64..3.0, pz in -3.0f64..3.0, seed in 0u64..50) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<P3> = (0..12).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let p = [px, py, pz];
            let d = hull_distance(&pts, p);
            for &v in &pts {
                prop_assert!(d <= dist(p, v) + 1e-9);
            }
            // no random convex combination is closer
            for _ in 0..50 {
                let w: Vec<f64> = (0..pts.len()).map(|_| rng.gen_range(0.0..1.0f64).powi(4)).collect();
                let s: f64 = w.iter().sum();
                let c = pts.iter().zip(&w).fold([0.0; 3], |acc, (&v, &wi)| add(acc, scale(v, wi / s)));
                prop_assert!(d <= dist(p, c) + 1e-9);
            }
        }
    }
}
