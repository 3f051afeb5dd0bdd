//! Surgeries on candidate surfaces: cones, cut-and-cone, radial projections,
//! grid squashing, the haircut pipeline, plane squashing and hull clamping.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, cross, dist, dot, nearest_in_hull, norm, normalize, scale, sub, tri_area, P3};
use crate::grid::{cube_faces, rasterize_triangles, Face, FaceComplex, GridDomain, Triangle};
use crate::linking::BoundarySystem;
use crate::measure::{alpha, ball_area, slice_curves};
use crate::spanning::{
    certify_spanning, collapse_free_faces, collar_cubes, deform, face_clear_of, radial_project, region_touches,
    CertifyOptions, Deformation, SpanStatus,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConeBase {
    /// Closed polygon.
    Polygon(Vec<P3>),
    Segments(Vec<(P3, P3)>),
    /// Round circle; its cone area is integrated, not triangulated.
    Circle {
        center: P3,
        normal: P3,
        radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSurface {
    pub apex: P3,
    pub r: f64,
    pub triangles: Vec<Triangle>,
    /// Area counted with multiplicity; an upper bound for the area of the cone as a set.
    pub area: f64,
    pub base_length: f64,
    /// `(r/2)·H¹(B)`.
    pub polyhedral_bound: f64,
    /// `r·2²·(α₂/α₁)·S¹(B)`.
    pub spherical_bound: f64,
}

impl ConeSurface {
    pub fn rasterize(&self, d: &GridDomain) -> FaceComplex {
        rasterize_nondegenerate(d, &self.triangles)
    }
}

fn circle_frame(normal: P3) -> (P3, P3) {
    crate::linking::normal_frame(normalize(normal))
}

/// Cone from the center `q` of the closed ball `Ō(q, r)` over a base inside it.
pub fn cone_set(base: &ConeBase, q: P3, r: f64) -> Result<ConeSurface> {
    let tol = 1e-12 * r.max(1.0);
    let check = |p: P3| {
        if dist(p, q) > r + tol {
            Err(Error::Precondition(format!("base point {p:?} outside the closed ball about the apex")))
        } else {
            Ok(())
        }
    };
    let (triangles, area, base_length) = match base {
        ConeBase::Polygon(pts) => {
            pts.iter().try_for_each(|&p| check(p))?;
            let n = pts.len();
            let tris: Vec<Triangle> = (0..n).map(|i| [q, pts[i], pts[(i + 1) % n]]).collect();
            let len = (0..n).map(|i| dist(pts[i], pts[(i + 1) % n])).sum();
            let a = tris.iter().map(|t| tri_area(t[0], t[1], t[2])).sum();
            (tris, a, len)
        }
        ConeBase::Segments(segs) => {
            let mut tris = Vec::new();
            let mut len = 0.0;
            for &(a, b) in segs {
                check(a)?;
                check(b)?;
                len += dist(a, b);
                let m = crate::geometry::lerp(a, b, 0.5);
                tris.push([q, a, m]);
                tris.push([q, m, b]);
            }
            let a = tris.iter().map(|t| tri_area(t[0], t[1], t[2])).sum();
            (tris, a, len)
        }
        ConeBase::Circle { center, normal, radius } => {
            let (e1, e2) = circle_frame(*normal);
            let at = |th: f64| add(*center, add(scale(e1, radius * th.cos()), scale(e2, radius * th.sin())));
            let d_at = |th: f64| add(scale(e1, -radius * th.sin()), scale(e2, radius * th.cos()));
            for k in 0..64 {
                check(at(TAU * k as f64 / 64.0))?;
            }
            // periodic trapezoid rule on ½|(γ − q) × γ'|
            let nq = 4096;
            let a = (0..nq)
                .map(|k| {
                    let th = TAU * k as f64 / nq as f64;
                    0.5 * norm(cross(sub(at(th), q), d_at(th)))
                })
                .sum::<f64>()
                * TAU
                / nq as f64;
            let sides = 256;
            let tris = (0..sides)
                .map(|k| [q, at(TAU * k as f64 / sides as f64), at(TAU * (k + 1) as f64 / sides as f64)])
                .collect();
            (tris, a, TAU * radius)
        }
    };
    Ok(ConeSurface {
        apex: q,
        r,
        triangles,
        area,
        base_length,
        polyhedral_bound: 0.5 * r * base_length,
        spherical_bound: r * 4.0 * (alpha(2) / alpha(1)) * base_length,
    })
}

pub fn rasterize_nondegenerate(d: &GridDomain, tris: &[Triangle]) -> FaceComplex {
    let keep: Vec<Triangle> = tris.iter().filter(|t| tri_area(t[0], t[1], t[2]) > 1e-12 * d.h * d.h).copied().collect();
    rasterize_triangles(d, &keep)
}

fn face_inside_open_ball(d: &GridDomain, f: &Face, p: P3, r: f64) -> bool {
    f.corners(d).iter().all(|&c| dist(c, p) < r)
}

/// Distance from `p` to a closed face.
pub fn face_distance(d: &GridDomain, f: &Face, p: P3) -> f64 {
    let c = f.corners(d);
    let a = f.axis();
    let (u, v) = f.plane_axes();
    let du = (c[0][u] - p[u]).max(0.0).max(p[u] - c[2][u]);
    let dv = (c[0][v] - p[v]).max(0.0).max(p[v] - c[2][v]);
    let da = p[a] - c[0][a];
    (du * du + dv * dv + da * da).sqrt()
}

/// `(X ∖ O(p,r)) ∪ C_{apex}(X ∩ fr O(p,r))`, rasterized. Faces wholly inside
/// the open ball are removed; faces crossing the sphere are kept.
pub fn cut_and_cone(x: &FaceComplex, m: &BoundarySystem, p: P3, r: f64, apex: P3) -> Result<FaceComplex> {
    if !m.is_empty() && m.distance(p) <= r {
        return Err(Error::Precondition("ball meets M".into()));
    }
    if dist(apex, p) > r {
        return Err(Error::Precondition("cone apex outside the ball".into()));
    }
    let d = &x.domain;
    let mut out = x.clone();
    out.retain(|f| !face_inside_open_ball(d, f, p, r));
    let mut tris = Vec::new();
    for curve in slice_curves(x, p, r, 0.25 * d.h) {
        for w in curve.windows(2) {
            tris.push([apex, w[0], w[1]]);
        }
    }
    Ok(out.union(&rasterize_nondegenerate(d, &tris)))
}

/// Points of `X` inside `O(p, r)` pushed radially from `p` to the sphere.
pub fn radial_sphere_projection(x: &FaceComplex, p: P3, r: f64) -> Result<FaceComplex> {
    let d = &x.domain;
    if let Some(f) = x.iter().find(|f| face_distance(d, f, p) < 0.5 * r) {
        return Err(Error::Precondition(format!("face {f:?} meets O(p, r/2)")));
    }
    let proj = |q: P3| if dist(q, p) < r { add(p, scale(normalize(sub(q, p)), r)) } else { q };
    let mut out = x.clone();
    let mut tris = Vec::new();
    for f in x.iter().filter(|f| face_distance(d, f, p) < r) {
        out.remove(f);
        tris.extend(subdivided(d, f, 4).into_iter().map(|t| t.map(proj)));
    }
    Ok(out.union(&rasterize_nondegenerate(d, &tris)))
}

/// Triangulation of a face into `2n²` triangles.
fn subdivided(d: &GridDomain, f: &Face, n: usize) -> Vec<Triangle> {
    let c = f.corners(d);
    let (u, v) = f.plane_axes();
    let at = |i: usize, j: usize| {
        let mut q = c[0];
        q[u] += d.h * i as f64 / n as f64;
        q[v] += d.h * j as f64 / n as f64;
        q
    };
    let mut out = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            out.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            out.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    out
}

/// Advisory mass threshold for squashing a cube of side `l` in R³.
pub fn squash_threshold(l: f64, kn: f64) -> f64 {
    let n = 3.0f64;
    l.powf(n - 1.0) / ((4.0 * (n - 1.0)).powf(n - 1.0) * (2f64.powf(n) * kn).powf(n - 2.0))
}

/// `(2√3)²`.
pub const SQUASH_BUDGET: f64 = 12.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquashOutcome {
    pub complex: FaceComplex,
    pub center: [i64; 3],
    pub removed: f64,
    pub added: f64,
    pub threshold: f64,
    pub below_threshold: bool,
}

pub fn box_cubes(lo: [i64; 3], size: i64) -> BTreeSet<[i64; 3]> {
    let mut out = BTreeSet::new();
    for i in 0..size {
        for j in 0..size {
            for k in 0..size {
                out.insert([lo[0] + i, lo[1] + j, lo[2] + k]);
            }
        }
    }
    out
}

/// Push the faces interior to the cube `lo .. lo+size` onto its frontier
/// from the cube center that adds the least frontier mass.
pub fn grid_squash(x: &FaceComplex, m: &BoundarySystem, lo: [i64; 3], size: i64, kn: f64) -> Result<SquashOutcome> {
    let d = &x.domain;
    if size < 1 || !(0..3).all(|k| lo[k] >= 0 && (lo[k] + size) as usize <= d.dims[k]) {
        return Err(Error::Precondition("squash cube leaves the grid".into()));
    }
    let region = box_cubes(lo, size);
    if region_touches(&region, &collar_cubes(d, m)) {
        return Err(Error::Precondition("squash cube meets M".into()));
    }
    let interior = |f: &Face| {
        let (a, b) = f.cubes();
        region.contains(&a) && region.contains(&b)
    };
    let removed = x.iter().filter(|f| interior(f)).count() as f64 * d.h * d.h;
    let threshold = squash_threshold(size as f64 * d.h, kn);
    let mid = [lo[0] + size / 2, lo[1] + size / 2, lo[2] + size / 2];
    if removed == 0.0 {
        return Ok(SquashOutcome {
            complex: x.clone(),
            center: mid,
            removed,
            added: 0.0,
            threshold,
            below_threshold: true,
        });
    }
    let mut best: Option<(usize, [i64; 3], FaceComplex)> = None;
    for &c in &region {
        let y = radial_project(x, &region, d.cube_center(c))?;
        let added = y.faces().difference(x.faces()).count();
        if best.as_ref().is_none_or(|b| added < b.0) {
            best = Some((added, c, y));
        }
    }
    let (added, center, complex) = best.expect("nonempty region");
    let added = added as f64 * d.h * d.h;
    if added > SQUASH_BUDGET * removed {
        return Err(Error::Precondition(format!("squash adds {added} for {removed} removed")));
    }
    Ok(SquashOutcome { complex, center, removed, added, threshold, below_threshold: removed <= threshold })
}

/// Nearest-point clamp onto the convex hull of `M`; faces leaving the hull
/// are subdivided, projected and rasterized.
pub fn hull_clamp(x: &FaceComplex, m: &BoundarySystem) -> FaceComplex {
    let d = &x.domain;
    let hull: Vec<P3> = m.vertices().collect();
    let sub = 4usize;
    let mut cache: HashMap<[i64; 3], P3> = HashMap::new();
    let mut project = |key: [i64; 3], q: P3| *cache.entry(key).or_insert_with(|| nearest_in_hull(&hull, q));
    let tol = 1e-9 * d.h;
    let mut out = FaceComplex::new(d.clone());
    let mut tris = Vec::new();
    for f in x.iter() {
        let c = f.corner_indices();
        let corners = f.corners(d);
        let inside = corners.iter().zip(&c).all(|(&q, ci)| {
            let key = ci.map(|v| v as i64 * sub as i64);
            dist(project(key, q), q) <= tol
        });
        if inside {
            out.insert(*f).expect("face already in domain");
            continue;
        }
        let (u, v) = f.plane_axes();
        let base = c[0].map(|v| v as i64 * sub as i64);
        let mut pt = |i: usize, j: usize| {
            let mut key = base;
            key[u] += i as i64;
            key[v] += j as i64;
            let mut q = corners[0];
            q[u] += d.h * i as f64 / sub as f64;
            q[v] += d.h * j as f64 / sub as f64;
            project(key, q)
        };
        for i in 0..sub {
            for j in 0..sub {
                let (a, b, c2, e) = (pt(i, j), pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1));
                tris.push([a, b, c2]);
                tris.push([a, c2, e]);
            }
        }
    }
    out.union(&rasterize_nondegenerate(d, &tris))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SquashPlaneOutcome {
    /// The meridian-band replacement does not span, and the area inside the
    /// ball obeys the first inequality.
    AreaLowerBound {
        area_in_ball: f64,
        lower_bound: f64,
        slice_length: f64,
    },
    Replaced {
        complex: FaceComplex,
        band_area: f64,
        bound: f64,
        slice_length: f64,
    },
}

/// Replace `X ∩ O(q, r)` by the radial image on the sphere of the segments
/// joining `x(q, r)` to its orthogonal projection on the plane through `q`
/// with normal `normal`.
pub fn squash_plane(
    x: &FaceComplex,
    m: &BoundarySystem,
    q: P3,
    r: f64,
    normal: P3,
    eps: f64,
    opts: &CertifyOptions,
) -> Result<SquashPlaneOutcome> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Precondition("ε must lie in (0, 1/2)".into()));
    }
    if !m.is_empty() && m.distance(q) <= r {
        return Err(Error::Precondition("ball meets M".into()));
    }
    let d = &x.domain;
    let n = normalize(normal);
    let curves = slice_curves(x, q, r, 0.25 * d.h);
    for c in &curves {
        if c.iter().any(|&p| dot(sub(p, q), n).abs() >= eps * r) {
            return Err(Error::Precondition("slice leaves the ε-slab".into()));
        }
    }
    let slice_length: f64 = curves.iter().flat_map(|c| c.windows(2).map(|w| dist(w[0], w[1]))).sum();
    let factor = 16.0 * alpha(2) / alpha(1) * eps * r * slice_length;
    // meridian arc from a slice point down to the equator
    let arc = |p: P3, t: f64| {
        let rel = sub(p, q);
        add(q, scale(normalize(sub(rel, scale(n, t * dot(rel, n)))), r))
    };
    let steps = 4;
    let mut tris = Vec::new();
    for c in &curves {
        for w in c.windows(2) {
            for s in 0..steps {
                let (t0, t1) = (s as f64 / steps as f64, (s + 1) as f64 / steps as f64);
                let (a, b, cc, e) = (arc(w[0], t0), arc(w[1], t0), arc(w[1], t1), arc(w[0], t1));
                tris.push([a, b, cc]);
                tris.push([a, cc, e]);
            }
        }
    }
    let band_area: f64 = tris.iter().map(|t| tri_area(t[0], t[1], t[2])).sum();
    let mut y = x.clone();
    y.retain(|f| !face_inside_open_ball(d, f, q, r));
    let y = y.union(&rasterize_nondegenerate(d, &tris));
    let verdict = certify_spanning(&y, m, opts)?;
    if verdict.status == SpanStatus::Spans {
        return Ok(SquashPlaneOutcome::Replaced { complex: y, band_area, bound: factor, slice_length });
    }
    Ok(SquashPlaneOutcome::AreaLowerBound {
        area_in_ball: ball_area(x, q, r),
        lower_bound: PI * r * r - factor,
        slice_length,
    })
}

// ---------------------------------------------------------------------------
// Surgery log

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Surgery {
    CutAndCone {
        p: P3,
        r: f64,
        apex: P3,
    },
    RadialSphere {
        p: P3,
        r: f64,
    },
    GridSquash {
        lo: [i64; 3],
        size: i64,
        kn: f64,
    },
    /// Free-face collapses of faces missing the collar of `M` dilated by `margin` cubes.
    Collapse {
        margin: i64,
        max_steps: usize,
    },
    HullClamp,
    /// Replace the faces of a cube in `X` by the complementary faces.
    CubeFlip {
        cube: [i64; 3],
    },
    FaceDelete {
        face: Face,
    },
    Deform(Deformation),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryRecord {
    pub surgery: Surgery,
    pub area_before: f64,
    pub area_after: f64,
    pub verdict_before: SpanStatus,
    pub verdict_after: SpanStatus,
    pub note: String,
}

pub fn dilate(cubes: &BTreeSet<[i64; 3]>, margin: i64) -> BTreeSet<[i64; 3]> {
    let mut out = cubes.clone();
    for c in cubes {
        for i in -margin..=margin {
            for j in -margin..=margin {
                for k in -margin..=margin {
                    out.insert([c[0] + i, c[1] + j, c[2] + k]);
                }
            }
        }
    }
    out
}

pub fn apply_surgery(x: &FaceComplex, m: &BoundarySystem, s: &Surgery) -> Result<FaceComplex> {
    let d = &x.domain;
    match s {
        Surgery::CutAndCone { p, r, apex } => cut_and_cone(x, m, *p, *r, *apex),
        Surgery::RadialSphere { p, r } => radial_sphere_projection(x, *p, *r),
        Surgery::GridSquash { lo, size, kn } => Ok(grid_squash(x, m, *lo, *size, *kn)?.complex),
        Surgery::Collapse { margin, max_steps } => {
            let near = dilate(&collar_cubes(d, m), *margin);
            Ok(collapse_free_faces(x, |f| face_clear_of(&near, f), *max_steps).0)
        }
        Surgery::HullClamp => Ok(hull_clamp(x, m)),
        Surgery::CubeFlip { cube } => {
            if region_touches(&BTreeSet::from([*cube]), &collar_cubes(d, m)) {
                return Err(Error::Precondition("cube meets M".into()));
            }
            let mut y = x.clone();
            for f in cube_faces(*cube) {
                if !y.remove(&f) {
                    y.insert(f)?;
                }
            }
            Ok(y)
        }
        Surgery::FaceDelete { face } => {
            let mut y = x.clone();
            if !y.remove(face) {
                return Err(Error::Precondition(format!("face {face:?} not in X")));
            }
            Ok(y)
        }
        Surgery::Deform(phi) => deform(x, m, phi),
    }
}

/// Apply a surgery and certify both states.
pub fn perform(
    x: &FaceComplex,
    m: &BoundarySystem,
    s: Surgery,
    opts: &CertifyOptions,
    before: Option<SpanStatus>,
) -> Result<(FaceComplex, SurgeryRecord)> {
    let verdict_before = match before {
        Some(v) => v,
        None => certify_spanning(x, m, opts)?.status,
    };
    let y = apply_surgery(x, m, &s)?;
    let verdict_after = certify_spanning(&y, m, opts)?.status;
    let rec = SurgeryRecord {
        surgery: s,
        area_before: x.area(),
        area_after: y.area(),
        verdict_before,
        verdict_after,
        note: String::new(),
    };
    Ok((y, rec))
}

/// Re-apply logged surgeries; the result must match bit for bit.
pub fn replay(x: &FaceComplex, m: &BoundarySystem, records: &[SurgeryRecord]) -> Result<FaceComplex> {
    records.iter().try_fold(x.clone(), |cur, r| apply_surgery(&cur, m, &r.surgery))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaircutOptions {
    pub j0: u32,
    pub j1: u32,
    pub kn: f64,
    /// Cubes whose interior mass is at most this fraction of a full cross
    /// section are tried for squashing.
    pub light_fraction: f64,
    pub certify: CertifyOptions,
}

impl Default for HaircutOptions {
    fn default() -> Self {
        HaircutOptions { j0: 2, j1: 4, kn: 1.0, light_fraction: 0.5, certify: CertifyOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaircutOutput {
    pub complex: FaceComplex,
    pub records: Vec<SurgeryRecord>,
    /// Input followed by the complex after each dyadic level.
    pub sequence: Vec<FaceComplex>,
    /// Squashed interior mass per level.
    pub squashed_mass: Vec<f64>,
    pub advisory_threshold_met: Vec<bool>,
}

/// Per dyadic level: squash light cubes away from `M` when that lowers the
/// area, then collapse free faces away from `M`. Every accepted step is
/// re-certified.
pub fn haircut(x: &FaceComplex, m: &BoundarySystem, opts: &HaircutOptions) -> Result<HaircutOutput> {
    let d = x.domain.clone();
    let start = certify_spanning(x, m, &opts.certify)?;
    if start.status != SpanStatus::Spans {
        return Err(Error::Certification("haircut input does not span".into()));
    }
    let collar = collar_cubes(&d, m);
    let mut cur = x.clone();
    let mut records = Vec::new();
    let mut sequence = vec![x.clone()];
    let mut squashed_mass = Vec::new();
    let mut advisory = Vec::new();
    for j in opts.j0..=opts.j1 {
        let side = ((0.5f64.powi(j as i32) / d.h).round() as i64).max(2);
        let mut level_mass = 0.0;
        let mut level_ok = true;
        let origin = d.origin.map(|o| (o / d.h).round() as i64);
        let first = origin.map(|o| (side - o.rem_euclid(side)) % side);
        let mut lo = first;
        while (lo[0] + side) as usize <= d.dims[0] {
            lo[1] = first[1];
            while (lo[1] + side) as usize <= d.dims[1] {
                lo[2] = first[2];
                while (lo[2] + side) as usize <= d.dims[2] {
                    let region = box_cubes(lo, side);
                    let light_cap = opts.light_fraction * (side as f64 * d.h).powi(2);
                    if !region_touches(&region, &collar) {
                        if let Ok(o) = grid_squash(&cur, m, lo, side, opts.kn) {
                            if o.removed > 0.0 && o.removed <= light_cap.max(o.threshold) {
                                let near = dilate(&collar, 1);
                                let inside = |f: &Face| {
                                    let (a, b) = f.cubes();
                                    region.contains(&a) || region.contains(&b)
                                };
                                let y = collapse_free_faces(
                                    &o.complex,
                                    |f| inside(f) && face_clear_of(&near, f),
                                    usize::MAX,
                                )
                                .0;
                                if y.area() < cur.area() {
                                    let v = certify_spanning(&y, m, &opts.certify)?;
                                    if v.status == SpanStatus::Spans {
                                        records.push(SurgeryRecord {
                                            surgery: Surgery::GridSquash { lo, size: side, kn: opts.kn },
                                            area_before: cur.area(),
                                            area_after: o.complex.area(),
                                            verdict_before: SpanStatus::Spans,
                                            verdict_after: certify_spanning(&o.complex, m, &opts.certify)?.status,
                                            note: format!("level {j}"),
                                        });
                                        let (z, rec) = perform(
                                            &o.complex,
                                            m,
                                            Surgery::Collapse { margin: 1, max_steps: usize::MAX },
                                            &opts.certify,
                                            records.last().map(|r: &SurgeryRecord| r.verdict_after),
                                        )?;
                                        level_mass += o.removed;
                                        level_ok &= o.below_threshold;
                                        records.push(rec);
                                        cur = z;
                                    }
                                }
                            }
                        }
                    }
                    lo[2] += side;
                }
                lo[1] += side;
            }
            lo[0] += side;
        }
        let (y, rec) = perform(
            &cur,
            m,
            Surgery::Collapse { margin: 1, max_steps: usize::MAX },
            &opts.certify,
            Some(SpanStatus::Spans),
        )?;
        if rec.verdict_after != SpanStatus::Spans {
            records.push(rec);
            return Err(Error::Certification(format!("haircut level {j} lost spanning")));
        }
        if rec.area_after < rec.area_before {
            records.push(rec);
        }
        cur = y;
        squashed_mass.push(level_mass);
        advisory.push(level_ok);
        sequence.push(cur.clone());
    }
    Ok(HaircutOutput { complex: cur, records, sequence, squashed_mass, advisory_threshold_met: advisory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::cone_triangles;
    use crate::linking::circle;
    use crate::measure::area;

    const H: f64 = 1.0 / 16.0;

    fn unit_circle() -> BoundarySystem {
        BoundarySystem::new(vec![circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 64).unwrap()]).unwrap()
    }

    fn setup() -> (BoundarySystem, FaceComplex) {
        let m = unit_circle();
        let (lo, hi) = m.bbox();
        let d = GridDomain::around(lo, hi, H, 8.0 * H).unwrap();
        let x = rasterize_triangles(&d, &cone_triangles([0.0; 3], m.components[0].vertices()));
        (m, x)
    }

    fn spans(x: &FaceComplex, m: &BoundarySystem) -> bool {
        certify_spanning(x, m, &CertifyOptions::default()).unwrap().status == SpanStatus::Spans
    }

    #[test]
    fn flat_cone_meets_polyhedral_bound() {
        let c = cone_set(&ConeBase::Circle { center: [0.0; 3], normal: [0.0, 0.0, 1.0], radius: 1.0 }, [0.0; 3], 1.0)
            .unwrap();
        assert!((c.area - PI).abs() < 1e-12);
        assert!((c.area - c.polyhedral_bound).abs() < 1e-12);
        assert!(c.area <= c.spherical_bound);
    }

    #[test]
    fn right_cone_meets_polyhedral_bound() {
        let s = 2f64.sqrt();
        let c =
            cone_set(&ConeBase::Circle { center: [0.0; 3], normal: [0.0, 0.0, 1.0], radius: 1.0 }, [0.0, 0.0, 1.0], s)
                .unwrap();
        assert!((c.area - PI * s).abs() < 1e-12);
        assert!((c.area - c.polyhedral_bound).abs() < 1e-12);
    }

    #[test]
    fn segment_cone_is_two_triangles() {
        let c = cone_set(&ConeBase::Segments(vec![([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0])]), [0.0, 1.0, 0.0], 2f64.sqrt())
            .unwrap();
        assert_eq!(c.triangles.len(), 2);
        assert!((c.area - 1.0).abs() < 1e-15);
        assert!(c.area <= c.polyhedral_bound);
        assert!(cone_set(&ConeBase::Segments(vec![([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0])]), [0.0, 1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn cut_and_cone_on_flat_disk() {
        let (m, x) = setup();
        let far = cut_and_cone(&x, &m, [0.0, 0.0, 0.6], 0.2, [0.0, 0.0, 0.6]).unwrap();
        assert_eq!(far, x);
        let y = cut_and_cone(&x, &m, [0.0; 3], 0.5, [0.0; 3]).unwrap();
        assert!((area(&y) - area(&x)).abs() <= 2.0 * PI * 0.5 * 2.0 * H);
        assert!(spans(&y, &m));
        assert!(cut_and_cone(&x, &m, [0.0; 3], 1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn radial_projection_of_annulus_patch() {
        let (m, x) = setup();
        let p = [0.0, 0.0, 0.5];
        let y = radial_sphere_projection(&x, p, 0.75).unwrap();
        let inside: f64 = x.iter().filter(|f| face_distance(&x.domain, f, p) < 0.75).count() as f64 * H * H;
        let added = y.difference(&x).area();
        assert!(added <= 4.0 * inside + 2.0 * PI * 0.75 * 2.0 * H, "{added} {inside}");
        assert!(spans(&y, &m));
        assert!(radial_sphere_projection(&x, [0.0; 3], 0.5).is_err());
    }

    #[test]
    fn squash_single_face_within_budget() {
        let (m, x) = setup();
        let d = x.domain.clone();
        let c = d.cube_of([0.0, 0.0, 0.3]);
        let mut y = x.clone();
        y.insert(Face::new(2, [c[0] as i32, c[1] as i32, c[2] as i32])).unwrap();
        let lo = [c[0] - 2, c[1] - 2, c[2] - 2];
        let o = grid_squash(&y, &m, lo, 4, 1.0).unwrap();
        assert!(o.added <= 12.0 * H * H);
        assert_eq!(o.removed, H * H);
        let empty = grid_squash(&x, &m, lo, 4, 1.0).unwrap();
        assert_eq!(empty.complex, x);
        assert!(grid_squash(&x, &m, [d.cube_of([1.0, 0.0, 0.0])[0] - 1, c[1] - 1, 7], 3, 1.0).is_err());
    }

    #[test]
    fn hull_clamp_flattens_bump() {
        let (m, x) = setup();
        assert_eq!(hull_clamp(&x, &m), x);
        let d = x.domain.clone();
        let c = d.cube_of([0.1, 0.1, 0.1]);
        let mut bump = x.clone();
        for f in cube_faces(c) {
            bump.insert(f).unwrap();
        }
        let y = hull_clamp(&bump, &m);
        assert!(y.area() < bump.area());
        assert!(spans(&y, &m));
    }

    #[test]
    fn squash_plane_alternatives() {
        let (m, x) = setup();
        let opts = CertifyOptions::default();
        match squash_plane(&x, &m, [0.0; 3], 0.5, [0.0, 0.0, 1.0], 0.1, &opts).unwrap() {
            SquashPlaneOutcome::AreaLowerBound { area_in_ball, lower_bound, .. } => {
                assert!(area_in_ball >= lower_bound)
            }
            other => panic!("disk interior cannot be removed: {other:?}"),
        }
        assert!(squash_plane(&x, &m, [0.0; 3], 0.5, [0.0, 0.0, 1.0], 0.5, &opts).is_err());
    }

    #[test]
    fn haircut_leaves_clean_disk_alone_and_replays() {
        let (m, x) = setup();
        let out = haircut(&x, &m, &HaircutOptions { j0: 2, j1: 3, ..Default::default() }).unwrap();
        assert_eq!(out.complex, x);
        let mut hairy = x.clone();
        let d = x.domain.clone();
        let base = d.cube_of([0.2, 0.1, 0.0]);
        for k in 0..6 {
            hairy.insert(Face::new(0, [base[0] as i32, base[1] as i32, base[2] as i32 + 1 + k])).unwrap();
        }
        let out = haircut(&hairy, &m, &HaircutOptions { j0: 2, j1: 3, ..Default::default() }).unwrap();
        assert_eq!(out.complex, x);
        assert_eq!(replay(&hairy, &m, &out.records).unwrap(), out.complex);
    }
}
