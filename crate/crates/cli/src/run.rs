//! Scenario execution.

use std::path::{Path, PathBuf};
use std::time::Instant;

use plateau_core::constructions::{haircut, HaircutOptions};
use plateau_core::fixtures::{cone_complex, domain_for, moebius};
use plateau_core::grid::rasterize_triangles;
use plateau_core::linking::{direction_sequence, fmt_g9, gauss_linking, linking_number, linking_number_along};
use plateau_core::measure::density_ratios;
use plateau_core::minimizer::{centroid, minimize};
use plateau_core::spanning::certify_spanning;
use plateau_core::{BoundarySystem, CertifyOptions, FaceComplex, GridDomain, MinimizeOptions, Region, SearchOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::export::{export, Exportable};
use crate::report::{ExperimentReport, LinkRow, Stage, SystemReport};
use crate::scenario::{Op, Scenario};
use crate::CliError;

/// Command-line overrides applied on top of a scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub kn: Option<f64>,
    pub ell: Option<i64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(h) = self.grid {
            s.grid.h = h;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(ell) = self.ell {
            for op in &mut s.pipeline {
                if let Op::Certify { ell: e, expect } = op {
                    *e = vec![ell];
                    *expect = None;
                }
            }
        }
    }
}

fn stage_seed(master: u64, system: usize, stage: usize) -> u64 {
    master ^ ((system as u64) << 32 | stage as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

struct Ctx<'a> {
    out: &'a Path,
    kn: f64,
}

fn core(e: plateau_core::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn write(ctx: &Ctx, name: &str, body: &str) -> Result<String, CliError> {
    std::fs::write(ctx.out.join(name), body).map_err(|e| CliError::Run(format!("{name}: {e}")))?;
    Ok(name.to_string())
}

fn link_table(m: &BoundarySystem, dirs: usize, seed: u64) -> Result<Vec<LinkRow>, CliError> {
    let ds = direction_sequence(seed, dirs);
    let mut rows = Vec::new();
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let (a, b) = (&m.components[i], &m.components[j]);
            rows.push(LinkRow {
                i,
                j,
                linking: linking_number(a, b).map_err(core)?,
                gauss: gauss_linking(a, b, 1e-6).map_err(core)?,
                along: ds.iter().map(|&d| linking_number_along(a, b, d)).collect(),
            });
        }
    }
    Ok(rows)
}

fn density_balls(
    x: &FaceComplex,
    m: &BoundarySystem,
    u: &Region,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Vec<(plateau_core::geometry::P3, f64)> {
    let d = &x.domain;
    let faces: Vec<_> = x.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut balls = Vec::new();
    for &rc in radii {
        let r = rc * d.h;
        let mut found = 0;
        for _ in 0..samples * 20 {
            if found == samples || faces.is_empty() {
                break;
            }
            let p = faces[rng.gen_range(0..faces.len())].center(d);
            if u.contains_ball(p, r) && (m.is_empty() || m.distance(p) > r) {
                balls.push((p, r));
                found += 1;
            }
        }
    }
    balls
}

fn run_system(ctx: &Ctx, s: &Scenario, si: usize, m: &BoundarySystem, label: &str) -> Result<SystemReport, CliError> {
    let d: GridDomain = domain_for(m, s.grid.h, s.grid.margin_cells);
    let mut cur: Option<FaceComplex> = None;
    let mut stages = Vec::new();
    for (k, op) in s.pipeline.iter().enumerate() {
        let seed = stage_seed(s.seed, si, k);
        let certify = CertifyOptions { seed, ..Default::default() };
        match op {
            Op::LinkTable { directions } => stages.push(Stage::LinkTable { rows: link_table(m, *directions, seed)? }),
            Op::Cone { apex } => {
                let q = apex.unwrap_or_else(|| centroid(m));
                let x = cone_complex(&d, m, q);
                stages.push(Stage::Surface { source: "cone".into(), faces: x.len(), area: x.area() });
                cur = Some(x);
            }
            Op::MoebiusBand { sides, half_width } => {
                let x = rasterize_triangles(&d, &moebius(*sides, *half_width).1);
                stages.push(Stage::Surface { source: "moebius_band".into(), faces: x.len(), area: x.area() });
                cur = Some(x);
            }
            Op::Minimize { cuts_only, budget } => {
                let defaults = MinimizeOptions::default();
                let opts = MinimizeOptions {
                    search: SearchOptions {
                        budget: budget.unwrap_or(defaults.search.budget),
                        seed,
                        kn: ctx.kn,
                        certify,
                        ..defaults.search
                    },
                    cuts_only: *cuts_only,
                };
                let o = minimize(m, &d, &opts).map_err(core)?;
                let trace: String = std::iter::once("step,area\n".to_string())
                    .chain(o.search.trace.iter().enumerate().map(|(i, a)| format!("{i},{}\n", fmt_g9(*a))))
                    .collect();
                let trace_file = write(ctx, &format!("{label}-trace.csv"), &trace)?;
                stages.push(Stage::Minimize {
                    area: o.area,
                    faces: o.best.len(),
                    bracket_holds: o.bracket.holds(),
                    bracket: o.bracket,
                    hull_excess: o.hull_excess,
                    topology: o.topology,
                    certifications: o.search.certifications,
                    records: o.search.log,
                    trace_file,
                });
                cur = Some(o.best);
            }
            Op::Certify { ell, expect } => {
                let x = cur.as_ref().expect("validated pipeline");
                for (i, &l) in ell.iter().enumerate() {
                    let v = certify_spanning(x, m, &CertifyOptions { ell: l, ..certify.clone() }).map_err(core)?;
                    stages.push(Stage::Certify {
                        ell: l,
                        status: v.status,
                        witness_linking: v.witness_linking.clone(),
                        certificate_verified: v.certificate.verify(v.status),
                        expected: expect.as_ref().map(|e| e[i]),
                    });
                }
            }
            Op::Haircut => {
                let x = cur.take().expect("validated pipeline");
                let o = haircut(&x, m, &HaircutOptions { kn: ctx.kn, certify, ..Default::default() }).map_err(core)?;
                stages.push(Stage::Haircut {
                    area_before: x.area(),
                    area_after: o.complex.area(),
                    squashed_mass: o.squashed_mass,
                    records: o.records,
                });
                cur = Some(o.complex);
            }
            Op::Density { radii_cells, samples } => {
                let x = cur.as_ref().expect("validated pipeline");
                let u = Region::of_domain(&d);
                let balls = density_balls(x, m, &u, radii_cells, *samples, seed);
                let table = density_ratios(x, m, &u, &balls).map_err(core)?;
                let file = write(ctx, &format!("{label}-density.csv"), &table.to_csv())?;
                stages.push(Stage::Density { file, table });
            }
            Op::Export { format } => {
                let x = cur.as_ref().expect("validated pipeline");
                let body = export(&Exportable::Complex(x.clone()), *format)?;
                let file = write(ctx, &format!("{label}.{}", format.ext()), &body)?;
                stages.push(Stage::Export { file, bytes: body.len() });
            }
        }
    }
    Ok(SystemReport { label: label.to_string(), components: m.len(), domain: d, stages })
}

/// Run a loaded scenario and write `report.json` plus artifacts.
pub fn run(mut s: Scenario, base: &Path, ov: &Overrides) -> Result<ExperimentReport, CliError> {
    let start = Instant::now();
    ov.apply(&mut s);
    s.validate(Some(base))?;
    let out =
        ov.out.clone().unwrap_or_else(|| base.join(s.output_dir.clone().unwrap_or_else(|| format!("out/{}", s.name))));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Run(format!("{}: {e}", out.display())))?;
    let ctx = Ctx { out: &out, kn: ov.kn.unwrap_or(1.0) };
    let systems: Vec<BoundarySystem> = s.systems.iter().map(|sys| sys.build(base)).collect::<Result<_, _>>()?;
    let mut reports = Vec::new();
    for (i, (spec, m)) in s.systems.iter().zip(&systems).enumerate() {
        reports.push(run_system(&ctx, &s, i, m, &spec.label)?);
    }
    let certified = reports.iter().flat_map(|r| &r.stages).all(Stage::certified);
    let report = ExperimentReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: s,
        systems: reports,
        certified,
        wall_clock_ms: start.elapsed().as_millis() as u64,
    };
    std::fs::write(out.join("report.json"), report.to_json()).map_err(|e| CliError::Run(e.to_string()))?;
    Ok(report)
}
