//! Scenario files: boundary, grid, pipeline and seeds.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use plateau_core::fixtures;
use plateau_core::geometry::P3;
use plateau_core::linking::circle;
use plateau_core::{BoundarySystem, Loop, SpanStatus};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Master seed; every stochastic stage derives its own stream from it.
    pub seed: u64,
    pub grid: GridSpec,
    pub systems: Vec<SystemSpec>,
    pub pipeline: Vec<Op>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub h: f64,
    #[serde(default = "default_margin")]
    pub margin_cells: f64,
}

fn default_margin() -> f64 {
    6.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub label: String,
    pub boundary: Vec<LoopSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    Circle {
        center: P3,
        axis: P3,
        radius: f64,
        sides: usize,
    },
    Polygon {
        vertices: Vec<P3>,
    },
    /// Whitespace-separated `x y z` lines, relative to the scenario file.
    VertexFile {
        path: String,
    },
    MoebiusBoundary {
        sides: usize,
        half_width: f64,
    },
    /// `((R + r cos(q t + phase)) cos(p t), (R + r cos(q t + phase)) sin(p t), r sin(q t + phase))`
    TorusCurve {
        major: f64,
        minor: f64,
        p: u32,
        q: u32,
        phase: f64,
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Obj,
    Off,
    Csv,
    Txt,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Obj => "obj",
            Format::Off => "off",
            Format::Csv => "csv",
            Format::Txt => "txt",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Format, CliError> {
        match s {
            "obj" => Ok(Format::Obj),
            "off" => Ok(Format::Off),
            "csv" => Ok(Format::Csv),
            "txt" => Ok(Format::Txt),
            _ => Err(CliError::Schema(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    /// Pairwise linking numbers of the boundary loops.
    LinkTable {
        #[serde(default = "default_directions")]
        directions: usize,
    },
    /// Rasterized cone from `apex`, or from the boundary centroid.
    Cone {
        #[serde(default)]
        apex: Option<P3>,
    },
    MoebiusBand {
        sides: usize,
        half_width: f64,
    },
    Minimize {
        #[serde(default)]
        cuts_only: bool,
        #[serde(default)]
        budget: Option<usize>,
    },
    Certify {
        ell: Vec<i64>,
        #[serde(default)]
        expect: Option<Vec<SpanStatus>>,
    },
    Haircut,
    Density {
        radii_cells: Vec<f64>,
        samples: usize,
    },
    Export {
        format: Format,
    },
}

fn default_directions() -> usize {
    20
}

impl Op {
    fn needs_surface(&self) -> bool {
        matches!(self, Op::Certify { .. } | Op::Haircut | Op::Density { .. } | Op::Export { .. })
    }

    fn makes_surface(&self) -> bool {
        matches!(self, Op::Cone { .. } | Op::MoebiusBand { .. } | Op::Minimize { .. })
    }
}

impl LoopSpec {
    pub fn build(&self, base: &Path) -> Result<Loop, CliError> {
        let l = match self {
            LoopSpec::Circle { center, axis, radius, sides } => circle(*center, *axis, *radius, *sides),
            LoopSpec::Polygon { vertices } => Loop::new(vertices.clone()),
            LoopSpec::VertexFile { path } => {
                let p = base.join(path);
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CliError::Schema(format!("vertex file {}: {e}", p.display())))?;
                Loop::from_txt(&text)
            }
            LoopSpec::MoebiusBoundary { sides, half_width } => Ok(fixtures::moebius(*sides, *half_width).0),
            LoopSpec::TorusCurve { major, minor, p, q, phase, samples } => {
                let v = (0..*samples)
                    .map(|k| {
                        let t = TAU * k as f64 / *samples as f64;
                        let w = *q as f64 * t + phase;
                        let rr = major + minor * w.cos();
                        [rr * (*p as f64 * t).cos(), rr * (*p as f64 * t).sin(), minor * w.sin()]
                    })
                    .collect();
                Loop::new(v)
            }
        };
        l.map_err(|e| CliError::Schema(e.to_string()))
    }
}

impl SystemSpec {
    pub fn build(&self, base: &Path) -> Result<BoundarySystem, CliError> {
        let loops = self.boundary.iter().map(|l| l.build(base)).collect::<Result<Vec<_>, _>>()?;
        BoundarySystem::new(loops).map_err(|e| CliError::Schema(format!("system `{}`: {e}", self.label)))
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Scenario, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let s: Scenario = serde_json::from_str(&text).map_err(|e| CliError::Schema(e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.validate(Some(&base))?;
        Ok((s, base))
    }

    /// Schema checks; vertex files are checked for existence when `base` is given.
    pub fn validate(&self, base: Option<&Path>) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Schema(m));
        if self.name.is_empty() {
            return bad("empty scenario name".into());
        }
        if !(self.grid.h > 0.0 && self.grid.h.is_finite()) || self.grid.margin_cells < 1.0 {
            return bad(format!("invalid grid {:?}", self.grid));
        }
        if self.systems.is_empty() || self.pipeline.is_empty() {
            return bad("scenario needs at least one system and one op".into());
        }
        let mut labels = std::collections::BTreeSet::new();
        for sys in &self.systems {
            let ok =
                !sys.label.is_empty() && sys.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !ok || !labels.insert(&sys.label) {
                return bad(format!("system labels must be unique and filename-safe: `{}`", sys.label));
            }
            if sys.boundary.is_empty() {
                return bad(format!("system `{}` has no loops", sys.label));
            }
            for l in &sys.boundary {
                if let (LoopSpec::VertexFile { path }, Some(base)) = (l, base) {
                    if !base.join(path).is_file() {
                        return bad(format!("missing vertex file {path}"));
                    }
                }
            }
        }
        let mut surface = false;
        for (i, op) in self.pipeline.iter().enumerate() {
            if op.needs_surface() && !surface {
                return bad(format!("op {i} needs a surface; add cone, moebius_band or minimize first"));
            }
            surface |= op.makes_surface();
            match op {
                Op::Certify { ell, expect } => {
                    if ell.is_empty() || ell.iter().any(|&l| l < 1) {
                        return bad(format!("op {i}: ell must be a nonempty list of positive integers"));
                    }
                    if expect.as_ref().is_some_and(|e| e.len() != ell.len()) {
                        return bad(format!("op {i}: expect must match ell"));
                    }
                }
                Op::Density { radii_cells, samples } if (*samples == 0 || radii_cells.iter().any(|r| !(*r > 0.0))) => {
                    return bad(format!("op {i}: density needs samples and positive radii"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
