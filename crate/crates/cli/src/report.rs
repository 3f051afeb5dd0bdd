use plateau_core::constructions::SurgeryRecord;
use plateau_core::minimizer::{Bracket, Topology};
use plateau_core::{DensityTable, GridDomain, SpanStatus};
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub tool_version: String,
    /// The scenario after command-line overrides.
    pub scenario: Scenario,
    pub systems: Vec<SystemReport>,
    /// Every certification expectation held and every certificate re-verified.
    pub certified: bool,
    pub wall_clock_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemReport {
    pub label: String,
    pub components: usize,
    pub domain: GridDomain,
    pub stages: Vec<Stage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkRow {
    pub i: usize,
    pub j: usize,
    pub linking: i64,
    pub gauss: f64,
    /// Linking numbers counted along each sampled direction; `None` when
    /// the projection was degenerate.
    pub along: Vec<Option<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stage {
    LinkTable {
        rows: Vec<LinkRow>,
    },
    Surface {
        source: String,
        faces: usize,
        area: f64,
    },
    Minimize {
        area: f64,
        faces: usize,
        bracket: Bracket,
        bracket_holds: bool,
        hull_excess: f64,
        topology: Topology,
        certifications: usize,
        records: Vec<SurgeryRecord>,
        trace_file: String,
    },
    Certify {
        ell: i64,
        status: SpanStatus,
        witness_linking: Option<Vec<i64>>,
        certificate_verified: bool,
        expected: Option<SpanStatus>,
    },
    Haircut {
        area_before: f64,
        area_after: f64,
        squashed_mass: Vec<f64>,
        records: Vec<SurgeryRecord>,
    },
    Density {
        file: String,
        table: DensityTable,
    },
    Export {
        file: String,
        bytes: usize,
    },
}

impl Stage {
    pub fn certified(&self) -> bool {
        match self {
            Stage::Certify { status, certificate_verified, expected, .. } => {
                *certificate_verified && expected.is_none_or(|e| e == *status)
            }
            _ => true,
        }
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parse and re-check a report against the schema.
    pub fn from_json(text: &str) -> Result<ExperimentReport, CliError> {
        let r: ExperimentReport = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        r.scenario.validate(None)?;
        if r.systems.len() != r.scenario.systems.len() {
            return Err(CliError::Schema("system count differs from scenario".into()));
        }
        Ok(r)
    }
}
