//! Experiment configuration files (JSON, strict schema).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lattice::{AlphaVector, MultiIndex};
use crate::montecarlo::{BoundCheck, Event};
use crate::samplers::{FieldDistribution, ScalarDistribution};
use crate::series::SeriesSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub field: Option<FieldDistribution>,
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    pub task: Task,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Either an explicit `n` or a cube `N^d`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default)]
    pub n: Option<MultiIndex>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default, rename = "N")]
    pub side: Option<usize>,
}

impl LatticeSpec {
    pub fn resolve(&self) -> Result<MultiIndex> {
        match (&self.n, self.d, self.side) {
            (Some(n), None, None) => Ok(n.clone()),
            (None, Some(d), Some(side)) if d >= 1 && side >= 1 => MultiIndex::cube(d, side),
            _ => Err(Error::Config("lattice needs either \"n\" or both \"d\" and \"N\" (all >= 1)".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Verify {
        trials: u64,
        #[serde(default)]
        checks: Vec<BoundCheck>,
        #[serde(default)]
        grid: Option<VerifyGrid>,
    },
    Series {
        spec: SeriesSpec,
        trials_per_index: u64,
    },
    Conditions {
        condition: ConditionTask,
    },
    BoundEval {
        name: String,
        params: serde_json::Value,
    },
    DumpField {
        #[serde(default)]
        trial: u64,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Verify { .. } => "verify",
            Task::Series { .. } => "series",
            Task::Conditions { .. } => "conditions",
            Task::BoundEval { .. } => "bound_eval",
            Task::DumpField { .. } => "dump_field",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConditionTask {
    /// Mean tail domination of the field's site laws by `xi`.
    Wmb {
        xi: ScalarDistribution,
        probe_xs: Vec<f64>,
    },
    Moment {
        xi: ScalarDistribution,
        r: f64,
        p: u32,
    },
    Series {
        xi: ScalarDistribution,
        alpha: AlphaVector,
        cube_n: usize,
    },
}

impl ConditionTask {
    pub fn name(&self) -> &'static str {
        match self {
            ConditionTask::Wmb { .. } => "wmb",
            ConditionTask::Moment { .. } => "moment",
            ConditionTask::Series { .. } => "series",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XUnits {
    #[default]
    Absolute,
    /// Multiples of `sqrt(M_r)`.
    SqrtMR,
}

/// Cartesian product `bounds × x × cutoffs`, expanded in that order.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyGrid {
    pub bounds: Vec<String>,
    pub x: Vec<f64>,
    #[serde(default)]
    pub x_units: XUnits,
    pub cutoffs: Vec<f64>,
    pub r: f64,
    #[serde(default)]
    pub event: Option<Event>,
}

impl VerifyGrid {
    pub fn expand(&self, dist: &FieldDistribution, n: &MultiIndex) -> Result<Vec<BoundCheck>> {
        let scale = match self.x_units {
            XUnits::Absolute => 1.0,
            XUnits::SqrtMR => dist.site_laws(n)?.iter().map(|l| l.abs_moment(self.r)).sum::<f64>().sqrt(),
        };
        let mut out = Vec::with_capacity(self.bounds.len() * self.x.len() * self.cutoffs.len());
        for bound in &self.bounds {
            for &x in &self.x {
                for &cutoff in &self.cutoffs {
                    out.push(BoundCheck { bound: bound.clone(), x: x * scale, cutoff, r: self.r, event: self.event });
                }
            }
        }
        Ok(out)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn field(&self) -> Result<&FieldDistribution> {
        self.field.as_ref().ok_or_else(|| Error::Config(format!("task {} needs a \"field\"", self.task.kind())))
    }

    pub fn lattice(&self) -> Result<MultiIndex> {
        self.lattice
            .as_ref()
            .ok_or_else(|| Error::Config(format!("task {} needs a \"lattice\"", self.task.kind())))?
            .resolve()
    }
}
