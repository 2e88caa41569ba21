//! Pipeline configuration, read from TOML on top of per-system presets.
//!
//! A config names a preset under `[system]` and overrides any subset of the
//! fields below; everything not given falls back to the preset:
//!
//! ```toml
//! version = 1
//! output = "runs/lorenz"
//!
//! [system]
//! preset = "lorenz"        # lorenz | doublewell | dadras
//! initial = [0.0, 10.0, 0.0]
//!
//! [trajectory]
//! points = 200000          # samples kept after burn-in (and thinning)
//! burn_in = 1000
//!
//! [grid]
//! r = 8.0
//! k = 3
//!
//! [signatures]
//! radii = [5.0]
//!
//! [plan]
//! lengths = "10:10:500"
//! per_length = 200
//! seed = 0
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cubical::{GridParams, RoutePolicy};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentPlan, FREQUENT_THRESHOLD};
use crate::signatures::Method;
use crate::systems::{SystemKind, SystemSpec, TangentMode};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub preset: SystemKind,
    pub params: Vec<f64>,
    pub initial: Vec<f64>,
    pub noise: f64,
    pub h_max: f64,
    pub tangent_mode: TangentMode,
    pub transport_tangents: bool,
}

impl SystemSection {
    fn from_spec(spec: &SystemSpec) -> Self {
        SystemSection {
            preset: spec.system,
            params: spec.params.clone(),
            initial: spec.initial.clone(),
            noise: spec.noise,
            h_max: spec.h_max,
            tangent_mode: spec.tangent_mode,
            transport_tangents: spec.transport_tangents,
        }
    }

    pub fn spec(&self) -> SystemSpec {
        SystemSpec {
            params: self.params.clone(),
            initial: self.initial.clone(),
            noise: self.noise,
            h_max: self.h_max,
            tangent_mode: self.tangent_mode,
            transport_tangents: self.transport_tangents,
            ..SystemSpec::preset(self.preset)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// Samples kept after burn-in and thinning.
    pub points: usize,
    /// Leading samples discarded as transient.
    pub burn_in: usize,
    /// Noise seed (stochastic systems only).
    pub seed: u64,
    /// Integrator step (stochastic systems only).
    pub dt: f64,
    /// Keep every `thin`-th integrator step (stochastic systems only).
    pub thin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub r: f64,
    pub k: u32,
    pub route: RoutePolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSection {
    pub radii: Vec<f64>,
    /// Tangent weight of the metric; `r k` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    /// `start:step:end` or a comma separated list.
    pub lengths: String,
    pub per_length: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    /// Peak frequency at which a signature counts as frequent.
    pub threshold: f64,
    /// Frequency at which a signature's onset is read off.
    pub onset_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub output: PathBuf,
    /// Worker threads for the compute stage; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub system: SystemSection,
    pub trajectory: TrajectorySection,
    pub grid: GridSection,
    pub signatures: SignatureSection,
    pub plan: PlanSection,
    pub stats: StatsSection,
}

impl PipelineConfig {
    /// Desk-scale defaults for one of the reference systems.
    pub fn preset(kind: SystemKind) -> Self {
        let spec = SystemSpec::preset(kind);
        let (r, radius) = match kind {
            SystemKind::Lorenz => (8.0, 5.0),
            SystemKind::Doublewell => (0.2, 0.18),
            SystemKind::Dadras => (4.0, 1.5),
        };
        PipelineConfig {
            version: CONFIG_VERSION,
            output: PathBuf::from(format!("runs/{kind}")),
            threads: None,
            system: SystemSection::from_spec(&spec),
            trajectory: TrajectorySection { points: 200_000, burn_in: 1000, seed: 1, dt: 0.01, thin: 10 },
            grid: GridSection { r, k: 3, route: RoutePolicy::default() },
            signatures: SignatureSection { radii: vec![radius], c: None, method: Method::default() },
            plan: PlanSection { lengths: "10:10:500".into(), per_length: 200, seed: 0 },
            stats: StatsSection { threshold: FREQUENT_THRESHOLD, onset_threshold: 0.01 },
        }
    }

    /// Parse a config, filling unspecified fields from the preset it names.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let kind: SystemKind = user
            .get("system")
            .and_then(|s| s.get("preset"))
            .and_then(toml::Value::as_str)
            .ok_or_else(|| Error::Parse("config needs [system] preset = \"lorenz\" | \"doublewell\" | \"dadras\"".into()))?
            .parse()?;
        let mut base = Self::preset(kind).to_table()?;
        merge(&mut base, user);
        let cfg: Self = toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply a partial TOML table on top of this config.
    pub fn with_overrides(&self, overrides: toml::Table) -> Result<Self> {
        let mut base = self.to_table()?;
        merge(&mut base, overrides);
        let cfg: Self = toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn spec(&self) -> SystemSpec {
        self.system.spec()
    }

    pub fn grid(&self) -> Result<GridParams> {
        GridParams::new(self.grid.r, self.grid.k, self.system.preset.dim())
    }

    pub fn plan(&self) -> Result<ExperimentPlan> {
        let plan = ExperimentPlan {
            lengths: ExperimentPlan::parse_lengths(&self.plan.lengths)?,
            per_length: self.plan.per_length,
            seed: self.plan.seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Everything that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::invalid(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.spec().validate()?;
        let grid = self.grid()?;
        if self.signatures.radii.is_empty() {
            return Err(Error::invalid("at least one evaluation radius is required"));
        }
        for &r in &self.signatures.radii {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("evaluation radius must be positive, got {r}")));
            }
            if r > grid.r {
                return Err(Error::RadiusTooLarge { radius: r, box_size: grid.r });
            }
        }
        if let Some(c) = self.signatures.c {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("tangent weight must be nonnegative, got {c}")));
            }
        }
        let plan = self.plan()?;
        let longest = *plan.lengths.last().expect("validated plan has lengths");
        if longest > self.trajectory.points {
            return Err(Error::SegmentTooLong { length: longest, available: self.trajectory.points });
        }
        if self.trajectory.thin == 0 || !(self.trajectory.dt > 0.0) {
            return Err(Error::invalid("trajectory needs dt > 0 and thin >= 1"));
        }
        for t in [self.stats.threshold, self.stats.onset_threshold] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::invalid(format!("frequency thresholds must lie in (0, 1], got {t}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be at least 1"));
        }
        Ok(())
    }
}

/// Recursive merge: tables merge key by key, everything else is replaced.
pub(crate) fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
