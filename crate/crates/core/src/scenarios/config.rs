//! Scenario configuration (TOML, `version = 1`).
//!
//! ```toml
//! version = 1
//!
//! [topology]
//! path = "../data/janos-us.txt"     # relative to this file
//! format = "native"                 # or "sndlib"
//! dc_exclude = []                   # nodes that may not host VNFs
//!
//! [gateways.anchors]                # s-ne = p-ne
//! Seattle = "Denver"
//!
//! [traffic]
//! background_gbps = [1.0, 4.0]
//! seed = 7
//! demands_per_chain = 10
//! chain_volume_gbps = 4.4
//! # chain = [{ label = "LB", replicable = false }, ...]
//!
//! [dimensioning]
//! capacity_types_gbps = [2.5, 10, 40, 100, 200]
//! overprovisioning = 1.2            # theta = 1 / overprovisioning
//! k_background = 5
//!
//! [cost]                            # optional
//! segments = [[1, 0], [3, 0.3333333333333333]]   # (slope, from utilization)
//!
//! [ra]
//! scenario = "minNC"                # minLB | minNC | minNC_constr | minLB_constr
//! r_max = 0
//! w_max = 8
//! max_dc = "auto"                   # or an integer; minLB_constr only
//! symmetry_breaking = true          # order equal-volume demands by path
//! link_rows = true                  # F[n,v,s] <= F[n] rows
//!
//! [solver]
//! backend = "embedded"              # or "external:<command>"
//! time_limit_s = 600
//! node_limit = 200000
//! gap_tol = 1e-6
//! workers = 1
//! [solver.ra]                       # per-stage overrides: dimensioning, te, ra
//! node_limit = 50000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vnfrep_milp::{Backend, SolverConfig};

use crate::cost::{default_cost_function, CostFunction};
use crate::topology::CapacityTypeSet;
use crate::traffic::{default_chain_template, validate_template, VnfSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("unsupported config version {0} (expected 1)")]
    Version(u32),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioName {
    #[serde(rename = "minLB")]
    MinLb,
    #[serde(rename = "minNC")]
    MinNc,
    #[serde(rename = "minNC_constr")]
    MinNcConstr,
    #[serde(rename = "minLB_constr")]
    MinLbConstr,
}

impl ScenarioName {
    pub fn weights(self) -> (f64, f64) {
        match self {
            ScenarioName::MinLb | ScenarioName::MinLbConstr => (1.0, 0.0),
            ScenarioName::MinNc | ScenarioName::MinNcConstr => (0.0, 1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::MinLb => "minLB",
            ScenarioName::MinNc => "minNC",
            ScenarioName::MinNcConstr => "minNC_constr",
            ScenarioName::MinLbConstr => "minLB_constr",
        }
    }

    pub fn constrained(self) -> bool {
        matches!(self, ScenarioName::MinNcConstr | ScenarioName::MinLbConstr)
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minLB" => Ok(ScenarioName::MinLb),
            "minNC" => Ok(ScenarioName::MinNc),
            "minNC_constr" => Ok(ScenarioName::MinNcConstr),
            "minLB_constr" => Ok(ScenarioName::MinLbConstr),
            _ => Err(format!("unknown scenario `{s}` (minLB, minNC, minNC_constr, minLB_constr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TopologyFormat {
    #[default]
    Native,
    Sndlib,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub path: PathBuf,
    #[serde(default)]
    pub format: TopologyFormat,
    #[serde(default)]
    pub dc_exclude: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GatewaySection {
    /// S-NE name to P-NE name.
    #[serde(default)]
    pub anchors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnfEntry {
    pub label: String,
    pub replicable: bool,
}

fn default_background() -> [f64; 2] {
    [1.0, 4.0]
}
fn default_seed() -> u64 {
    7
}
fn default_per_chain() -> usize {
    10
}
fn default_chain_volume() -> f64 {
    4.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    #[serde(default = "default_background")]
    pub background_gbps: [f64; 2],
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_per_chain")]
    pub demands_per_chain: usize,
    #[serde(default = "default_chain_volume")]
    pub chain_volume_gbps: f64,
    #[serde(default)]
    pub chain: Option<Vec<VnfEntry>>,
}

impl Default for TrafficSection {
    fn default() -> Self {
        Self {
            background_gbps: default_background(),
            seed: default_seed(),
            demands_per_chain: default_per_chain(),
            chain_volume_gbps: default_chain_volume(),
            chain: None,
        }
    }
}

impl TrafficSection {
    pub fn template(&self) -> Vec<VnfSpec> {
        match &self.chain {
            None => default_chain_template(),
            Some(entries) => entries
                .iter()
                .enumerate()
                .map(|(i, e)| VnfSpec { index: i, label: e.label.clone(), replicable: e.replicable })
                .collect(),
        }
    }
}

fn default_types() -> Vec<f64> {
    CapacityTypeSet::default().as_slice().to_vec()
}
fn default_overprovisioning() -> f64 {
    1.2
}
fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensioningSection {
    #[serde(default = "default_types")]
    pub capacity_types_gbps: Vec<f64>,
    #[serde(default = "default_overprovisioning")]
    pub overprovisioning: f64,
    #[serde(default = "default_k")]
    pub k_background: usize,
}

impl Default for DimensioningSection {
    fn default() -> Self {
        Self {
            capacity_types_gbps: default_types(),
            overprovisioning: default_overprovisioning(),
            k_background: default_k(),
        }
    }
}

impl DimensioningSection {
    pub fn theta(&self) -> f64 {
        1.0 / self.overprovisioning
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    /// `(slope, from_utilization)` pairs; the first starts at 0.
    pub segments: Vec<[f64; 2]>,
}

impl CostSection {
    pub fn build(&self) -> Result<CostFunction, ConfigError> {
        let pairs: Vec<(f64, f64)> = self.segments.iter().map(|s| (s[0], s[1])).collect();
        CostFunction::from_pairs(&pairs).map_err(|e| ConfigError::Invalid(format!("cost: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxDc {
    Fixed(usize),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaSection {
    pub scenario: ScenarioName,
    #[serde(default)]
    pub r_max: usize,
    #[serde(default)]
    pub w_max: Option<usize>,
    #[serde(default)]
    pub max_dc: Option<MaxDc>,
    #[serde(default = "default_true")]
    pub symmetry_breaking: bool,
    #[serde(default = "default_true")]
    pub link_rows: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StageSolver {
    pub backend: Option<String>,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<u64>,
    pub gap_tol: Option<f64>,
    pub workers: Option<usize>,
}

fn default_backend() -> String {
    "embedded".into()
}
fn default_gap() -> f64 {
    1e-6
}
fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    #[serde(default)]
    pub node_limit: Option<u64>,
    #[serde(default = "default_gap")]
    pub gap_tol: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub dimensioning: Option<StageSolver>,
    #[serde(default)]
    pub te: Option<StageSolver>,
    #[serde(default)]
    pub ra: Option<StageSolver>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            backend: default_backend(),
            time_limit_s: None,
            node_limit: None,
            gap_tol: default_gap(),
            workers: default_workers(),
            dimensioning: None,
            te: None,
            ra: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Dimensioning,
    Te,
    Ra,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Dimensioning => "dimensioning",
            Stage::Te => "te",
            Stage::Ra => "ra",
        }
    }
}

impl SolverSection {
    /// Effective solver settings for `stage`.
    pub fn for_stage(&self, stage: Stage) -> Result<SolverConfig, ConfigError> {
        let over = match stage {
            Stage::Dimensioning => &self.dimensioning,
            Stage::Te => &self.te,
            Stage::Ra => &self.ra,
        }
        .clone()
        .unwrap_or_default();
        let backend_text = over.backend.as_deref().unwrap_or(&self.backend);
        let backend: Backend = backend_text.parse().map_err(ConfigError::Invalid)?;
        let time_limit = over.time_limit_s.or(self.time_limit_s);
        if let Some(t) = time_limit {
            if !(t > 0.0) || !t.is_finite() {
                return Err(ConfigError::Invalid(format!("time_limit_s must be positive, got {t}")));
            }
        }
        let gap_tol = over.gap_tol.unwrap_or(self.gap_tol);
        if !(gap_tol >= 0.0) {
            return Err(ConfigError::Invalid(format!("gap_tol must be >= 0, got {gap_tol}")));
        }
        let workers = over.workers.unwrap_or(self.workers);
        if workers == 0 {
            return Err(ConfigError::Invalid("workers must be >= 1".into()));
        }
        Ok(SolverConfig {
            time_limit: time_limit.map(Duration::from_secs_f64),
            node_limit: over.node_limit.or(self.node_limit),
            gap_tol,
            workers,
            backend,
        })
    }

    /// Replaces the backend of every stage.
    pub fn force_backend(&mut self, backend: &str) {
        self.backend = backend.to_string();
        for s in [&mut self.dimensioning, &mut self.te, &mut self.ra].into_iter().flatten() {
            s.backend = None;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub topology: TopologySection,
    #[serde(default)]
    pub gateways: GatewaySection,
    #[serde(default)]
    pub traffic: TrafficSection,
    #[serde(default)]
    pub dimensioning: DimensioningSection,
    #[serde(default)]
    pub cost: Option<CostSection>,
    pub ra: RaSection,
    #[serde(default)]
    pub solver: SolverSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, base_dir: &FsPath) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(FsPath::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn topology_path(&self) -> PathBuf {
        self.base_dir.join(&self.topology.path)
    }

    pub fn cost_function(&self) -> Result<CostFunction, ConfigError> {
        match &self.cost {
            Some(c) => c.build(),
            None => Ok(default_cost_function()),
        }
    }

    pub fn capacity_types(&self) -> Result<CapacityTypeSet, ConfigError> {
        CapacityTypeSet::new(self.dimensioning.capacity_types_gbps.clone()).map_err(ConfigError::Invalid)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.version != 1 {
            return Err(ConfigError::Version(self.version));
        }
        let [lo, hi] = self.traffic.background_gbps;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("traffic.background_gbps must satisfy 0 < low <= high, got [{lo}, {hi}]"));
        }
        if self.traffic.demands_per_chain == 0 {
            return bad("traffic.demands_per_chain must be >= 1".into());
        }
        if !(self.traffic.chain_volume_gbps > 0.0) {
            return bad("traffic.chain_volume_gbps must be positive".into());
        }
        validate_template(&self.traffic.template())
            .map_err(|e| ConfigError::Invalid(format!("traffic.chain: {e}")))?;
        if !(self.dimensioning.overprovisioning >= 1.0) || !self.dimensioning.overprovisioning.is_finite() {
            return bad(format!(
                "dimensioning.overprovisioning must be >= 1, got {}",
                self.dimensioning.overprovisioning
            ));
        }
        if self.dimensioning.k_background == 0 {
            return bad("dimensioning.k_background must be >= 1".into());
        }
        self.capacity_types()?;
        self.cost_function()?;
        let ra = &self.ra;
        if ra.w_max == Some(0) {
            return bad("ra.w_max must be >= 1".into());
        }
        if ra.scenario.constrained() && ra.w_max.is_none() {
            return bad(format!("scenario {} requires ra.w_max", ra.scenario));
        }
        match (ra.scenario, ra.max_dc) {
            (ScenarioName::MinLbConstr, None) => {
                return bad("scenario minLB_constr requires ra.max_dc (an integer or \"auto\")".into())
            }
            (ScenarioName::MinLbConstr, _) => {}
            (_, Some(_)) => return bad(format!("ra.max_dc only applies to minLB_constr, not {}", ra.scenario)),
            _ => {}
        }
        for stage in [Stage::Dimensioning, Stage::Te, Stage::Ra] {
            self.solver.for_stage(stage)?;
        }
        Ok(())
    }
}
