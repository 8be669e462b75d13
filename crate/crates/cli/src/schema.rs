//! Input and output documents of every subcommand.

use serde::{Deserialize, Serialize};

use moment_sos::christrep::{ChristoffelRep, EquilibriumReport, EquilibriumSet, PellReport};
use moment_sos::disintegration::DisintegrationReport;
use moment_sos::hierarchy::{LowerBoundResult, UpperBoundMode, UpperBoundResult};
use moment_sos::{MeasureDescriptor, MomentSequence, Polynomial};

pub const SCHEMA_VERSION: u32 = 1;

/// A reference measure, either from the closed-form catalog or as raw moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSource {
    Catalog(MeasureDescriptor),
    Moments(MomentSequence),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundInput {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub f: Polynomial,
    /// Constraints `g ≥ 0`; the constant generator is implicit.
    #[serde(default)]
    pub constraints: Vec<Polynomial>,
    #[serde(default)]
    pub t_range: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpperBoundInput {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub f: Polynomial,
    pub measure: MeasureSource,
    #[serde(default = "default_mode")]
    pub mode: UpperBoundMode,
    #[serde(default)]
    pub t_range: Option<[usize; 2]>,
}

fn default_mode() -> UpperBoundMode {
    UpperBoundMode::Multivariate
}

/// Input of `cf` and `support-score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfInput {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub measure: MeasureSource,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    /// Grid box, one `[lo, hi]` per coordinate.
    #[serde(default)]
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Level for `inside_flag` on the scaled CF.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChristoffelRepInput {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub p: Polynomial,
    #[serde(default)]
    pub constraints: Vec<Polynomial>,
    #[serde(default)]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PellCheckInput {
    #[serde(default)]
    pub schema_version: Option<u32>,
    /// Dimension of the set, needed when `constraints` is empty.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub constraints: Vec<Polynomial>,
    pub measure: MeasureSource,
    #[serde(default)]
    pub t_range: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumInput {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub set: EquilibriumSet,
    #[serde(default)]
    pub t_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisintegrateInput {
    #[serde(default)]
    pub schema_version: Option<u32>,
    /// Joint measure on `X × ℝ`, `y` being the last coordinate.
    pub measure: MeasureSource,
    pub x: Vec<Vec<f64>>,
    #[serde(default)]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub sdp_gap: f64,
    pub sdp_feasibility: f64,
    pub sdp_max_iter: usize,
    pub rank: f64,
    pub extraction: f64,
    pub psd: f64,
    pub logdet_decrement: f64,
    pub logdet_stall: f64,
    pub ridge_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Versions {
    pub cli: String,
    pub core: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub schema_version: u32,
    pub command: String,
    pub versions: Versions,
    pub seed: u64,
    pub tolerances: Tolerances,
}

/// Every JSON result file: metadata plus the command's payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report<T> {
    pub meta: Meta,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfPoint {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub scaled_lambda: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfResult {
    pub t: usize,
    /// Set when the moment matrix needed a ridge.
    pub regularized: bool,
    pub ridge: f64,
    pub threshold: f64,
    pub points: Vec<CfPoint>,
}

pub type LowerBoundReport = Report<Vec<LowerBoundResult>>;
pub type UpperBoundReport = Report<Vec<UpperBoundResult>>;
pub type CfReport = Report<CfResult>;
pub type ChristoffelRepReport = Report<ChristoffelRep>;
pub type PellCheckReport = Report<Vec<PellReport>>;
pub type EquilibriumRunReport = Report<EquilibriumReport>;
pub type DisintegrateReport = Report<Vec<DisintegrationReport>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Numerical => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub command: Option<String>,
    pub error: ErrorBody,
}
