//! JSON file formats. Everything on disk is `f64`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_SCHEMA: &str = "polarflow.report/1";
pub const ARRANGEMENT_RESULT_SCHEMA: &str = "polarflow.arrangement-result/1";
pub const MODEL_SCHEMA: &str = "polarflow.model/1";
pub const JACOBI_SCHEMA: &str = "polarflow.jacobi/1";
pub const RICCATI_SCHEMA: &str = "polarflow.riccati/1";
pub const META_SCHEMA: &str = "polarflow.meta/1";

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaEntry {
    pub value: f64,
    pub mult: usize,
}

/// `{"lambdas":[{"value":1.0,"mult":2}], "s0":[[...]]}`
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumInput {
    pub lambdas: Vec<LambdaEntry>,
    #[serde(default)]
    pub s0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    pub t: f64,
    pub order: usize,
}

/// `{"m_half":2, "constraints":[{"t":0.785,"order":1}]}`
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsInput {
    #[serde(default)]
    pub m_half: Option<usize>,
    pub constraints: Vec<ConstraintEntry>,
}

/// Diagonal curvature `r`, initial operator `s0`, optional comparison
/// constant and integration controls.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiInput {
    pub r: Vec<f64>,
    pub s0: Vec<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientDto {
    pub kind: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OffsetsDto {
    Finite { values: Vec<f64> },
    Arith { base: f64, gap: f64 },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDto {
    pub normal: Vec<f64>,
    pub offsets: OffsetsDto,
    #[serde(default = "one")]
    pub mult: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementDto {
    pub ambient: AmbientDto,
    pub families: Vec<FamilyDto>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentDto {
    pub families: Vec<usize>,
    /// Orthonormal basis vectors of the component's span.
    pub span: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArrangementResult {
    pub schema: &'static str,
    pub closure: ArrangementDto,
    pub components: Vec<ComponentDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_distribution: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chamber_compact: Option<bool>,
}

/// Chamber start point: a number for one-dimensional chambers, a list for
/// products.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PointDto {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointDto {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Self::Scalar(x) => vec![*x],
            Self::Vector(v) => v.clone(),
        }
    }
}

/// `{"model":"clifford:1,2","theta0":0.9,"direction":"backward","t_end":20}`
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McfRunConfig {
    pub model: String,
    pub theta0: PointDto,
    pub direction: String,
    pub t_end: f64,
    #[serde(default)]
    pub out: Option<String>,
}

/// A batch file is either a single run or a list of runs.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum McfBatch {
    One(McfRunConfig),
    Many(Vec<McfRunConfig>),
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub subject: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FocalDto {
    pub time: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobiSummary {
    pub schema: &'static str,
    pub dim: usize,
    pub interval: [f64; 2],
    pub focal_data: Vec<FocalDto>,
    pub index: usize,
    pub lambda_mass: f64,
    pub isotropy_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiccatiSummary {
    pub schema: &'static str,
    pub delta: f64,
    pub comparison_holds: bool,
    pub max_violation: f64,
    pub model_blowup: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup: Option<f64>,
    pub first_blowup_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelDescription {
    pub schema: &'static str,
    pub id: String,
    pub leaf_dimension: usize,
    pub chamber: Vec<[Option<f64>; 2]>,
    pub point: Vec<f64>,
    pub spectrum: Vec<LambdaEntry>,
    pub shape_operator: Vec<Vec<f64>>,
    pub volume: f64,
    pub mean_curvature: Vec<f64>,
    pub walls: ArrangementDto,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub outputs: Vec<String>,
    pub unix_time: u64,
}
