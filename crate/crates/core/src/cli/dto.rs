//! JSON request schemas. Weights and rates are decimals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{self, ParameterSet, UniverseJson};
use crate::linalg::DenseMatrix;
use crate::portfolio::{GmvMethod, RbEngine, RiskMeasure};
use crate::prox::{ConvexSet, Norm, ProxOp};

pub fn matrix(rows: &[Vec<f64>]) -> Result<DenseMatrix> {
    DenseMatrix::from_rows(rows)
}

fn norm(p: f64) -> Result<Norm> {
    Norm::from_p(p)
}

fn default_inf() -> f64 {
    f64::INFINITY
}

/// `p` as a number; `"inf"` for the sup norm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    Number(f64),
    Named(NamedP),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedP {
    Inf,
}

impl PValue {
    fn value(self) -> f64 {
        match self {
            Self::Number(p) => p,
            Self::Named(NamedP::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Hyperplane { a: Vec<f64>, b: f64 },
    Halfspace { c: Vec<f64>, d: f64 },
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { p: PValue, center: Vec<f64>, radius: f64 },
    BallComplement { p: PValue, center: Vec<f64>, radius: f64 },
    Simplex,
    Polyhedron { c: Vec<Vec<f64>>, d: Vec<f64> },
    Ellipsoid { sigma: Vec<Vec<f64>>, radius: f64 },
    EntropyFloor { min_entropy: f64 },
}

impl SetSpec {
    pub fn build(&self) -> Result<ConvexSet> {
        match self {
            Self::Hyperplane { a, b } => ConvexSet::hyperplane(a.clone(), *b),
            Self::Halfspace { c, d } => ConvexSet::halfspace(c.clone(), *d),
            Self::Affine { a, b } => ConvexSet::affine(matrix(a)?, b.clone()),
            Self::Box { lo, hi } => ConvexSet::boxed(lo.clone(), hi.clone()),
            Self::Ball { p, center, radius } => ConvexSet::ball(norm(p.value())?, center.clone(), *radius),
            Self::BallComplement { p, center, radius } => {
                ConvexSet::ball_complement(norm(p.value())?, center.clone(), *radius)
            }
            Self::Simplex => Ok(ConvexSet::Simplex),
            Self::Polyhedron { c, d } => ConvexSet::polyhedron(matrix(c)?, d.clone()),
            Self::Ellipsoid { sigma, radius } => ConvexSet::ellipsoid(&matrix(sigma)?, *radius),
            Self::EntropyFloor { min_entropy } => ConvexSet::entropy_floor(*min_entropy),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ProxSpec {
    Identity,
    SoftThreshold { lambda: f64 },
    TwoSided { lambda_minus: Vec<f64>, lambda_plus: Vec<f64> },
    Truncate { lo: Vec<f64>, hi: Vec<f64> },
    Max { lambda: f64 },
    LpNorm { p: PValue, lambda: f64 },
    LogBarrier { lambda: f64, b: Vec<f64> },
    Quadratic { q: Vec<Vec<f64>>, r: Vec<f64> },
    Kl { lambda: f64, reference: Vec<f64> },
    BidAsk { lambda: f64, alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64> },
    SumKLargest { lambda: f64, k: usize },
}

impl ProxSpec {
    pub fn build(&self) -> Result<ProxOp> {
        Ok(match self {
            Self::Identity => ProxOp::Identity,
            Self::SoftThreshold { lambda } => ProxOp::soft_threshold(*lambda)?,
            Self::TwoSided { lambda_minus, lambda_plus } => ProxOp::TwoSided {
                lambda_minus: lambda_minus.clone(),
                lambda_plus: lambda_plus.clone(),
            },
            Self::Truncate { lo, hi } => ProxOp::Truncate {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            Self::Max { lambda } => ProxOp::Max { lambda: *lambda },
            Self::LpNorm { p, lambda } => ProxOp::LpNorm {
                p: norm(p.value())?,
                lambda: *lambda,
            },
            Self::LogBarrier { lambda, b } => ProxOp::log_barrier(*lambda, b.clone())?,
            Self::Quadratic { q, r } => ProxOp::quadratic(&matrix(q)?, r.clone())?,
            Self::Kl { lambda, reference } => ProxOp::Kl {
                lambda: *lambda,
                reference: reference.clone(),
            },
            Self::BidAsk { lambda, alpha, beta, gamma } => ProxOp::BidAsk {
                lambda: *lambda,
                alpha: alpha.clone(),
                beta: beta.clone(),
                gamma: gamma.clone(),
            },
            Self::SumKLargest { lambda, k } => ProxOp::SumKLargest { lambda: *lambda, k: *k },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxRequest {
    #[serde(flatten)]
    pub op: ProxSpec,
    pub v: Vec<f64>,
}

/// One set, or several projected onto their intersection with Dykstra.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectRequest {
    pub sets: Vec<SetSpec>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearBlock {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// `min ½xᵀQx − xᵀR` s.t. `Ax = B`, `Cx ≤ D`, `lo ≤ x ≤ hi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpRequest {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    #[serde(default)]
    pub eq: Option<LinearBlock>,
    #[serde(default)]
    pub ineq: Option<LinearBlock>,
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundledSet {
    Set1,
    Set2,
    Set2Table5,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UniverseRef {
    Bundled(BundledSet),
    Inline(UniverseJson),
}

impl UniverseRef {
    pub fn load(&self) -> Result<ParameterSet> {
        match self {
            Self::Bundled(BundledSet::Set1) => Ok(fixtures::parameter_set_1()),
            Self::Bundled(BundledSet::Set2) => Ok(fixtures::parameter_set_2()),
            Self::Bundled(BundledSet::Set2Table5) => Ok(fixtures::parameter_set_2_table5()),
            Self::Inline(j) => fixtures::from_json(j),
        }
    }
}

fn yes() -> bool {
    true
}

fn default_engine() -> RbEngine {
    RbEngine::Ccd
}

fn default_method() -> GmvMethod {
    GmvMethod::LambdaBisection
}

fn default_measure() -> RiskMeasure {
    RiskMeasure::Volatility
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Erc,
    RiskBudgeting {
        budgets: Vec<f64>,
        #[serde(default = "default_measure")]
        measure: RiskMeasure,
        #[serde(default = "default_engine")]
        engine: RbEngine,
    },
    /// Long-only GMV with `𝒩(x) ≥ n_min`.
    Gmv {
        #[serde(default)]
        n_min: Option<f64>,
        #[serde(default)]
        upper: Option<Vec<f64>>,
        #[serde(default = "default_method")]
        method: GmvMethod,
    },
    GmvEntropy {
        min_entropy: f64,
    },
    Mdp {
        #[serde(default = "yes")]
        long_only: bool,
        #[serde(default)]
        n_min: Option<f64>,
    },
    Mvo {
        gamma: f64,
        #[serde(default = "yes")]
        long_only: bool,
    },
    MvoTarget {
        #[serde(default)]
        target_return: Option<f64>,
        #[serde(default)]
        target_volatility: Option<f64>,
        #[serde(default = "yes")]
        long_only: bool,
    },
    /// KL portfolio towards `reference` (default: the set's benchmark, else
    /// equal weights).
    Kl {
        #[serde(default)]
        reference: Option<Vec<f64>>,
        #[serde(default)]
        mu_min: Option<f64>,
        #[serde(default = "default_inf")]
        sigma_max: f64,
    },
    /// RQE portfolio; the dissimilarity defaults to `1 − ρ`.
    Rqe {
        #[serde(default)]
        dissimilarity: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocateRequest {
    pub universe: UniverseRef,
    #[serde(flatten)]
    pub model: ModelSpec,
}

pub fn bad_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
