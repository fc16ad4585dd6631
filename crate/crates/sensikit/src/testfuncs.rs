//! Benchmark models with closed-form sensitivity indices: the Ishigami
//! function with a constant offset, the Sobol' g-function, and additive
//! polynomial controls.
//!
//! Each model owns its factor ranges; samplers stay in the unit cube and
//! points are mapped at evaluation time. The registry ([`ModelSpec`])
//! identifies a model by name plus parameters, so experiment configs are
//! serializable and reproducible.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::core::{FactorSpace, Model};
use crate::error::{Error, Result};

/// Closed-form per-factor indices plus the total output variance.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticIndices {
    pub s: Vec<f64>,
    pub st: Vec<f64>,
    pub variance: f64,
}

// ---------------------------------------------------------------------------
// Ishigami
// ---------------------------------------------------------------------------

/// Parameters of the (offset) Ishigami function
/// `f0 + sin x1 + a sin^2 x2 + b x3^4 sin x1` on `(-pi, pi)^3`.
///
/// The offset `f0` moves the mean but not the variance, so it leaves every
/// index unchanged; it exists to probe estimators that are sensitive to the
/// output level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IshigamiParams {
    pub f0: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for IshigamiParams {
    fn default() -> Self {
        Self {
            f0: 0.0,
            a: 7.0,
            b: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ishigami {
    params: IshigamiParams,
    space: FactorSpace,
}

impl Ishigami {
    pub fn new(params: IshigamiParams) -> Self {
        Self {
            params,
            space: FactorSpace::new(vec![(-PI, PI); 3]).expect("fixed ranges are valid"),
        }
    }

    pub fn params(&self) -> &IshigamiParams {
        &self.params
    }

    /// Standard ANOVA closed forms. With `p4 = pi^4`, `p8 = pi^8`:
    ///
    /// ```text
    /// V   = 1/2 + a^2/8 + b p4/5 + b^2 p8/18
    /// V1  = (1 + b p4/5)^2 / 2        V2 = a^2/8       V3 = 0
    /// V13 = b^2 p8 (1/18 - 1/50)
    /// S_i = V_i/V     ST1 = (V1+V13)/V   ST2 = S2   ST3 = V13/V
    /// ```
    pub fn analytic(&self) -> AnalyticIndices {
        let IshigamiParams { a, b, .. } = self.params;
        let p4 = PI.powi(4);
        let p8 = PI.powi(8);
        let v = 0.5 + a * a / 8.0 + b * p4 / 5.0 + b * b * p8 / 18.0;
        let v1 = (1.0 + b * p4 / 5.0).powi(2) / 2.0;
        let v2 = a * a / 8.0;
        let v13 = b * b * p8 * (1.0 / 18.0 - 1.0 / 50.0);
        AnalyticIndices {
            s: vec![v1 / v, v2 / v, 0.0],
            st: vec![(v1 + v13) / v, v2 / v, v13 / v],
            variance: v,
        }
    }
}

impl Model for Ishigami {
    fn space(&self) -> &FactorSpace {
        &self.space
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "ishigami expects 3 inputs, got {}",
                x.len()
            )));
        }
        let s1 = x[0].sin();
        Ok(self.params.f0 + s1 + self.params.a * x[1].sin().powi(2) + self.params.b * x[2].powi(4) * s1)
    }
}

// ---------------------------------------------------------------------------
// Sobol' g-function
// ---------------------------------------------------------------------------

/// Coefficients of the g-function `prod_i (|4 x_i - 2| + a_i)/(a_i + 1)` on
/// `(0,1)^d`. Each `a_i` must differ from -1 (the factor is undefined
/// there). Values below -1 make individual factors change sign; the
/// variance closed form holds regardless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFunctionParams {
    pub a: Vec<f64>,
}

/// Default g-function coefficients: ten factors whose total-order indices
/// descend roughly uniformly from 0.95 to 0.05, so estimator accuracy can
/// be read off across the whole index range.
pub const DEFAULT_G_COEFFS: [f64; 10] = [
    -1.13, -1.24, -1.33, -1.42, -1.52, -1.64, -1.79, -2.0, -2.37, 1.52,
];

impl Default for GFunctionParams {
    fn default() -> Self {
        Self {
            a: DEFAULT_G_COEFFS.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GFunction {
    params: GFunctionParams,
    space: FactorSpace,
}

impl GFunction {
    pub fn new(params: GFunctionParams) -> Result<Self> {
        if params.a.is_empty() {
            return Err(Error::InvalidConfig(
                "g-function needs at least one coefficient".into(),
            ));
        }
        for (i, &ai) in params.a.iter().enumerate() {
            if !ai.is_finite() || ai == -1.0 {
                return Err(Error::SingularParameter(format!(
                    "g-function coefficient a[{i}] = {ai}; must be finite and != -1"
                )));
            }
        }
        let d = params.a.len();
        Ok(Self {
            params,
            space: FactorSpace::unit(d).expect("d >= 1"),
        })
    }

    pub fn params(&self) -> &GFunctionParams {
        &self.params
    }

    /// Closed forms: `V_i = (1/3)/(1+a_i)^2`, `V = prod(1+V_i) - 1`,
    /// `S_i = V_i/V`, `ST_i = V_i prod_{j != i}(1+V_j) / V`.
    pub fn analytic(&self) -> AnalyticIndices {
        let vi: Vec<f64> = self
            .params
            .a
            .iter()
            .map(|&ai| (1.0 / 3.0) / ((1.0 + ai) * (1.0 + ai)))
            .collect();
        let prod: f64 = vi.iter().map(|v| 1.0 + v).product();
        let variance = prod - 1.0;
        let s = vi.iter().map(|v| v / variance).collect();
        let st = vi
            .iter()
            .map(|v| v * (prod / (1.0 + v)) / variance)
            .collect();
        AnalyticIndices { s, st, variance }
    }
}

impl Model for GFunction {
    fn space(&self) -> &FactorSpace {
        &self.space
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.params.a.len() {
            return Err(Error::ShapeMismatch(format!(
                "g-function expects {} inputs, got {}",
                self.params.a.len(),
                x.len()
            )));
        }
        let mut product = 1.0;
        for (&xi, &ai) in x.iter().zip(&self.params.a) {
            product *= ((4.0 * xi - 2.0).abs() + ai) / (ai + 1.0);
        }
        Ok(product)
    }
}

// ---------------------------------------------------------------------------
// Additive polynomial
// ---------------------------------------------------------------------------

/// `sum_i c_i x_i` on `(0,1)^d`: the fully additive control. Every factor
/// satisfies `S_i = ST_i = c_i^2 / sum_j c_j^2` exactly, which pins down
/// the behaviors that only hold for additive models.
#[derive(Debug, Clone)]
pub struct AdditivePoly {
    coeffs: Vec<f64>,
    space: FactorSpace,
}

impl AdditivePoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidConfig(
                "additive model needs at least one coefficient".into(),
            ));
        }
        let d = coeffs.len();
        Ok(Self {
            coeffs,
            space: FactorSpace::unit(d).expect("d >= 1"),
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `V_i = c_i^2/12`. All-zero coefficients make a constant model, legal
    /// to evaluate but with no variance to decompose.
    pub fn analytic(&self) -> Result<AnalyticIndices> {
        let total_sq: f64 = self.coeffs.iter().map(|c| c * c).sum();
        if total_sq == 0.0 {
            return Err(Error::InvalidConfig(
                "additive model with all-zero coefficients has zero variance".into(),
            ));
        }
        let shares: Vec<f64> = self.coeffs.iter().map(|c| c * c / total_sq).collect();
        Ok(AnalyticIndices {
            s: shares.clone(),
            st: shares,
            variance: total_sq / 12.0,
        })
    }
}

impl Model for AdditivePoly {
    fn space(&self) -> &FactorSpace {
        &self.space
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coeffs.len() {
            return Err(Error::ShapeMismatch(format!(
                "additive model expects {} inputs, got {}",
                self.coeffs.len(),
                x.len()
            )));
        }
        Ok(self.coeffs.iter().zip(x).map(|(&c, &xi)| c * xi).sum())
    }
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// A registered model: name plus parameters, serializable into run configs
/// and manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ModelSpec {
    Ishigami {
        #[serde(default)]
        f0: f64,
        #[serde(default = "default_ishigami_a")]
        a: f64,
        #[serde(default = "default_ishigami_b")]
        b: f64,
    },
    GFunction {
        #[serde(default = "default_g_coeffs")]
        a: Vec<f64>,
    },
    Additive {
        coeffs: Vec<f64>,
    },
}

fn default_ishigami_a() -> f64 {
    7.0
}

fn default_ishigami_b() -> f64 {
    0.1
}

fn default_g_coeffs() -> Vec<f64> {
    DEFAULT_G_COEFFS.to_vec()
}

impl ModelSpec {
    pub fn default_ishigami() -> Self {
        let IshigamiParams { f0, a, b } = IshigamiParams::default();
        ModelSpec::Ishigami { f0, a, b }
    }

    pub fn default_gfunction() -> Self {
        ModelSpec::GFunction {
            a: default_g_coeffs(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Ishigami { .. } => "ishigami",
            ModelSpec::GFunction { .. } => "gfunction",
            ModelSpec::Additive { .. } => "additive",
        }
    }

    pub fn d(&self) -> usize {
        match self {
            ModelSpec::Ishigami { .. } => 3,
            ModelSpec::GFunction { a } => a.len(),
            ModelSpec::Additive { coeffs } => coeffs.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Box<dyn Model>> {
        match self {
            ModelSpec::Ishigami { f0, a, b } => Ok(Box::new(Ishigami::new(IshigamiParams {
                f0: *f0,
                a: *a,
                b: *b,
            }))),
            ModelSpec::GFunction { a } => {
                Ok(Box::new(GFunction::new(GFunctionParams { a: a.clone() })?))
            }
            ModelSpec::Additive { coeffs } => Ok(Box::new(AdditivePoly::new(coeffs.clone())?)),
        }
    }

    pub fn analytic(&self) -> Result<AnalyticIndices> {
        match self {
            ModelSpec::Ishigami { f0, a, b } => Ok(Ishigami::new(IshigamiParams {
                f0: *f0,
                a: *a,
                b: *b,
            })
            .analytic()),
            ModelSpec::GFunction { a } => {
                Ok(GFunction::new(GFunctionParams { a: a.clone() })?.analytic())
            }
            ModelSpec::Additive { coeffs } => AdditivePoly::new(coeffs.clone())?.analytic(),
        }
    }

    /// Same model with its constant offset replaced; only models with an
    /// offset parameter support shift experiments.
    pub fn with_offset(&self, f0: f64) -> Result<ModelSpec> {
        match self {
            ModelSpec::Ishigami { a, b, .. } => Ok(ModelSpec::Ishigami { f0, a: *a, b: *b }),
            other => Err(Error::InvalidConfig(format!(
                "model '{}' has no constant-offset parameter",
                other.label()
            ))),
        }
    }
}
