//! Shared domain types: factor spaces, factor groups and their complement
//! algebra, the model evaluation contract, pick-freeze output blocks, and
//! model-call budget accounting.
//!
//! Everything here is an immutable value after construction and safe to
//! share across threads without synchronization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::sampling::SamplerKind;
use crate::testfuncs::ModelSpec;

/// Number of input factors together with per-factor bounds (model units).
///
/// Samplers always work in the unit hypercube; points are mapped affinely
/// into these ranges at evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpace {
    ranges: Vec<(f64, f64)>,
}

impl FactorSpace {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidFactorSpace(
                "at least one factor is required".into(),
            ));
        }
        for (i, &(lo, hi)) in ranges.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidFactorSpace(format!(
                    "factor {i}: lower bound {lo} must be finite and below upper bound {hi}"
                )));
            }
        }
        Ok(Self { ranges })
    }

    /// The unit hypercube `[0,1)^d`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::new(vec![(0.0, 1.0); d])
    }

    pub fn d(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    /// Map a unit-hypercube point into factor ranges, writing into `out`.
    pub fn map_unit_into(&self, unit: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(unit.len(), self.d());
        out.clear();
        out.extend(
            unit.iter()
                .zip(&self.ranges)
                .map(|(&u, &(lo, hi))| lo + u * (hi - lo)),
        );
    }
}

/// A set of factor indices (0-based, sorted, unique) identifying the group
/// whose sensitivity indices are estimated. The complement group is always
/// derived, never stored. Empty and full groups are degenerate but legal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FactorGroup {
    members: Vec<usize>,
}

impl FactorGroup {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGroup(format!(
                "duplicate factor index in {members:?}"
            )));
        }
        Ok(Self { members })
    }

    pub fn empty() -> Self {
        Self { members: Vec::new() }
    }

    pub fn full(d: usize) -> Self {
        Self {
            members: (0..d).collect(),
        }
    }

    pub fn singleton(index: usize) -> Self {
        Self {
            members: vec![index],
        }
    }

    /// One singleton group per factor: the default per-factor analysis.
    pub fn singletons(d: usize) -> Vec<Self> {
        (0..d).map(Self::singleton).collect()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    /// All indices must lie in `[0, d)`.
    pub fn validate_for(&self, d: usize) -> Result<()> {
        match self.members.last() {
            Some(&max) if max >= d => Err(Error::InvalidGroup(format!(
                "index {max} out of range for d = {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// `{0,…,d−1} \ self`. An involution: `g.complement(d)?.complement(d)? == g`.
    pub fn complement(&self, d: usize) -> Result<FactorGroup> {
        self.validate_for(d)?;
        Ok(FactorGroup {
            members: (0..d).filter(|&i| !self.contains(i)).collect(),
        })
    }

    /// Report label, 1-based to match the conventional x1..xd naming:
    /// `x1`, `x1+x3`, or `empty`.
    pub fn label(&self) -> String {
        if self.members.is_empty() {
            "empty".to_string()
        } else {
            self.members
                .iter()
                .map(|i| format!("x{}", i + 1))
                .collect::<Vec<_>>()
                .join("+")
        }
    }
}

impl std::fmt::Display for FactorGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl TryFrom<Vec<usize>> for FactorGroup {
    type Error = Error;
    fn try_from(members: Vec<usize>) -> Result<Self> {
        FactorGroup::new(members)
    }
}

impl From<FactorGroup> for Vec<usize> {
    fn from(g: FactorGroup) -> Vec<usize> {
        g.members
    }
}

/// Sampling strategy: `current` evaluates (A, B, A_u) per group, `ia`
/// additionally evaluates B_u and feeds the symmetric estimator pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Current,
    Ia,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Current => "current",
            Strategy::Ia => "ia",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "current" => Ok(Strategy::Current),
            "ia" => Ok(Strategy::Ia),
            other => Err(Error::InvalidConfig(format!(
                "unknown strategy '{other}' (expected current or ia)"
            ))),
        }
    }
}

/// First- or total-order index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexKind {
    First,
    Total,
}

impl IndexKind {
    pub fn label(self) -> &'static str {
        match self {
            IndexKind::First => "first",
            IndexKind::Total => "total",
        }
    }
}

/// Deterministic scalar model over a factor space.
///
/// Purity is part of the contract: the same input point must produce a
/// bit-identical output, or pick-freeze alignment breaks. Implementations
/// must also tolerate concurrent calls.
pub trait Model: Sync + Send {
    fn space(&self) -> &FactorSpace;
    fn eval(&self, x: &[f64]) -> Result<f64>;
}

/// Model-call cost of estimating indices for `n_groups` groups at base
/// sample size `n`: the current strategy needs `n*(2 + n_groups)` calls,
/// the symmetric strategy `n*(2 + 2*n_groups)`. With one singleton group
/// per factor these are the familiar `n(d+2)` and `2n(d+1)`.
pub fn call_budget(strategy: Strategy, n: usize, n_groups: usize) -> usize {
    match strategy {
        Strategy::Current => n * (2 + n_groups),
        Strategy::Ia => n * (2 + 2 * n_groups),
    }
}

/// The four aligned output samples of one pick-freeze design for one group.
///
/// Index k shares the same underlying `(u_k^A, v_k^A, u_k^B, v_k^B)` draws
/// across all sequences. `y_bu` is absent when the block was produced under
/// the current strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeBlock {
    group: FactorGroup,
    y_a: Vec<f64>,
    y_b: Vec<f64>,
    y_au: Vec<f64>,
    y_bu: Option<Vec<f64>>,
}

impl PickFreezeBlock {
    /// Block for the current strategy: `(y_A, y_B, y_Au)`.
    pub fn current(
        group: FactorGroup,
        y_a: Vec<f64>,
        y_b: Vec<f64>,
        y_au: Vec<f64>,
    ) -> Result<Self> {
        Self::validate(&y_a, &y_b, &y_au, None)?;
        Ok(Self {
            group,
            y_a,
            y_b,
            y_au,
            y_bu: None,
        })
    }

    /// Block for the symmetric strategy: all four samples.
    pub fn symmetric(
        group: FactorGroup,
        y_a: Vec<f64>,
        y_b: Vec<f64>,
        y_au: Vec<f64>,
        y_bu: Vec<f64>,
    ) -> Result<Self> {
        Self::validate(&y_a, &y_b, &y_au, Some(&y_bu))?;
        Ok(Self {
            group,
            y_a,
            y_b,
            y_au,
            y_bu: Some(y_bu),
        })
    }

    fn validate(y_a: &[f64], y_b: &[f64], y_au: &[f64], y_bu: Option<&[f64]>) -> Result<()> {
        let n = y_a.len();
        if n < 2 {
            return Err(Error::InsufficientSample { n, needed: 2 });
        }
        let mut lens = vec![y_b.len(), y_au.len()];
        if let Some(bu) = y_bu {
            lens.push(bu.len());
        }
        if lens.iter().any(|&l| l != n) {
            return Err(Error::ShapeMismatch(format!(
                "pick-freeze sequences must share one length, got y_a = {n}, others = {lens:?}"
            )));
        }
        Ok(())
    }

    pub fn group(&self) -> &FactorGroup {
        &self.group
    }

    pub fn n(&self) -> usize {
        self.y_a.len()
    }

    pub fn y_a(&self) -> &[f64] {
        &self.y_a
    }

    pub fn y_b(&self) -> &[f64] {
        &self.y_b
    }

    pub fn y_au(&self) -> &[f64] {
        &self.y_au
    }

    pub fn y_bu(&self) -> Option<&[f64]> {
        self.y_bu.as_deref()
    }

    pub fn has_symmetric(&self) -> bool {
        self.y_bu.is_some()
    }

    /// Swap `y_Au` and `y_Bu`, keeping `y_A`/`y_B` in place. Because
    /// `A_v = B_u` and `B_v = A_u`, the result is the block the same design
    /// would have produced for the complement group.
    pub fn swapped_mixed(&self) -> Result<Self> {
        let y_bu = self.y_bu.clone().ok_or_else(|| {
            Error::ShapeMismatch(
                "swapped_mixed needs y_bu; the block was built under the current strategy".into(),
            )
        })?;
        Ok(Self {
            group: self.group.clone(),
            y_a: self.y_a.clone(),
            y_b: self.y_b.clone(),
            y_au: y_bu,
            y_bu: Some(self.y_au.clone()),
        })
    }
}

/// One estimated index with its plug-in asymptotic variance and the
/// model-call cost of the design that produced it. Values are reported
/// unclamped by default; sampling noise can push them outside [0,1].
#[derive(Debug, Clone)]
pub struct SobolEstimate {
    pub group: FactorGroup,
    pub estimator: EstimatorKind,
    pub value: f64,
    pub asym_variance: Option<f64>,
    pub n: usize,
    pub model_calls: usize,
}

/// Which strategies an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyChoice {
    Current,
    Ia,
    Both,
}

impl StrategyChoice {
    /// Strategies in fixed execution (and report) order.
    pub fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyChoice::Current => vec![Strategy::Current],
            StrategyChoice::Ia => vec![Strategy::Ia],
            StrategyChoice::Both => vec![Strategy::Current, Strategy::Ia],
        }
    }
}

impl std::str::FromStr for StrategyChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "current" => Ok(StrategyChoice::Current),
            "ia" => Ok(StrategyChoice::Ia),
            "both" => Ok(StrategyChoice::Both),
            other => Err(Error::InvalidConfig(format!(
                "unknown strategy '{other}' (expected current, ia or both)"
            ))),
        }
    }
}

/// Full description of a (replicated) estimation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub strategy: StrategyChoice,
    pub sampler: SamplerKind,
    /// Base sample size N. In budget-matched mode the current strategy runs
    /// at 2N so both strategies spend comparable model calls.
    pub n: usize,
    /// Groups to analyze; `None` means one singleton group per factor.
    #[serde(default)]
    pub groups: Option<Vec<FactorGroup>>,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub budget_matched: bool,
    #[serde(default)]
    pub clamp: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "sample size n = {} must be at least 2",
                self.n
            )));
        }
        if self.replicates < 1 {
            return Err(Error::InvalidConfig(
                "at least one replicate is required".into(),
            ));
        }
        self.model.validate()?;
        if let Some(groups) = &self.groups {
            let d = self.model.d();
            for g in groups {
                g.validate_for(d)?;
            }
        }
        Ok(())
    }

    pub fn resolved_groups(&self, d: usize) -> Result<Vec<FactorGroup>> {
        match &self.groups {
            Some(groups) => {
                for g in groups {
                    g.validate_for(d)?;
                }
                Ok(groups.clone())
            }
            None => Ok(FactorGroup::singletons(d)),
        }
    }

    /// Actual sample size for one strategy under this config.
    pub fn resolved_n(&self, strategy: Strategy) -> usize {
        if self.budget_matched && strategy == Strategy::Current {
            2 * self.n
        } else {
            self.n
        }
    }

    /// Config equality ignoring the strategy choice; used to decide whether
    /// two replicate tables are comparable.
    pub fn comparable_with(&self, other: &ExperimentConfig) -> bool {
        self.model == other.model
            && self.sampler == other.sampler
            && self.n == other.n
            && self.groups == other.groups
            && self.replicates == other.replicates
            && self.budget_matched == other.budget_matched
            && self.clamp == other.clamp
    }
}
