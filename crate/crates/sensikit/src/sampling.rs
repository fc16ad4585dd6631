//! Seeded sampling streams, uniform and Latin hypercube matrices on the
//! unit hypercube, and pick-freeze design construction and evaluation.
//!
//! # Seed discipline
//!
//! Every random stream is keyed by `(master seed, purpose, replicate,
//! matrix)`, hashed into a ChaCha12 key. Any matrix of any replicate can
//! therefore be regenerated on its own, and results never depend on
//! execution order or parallelism. The A and B matrices of a design come
//! from distinct streams and are statistically independent.
//!
//! # Mixed matrices
//!
//! A design stores only A and B. The hybrids `A_u` (group-u columns from A,
//! the rest from B) and `B_u` (the converse) are materialized one group at
//! a time during evaluation, keeping memory at O(n*d) instead of
//! O(n*d*groups).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::core::{call_budget, FactorGroup, Model, PickFreezeBlock, Strategy};
use crate::error::{Error, Result};

/// Plain Monte Carlo or Latin hypercube sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Mc,
    Lhs,
}

impl SamplerKind {
    pub fn label(self) -> &'static str {
        match self {
            SamplerKind::Mc => "mc",
            SamplerKind::Lhs => "lhs",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(SamplerKind::Mc),
            "lhs" => Ok(SamplerKind::Lhs),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampler '{other}' (expected mc or lhs)"
            ))),
        }
    }
}

/// Which base matrix a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixTag {
    A,
    B,
}

impl MatrixTag {
    fn byte(self) -> u8 {
        match self {
            MatrixTag::A => 0,
            MatrixTag::B => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MatrixTag::A => "A",
            MatrixTag::B => "B",
        }
    }
}

/// Derive the RNG for one `(master seed, purpose, replicate, matrix)`
/// stream. The key is a SHA-256 hash of the tuple, so streams are
/// independent and stable across platforms.
pub fn stream_rng(master_seed: u64, purpose: &str, replicate: u64, matrix: MatrixTag) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"sensikit.stream.v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    hasher.update(replicate.to_le_bytes());
    hasher.update([matrix.byte()]);
    ChaCha12Rng::from_seed(hasher.finalize().into())
}

/// An n-by-d matrix of points in the unit hypercube, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.d)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.d + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.d..(row + 1) * self.d]
    }
}

/// n-by-d matrix of i.i.d. uniforms on [0,1). Deterministic given the rng.
pub fn uniform_matrix(n: usize, d: usize, rng: &mut impl Rng) -> SampleMatrix {
    let data = (0..n * d).map(|_| rng.random::<f64>()).collect();
    SampleMatrix { n, d, data }
}

/// Random Latin hypercube: per column, a fresh permutation of the n strata
/// `[i/n, (i+1)/n)` with a uniform jitter inside each stratum. Column
/// permutations are independent of each other. Deterministic given the rng.
pub fn lhs_matrix(n: usize, d: usize, rng: &mut impl Rng) -> SampleMatrix {
    let mut data = vec![0.0; n * d];
    let nf = n as f64;
    for col in 0..d {
        let perm = permutation(n, rng);
        for row in 0..n {
            let k = perm[row] as f64;
            let jitter: f64 = rng.random();
            let mut v = (k + jitter) / nf;
            // Rounding can push v across a stratum edge; nudge it back so
            // floor(n*v) == perm[row] holds exactly.
            while v * nf >= k + 1.0 {
                v = f64::from_bits(v.to_bits() - 1);
            }
            while v * nf < k {
                v = f64::from_bits(v.to_bits() + 1);
            }
            data[row * d + col] = v;
        }
    }
    SampleMatrix { n, d, data }
}

/// Fisher-Yates permutation of 0..n.
fn permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Column mix: group columns from `a`, all others from `b`. The full group
/// returns `a`, the empty group returns `b`, and
/// `mix_columns(a, b, g) == mix_columns(b, a, complement(g))`.
pub fn mix_columns(a: &SampleMatrix, b: &SampleMatrix, group: &FactorGroup) -> Result<SampleMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "cannot mix {:?} with {:?}",
            a.shape(),
            b.shape()
        )));
    }
    group.validate_for(a.d())?;
    let mut data = b.data.clone();
    for row in 0..a.n {
        let offset = row * a.d;
        for &col in group.members() {
            data[offset + col] = a.data[offset + col];
        }
    }
    Ok(SampleMatrix {
        n: a.n,
        d: a.d,
        data,
    })
}

/// A pick-freeze design: the two base matrices, the groups to analyze, and
/// the seed provenance needed to regenerate it.
#[derive(Debug, Clone)]
pub struct Design {
    strategy: Strategy,
    sampler: SamplerKind,
    a: SampleMatrix,
    b: SampleMatrix,
    groups: Vec<FactorGroup>,
    master_seed: u64,
    replicate: u64,
}

impl Design {
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    pub fn a(&self) -> &SampleMatrix {
        &self.a
    }

    pub fn b(&self) -> &SampleMatrix {
        &self.b
    }

    pub fn groups(&self) -> &[FactorGroup] {
        &self.groups
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn d(&self) -> usize {
        self.a.d()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    /// Total model calls `evaluate_design` will spend on this design.
    pub fn call_budget(&self) -> usize {
        call_budget(self.strategy, self.n(), self.groups.len())
    }

    /// Labels of every matrix the strategy evaluates, in evaluation order.
    pub fn required_matrix_labels(&self) -> Vec<String> {
        let mut labels = vec!["A".to_string(), "B".to_string()];
        for g in &self.groups {
            labels.push(format!("A_u[{}]", g.label()));
            if self.strategy == Strategy::Ia {
                labels.push(format!("B_u[{}]", g.label()));
            }
        }
        labels
    }
}

/// Draw the base matrices for one replicate of an experiment. A and B come
/// from independent sub-streams of the master seed; the purpose tag is the
/// strategy label so the two strategies never share draws.
pub fn build_design(
    strategy: Strategy,
    sampler: SamplerKind,
    n: usize,
    d: usize,
    groups: Vec<FactorGroup>,
    master_seed: u64,
    replicate: u64,
) -> Result<Design> {
    if n < 2 {
        return Err(Error::InsufficientSample { n, needed: 2 });
    }
    if d == 0 {
        return Err(Error::InvalidFactorSpace("d must be at least 1".into()));
    }
    for g in &groups {
        g.validate_for(d)?;
    }
    let draw = |matrix: MatrixTag| {
        let mut rng = stream_rng(master_seed, strategy.label(), replicate, matrix);
        match sampler {
            SamplerKind::Mc => uniform_matrix(n, d, &mut rng),
            SamplerKind::Lhs => lhs_matrix(n, d, &mut rng),
        }
    };
    Ok(Design {
        strategy,
        sampler,
        a: draw(MatrixTag::A),
        b: draw(MatrixTag::B),
        groups,
        master_seed,
        replicate,
    })
}

/// Evaluate the model on A, B and every required mixed matrix, returning
/// one aligned block per group. A and B are evaluated once and shared
/// across groups, so exactly `design.call_budget()` calls are made.
pub fn evaluate_design(model: &dyn Model, design: &Design) -> Result<Vec<PickFreezeBlock>> {
    let space = model.space();
    if space.d() != design.d() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} factors but the design has {}",
            space.d(),
            design.d()
        )));
    }

    let y_a = eval_matrix(model, &design.a, "A")?;
    let y_b = eval_matrix(model, &design.b, "B")?;

    let mut blocks = Vec::with_capacity(design.groups.len());
    for group in &design.groups {
        let a_u = mix_columns(&design.a, &design.b, group)?;
        let y_au = eval_matrix(model, &a_u, &format!("A_u[{}]", group.label()))?;
        drop(a_u);
        let block = match design.strategy {
            Strategy::Current => {
                PickFreezeBlock::current(group.clone(), y_a.clone(), y_b.clone(), y_au)?
            }
            Strategy::Ia => {
                let b_u = mix_columns(&design.b, &design.a, group)?;
                let y_bu = eval_matrix(model, &b_u, &format!("B_u[{}]", group.label()))?;
                PickFreezeBlock::symmetric(group.clone(), y_a.clone(), y_b.clone(), y_au, y_bu)?
            }
        };
        blocks.push(block);
    }
    Ok(blocks)
}

fn eval_matrix(model: &dyn Model, matrix: &SampleMatrix, label: &str) -> Result<Vec<f64>> {
    let space = model.space();
    let mut point = Vec::with_capacity(space.d());
    let mut out = Vec::with_capacity(matrix.n());
    for row in 0..matrix.n() {
        space.map_unit_into(matrix.row(row), &mut point);
        let y = model.eval(&point).map_err(|e| Error::ModelEval {
            matrix: label.to_string(),
            row,
            message: e.to_string(),
        })?;
        out.push(y);
    }
    Ok(out)
}
