//! Estimators for first- and total-order Sobol' indices on pick-freeze
//! blocks, plus plug-in estimates of their asymptotic variances.
//!
//! Two estimator pairs are implemented:
//!
//! * the *current* pair, consuming `(y_A, y_B, y_Au)`:
//!   - Saltelli first-order: `S = 2 sum y_A (y_Au - y_B) / sum (y_A - y_B)^2`
//!   - Sobol-Jansen total:   `ST = sum (y_Au - y_B)^2 / sum (y_A - y_B)^2`
//! * the *symmetric* (IA) pair, consuming all four samples, with shared
//!   denominator `D = sum (y_A - y_B)^2 + (y_Au - y_Bu)^2`:
//!   - total: `ST = [sum (y_B - y_Au)^2 + (y_A - y_Bu)^2] / D`
//!   - first: `S  = 2 sum (y_Au - y_B)(y_A - y_Bu) / D`
//!
//! The symmetric pair satisfies, on every finite sample,
//!
//! ```text
//! ST - S = sum (y_B - y_Au + y_A - y_Bu)^2 / D >= 0
//! ```
//!
//! with equality exactly when the model is additive in the group, which no
//! analogous identity guarantees for the current pair. The formulas are
//! also invariant under swapping the A and B superscripts, and (except for
//! the Saltelli first-order) under adding a constant to the model output.
//!
//! Plug-in asymptotic variances replace the population quantities in the
//! delta-method variances with their sample estimates:
//!
//! ```text
//! current: var_k[row_k] / (4 N V^2)      symmetric: var_k[row_k] / (16 N V^2)
//! ```
//!
//! where `row_k` is the estimator's numerator row minus the point estimate
//! times its denominator row, and `var_k` uses the unbiased (N-1) divisor.
//!
//! All sums are accumulated pairwise, so results are reproducible and keep
//! precision at N in the millions.

use crate::core::{IndexKind, PickFreezeBlock, Strategy};
use crate::error::{Error, Result};

/// One of the four point estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Saltelli first-order (current strategy).
    SsFirst,
    /// Sobol-Jansen total-order (current strategy).
    SjTotal,
    /// Symmetric first-order.
    IaFirst,
    /// Symmetric total-order.
    IaTotal,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::SsFirst,
        EstimatorKind::SjTotal,
        EstimatorKind::IaFirst,
        EstimatorKind::IaTotal,
    ];

    /// The estimator pair a strategy produces, first-order first.
    pub fn for_strategy(strategy: Strategy) -> [EstimatorKind; 2] {
        match strategy {
            Strategy::Current => [EstimatorKind::SsFirst, EstimatorKind::SjTotal],
            Strategy::Ia => [EstimatorKind::IaFirst, EstimatorKind::IaTotal],
        }
    }

    pub fn strategy(self) -> Strategy {
        match self {
            EstimatorKind::SsFirst | EstimatorKind::SjTotal => Strategy::Current,
            EstimatorKind::IaFirst | EstimatorKind::IaTotal => Strategy::Ia,
        }
    }

    pub fn index_kind(self) -> IndexKind {
        match self {
            EstimatorKind::SsFirst | EstimatorKind::IaFirst => IndexKind::First,
            EstimatorKind::SjTotal | EstimatorKind::IaTotal => IndexKind::Total,
        }
    }

    /// Family label used in reports: SS, SJ or IA.
    pub fn family(self) -> &'static str {
        match self {
            EstimatorKind::SsFirst => "SS",
            EstimatorKind::SjTotal => "SJ",
            EstimatorKind::IaFirst | EstimatorKind::IaTotal => "IA",
        }
    }
}

/// Pairwise (cascade) summation with a fixed split pattern; deterministic
/// for a given slice and accurate enough for variance ratios at N = 2^20.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance (N-1 divisor), two-pass.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    debug_assert!(xs.len() >= 2);
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

fn sum_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .collect();
    pairwise_sum(&terms)
}

/// Strictly positive and not NaN.
fn positive(x: f64) -> bool {
    x > 0.0
}

fn degenerate(block: &PickFreezeBlock, detail: &str) -> Error {
    Error::DegenerateSample {
        group: block.group().label(),
        detail: detail.to_string(),
    }
}

fn require_symmetric<'a>(block: &'a PickFreezeBlock, who: &str) -> Result<&'a [f64]> {
    block.y_bu().ok_or_else(|| {
        Error::ShapeMismatch(format!(
            "{who} needs y_Bu, but the block was built under the current strategy"
        ))
    })
}

/// Shared denominator of the symmetric pair: `sum (y_A - y_B)^2 + (y_Au - y_Bu)^2`.
fn symmetric_denominator(block: &PickFreezeBlock, y_bu: &[f64]) -> f64 {
    let terms: Vec<f64> = block
        .y_a()
        .iter()
        .zip(block.y_b())
        .zip(block.y_au().iter().zip(y_bu))
        .map(|((&a, &b), (&au, &bu))| (a - b) * (a - b) + (au - bu) * (au - bu))
        .collect();
    pairwise_sum(&terms)
}

/// Saltelli first-order estimator:
/// `2 sum y_A (y_Au - y_B) / sum (y_A - y_B)^2`.
///
/// Not shift-invariant: a large constant offset in the model output leaks
/// into the numerator through the bare `y_A` factor.
pub fn s_first_saltelli(block: &PickFreezeBlock) -> Result<f64> {
    let den = sum_sq_diff(block.y_a(), block.y_b());
    if !positive(den) {
        return Err(degenerate(block, "sum of squared (y_A - y_B) is zero"));
    }
    let terms: Vec<f64> = block
        .y_a()
        .iter()
        .zip(block.y_au())
        .zip(block.y_b())
        .map(|((&a, &au), &b)| a * (au - b))
        .collect();
    Ok(2.0 * pairwise_sum(&terms) / den)
}

/// Sobol-Jansen total-order estimator:
/// `sum (y_Au - y_B)^2 / sum (y_A - y_B)^2`.
pub fn st_total_jansen(block: &PickFreezeBlock) -> Result<f64> {
    let den = sum_sq_diff(block.y_a(), block.y_b());
    if !positive(den) {
        return Err(degenerate(block, "sum of squared (y_A - y_B) is zero"));
    }
    Ok(sum_sq_diff(block.y_au(), block.y_b()) / den)
}

/// Symmetric total-order estimator:
/// `[sum (y_B - y_Au)^2 + (y_A - y_Bu)^2] / [sum (y_A - y_B)^2 + (y_Au - y_Bu)^2]`.
pub fn st_total_ia(block: &PickFreezeBlock) -> Result<f64> {
    let y_bu = require_symmetric(block, "st_total_ia")?;
    let den = symmetric_denominator(block, y_bu);
    if !positive(den) {
        return Err(degenerate(block, "symmetric denominator is zero"));
    }
    let terms: Vec<f64> = block
        .y_a()
        .iter()
        .zip(block.y_b())
        .zip(block.y_au().iter().zip(y_bu))
        .map(|((&a, &b), (&au, &bu))| (b - au) * (b - au) + (a - bu) * (a - bu))
        .collect();
    Ok(pairwise_sum(&terms) / den)
}

/// Symmetric first-order estimator:
/// `2 sum (y_Au - y_B)(y_A - y_Bu) / [sum (y_A - y_B)^2 + (y_Au - y_Bu)^2]`.
///
/// Equals `1 - st_total_ia(block.swapped_mixed())`: swapping the mixed
/// samples turns the block into the complement group's block.
pub fn s_first_ia(block: &PickFreezeBlock) -> Result<f64> {
    let y_bu = require_symmetric(block, "s_first_ia")?;
    let den = symmetric_denominator(block, y_bu);
    if !positive(den) {
        return Err(degenerate(block, "symmetric denominator is zero"));
    }
    let terms: Vec<f64> = block
        .y_a()
        .iter()
        .zip(block.y_b())
        .zip(block.y_au().iter().zip(y_bu))
        .map(|((&a, &b), (&au, &bu))| (au - b) * (a - bu))
        .collect();
    Ok(2.0 * pairwise_sum(&terms) / den)
}

/// Dispatch to the point estimator for `kind`.
pub fn point_estimate(kind: EstimatorKind, block: &PickFreezeBlock) -> Result<f64> {
    match kind {
        EstimatorKind::SsFirst => s_first_saltelli(block),
        EstimatorKind::SjTotal => st_total_jansen(block),
        EstimatorKind::IaFirst => s_first_ia(block),
        EstimatorKind::IaTotal => st_total_ia(block),
    }
}

/// Consistent estimate of the total output variance V(y) from a block:
/// `sum (y_A - y_B)^2 / 2N` for the current strategy, and the average of
/// that with the `(y_Au - y_Bu)` version, `[...]/4N`, for the symmetric
/// one. May legitimately return 0 (constant model); the caller decides.
pub fn variance_normalizer(block: &PickFreezeBlock, strategy: Strategy) -> Result<f64> {
    let n = block.n() as f64;
    match strategy {
        Strategy::Current => Ok(sum_sq_diff(block.y_a(), block.y_b()) / (2.0 * n)),
        Strategy::Ia => {
            let y_bu = require_symmetric(block, "variance_normalizer")?;
            Ok(
                (sum_sq_diff(block.y_a(), block.y_b()) + sum_sq_diff(block.y_au(), y_bu))
                    / (4.0 * n),
            )
        }
    }
}

/// Plug-in asymptotic variance of one estimator, given its point estimate
/// and a total-variance estimate `v_hat` (see [`variance_normalizer`]).
///
/// The per-row quantity is the estimator's numerator row minus the point
/// estimate times its denominator row; its empirical variance is divided
/// by `4 N v_hat^2` (current pair) or `16 N v_hat^2` (symmetric pair).
pub fn asymptotic_variance(
    kind: EstimatorKind,
    block: &PickFreezeBlock,
    point_estimate: f64,
    v_hat: f64,
) -> Result<f64> {
    if block.n() < 2 {
        return Err(Error::InsufficientSample {
            n: block.n(),
            needed: 2,
        });
    }
    if !positive(v_hat) {
        return Err(degenerate(block, "total-variance estimate is not positive"));
    }
    let rows: Vec<f64> = match kind {
        EstimatorKind::SsFirst => block
            .y_a()
            .iter()
            .zip(block.y_b())
            .zip(block.y_au())
            .map(|((&a, &b), &au)| 2.0 * a * (au - b) - point_estimate * (a - b) * (a - b))
            .collect(),
        EstimatorKind::SjTotal => block
            .y_a()
            .iter()
            .zip(block.y_b())
            .zip(block.y_au())
            .map(|((&a, &b), &au)| (au - b) * (au - b) - point_estimate * (a - b) * (a - b))
            .collect(),
        EstimatorKind::IaFirst => {
            let y_bu = require_symmetric(block, "asymptotic_variance")?;
            block
                .y_a()
                .iter()
                .zip(block.y_b())
                .zip(block.y_au().iter().zip(y_bu))
                .map(|((&a, &b), (&au, &bu))| {
                    2.0 * (a - bu) * (au - b)
                        - point_estimate * ((a - b) * (a - b) + (au - bu) * (au - bu))
                })
                .collect()
        }
        EstimatorKind::IaTotal => {
            let y_bu = require_symmetric(block, "asymptotic_variance")?;
            block
                .y_a()
                .iter()
                .zip(block.y_b())
                .zip(block.y_au().iter().zip(y_bu))
                .map(|((&a, &b), (&au, &bu))| {
                    (a - bu) * (a - bu) + (b - au) * (b - au)
                        - point_estimate * ((a - b) * (a - b) + (au - bu) * (au - bu))
                })
                .collect()
        }
    };
    let n = block.n() as f64;
    let scale = match kind.strategy() {
        Strategy::Current => 4.0 * n * v_hat * v_hat,
        Strategy::Ia => 16.0 * n * v_hat * v_hat,
    };
    Ok(sample_variance(&rows) / scale)
}

/// Both estimates of one strategy on one block, each with its plug-in
/// asymptotic variance. The pipeline is fixed for reproducibility: the
/// total-variance normalizer once per block, then per estimator the point
/// estimate and its variance plug-in.
pub fn estimate_with_variance(
    block: &PickFreezeBlock,
    strategy: Strategy,
) -> Result<Vec<(EstimatorKind, f64, f64)>> {
    let v_hat = variance_normalizer(block, strategy)?;
    if !positive(v_hat) {
        return Err(degenerate(block, "total-variance estimate is not positive"));
    }
    EstimatorKind::for_strategy(strategy)
        .into_iter()
        .map(|kind| {
            let value = point_estimate(kind, block)?;
            let av = asymptotic_variance(kind, block, value, v_hat)?;
            Ok((kind, value, av))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{FactorGroup, Strategy};
    use proptest::prelude::*;

    fn rel_close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
    }

    /// The worked block used throughout: every estimator value is a small
    /// exact fraction.
    fn hand_block() -> PickFreezeBlock {
        PickFreezeBlock::symmetric(
            FactorGroup::singleton(0),
            vec![1.0, 2.0],
            vec![3.0, 0.0],
            vec![2.0, 1.0],
            vec![0.0, 4.0],
        )
        .unwrap()
    }

    fn random_block(seed: u64, n: usize, scale: f64) -> PickFreezeBlock {
        use rand::Rng;
        let mut rng = crate::sampling::stream_rng(seed, "block", 0, crate::sampling::MatrixTag::A);
        let mut draw = |_: usize| -> Vec<f64> {
            (0..n).map(|_| (rng.random::<f64>() - 0.5) * scale).collect()
        };
        PickFreezeBlock::symmetric(
            FactorGroup::singleton(0),
            draw(0),
            draw(1),
            draw(2),
            draw(3),
        )
        .unwrap()
    }

    // ------------------------------------------------------------------
    // Hand-evaluated values
    // ------------------------------------------------------------------

    #[test]
    fn hand_block_values() {
        let block = hand_block();
        assert!(rel_close(s_first_saltelli(&block).unwrap(), 0.25, 1e-15));
        assert!(rel_close(st_total_jansen(&block).unwrap(), 0.25, 1e-15));
        assert!(rel_close(st_total_ia(&block).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(rel_close(s_first_ia(&block).unwrap(), -2.0 / 7.0, 1e-15));
    }

    #[test]
    fn variance_normalizer_hand_value() {
        let block = hand_block();
        assert_eq!(
            variance_normalizer(&block, Strategy::Current).unwrap(),
            2.0
        );
        // Symmetric route: (8 + 13) / (4 * 2) = 21/8.
        assert_eq!(
            variance_normalizer(&block, Strategy::Ia).unwrap(),
            21.0 / 8.0
        );
    }

    // ------------------------------------------------------------------
    // Degenerate groups: empty and full
    // ------------------------------------------------------------------

    #[test]
    fn empty_group_estimates_are_exactly_zero() {
        // u empty: y_Au == y_B and y_Bu == y_A element for element.
        let y_a = vec![1.5, -0.25, 3.0];
        let y_b = vec![0.5, 2.0, -1.0];
        let block = PickFreezeBlock::symmetric(
            FactorGroup::empty(),
            y_a.clone(),
            y_b.clone(),
            y_b.clone(),
            y_a.clone(),
        )
        .unwrap();
        assert_eq!(s_first_saltelli(&block).unwrap(), 0.0);
        assert_eq!(st_total_jansen(&block).unwrap(), 0.0);
        assert_eq!(st_total_ia(&block).unwrap(), 0.0);
        assert_eq!(s_first_ia(&block).unwrap(), 0.0);
    }

    #[test]
    fn full_group_totals_are_exactly_one() {
        // u full: y_Au == y_A and y_Bu == y_B.
        let y_a = vec![1.5, -0.25, 3.0];
        let y_b = vec![0.5, 2.0, -1.0];
        let block = PickFreezeBlock::symmetric(
            FactorGroup::full(1),
            y_a.clone(),
            y_b.clone(),
            y_a.clone(),
            y_b.clone(),
        )
        .unwrap();
        assert_eq!(st_total_jansen(&block).unwrap(), 1.0);
        assert_eq!(st_total_ia(&block).unwrap(), 1.0);
        assert_eq!(s_first_ia(&block).unwrap(), 1.0);
    }

    // ------------------------------------------------------------------
    // Error paths
    // ------------------------------------------------------------------

    #[test]
    fn constant_outputs_are_degenerate() {
        let block = PickFreezeBlock::symmetric(
            FactorGroup::singleton(0),
            vec![2.0; 4],
            vec![2.0; 4],
            vec![2.0; 4],
            vec![2.0; 4],
        )
        .unwrap();
        for kind in EstimatorKind::ALL {
            assert!(point_estimate(kind, &block).unwrap_err().is_degenerate());
        }
        assert_eq!(variance_normalizer(&block, Strategy::Ia).unwrap(), 0.0);
        assert!(asymptotic_variance(EstimatorKind::SjTotal, &block, 0.0, 0.0)
            .unwrap_err()
            .is_degenerate());
    }

    #[test]
    fn symmetric_estimators_require_y_bu() {
        let block = PickFreezeBlock::current(
            FactorGroup::singleton(0),
            vec![1.0, 2.0],
            vec![3.0, 0.0],
            vec![2.0, 1.0],
        )
        .unwrap();
        assert!(matches!(st_total_ia(&block), Err(Error::ShapeMismatch(_))));
        assert!(matches!(s_first_ia(&block), Err(Error::ShapeMismatch(_))));
        // The current pair still works on such a block.
        assert!(s_first_saltelli(&block).is_ok());
    }

    // ------------------------------------------------------------------
    // Plug-in variances
    // ------------------------------------------------------------------

    #[test]
    fn sj_variance_vanishes_for_empty_group() {
        // u empty and ST = 0: the per-row quantity is identically zero.
        let y_a = vec![1.5, -0.25, 3.0];
        let y_b = vec![0.5, 2.0, -1.0];
        let block =
            PickFreezeBlock::current(FactorGroup::empty(), y_a, y_b.clone(), y_b).unwrap();
        let st = st_total_jansen(&block).unwrap();
        let v_hat = variance_normalizer(&block, Strategy::Current).unwrap();
        assert_eq!(
            asymptotic_variance(EstimatorKind::SjTotal, &block, st, v_hat).unwrap(),
            0.0
        );
    }

    #[test]
    fn plugin_variances_are_nonnegative_and_finite() {
        for seed in 0..20 {
            let block = random_block(seed, 64, 4.0);
            for strategy in [Strategy::Current, Strategy::Ia] {
                for (_, _, av) in estimate_with_variance(&block, strategy).unwrap() {
                    assert!(av.is_finite() && av >= 0.0);
                }
            }
        }
    }

    // ------------------------------------------------------------------
    // Ordering: guaranteed for the symmetric pair, not for the current one
    // ------------------------------------------------------------------

    #[test]
    fn current_pair_can_invert_the_ordering() {
        // Large positive y_A with a small positive y_Au - y_B drives the
        // Saltelli numerator far above the Jansen one.
        let block = PickFreezeBlock::current(
            FactorGroup::singleton(0),
            vec![10.0, 10.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let s = s_first_saltelli(&block).unwrap();
        let st = st_total_jansen(&block).unwrap();
        assert!(
            st < s,
            "expected an ordering violation, got S = {s}, ST = {st}"
        );
    }

    #[test]
    fn difference_identity_on_hand_block() {
        let block = hand_block();
        let st = st_total_ia(&block).unwrap();
        let s = s_first_ia(&block).unwrap();
        assert!(rel_close(st - s, 13.0 / 21.0, 1e-15));
    }

    // ------------------------------------------------------------------
    // Brute-force oracle: naive arithmetic on tiny blocks
    // ------------------------------------------------------------------

    mod naive {
        pub fn ss(a: &[f64], b: &[f64], au: &[f64]) -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..a.len() {
                num += a[k] * (au[k] - b[k]);
                den += (a[k] - b[k]).powi(2);
            }
            2.0 * num / den
        }

        pub fn sj(a: &[f64], b: &[f64], au: &[f64]) -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..a.len() {
                num += (au[k] - b[k]).powi(2);
                den += (a[k] - b[k]).powi(2);
            }
            num / den
        }

        pub fn ia_total(a: &[f64], b: &[f64], au: &[f64], bu: &[f64]) -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..a.len() {
                num += (b[k] - au[k]).powi(2) + (a[k] - bu[k]).powi(2);
                den += (a[k] - b[k]).powi(2) + (au[k] - bu[k]).powi(2);
            }
            num / den
        }

        pub fn ia_first(a: &[f64], b: &[f64], au: &[f64], bu: &[f64]) -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..a.len() {
                num += (au[k] - b[k]) * (a[k] - bu[k]);
                den += (a[k] - b[k]).powi(2) + (au[k] - bu[k]).powi(2);
            }
            2.0 * num / den
        }
    }

    proptest! {
        #[test]
        fn estimators_match_naive_arithmetic_on_tiny_blocks(
            n in 2usize..=4,
            seed in any::<u64>(),
        ) {
            let block = random_block(seed, n, 10.0);
            let (a, b, au) = (block.y_a(), block.y_b(), block.y_au());
            let bu = block.y_bu().unwrap();
            prop_assert!(rel_close(s_first_saltelli(&block).unwrap(), naive::ss(a, b, au), 1e-15));
            prop_assert!(rel_close(st_total_jansen(&block).unwrap(), naive::sj(a, b, au), 1e-15));
            prop_assert!(rel_close(st_total_ia(&block).unwrap(), naive::ia_total(a, b, au, bu), 1e-15));
            prop_assert!(rel_close(s_first_ia(&block).unwrap(), naive::ia_first(a, b, au, bu), 1e-15));
        }

        #[test]
        fn symmetric_ordering_and_difference_identity(seed in any::<u64>(), n in 2usize..128) {
            let block = random_block(seed, n, 6.0);
            let st = st_total_ia(&block).unwrap();
            let s = s_first_ia(&block).unwrap();
            prop_assert!(st - s >= -1e-12, "ordering violated: ST = {st}, S = {s}");

            // Closed form of the difference.
            let den: f64 = block.y_a().iter().zip(block.y_b())
                .zip(block.y_au().iter().zip(block.y_bu().unwrap()))
                .map(|((&a, &b), (&au, &bu))| (a - b) * (a - b) + (au - bu) * (au - bu))
                .sum();
            let num: f64 = block.y_a().iter().zip(block.y_b())
                .zip(block.y_au().iter().zip(block.y_bu().unwrap()))
                .map(|((&a, &b), (&au, &bu))| {
                    let t = b - au + a - bu;
                    t * t
                })
                .sum();
            prop_assert!(rel_close(st - s, num / den, 1e-12));
        }

        #[test]
        fn swapping_a_and_b_leaves_symmetric_estimators_unchanged(seed in any::<u64>(), n in 2usize..64) {
            let block = random_block(seed, n, 3.0);
            let swapped = PickFreezeBlock::symmetric(
                block.group().clone(),
                block.y_b().to_vec(),
                block.y_a().to_vec(),
                block.y_bu().unwrap().to_vec(),
                block.y_au().to_vec(),
            ).unwrap();
            let tol = 1e-14;
            prop_assert!(rel_close(st_total_ia(&block).unwrap(), st_total_ia(&swapped).unwrap(), tol));
            prop_assert!(rel_close(s_first_ia(&block).unwrap(), s_first_ia(&swapped).unwrap(), tol));
        }

        #[test]
        fn complement_identity(seed in any::<u64>(), n in 2usize..64) {
            // S_u + ST_v = 1 on every sample, with the complement block
            // obtained by swapping the mixed samples.
            let block = random_block(seed, n, 3.0);
            let s_u = s_first_ia(&block).unwrap();
            let st_v = st_total_ia(&block.swapped_mixed().unwrap()).unwrap();
            prop_assert!(rel_close(s_u + st_v, 1.0, 1e-12));
        }

        #[test]
        fn shift_invariance_of_difference_based_estimators(
            seed in any::<u64>(),
            n in 2usize..64,
            shift in -1e6f64..1e6,
        ) {
            let block = random_block(seed, n, 5.0);
            let shifted = PickFreezeBlock::symmetric(
                block.group().clone(),
                block.y_a().iter().map(|y| y + shift).collect(),
                block.y_b().iter().map(|y| y + shift).collect(),
                block.y_au().iter().map(|y| y + shift).collect(),
                block.y_bu().unwrap().iter().map(|y| y + shift).collect(),
            ).unwrap();
            let tol = 1e-9;
            prop_assert!(rel_close(st_total_jansen(&block).unwrap(), st_total_jansen(&shifted).unwrap(), tol));
            prop_assert!(rel_close(st_total_ia(&block).unwrap(), st_total_ia(&shifted).unwrap(), tol));
            prop_assert!(rel_close(s_first_ia(&block).unwrap(), s_first_ia(&shifted).unwrap(), tol));
        }
    }

    #[test]
    fn saltelli_first_is_not_shift_invariant() {
        let block = random_block(17, 32, 5.0);
        let shift = 1000.0;
        let shifted = PickFreezeBlock::symmetric(
            block.group().clone(),
            block.y_a().iter().map(|y| y + shift).collect(),
            block.y_b().iter().map(|y| y + shift).collect(),
            block.y_au().iter().map(|y| y + shift).collect(),
            block.y_bu().unwrap().iter().map(|y| y + shift).collect(),
        )
        .unwrap();
        let before = s_first_saltelli(&block).unwrap();
        let after = s_first_saltelli(&shifted).unwrap();
        assert!(
            (before - after).abs() > 1e-6,
            "expected a visible shift effect, got {before} vs {after}"
        );
    }

    // ------------------------------------------------------------------
    // Summation helpers
    // ------------------------------------------------------------------

    #[test]
    fn pairwise_sum_matches_exact_integer_sums() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[4.5]), 4.5);
    }

    #[test]
    fn sample_variance_hand_value() {
        assert!((sample_variance(&[0.2, 0.4]) - 0.02).abs() < 1e-16);
    }
}
