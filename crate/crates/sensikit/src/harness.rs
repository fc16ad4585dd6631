//! Replication experiments: repeated estimation under fresh seeds,
//! budget-matched strategy comparison, empirical versus plug-in variance
//! analysis, and constant-offset (shift) sensitivity studies.
//!
//! Replicates are independent work units keyed by replicate index, so they
//! run in parallel and still produce identical tables at any thread count.
//! A degenerate replicate (zero denominator) is flagged as skipped rather
//! than aborting the run; the table keeps the evidence.

use rayon::prelude::*;

use crate::core::{
    ExperimentConfig, FactorGroup, IndexKind, Model, SobolEstimate, Strategy,
};
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorKind};
use crate::sampling::{build_design, evaluate_design};

/// One estimator output of one replicate. `estimate` and `asym_variance`
/// are absent exactly when the row is skipped.
#[derive(Debug, Clone)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub group: FactorGroup,
    pub estimator: EstimatorKind,
    pub estimate: Option<f64>,
    pub asym_variance: Option<f64>,
    pub n: usize,
    pub model_calls: usize,
    pub skipped: bool,
}

/// Estimates across independent replicates: the raw material for
/// empirical-variance analysis.
#[derive(Debug, Clone)]
pub struct ReplicateTable {
    pub config: ExperimentConfig,
    pub groups: Vec<FactorGroup>,
    pub rows: Vec<ReplicateRow>,
}

impl ReplicateTable {
    /// Estimator kinds this table carries, in report order.
    pub fn estimator_kinds(&self) -> Vec<EstimatorKind> {
        self.config
            .strategy
            .strategies()
            .into_iter()
            .flat_map(EstimatorKind::for_strategy)
            .collect()
    }

    /// Non-skipped estimates of one cell in replicate order.
    pub fn cell_estimates(&self, group: &FactorGroup, kind: EstimatorKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| !r.skipped && r.estimator == kind && &r.group == group)
            .filter_map(|r| r.estimate)
            .collect()
    }
}

/// Run R independent replicates of the configured experiment. Replicate r
/// draws from streams keyed by r, so permuting execution order cannot
/// change any value. In budget-matched mode the current strategy runs at
/// 2N against the symmetric strategy's N.
pub fn run_replicates(config: &ExperimentConfig) -> Result<ReplicateTable> {
    config.validate()?;
    let model = config.model.build()?;
    let d = model.space().d();
    let groups = config.resolved_groups(d)?;
    let strategies = config.strategy.strategies();

    let per_replicate: Vec<Vec<ReplicateRow>> = (0..config.replicates)
        .into_par_iter()
        .map(|replicate| replicate_rows(config, model.as_ref(), &groups, &strategies, replicate))
        .collect::<Result<_>>()?;

    Ok(ReplicateTable {
        config: config.clone(),
        groups,
        rows: per_replicate.concat(),
    })
}

fn replicate_rows(
    config: &ExperimentConfig,
    model: &dyn Model,
    groups: &[FactorGroup],
    strategies: &[Strategy],
    replicate: usize,
) -> Result<Vec<ReplicateRow>> {
    let mut rows = Vec::with_capacity(strategies.len() * groups.len() * 2);
    for &strategy in strategies {
        let n = config.resolved_n(strategy);
        let design = build_design(
            strategy,
            config.sampler,
            n,
            model.space().d(),
            groups.to_vec(),
            config.master_seed,
            replicate as u64,
        )?;
        let model_calls = design.call_budget();
        let blocks = evaluate_design(model, &design)?;
        for block in &blocks {
            match estimators::estimate_with_variance(block, strategy) {
                Ok(estimates) => {
                    for (kind, value, asym_variance) in estimates {
                        let value = if config.clamp {
                            value.clamp(0.0, 1.0)
                        } else {
                            value
                        };
                        rows.push(ReplicateRow {
                            replicate,
                            group: block.group().clone(),
                            estimator: kind,
                            estimate: Some(value),
                            asym_variance: Some(asym_variance),
                            n,
                            model_calls,
                            skipped: false,
                        });
                    }
                }
                Err(e) if e.is_degenerate() => {
                    for kind in EstimatorKind::for_strategy(strategy) {
                        rows.push(ReplicateRow {
                            replicate,
                            group: block.group().clone(),
                            estimator: kind,
                            estimate: None,
                            asym_variance: None,
                            n,
                            model_calls,
                            skipped: true,
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rows)
}

/// One-shot estimation (replicate stream 0) with strict error propagation:
/// a degenerate sample is an error here, not a skipped row.
pub fn single_estimates(config: &ExperimentConfig) -> Result<Vec<SobolEstimate>> {
    config.validate()?;
    let model = config.model.build()?;
    let d = model.space().d();
    let groups = config.resolved_groups(d)?;

    let mut out = Vec::new();
    for strategy in config.strategy.strategies() {
        let n = config.resolved_n(strategy);
        let design = build_design(
            strategy,
            config.sampler,
            n,
            d,
            groups.clone(),
            config.master_seed,
            0,
        )?;
        let model_calls = design.call_budget();
        for block in evaluate_design(model.as_ref(), &design)? {
            for (kind, value, asym_variance) in
                estimators::estimate_with_variance(&block, strategy)?
            {
                let value = if config.clamp {
                    value.clamp(0.0, 1.0)
                } else {
                    value
                };
                out.push(SobolEstimate {
                    group: block.group().clone(),
                    estimator: kind,
                    value,
                    asym_variance: Some(asym_variance),
                    n,
                    model_calls,
                });
            }
        }
    }
    Ok(out)
}

/// Summary of one (group, estimator) cell across replicates.
#[derive(Debug, Clone)]
pub struct CellStats {
    pub group: FactorGroup,
    pub estimator: EstimatorKind,
    /// Mean estimate; absent when every replicate was skipped.
    pub mean: Option<f64>,
    /// Unbiased replicate variance; absent with fewer than 2 usable rows.
    pub variance: Option<f64>,
    /// Mean of the per-replicate plug-in asymptotic variances.
    pub mean_plugin_variance: Option<f64>,
    pub used: usize,
    pub skipped: usize,
}

/// Per-cell means and unbiased variances over non-skipped replicates,
/// in (group, estimator) report order.
pub fn empirical_stats(table: &ReplicateTable) -> Vec<CellStats> {
    let kinds = table.estimator_kinds();
    let mut cells = Vec::with_capacity(table.groups.len() * kinds.len());
    for group in &table.groups {
        for &kind in &kinds {
            let mut estimates = Vec::new();
            let mut plugins = Vec::new();
            let mut skipped = 0usize;
            for row in &table.rows {
                if row.estimator != kind || &row.group != group {
                    continue;
                }
                if row.skipped {
                    skipped += 1;
                    continue;
                }
                if let Some(e) = row.estimate {
                    estimates.push(e);
                }
                if let Some(v) = row.asym_variance {
                    plugins.push(v);
                }
            }
            cells.push(CellStats {
                group: group.clone(),
                estimator: kind,
                mean: (!estimates.is_empty()).then(|| estimators::mean(&estimates)),
                variance: (estimates.len() >= 2).then(|| estimators::sample_variance(&estimates)),
                mean_plugin_variance: (!plugins.is_empty()).then(|| estimators::mean(&plugins)),
                used: estimates.len(),
                skipped,
            });
        }
    }
    cells
}

/// One (group, index-kind) pairing of two tables' variances.
#[derive(Debug, Clone)]
pub struct ComparisonCell {
    pub group: FactorGroup,
    pub kind: IndexKind,
    /// Closed-form index value when the model provides one and the group is
    /// a singleton.
    pub analytic: Option<f64>,
    pub empirical_a: Option<f64>,
    pub empirical_b: Option<f64>,
    pub plugin_mean_a: Option<f64>,
    pub plugin_mean_b: Option<f64>,
    /// Per-replicate plug-in variances, `None` where the replicate was
    /// skipped.
    pub plugins_a: Vec<Option<f64>>,
    pub plugins_b: Vec<Option<f64>>,
    /// empirical_b / empirical_a.
    pub empirical_ratio: Option<f64>,
}

/// Side-by-side variances of two replicate tables, paired per (group,
/// index kind): table A is the reference (current strategy in the standard
/// comparison), table B the alternative.
#[derive(Debug, Clone)]
pub struct VarianceComparison {
    pub strategy_a: Strategy,
    pub strategy_b: Strategy,
    pub replicates: usize,
    pub cells: Vec<ComparisonCell>,
}

/// Pair the empirical and plug-in variances of two tables. The tables must
/// share model, sampler, groups, sample size, replicate count and budget
/// matching, and each must carry a single strategy.
pub fn variance_comparison(
    table_a: &ReplicateTable,
    table_b: &ReplicateTable,
) -> Result<VarianceComparison> {
    let strategy_a = single_strategy(table_a)?;
    let strategy_b = single_strategy(table_b)?;
    if !table_a.config.comparable_with(&table_b.config) {
        return Err(Error::IncompatibleTables(
            "tables disagree on model, sampler, n, groups, replicates or budget matching".into(),
        ));
    }
    let analytic = table_a.config.model.analytic().ok();

    let stats_a = empirical_stats(table_a);
    let stats_b = empirical_stats(table_b);

    let mut cells = Vec::new();
    for group in &table_a.groups {
        for kind in [IndexKind::First, IndexKind::Total] {
            let cell_a = find_cell(&stats_a, group, kind);
            let cell_b = find_cell(&stats_b, group, kind);
            let (Some(cell_a), Some(cell_b)) = (cell_a, cell_b) else {
                continue;
            };
            let analytic_value = analytic.as_ref().and_then(|idx| {
                if group.len() == 1 {
                    let i = group.members()[0];
                    match kind {
                        IndexKind::First => idx.s.get(i).copied(),
                        IndexKind::Total => idx.st.get(i).copied(),
                    }
                } else {
                    None
                }
            });
            let empirical_ratio = match (cell_a.variance, cell_b.variance) {
                (Some(a), Some(b)) if a > 0.0 => Some(b / a),
                _ => None,
            };
            cells.push(ComparisonCell {
                group: group.clone(),
                kind,
                analytic: analytic_value,
                empirical_a: cell_a.variance,
                empirical_b: cell_b.variance,
                plugin_mean_a: cell_a.mean_plugin_variance,
                plugin_mean_b: cell_b.mean_plugin_variance,
                plugins_a: plugin_series(table_a, group, cell_a.estimator),
                plugins_b: plugin_series(table_b, group, cell_b.estimator),
                empirical_ratio,
            });
        }
    }
    Ok(VarianceComparison {
        strategy_a,
        strategy_b,
        replicates: table_a.config.replicates,
        cells,
    })
}

fn single_strategy(table: &ReplicateTable) -> Result<Strategy> {
    match table.config.strategy.strategies().as_slice() {
        [one] => Ok(*one),
        _ => Err(Error::IncompatibleTables(
            "variance comparison needs single-strategy tables; run the strategies separately"
                .into(),
        )),
    }
}

fn find_cell<'a>(
    stats: &'a [CellStats],
    group: &FactorGroup,
    kind: IndexKind,
) -> Option<&'a CellStats> {
    stats
        .iter()
        .find(|c| &c.group == group && c.estimator.index_kind() == kind)
}

fn plugin_series(
    table: &ReplicateTable,
    group: &FactorGroup,
    kind: EstimatorKind,
) -> Vec<Option<f64>> {
    let mut series = vec![None; table.config.replicates];
    for row in &table.rows {
        if row.estimator == kind && &row.group == group && !row.skipped {
            series[row.replicate] = row.asym_variance;
        }
    }
    series
}

/// One estimate compared against its same-seed baseline at offset 0.
#[derive(Debug, Clone)]
pub struct ShiftDelta {
    pub offset: f64,
    pub replicate: usize,
    pub group: FactorGroup,
    pub estimator: EstimatorKind,
    pub estimate: Option<f64>,
    pub baseline: Option<f64>,
    pub delta: Option<f64>,
}

/// Replicate tables at each constant offset, plus per-row deltas against
/// the first offset.
#[derive(Debug, Clone)]
pub struct ShiftExperiment {
    pub offsets: Vec<f64>,
    pub tables: Vec<ReplicateTable>,
    pub deltas: Vec<ShiftDelta>,
}

impl ShiftExperiment {
    pub fn baseline(&self) -> &ReplicateTable {
        &self.tables[0]
    }

    /// Largest |delta| / max(1, |baseline|) over all rows of one estimator,
    /// one group, at one offset.
    pub fn max_relative_delta(
        &self,
        offset_index: usize,
        group: &FactorGroup,
        kind: EstimatorKind,
    ) -> Option<f64> {
        let offset = self.offsets[offset_index];
        self.deltas
            .iter()
            .filter(|d| {
                d.offset == offset && d.estimator == kind && &d.group == group && d.delta.is_some()
            })
            .map(|d| d.delta.unwrap().abs() / d.baseline.unwrap().abs().max(1.0))
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
    }

    /// Ratio of the empirical replicate variance at `offset_index` to the
    /// baseline's, per (group, estimator).
    pub fn variance_ratio(
        &self,
        offset_index: usize,
        group: &FactorGroup,
        kind: EstimatorKind,
    ) -> Option<f64> {
        let base = self.tables[0].cell_estimates(group, kind);
        let other = self.tables[offset_index].cell_estimates(group, kind);
        if base.len() < 2 || other.len() < 2 {
            return None;
        }
        let vb = estimators::sample_variance(&base);
        if vb <= 0.0 {
            return None;
        }
        Some(estimators::sample_variance(&other) / vb)
    }
}

/// Run the experiment at each constant offset with identical seed streams,
/// so per-replicate estimates differ only through the offset, and report
/// per-row deltas relative to the first offset.
pub fn shift_experiment(base: &ExperimentConfig, offsets: &[f64]) -> Result<ShiftExperiment> {
    if offsets.is_empty() {
        return Err(Error::InvalidConfig(
            "shift experiment needs at least one offset".into(),
        ));
    }
    let mut tables = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        let config = ExperimentConfig {
            model: base.model.with_offset(offset)?,
            ..base.clone()
        };
        tables.push(run_replicates(&config)?);
    }

    let baseline = &tables[0];
    let mut deltas = Vec::new();
    for (table, &offset) in tables.iter().zip(offsets).skip(1) {
        if table.rows.len() != baseline.rows.len() {
            return Err(Error::IncompatibleTables(
                "offset tables produced different row counts".into(),
            ));
        }
        for (row, base_row) in table.rows.iter().zip(&baseline.rows) {
            debug_assert_eq!(row.replicate, base_row.replicate);
            debug_assert_eq!(row.estimator, base_row.estimator);
            deltas.push(ShiftDelta {
                offset,
                replicate: row.replicate,
                group: row.group.clone(),
                estimator: row.estimator,
                estimate: row.estimate,
                baseline: base_row.estimate,
                delta: match (row.estimate, base_row.estimate) {
                    (Some(e), Some(b)) => Some(e - b),
                    _ => None,
                },
            });
        }
    }
    Ok(ShiftExperiment {
        offsets: offsets.to_vec(),
        tables,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::StrategyChoice;
    use crate::sampling::SamplerKind;
    use crate::testfuncs::ModelSpec;

    fn config(model: ModelSpec, strategy: StrategyChoice, n: usize, replicates: usize) -> ExperimentConfig {
        ExperimentConfig {
            model,
            strategy,
            sampler: SamplerKind::Lhs,
            n,
            groups: None,
            replicates,
            master_seed: 7,
            budget_matched: false,
            clamp: false,
        }
    }

    #[test]
    fn single_replicate_is_deterministic() {
        let cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Ia, 32, 1);
        let t1 = run_replicates(&cfg).unwrap();
        let t2 = run_replicates(&cfg).unwrap();
        assert_eq!(t1.rows.len(), 6); // 3 groups x 2 estimators
        for (a, b) in t1.rows.iter().zip(&t2.rows) {
            assert_eq!(a.estimate, b.estimate);
            assert_eq!(a.asym_variance, b.asym_variance);
        }
    }

    #[test]
    fn additive_model_first_equals_total_in_every_row() {
        let cfg = config(
            ModelSpec::Additive {
                coeffs: vec![3.0, 4.0],
            },
            StrategyChoice::Ia,
            64,
            5,
        );
        let table = run_replicates(&cfg).unwrap();
        for replicate in 0..5 {
            for group in &table.groups {
                let first: Vec<f64> = table
                    .rows
                    .iter()
                    .filter(|r| {
                        r.replicate == replicate
                            && &r.group == group
                            && r.estimator == EstimatorKind::IaFirst
                    })
                    .filter_map(|r| r.estimate)
                    .collect();
                let total: Vec<f64> = table
                    .rows
                    .iter()
                    .filter(|r| {
                        r.replicate == replicate
                            && &r.group == group
                            && r.estimator == EstimatorKind::IaTotal
                    })
                    .filter_map(|r| r.estimate)
                    .collect();
                assert_eq!(first.len(), 1);
                assert_eq!(total.len(), 1);
                let diff = (first[0] - total[0]).abs();
                assert!(diff < 1e-12, "first {} vs total {}", first[0], total[0]);
            }
        }
    }

    #[test]
    fn constant_model_rows_are_skipped_not_fatal() {
        let cfg = config(
            ModelSpec::Additive {
                coeffs: vec![0.0, 0.0],
            },
            StrategyChoice::Both,
            16,
            3,
        );
        let table = run_replicates(&cfg).unwrap();
        assert!(!table.rows.is_empty());
        assert!(table.rows.iter().all(|r| r.skipped && r.estimate.is_none()));
        // And the stats survive as missing-cell markers.
        let stats = empirical_stats(&table);
        assert!(stats.iter().all(|c| c.mean.is_none() && c.variance.is_none()));
        assert!(stats.iter().all(|c| c.skipped == 3));
        // The strict one-shot path errors out instead.
        let err = single_estimates(&cfg).unwrap_err();
        assert!(err.is_degenerate());
    }

    #[test]
    fn budget_parity_in_matched_mode() {
        let mut cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Both, 64, 2);
        cfg.budget_matched = true;
        let table = run_replicates(&cfg).unwrap();
        for replicate in 0..2 {
            let calls_current = table
                .rows
                .iter()
                .find(|r| r.replicate == replicate && r.estimator == EstimatorKind::SsFirst)
                .unwrap()
                .model_calls;
            let calls_ia = table
                .rows
                .iter()
                .find(|r| r.replicate == replicate && r.estimator == EstimatorKind::IaFirst)
                .unwrap()
                .model_calls;
            assert_eq!(calls_current, 128 * 5);
            assert_eq!(calls_ia, 2 * 64 * 4);
            assert_eq!(calls_current.abs_diff(calls_ia), 2 * cfg.n);
        }
    }

    #[test]
    fn empirical_stats_hand_example() {
        // Two replicates with estimates 0.2 and 0.4: mean 0.3, variance 0.02.
        let cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Ia, 16, 2);
        let mut table = run_replicates(&cfg).unwrap();
        for row in &mut table.rows {
            if row.estimator == EstimatorKind::IaFirst && row.group == FactorGroup::singleton(0) {
                row.estimate = Some(if row.replicate == 0 { 0.2 } else { 0.4 });
            }
        }
        let stats = empirical_stats(&table);
        let cell = stats
            .iter()
            .find(|c| c.group == FactorGroup::singleton(0) && c.estimator == EstimatorKind::IaFirst)
            .unwrap();
        assert!((cell.mean.unwrap() - 0.3).abs() < 1e-15);
        assert!((cell.variance.unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(cell.used, 2);
    }

    #[test]
    fn comparison_of_identical_tables_has_unit_ratios() {
        let cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Ia, 32, 4);
        let table = run_replicates(&cfg).unwrap();
        let cmp = variance_comparison(&table, &table).unwrap();
        assert_eq!(cmp.cells.len(), 6);
        for cell in &cmp.cells {
            let ratio = cell.empirical_ratio.unwrap();
            assert!((ratio - 1.0).abs() < 1e-15, "ratio {ratio}");
            assert_eq!(cell.plugins_a, cell.plugins_b);
        }
    }

    #[test]
    fn comparison_rejects_mismatched_configs() {
        let t1 = run_replicates(&config(ModelSpec::default_ishigami(), StrategyChoice::Ia, 32, 4))
            .unwrap();
        let t2 = run_replicates(&config(ModelSpec::default_ishigami(), StrategyChoice::Ia, 64, 4))
            .unwrap();
        assert!(matches!(
            variance_comparison(&t1, &t2),
            Err(Error::IncompatibleTables(_))
        ));

        let both = run_replicates(&config(
            ModelSpec::default_ishigami(),
            StrategyChoice::Both,
            32,
            4,
        ))
        .unwrap();
        assert!(matches!(
            variance_comparison(&both, &t1),
            Err(Error::IncompatibleTables(_))
        ));
    }

    #[test]
    fn comparison_carries_analytic_totals_for_singletons() {
        let cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Ia, 32, 3);
        let table = run_replicates(&cfg).unwrap();
        let cmp = variance_comparison(&table, &table).unwrap();
        let analytic = ModelSpec::default_ishigami().analytic().unwrap();
        let cell = cmp
            .cells
            .iter()
            .find(|c| c.group == FactorGroup::singleton(1) && c.kind == IndexKind::Total)
            .unwrap();
        assert_eq!(cell.analytic.unwrap(), analytic.st[1]);
    }

    #[test]
    fn shift_deltas_vanish_for_difference_based_estimators() {
        let cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Both, 32, 3);
        let shift = shift_experiment(&cfg, &[0.0, 100.0]).unwrap();
        assert_eq!(shift.tables.len(), 2);
        for group in &shift.baseline().groups {
            for kind in [
                EstimatorKind::SjTotal,
                EstimatorKind::IaFirst,
                EstimatorKind::IaTotal,
            ] {
                let delta = shift.max_relative_delta(1, group, kind).unwrap();
                assert!(delta < 1e-9, "{kind:?} moved by {delta} under the offset");
            }
        }
    }

    #[test]
    fn shift_experiment_requires_offset_support() {
        let cfg = config(ModelSpec::default_gfunction(), StrategyChoice::Ia, 16, 1);
        assert!(matches!(
            shift_experiment(&cfg, &[0.0, 1.0]),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn replicate_rows_cover_every_cell() {
        let cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Both, 16, 4);
        let table = run_replicates(&cfg).unwrap();
        // 4 replicates x 3 groups x 4 estimators.
        assert_eq!(table.rows.len(), 48);
        let stats = empirical_stats(&table);
        assert_eq!(stats.len(), 12);
        assert!(stats.iter().all(|c| c.used == 4 && c.skipped == 0));
    }

    #[test]
    fn symmetric_first_never_exceeds_total_in_any_row() {
        for seed in 0..5 {
            let mut cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Ia, 32, 20);
            cfg.master_seed = seed;
            let table = run_replicates(&cfg).unwrap();
            for group in &table.groups {
                let firsts = table.cell_estimates(group, EstimatorKind::IaFirst);
                let totals = table.cell_estimates(group, EstimatorKind::IaTotal);
                for (s, st) in firsts.iter().zip(&totals) {
                    assert!(st - s >= -1e-12, "{group}: first {s} above total {st}");
                }
            }
        }
    }

    #[test]
    fn normalizer_replicate_mean_recovers_total_variance() {
        // Mean of the per-replicate total-variance normalizer at N = 128
        // lands within 3 standard errors of the closed form ~13.8446.
        use crate::estimators::variance_normalizer;
        use crate::sampling::{build_design, evaluate_design};

        let model = ModelSpec::default_ishigami().build().unwrap();
        let truth = ModelSpec::default_ishigami().analytic().unwrap().variance;
        let mut normalizers = Vec::new();
        for replicate in 0..100 {
            let design = build_design(
                crate::core::Strategy::Current,
                SamplerKind::Lhs,
                128,
                3,
                vec![FactorGroup::singleton(0)],
                42,
                replicate,
            )
            .unwrap();
            let block = &evaluate_design(model.as_ref(), &design).unwrap()[0];
            normalizers.push(variance_normalizer(block, crate::core::Strategy::Current).unwrap());
        }
        let mean = crate::estimators::mean(&normalizers);
        let se = (crate::estimators::sample_variance(&normalizers) / 100.0).sqrt();
        assert!(
            (mean - truth).abs() <= 3.0 * se,
            "normalizer mean {mean} vs {truth} (SE {se})"
        );
    }

    #[test]
    fn analytic_mean_coverage_over_master_seeds() {
        // Statistical meta-check: across 10 master seeds, at least 95% of
        // the (group, estimator) cells put the analytic value within 3
        // standard errors of the replicate mean.
        let analytic = ModelSpec::default_ishigami().analytic().unwrap();
        let mut covered = 0usize;
        let mut total = 0usize;
        for seed in 1..=10u64 {
            let mut cfg = config(ModelSpec::default_ishigami(), StrategyChoice::Both, 64, 100);
            cfg.master_seed = seed;
            cfg.budget_matched = true;
            let table = run_replicates(&cfg).unwrap();
            for cell in empirical_stats(&table) {
                let i = cell.group.members()[0];
                let truth = match cell.estimator.index_kind() {
                    crate::core::IndexKind::First => analytic.s[i],
                    crate::core::IndexKind::Total => analytic.st[i],
                };
                let se = (cell.variance.unwrap() / cell.used as f64).sqrt();
                total += 1;
                if (cell.mean.unwrap() - truth).abs() <= 3.0 * se {
                    covered += 1;
                }
            }
        }
        assert!(
            covered * 100 >= total * 95,
            "only {covered}/{total} cells within 3 SE"
        );
    }
}
