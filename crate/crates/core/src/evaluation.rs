//! Cross-validated comparison against a global least-squares baseline.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{k_folds, Dataset};
use crate::error::{Error, Result};
use crate::pipeline::{run_hipar, RunConfig, Variant};
use crate::regression::{fit_ols, ErrorMetric};
use crate::selection::SelectedRuleSet;

/// Error reduction in percent, `100 (baseline - model) / baseline`.
pub fn error_reduction(baseline: f64, model: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::OutOfRange(format!("baseline error {baseline} must be positive")));
    }
    Ok((baseline - model) / baseline * 100.0)
}

/// Conditions plus non-zero coefficients over the chosen rules; the
/// intercept does not count.
pub fn count_elements(set: &SelectedRuleSet) -> usize {
    set.chosen
        .iter()
        .map(|s| s.rule.pattern.len() + s.rule.fitted.model.nonzero_coefficients())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub baseline_rmse: f64,
    pub baseline_meae: f64,
    pub model_rmse: f64,
    pub model_meae: f64,
    /// `None` when the baseline error is zero.
    pub rho_rmse: Option<f64>,
    pub rho_meae: Option<f64>,
    pub n_candidates: usize,
    pub n_rules: usize,
    pub n_elements: usize,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub variant: Variant,
    pub config: RunConfig,
    pub folds: Vec<FoldResult>,
    pub mean_rho_rmse: Option<f64>,
    pub median_rho_meae: Option<f64>,
    pub mean_rules: f64,
    pub mean_elements: f64,
    pub skipped_rmse_folds: usize,
    pub skipped_meae_folds: usize,
}

impl EvaluationReport {
    /// The report with wall-clock fields zeroed, for comparisons.
    pub fn without_timing(&self) -> EvaluationReport {
        let mut r = self.clone();
        for f in &mut r.folds {
            f.train_seconds = 0.0;
        }
        r
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

fn run_fold(d: &Dataset, cfg: &RunConfig, fold: usize, train: &[usize], test: &[usize]) -> Result<FoldResult> {
    let y = d.target_values();
    let errors = |pred: &[f64]| -> (f64, f64) {
        let res: Vec<f64> = test.iter().zip(pred).map(|(&r, p)| y[r] - p).collect();
        (ErrorMetric::Rmse.of_residuals(&res), ErrorMetric::Meae.of_residuals(&res))
    };
    let baseline = fit_ols(train, d)?;
    let (baseline_rmse, baseline_meae) = errors(&baseline.predict_rows(d, test)?);

    let start = Instant::now();
    let train_set = d.subset(train)?;
    let model = run_hipar(&train_set, cfg)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let (model_rmse, model_meae) = errors(&model.predictor.predict_rows(d, test)?);

    let rho = |b: f64, m: f64| match error_reduction(b, m) {
        Ok(r) => Some(r),
        Err(_) => {
            log::warn!("fold {fold}: baseline error is zero, fold skipped");
            None
        }
    };
    Ok(FoldResult {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        baseline_rmse,
        baseline_meae,
        model_rmse,
        model_meae,
        rho_rmse: rho(baseline_rmse, model_rmse),
        rho_meae: rho(baseline_meae, model_meae),
        n_candidates: model.candidates.rules.len(),
        n_rules: model.selection.chosen.len(),
        n_elements: count_elements(&model.selection),
        train_seconds,
    })
}

/// k-fold cross-validation with `cfg.folds` folds seeded by `cfg.seed`.
pub fn cross_validate(d: &Dataset, cfg: &RunConfig) -> Result<EvaluationReport> {
    let plan = k_folds(d, cfg.folds, cfg.seed)?;
    let folds: Vec<FoldResult> = (0..plan.k)
        .into_par_iter()
        .map(|f| run_fold(d, cfg, f, &plan.train_rows(f), &plan.test_rows(f)))
        .collect::<Result<_>>()?;
    let rmse: Vec<f64> = folds.iter().filter_map(|f| f.rho_rmse).collect();
    let meae: Vec<f64> = folds.iter().filter_map(|f| f.rho_meae).collect();
    let k = folds.len() as f64;
    Ok(EvaluationReport {
        variant: cfg.variant,
        config: cfg.clone(),
        mean_rho_rmse: (!rmse.is_empty()).then(|| rmse.iter().sum::<f64>() / rmse.len() as f64),
        median_rho_meae: median(meae.clone()),
        mean_rules: folds.iter().map(|f| f.n_rules as f64).sum::<f64>() / k,
        mean_elements: folds.iter().map(|f| f.n_elements as f64).sum::<f64>() / k,
        skipped_rmse_folds: folds.len() - rmse.len(),
        skipped_meae_folds: folds.len() - meae.len(),
        folds,
    })
}
