//! Local linear models fitted on dataset regions.
//!
//! All fits run on standardized numerical features (population mean and
//! standard deviation over the fitting rows) with a centered target, then
//! map coefficients back to the original scale. Features with zero spread
//! on the fitting rows are dropped.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Observation, ValueRef};
use crate::data::holdout_split;
use crate::discretization::median;
use crate::error::{Error, Result};
use crate::fmt_sig;

/// Default LASSO penalty grid, in standardized units.
pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [0.001, 0.01, 0.1, 1.0];
/// Cap on the number of OMP terms.
pub const MAX_OMP_TERMS: usize = 8;
/// Regions smaller than this get an intercept-only model.
pub const MIN_FIT_ROWS: usize = 5;
/// Fraction of a region held out for the LASSO/OMP contest.
pub const HOLDOUT_FRACTION: f64 = 0.2;

const CD_TOLERANCE: f64 = 1e-6;
const CD_MAX_SWEEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMetric {
    #[default]
    Rmse,
    Meae,
}

impl ErrorMetric {
    pub fn of_residuals(self, residuals: &[f64]) -> f64 {
        if residuals.is_empty() {
            return 0.0;
        }
        match self {
            ErrorMetric::Rmse => (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt(),
            ErrorMetric::Meae => median(&residuals.iter().map(|r| r.abs()).collect::<Vec<_>>()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorMetric::Rmse => "rmse",
            ErrorMetric::Meae => "meae",
        }
    }
}

impl fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ErrorMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(ErrorMetric::Rmse),
            "meae" => Ok(ErrorMetric::Meae),
            other => Err(Error::OutOfRange(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ols,
    Lasso,
    Omp,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub name: String,
    pub mean: f64,
    pub scale: f64,
}

/// Centering and scaling used at fit time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Standardization {
    pub target_mean: f64,
    pub features: Vec<FeatureScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    /// Non-zero coefficients only, in original feature units.
    pub coefficients: BTreeMap<String, f64>,
    pub method: ModelKind,
    pub standardization: Standardization,
}

impl LinearModel {
    /// Intercept-only model.
    pub fn constant(value: f64) -> Self {
        LinearModel {
            intercept: value,
            coefficients: BTreeMap::new(),
            method: ModelKind::Mean,
            standardization: Standardization { target_mean: value, features: Vec::new() },
        }
    }

    pub fn nonzero_coefficients(&self) -> usize {
        self.coefficients.values().filter(|&&c| c != 0.0).count()
    }

    fn feature<O: Observation + ?Sized>(x: &O, name: &str) -> Result<f64> {
        match x.get(name) {
            Some(ValueRef::Number(v)) if v.is_finite() => Ok(v),
            Some(ValueRef::Number(v)) => Err(Error::NonFinite { attribute: name.to_string(), value: v }),
            Some(ValueRef::Symbol(_)) => Err(Error::KindMismatch {
                attribute: name.to_string(),
                message: "model needs a numerical value".into(),
            }),
            None => Err(Error::MissingAttribute(name.to_string())),
        }
    }

    pub fn predict<O: Observation + ?Sized>(&self, x: &O) -> Result<f64> {
        let mut out = self.intercept;
        for (name, c) in &self.coefficients {
            out += c * Self::feature(x, name)?;
        }
        Ok(out)
    }

    /// Prediction computed in standardized coordinates,
    /// `ȳ + Σ β̃_j (x_j − m_j) / s_j` with `β̃_j = β_j s_j`.
    pub fn predict_standardized<O: Observation + ?Sized>(&self, x: &O) -> Result<f64> {
        let mut out = self.standardization.target_mean;
        for (name, c) in &self.coefficients {
            let Some(fs) = self.standardization.features.iter().find(|f| &f.name == name) else {
                return Err(Error::Invariant(format!("coefficient `{name}` lacks a recorded scale")));
            };
            let z = (Self::feature(x, name)? - fs.mean) / fs.scale;
            out += c * fs.scale * z;
        }
        Ok(out)
    }

    /// Predictions for dataset rows.
    pub fn predict_rows(&self, d: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
        let cols: Vec<(&[f64], f64)> = self
            .coefficients
            .iter()
            .map(|(name, &c)| {
                d.numeric_column(name)
                    .map(|col| (col, c))
                    .ok_or_else(|| Error::MissingAttribute(name.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(rows
            .iter()
            .map(|&r| cols.iter().fold(self.intercept, |acc, (col, c)| acc + c * col[r]))
            .collect())
    }

    /// `target = b0 + b1*attr1 + ...`, six significant digits, zero terms
    /// omitted.
    pub fn render(&self, target: &str) -> String {
        let mut s = format!("{target} = {}", fmt_sig(self.intercept));
        for (name, &c) in &self.coefficients {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { '-' } else { '+' };
            s.push_str(&format!(" {sign} {}*{name}", fmt_sig(c.abs())));
        }
        s
    }
}

/// Residual error of `model` on `rows`.
pub fn evaluate(model: &LinearModel, rows: &[usize], d: &Dataset, metric: ErrorMetric) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::OutOfRange("cannot evaluate a model on zero rows".into()));
    }
    let y = d.target_values();
    let pred = model.predict_rows(d, rows)?;
    let residuals: Vec<f64> = rows.iter().zip(pred).map(|(&r, p)| y[r] - p).collect();
    Ok(metric.of_residuals(&residuals))
}

fn mean_of(rows: &[usize], y: &[f64]) -> f64 {
    rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64
}

/// Standardized design matrix over a set of rows.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub standardization: Standardization,
}

impl Design {
    /// `None` when the target has no spread or no feature survives.
    pub fn build(rows: &[usize], d: &Dataset) -> Option<Design> {
        if rows.len() < 2 {
            return None;
        }
        let yv = d.target_values();
        let target_mean = mean_of(rows, yv);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&r| yv[r] - target_mean));
        if y.iter().all(|v| v.abs() <= 1e-12 * (1.0 + target_mean.abs())) {
            return None;
        }
        let mut features = Vec::new();
        let mut columns = Vec::new();
        for name in d.numeric_features() {
            let col = d.numeric_column(name).expect("numeric feature");
            let mean = mean_of(rows, col);
            let var = rows.iter().map(|&r| (col[r] - mean).powi(2)).sum::<f64>() / rows.len() as f64;
            let scale = var.sqrt();
            if scale <= 1e-12 * (1.0 + mean.abs()) {
                continue;
            }
            columns.push(rows.iter().map(|&r| (col[r] - mean) / scale).collect::<Vec<_>>());
            features.push(FeatureScale { name: name.to_string(), mean, scale });
        }
        if features.is_empty() {
            return None;
        }
        let x = DMatrix::from_fn(rows.len(), columns.len(), |i, j| columns[j][i]);
        Some(Design { x, y, standardization: Standardization { target_mean, features } })
    }

    /// Maps standardized coefficients back to a model in original units.
    pub fn model(&self, beta: &DVector<f64>, method: ModelKind) -> LinearModel {
        let mut intercept = self.standardization.target_mean;
        let mut coefficients = BTreeMap::new();
        for (fs, &b) in self.standardization.features.iter().zip(beta.iter()) {
            if b == 0.0 {
                continue;
            }
            let c = b / fs.scale;
            intercept -= c * fs.mean;
            coefficients.insert(fs.name.clone(), c);
        }
        LinearModel { intercept, coefficients, method, standardization: self.standardization.clone() }
    }
}

/// Minimum-norm least-squares solution of `x β ≈ y`.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if x.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = x.clone().svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return DVector::zeros(x.ncols());
    }
    let eps = top * 1e-10 * (x.nrows().max(x.ncols()) as f64);
    svd.solve(y, eps).expect("both factors were computed")
}

/// Smallest penalty at which every LASSO coefficient is zero:
/// `max_j |x_jᵀ y| / n` for centered `y`.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.dot(y).abs() / n).fold(0.0, f64::max)
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for `(1/2n)‖y − xβ‖² + λ‖β‖₁`.
///
/// Stops when the largest coefficient change in a sweep drops below `1e-6`
/// or after 1000 sweeps.
pub fn lasso_coordinate_descent(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    warm_start: Option<&DVector<f64>>,
) -> DVector<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let mut beta = warm_start.cloned().unwrap_or_else(|| DVector::zeros(p));
    let mut residual = y - x * &beta;
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / n).collect();
    for _ in 0..CD_MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = beta[j];
            let rho = col.dot(&residual) / n + norms[j] * old;
            let new = soft_threshold(rho, lambda) / norms[j];
            if new != old {
                residual.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < CD_TOLERANCE {
            break;
        }
    }
    beta
}

/// One step of an OMP path: the active features (in selection order) and
/// the least-squares coefficients over all features.
#[derive(Debug, Clone)]
pub struct OmpStep {
    pub active: Vec<usize>,
    pub beta: DVector<f64>,
}

/// Greedy forward selection: repeatedly add the inactive column most
/// correlated with the residual and refit least squares on the active set.
pub fn omp_path(x: &DMatrix<f64>, y: &DVector<f64>, max_terms: usize) -> Vec<OmpStep> {
    let p = x.ncols();
    let y_norm = y.norm();
    let mut active: Vec<usize> = Vec::new();
    let mut residual = y.clone();
    let mut path = Vec::new();
    while active.len() < max_terms.min(p) {
        if residual.norm() <= 1e-12 * y_norm.max(1e-300) {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|j| !active.contains(j)) {
            let c = x.column(j);
            let norm = c.norm();
            if norm == 0.0 {
                continue;
            }
            let score = c.dot(&residual).abs() / norm;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, score)) = best else { break };
        if score <= 1e-12 * y_norm {
            break;
        }
        active.push(j);
        let sub = DMatrix::from_fn(x.nrows(), active.len(), |i, k| x[(i, active[k])]);
        let coef = least_squares(&sub, y);
        let mut beta = DVector::zeros(p);
        for (k, &a) in active.iter().enumerate() {
            beta[a] = coef[k];
        }
        residual = y - &sub * &coef;
        path.push(OmpStep { active: active.clone(), beta });
    }
    path
}

/// Hyperparameter chosen on a holdout set, reused when refitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hyperparameter {
    Lambda(f64),
    Terms(usize),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedModel {
    pub model: LinearModel,
    pub hyperparameter: Hyperparameter,
    pub holdout_error: f64,
}

fn mean_model(rows: &[usize], d: &Dataset) -> LinearModel {
    LinearModel::constant(mean_of(rows, d.target_values()))
}

fn score_rows<'a>(rows: &'a [usize], holdout: &'a [usize]) -> &'a [usize] {
    if holdout.is_empty() {
        rows
    } else {
        holdout
    }
}

fn tuned_mean(rows: &[usize], d: &Dataset, holdout: &[usize], metric: ErrorMetric) -> Result<TunedModel> {
    let model = mean_model(rows, d);
    let holdout_error = evaluate(&model, score_rows(rows, holdout), d, metric)?;
    Ok(TunedModel { model, hyperparameter: Hyperparameter::None, holdout_error })
}

/// Ordinary least squares with a minimum-norm solution on rank-deficient
/// systems. Degenerate inputs give the mean model.
pub fn fit_ols(rows: &[usize], d: &Dataset) -> Result<LinearModel> {
    if rows.is_empty() {
        return Err(Error::OutOfRange("cannot fit on zero rows".into()));
    }
    Ok(match Design::build(rows, d) {
        Some(design) => design.model(&least_squares(&design.x, &design.y), ModelKind::Ols),
        None => mean_model(rows, d),
    })
}

/// LASSO on `rows` for each penalty in `grid`; keeps the penalty with the
/// lowest `metric` on `holdout` (training rows when `holdout` is empty).
/// Ties favor the larger penalty.
pub fn fit_lasso(
    rows: &[usize],
    d: &Dataset,
    grid: &[f64],
    holdout: &[usize],
    metric: ErrorMetric,
) -> Result<TunedModel> {
    if rows.is_empty() {
        return Err(Error::OutOfRange("cannot fit on zero rows".into()));
    }
    let Some(design) = Design::build(rows, d).filter(|_| !grid.is_empty()) else {
        return tuned_mean(rows, d, holdout, metric);
    };
    let mut lambdas = grid.to_vec();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let mut best: Option<TunedModel> = None;
    let mut beta: Option<DVector<f64>> = None;
    for lambda in lambdas {
        let b = lasso_coordinate_descent(&design.x, &design.y, lambda, beta.as_ref());
        let model = design.model(&b, ModelKind::Lasso);
        let err = evaluate(&model, score_rows(rows, holdout), d, metric)?;
        if best.as_ref().is_none_or(|t| err < t.holdout_error) {
            best = Some(TunedModel { model, hyperparameter: Hyperparameter::Lambda(lambda), holdout_error: err });
        }
        beta = Some(b);
    }
    Ok(best.expect("grid is non-empty"))
}

/// OMP on `rows` with `1..=max_terms` terms; keeps the term count with the
/// lowest holdout `metric`. Ties favor fewer terms.
pub fn fit_omp(
    rows: &[usize],
    d: &Dataset,
    max_terms: usize,
    holdout: &[usize],
    metric: ErrorMetric,
) -> Result<TunedModel> {
    if rows.is_empty() {
        return Err(Error::OutOfRange("cannot fit on zero rows".into()));
    }
    let Some(design) = Design::build(rows, d) else {
        return tuned_mean(rows, d, holdout, metric);
    };
    let path = omp_path(&design.x, &design.y, max_terms);
    if path.is_empty() {
        return tuned_mean(rows, d, holdout, metric);
    }
    let mut best: Option<TunedModel> = None;
    for step in &path {
        let model = design.model(&step.beta, ModelKind::Omp);
        let err = evaluate(&model, score_rows(rows, holdout), d, metric)?;
        let better = best
            .as_ref()
            .is_none_or(|t| err < t.holdout_error - 1e-12 * (1.0 + t.holdout_error.abs()));
        if better {
            best = Some(TunedModel {
                model,
                hyperparameter: Hyperparameter::Terms(step.active.len()),
                holdout_error: err,
            });
        }
    }
    Ok(best.expect("path is non-empty"))
}

/// Fits the model family named by `hyperparameter` on `rows`.
pub fn refit(rows: &[usize], d: &Dataset, hyperparameter: Hyperparameter) -> Result<LinearModel> {
    if rows.is_empty() {
        return Err(Error::OutOfRange("cannot fit on zero rows".into()));
    }
    let Some(design) = Design::build(rows, d) else {
        return Ok(mean_model(rows, d));
    };
    Ok(match hyperparameter {
        Hyperparameter::Lambda(l) => {
            design.model(&lasso_coordinate_descent(&design.x, &design.y, l, None), ModelKind::Lasso)
        }
        Hyperparameter::Terms(k) => match omp_path(&design.x, &design.y, k).last() {
            Some(step) => design.model(&step.beta, ModelKind::Omp),
            None => mean_model(rows, d),
        },
        Hyperparameter::None => mean_model(rows, d),
    })
}

/// Lower holdout error wins; LASSO keeps ties.
pub fn contest_winner(lasso: TunedModel, omp: TunedModel) -> TunedModel {
    if omp.holdout_error < lasso.holdout_error {
        omp
    } else {
        lasso
    }
}

/// A region's fitted model together with its error statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedRuleModel {
    pub model: LinearModel,
    /// Error of the final model over the whole region.
    pub train_error: f64,
    /// Error that won the LASSO/OMP contest on the held-out slice.
    pub holdout_error: f64,
    pub metric: ErrorMetric,
    /// The held-out slice (the whole region for intercept-only fallbacks).
    #[serde(skip)]
    pub holdout_rows: Vec<usize>,
}

/// Fits LASSO and OMP on 80% of `rows`, keeps whichever scores lower on the
/// remaining 20% (LASSO on ties) and refits the winner on all of `rows`.
/// Small or degenerate regions get the mean model.
pub fn best_local_model(rows: &[usize], d: &Dataset, metric: ErrorMetric, seed: u64) -> Result<FittedRuleModel> {
    if rows.is_empty() {
        return Err(Error::OutOfRange("cannot fit on zero rows".into()));
    }
    let fallback = || -> Result<FittedRuleModel> {
        let model = mean_model(rows, d);
        let err = evaluate(&model, rows, d, metric)?;
        Ok(FittedRuleModel { model, train_error: err, holdout_error: err, metric, holdout_rows: rows.to_vec() })
    };
    if rows.len() < MIN_FIT_ROWS || Design::build(rows, d).is_none() {
        return fallback();
    }
    let (train, test) = holdout_split(rows, HOLDOUT_FRACTION, seed)?;
    let max_terms = d.numeric_features().len().min(MAX_OMP_TERMS);
    let lasso = fit_lasso(&train, d, &DEFAULT_LAMBDA_GRID, &test, metric)?;
    let omp = fit_omp(&train, d, max_terms, &test, metric)?;
    let winner = contest_winner(lasso, omp);
    let model = refit(rows, d, winner.hyperparameter)?;
    let train_error = evaluate(&model, rows, d, metric)?;
    Ok(FittedRuleModel { model, train_error, holdout_error: winner.holdout_error, metric, holdout_rows: test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(features: &[(&str, Vec<f64>)], y: Vec<f64>) -> Dataset {
        let mut cols: Vec<(String, Column)> =
            features.iter().map(|(n, v)| (n.to_string(), Column::Numerical(v.clone()))).collect();
        cols.push(("y".into(), Column::Numerical(y)));
        Dataset::from_columns(cols, "y").unwrap()
    }

    #[test]
    fn ols_exact_line() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = x.iter().map(|v| 2.0 * v).collect();
        let d = dataset(&[("x", x)], y);
        let m = fit_ols(&d.all_rows(), &d).unwrap();
        assert!(m.intercept.abs() < 1e-9);
        assert!((m.coefficients["x"] - 2.0).abs() < 1e-9);
        assert_eq!(m.method, ModelKind::Ols);
    }

    #[test]
    fn ols_constant_target() {
        let d = dataset(&[("x", vec![1.0, 2.0, 3.0])], vec![7.0; 3]);
        let m = fit_ols(&d.all_rows(), &d).unwrap();
        assert_eq!(m.intercept, 7.0);
        assert!(m.coefficients.is_empty());
        assert_eq!(m.method, ModelKind::Mean);
    }

    #[test]
    fn ols_interpolates_when_underdetermined() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let feats: Vec<(String, Vec<f64>)> =
            (0..5).map(|j| (format!("f{j}"), (0..3).map(|_| rng.random::<f64>()).collect())).collect();
        let refs: Vec<(&str, Vec<f64>)> = feats.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
        let d = dataset(&refs, vec![1.0, -2.0, 5.0]);
        let m = fit_ols(&d.all_rows(), &d).unwrap();
        assert!(evaluate(&m, &d.all_rows(), &d, ErrorMetric::Rmse).unwrap() < 1e-9);
    }

    #[test]
    fn ols_ignores_constant_feature() {
        let d = dataset(&[("x", vec![1.0, 2.0, 3.0, 4.0]), ("c", vec![3.0; 4])], vec![1.0, 3.0, 5.0, 7.0]);
        let m = fit_ols(&d.all_rows(), &d).unwrap();
        assert!(!m.coefficients.contains_key("c"));
        assert!((m.coefficients["x"] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn metric_arithmetic() {
        assert_eq!(ErrorMetric::Rmse.of_residuals(&[-1.0, 1.0]), 1.0);
        assert_eq!(ErrorMetric::Meae.of_residuals(&[-1.0, 1.0]), 1.0);
        assert_eq!(ErrorMetric::Rmse.of_residuals(&[0.0, 0.0, 0.0, 10.0]), 5.0);
        assert_eq!(ErrorMetric::Meae.of_residuals(&[0.0, 0.0, 0.0, 10.0]), 0.0);
        assert_eq!(ErrorMetric::Rmse.of_residuals(&[0.0; 3]), 0.0);
    }

    #[test]
    fn evaluate_rejects_empty_rows() {
        let d = dataset(&[("x", vec![1.0, 2.0])], vec![1.0, 2.0]);
        assert!(evaluate(&LinearModel::constant(0.0), &[], &d, ErrorMetric::Rmse).is_err());
    }

    #[test]
    fn lasso_kill_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(40, 3, |_, _| rng.random::<f64>() - 0.5);
        let mut y = DVector::from_fn(40, |i, _| x[(i, 0)] * 2.0 - x[(i, 2)] + 0.1 * (rng.random::<f64>() - 0.5));
        let m = y.mean();
        y.add_scalar_mut(-m);
        let lmax = lambda_max(&x, &y);
        assert!(lasso_coordinate_descent(&x, &y, lmax, None).iter().all(|&b| b == 0.0));
        assert!(lasso_coordinate_descent(&x, &y, lmax * 1.5, None).iter().all(|&b| b == 0.0));
        assert!(lasso_coordinate_descent(&x, &y, lmax * 0.9, None).iter().any(|&b| b != 0.0));
    }

    #[test]
    fn lasso_small_penalty_approaches_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 60;
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * a[i] - 3.0 * b[i] + 0.1 * rng.random::<f64>()).collect();
        let d = dataset(&[("a", a), ("b", b)], y);
        let rows = d.all_rows();
        let ols = fit_ols(&rows, &d).unwrap();
        let lasso = fit_lasso(&rows, &d, &[1e-9], &[], ErrorMetric::Rmse).unwrap().model;
        for k in ["a", "b"] {
            assert!((ols.coefficients[k] - lasso.coefficients[k]).abs() < 1e-4, "{k}");
        }
    }

    #[test]
    fn omp_single_feature() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = x.iter().map(|v| 2.0 * v).collect();
        let d = dataset(&[("x", x)], y);
        let t = fit_omp(&d.all_rows(), &d, 1, &[], ErrorMetric::Rmse).unwrap();
        assert_eq!(t.hyperparameter, Hyperparameter::Terms(1));
        assert!((t.model.coefficients["x"] - 2.0).abs() < 1e-9);
        let zero = fit_omp(&d.all_rows(), &d, 0, &[], ErrorMetric::Rmse).unwrap();
        assert_eq!(zero.model.method, ModelKind::Mean);
    }

    #[test]
    fn omp_path_grows_by_one_and_error_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = DMatrix::from_fn(30, 6, |_, _| rng.random::<f64>());
        let y = DVector::from_fn(30, |_, _| rng.random::<f64>());
        let path = omp_path(&x, &y, 6);
        let mut last = f64::INFINITY;
        for (k, step) in path.iter().enumerate() {
            assert_eq!(step.active.len(), k + 1);
            let err = (&y - &x * &step.beta).norm();
            assert!(err <= last + 1e-12);
            last = err;
        }
    }

    #[test]
    fn small_region_gets_mean_model() {
        let d = dataset(&[("x", vec![1.0, 2.0, 3.0, 4.0])], vec![1.0, 5.0, 2.0, 8.0]);
        let f = best_local_model(&d.all_rows(), &d, ErrorMetric::Rmse, 0).unwrap();
        assert_eq!(f.model.method, ModelKind::Mean);
        assert_eq!(f.holdout_error, f.train_error);
        // the mean model's RMSE is the population standard deviation
        let y = [1.0, 5.0, 2.0, 8.0];
        let mu = 4.0;
        let sd = (y.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / 4.0).sqrt();
        assert!((f.train_error - sd).abs() < 1e-12);
    }

    #[test]
    fn exact_linear_data_both_methods_near_zero() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let d = dataset(&[("x", x)], y);
        let (train, test) = holdout_split(&d.all_rows(), HOLDOUT_FRACTION, 3).unwrap();
        let lasso = fit_lasso(&train, &d, &DEFAULT_LAMBDA_GRID, &test, ErrorMetric::Rmse).unwrap();
        let omp = fit_omp(&train, &d, 1, &test, ErrorMetric::Rmse).unwrap();
        assert!(lasso.holdout_error < 0.01 && omp.holdout_error < 1e-9);
        let f = best_local_model(&d.all_rows(), &d, ErrorMetric::Rmse, 3).unwrap();
        assert!(f.train_error < 0.01);
    }

    #[test]
    fn contest_tie_goes_to_lasso() {
        let tuned = |kind, e| TunedModel {
            model: LinearModel { method: kind, ..LinearModel::constant(0.0) },
            hyperparameter: Hyperparameter::None,
            holdout_error: e,
        };
        assert_eq!(contest_winner(tuned(ModelKind::Lasso, 1.0), tuned(ModelKind::Omp, 1.0)).model.method, ModelKind::Lasso);
        assert_eq!(contest_winner(tuned(ModelKind::Lasso, 1.0), tuned(ModelKind::Omp, 0.5)).model.method, ModelKind::Omp);
    }

    #[test]
    fn standardized_and_original_predictions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30;
        let a: Vec<f64> = (0..n).map(|_| 100.0 + rng.random::<f64>() * 50.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 1e-3).collect();
        let y: Vec<f64> = (0..n).map(|i| a[i] * 0.5 + b[i] * 1e3 + rng.random::<f64>()).collect();
        let d = dataset(&[("a", a), ("b", b)], y);
        let m = fit_ols(&d.all_rows(), &d).unwrap();
        for r in 0..n {
            let p1 = m.predict(&d.row(r)).unwrap();
            let p2 = m.predict_standardized(&d.row(r)).unwrap();
            assert!((p1 - p2).abs() < 1e-9, "{p1} vs {p2}");
        }
    }

    #[test]
    fn rendering() {
        let mut m = LinearModel::constant(12.345678);
        m.coefficients.insert("rooms".into(), 2.0);
        m.coefficients.insert("surface".into(), -0.0012345678);
        assert_eq!(m.render("price"), "price = 12.3457 + 2*rooms - 0.00123457*surface");
    }
}
