//! Prediction with a selected rule set.
//!
//! An observation is scored by every chosen non-default rule whose pattern it
//! matches; predictions are mixed with weights proportional to the inverse
//! normalized error. Observations no such rule covers fall back to the
//! default model.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Observation, Record};
use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::regression::LinearModel;
use crate::selection::SelectedRuleSet;

/// The parts of a chosen rule needed at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorRule {
    pub pattern: Pattern,
    pub model: LinearModel,
    pub normalized_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    /// Chosen non-default rules in canonical key order.
    rules: Vec<PredictorRule>,
    default_model: LinearModel,
    /// Normalized error of the default rule when the selector chose it.
    default_error: Option<f64>,
    /// Mix a chosen default rule into every prediction.
    include_default: bool,
}

/// Inverse-error weights, normalized to sum to one.
pub fn mixture_weights(normalized_errors: &[f64]) -> Vec<f64> {
    let total: f64 = normalized_errors.iter().map(|e| 1.0 / e).sum();
    normalized_errors.iter().map(|e| (1.0 / e) / total).collect()
}

/// Inverse-error weighted mean of `predictions`.
pub fn mix(normalized_errors: &[f64], predictions: &[f64]) -> f64 {
    let num: f64 = predictions.iter().zip(normalized_errors).map(|(p, e)| p / e).sum();
    let den: f64 = normalized_errors.iter().map(|e| 1.0 / e).sum();
    num / den
}

fn check_error(pattern: &Pattern, e: f64) -> Result<()> {
    if e.is_finite() && e > 0.0 {
        Ok(())
    } else {
        Err(Error::Invariant(format!("rule `{pattern}` has non-positive error {e}")))
    }
}

impl Predictor {
    /// `default_error` is the default rule's normalized error when it was
    /// chosen, `None` otherwise.
    pub fn new(mut rules: Vec<PredictorRule>, default_model: LinearModel, default_error: Option<f64>) -> Result<Self> {
        for r in &rules {
            if r.pattern.is_top() {
                return Err(Error::Invariant("the default rule is passed separately".into()));
            }
            check_error(&r.pattern, r.normalized_error)?;
        }
        if let Some(e) = default_error {
            check_error(&Pattern::top(), e)?;
        }
        rules.sort_by_key(|r| r.pattern.key());
        Ok(Predictor { rules, default_model, default_error, include_default: false })
    }

    pub fn from_selection(set: &SelectedRuleSet) -> Result<Self> {
        let mut rules = Vec::new();
        let mut default_error = None;
        for s in &set.chosen {
            if s.rule.is_default {
                default_error = Some(s.normalized_error);
            } else {
                rules.push(PredictorRule {
                    pattern: s.rule.pattern.clone(),
                    model: s.rule.fitted.model.clone(),
                    normalized_error: s.normalized_error,
                });
            }
        }
        Predictor::new(rules, set.default_rule.fitted.model.clone(), default_error)
    }

    /// When set and the default rule was chosen, the default joins every
    /// weighted mix instead of serving only as the fallback.
    pub fn with_default_in_mix(mut self, include: bool) -> Self {
        self.include_default = include;
        self
    }

    pub fn default_error(&self) -> Option<f64> {
        self.default_error
    }

    pub fn rules(&self) -> &[PredictorRule] {
        &self.rules
    }

    pub fn default_model(&self) -> &LinearModel {
        &self.default_model
    }

    /// Chosen rules whose pattern matches `x`, in canonical order.
    pub fn covering_rules<O: Observation + ?Sized>(&self, x: &O) -> Result<Vec<&PredictorRule>> {
        let mut out = Vec::new();
        for r in &self.rules {
            if r.pattern.matches(x)? {
                out.push(r);
            }
        }
        Ok(out)
    }

    pub fn predict<O: Observation + ?Sized>(&self, x: &O) -> Result<f64> {
        let covering = self.covering_rules(x)?;
        if covering.is_empty() {
            return self.default_model.predict(x);
        }
        let mut errors: Vec<f64> = covering.iter().map(|r| r.normalized_error).collect();
        let mut predictions = covering.iter().map(|r| r.model.predict(x)).collect::<Result<Vec<f64>>>()?;
        if let (true, Some(e)) = (self.include_default, self.default_error) {
            errors.push(e);
            predictions.push(self.default_model.predict(x)?);
        }
        Ok(mix(&errors, &predictions))
    }

    pub fn predict_rows(&self, d: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|&i| self.predict(&d.row(i)).map_err(|e| Error::AtRow { row: i, source: Box::new(e) }))
            .collect()
    }

    pub fn predict_batch(&self, records: &[Record]) -> Result<Vec<f64>> {
        records
            .iter()
            .enumerate()
            .map(|(i, x)| self.predict(x).map_err(|e| Error::AtRow { row: i, source: Box::new(e) }))
            .collect()
    }
}
