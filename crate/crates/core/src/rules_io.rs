//! Rule-set files: JSON for reloading, plain text for reading.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{AttributeSchema, Dataset};
use crate::enumeration::HybridRule;
use crate::error::{Error, Result};
use crate::fmt_sig;
use crate::pattern::Pattern;
use crate::prediction::{Predictor, PredictorRule};
use crate::regression::{ErrorMetric, LinearModel};
use crate::selection::{SelectedRuleSet, Solver};

pub const FORMAT_TAG: &str = "hipar-rules/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub pattern: Pattern,
    pub is_default: bool,
    /// False only for a default rule kept as the fallback without being
    /// selected.
    pub chosen: bool,
    pub model: LinearModel,
    pub support_abs: usize,
    pub support_rel: f64,
    pub train_error: f64,
    pub holdout_error: f64,
    /// Selection scores; absent for an unchosen default rule.
    pub normalized_error: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesFile {
    pub format: String,
    pub target: String,
    pub schema: Vec<AttributeSchema>,
    pub metric: ErrorMetric,
    pub solver: Solver,
    pub proof: bool,
    pub objective: f64,
    /// Chosen rules in canonical order; exactly one entry is the default.
    pub rules: Vec<RuleEntry>,
}

fn entry(rule: &HybridRule, chosen: bool, normalized_error: Option<f64>, alpha: Option<f64>) -> RuleEntry {
    RuleEntry {
        pattern: rule.pattern.clone(),
        is_default: rule.is_default,
        chosen,
        model: rule.fitted.model.clone(),
        support_abs: rule.support_abs,
        support_rel: rule.support_rel,
        train_error: rule.fitted.train_error,
        holdout_error: rule.fitted.holdout_error,
        normalized_error,
        alpha,
    }
}

impl RulesFile {
    pub fn new(set: &SelectedRuleSet, d: &Dataset) -> Self {
        let mut rules: Vec<RuleEntry> =
            set.chosen.iter().map(|s| entry(&s.rule, true, Some(s.normalized_error), Some(s.alpha))).collect();
        if !rules.iter().any(|r| r.is_default) {
            rules.insert(0, entry(&set.default_rule, false, None, None));
        }
        RulesFile {
            format: FORMAT_TAG.to_string(),
            target: d.target_name().to_string(),
            schema: d.schema().to_vec(),
            metric: set.default_rule.fitted.metric,
            solver: set.solver,
            proof: set.proof,
            objective: set.objective_value,
            rules,
        }
    }

    pub fn predictor(&self) -> Result<Predictor> {
        let mut defaults = self.rules.iter().filter(|r| r.is_default);
        let (Some(default), None) = (defaults.next(), defaults.next()) else {
            return Err(Error::OutOfRange("a rules file needs exactly one default rule".into()));
        };
        let score = |r: &RuleEntry| {
            r.normalized_error
                .ok_or_else(|| Error::OutOfRange(format!("chosen rule `{}` lacks its normalized error", r.pattern)))
        };
        let rules = self
            .rules
            .iter()
            .filter(|r| !r.is_default && r.chosen)
            .map(|r| Ok(PredictorRule { pattern: r.pattern.clone(), model: r.model.clone(), normalized_error: score(r)? }))
            .collect::<Result<Vec<_>>>()?;
        let default_error = if default.chosen { Some(score(default)?) } else { None };
        Predictor::new(rules, default.model.clone(), default_error)
    }

    /// One block per rule: pattern, model, support and errors.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let tag = match (r.is_default, r.chosen) {
                (true, true) => " [default]",
                (true, false) => " [default, fallback only]",
                _ => "",
            };
            out.push_str(&format!(
                "{} => {}{tag}\n  support {} ({}), holdout {m} {}, train {m} {}\n",
                r.pattern,
                r.model.render(&self.target),
                r.support_abs,
                fmt_sig(r.support_rel),
                fmt_sig(r.holdout_error),
                fmt_sig(r.train_error),
                m = self.metric,
            ));
        }
        out
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Path of the text rendering next to `path`.
pub fn text_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Writes the JSON file to `path` and the text rendering to `path.txt`.
pub fn serialize_rules(set: &SelectedRuleSet, d: &Dataset, path: &Path) -> Result<RulesFile> {
    let file = RulesFile::new(set, d);
    let json = serde_json::to_string_pretty(&file)?;
    fs::write(path, json).map_err(io_error(path))?;
    let txt = text_path(path);
    fs::write(&txt, file.render_text()).map_err(io_error(&txt))?;
    Ok(file)
}

pub fn load_rules(path: &Path) -> Result<RulesFile> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let file: RulesFile = serde_json::from_str(&text)?;
    if file.format != FORMAT_TAG {
        return Err(Error::OutOfRange(format!("unsupported rules format `{}`", file.format)));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{Condition, Interval};
    use crate::pipeline::{run_hipar, RunConfig};
    use crate::regression::FittedRuleModel;
    use crate::selection::{select, SelectedRule, SelectionConfig};
    use crate::synthetic::two_segment;
    use crate::testing::table1;

    #[test]
    fn round_trip_predicts_identically() {
        let d = two_segment(150, 0.05, 8);
        let model = run_hipar(&d, &RunConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.json");
        let written = serialize_rules(&model.selection, &d, &path).unwrap();
        let loaded = load_rules(&path).unwrap();
        assert_eq!(written, loaded);
        let p = loaded.predictor().unwrap();
        let rows = d.all_rows();
        assert_eq!(p.predict_rows(&d, &rows).unwrap(), model.predictor.predict_rows(&d, &rows).unwrap());
        let txt = fs::read_to_string(text_path(&path)).unwrap();
        assert_eq!(txt, loaded.render_text());
        assert_eq!(loaded.rules.iter().filter(|r| r.is_default).count(), 1);
    }

    fn constant_rule(pattern: Pattern, value: f64, support: usize) -> HybridRule {
        HybridRule {
            is_default: pattern.is_top(),
            pattern,
            fitted: FittedRuleModel {
                model: LinearModel::constant(value),
                train_error: 1.5,
                holdout_error: 2.0,
                metric: ErrorMetric::Rmse,
                holdout_rows: vec![],
            },
            support_abs: support,
            support_rel: support as f64 / 6.0,
        }
    }

    #[test]
    fn default_only_file() {
        let d = table1();
        let default = constant_rule(Pattern::top(), 309.0, 6);
        let set = select(&[], &default, &d, &SelectionConfig::default(), 0).unwrap();
        let file = RulesFile::new(&set, &d);
        assert_eq!(file.rules.len(), 1);
        assert!(file.rules[0].is_default && file.rules[0].chosen);
        let p = file.predictor().unwrap();
        assert_eq!(p.predict(&d.row(0)).unwrap(), 309.0);
    }

    #[test]
    fn golden_text() {
        let d = table1();
        let cottage = Pattern::new([
            Condition::equals("property-type", "cottage"),
            Condition::interval("surface", Interval::below(60.0)),
        ])
        .unwrap();
        let mut rule = constant_rule(cottage, 380.0, 2);
        rule.fitted.model.intercept = -20.5;
        rule.fitted.model.coefficients.insert("rooms".into(), 130.0);
        rule.fitted.model.coefficients.insert("surface".into(), -0.125);
        let set = SelectedRuleSet {
            chosen: vec![SelectedRule { rule, normalized_error: 0.5, normalized_support: 1.0, alpha: 2.0 }],
            default_rule: constant_rule(Pattern::top(), 309.1666666, 6),
            objective_value: -2.0,
            solver: Solver::Exact,
            proof: true,
        };
        let golden = "\
TRUE => price = 309.167 [default, fallback only]
  support 6 (1), holdout rmse 2, train rmse 1.5
property-type=\"cottage\" & surface in (-inf,60) => price = -20.5 + 130*rooms - 0.125*surface
  support 2 (0.333333), holdout rmse 2, train rmse 1.5
";
        assert_eq!(RulesFile::new(&set, &d).render_text(), golden);
    }

    #[test]
    fn wrong_format_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        fs::write(&path, "{\"format\": \"other\"}").unwrap();
        assert!(load_rules(&path).is_err());
        assert!(load_rules(&dir.path().join("missing.json")).unwrap_err().is_input_error());
    }
}
