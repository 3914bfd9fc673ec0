//! Candidate rule enumeration.
//!
//! Closed patterns are explored depth-first from the empty pattern. Each
//! refinement must be frequent and exceptional (interclass variance above a
//! percentile threshold), its closure must pass the leftmost-parent test so
//! that every closed pattern is reached from one parent only, and its local
//! model must beat the models of all its immediate ancestors before the
//! search descends below it. Numerical attributes are re-discretized inside
//! every accepted region.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::discretization::discretize;
use crate::error::{Error, Result};
use crate::fmt_sig;
use crate::pattern::{intersect_sorted, interclass_variance_of_rows, is_sorted_subset, Condition, Pattern};
use crate::regression::{best_local_model, evaluate, ErrorMetric, FittedRuleModel};

/// Where the support of a re-discretized interval is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportScope {
    /// Over the whole dataset.
    #[default]
    Dataset,
    /// Inside the region being refined.
    Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    /// Relative support threshold in (0, 1].
    pub theta: f64,
    /// Percentile of the interval conditions' interclass variance used as the
    /// pruning threshold. `None` disables interclass-variance pruning.
    pub iv_percentile: Option<f64>,
    pub metric: ErrorMetric,
    pub seed: u64,
    pub support_scope: SupportScope,
    /// Descend below rules that fail the ancestor comparison as well.
    pub recurse_on_rejection: bool,
    /// Record one trace line per visited node.
    pub trace: bool,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            theta: 0.1,
            iv_percentile: Some(85.0),
            metric: ErrorMetric::Rmse,
            seed: 0,
            support_scope: SupportScope::Dataset,
            recurse_on_rejection: false,
            trace: false,
        }
    }
}

impl EnumConfig {
    /// Checks the parameters against a dataset of `n` rows.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::OutOfRange(format!("support threshold {} must lie in (0, 1]", self.theta)));
        }
        if self.theta * n as f64 + 1e-9 < 1.0 {
            return Err(Error::OutOfRange(format!("support threshold {} selects less than one of {n} rows", self.theta)));
        }
        if let Some(k) = self.iv_percentile {
            if !(0.0..=100.0).contains(&k) {
                return Err(Error::OutOfRange(format!("percentile {k} must lie in [0, 100]")));
            }
        }
        Ok(())
    }

    /// Smallest absolute support that counts as frequent on `n` rows.
    pub fn min_count(&self, n: usize) -> usize {
        ((self.theta * n as f64 - 1e-9).ceil() as usize).max(1)
    }
}

/// A pattern with its local model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridRule {
    pub pattern: Pattern,
    pub fitted: FittedRuleModel,
    pub support_abs: usize,
    pub support_rel: f64,
    pub is_default: bool,
}

impl HybridRule {
    pub fn key(&self) -> String {
        self.pattern.key()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeDecision {
    PrunedSupport,
    PrunedIv,
    PrunedLeftmost,
    RejectedOccam,
    Accepted,
}

impl NodeDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeDecision::PrunedSupport => "pruned-support",
            NodeDecision::PrunedIv => "pruned-iv",
            NodeDecision::PrunedLeftmost => "pruned-leftmost",
            NodeDecision::RejectedOccam => "rejected-occam",
            NodeDecision::Accepted => "accepted",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumStats {
    /// Closed patterns that passed the leftmost-parent test.
    pub visited: usize,
    pub pruned_support: usize,
    pub pruned_iv: usize,
    pub pruned_leftmost: usize,
    pub rejected_occam: usize,
    pub accepted: usize,
    /// Canonical keys of every pattern whose model was fitted, in fit order.
    pub fitted_keys: Vec<String>,
    /// Visited closed patterns in visit order.
    pub visited_patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub rules: Vec<HybridRule>,
    pub default_rule: HybridRule,
    pub stats: EnumStats,
    /// `PATTERN<TAB>support<TAB>iv<TAB>decision` lines when tracing.
    pub trace: Vec<String>,
}

/// Deterministic per-pattern seed.
fn pattern_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

fn fit_rule(pattern: Pattern, rows: &[usize], d: &Dataset, cfg: &EnumConfig) -> Result<HybridRule> {
    let key = pattern.key();
    let fitted = best_local_model(rows, d, cfg.metric, pattern_seed(cfg.seed, &key))?;
    Ok(HybridRule {
        is_default: pattern.is_top(),
        support_abs: rows.len(),
        support_rel: rows.len() as f64 / d.n_rows() as f64,
        pattern,
        fitted,
    })
}

/// The rule on the empty pattern, fitted on every row.
pub fn fit_default_rule(d: &Dataset, cfg: &EnumConfig) -> Result<HybridRule> {
    fit_rule(Pattern::top(), &d.all_rows(), d, cfg)
}

/// Frequent interval conditions of `attribute` discretized on `region`.
/// When only one interval survives the support filter, the attribute is
/// dropped altogether.
fn frequent_intervals(
    attribute: &str,
    region: &[usize],
    d: &Dataset,
    min_count: usize,
    scope: SupportScope,
) -> Result<Vec<Condition>> {
    let mut kept = Vec::new();
    for c in discretize(attribute, region, d)? {
        let rows = c.rows(d)?;
        let count = match scope {
            SupportScope::Dataset => rows.len(),
            SupportScope::Region => intersect_sorted(&rows, region).len(),
        };
        if count >= min_count {
            kept.push(c);
        }
    }
    if kept.len() < 2 {
        kept.clear();
    }
    Ok(kept)
}

/// Frequent single conditions: categorical equalities plus MDLP intervals of
/// every numerical feature computed on the whole dataset.
pub fn hipar_init(d: &Dataset, cfg: &EnumConfig) -> Result<Vec<Condition>> {
    cfg.validate(d.n_rows())?;
    let min_count = cfg.min_count(d.n_rows());
    let mut out = Vec::new();
    for attr in d.categorical_features() {
        let column = d.categorical_column(attr).expect("categorical feature");
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for v in column {
            *counts.entry(v.as_str()).or_default() += 1;
        }
        out.extend(
            counts
                .into_iter()
                .filter(|&(_, c)| c >= min_count)
                .map(|(v, _)| Condition::equals(attr, v)),
        );
    }
    let all = d.all_rows();
    for attr in d.numeric_features() {
        out.extend(frequent_intervals(attr, &all, d, min_count, SupportScope::Dataset)?);
    }
    out.sort();
    Ok(out)
}

/// True iff every condition of `closed` that precedes `extension` in
/// canonical order already belongs to `parent`.
pub fn leftmost_parent_check(parent: &Pattern, extension: &Condition, closed: &Pattern) -> bool {
    closed
        .conditions()
        .iter()
        .take_while(|c| *c < extension)
        .all(|c| parent.contains(c))
}

/// True iff `rule` scores strictly lower than every parent rule on
/// `eval_rows`.
pub fn occam_test(
    rule: &HybridRule,
    parents: &[&HybridRule],
    eval_rows: &[usize],
    d: &Dataset,
    metric: ErrorMetric,
) -> Result<bool> {
    let own = evaluate(&rule.fitted.model, eval_rows, d, metric)?;
    for p in parents {
        if own >= evaluate(&p.fitted.model, eval_rows, d, metric)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Linear-interpolation percentile of `values` (sorted in place).
pub fn percentile(values: &mut [f64], k: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = (k / 100.0) * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

struct Enumerator<'a> {
    d: &'a Dataset,
    cfg: &'a EnumConfig,
    min_count: usize,
    categorical_universe: Vec<Condition>,
    condition_rows: HashMap<Condition, Vec<usize>>,
    memo: HashMap<String, HybridRule>,
    visited: HashSet<String>,
    stats: EnumStats,
    trace: Vec<String>,
    rules: Vec<HybridRule>,
}

impl Enumerator<'_> {
    fn rows_of(&mut self, c: &Condition) -> Result<&[usize]> {
        if !self.condition_rows.contains_key(c) {
            let rows = c.rows(self.d)?;
            self.condition_rows.insert(c.clone(), rows);
        }
        Ok(&self.condition_rows[c])
    }

    fn pattern_rows(&mut self, p: &Pattern) -> Result<Vec<usize>> {
        let mut rows = self.d.all_rows();
        for c in p.conditions() {
            rows = intersect_sorted(&rows, self.rows_of(c)?);
        }
        Ok(rows)
    }

    fn record(&mut self, p: &Pattern, support: usize, iv: f64, decision: NodeDecision) {
        match decision {
            NodeDecision::PrunedSupport => self.stats.pruned_support += 1,
            NodeDecision::PrunedIv => self.stats.pruned_iv += 1,
            NodeDecision::PrunedLeftmost => self.stats.pruned_leftmost += 1,
            NodeDecision::RejectedOccam => self.stats.rejected_occam += 1,
            NodeDecision::Accepted => self.stats.accepted += 1,
        }
        if self.cfg.trace {
            self.trace.push(format!("{p}\t{support}\t{}\t{}", fmt_sig(iv), decision.as_str()));
        }
    }

    fn rule_for(&mut self, pattern: &Pattern, rows: &[usize]) -> Result<HybridRule> {
        let key = pattern.key();
        if let Some(r) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        let rule = fit_rule(pattern.clone(), rows, self.d, self.cfg)?;
        self.stats.fitted_keys.push(key.clone());
        self.memo.insert(key, rule.clone());
        Ok(rule)
    }

    fn close(&mut self, p: &Pattern, rows: &[usize], universe: &[Condition]) -> Result<Pattern> {
        let mut closed = p.clone();
        for c in universe {
            if closed.constrains(&c.attribute) {
                continue;
            }
            if is_sorted_subset(rows, self.rows_of(c)?) {
                closed = closed.with(c.clone())?;
            }
        }
        Ok(closed)
    }

    /// Rules of the closed patterns obtained by dropping one condition of
    /// `p`; the default rule stands in for the whole dataset.
    fn parent_rules(&mut self, p: &Pattern, rows: &[usize], universe: &[Condition]) -> Result<Vec<HybridRule>> {
        let mut parents: Vec<HybridRule> = Vec::new();
        let mut seen = HashSet::new();
        for c in p.conditions() {
            let q = p.without(c);
            let q_rows = self.pattern_rows(&q)?;
            if q_rows.len() == rows.len() {
                continue;
            }
            let parent = if q_rows.len() == self.d.n_rows() {
                Pattern::top()
            } else {
                self.close(&q, &q_rows, universe)?
            };
            if seen.insert(parent.key()) {
                parents.push(self.rule_for(&parent, &q_rows)?);
            }
        }
        if parents.is_empty() {
            parents.push(self.memo[""].clone());
        }
        Ok(parents)
    }

    fn explore(&mut self, p: &Pattern, p_rows: &[usize], mut conditions: Vec<Condition>) -> Result<()> {
        conditions.sort();
        conditions.dedup();
        let y = self.d.target_values();
        let numeric: Vec<Condition> = conditions.iter().filter(|c| c.is_numeric()).cloned().collect();
        let nu = match self.cfg.iv_percentile {
            Some(k) if numeric.len() >= 2 => {
                let mut ivs = Vec::with_capacity(numeric.len());
                for c in &numeric {
                    ivs.push(interclass_variance_of_rows(self.rows_of(c)?, y));
                }
                percentile(&mut ivs, k)
            }
            _ => f64::NEG_INFINITY,
        };
        let mut universe = self.categorical_universe.clone();
        universe.extend(numeric.iter().cloned());
        universe.sort();

        for (i, ext) in conditions.iter().enumerate() {
            if p.constrains(&ext.attribute) {
                continue;
            }
            let refined = p.with(ext.clone())?;
            let rows = intersect_sorted(p_rows, self.rows_of(ext)?);
            if rows.len() < self.min_count {
                self.record(&refined, rows.len(), 0.0, NodeDecision::PrunedSupport);
                continue;
            }
            let iv = interclass_variance_of_rows(&rows, y);
            if !(iv > nu) {
                self.record(&refined, rows.len(), iv, NodeDecision::PrunedIv);
                continue;
            }
            let closed = self.close(&refined, &rows, &universe)?;
            if !leftmost_parent_check(p, ext, &closed) || !self.visited.insert(closed.key()) {
                self.record(&closed, rows.len(), iv, NodeDecision::PrunedLeftmost);
                continue;
            }
            self.stats.visited += 1;
            self.stats.visited_patterns.push(closed.clone());

            let rule = self.rule_for(&closed, &rows)?;
            let parents = self.parent_rules(&closed, &rows, &universe)?;
            let parent_refs: Vec<&HybridRule> = parents.iter().collect();
            let accepted = occam_test(&rule, &parent_refs, &rule.fitted.holdout_rows, self.d, self.cfg.metric)?;
            if accepted {
                self.record(&closed, rows.len(), iv, NodeDecision::Accepted);
                self.rules.push(rule);
            } else {
                self.record(&closed, rows.len(), iv, NodeDecision::RejectedOccam);
            }
            if !(accepted || self.cfg.recurse_on_rejection) {
                continue;
            }
            let mut child: Vec<Condition> = conditions[i + 1..]
                .iter()
                .filter(|c| !c.is_numeric() && !closed.constrains(&c.attribute))
                .cloned()
                .collect();
            for attr in self.d.numeric_features() {
                if !closed.constrains(attr) {
                    child.extend(frequent_intervals(attr, &rows, self.d, self.min_count, self.cfg.support_scope)?);
                }
            }
            self.explore(&closed, &rows, child)?;
        }
        Ok(())
    }
}

/// Depth-first enumeration of candidate rules below the empty pattern,
/// starting from `init_conditions` (see [`hipar_init`]).
pub fn enumerate_candidates(
    d: &Dataset,
    default_rule: &HybridRule,
    init_conditions: &[Condition],
    cfg: &EnumConfig,
) -> Result<CandidateSet> {
    cfg.validate(d.n_rows())?;
    if !default_rule.pattern.is_top() {
        return Err(Error::Invariant("the default rule must have the empty pattern".into()));
    }
    for c in init_conditions {
        c.check_kind(d)?;
    }
    let mut categorical_universe: Vec<Condition> = init_conditions.iter().filter(|c| !c.is_numeric()).cloned().collect();
    categorical_universe.sort();
    let mut en = Enumerator {
        d,
        cfg,
        min_count: cfg.min_count(d.n_rows()),
        categorical_universe,
        condition_rows: HashMap::new(),
        memo: HashMap::from([(String::new(), default_rule.clone())]),
        visited: HashSet::new(),
        stats: EnumStats::default(),
        trace: Vec::new(),
        rules: Vec::new(),
    };
    en.explore(&Pattern::top(), &d.all_rows(), init_conditions.to_vec())?;
    Ok(CandidateSet { rules: en.rules, default_rule: default_rule.clone(), stats: en.stats, trace: en.trace })
}
