//! Rule selection as a 0-1 quadratic program.
//!
//! Each candidate r gets a reward `alpha_r = s_r^sigma / e_r` from its
//! normalized support and error; every chosen pair pays
//! `omega * J(r, q) * (alpha_r + alpha_q)` where J is the Jaccard overlap of
//! the two regions. The objective `sum(-alpha_r x_r) + sum(w_rq x_r x_q)` is
//! minimized exactly by branch and bound for small candidate sets and by
//! multi-start local search otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::enumeration::HybridRule;
use crate::error::{Error, Result};
use crate::pattern::jaccard_rows;

/// Largest candidate count solved by branch and bound.
pub const EXACT_LIMIT: usize = 25;
/// Random restarts of the local search.
pub const LOCAL_SEARCH_STARTS: usize = 16;
/// Objective values closer than this are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Exponent on the normalized support.
    pub support_bias: f64,
    /// Weight of the overlap penalty.
    pub overlap_bias: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { support_bias: 1.0, overlap_bias: 1.0 }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.support_bias.is_finite() && self.support_bias >= 0.0) {
            return Err(Error::OutOfRange(format!("support bias {} must be a finite value >= 0", self.support_bias)));
        }
        if !(self.overlap_bias.is_finite() && self.overlap_bias >= 0.0) {
            return Err(Error::OutOfRange(format!("overlap bias {} must be a finite value >= 0", self.overlap_bias)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Exact,
    LocalSearch,
    TopQ,
}

/// A 0-1 program over candidates sorted by canonical key.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProblem {
    pub keys: Vec<String>,
    pub alpha: Vec<f64>,
    /// Symmetric pair penalties with a zero diagonal.
    pub weights: Vec<Vec<f64>>,
}

impl SelectionProblem {
    /// Builds a problem from raw rewards and pair penalties. Keys must be
    /// strictly increasing; penalties must be symmetric and non-negative.
    pub fn new(keys: Vec<String>, alpha: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let n = keys.len();
        if alpha.len() != n || weights.len() != n || weights.iter().any(|r| r.len() != n) {
            return Err(Error::Invariant("selection problem dimensions disagree".into()));
        }
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("selection keys must be strictly increasing".into()));
        }
        for i in 0..n {
            if !alpha[i].is_finite() {
                return Err(Error::Invariant(format!("reward of candidate {i} is not finite")));
            }
            for j in 0..n {
                let w = weights[i][j];
                if !(w.is_finite() && w >= 0.0) || w != weights[j][i] || (i == j && w != 0.0) {
                    return Err(Error::Invariant(format!("invalid pair penalty at ({i}, {j})")));
                }
            }
        }
        Ok(SelectionProblem { keys, alpha, weights })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Objective of the chosen index set, summed in canonical order: rewards
    /// by index, then pairs `i < j`.
    pub fn objective(&self, chosen: &[usize]) -> f64 {
        let mut sorted = chosen.to_vec();
        sorted.sort_unstable();
        let mut total = 0.0;
        for &i in &sorted {
            total -= self.alpha[i];
        }
        for (a, &i) in sorted.iter().enumerate() {
            for &j in &sorted[a + 1..] {
                total += self.weights[i][j];
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Chosen indices, ascending.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub solver: Solver,
    /// Set when the solution is a certified optimum.
    pub proof: bool,
}

/// True iff `(a_obj, a)` beats `(b_obj, b)`: lower objective, then fewer
/// rules, then the lexicographically smaller index list.
pub fn better(a_obj: f64, a: &[usize], b_obj: f64, b: &[usize]) -> bool {
    if a_obj < b_obj - TIE_TOLERANCE {
        return true;
    }
    if a_obj > b_obj + TIE_TOLERANCE {
        return false;
    }
    (a.len(), a) < (b.len(), b)
}

struct BranchAndBound<'a> {
    problem: &'a SelectionProblem,
    chosen: Vec<usize>,
    best: Vec<usize>,
    best_obj: f64,
}

impl BranchAndBound<'_> {
    fn bound(&self, k: usize) -> f64 {
        (k..self.problem.len())
            .map(|j| {
                let gain = -self.problem.alpha[j] + self.chosen.iter().map(|&i| self.problem.weights[i][j]).sum::<f64>();
                gain.min(0.0)
            })
            .sum()
    }

    fn search(&mut self, k: usize, current: f64) {
        if current + self.bound(k) > self.best_obj + TIE_TOLERANCE {
            return;
        }
        if k == self.problem.len() {
            if self.chosen.is_empty() {
                return;
            }
            let obj = self.problem.objective(&self.chosen);
            if better(obj, &self.chosen, self.best_obj, &self.best) {
                self.best_obj = obj;
                self.best = self.chosen.clone();
            }
            return;
        }
        let delta = -self.problem.alpha[k] + self.chosen.iter().map(|&i| self.problem.weights[i][k]).sum::<f64>();
        self.chosen.push(k);
        self.search(k + 1, current + delta);
        self.chosen.pop();
        self.search(k + 1, current);
    }
}

/// The single candidate with the largest reward (smallest index on ties).
fn best_singleton(problem: &SelectionProblem) -> Vec<usize> {
    let mut best: Option<usize> = None;
    for k in 0..problem.len() {
        if best.is_none_or(|b| problem.alpha[k] > problem.alpha[b]) {
            best = Some(k);
        }
    }
    best.into_iter().collect()
}

/// Exact minimization over non-empty subsets by depth-first branch and
/// bound. The bound adds, for every undecided candidate, the most negative
/// change it could still contribute given the rules already chosen.
pub fn solve_exact(problem: &SelectionProblem) -> Solution {
    let start = best_singleton(problem);
    let best_obj = problem.objective(&start);
    let mut bb = BranchAndBound { problem, chosen: Vec::new(), best: start, best_obj };
    bb.search(0, 0.0);
    Solution { objective: problem.objective(&bb.best), chosen: bb.best, solver: Solver::Exact, proof: true }
}

fn flip_delta(problem: &SelectionProblem, x: &[bool], k: usize) -> f64 {
    let coupling: f64 = (0..problem.len()).filter(|&i| x[i] && i != k).map(|i| problem.weights[i][k]).sum();
    let add = -problem.alpha[k] + coupling;
    if x[k] {
        -add
    } else {
        add
    }
}

fn steepest_descent(problem: &SelectionProblem, mut x: Vec<bool>) -> Vec<usize> {
    loop {
        let mut best: Option<(f64, usize)> = None;
        for k in 0..problem.len() {
            let d = flip_delta(problem, &x, k);
            if d < -TIE_TOLERANCE && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, k));
            }
        }
        match best {
            Some((_, k)) => x[k] = !x[k],
            None => break,
        }
    }
    (0..problem.len()).filter(|&i| x[i]).collect()
}

/// Single-flip steepest descent from a greedy start and seeded random
/// starts; the best non-empty local optimum wins.
pub fn solve_local(problem: &SelectionProblem, seed: u64) -> Solution {
    let n = problem.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| problem.alpha[b].total_cmp(&problem.alpha[a]).then(a.cmp(&b)));
    let mut greedy = vec![false; n];
    for &k in &order {
        if flip_delta(problem, &greedy, k) < -TIE_TOLERANCE {
            greedy[k] = true;
        }
    }
    let mut starts = vec![greedy];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..LOCAL_SEARCH_STARTS {
        starts.push((0..n).map(|_| rng.random_bool(0.5)).collect());
    }
    let mut best = best_singleton(problem);
    let mut best_obj = problem.objective(&best);
    for start in starts {
        let chosen = steepest_descent(problem, start);
        if chosen.is_empty() {
            continue;
        }
        let obj = problem.objective(&chosen);
        if better(obj, &chosen, best_obj, &best) {
            best = chosen;
            best_obj = obj;
        }
    }
    Solution { chosen: best, objective: best_obj, solver: Solver::LocalSearch, proof: false }
}

/// Exact for at most [`EXACT_LIMIT`] candidates, local search beyond.
pub fn solve(problem: &SelectionProblem, seed: u64) -> Solution {
    if problem.len() <= EXACT_LIMIT {
        solve_exact(problem)
    } else {
        solve_local(problem, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedRule {
    pub rule: HybridRule,
    /// Error divided by the total error of all candidates.
    pub normalized_error: f64,
    pub normalized_support: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedRuleSet {
    /// Chosen rules in canonical key order.
    pub chosen: Vec<SelectedRule>,
    pub default_rule: HybridRule,
    pub objective_value: f64,
    pub solver: Solver,
    pub proof: bool,
}

/// Candidates in canonical order with their normalized scores.
#[derive(Debug, Clone)]
pub struct ScoredCandidates {
    pub rules: Vec<SelectedRule>,
    pub problem: SelectionProblem,
}

/// Scores a pool of rules and builds the 0-1 program over it.
pub fn build_problem(candidates: &[HybridRule], d: &Dataset, cfg: &SelectionConfig) -> Result<ScoredCandidates> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(Error::Invariant("selection needs at least one rule".into()));
    }
    if let Some(r) = candidates.iter().find(|r| !r.fitted.train_error.is_finite()) {
        return Err(Error::Invariant(format!("rule `{}` has a non-finite error", r.pattern)));
    }
    let mut rules: Vec<HybridRule> = candidates.to_vec();
    rules.sort_by_key(HybridRule::key);
    if rules.windows(2).any(|w| w[0].key() == w[1].key()) {
        return Err(Error::Invariant("duplicate candidate pattern".into()));
    }
    let n = rules.len();
    let floor = 1e-9 / n.max(1) as f64;
    let errors: Vec<f64> = rules.iter().map(|r| r.fitted.train_error.max(floor)).collect();
    let error_total: f64 = errors.iter().sum();
    let support_total: f64 = rules.iter().map(|r| r.support_abs as f64).sum();
    let mut scored = Vec::with_capacity(n);
    for (r, e) in rules.into_iter().zip(&errors) {
        let normalized_error = e / error_total;
        let normalized_support = r.support_abs as f64 / support_total;
        let alpha = normalized_support.powf(cfg.support_bias) / normalized_error;
        scored.push(SelectedRule { rule: r, normalized_error, normalized_support, alpha });
    }
    let regions: Vec<Vec<usize>> = scored.iter().map(|s| s.rule.pattern.rows(d)).collect::<Result<_>>()?;
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = cfg.overlap_bias * jaccard_rows(&regions[i], &regions[j]) * (scored[i].alpha + scored[j].alpha);
            weights[i][j] = w;
            weights[j][i] = w;
        }
    }
    let keys = scored.iter().map(|s| s.rule.key()).collect();
    let alpha = scored.iter().map(|s| s.alpha).collect();
    let problem = SelectionProblem::new(keys, alpha, weights)?;
    Ok(ScoredCandidates { rules: scored, problem })
}

fn pool(candidates: &[HybridRule], default_rule: &HybridRule) -> Vec<HybridRule> {
    let mut pool = candidates.to_vec();
    pool.push(default_rule.clone());
    pool
}

/// Solves the selection program over the candidates plus the default rule.
pub fn select(
    candidates: &[HybridRule],
    default_rule: &HybridRule,
    d: &Dataset,
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<SelectedRuleSet> {
    let scored = build_problem(&pool(candidates, default_rule), d, cfg)?;
    let solution = solve(&scored.problem, seed);
    let chosen = solution.chosen.iter().map(|&i| scored.rules[i].clone()).collect();
    Ok(SelectedRuleSet {
        chosen,
        default_rule: default_rule.clone(),
        objective_value: solution.objective,
        solver: solution.solver,
        proof: solution.proof,
    })
}

/// Keeps the `q` rules of the candidates plus the default rule with the
/// largest rewards, ignoring overlap.
pub fn select_top_q(
    candidates: &[HybridRule],
    default_rule: &HybridRule,
    d: &Dataset,
    cfg: &SelectionConfig,
    q: usize,
) -> Result<SelectedRuleSet> {
    let scored = build_problem(&pool(candidates, default_rule), d, cfg)?;
    if q == 0 || q > scored.rules.len() {
        return Err(Error::OutOfRange(format!("q = {q} must lie in [1, {}]", scored.rules.len())));
    }
    let mut order: Vec<usize> = (0..scored.rules.len()).collect();
    order.sort_by(|&a, &b| scored.problem.alpha[b].total_cmp(&scored.problem.alpha[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = order.into_iter().take(q).collect();
    picked.sort_unstable();
    Ok(SelectedRuleSet {
        objective_value: scored.problem.objective(&picked),
        chosen: picked.iter().map(|&i| scored.rules[i].clone()).collect(),
        default_rule: default_rule.clone(),
        solver: Solver::TopQ,
        proof: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{Condition, Pattern};
    use crate::regression::{ErrorMetric, FittedRuleModel, LinearModel};
    use crate::testing::table1;

    fn brute_force(p: &SelectionProblem) -> (f64, Vec<usize>) {
        let n = p.len();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let obj = p.objective(&set);
            if best.as_ref().is_none_or(|(b, bs)| better(obj, &set, *b, bs)) {
                best = Some((obj, set));
            }
        }
        best.unwrap()
    }

    fn random_problem(n: usize, seed: u64) -> SelectionProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.0..2.0) * (alpha[i] + alpha[j]) };
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        SelectionProblem::new((0..n).map(|i| format!("k{i:03}")).collect(), alpha, w).unwrap()
    }

    #[test]
    fn exact_matches_brute_force() {
        for seed in 0..40 {
            let p = random_problem(1 + (seed as usize % 10), seed);
            let s = solve_exact(&p);
            let (obj, set) = brute_force(&p);
            assert_eq!(s.chosen, set, "seed {seed}");
            assert!((s.objective - obj).abs() <= 1e-12);
            assert!(s.proof);
        }
    }

    #[test]
    fn local_search_is_a_local_optimum() {
        let p = random_problem(30, 9);
        let s = solve_local(&p, 1);
        assert!(!s.proof);
        let mut x = vec![false; p.len()];
        for &i in &s.chosen {
            x[i] = true;
        }
        for k in 0..p.len() {
            assert!(flip_delta(&p, &x, k) >= -TIE_TOLERANCE);
        }
        assert_eq!(solve(&p, 1).solver, Solver::LocalSearch);
    }

    #[test]
    fn local_search_close_to_exact_on_small() {
        for seed in 0..10 {
            let p = random_problem(10, 100 + seed);
            let exact = solve_exact(&p);
            let local = solve_local(&p, seed);
            assert!(local.objective >= exact.objective - 1e-12);
        }
    }

    #[test]
    fn disjoint_rules_all_chosen() {
        let p = SelectionProblem::new(vec!["a".into(), "b".into()], vec![1.0, 2.0], vec![vec![0.0; 2]; 2]).unwrap();
        assert_eq!(solve(&p, 0).chosen, vec![0, 1]);
    }

    #[test]
    fn identical_regions_keep_one() {
        // full overlap with omega = 1: the pair costs more than the weaker reward
        let p = SelectionProblem::new(vec!["a".into(), "b".into()], vec![1.0, 2.0], vec![vec![0.0, 3.0], vec![3.0, 0.0]])
            .unwrap();
        assert_eq!(solve(&p, 0).chosen, vec![1]);
    }

    #[test]
    fn ties_prefer_fewer_then_smaller_keys() {
        // {a} = {b} = -1, {a, b} = -1
        let p = SelectionProblem::new(vec!["a".into(), "b".into()], vec![1.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]])
            .unwrap();
        assert_eq!(solve_exact(&p).chosen, vec![0]);
    }

    #[test]
    fn tiny_rewards_still_choose_one() {
        let p = SelectionProblem::new(vec!["a".into(), "b".into()], vec![1e-15, 2e-15], vec![vec![0.0; 2]; 2]).unwrap();
        assert!(!solve_exact(&p).chosen.is_empty());
        assert!(!solve_local(&p, 0).chosen.is_empty());
    }

    fn constant_rule(d: &Dataset, value: &str, error: f64) -> HybridRule {
        let pattern = Pattern::new([Condition::equals("state", value)]).unwrap();
        let rows = pattern.rows(d).unwrap();
        HybridRule {
            is_default: false,
            support_abs: rows.len(),
            support_rel: rows.len() as f64 / d.n_rows() as f64,
            pattern,
            fitted: FittedRuleModel {
                model: LinearModel::constant(0.0),
                train_error: error,
                holdout_error: error,
                metric: ErrorMetric::Rmse,
                holdout_rows: rows,
            },
        }
    }

    #[test]
    fn normalization_examples() {
        let d = table1();
        // "good" and "very good" both cover two rows
        let pool = [constant_rule(&d, "good", 1.0), constant_rule(&d, "very good", 3.0)];
        let sc = build_problem(&pool, &d, &SelectionConfig::default()).unwrap();
        let e: Vec<f64> = sc.rules.iter().map(|r| r.normalized_error).collect();
        let s: Vec<f64> = sc.rules.iter().map(|r| r.normalized_support).collect();
        assert_eq!(e, vec![0.25, 0.75]);
        assert_eq!(s, vec![0.5, 0.5]);
        assert_eq!(sc.rules[0].alpha, 2.0);
        assert!((sc.rules[1].alpha - 2.0 / 3.0).abs() < 1e-15);

        let flat = build_problem(&pool, &d, &SelectionConfig { support_bias: 0.0, overlap_bias: 1.0 }).unwrap();
        assert_eq!(flat.rules[0].alpha, 4.0);

        let single = build_problem(&pool[..1], &d, &SelectionConfig::default()).unwrap();
        assert_eq!((single.rules[0].normalized_error, single.rules[0].normalized_support, single.rules[0].alpha), (1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_error_is_floored() {
        let d = table1();
        let pool = [constant_rule(&d, "good", 0.0), constant_rule(&d, "very good", 0.0)];
        let sc = build_problem(&pool, &d, &SelectionConfig::default()).unwrap();
        assert!(sc.rules.iter().all(|r| r.alpha.is_finite() && r.normalized_error == 0.5));
    }

    #[test]
    fn top_q_orders_by_reward() {
        let d = table1();
        let default = {
            let mut r = constant_rule(&d, "good", 1.0);
            r.pattern = Pattern::top();
            r.is_default = true;
            r.support_abs = 6;
            r
        };
        let pool = [constant_rule(&d, "good", 1.0), constant_rule(&d, "very good", 3.0)];
        let cfg = SelectionConfig::default();
        let all = select_top_q(&pool, &default, &d, &cfg, 3).unwrap();
        assert_eq!(all.chosen.len(), 3);
        let one = select_top_q(&pool, &default, &d, &cfg, 1).unwrap();
        let sc = build_problem(&[pool[0].clone(), pool[1].clone(), default.clone()], &d, &cfg).unwrap();
        let argmax = sc.rules.iter().max_by(|a, b| a.alpha.total_cmp(&b.alpha)).unwrap();
        assert_eq!(one.chosen[0].rule.key(), argmax.rule.key());
        assert!(select_top_q(&pool, &default, &d, &cfg, 0).is_err());
        assert!(select_top_q(&pool, &default, &d, &cfg, 4).is_err());
    }

    #[test]
    fn omega_zero_selects_everything() {
        let p = random_problem(8, 77);
        let free = SelectionProblem::new(p.keys.clone(), p.alpha.clone(), vec![vec![0.0; 8]; 8]).unwrap();
        assert_eq!(solve(&free, 0).chosen, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_problems_rejected() {
        assert!(SelectionProblem::new(vec!["b".into(), "a".into()], vec![1.0, 1.0], vec![vec![0.0; 2]; 2]).is_err());
        assert!(SelectionProblem::new(vec!["a".into(), "b".into()], vec![1.0, 1.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]])
            .is_err());
        assert!(SelectionConfig { support_bias: -1.0, overlap_bias: 1.0 }.validate().is_err());
    }
}
