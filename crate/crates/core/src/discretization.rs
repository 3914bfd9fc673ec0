//! Supervised discretization of numerical attributes.
//!
//! The target is binarized at its median into large (LV) and small (SV)
//! values, then each numerical attribute is cut by recursive entropy
//! minimization with the Fayyad–Irani MDL stopping rule.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pattern::{Condition, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueClass {
    /// Value at or below the threshold.
    Small,
    /// Value strictly above the threshold.
    Large,
}

/// Median split of the target over a set of rows. `labels[i]` belongs to
/// `rows[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetBinarization {
    pub threshold: f64,
    pub rows: Vec<usize>,
    pub labels: Vec<ValueClass>,
}

impl TargetBinarization {
    pub fn label_of(&self, row: usize) -> Option<ValueClass> {
        self.rows.iter().position(|&r| r == row).map(|i| self.labels[i])
    }
}

/// Labels rows LV when the target exceeds its median over `rows`, SV
/// otherwise. Fails with [`Error::DegenerateTarget`] when either class would
/// be empty.
pub fn binarize_target(rows: &[usize], d: &Dataset) -> Result<TargetBinarization> {
    if rows.len() < 2 {
        return Err(Error::OutOfRange(format!("binarization needs at least 2 rows, got {}", rows.len())));
    }
    let y = d.target_values();
    let values: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let threshold = median(&values);
    let labels: Vec<ValueClass> = values
        .iter()
        .map(|&v| if v > threshold { ValueClass::Large } else { ValueClass::Small })
        .collect();
    let large = labels.iter().filter(|&&l| l == ValueClass::Large).count();
    if large == 0 || large == labels.len() {
        return Err(Error::DegenerateTarget);
    }
    Ok(TargetBinarization { threshold, rows: rows.to_vec(), labels })
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPointSet {
    pub attribute: String,
    /// Strictly increasing.
    pub cuts: Vec<f64>,
}

/// Base-2 entropy of a two-class count vector.
pub fn entropy(small: usize, large: usize) -> f64 {
    let n = (small + large) as f64;
    [small, large]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn classes_present(small: usize, large: usize) -> usize {
    (small > 0) as usize + (large > 0) as usize
}

/// Fayyad–Irani acceptance threshold on information gain for splitting a set
/// of `n` points with counts `whole` into `left` and `right`.
pub fn mdl_threshold(whole: (usize, usize), left: (usize, usize), right: (usize, usize)) -> f64 {
    let n = (whole.0 + whole.1) as f64;
    let k = classes_present(whole.0, whole.1) as f64;
    let k1 = classes_present(left.0, left.1) as f64;
    let k2 = classes_present(right.0, right.1) as f64;
    let delta = (3f64.powf(k) - 2.0).log2()
        - (k * entropy(whole.0, whole.1) - k1 * entropy(left.0, left.1) - k2 * entropy(right.0, right.1));
    ((n - 1.0).log2() + delta) / n
}

/// MDLP cut points of `attribute` over `binarization.rows`.
///
/// Candidate cuts are midpoints between consecutive distinct values whose
/// label sets differ. At each level the candidate with the lowest weighted
/// entropy is kept (leftmost on ties) when its gain passes the MDL test, and
/// both halves are split recursively.
pub fn mdlp_cuts(attribute: &str, d: &Dataset, binarization: &TargetBinarization) -> Result<CutPointSet> {
    let column = d.numeric_column(attribute).ok_or_else(|| Error::KindMismatch {
        attribute: attribute.to_string(),
        message: "discretization needs a numerical attribute".into(),
    })?;
    let mut points: Vec<(f64, ValueClass)> = binarization
        .rows
        .iter()
        .zip(&binarization.labels)
        .map(|(&r, &l)| (column[r], l))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1 as u8).cmp(&(b.1 as u8))));
    let groups = group_values(&points);
    let mut cuts = Vec::new();
    split(&groups, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    Ok(CutPointSet { attribute: attribute.to_string(), cuts })
}

/// Distinct attribute value with its (small, large) label counts.
#[derive(Debug, Clone, Copy)]
struct ValueGroup {
    value: f64,
    small: usize,
    large: usize,
}

fn group_values(sorted: &[(f64, ValueClass)]) -> Vec<ValueGroup> {
    let mut groups: Vec<ValueGroup> = Vec::new();
    for &(v, l) in sorted {
        let (s, g) = match l {
            ValueClass::Small => (1, 0),
            ValueClass::Large => (0, 1),
        };
        match groups.last_mut() {
            Some(last) if last.value == v => {
                last.small += s;
                last.large += g;
            }
            _ => groups.push(ValueGroup { value: v, small: s, large: g }),
        }
    }
    groups
}

fn is_boundary(a: &ValueGroup, b: &ValueGroup) -> bool {
    let pure = |g: &ValueGroup| match (g.small > 0, g.large > 0) {
        (true, false) => Some(ValueClass::Small),
        (false, true) => Some(ValueClass::Large),
        _ => None,
    };
    match (pure(a), pure(b)) {
        (Some(x), Some(y)) => x != y,
        _ => true,
    }
}

fn split(groups: &[ValueGroup], cuts: &mut Vec<f64>) {
    if groups.len() < 2 {
        return;
    }
    let total = groups.iter().fold((0, 0), |acc, g| (acc.0 + g.small, acc.1 + g.large));
    let n = (total.0 + total.1) as f64;
    let mut left = (0usize, 0usize);
    let mut best: Option<(usize, f64, (usize, usize))> = None;
    for i in 0..groups.len() - 1 {
        left.0 += groups[i].small;
        left.1 += groups[i].large;
        if !is_boundary(&groups[i], &groups[i + 1]) {
            continue;
        }
        let right = (total.0 - left.0, total.1 - left.1);
        let weighted = ((left.0 + left.1) as f64 * entropy(left.0, left.1)
            + (right.0 + right.1) as f64 * entropy(right.0, right.1))
            / n;
        if best.is_none_or(|(_, e, _)| weighted < e) {
            best = Some((i, weighted, left));
        }
    }
    let Some((i, weighted, left)) = best else { return };
    let right = (total.0 - left.0, total.1 - left.1);
    let gain = entropy(total.0, total.1) - weighted;
    if gain <= mdl_threshold(total, left, right) {
        return;
    }
    cuts.push((groups[i].value + groups[i + 1].value) / 2.0);
    split(&groups[..=i], cuts);
    split(&groups[i + 1..], cuts);
}

/// Interval conditions partitioning the real line at the given cuts:
/// `(-inf,c1)`, `[c1,c2)`, …, `[ck,inf)`. No cuts, no conditions.
pub fn conditions_from_cuts(cp: &CutPointSet) -> Vec<Condition> {
    if cp.cuts.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(cp.cuts.len() + 1);
    out.push(Condition::interval(&cp.attribute, Interval::below(cp.cuts[0])));
    for w in cp.cuts.windows(2) {
        out.push(Condition::interval(&cp.attribute, Interval::half_open(w[0], w[1])));
    }
    out.push(Condition::interval(&cp.attribute, Interval::at_least(*cp.cuts.last().unwrap())));
    out
}

/// Binarizes the target on `rows` and discretizes `attribute` there.
/// A degenerate target yields no conditions.
pub fn discretize(attribute: &str, rows: &[usize], d: &Dataset) -> Result<Vec<Condition>> {
    if rows.len() < 2 {
        return Ok(Vec::new());
    }
    match binarize_target(rows, d) {
        Ok(b) => Ok(conditions_from_cuts(&mdlp_cuts(attribute, d, &b)?)),
        Err(Error::DegenerateTarget) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use crate::testing::table1;

    fn dataset(x: &[f64], y: &[f64]) -> Dataset {
        Dataset::from_columns(
            vec![("x".into(), Column::Numerical(x.to_vec())), ("y".into(), Column::Numerical(y.to_vec()))],
            "y",
        )
        .unwrap()
    }

    #[test]
    fn table1_median_split() {
        let d = table1();
        let b = binarize_target(&d.all_rows(), &d).unwrap();
        assert_eq!(b.threshold, (320.0 + 350.0) / 2.0);
        use ValueClass::*;
        assert_eq!(b.labels, vec![Large, Large, Large, Small, Small, Small]);
    }

    #[test]
    fn degenerate_targets() {
        let d = dataset(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]);
        assert!(matches!(binarize_target(&d.all_rows(), &d), Err(Error::DegenerateTarget)));
        // median 2 with ties going to SV leaves LV empty
        let d = dataset(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]);
        assert!(matches!(binarize_target(&d.all_rows(), &d), Err(Error::DegenerateTarget)));
        let d = dataset(&[1.0, 2.0], &[1.0, 2.0]);
        let b = binarize_target(&d.all_rows(), &d).unwrap();
        assert_eq!(b.threshold, 1.5);
        assert_eq!(b.labels, vec![ValueClass::Small, ValueClass::Large]);
    }

    #[test]
    fn separated_labels_cut_once() {
        let x = [1.0, 2.0, 3.0, 4.0, 6.0, 7.0, 8.0, 9.0];
        let y = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let d = dataset(&x, &y);
        let b = binarize_target(&d.all_rows(), &d).unwrap();
        assert_eq!(mdlp_cuts("x", &d, &b).unwrap().cuts, vec![5.0]);
    }

    #[test]
    fn alternating_labels_no_cut() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let y = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let d = dataset(&x, &y);
        let b = binarize_target(&d.all_rows(), &d).unwrap();
        assert!(mdlp_cuts("x", &d, &b).unwrap().cuts.is_empty());
    }

    #[test]
    fn two_points() {
        // gain 1 vs threshold (log2(1) + log2(7) - 2) / 2 ≈ 0.404
        assert!(1.0 > mdl_threshold((1, 1), (1, 0), (0, 1)));
        let d = dataset(&[1.0, 3.0], &[0.0, 1.0]);
        let b = binarize_target(&d.all_rows(), &d).unwrap();
        assert_eq!(mdlp_cuts("x", &d, &b).unwrap().cuts, vec![2.0]);
    }

    #[test]
    fn conditions_partition_the_line() {
        let cp = CutPointSet { attribute: "a".into(), cuts: vec![2.0, 7.0] };
        let conds = conditions_from_cuts(&cp);
        assert_eq!(conds.len(), 3);
        assert_eq!(conds[1], Condition::interval("a", Interval::half_open(2.0, 7.0)));
        for x in [-1e9, 1.999, 2.0, 6.99, 7.0, 1e9] {
            let hits = conds
                .iter()
                .filter(|c| match &c.predicate {
                    crate::pattern::Predicate::Interval(i) => i.contains(x),
                    _ => false,
                })
                .count();
            assert_eq!(hits, 1, "value {x}");
        }
        let single = conditions_from_cuts(&CutPointSet { attribute: "a".into(), cuts: vec![5.0] });
        assert_eq!(single, vec![
            Condition::interval("a", Interval::below(5.0)),
            Condition::interval("a", Interval::at_least(5.0)),
        ]);
        assert!(conditions_from_cuts(&CutPointSet { attribute: "a".into(), cuts: vec![] }).is_empty());
    }

    #[test]
    fn categorical_attribute_rejected() {
        let d = table1();
        let b = binarize_target(&d.all_rows(), &d).unwrap();
        assert!(mdlp_cuts("state", &d, &b).is_err());
    }
}
