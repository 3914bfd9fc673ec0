//! Conditions, patterns and the region algebra built on them: support,
//! closure, interclass variance and Jaccard overlap.
//!
//! Regions are sorted row-index vectors. Intersections and containment tests
//! are linear merges.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Column, Dataset, Observation, ValueRef};
use crate::error::{Error, Result};
use crate::fmt_sig;

/// A numeric interval with explicit bound openness. Infinite bounds are
/// always open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "lower_bound")]
    pub lo: f64,
    #[serde(with = "upper_bound")]
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidInterval(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if (lo.is_infinite() && lo_closed) || (hi.is_infinite() && hi_closed) {
            return Err(Error::InvalidInterval("infinite bounds must be open".into()));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidInterval(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi, lo_closed, hi_closed })
    }

    /// `(-inf, hi)`
    pub fn below(hi: f64) -> Self {
        Interval { lo: f64::NEG_INFINITY, hi, lo_closed: false, hi_closed: false }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }

    /// `[lo, inf)`
    pub fn at_least(lo: f64) -> Self {
        Interval { lo, hi: f64::INFINITY, lo_closed: true, hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let under = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && under
    }

    fn exact_repr(&self) -> String {
        format!(
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.lo
            .total_cmp(&other.lo)
            .then(self.hi.total_cmp(&other.hi))
            .then(self.lo_closed.cmp(&other.lo_closed))
            .then(self.hi_closed.cmp(&other.hi_closed))
    }
}

/// Renders the three interval shapes used in rule files: `(-inf,a)`,
/// `[a,b]` and `(b,inf)`. Bound openness of finite bounds is not shown;
/// the JSON form carries it exactly.
impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (false, false) => write!(f, "(-inf,inf)"),
            (false, true) => write!(f, "(-inf,{})", fmt_sig(self.hi)),
            (true, false) => write!(f, "({},inf)", fmt_sig(self.lo)),
            (true, true) => write!(f, "[{},{}]", fmt_sig(self.lo), fmt_sig(self.hi)),
        }
    }
}

macro_rules! bound_serde {
    ($name:ident, $infinity:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
                if x.is_finite() {
                    s.serialize_some(x)
                } else {
                    s.serialize_none()
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($infinity))
            }
        }
    };
}

bound_serde!(lower_bound, f64::NEG_INFINITY);
bound_serde!(upper_bound, f64::INFINITY);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Predicate {
    Equals(String),
    Interval(Interval),
}

/// An atomic predicate on one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub predicate: Predicate,
}

impl Condition {
    pub fn equals(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Condition { attribute: attribute.into(), predicate: Predicate::Equals(value.into()) }
    }

    pub fn interval(attribute: impl Into<String>, interval: Interval) -> Self {
        Condition { attribute: attribute.into(), predicate: Predicate::Interval(interval) }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.predicate, Predicate::Interval(_))
    }

    pub fn matches<O: Observation + ?Sized>(&self, x: &O) -> Result<bool> {
        let value = x.get(&self.attribute).ok_or_else(|| Error::MissingAttribute(self.attribute.clone()))?;
        match (&self.predicate, value) {
            (Predicate::Equals(s), ValueRef::Symbol(v)) => Ok(s == v),
            (Predicate::Interval(i), ValueRef::Number(v)) => Ok(i.contains(v)),
            (Predicate::Equals(_), ValueRef::Number(_)) => Err(self.kind_mismatch("equality on a numerical value")),
            (Predicate::Interval(_), ValueRef::Symbol(_)) => Err(self.kind_mismatch("interval on a categorical value")),
        }
    }

    fn kind_mismatch(&self, what: &str) -> Error {
        Error::KindMismatch { attribute: self.attribute.clone(), message: what.to_string() }
    }

    /// Rows of `d` satisfying the condition, ascending.
    pub fn rows(&self, d: &Dataset) -> Result<Vec<usize>> {
        let column = d.column(&self.attribute).ok_or_else(|| Error::UnknownColumn(self.attribute.clone()))?;
        if d.attribute(&self.attribute).map(|a| a.role) == Some(crate::data::AttributeRole::Target) {
            return Err(self.kind_mismatch("conditions on the target are not allowed"));
        }
        match (&self.predicate, column) {
            (Predicate::Equals(s), Column::Categorical(v)) => {
                Ok(v.iter().enumerate().filter(|(_, x)| *x == s).map(|(i, _)| i).collect())
            }
            (Predicate::Interval(iv), Column::Numerical(v)) => {
                Ok(v.iter().enumerate().filter(|(_, x)| iv.contains(**x)).map(|(i, _)| i).collect())
            }
            (Predicate::Equals(_), _) => Err(self.kind_mismatch("equality on a numerical attribute")),
            (Predicate::Interval(_), _) => Err(self.kind_mismatch("interval on a categorical attribute")),
        }
    }

    pub fn check_kind(&self, d: &Dataset) -> Result<()> {
        let attr = d.attribute(&self.attribute).ok_or_else(|| Error::UnknownColumn(self.attribute.clone()))?;
        match (&self.predicate, attr.kind) {
            (Predicate::Equals(_), AttributeKind::Categorical) | (Predicate::Interval(_), AttributeKind::Numerical) => Ok(()),
            _ => Err(self.kind_mismatch("predicate does not fit the attribute kind")),
        }
    }

    /// Exact, ordering-stable textual key.
    pub fn key(&self) -> String {
        match &self.predicate {
            Predicate::Equals(s) => format!("{}=\"{}\"", self.attribute, s),
            Predicate::Interval(i) => format!("{} in {}", self.attribute, i.exact_repr()),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.predicate {
            Predicate::Equals(s) => write!(f, "{}=\"{}\"", self.attribute, s),
            Predicate::Interval(i) => write!(f, "{} in {}", self.attribute, i),
        }
    }
}

impl Eq for Condition {}

impl Ord for Condition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.attribute.cmp(&other.attribute).then_with(|| match (&self.predicate, &other.predicate) {
            (Predicate::Equals(a), Predicate::Equals(b)) => a.cmp(b),
            (Predicate::Interval(a), Predicate::Interval(b)) => a.total_cmp(b),
            (Predicate::Equals(_), Predicate::Interval(_)) => Ordering::Less,
            (Predicate::Interval(_), Predicate::Equals(_)) => Ordering::Greater,
        })
    }
}

impl PartialOrd for Condition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Condition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.attribute.hash(state);
        match &self.predicate {
            Predicate::Equals(s) => {
                0u8.hash(state);
                s.hash(state);
            }
            Predicate::Interval(i) => {
                1u8.hash(state);
                (i.lo + 0.0).to_bits().hash(state);
                (i.hi + 0.0).to_bits().hash(state);
                i.lo_closed.hash(state);
                i.hi_closed.hash(state);
            }
        }
    }
}

/// A conjunction of conditions, at most one per attribute, kept in canonical
/// order. The empty pattern matches every row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pattern {
    conditions: Vec<Condition>,
}

impl Pattern {
    pub fn top() -> Self {
        Pattern::default()
    }

    pub fn new(conditions: impl IntoIterator<Item = Condition>) -> Result<Self> {
        let mut p = Pattern::top();
        for c in conditions {
            p = p.with(c)?;
        }
        Ok(p)
    }

    /// `self ∧ c`. Adding a condition that is already present is a no-op;
    /// a second condition on an already constrained attribute is an error.
    pub fn with(&self, c: Condition) -> Result<Self> {
        if self.conditions.contains(&c) {
            return Ok(self.clone());
        }
        if self.constrains(&c.attribute) {
            return Err(Error::DuplicateAttribute(c.attribute));
        }
        let mut conditions = self.conditions.clone();
        let at = conditions.partition_point(|x| x < &c);
        conditions.insert(at, c);
        Ok(Pattern { conditions })
    }

    pub fn without(&self, c: &Condition) -> Self {
        Pattern { conditions: self.conditions.iter().filter(|x| *x != c).cloned().collect() }
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn is_top(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn contains(&self, c: &Condition) -> bool {
        self.conditions.binary_search(c).is_ok()
    }

    pub fn constrains(&self, attribute: &str) -> bool {
        self.conditions.iter().any(|c| c.attribute == attribute)
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.conditions.iter().map(|c| c.attribute.as_str())
    }

    pub fn matches<O: Observation + ?Sized>(&self, x: &O) -> Result<bool> {
        for c in &self.conditions {
            if !c.matches(x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Ordering-independent identifier; the empty pattern's key is `""`.
    pub fn key(&self) -> String {
        self.conditions.iter().map(Condition::key).collect::<Vec<_>>().join(" & ")
    }

    /// Rows of `d` matched by the pattern, ascending.
    pub fn rows(&self, d: &Dataset) -> Result<Vec<usize>> {
        let mut rows = d.all_rows();
        for c in &self.conditions {
            rows = intersect_sorted(&rows, &c.rows(d)?);
        }
        Ok(rows)
    }

    pub fn region(&self, d: &Dataset) -> Result<Region> {
        Ok(Region { pattern: self.clone(), rows: self.rows(d)? })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conditions.is_empty() {
            return write!(f, "TRUE");
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A pattern together with the rows it matches.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub pattern: Pattern,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub absolute: usize,
    pub relative: f64,
}

pub fn support(p: &Pattern, d: &Dataset) -> Result<Support> {
    let absolute = p.rows(d)?.len();
    Ok(Support { absolute, relative: absolute as f64 / d.n_rows() as f64 })
}

/// `p` extended with every condition of `universe` that holds on all of
/// `p`'s rows. Universe conditions on attributes `p` already constrains are
/// skipped.
pub fn closure(p: &Pattern, d: &Dataset, universe: &[Condition]) -> Result<Pattern> {
    let rows = p.rows(d)?;
    if rows.is_empty() {
        return Err(Error::EmptyRegion(p.to_string()));
    }
    let mut closed = p.clone();
    for c in universe {
        if closed.contains(c) || closed.constrains(&c.attribute) {
            continue;
        }
        if is_sorted_subset(&rows, &c.rows(d)?) {
            closed = closed.with(c.clone())?;
        }
    }
    Ok(closed)
}

/// Interclass variance of `p`'s region w.r.t. the target of `d`. Zero when
/// the region or its complement is empty.
pub fn interclass_variance(p: &Pattern, d: &Dataset) -> Result<f64> {
    Ok(interclass_variance_of_rows(&p.rows(d)?, d.target_values()))
}

/// Interclass variance of the sorted region `rows` inside the full target
/// vector `y`.
pub fn interclass_variance_of_rows(rows: &[usize], y: &[f64]) -> f64 {
    let n = y.len();
    let k = rows.len();
    if k == 0 || k >= n {
        return 0.0;
    }
    let total: f64 = y.iter().sum();
    let inside: f64 = rows.iter().map(|&r| y[r]).sum();
    let mu = total / n as f64;
    let mu_in = inside / k as f64;
    let mu_out = (total - inside) / (n - k) as f64;
    k as f64 * (mu - mu_in).powi(2) + (n - k) as f64 * (mu - mu_out).powi(2)
}

pub fn jaccard(p: &Pattern, q: &Pattern, d: &Dataset) -> Result<f64> {
    Ok(jaccard_rows(&p.rows(d)?, &q.rows(d)?))
}

/// `|a ∩ b| / |a ∪ b|` for sorted index sets; zero when both are empty.
pub fn jaccard_rows(a: &[usize], b: &[usize]) -> f64 {
    let inter = intersection_size(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// True iff every element of sorted `a` occurs in sorted `b`.
pub fn is_sorted_subset(a: &[usize], b: &[usize]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Record, Value};
    use crate::testing::table1;

    fn ptype(v: &str) -> Condition {
        Condition::equals("property-type", v)
    }

    fn state(v: &str) -> Condition {
        Condition::equals("state", v)
    }

    fn surface_upto_60() -> Condition {
        Condition::interval("surface", Interval::new(f64::NEG_INFINITY, 60.0, false, true).unwrap())
    }

    fn categorical_universe() -> Vec<Condition> {
        vec![ptype("apartment"), ptype("cottage"), state("excellent"), state("good"), state("very good")]
    }

    #[test]
    fn matches_on_table1_rows() {
        let d = table1();
        assert!(ptype("cottage").matches(&d.row(0)).unwrap());
        assert!(!surface_upto_60().matches(&d.row(0)).unwrap());
        assert!(Pattern::top().matches(&d.row(3)).unwrap());
        let bad = Condition::equals("surface", "120");
        assert!(matches!(bad.matches(&d.row(0)), Err(Error::KindMismatch { .. })));
        let rec = Record::new().with("property-type", Value::Symbol("castle".into()));
        assert!(!ptype("cottage").matches(&rec).unwrap());
        assert!(matches!(state("good").matches(&rec), Err(Error::MissingAttribute(_))));
    }

    #[test]
    fn support_on_table1() {
        let d = table1();
        let p = Pattern::new([ptype("cottage"), surface_upto_60()]).unwrap();
        let s = support(&p, &d).unwrap();
        assert_eq!(s.absolute, 2);
        assert_eq!(s.relative, 2.0 / 6.0);
        assert_eq!(support(&Pattern::top(), &d).unwrap().absolute, 6);
        let apt = support(&Pattern::new([ptype("apartment")]).unwrap(), &d).unwrap();
        assert_eq!((apt.absolute, apt.relative), (3, 0.5));
    }

    #[test]
    fn closure_on_table1() {
        let d = table1();
        let u = categorical_universe();
        let good = Pattern::new([state("good")]).unwrap();
        let closed = closure(&good, &d, &u).unwrap();
        assert_eq!(closed, Pattern::new([state("good"), ptype("apartment")]).unwrap());
        assert_eq!(closure(&closed, &d, &u).unwrap(), closed);
        let empty = Pattern::new([ptype("cottage"), state("good")]).unwrap();
        assert!(matches!(closure(&empty, &d, &u), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn interclass_variance_on_table1() {
        let d = table1();
        let iv = interclass_variance(&Pattern::new([state("good")]).unwrap(), &d).unwrap();
        // 2·(1855/6 − 132.5)² + 4·(1855/6 − 397.5)²
        let mu = 1855.0 / 6.0;
        let expected = 2.0 * (mu - 132.5f64).powi(2) + 4.0 * (mu - 397.5f64).powi(2);
        assert!((iv - expected).abs() < 1e-9);
        assert!((iv - 93633.333).abs() < 0.01);
        assert_eq!(interclass_variance(&Pattern::top(), &d).unwrap(), 0.0);
        assert_eq!(interclass_variance_of_rows(&[0, 1], &[1.0, 5.0, 5.0, 1.0]), 0.0);
    }

    #[test]
    fn jaccard_on_table1() {
        let d = table1();
        let p = Pattern::new([ptype("cottage")]).unwrap();
        let q = Pattern::new([state("very good")]).unwrap();
        assert!((jaccard(&p, &q, &d).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&p, &p, &d).unwrap(), 1.0);
        let r = Pattern::new([ptype("apartment")]).unwrap();
        assert_eq!(jaccard(&p, &r, &d).unwrap(), 0.0);
        assert_eq!(jaccard_rows(&[], &[]), 0.0);
    }

    #[test]
    fn rendering_grammar() {
        let p = Pattern::new([
            Condition::interval("b", Interval::below(2.5)),
            Condition::equals("a", "x y"),
            Condition::interval("c", Interval::half_open(1.0, 7.0)),
            Condition::interval("d", Interval::at_least(0.125)),
        ])
        .unwrap();
        assert_eq!(p.to_string(), "a=\"x y\" & b in (-inf,2.5) & c in [1,7] & d in (0.125,inf)");
        assert_eq!(Pattern::top().to_string(), "TRUE");
        assert_eq!(Pattern::top().key(), "");
    }

    #[test]
    fn one_condition_per_attribute() {
        let p = Pattern::new([ptype("cottage")]).unwrap();
        assert!(matches!(p.with(ptype("apartment")), Err(Error::DuplicateAttribute(_))));
        assert_eq!(p.with(ptype("cottage")).unwrap(), p);
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(2.0, 1.0, true, false).is_err());
        assert!(Interval::new(f64::NEG_INFINITY, 1.0, true, false).is_err());
        let iv = Interval::half_open(1.0, 2.0);
        assert!(iv.contains(1.0) && !iv.contains(2.0));
    }

    #[test]
    fn interval_json_uses_null_for_infinity() {
        let c = Condition::interval("x", Interval::below(3.0));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"lo\":null"), "{json}");
    }

    #[test]
    fn sorted_set_helpers() {
        assert_eq!(intersect_sorted(&[1, 3, 5, 7], &[3, 4, 5]), vec![3, 5]);
        assert!(is_sorted_subset(&[2, 4], &[1, 2, 3, 4]));
        assert!(!is_sorted_subset(&[2, 5], &[1, 2, 3, 4]));
        assert!(is_sorted_subset(&[], &[1]));
    }
}
