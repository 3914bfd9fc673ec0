//! Hierarchical pattern-aided regression.
//!
//! Mines compact sets of hybrid rules `pattern ⇒ y = f(X)` from tabular data
//! with categorical and numerical columns. The pipeline discretizes numerical
//! attributes, enumerates closed patterns depth-first while fitting sparse
//! local linear models, selects a low-overlap subset of rules with a 0-1
//! program and predicts with an error-weighted mix of the covering rules.
//!
//! ```no_run
//! use std::collections::BTreeSet;
//! use hipar_core::{data::Dataset, pipeline::{run_hipar, RunConfig}};
//!
//! let d = Dataset::load_csv("houses.csv", "price", &BTreeSet::new())?;
//! let model = run_hipar(&d, &RunConfig::default())?;
//! println!("{}", model.selection.chosen.len());
//! # Ok::<(), hipar_core::Error>(())
//! ```

pub mod data;
pub mod discretization;
pub mod enumeration;
pub mod error;
pub mod evaluation;
pub mod pattern;
pub mod pipeline;
pub mod prediction;
pub mod regression;
pub mod rules_io;
pub mod selection;
pub mod synthetic;

#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};

/// Formats a number with six significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(2.0), "2");
        assert_eq!(fmt_sig(12.345678), "12.3457");
        assert_eq!(fmt_sig(-0.0012345678), "-0.00123457");
        assert_eq!(fmt_sig(123456789.0), "123456789");
        assert_eq!(fmt_sig(1.5e-9), "1.5e-9");
        assert_eq!(fmt_sig(57.5), "57.5");
    }
}
