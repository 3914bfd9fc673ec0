//! End-to-end fitting: init, enumeration, selection and predictor.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::enumeration::{enumerate_candidates, fit_default_rule, hipar_init, CandidateSet, EnumConfig, SupportScope};
use crate::error::{Error, Result};
use crate::prediction::Predictor;
use crate::regression::ErrorMetric;
use crate::selection::{select, select_top_q, SelectedRuleSet, SelectionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Overlap-penalized selection.
    #[default]
    Standard,
    /// Selection without the overlap penalty.
    F,
    /// The q candidates with the largest rewards.
    Sd,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "f" => Ok(Variant::F),
            "sd" => Ok(Variant::Sd),
            other => Err(Error::OutOfRange(format!("unknown variant `{other}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::F => "f",
            Variant::Sd => "sd",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub theta: f64,
    pub support_bias: f64,
    pub overlap_bias: f64,
    pub metric: ErrorMetric,
    pub variant: Variant,
    /// Rule count for the `sd` variant; defaults to the size of the
    /// standard selection on the same candidates.
    pub sd_q: Option<usize>,
    pub seed: u64,
    pub folds: usize,
    pub iv_percentile: Option<f64>,
    pub support_scope: SupportScope,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta: 0.1,
            support_bias: 1.0,
            overlap_bias: 1.0,
            metric: ErrorMetric::Rmse,
            variant: Variant::Standard,
            sd_q: None,
            seed: 0,
            folds: 10,
            iv_percentile: Some(85.0),
            support_scope: SupportScope::Dataset,
        }
    }
}

impl RunConfig {
    pub fn enum_config(&self) -> EnumConfig {
        EnumConfig {
            theta: self.theta,
            iv_percentile: self.iv_percentile,
            metric: self.metric,
            seed: self.seed,
            support_scope: self.support_scope,
            ..EnumConfig::default()
        }
    }

    pub fn selection_config(&self) -> SelectionConfig {
        let overlap_bias = if self.variant == Variant::F { 0.0 } else { self.overlap_bias };
        SelectionConfig { support_bias: self.support_bias, overlap_bias }
    }
}

#[derive(Debug, Clone)]
pub struct HiparModel {
    pub candidates: CandidateSet,
    pub selection: SelectedRuleSet,
    pub predictor: Predictor,
}

pub fn run_hipar(d: &Dataset, cfg: &RunConfig) -> Result<HiparModel> {
    let ecfg = cfg.enum_config();
    ecfg.validate(d.n_rows())?;
    let scfg = cfg.selection_config();
    scfg.validate()?;
    let default_rule = fit_default_rule(d, &ecfg)?;
    let init = hipar_init(d, &ecfg)?;
    let candidates = enumerate_candidates(d, &default_rule, &init, &ecfg)?;
    let selection = match cfg.variant {
        Variant::Standard | Variant::F => select(&candidates.rules, &default_rule, d, &scfg, cfg.seed)?,
        Variant::Sd => {
            let q = match cfg.sd_q {
                Some(q) => q,
                None => select(&candidates.rules, &default_rule, d, &scfg, cfg.seed)?.chosen.len(),
            };
            select_top_q(&candidates.rules, &default_rule, d, &scfg, q)?
        }
    };
    let predictor = Predictor::from_selection(&selection)?;
    log::debug!(
        "{} candidates, {} chosen ({:?})",
        candidates.rules.len(),
        selection.chosen.len(),
        selection.solver
    );
    Ok(HiparModel { candidates, selection, predictor })
}
