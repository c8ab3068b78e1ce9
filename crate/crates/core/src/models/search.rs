//! Random hyperparameter search.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, Result};
use crate::parallel::par_map;
use crate::seed;

/// Sampling rule for one hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamRange {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    /// `exp(U(ln low, ln high))`, for rates.
    LogUniform { low: f64, high: f64 },
    /// Integers in `low..=high`.
    Int { low: i64, high: i64 },
    Choice { values: Vec<f64> },
}

impl ParamRange {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |why: &str| Err(ModelError::InvalidConfig(format!("search axis {name}: {why}")));
        match self {
            ParamRange::Fixed { value } if !value.is_finite() => bad("value must be finite"),
            ParamRange::Uniform { low, high } if !(low <= high && low.is_finite() && high.is_finite()) => bad("need low ≤ high"),
            ParamRange::LogUniform { low, high } if !(*low > 0.0 && low <= high && high.is_finite()) => bad("need 0 < low ≤ high"),
            ParamRange::Int { low, high } if low > high => bad("need low ≤ high"),
            ParamRange::Choice { values } if values.is_empty() => bad("no choices"),
            _ => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            ParamRange::Fixed { value } => *value,
            ParamRange::Uniform { low, high } if low == high => *low,
            ParamRange::Uniform { low, high } => rng.gen_range(*low..*high),
            ParamRange::LogUniform { low, high } if low == high => *low,
            ParamRange::LogUniform { low, high } => rng.gen_range(low.ln()..high.ln()).exp(),
            ParamRange::Int { low, high } => rng.gen_range(*low..=*high) as f64,
            ParamRange::Choice { values } => values[rng.gen_range(0..values.len())],
        }
    }
}

/// Named axes, sampled in name order.
pub type SearchSpace = BTreeMap<String, ParamRange>;
pub type TrialParams = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub params: TrialParams,
    pub score: f64,
}

/// Samples `trials` configurations from `space` (seeded), scores each with
/// `objective` (higher is better) on up to `jobs` threads, and returns the
/// best configuration (earliest on ties) plus the full trial log.
pub fn random_search<F>(space: &SearchSpace, trials: usize, seed: u64, jobs: usize, objective: F) -> Result<(TrialParams, Vec<Trial>)>
where
    F: Fn(&TrialParams) -> Result<f64> + Sync,
{
    if space.is_empty() {
        return Err(ModelError::EmptySpace);
    }
    if trials == 0 {
        return Err(ModelError::InvalidConfig("trials must be ≥ 1".into()));
    }
    for (name, range) in space {
        range.validate(name)?;
    }
    let mut rng = seed::rng(seed, "search");
    let configs: Vec<TrialParams> = (0..trials)
        .map(|_| space.iter().map(|(k, r)| (k.clone(), r.sample(&mut rng))).collect())
        .collect();
    let scores = par_map(&configs, jobs, &objective);
    let mut log = Vec::with_capacity(trials);
    for (index, (params, score)) in configs.into_iter().zip(scores).enumerate() {
        log.push(Trial {
            index,
            params,
            score: score?,
        });
    }
    let best = log
        .iter()
        .fold(None::<&Trial>, |best, t| match best {
            Some(b) if b.score >= t.score || t.score.is_nan() => Some(b),
            _ => Some(t),
        })
        .expect("at least one trial")
        .params
        .clone();
    Ok((best, log))
}
