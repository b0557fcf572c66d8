//! Training-mixture ratios with per-dataset caps, and a reproducible sampler.
//!
//! [`solve_mixture`] assigns ratios proportional to dataset size, fixes any
//! dataset whose share exceeds its cap at the cap, and redistributes the
//! remainder proportionally over the rest until no cap is violated.

mod table;

pub use table::{format_mixture_table, parse_mixture_table, ParsedTable, TABLE_HEADER};

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::rng::substream;
use crate::schema::MixtureEntry;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MixtureError {
    #[error("dataset `{0}` has non-positive or non-finite size {1}")]
    Size(String, f64),
    #[error("duplicate dataset `{0}`")]
    Duplicate(String),
    #[error("cap for `{0}` must lie in (0, 1), got {1}")]
    Cap(String, f64),
    #[error("cap refers to unknown dataset `{0}`")]
    UnknownCap(String),
    #[error("caps are infeasible: every dataset is capped and the caps sum to {0} < 1")]
    Infeasible(f64),
    #[error("empty mixture")]
    Empty,
    #[error("ratios must be positive and sum to 1, got sum {0}")]
    Ratios(f64),
    #[error("mixture table: {0}")]
    Table(String),
}

impl MixtureError {
    pub fn code(&self) -> &'static str {
        match self {
            MixtureError::Size(..) => "size",
            MixtureError::Duplicate(_) => "duplicate",
            MixtureError::Cap(..) => "cap",
            MixtureError::UnknownCap(_) => "unknown-cap",
            MixtureError::Infeasible(_) => "infeasible",
            MixtureError::Empty => "empty",
            MixtureError::Ratios(_) => "ratios",
            MixtureError::Table(_) => "table",
        }
    }
}

/// Dataset sizes (hours, frames...), optional caps, and the sampling seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub entries: Vec<(String, f64)>,
    pub caps: BTreeMap<String, f64>,
    pub seed: u64,
}

/// Water-filling solution of a capped proportional mixture, in input order.
pub fn solve_mixture(spec: &MixtureSpec) -> Result<Vec<MixtureEntry>, MixtureError> {
    if spec.entries.is_empty() {
        return Err(MixtureError::Empty);
    }
    let mut seen = BTreeSet::new();
    for (id, size) in &spec.entries {
        if !seen.insert(id.as_str()) {
            return Err(MixtureError::Duplicate(id.clone()));
        }
        if !(size.is_finite() && *size > 0.0) {
            return Err(MixtureError::Size(id.clone(), *size));
        }
    }
    for (id, cap) in &spec.caps {
        if !seen.contains(id.as_str()) {
            return Err(MixtureError::UnknownCap(id.clone()));
        }
        if !(*cap > 0.0 && *cap < 1.0) {
            return Err(MixtureError::Cap(id.clone(), *cap));
        }
    }

    let n = spec.entries.len();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    loop {
        let residual = 1.0 - fixed.iter().flatten().sum::<f64>();
        let free_size: f64 = spec.entries.iter().zip(&fixed).filter(|(_, f)| f.is_none()).map(|((_, s), _)| s).sum();
        if free_size == 0.0 {
            if residual.abs() > 1e-12 {
                return Err(MixtureError::Infeasible(1.0 - residual));
            }
            break;
        }
        let mut violated = false;
        for (i, (id, size)) in spec.entries.iter().enumerate() {
            if fixed[i].is_some() {
                continue;
            }
            if let Some(cap) = spec.caps.get(id) {
                if residual * size / free_size > *cap {
                    fixed[i] = Some(*cap);
                    violated = true;
                }
            }
        }
        if !violated {
            return Ok(spec
                .entries
                .iter()
                .zip(&fixed)
                .map(|((id, size), f)| MixtureEntry {
                    dataset_id: id.clone(),
                    ratio: f.unwrap_or(residual * size / free_size),
                })
                .collect());
        }
    }
    Ok(spec
        .entries
        .iter()
        .zip(&fixed)
        .map(|((id, _), f)| MixtureEntry { dataset_id: id.clone(), ratio: f.expect("all fixed") })
        .collect())
}

/// Inverse-CDF sampler over a ratio table.
#[derive(Debug, Clone)]
pub struct MixtureSampler {
    cdf: Vec<f64>,
    seed: u64,
}

impl MixtureSampler {
    pub fn new(entries: &[MixtureEntry], seed: u64) -> Result<Self, MixtureError> {
        if entries.is_empty() {
            return Err(MixtureError::Empty);
        }
        let sum: f64 = entries.iter().map(|e| e.ratio).sum();
        if entries.iter().any(|e| !(e.ratio > 0.0 && e.ratio <= 1.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(MixtureError::Ratios(sum));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = entries
            .iter()
            .map(|e| {
                acc += e.ratio;
                acc
            })
            .collect();
        *cdf.last_mut().expect("non-empty") = 1.0;
        Ok(MixtureSampler { cdf, seed })
    }

    /// Index drawn for uniform variate `u ∈ [0, 1)`.
    pub fn pick(&self, u: f64) -> usize {
        self.cdf.partition_point(|c| *c <= u).min(self.cdf.len() - 1)
    }

    /// Endless index stream for worker `stream`; workers never overlap.
    pub fn stream(&self, stream: u64) -> impl Iterator<Item = usize> + '_ {
        let mut rng = substream(self.seed, "mixture", stream);
        std::iter::repeat_with(move || self.pick(rng.random::<f64>()))
    }
}

/// First `n_steps` dataset indices (into `ratios`) of the stream for `seed`.
pub fn sample_stream(ratios: &[MixtureEntry], seed: u64, n_steps: usize) -> Result<Vec<usize>, MixtureError> {
    let sampler = MixtureSampler::new(ratios, seed)?;
    Ok(sampler.stream(0).take(n_steps).collect())
}
