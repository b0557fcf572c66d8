use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Benchtop,
    Tissue,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Benchtop => "benchtop",
            Category::Tissue => "tissue",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-frame fidelity of one rollout (one episode under one seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutMetricSeries {
    pub dataset_id: String,
    pub episode_id: String,
    pub seed: u64,
    pub chunk_size: usize,
    pub chunk_count: usize,
    pub l1: Vec<f64>,
    pub ssim: Vec<f64>,
}

impl RolloutMetricSeries {
    pub fn frames(&self) -> usize {
        self.chunk_size * self.chunk_count
    }

    pub fn chunk_index(&self, frame: usize) -> usize {
        frame / self.chunk_size
    }

    /// True for the first frame generated after re-conditioning
    /// (frames 12, 24, ... for 12-frame chunks).
    pub fn is_chunk_boundary(&self, frame: usize) -> bool {
        frame > 0 && frame.is_multiple_of(self.chunk_size)
    }

    pub fn check(&self) -> Result<(), EvalError> {
        let f = self.frames();
        if self.l1.len() != f || self.ssim.len() != f {
            return Err(EvalError::Shape(format!(
                "series {}/{}: expected {f} frames, got l1 {} and ssim {}",
                self.episode_id,
                self.seed,
                self.l1.len(),
                self.ssim.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurves {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: Category,
    pub seeds: usize,
    pub series: usize,
    pub l1: MetricCurves,
    pub ssim: MetricCurves,
}

fn curves(seed_means: &[Vec<f64>]) -> MetricCurves {
    let frames = seed_means[0].len();
    let s = seed_means.len() as f64;
    let mut mean = vec![0.0; frames];
    let mut std = vec![0.0; frames];
    for f in 0..frames {
        // Shifted by the first seed so identical seed means give an exact mean
        // and a zero spread.
        let base = seed_means[0][f];
        let m = base + seed_means.iter().map(|c| c[f] - base).sum::<f64>() / s;
        let var = seed_means.iter().map(|c| (c[f] - m).powi(2)).sum::<f64>() / s;
        mean[f] = m;
        std[f] = var.sqrt();
    }
    MetricCurves { mean, std }
}

/// Frame-wise mean over episodes within each seed, then mean and population
/// standard deviation across the seed-level means, per category.
///
/// Every category named in `categories` must receive at least one series.
pub fn aggregate_rollouts(
    series: &[RolloutMetricSeries],
    categories: &BTreeMap<String, Category>,
) -> Result<Vec<CategorySummary>, EvalError> {
    let first = series.first().ok_or(EvalError::NoSeries)?;
    let frames = first.l1.len();
    // category -> seed -> (sum l1, sum ssim, episodes)
    type SeedSums = BTreeMap<u64, (Vec<f64>, Vec<f64>, usize)>;
    let mut grouped: BTreeMap<Category, (SeedSums, usize)> = BTreeMap::new();
    for s in series {
        s.check()?;
        if s.l1.len() != frames {
            return Err(EvalError::Shape(format!(
                "series {}/{} has {} frames, expected {frames}",
                s.episode_id,
                s.seed,
                s.l1.len()
            )));
        }
        let cat = *categories.get(&s.dataset_id).ok_or_else(|| EvalError::UnmappedDataset(s.dataset_id.clone()))?;
        let (seeds, count) = grouped.entry(cat).or_default();
        *count += 1;
        let entry = seeds.entry(s.seed).or_insert_with(|| (vec![0.0; frames], vec![0.0; frames], 0));
        entry.0.iter_mut().zip(&s.l1).for_each(|(a, v)| *a += v);
        entry.1.iter_mut().zip(&s.ssim).for_each(|(a, v)| *a += v);
        entry.2 += 1;
    }
    for cat in categories.values() {
        if !grouped.contains_key(cat) {
            return Err(EvalError::EmptyCategory(*cat));
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(category, (seeds, count))| {
            let (l1_means, ssim_means): (Vec<_>, Vec<_>) = seeds
                .values()
                .map(|(l1, ssim, n)| {
                    let n = *n as f64;
                    (l1.iter().map(|v| v / n).collect::<Vec<_>>(), ssim.iter().map(|v| v / n).collect::<Vec<_>>())
                })
                .unzip();
            CategorySummary {
                category,
                seeds: seeds.len(),
                series: count,
                l1: curves(&l1_means),
                ssim: curves(&ssim_means),
            }
        })
        .collect())
}
