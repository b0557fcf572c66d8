use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use super::{ChunkStatistics, NormError};

pub const DEFAULT_CLIP_BOUND: f64 = 5.0;
/// Lower bound on σ so constant dimensions (unused grippers, padding) map to 0.
pub const SIGMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerKind {
    TemporalZscoreClip,
    QuantileAffine,
}

#[derive(Debug, Clone)]
pub struct Normalizer {
    pub kind: NormalizerKind,
    pub stats: Arc<ChunkStatistics>,
    pub clip_bound: f64,
    sigma: Array2<f64>,
}

impl Normalizer {
    /// Per-step z-score with `[-5, 5]` clipping.
    pub fn temporal_zscore(stats: Arc<ChunkStatistics>) -> Self {
        let sigma = stats.std_dev().mapv(|s| s.max(SIGMA_FLOOR));
        Normalizer { kind: NormalizerKind::TemporalZscoreClip, stats, clip_bound: DEFAULT_CLIP_BOUND, sigma }
    }

    /// Affine map of `[q01, q99]` onto `[-1, 1]`.
    pub fn quantile(stats: Arc<ChunkStatistics>) -> Self {
        let sigma = Array2::ones(stats.shape());
        Normalizer { kind: NormalizerKind::QuantileAffine, stats, clip_bound: 1.0, sigma }
    }

    pub fn with_clip_bound(mut self, clip_bound: f64) -> Result<Self, NormError> {
        if !(clip_bound.is_finite() && clip_bound > 0.0) {
            return Err(NormError::Clip(clip_bound));
        }
        self.clip_bound = clip_bound;
        Ok(self)
    }

    /// Effective σ per cell, floored.
    pub fn sigma(&self) -> &Array2<f64> {
        &self.sigma
    }

    fn expect(&self, wanted: NormalizerKind, a: &ArrayView2<'_, f64>) -> Result<(), NormError> {
        if self.kind != wanted {
            return Err(NormError::Kind { wanted, actual: self.kind });
        }
        if a.dim() != self.stats.shape() {
            return Err(NormError::Shape { expected: self.stats.shape(), actual: a.dim() });
        }
        Ok(())
    }
}

/// `clamp((x − mean) / σ, −clip, clip)` per cell.
pub fn zscore_normalize(a: ArrayView2<'_, f64>, norm: &Normalizer) -> Result<Array2<f64>, NormError> {
    norm.expect(NormalizerKind::TemporalZscoreClip, &a)?;
    let clip = norm.clip_bound;
    Ok(Zip::from(&a).and(&norm.stats.mean).and(&norm.sigma).map_collect(|x, m, s| ((x - m) / s).clamp(-clip, clip)))
}

/// `mean + σ · y`; exact inverse of [`zscore_normalize`] where no clipping occurred.
pub fn zscore_denormalize(y: ArrayView2<'_, f64>, norm: &Normalizer) -> Result<Array2<f64>, NormError> {
    norm.expect(NormalizerKind::TemporalZscoreClip, &y)?;
    Ok(Zip::from(&y).and(&norm.stats.mean).and(&norm.sigma).map_collect(|y, m, s| m + s * y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileOutput {
    pub values: Array2<f64>,
    /// Cells whose `q01 == q99`; these map to 0.
    pub degenerate: Vec<(usize, usize)>,
}

/// `clamp(2 (x − q01) / (q99 − q01) − 1, −1, 1)` per cell.
pub fn quantile_normalize(a: ArrayView2<'_, f64>, norm: &Normalizer) -> Result<QuantileOutput, NormError> {
    norm.expect(NormalizerKind::QuantileAffine, &a)?;
    let (q01, q99) = (&norm.stats.q01, &norm.stats.q99);
    let mut degenerate = Vec::new();
    let values = Array2::from_shape_fn(a.dim(), |idx| {
        let (lo, hi) = (q01[idx], q99[idx]);
        if !(hi > lo) {
            degenerate.push(idx);
            return 0.0;
        }
        (2.0 * (a[idx] - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
    });
    if !degenerate.is_empty() {
        log::warn!("{} cells have q01 == q99 and were mapped to 0", degenerate.len());
    }
    Ok(QuantileOutput { values, degenerate })
}
