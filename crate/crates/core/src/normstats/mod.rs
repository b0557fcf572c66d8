//! Action normalization statistics.
//!
//! Statistics are kept per temporal step `h` and per action dimension `d` of
//! an `H × D` action chunk. Per-dataset statistics merge into per-configuration
//! statistics by mixture moments: `mean = Σ wᵢ meanᵢ`, `E[x²] = Σ wᵢ E[x²]ᵢ`,
//! which are exactly the moments of the weighted mixture distribution.

mod document;
mod normalize;
pub mod sketch;

pub use document::{Provenance, StatsDocument, STATS_VERSION};
pub use normalize::{
    quantile_normalize, zscore_denormalize, zscore_normalize, Normalizer, NormalizerKind, QuantileOutput,
    DEFAULT_CLIP_BOUND, SIGMA_FLOOR,
};
pub use sketch::QuantileSketch;

use ndarray::{Array2, ArrayView2};

#[derive(Debug, thiserror::Error)]
pub enum NormError {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape { expected: (usize, usize), actual: (usize, usize) },
    #[error("invalid merge weights: {0}")]
    Weights(String),
    #[error("normalizer kind {actual:?} cannot be used for {wanted:?}")]
    Kind { wanted: NormalizerKind, actual: NormalizerKind },
    #[error("invalid clip bound {0}")]
    Clip(f64),
    #[error("statistics document: {0}")]
    Document(String),
}

impl NormError {
    pub fn code(&self) -> &'static str {
        match self {
            NormError::Shape { .. } => "shape",
            NormError::Weights(_) => "weights",
            NormError::Kind { .. } => "kind",
            NormError::Clip(_) => "clip",
            NormError::Document(_) => "document",
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn absorb(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Per-`(h, d)` moments and tail quantiles of a set of action chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkStatistics {
    pub horizon: usize,
    pub dims: usize,
    pub count: u64,
    pub mean: Array2<f64>,
    /// Raw second moment `E[x²]`.
    pub m2: Array2<f64>,
    pub q01: Array2<f64>,
    pub q99: Array2<f64>,
    /// One sketch per cell, row-major over `(h, d)`.
    pub sketches: Vec<QuantileSketch>,
}

impl ChunkStatistics {
    /// Zero-count statistics; neutral under [`merge_statistics`].
    pub fn empty(horizon: usize, dims: usize) -> Self {
        ChunkStatistics {
            horizon,
            dims,
            count: 0,
            mean: Array2::zeros((horizon, dims)),
            m2: Array2::zeros((horizon, dims)),
            q01: Array2::zeros((horizon, dims)),
            q99: Array2::zeros((horizon, dims)),
            sketches: vec![QuantileSketch::new(); horizon * dims],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.horizon, self.dims)
    }

    /// `max(E[x²] − mean², 0)` per cell.
    pub fn variance(&self) -> Array2<f64> {
        ndarray::Zip::from(&self.m2).and(&self.mean).map_collect(|m2, m| (m2 - m * m).max(0.0))
    }

    pub fn std_dev(&self) -> Array2<f64> {
        self.variance().mapv(f64::sqrt)
    }
}

/// Streaming accumulator behind [`compute_statistics`].
///
/// Shards can be accumulated independently and combined with
/// [`StatsAccumulator::absorb`] before finishing.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    horizon: usize,
    dims: usize,
    count: u64,
    sums: Vec<CompensatedSum>,
    squares: Vec<CompensatedSum>,
    sketches: Vec<QuantileSketch>,
}

impl StatsAccumulator {
    pub fn new(horizon: usize, dims: usize) -> Self {
        let cells = horizon * dims;
        StatsAccumulator {
            horizon,
            dims,
            count: 0,
            sums: vec![CompensatedSum::default(); cells],
            squares: vec![CompensatedSum::default(); cells],
            sketches: vec![QuantileSketch::new(); cells],
        }
    }

    pub fn push(&mut self, chunk: ArrayView2<'_, f64>) -> Result<(), NormError> {
        if chunk.dim() != (self.horizon, self.dims) {
            return Err(NormError::Shape { expected: (self.horizon, self.dims), actual: chunk.dim() });
        }
        for (i, x) in chunk.iter().enumerate() {
            self.sums[i].add(*x);
            self.squares[i].add(x * x);
            self.sketches[i].insert(*x);
        }
        self.count += 1;
        Ok(())
    }

    pub fn absorb(&mut self, other: StatsAccumulator) -> Result<(), NormError> {
        if (other.horizon, other.dims) != (self.horizon, self.dims) {
            return Err(NormError::Shape { expected: (self.horizon, self.dims), actual: (other.horizon, other.dims) });
        }
        self.count += other.count;
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            a.absorb(b);
        }
        for (a, b) in self.squares.iter_mut().zip(other.squares) {
            a.absorb(b);
        }
        for (a, b) in self.sketches.iter_mut().zip(other.sketches) {
            a.absorb(b);
        }
        Ok(())
    }

    pub fn finish(self) -> ChunkStatistics {
        let shape = (self.horizon, self.dims);
        if self.count == 0 {
            return ChunkStatistics::empty(shape.0, shape.1);
        }
        let n = self.count as f64;
        let mean = Array2::from_shape_fn(shape, |(h, d)| self.sums[h * shape.1 + d].value() / n);
        let m2 = Array2::from_shape_fn(shape, |(h, d)| self.squares[h * shape.1 + d].value() / n);
        let mut sketches = self.sketches;
        let (q01, q99) = tail_quantiles(&mut sketches, shape);
        ChunkStatistics { horizon: shape.0, dims: shape.1, count: self.count, mean, m2, q01, q99, sketches }
    }
}

fn tail_quantiles(sketches: &mut [QuantileSketch], shape: (usize, usize)) -> (Array2<f64>, Array2<f64>) {
    let mut q01 = Array2::zeros(shape);
    let mut q99 = Array2::zeros(shape);
    for (i, s) in sketches.iter_mut().enumerate() {
        let idx = (i / shape.1, i % shape.1);
        q01[idx] = s.quantile(0.01).unwrap_or(0.0);
        q99[idx] = s.quantile(0.99).unwrap_or(0.0);
    }
    (q01, q99)
}

/// Exact per-cell mean and `E[x²]` of a stream of `horizon × dims` chunks,
/// with 1% / 99% quantiles from the mergeable sketch. An empty stream yields
/// zero-count statistics.
pub fn compute_statistics<'a, I>(horizon: usize, dims: usize, chunks: I) -> Result<ChunkStatistics, NormError>
where
    I: IntoIterator<Item = ArrayView2<'a, f64>>,
{
    let mut acc = StatsAccumulator::new(horizon, dims);
    for chunk in chunks {
        acc.push(chunk)?;
    }
    Ok(acc.finish())
}

/// Weighted moment-matching merge.
///
/// Weights are normalized over the inputs that hold data; zero-count inputs
/// are ignored so they act as the neutral element. The merged count is the
/// sum of all input counts.
pub fn merge_statistics(stats: &[&ChunkStatistics], weights: &[f64]) -> Result<ChunkStatistics, NormError> {
    if stats.is_empty() {
        return Err(NormError::Weights("nothing to merge".into()));
    }
    if stats.len() != weights.len() {
        return Err(NormError::Weights(format!("{} inputs, {} weights", stats.len(), weights.len())));
    }
    let shape = stats[0].shape();
    for s in stats {
        if s.shape() != shape {
            return Err(NormError::Shape { expected: shape, actual: s.shape() });
        }
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(NormError::Weights(format!("weight {w} is not a nonnegative number")));
    }
    let count: u64 = stats.iter().map(|s| s.count).sum();
    let live: Vec<(&ChunkStatistics, f64)> =
        stats.iter().zip(weights).filter(|(s, _)| s.count > 0).map(|(s, w)| (*s, *w)).collect();
    if live.is_empty() {
        return Ok(ChunkStatistics::empty(shape.0, shape.1));
    }
    let total: f64 = live.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return Err(NormError::Weights("weights of non-empty inputs sum to zero".into()));
    }
    let normalized: Vec<(&ChunkStatistics, f64)> = live.iter().map(|(s, w)| (*s, w / total)).collect();
    let combine = |field: fn(&ChunkStatistics) -> &Array2<f64>| {
        Array2::from_shape_fn(shape, |idx| {
            let mut acc = CompensatedSum::default();
            for (s, w) in &normalized {
                acc.add(w * field(s)[idx]);
            }
            acc.value()
        })
    };
    let mean = combine(|s| &s.mean);
    let m2 = combine(|s| &s.m2);
    let mut sketches: Vec<QuantileSketch> = (0..shape.0 * shape.1)
        .map(|i| {
            let parts: Vec<(&QuantileSketch, f64)> = normalized.iter().map(|(s, w)| (&s.sketches[i], *w)).collect();
            QuantileSketch::merge_weighted(&parts)
        })
        .collect();
    let (q01, q99) = tail_quantiles(&mut sketches, shape);
    Ok(ChunkStatistics { horizon: shape.0, dims: shape.1, count, mean, m2, q01, q99, sketches })
}
