use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ChunkStatistics, NormError, QuantileSketch};

pub const STATS_VERSION: &str = "1.0";

/// A contributing dataset and its mixture weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SketchDoc {
    compacted: bool,
    items: Vec<[f64; 2]>,
}

/// Versioned on-disk form of [`ChunkStatistics`] for one dataset or one
/// merged configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDocument {
    pub openh_stats: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    pub config_id: String,
    pub horizon: usize,
    pub dims: usize,
    pub count: u64,
    pub mean: Vec<Vec<f64>>,
    pub m2: Vec<Vec<f64>>,
    pub q01: Vec<Vec<f64>>,
    pub q99: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
    sketches: Vec<SketchDoc>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(name: &str, v: &[Vec<f64>], shape: (usize, usize)) -> Result<Array2<f64>, NormError> {
    if v.len() != shape.0 || v.iter().any(|r| r.len() != shape.1) {
        return Err(NormError::Document(format!("`{name}` does not have shape {shape:?}")));
    }
    Ok(Array2::from_shape_fn(shape, |(h, d)| v[h][d]))
}

impl StatsDocument {
    pub fn new(
        stats: &ChunkStatistics,
        dataset_id: Option<String>,
        config_id: impl Into<String>,
        provenance: Vec<Provenance>,
    ) -> Self {
        let sketches = stats
            .sketches
            .iter()
            .map(|s| {
                let mut s = s.clone();
                let compacted = s.is_compacted();
                SketchDoc { compacted, items: s.items().iter().map(|(v, w)| [*v, *w]).collect() }
            })
            .collect();
        StatsDocument {
            openh_stats: STATS_VERSION.into(),
            dataset_id,
            config_id: config_id.into(),
            horizon: stats.horizon,
            dims: stats.dims,
            count: stats.count,
            mean: rows(&stats.mean),
            m2: rows(&stats.m2),
            q01: rows(&stats.q01),
            q99: rows(&stats.q99),
            provenance,
            sketches,
        }
    }

    pub fn to_stats(&self) -> Result<ChunkStatistics, NormError> {
        if self.openh_stats != STATS_VERSION {
            return Err(NormError::Document(format!("unsupported version `{}`", self.openh_stats)));
        }
        let shape = (self.horizon, self.dims);
        if self.sketches.len() != shape.0 * shape.1 {
            return Err(NormError::Document("sketch count does not match shape".into()));
        }
        Ok(ChunkStatistics {
            horizon: shape.0,
            dims: shape.1,
            count: self.count,
            mean: matrix("mean", &self.mean, shape)?,
            m2: matrix("m2", &self.m2, shape)?,
            q01: matrix("q01", &self.q01, shape)?,
            q99: matrix("q99", &self.q99, shape)?,
            sketches: self
                .sketches
                .iter()
                .map(|s| QuantileSketch::from_items(s.items.iter().map(|[v, w]| (*v, *w)).collect(), s.compacted))
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("statistics serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, NormError> {
        serde_json::from_str(text).map_err(|e| NormError::Document(e.to_string()))
    }
}
