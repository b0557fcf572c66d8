use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{s, Array2, Array3, Array4, ArrayView2, ArrayView3, Axis};

use super::{l1_per_frame, ssim_per_frame, EvalError, RolloutMetricSeries};
use crate::schema::EpisodeRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutConfig {
    pub chunk_size: usize,
    pub chunk_count: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig { chunk_size: 12, chunk_count: 6 }
    }
}

impl RolloutConfig {
    pub fn frames(&self) -> usize {
        self.chunk_size * self.chunk_count
    }
}

/// Reference video and unified actions for one evaluation episode.
///
/// `frames[0]` is the initial context; `frames[t + 1]` is the ground truth
/// after applying `actions[t]`.
#[derive(Debug, Clone)]
pub struct RolloutEpisode {
    pub dataset_id: String,
    pub episode_id: String,
    /// `T × H × W × C` in `[0, 1]`.
    pub frames: Arc<Array4<f64>>,
    /// `(T − 1) × 44`.
    pub actions: Array2<f64>,
}

/// Builds a rollout episode from a converted record using camera `camera`.
pub fn rollout_episode_from_record(record: &EpisodeRecord, camera: usize) -> Result<RolloutEpisode, EvalError> {
    let too_short = |message: String| EvalError::EpisodeTooShort { episode: record.episode_id.clone(), message };
    let cam = record.cameras.get(camera).ok_or_else(|| too_short(format!("no camera #{camera}")))?;
    let actions = record.actions.as_ref().ok_or_else(|| too_short("no converted actions".into()))?.actions.clone();
    let (h, w, c) = (cam.height as usize, cam.width as usize, cam.channels as usize);
    let mut frames = Array4::<f64>::zeros((cam.frame_refs.len(), h, w, c));
    for (t, &r) in cam.frame_refs.iter().enumerate() {
        let bytes = cam
            .frame(r)
            .ok_or_else(|| too_short(format!("frame {r} of camera {} is not stored inline", cam.view_id)))?;
        frames.index_axis_mut(Axis(0), t).iter_mut().zip(bytes).for_each(|(dst, &b)| *dst = b as f64 / 255.0);
    }
    Ok(RolloutEpisode {
        dataset_id: record.dataset_id.clone(),
        episode_id: record.episode_id.clone(),
        frames: Arc::new(frames),
        actions,
    })
}

/// One chunk request: a context frame plus the actions to render.
#[derive(Debug, Clone)]
pub struct ChunkRequest<'a> {
    pub episode_id: &'a str,
    pub seed: u64,
    pub chunk_index: usize,
    /// Reference index of the context frame.
    pub start_frame: usize,
    /// `H × W × C` in `[0, 1]`.
    pub context: ArrayView3<'a, f64>,
    /// `chunk_size × 44`.
    pub actions: ArrayView2<'a, f64>,
}

/// An action-conditioned video generator treated as a black box.
pub trait FrameGenerator: Send + Sync {
    /// Returns `actions.nrows()` frames shaped like the context.
    fn generate(&self, request: &ChunkRequest<'_>) -> Result<Array4<f64>, EvalError>;
}

/// Echoes the recorded frames: the fidelity ceiling.
#[derive(Debug, Default, Clone)]
pub struct ReplayGenerator {
    episodes: HashMap<String, Arc<Array4<f64>>>,
}

impl ReplayGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, episode: &RolloutEpisode) {
        self.episodes.insert(episode.episode_id.clone(), Arc::clone(&episode.frames));
    }
}

impl FrameGenerator for ReplayGenerator {
    fn generate(&self, request: &ChunkRequest<'_>) -> Result<Array4<f64>, EvalError> {
        let frames = self
            .episodes
            .get(request.episode_id)
            .ok_or_else(|| EvalError::Generator(format!("unknown episode `{}`", request.episode_id)))?;
        let start = request.start_frame + 1;
        let end = start + request.actions.nrows();
        if end > frames.len_of(Axis(0)) {
            return Err(EvalError::Generator(format!("episode `{}` has no frame {}", request.episode_id, end - 1)));
        }
        Ok(frames.slice(s![start..end, .., .., ..]).to_owned())
    }
}

/// Emits a uniform frame at `level` regardless of input.
#[derive(Debug, Clone, Copy)]
pub struct ConstantGenerator(pub f64);

impl FrameGenerator for ConstantGenerator {
    fn generate(&self, request: &ChunkRequest<'_>) -> Result<Array4<f64>, EvalError> {
        let (h, w, c) = request.context.dim();
        Ok(Array4::from_elem((request.actions.nrows(), h, w, c), self.0))
    }
}

/// Drives `chunk_count` autoregressive chunks; each chunk after the first is
/// conditioned on the last frame generated by the previous one.
pub fn run_rollout(
    episode: &RolloutEpisode,
    seed: u64,
    config: RolloutConfig,
    generator: &dyn FrameGenerator,
) -> Result<RolloutMetricSeries, EvalError> {
    let total = config.frames();
    let available = episode.frames.len_of(Axis(0));
    if available < total + 1 || episode.actions.nrows() < total {
        return Err(EvalError::EpisodeTooShort {
            episode: episode.episode_id.clone(),
            message: format!(
                "{total} generated frames need {} frames and {total} actions, have {available} and {}",
                total + 1,
                episode.actions.nrows()
            ),
        });
    }
    let (_, h, w, c) = episode.frames.dim();
    let mut generated = Array4::<f64>::zeros((total, h, w, c));
    let mut context: Array3<f64> = episode.frames.index_axis(Axis(0), 0).to_owned();
    for chunk in 0..config.chunk_count {
        let start = chunk * config.chunk_size;
        let request = ChunkRequest {
            episode_id: &episode.episode_id,
            seed,
            chunk_index: chunk,
            start_frame: start,
            context: context.view(),
            actions: episode.actions.slice(s![start..start + config.chunk_size, ..]),
        };
        let out = generator.generate(&request)?;
        if out.dim() != (config.chunk_size, h, w, c) {
            return Err(EvalError::Generator(format!(
                "chunk {chunk} of `{}`: expected {:?} frames, got {:?}",
                episode.episode_id,
                (config.chunk_size, h, w, c),
                out.dim()
            )));
        }
        generated.slice_mut(s![start..start + config.chunk_size, .., .., ..]).assign(&out);
        context = out.index_axis(Axis(0), config.chunk_size - 1).to_owned();
    }
    let reference = episode.frames.slice(s![1..total + 1, .., .., ..]);
    Ok(RolloutMetricSeries {
        dataset_id: episode.dataset_id.clone(),
        episode_id: episode.episode_id.clone(),
        seed,
        chunk_size: config.chunk_size,
        chunk_count: config.chunk_count,
        l1: l1_per_frame(generated.view(), reference)?,
        ssim: ssim_per_frame(generated.view(), reference)?,
    })
}
