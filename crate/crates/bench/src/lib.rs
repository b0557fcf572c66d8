//! Deterministic inputs shared by the kernel benchmarks.

use ndarray::{Array2, Array4};
use openh_core::kinematics::{quat_to_rotmat, rotmat_to_sixd};
use openh_core::store::{preset_configs, synthesize_episode, SynthScenario, TrajectoryFamily};
use openh_core::{EpisodeRecord, SixDRotation, ACTION_WIDTH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` random rotations, in 6D form.
pub fn rotations(n: usize, seed: u64) -> Vec<SixDRotation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let q = [0; 4].map(|_| rng.random_range(-1.0..1.0));
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-6);
            let r = quat_to_rotmat(q.map(|v| v / norm)).expect("unit quaternion");
            rotmat_to_sixd(&r)
        })
        .collect()
}

/// `n` action chunks of `horizon × 44`, uniform in `[-1, 1)`.
pub fn action_chunks(n: usize, horizon: usize, seed: u64) -> Vec<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Array2::from_shape_fn((horizon, ACTION_WIDTH), |_| rng.random_range(-1.0..1.0))).collect()
}

/// `frames × height × width × channels` video in `[0, 1]`, quantized to 8 bits.
pub fn video(frames: usize, height: usize, width: usize, channels: usize, seed: u64) -> Array4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array4::from_shape_fn((frames, height, width, channels), |_| rng.random::<u8>() as f64 / 255.0)
}

/// A synthetic two-arm episode with rendered frames.
pub fn episode(samples: usize, seed: u64) -> EpisodeRecord {
    let config = preset_configs().into_iter().find(|c| c.config_id == "dvrk_si").expect("preset");
    let scenario = SynthScenario::new("dvrk_si", TrajectoryFamily::Circle, samples, seed);
    synthesize_episode(&scenario, &config).expect("synthesizes").record
}
