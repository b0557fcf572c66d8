//! Deterministic synthetic episodes with closed-form tool-tip trajectories and
//! rendered camera frames.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

use nalgebra::Rotation3;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::kinematics::rotmat_to_quat;
use crate::rng::substream;
use crate::schema::{
    CameraStream, CollectionMethod, ControlSpace, DatasetManifest, Environment, EpisodeRecord, FrameSource,
    KinematicRepresentation, OperatorSkill, RobotConfiguration, Split, SplitFractions, SCHEMA_VERSION,
    STATE_WIDTH_PER_ARM,
};

/// Circle radius in metres.
pub const CIRCLE_RADIUS: f64 = 0.02;
/// Seconds per revolution (circle) or base period (Lissajous).
const PERIOD_S: f64 = 4.0;
/// Half extent of the rendered workspace square, metres.
const VIEW_HALF_EXTENT: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFamily {
    Circle,
    Lissajous,
    PickPlaceScript,
}

impl std::str::FromStr for TrajectoryFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "circle" => Ok(TrajectoryFamily::Circle),
            "lissajous" => Ok(TrajectoryFamily::Lissajous),
            "pick_place_script" | "pick-place" => Ok(TrajectoryFamily::PickPlaceScript),
            other => Err(format!("unknown trajectory family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScenario {
    pub config_id: String,
    pub dataset_id: String,
    pub episode_id: String,
    pub task_prompt: String,
    pub family: TrajectoryFamily,
    /// Standard deviation of additive position noise, metres.
    pub noise_sigma: f64,
    pub samples: usize,
    pub seed: u64,
    pub render_frames: bool,
}

impl SynthScenario {
    pub fn new(config_id: &str, family: TrajectoryFamily, samples: usize, seed: u64) -> Self {
        SynthScenario {
            config_id: config_id.into(),
            dataset_id: "synthetic".into(),
            episode_id: format!("synthetic_{seed:06}"),
            task_prompt: "trace the target path with each instrument".into(),
            family,
            noise_sigma: 0.0,
            samples,
            seed,
            render_frames: true,
        }
    }
}

/// A synthesized record plus the noise-free trajectory it was sampled from.
#[derive(Debug, Clone)]
pub struct SynthEpisode {
    pub record: EpisodeRecord,
    /// `T × arms` closed-form tool-tip positions in f64.
    pub clean_positions: Vec<Vec<[f64; 3]>>,
}

/// Centre of arm `arm`'s workspace; arms are spread along x.
pub fn arm_center(arm: usize, arm_count: usize) -> [f64; 3] {
    let spread = 0.035;
    [spread * (2.0 * arm as f64 - (arm_count as f64 - 1.0)) / 2.0, 0.0, 0.1]
}

fn smoothstep(s: f64) -> f64 {
    0.5 - 0.5 * (PI * s.clamp(0.0, 1.0)).cos()
}

/// `(position, rotation, gripper)` of `arm` at time `tau` (seconds), with
/// `progress` in `[0, 1]` over the episode.
fn closed_form(
    family: TrajectoryFamily,
    arm: usize,
    arm_count: usize,
    tau: f64,
    progress: f64,
) -> ([f64; 3], Rotation3<f64>, f64) {
    let c = arm_center(arm, arm_count);
    let phase = arm as f64 * FRAC_PI_2;
    let w = 2.0 * PI / PERIOD_S;
    match family {
        TrajectoryFamily::Circle => {
            let a = w * tau + phase;
            let p = [c[0] + CIRCLE_RADIUS * a.cos(), c[1] + CIRCLE_RADIUS * a.sin(), c[2]];
            let r = Rotation3::from_euler_angles(FRAC_PI_6, 0.0, a);
            (p, r, 0.5 + 0.5 * (0.5 * a).sin())
        }
        TrajectoryFamily::Lissajous => {
            let a = w * tau;
            let p = [
                c[0] + 0.015 * (3.0 * a + phase + FRAC_PI_2).sin(),
                c[1] + 0.02 * (2.0 * a + phase).sin(),
                c[2] + 0.005 * a.sin(),
            ];
            let r = Rotation3::from_euler_angles(FRAC_PI_6, 0.3 * (2.0 * a + phase).sin(), 0.5 * a.sin());
            (p, r, 0.5 + 0.5 * (a + phase).cos())
        }
        TrajectoryFamily::PickPlaceScript => {
            // Approach, close, lift and carry, lower, open.
            let pick = [c[0] - 0.02, c[1] - 0.015, c[2] - 0.02];
            let place = [c[0] + 0.02, c[1] + 0.015, c[2] - 0.02];
            let lerp = |a: [f64; 3], b: [f64; 3], s: f64| std::array::from_fn(|i| a[i] + (b[i] - a[i]) * smoothstep(s));
            let seg = |lo: f64, hi: f64| (progress - lo) / (hi - lo);
            let lifted = |p: [f64; 3]| [p[0], p[1], p[2] + 0.03];
            let (p, g) = if progress < 0.25 {
                (lerp(c, pick, seg(0.0, 0.25)), 1.0)
            } else if progress < 0.35 {
                (pick, 1.0 - smoothstep(seg(0.25, 0.35)))
            } else if progress < 0.75 {
                let s = seg(0.35, 0.75);
                let base = lerp(pick, place, s);
                (lifted_arc(base, s), 0.0)
            } else if progress < 0.85 {
                (place, smoothstep(seg(0.75, 0.85)))
            } else {
                (lerp(place, lifted(place), seg(0.85, 1.0)), 1.0)
            };
            let r = Rotation3::from_euler_angles(FRAC_PI_6, 0.0, 0.4 * smoothstep(progress) + phase * 0.1);
            (p, r, g)
        }
    }
}

fn lifted_arc(p: [f64; 3], s: f64) -> [f64; 3] {
    [p[0], p[1], p[2] + 0.03 * (PI * s).sin()]
}

const ARM_COLORS: [[u8; 3]; 4] = [[255, 230, 190], [190, 240, 255], [255, 190, 240], [220, 255, 190]];

/// Orthographic projection: even views look down z, odd views look along y.
fn project(view: usize, p: [f64; 3], center_z: f64, width: u32, height: u32) -> (f64, f64) {
    let (u, v) = if view.is_multiple_of(2) { (p[0], p[1]) } else { (p[0], p[2] - center_z) };
    let to_px = |x: f64, n: u32| (x + VIEW_HALF_EXTENT) / (2.0 * VIEW_HALF_EXTENT) * n as f64;
    (to_px(u, width), to_px(v, height))
}

fn render(view: usize, width: u32, height: u32, channels: u8, tips: &[[f64; 3]], center_z: f64, out: &mut Vec<u8>) {
    let radius = (width.min(height) as f64 / 12.0).max(1.5);
    let (w, h, c) = (width as usize, height as usize, channels as usize);
    let start = out.len();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                out.push(24 + ((x * 7 + y * 13 + ch * 5) % 16) as u8);
            }
        }
    }
    for (arm, tip) in tips.iter().enumerate() {
        let (cx, cy) = project(view, *tip, center_z, width, height);
        let color = ARM_COLORS[arm % ARM_COLORS.len()];
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= radius * radius {
                    let px = start + (y * w + x) * c;
                    for ch in 0..c {
                        out[px + ch] = if c == 1 { 235 } else { color[ch] };
                    }
                }
            }
        }
    }
}

/// Synthesizes one episode for `config`, deterministic in `scenario.seed`.
pub fn synthesize_episode(scenario: &SynthScenario, config: &RobotConfiguration) -> Result<SynthEpisode, StoreError> {
    if scenario.samples < 2 {
        return Err(StoreError::Scenario(format!("need at least 2 samples, got {}", scenario.samples)));
    }
    if !(scenario.noise_sigma >= 0.0 && scenario.noise_sigma.is_finite()) {
        return Err(StoreError::Scenario(format!(
            "noise sigma {} must be finite and nonnegative",
            scenario.noise_sigma
        )));
    }
    if scenario.config_id != config.config_id {
        return Err(StoreError::Mismatch(format!(
            "scenario names {}, configuration is {}",
            scenario.config_id, config.config_id
        )));
    }
    let t_count = scenario.samples;
    let arms = config.arm_count as usize;
    let rate = config.native_rate_hz;
    let noise = Normal::new(0.0, scenario.noise_sigma).expect("sigma checked");
    let mut rng = substream(scenario.seed, "synth", 0);
    let mut kinematics = Vec::with_capacity(t_count * arms * STATE_WIDTH_PER_ARM);
    let mut clean_positions = Vec::with_capacity(t_count);
    let mut timestamps = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let tau = t as f64 / rate;
        let progress = t as f64 / (t_count - 1) as f64;
        timestamps.push(tau);
        let mut clean = Vec::with_capacity(arms);
        for arm in 0..arms {
            let (p, r, g) = closed_form(scenario.family, arm, arms, tau, progress);
            clean.push(p);
            let noisy = if scenario.noise_sigma > 0.0 { p.map(|v| v + noise.sample(&mut rng)) } else { p };
            let q = rotmat_to_quat(r.matrix());
            kinematics.extend(noisy.iter().chain(&q).map(|v| *v as f32));
            kinematics.push(g as f32);
        }
        clean_positions.push(clean);
    }
    let state_width = arms * STATE_WIDTH_PER_ARM;
    let center_z = arm_center(0, arms)[2];
    let cameras = if scenario.render_frames {
        config
            .camera_views
            .iter()
            .enumerate()
            .map(|(view, cam)| {
                let mut data =
                    Vec::with_capacity(t_count * cam.width as usize * cam.height as usize * cam.channels as usize);
                for t in 0..t_count {
                    let row = &kinematics[t * state_width..(t + 1) * state_width];
                    let tips: Vec<[f64; 3]> =
                        (0..arms).map(|a| std::array::from_fn(|i| row[a * STATE_WIDTH_PER_ARM + i] as f64)).collect();
                    render(view, cam.width, cam.height, cam.channels, &tips, center_z, &mut data);
                }
                CameraStream {
                    view_id: cam.view_id.clone(),
                    width: cam.width,
                    height: cam.height,
                    channels: cam.channels,
                    frame_refs: (0..t_count as u32).collect(),
                    source: FrameSource::Raw { frame_count: t_count as u32, data },
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let record = EpisodeRecord {
        episode_id: scenario.episode_id.clone(),
        dataset_id: scenario.dataset_id.clone(),
        config_id: config.config_id.clone(),
        task_prompt: scenario.task_prompt.clone(),
        split: Split::Train,
        control_space: config.control_space,
        state_width,
        kinematics,
        timestamps,
        cameras,
        validity: None,
        actions: None,
    };
    Ok(SynthEpisode { record, clean_positions })
}

/// A complete manifest describing synthetic `episodes` of `config`.
pub fn synthetic_manifest(
    dataset_id: &str,
    config: &RobotConfiguration,
    environment: Environment,
    episodes: &[EpisodeRecord],
) -> DatasetManifest {
    let representation = match episodes.first().map(|e| e.control_space).unwrap_or(config.control_space) {
        ControlSpace::AbsoluteEef => KinematicRepresentation::AbsoluteCartesian,
        ControlSpace::RelativeEef => KinematicRepresentation::RelativeCartesian,
        ControlSpace::Joint => KinematicRepresentation::Joint,
    };
    DatasetManifest {
        openh_schema: SCHEMA_VERSION.into(),
        dataset_id: dataset_id.into(),
        robot_config_id: config.config_id.clone(),
        collection_method: Some(CollectionMethod::Synthetic),
        operator_skill: Some(OperatorSkill::Scripted),
        environment: Some(environment),
        sync_strategy: "kinematics and frames sampled on one shared clock".into(),
        kinematic_representation: Some(representation),
        diversity_notes: "closed-form tool-tip trajectories with additive Gaussian position noise".into(),
        episode_count: episodes.len() as u64,
        total_seconds: episodes.iter().map(|e| e.sample_count() as f64 / config.native_rate_hz).sum(),
        split_fractions: SplitFractions::default(),
        extensions: Default::default(),
    }
}
