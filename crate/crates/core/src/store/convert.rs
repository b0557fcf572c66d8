use super::StoreError;
use crate::kinematics::{absolute_to_relative, pack_unified, HybridRelativeAction, Pose};
use crate::schema::{ControlSpace, EpisodeRecord, RobotConfiguration};

fn pose(record: &EpisodeRecord, t: usize, arm: usize) -> Result<(Pose, f64), StoreError> {
    let (p, q, g) = record.arm_state(t, arm);
    Ok((Pose::from_position_quaternion(p, q)?, g))
}

/// Re-expresses an absolute end-effector episode as hybrid-relative actions.
///
/// Row `t` of the result's actions moves every arm from sample `t` to sample
/// `t + 1`, with the gripper target taken from sample `t + 1`. The absolute
/// state stays in `kinematics` as the reference channel.
pub fn convert_control_space(
    record: &EpisodeRecord,
    target: ControlSpace,
    config: &RobotConfiguration,
) -> Result<EpisodeRecord, StoreError> {
    if record.config_id != config.config_id {
        return Err(StoreError::Mismatch(format!(
            "episode {} uses {}, not {}",
            record.episode_id, record.config_id, config.config_id
        )));
    }
    if record.state_width != config.state_width() {
        return Err(StoreError::Mismatch(format!(
            "state width {} differs from {} for {} arms",
            record.state_width,
            config.state_width(),
            config.arm_count
        )));
    }
    match (record.control_space, target) {
        (ControlSpace::Joint, _) | (_, ControlSpace::Joint) => {
            Err(StoreError::Unsupported("joint-space episodes are outside the conversion scope".into()))
        }
        (ControlSpace::RelativeEef, ControlSpace::AbsoluteEef) => {
            Err(StoreError::Unsupported("relative to absolute conversion".into()))
        }
        (from, to) if from == to && (to == ControlSpace::AbsoluteEef || record.actions.is_some()) => Ok(record.clone()),
        _ => {
            let steps = record.sample_count().saturating_sub(1);
            let arms = record.arm_count();
            let mut per_step: Vec<Vec<HybridRelativeAction>> = Vec::with_capacity(steps);
            let mut current: Vec<(Pose, f64)> = (0..arms).map(|a| pose(record, 0, a)).collect::<Result<_, _>>()?;
            for t in 0..steps {
                let next: Vec<(Pose, f64)> = (0..arms).map(|a| pose(record, t + 1, a)).collect::<Result<_, _>>()?;
                per_step.push(
                    current
                        .iter()
                        .zip(&next)
                        .map(|((state, _), (target, g))| absolute_to_relative(state, target, *g))
                        .collect(),
                );
                current = next;
            }
            let mut out = record.clone();
            out.actions = Some(pack_unified(&per_step, config, steps)?);
            out.control_space = ControlSpace::RelativeEef;
            Ok(out)
        }
    }
}
