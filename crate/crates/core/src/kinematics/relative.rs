use super::{rotmat_to_sixd, sixd_to_rotmat, HybridRelativeAction, KinematicsError, Pose};

/// Action that moves `state` onto `target`, expressed in the tool frame of `state`.
pub fn absolute_to_relative(state: &Pose, target: &Pose, gripper_target: f64) -> HybridRelativeAction {
    let rt = state.rotation.transpose();
    HybridRelativeAction {
        translation: rt * (target.position - state.position),
        rotation: rotmat_to_sixd(&(rt * target.rotation)),
        gripper: gripper_target,
    }
}

/// Applies a tool-frame action to `state`: `p = pₜ + Rₜ Δp`, `R = Rₜ ΔR`.
pub fn integrate_relative(state: &Pose, action: &HybridRelativeAction) -> Result<Pose, KinematicsError> {
    let delta = sixd_to_rotmat(&action.rotation)?;
    Ok(Pose { position: state.position + state.rotation * action.translation, rotation: state.rotation * delta })
}
