use nalgebra::Vector3;
use ndarray::{Array2, ArrayView1};

use super::{HybridRelativeAction, KinematicsError, SixDRotation, ACTION_WIDTH, ARM_BLOCK, MAX_ARMS};
use crate::schema::RobotConfiguration;

/// `H × 44` zero-padded actions plus the slots this embodiment writes.
#[derive(Debug, Clone, PartialEq)]
pub struct UnifiedActionChunk {
    pub actions: Array2<f64>,
    pub occupancy_mask: [bool; ACTION_WIDTH],
}

impl UnifiedActionChunk {
    pub fn horizon(&self) -> usize {
        self.actions.nrows()
    }

    /// Mask covering the arm blocks of an `arm_count`-arm embodiment.
    pub fn arm_mask(arm_count: usize) -> [bool; ACTION_WIDTH] {
        std::array::from_fn(|i| i < arm_count.min(MAX_ARMS) * ARM_BLOCK)
    }

    pub fn mask_bits(&self) -> u64 {
        self.occupancy_mask.iter().enumerate().fold(0u64, |acc, (i, m)| acc | ((*m as u64) << i))
    }

    pub fn mask_from_bits(bits: u64) -> [bool; ACTION_WIDTH] {
        std::array::from_fn(|i| bits >> i & 1 == 1)
    }

    /// True when every slot outside the mask is `+0.0` bit for bit.
    pub fn off_mask_is_zero(&self) -> bool {
        self.actions
            .rows()
            .into_iter()
            .all(|row| row.iter().zip(self.occupancy_mask).all(|(v, m)| m || v.to_bits() == 0))
    }

    /// Rows `start..start + len` as a new chunk with the same mask.
    pub fn window(&self, start: usize, len: usize) -> UnifiedActionChunk {
        UnifiedActionChunk {
            actions: self.actions.slice(ndarray::s![start..start + len, ..]).to_owned(),
            occupancy_mask: self.occupancy_mask,
        }
    }
}

fn check_layout(config: &RobotConfiguration) -> Result<usize, KinematicsError> {
    let arms = config.arm_count as usize;
    if arms > MAX_ARMS {
        return Err(KinematicsError::Capacity(format!("{arms} arms, at most {MAX_ARMS} fit")));
    }
    let slots: usize = config.per_arm_dof.iter().map(|d| *d as usize).sum();
    if slots > ACTION_WIDTH || config.per_arm_dof.iter().any(|d| *d as usize > ARM_BLOCK) {
        return Err(KinematicsError::Capacity(format!(
            "layout {:?} does not fit {MAX_ARMS} blocks of {ARM_BLOCK}",
            config.per_arm_dof
        )));
    }
    Ok(arms)
}

/// Writes one step of per-arm actions into a 44-wide row.
pub fn pack_unified_row(arm_actions: &[HybridRelativeAction], row: &mut [f64]) -> Result<(), KinematicsError> {
    if arm_actions.len() > MAX_ARMS {
        return Err(KinematicsError::Capacity(format!("{} arms", arm_actions.len())));
    }
    debug_assert_eq!(row.len(), ACTION_WIDTH);
    for (arm, a) in arm_actions.iter().enumerate() {
        let block = &mut row[arm * ARM_BLOCK..(arm + 1) * ARM_BLOCK];
        block[..3].copy_from_slice(a.translation.as_slice());
        block[3..9].copy_from_slice(&a.rotation.0);
        block[9] = a.gripper;
    }
    Ok(())
}

/// Reads arm `arm` back out of a unified row.
pub fn unpack_unified_row(row: ArrayView1<'_, f64>, arm: usize) -> HybridRelativeAction {
    let o = arm * ARM_BLOCK;
    HybridRelativeAction {
        translation: Vector3::new(row[o], row[o + 1], row[o + 2]),
        rotation: SixDRotation(std::array::from_fn(|i| row[o + 3 + i])),
        gripper: row[o + 9],
    }
}

/// Packs `horizon` steps of per-arm actions into the unified layout.
///
/// Arm `i` occupies slots `[10·i, 10·i + 10)`; everything else is zero.
pub fn pack_unified(
    steps: &[Vec<HybridRelativeAction>],
    config: &RobotConfiguration,
    horizon: usize,
) -> Result<UnifiedActionChunk, KinematicsError> {
    let arms = check_layout(config)?;
    if horizon == 0 || steps.len() != horizon {
        return Err(KinematicsError::Layout(format!("{} steps supplied for horizon {horizon}", steps.len())));
    }
    let mut actions = Array2::zeros((horizon, ACTION_WIDTH));
    for (h, step) in steps.iter().enumerate() {
        if step.len() != arms {
            return Err(KinematicsError::Layout(format!(
                "step {h} carries {} arm actions, configuration has {arms}",
                step.len()
            )));
        }
        let mut row = actions.row_mut(h);
        pack_unified_row(step, row.as_slice_mut().expect("standard layout"))?;
    }
    Ok(UnifiedActionChunk { actions, occupancy_mask: UnifiedActionChunk::arm_mask(arms) })
}
