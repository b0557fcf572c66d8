//! Rotation representations and the unified hybrid-relative action space.
//!
//! Relative actions are expressed in the current tool frame:
//! `Δp = Rₜᵀ (p_{t+k} − p_t)` and `ΔR = Rₜᵀ R_{t+k}`, with `ΔR` carried as its
//! first two columns (the continuous 6D representation). Every embodiment is
//! packed into the same 44-slot vector: up to four 10-slot arm blocks
//! `[Δp(3), Δr(6), g(1)]` followed by four auxiliary slots.

mod relative;
mod resample;
mod rotation;
mod unified;

pub use relative::{absolute_to_relative, integrate_relative};
pub use resample::{resample_stride, stride_for};
pub use rotation::{
    canonical_quaternion, geodesic_angle, quat_to_rotmat, rotmat_to_quat, rotmat_to_sixd, sixd_to_rotmat,
};
pub use unified::{pack_unified, pack_unified_row, unpack_unified_row, UnifiedActionChunk};

use nalgebra::{Matrix3, Vector3};

/// Width of the unified action vector shared by all embodiments.
pub const ACTION_WIDTH: usize = 44;
/// Slots per arm block: translation (3), 6D rotation (6), gripper (1).
pub const ARM_BLOCK: usize = 10;
pub const MAX_ARMS: usize = 4;
/// First auxiliary slot (endoscope zoom and similar platform scalars).
pub const AUX_OFFSET: usize = MAX_ARMS * ARM_BLOCK;

/// Orthonormality / determinant tolerance for [`Pose`] rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-9;
const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KinematicsError {
    #[error("zero-norm quaternion")]
    ZeroQuaternion,
    #[error("degenerate 6D rotation: {0}")]
    Degenerate(&'static str),
    #[error("matrix is not a rotation (orthogonality error {ortho:e}, det {det})")]
    InvalidRotation { ortho: f64, det: f64 },
    #[error("unified layout capacity exceeded: {0}")]
    Capacity(String),
    #[error("action layout mismatch: {0}")]
    Layout(String),
    #[error("invalid target rate {0} Hz")]
    InvalidRate(f64),
}

impl KinematicsError {
    pub fn code(&self) -> &'static str {
        match self {
            KinematicsError::ZeroQuaternion => "zero-quaternion",
            KinematicsError::Degenerate(_) => "degenerate-rotation",
            KinematicsError::InvalidRotation { .. } => "invalid-rotation",
            KinematicsError::Capacity(_) => "capacity",
            KinematicsError::Layout(_) => "layout",
            KinematicsError::InvalidRate(_) => "invalid-rate",
        }
    }
}

/// Rigid end-effector pose in the robot base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Pose {
    /// Builds a pose, checking `RᵀR = I` and `det R = +1` within 1e-9.
    pub fn new(position: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self, KinematicsError> {
        check_rotation(&rotation)?;
        Ok(Pose { position, rotation })
    }

    pub fn identity() -> Self {
        Pose { position: Vector3::zeros(), rotation: Matrix3::identity() }
    }

    /// Pose from a stored position and `(w, x, y, z)` quaternion.
    pub fn from_position_quaternion(p: [f64; 3], q: [f64; 4]) -> Result<Self, KinematicsError> {
        Ok(Pose { position: Vector3::from(p), rotation: quat_to_rotmat(q)? })
    }
}

pub(crate) fn check_rotation(r: &Matrix3<f64>) -> Result<(), KinematicsError> {
    let ortho = (r.transpose() * r - Matrix3::identity()).amax();
    let det = r.determinant();
    if !(ortho <= ROTATION_TOLERANCE && (det - 1.0).abs() <= ROTATION_TOLERANCE) {
        return Err(KinematicsError::InvalidRotation { ortho, det });
    }
    Ok(())
}

/// First two columns of a rotation matrix, column-major: `[c1; c2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixDRotation(pub [f64; 6]);

impl SixDRotation {
    pub const IDENTITY: SixDRotation = SixDRotation([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

    pub fn first_column(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn second_column(&self) -> Vector3<f64> {
        Vector3::new(self.0[3], self.0[4], self.0[5])
    }
}

/// Tool-frame translation delta, relative 6D rotation and absolute gripper
/// target for one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridRelativeAction {
    pub translation: Vector3<f64>,
    pub rotation: SixDRotation,
    pub gripper: f64,
}

impl HybridRelativeAction {
    /// Zero translation, identity rotation.
    pub fn hold(gripper: f64) -> Self {
        HybridRelativeAction { translation: Vector3::zeros(), rotation: SixDRotation::IDENTITY, gripper }
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|v| v.is_finite())
            && self.rotation.0.iter().all(|v| v.is_finite())
            && self.gripper.is_finite()
    }
}
