use nalgebra::{Matrix3, Vector3};

use super::{KinematicsError, SixDRotation, DEGENERACY_EPS};

/// Rotation matrix of a `(w, x, y, z)` quaternion, renormalized first.
pub fn quat_to_rotmat(q: [f64; 4]) -> Result<Matrix3<f64>, KinematicsError> {
    let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm > DEGENERACY_EPS) {
        return Err(KinematicsError::ZeroQuaternion);
    }
    let [w, x, y, z] = q.map(|c| c / norm);
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, xz, yz) = (x * y, x * z, y * z);
    let (wx, wy, wz) = (w * x, w * y, w * z);
    Ok(Matrix3::new(
        1.0 - 2.0 * (yy + zz),
        2.0 * (xy - wz),
        2.0 * (xz + wy),
        2.0 * (xy + wz),
        1.0 - 2.0 * (xx + zz),
        2.0 * (yz - wx),
        2.0 * (xz - wy),
        2.0 * (yz + wx),
        1.0 - 2.0 * (xx + yy),
    ))
}

/// Unit quaternion `(w, x, y, z)` with `w ≥ 0` for a rotation matrix.
pub fn rotmat_to_quat(r: &Matrix3<f64>) -> [f64; 4] {
    // Shepperd: branch on the largest diagonal combination for stability.
    let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        [0.25 * s, (r[(2, 1)] - r[(1, 2)]) / s, (r[(0, 2)] - r[(2, 0)]) / s, (r[(1, 0)] - r[(0, 1)]) / s]
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        [(r[(2, 1)] - r[(1, 2)]) / s, 0.25 * s, (r[(0, 1)] + r[(1, 0)]) / s, (r[(0, 2)] + r[(2, 0)]) / s]
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        [(r[(0, 2)] - r[(2, 0)]) / s, (r[(0, 1)] + r[(1, 0)]) / s, 0.25 * s, (r[(1, 2)] + r[(2, 1)]) / s]
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        [(r[(1, 0)] - r[(0, 1)]) / s, (r[(0, 2)] + r[(2, 0)]) / s, (r[(1, 2)] + r[(2, 1)]) / s, 0.25 * s]
    };
    canonical_quaternion(q)
}

/// Normalizes and flips sign so that `w ≥ 0`.
pub fn canonical_quaternion(q: [f64; 4]) -> [f64; 4] {
    let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    q.map(|c| sign * c / norm)
}

pub fn rotmat_to_sixd(r: &Matrix3<f64>) -> SixDRotation {
    SixDRotation([r[(0, 0)], r[(1, 0)], r[(2, 0)], r[(0, 1)], r[(1, 1)], r[(2, 1)]])
}

/// Gram–Schmidt recovery of a rotation from its 6D representation.
///
/// Column 1 is normalized first, column 2 is made orthogonal to it and
/// normalized, and column 3 is their cross product. The result does not depend
/// on the scale of either input column.
pub fn sixd_to_rotmat(r: &SixDRotation) -> Result<Matrix3<f64>, KinematicsError> {
    let c1 = r.first_column();
    let c2 = r.second_column();
    let n1 = c1.norm();
    if !(n1 >= DEGENERACY_EPS) {
        return Err(KinematicsError::Degenerate("first column has near-zero norm"));
    }
    let b1 = c1 / n1;
    let u2 = c2 - b1 * b1.dot(&c2);
    let n2 = u2.norm();
    if !(n2 >= DEGENERACY_EPS) {
        return Err(KinematicsError::Degenerate("columns are near-parallel"));
    }
    let b2 = u2 / n2;
    let b3: Vector3<f64> = b1.cross(&b2);
    Ok(Matrix3::from_columns(&[b1, b2, b3]))
}

/// Angle of the relative rotation `AᵀB`, in radians.
pub fn geodesic_angle(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let rel = a.transpose() * b;
    let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos()
}
