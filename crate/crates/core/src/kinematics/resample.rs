use super::KinematicsError;
use crate::schema::EpisodeRecord;

/// Integer timestep stride `round(native / target)`, at least 1.
///
/// Halves round to even. Non-integer ratios are approximated: a 25 Hz source
/// at a 10 Hz target uses stride 2 and runs at an effective 12.5 Hz.
pub fn stride_for(native_rate_hz: f64, target_rate_hz: f64) -> Result<usize, KinematicsError> {
    if !(target_rate_hz.is_finite() && target_rate_hz > 0.0) {
        return Err(KinematicsError::InvalidRate(target_rate_hz));
    }
    if !(native_rate_hz.is_finite() && native_rate_hz > 0.0) {
        return Err(KinematicsError::InvalidRate(native_rate_hz));
    }
    Ok(((native_rate_hz / target_rate_hz).round_ties_even() as usize).max(1))
}

/// Keeps samples `0, stride, 2·stride, …`.
///
/// Timestamps, kinematics, frame references and validity flags are subsampled
/// together. Stored frames are left in place since references still index
/// them. Any converted actions are dropped because they described the native
/// step size.
pub fn resample_stride(
    episode: &EpisodeRecord,
    native_rate_hz: f64,
    target_rate_hz: f64,
) -> Result<EpisodeRecord, KinematicsError> {
    let stride = stride_for(native_rate_hz, target_rate_hz)?;
    let keep: Vec<usize> = (0..episode.sample_count()).step_by(stride).collect();
    let mut out = episode.clone();
    out.timestamps = keep.iter().map(|&t| episode.timestamps[t]).collect();
    out.kinematics = keep.iter().flat_map(|&t| episode.state_row(t).iter().copied()).collect();
    for (cam, src) in out.cameras.iter_mut().zip(&episode.cameras) {
        cam.frame_refs = keep.iter().map(|&t| src.frame_refs[t]).collect();
    }
    out.validity = episode.validity.as_ref().map(|v| keep.iter().map(|&t| v[t]).collect());
    if stride > 1 {
        out.actions = None;
    }
    Ok(out)
}
