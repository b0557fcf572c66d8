use ndarray::{Array4, ArrayView2, ArrayView4, Axis};

use super::EvalError;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 1.0;

/// Converts `F × H × W × C` 8-bit frames into `[0, 1]` reals.
pub fn frames_from_u8(frames: ArrayView4<'_, u8>) -> Array4<f64> {
    frames.mapv(|v| v as f64 / 255.0)
}

fn check_shapes(generated: &ArrayView4<'_, f64>, reference: &ArrayView4<'_, f64>) -> Result<(), EvalError> {
    if generated.shape() != reference.shape() {
        return Err(EvalError::Shape(format!(
            "generated {:?} vs reference {:?}",
            generated.shape(),
            reference.shape()
        )));
    }
    Ok(())
}

/// Mean absolute error per frame over all pixels and channels.
pub fn l1_per_frame(generated: ArrayView4<'_, f64>, reference: ArrayView4<'_, f64>) -> Result<Vec<f64>, EvalError> {
    check_shapes(&generated, &reference)?;
    Ok(generated
        .axis_iter(Axis(0))
        .zip(reference.axis_iter(Axis(0)))
        .map(|(g, r)| {
            let n = g.len() as f64;
            g.iter().zip(r.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n
        })
        .collect())
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut taps: [f64; SSIM_WINDOW] =
        std::array::from_fn(|i| (-((i as f64 - half).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable Gaussian filter over the valid region of an `h × w` plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut horiz = vec![0.0; h * ow];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(k, t)| t * horiz[(y + k) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, taps: &[f64; SSIM_WINDOW]) -> f64 {
    let (h, w) = a.dim();
    let x: Vec<f64> = a.iter().copied().collect();
    let y: Vec<f64> = b.iter().copied().collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let [mx, my, mxx, myy, mxy] = [&x, &y, &xx, &yy, &xy].map(|p| filter_valid(p, h, w, taps));
    let c1 = (SSIM_K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (SSIM_K2 * DYNAMIC_RANGE).powi(2);
    let n = mx.len() as f64;
    (0..mx.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = mxx[i] - ux * ux;
            let vy = myy[i] - uy * uy;
            let cov = mxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum::<f64>()
        / n
}

/// Single-scale SSIM per frame: 11×11 Gaussian window (σ = 1.5), K1 = 0.01,
/// K2 = 0.03, L = 1, valid-region positions, averaged over channels.
pub fn ssim_per_frame(generated: ArrayView4<'_, f64>, reference: ArrayView4<'_, f64>) -> Result<Vec<f64>, EvalError> {
    check_shapes(&generated, &reference)?;
    let (_, h, w, c) = generated.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(EvalError::FrameTooSmall { height: h, width: w, window: SSIM_WINDOW });
    }
    let taps = gaussian_taps();
    Ok(generated
        .axis_iter(Axis(0))
        .zip(reference.axis_iter(Axis(0)))
        .map(|(g, r)| {
            (0..c).map(|ch| ssim_plane(g.index_axis(Axis(2), ch), r.index_axis(Axis(2), ch), &taps)).sum::<f64>()
                / c as f64
        })
        .collect())
}
