//! Reference loss ingredients: Sobel magnitude, 4-neighbour Laplacian,
//! Gaussian-window SSIM, mean L1 and the three-term adaptive loss.
//!
//! All operators take planes normalized to `[0, 1]` and use replicate
//! padding at the borders.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::Plane;
use crate::prior::{Confidence, PriorResult};

pub const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
pub const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
pub const LAPLACIAN: [[f64; 3]; 3] = [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]];

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Horizontal and vertical Sobel responses (cross-correlation with
/// [`SOBEL_X`] and [`SOBEL_Y`]), replicate padding.
///
/// Each response is evaluated as a difference of two weighted sums, so a
/// flat neighbourhood yields exactly zero.
pub fn sobel_components(img: &Plane) -> (Plane, Plane) {
    let (w, h) = img.dims();
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy);
            let right = p(1, -1) + 2.0 * p(1, 0) + p(1, 1);
            let left = p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1);
            let below = p(-1, 1) + 2.0 * p(0, 1) + p(1, 1);
            let above = p(-1, -1) + 2.0 * p(0, -1) + p(1, -1);
            gx.push(right - left);
            gy.push(below - above);
        }
    }
    (Plane::new(w, h, gx), Plane::new(w, h, gy))
}

/// Gradient magnitude `sqrt((Gx * I)^2 + (Gy * I)^2)`.
pub fn sobel(img: &Plane) -> Plane {
    let (gx, gy) = sobel_components(img);
    gx.zip_map(&gy, f64::hypot)
}

/// Signed 4-neighbour Laplacian response ([`LAPLACIAN`]).
pub fn laplacian(img: &Plane) -> Plane {
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy);
            out.push((p(0, -1) + p(0, 1)) + (p(-1, 0) + p(1, 0)) - 4.0 * p(0, 0));
        }
    }
    Plane::new(w, h, out)
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let taps: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with replicate padding.
fn gaussian_blur(img: &Plane, taps: &[f64]) -> Plane {
    let (w, h) = img.dims();
    let half = (taps.len() / 2) as isize;
    let mut tmp = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (i, &t) in taps.iter().enumerate() {
                acc += t * img.get_clamped(x + i as isize - half, y);
            }
            tmp.push(acc);
        }
    }
    let tmp = Plane::new(w, h, tmp);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (i, &t) in taps.iter().enumerate() {
                acc += t * tmp.get_clamped(x, y + i as isize - half);
            }
            out.push(acc);
        }
    }
    Plane::new(w, h, out)
}

fn check_dims(x: &Plane, y: &Plane) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::DimensionMismatch {
            left_w: x.width,
            left_h: x.height,
            right_w: y.width,
            right_h: y.height,
        });
    }
    Ok(())
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5) and dynamic range 1.
pub fn ssim(x: &Plane, y: &Plane) -> Result<f64> {
    check_dims(x, y)?;
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;

    let mu_x = gaussian_blur(x, &taps);
    let mu_y = gaussian_blur(y, &taps);
    let xx = gaussian_blur(&x.zip_map(x, |a, b| a * b), &taps);
    let yy = gaussian_blur(&y.zip_map(y, |a, b| a * b), &taps);
    let xy = gaussian_blur(&x.zip_map(y, |a, b| a * b), &taps);

    let n = x.data.len();
    let mut total = 0.0;
    for i in 0..n {
        let (mx, my) = (mu_x.data[i], mu_y.data[i]);
        let sx = xx.data[i] - mx * mx;
        let sy = yy.data[i] - my * my;
        let sxy = xy.data[i] - mx * my;
        total +=
            ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2));
    }
    Ok(total / n as f64)
}

/// Mean absolute difference.
pub fn l1(x: &Plane, y: &Plane) -> Result<f64> {
    check_dims(x, y)?;
    let sum: f64 = x.data.iter().zip(&y.data).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / x.data.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub l_ssim: f64,
    pub l_pos: f64,
    pub l_bnd: f64,
    pub l_total: f64,
}

/// The adaptive three-term loss.
///
/// `l_ssim = 1 - ssim(out, prior)`,
/// `l_pos = r_pos * L1(sobel(out), sobel(prior))`,
/// `l_bnd = r_bnd * L1(sobel(out), sobel(a) + sobel(b)) + L1(lap(out), lap(a) + lap(b))`.
pub fn loss_total(
    out: &Plane,
    prior: &Plane,
    confidence: &Confidence,
    a: &Plane,
    b: &Plane,
) -> Result<LossBreakdown> {
    check_dims(out, prior)?;
    check_dims(out, a)?;
    check_dims(out, b)?;

    let sobel_out = sobel(out);
    let sobel_sources = sobel(a).zip_map(&sobel(b), |p, q| p + q);
    let lap_sources = laplacian(a).zip_map(&laplacian(b), |p, q| p + q);

    let l_ssim = 1.0 - ssim(out, prior)?;
    let l_pos = confidence.r_pos * l1(&sobel_out, &sobel(prior))?;
    let l_bnd =
        confidence.r_bnd * l1(&sobel_out, &sobel_sources)? + l1(&laplacian(out), &lap_sources)?;
    Ok(LossBreakdown {
        l_ssim,
        l_pos,
        l_bnd,
        l_total: l_ssim + l_pos + l_bnd,
    })
}

/// [`loss_total`] against a GBPC prior, with 8-bit sources.
pub fn loss_for_prior(
    out: &Plane,
    prior: &PriorResult,
    a: &Plane,
    b: &Plane,
) -> Result<LossBreakdown> {
    let normalized = prior.prior.map(|v| v / 255.0);
    loss_total(out, &normalized, &prior.confidence, a, b)
}
