//! Shared fixtures and the brute-force reference for integration tests.
#![allow(dead_code)]

pub mod oracle;

use gbpc::{ImagePair, LumaPlane};

/// 64-bit LCG used by every fixture generator.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    pub fn below(&mut self, n: u64) -> u64 {
        (self.next_u64() >> 32) % n
    }

    pub fn byte(&mut self) -> u8 {
        (self.next_u64() >> 56) as u8
    }
}

pub fn noise_plane(w: usize, h: usize, seed: u64) -> LumaPlane {
    let mut rng = Lcg(seed);
    LumaPlane::from_fn(w, h, |_, _| rng.byte())
}

/// Ramp along one axis (`axis` 0 = x, 1 = y) plus 4-bit noise.
pub fn ramp_plane(w: usize, h: usize, seed: u64, axis: u8) -> LumaPlane {
    let mut rng = Lcg(seed);
    LumaPlane::from_fn(w, h, |x, y| {
        let base = if axis == 0 { x } else { y };
        (base * 7 + (rng.next_u64() >> 60) as usize) as u8
    })
}

/// Smooth but modality-dissimilar pair with blobs, edges and noise.
pub fn scene_pair(id: &str, w: usize, h: usize, seed: u64) -> ImagePair {
    let mut rng = Lcg(seed);
    let cx = rng.below(w as u64) as f64;
    let cy = rng.below(h as u64) as f64;
    let radius = (w.min(h) as f64 / 4.0).max(2.0);
    let phase = rng.below(64) as f64 / 10.0;
    let a = LumaPlane::from_fn(w, h, |x, y| {
        let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        let blob = if d < radius { 180.0 } else { 40.0 };
        (blob + 30.0 * ((x as f64) / 9.0 + phase).sin() + (rng.byte() % 16) as f64)
            .clamp(0.0, 255.0) as u8
    });
    let b = LumaPlane::from_fn(w, h, |x, y| {
        let band = if (x / 16 + y / 24) % 2 == 0 {
            90.0
        } else {
            150.0
        };
        (band + 60.0 * (y as f64 / h as f64) + (rng.byte() % 24) as f64).clamp(0.0, 255.0) as u8
    });
    ImagePair::from_luma(id, a, b).unwrap()
}

pub fn random_pair(id: &str, w: usize, h: usize, seed: u64) -> ImagePair {
    ImagePair::from_luma(
        id,
        noise_plane(w, h, seed),
        noise_plane(w, h, seed ^ 0xA5A5),
    )
    .unwrap()
}
