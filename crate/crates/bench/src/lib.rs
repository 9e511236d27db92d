//! Deterministic inputs shared by the benchmarks.

use gbpc::{ImagePair, LumaPlane};

/// A textured, modality-dissimilar pair of the given size.
pub fn fixture_pair(width: usize, height: usize, seed: u64) -> ImagePair {
    let mut s = seed;
    let mut next = move || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (s >> 58) as f64
    };
    let a = LumaPlane::from_fn(width, height, |x, y| {
        let ring =
            ((x as f64 - width as f64 / 2.0).hypot(y as f64 - height as f64 / 2.0) / 12.0).sin();
        (120.0 + 90.0 * ring + next()).clamp(0.0, 255.0) as u8
    });
    let b = LumaPlane::from_fn(width, height, |x, y| {
        let band = if (x / 20 + y / 28) % 2 == 0 {
            70.0
        } else {
            170.0
        };
        (band + 40.0 * (y as f64 / height as f64) + next()).clamp(0.0, 255.0) as u8
    });
    ImagePair::from_luma("bench", a, b).expect("equal dimensions")
}
