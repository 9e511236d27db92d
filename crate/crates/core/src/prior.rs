//! Pixel weights, modality perception and prior composition.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{
    build_universe, evolve, DomainAssignment, EngineConfig, GranularBall, MetaGranularBall, Region,
};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::imaging::{ImagePair, LumaPlane, Plane};

/// Default POS-ratio threshold above which the modality gate fires.
pub const DEFAULT_GATE_THRESHOLD: f64 = 0.95;

/// Per-pixel source weights; `w_a + w_b = 1` everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    pub width: usize,
    pub height: usize,
    pub w_a: Vec<f64>,
    pub w_b: Vec<f64>,
}

/// Weights for a boundary-domain pair at its assignment scale.
///
/// The brighter element gets `L / 2r`, where `L` is the distance from the
/// brighter value to the far edge of the ball. Ties give `w` to B.
pub fn bnd_weight(mg: &MetaGranularBall, ball: &GranularBall) -> (f64, f64) {
    if ball.r == 0.0 {
        return (0.5, 0.5);
    }
    let d = f64::from(mg.hi());
    let far = (d - ball.left()).abs().max((d - ball.right()).abs());
    split_weight(mg, far / (2.0 * ball.r))
}

/// Weight given to the brighter element of every positive-domain pair.
pub fn pos_weight(cfg: &EngineConfig) -> f64 {
    let k = f64::from(cfg.k);
    1.0 - cfg.delta_d / (2.0 * k * cfg.delta_d + cfg.delta_d)
}

#[inline]
fn split_weight(mg: &MetaGranularBall, w: f64) -> (f64, f64) {
    let w_a = if mg.l_a > mg.l_b { w } else { 1.0 - w };
    (w_a, 1.0 - w_a)
}

/// Fractions of pixels assigned to POS and BND.
pub fn domain_ratios(d: &DomainAssignment) -> (f64, f64) {
    let (pos, bnd) = d.region_counts();
    let n = d.n_pixels() as f64;
    (pos as f64 / n, bnd as f64 / n)
}

/// Loss coefficients after modality perception.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub r_pos: f64,
    pub r_bnd: f64,
    pub gated: bool,
}

/// Falls back to equal coefficients when the POS ratio reaches `m`.
pub fn modality_gate(dr_pos: f64, dr_bnd: f64, m: f64) -> Confidence {
    if dr_pos < m {
        Confidence {
            r_pos: dr_pos,
            r_bnd: dr_bnd,
            gated: false,
        }
    } else {
        Confidence {
            r_pos: 0.5,
            r_bnd: 0.5,
            gated: true,
        }
    }
}

/// Per-pixel weights for an assignment; a gated run gives POS pixels equal
/// weights.
pub fn weight_map(d: &DomainAssignment, cfg: &EngineConfig, gated: bool) -> WeightMap {
    let w_pos = pos_weight(cfg);
    let per_ball: Vec<(f64, f64)> = d
        .balls
        .iter()
        .zip(&d.assignments)
        .map(|(mg, asg)| match asg.region {
            Region::Bnd => bnd_weight(mg, &asg.scale),
            Region::Pos if gated => (0.5, 0.5),
            Region::Pos => split_weight(mg, w_pos),
        })
        .collect();
    let (w_a, w_b) = d.pixel_ball().iter().map(|&b| per_ball[b as usize]).unzip();
    WeightMap {
        width: d.width,
        height: d.height,
        w_a,
        w_b,
    }
}

/// An incomplete prior: fused luminance plus its confidence.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorResult {
    /// Fused luminance on the `[0, 255]` scale, unrounded.
    pub prior: Plane,
    pub weights: WeightMap,
    /// Observed POS/BND pixel fractions before gating.
    pub dr_pos: f64,
    pub dr_bnd: f64,
    pub confidence: Confidence,
    pub config: EngineConfig,
    pub m: f64,
}

impl PriorResult {
    pub fn r_pos(&self) -> f64 {
        self.confidence.r_pos
    }

    pub fn r_bnd(&self) -> f64 {
        self.confidence.r_bnd
    }

    pub fn gated(&self) -> bool {
        self.confidence.gated
    }

    /// The prior quantized for export.
    pub fn to_luma(&self) -> LumaPlane {
        self.prior.to_luma_rounded()
    }

    pub fn sidecar(&self) -> PriorSidecar {
        PriorSidecar {
            r_pos: self.confidence.r_pos,
            r_bnd: self.confidence.r_bnd,
            gated: self.confidence.gated,
            k: self.config.k,
            delta_d: self.config.delta_d,
            m: self.m,
        }
    }

    /// Writes `<path>` as an 8-bit PNG and the sidecar next to it.
    pub fn export(&self, png_path: &Path) -> Result<PathBuf> {
        self.to_luma().save_png(png_path)?;
        let json = sidecar_path(png_path);
        self.sidecar().save(&json)?;
        Ok(json)
    }
}

/// JSON sidecar written next to every exported prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSidecar {
    pub r_pos: f64,
    pub r_bnd: f64,
    pub gated: bool,
    pub k: u32,
    pub delta_d: f64,
    pub m: f64,
}

impl PriorSidecar {
    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::write_json_atomic(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `foo/prior.png` -> `foo/prior.json`.
pub fn sidecar_path(png_path: &Path) -> PathBuf {
    png_path.with_extension("json")
}

pub fn compose_prior(
    img: &ImagePair,
    d: &DomainAssignment,
    cfg: &EngineConfig,
    m: f64,
) -> Result<PriorResult> {
    let (w, h) = img.dims();
    if (d.width, d.height) != (w, h) {
        return Err(Error::DimensionMismatch {
            left_w: w,
            left_h: h,
            right_w: d.width,
            right_h: d.height,
        });
    }
    let (dr_pos, dr_bnd) = domain_ratios(d);
    let confidence = modality_gate(dr_pos, dr_bnd, m);
    let weights = weight_map(d, cfg, confidence.gated);
    // a + w_b (b - a) equals w_a a + w_b b and never leaves [min, max].
    let data = img
        .a
        .luma
        .data()
        .iter()
        .zip(img.b.luma.data())
        .zip(&weights.w_b)
        .map(|((&a, &b), &wb)| {
            let a = f64::from(a);
            a + wb * (f64::from(b) - a)
        })
        .collect();
    Ok(PriorResult {
        prior: Plane::new(w, h, data),
        weights,
        dr_pos,
        dr_bnd,
        confidence,
        config: *cfg,
        m,
    })
}

/// Runs the whole pipeline: universe, evolution, weights, gate, composition.
pub fn gbpc(img: &ImagePair, cfg: &EngineConfig, m: f64) -> Result<PriorResult> {
    cfg.validate()?;
    let u = build_universe(img)?;
    let d = evolve(&u, cfg)?;
    compose_prior(img, &d, cfg, m)
}
