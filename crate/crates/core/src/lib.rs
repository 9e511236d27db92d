//! Granular-ball pixel computing for multimodal image fusion.
//!
//! The pipeline turns a co-registered image pair into an *incomplete prior*:
//! a fused luminance image together with confidence coefficients
//! `(r_pos, r_bnd)` that steer a downstream adaptive loss.
//!
//! ```no_run
//! use gbpc::{gbpc, load_pair, EngineConfig, DEFAULT_GATE_THRESHOLD};
//! # fn main() -> gbpc::Result<()> {
//! let pair = load_pair("ir.png".as_ref(), "vis.png".as_ref())?;
//! let prior = gbpc(&pair, &EngineConfig::default(), DEFAULT_GATE_THRESHOLD)?;
//! prior.export("prior.png".as_ref())?;
//! # Ok(())
//! # }
//! ```

pub mod dataset;
pub mod engine;
mod error;
pub mod fsutil;
pub mod imaging;
pub mod kernels;
pub mod metrics;
pub mod prior;

pub use dataset::{build_dataset, sweep, DatasetConfig, DatasetManifest, SweepGrid};
pub use engine::{
    build_universe, coarse_equivalent, evolve, evolve_traced, fine_equivalent, DomainAssignment,
    EngineConfig, GranularBall, MetaGranularBall, Region, Universe,
};
pub use error::{Error, Result};
pub use imaging::{extract_patches, load_pair, resize_to_cap, ImagePair, LumaPlane, Plane};
pub use kernels::{laplacian, loss_total, sobel, ssim, LossBreakdown};
pub use metrics::{edge_preservation_q, entropy, mutual_information, psnr_fusion, MetricReport};
pub use prior::{
    bnd_weight, compose_prior, domain_ratios, gbpc, modality_gate, pos_weight, Confidence,
    PriorResult, PriorSidecar, WeightMap, DEFAULT_GATE_THRESHOLD,
};
