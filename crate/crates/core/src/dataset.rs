//! Few-shot corpus construction and the `(k, delta_d)` sensitivity sweep.
//!
//! Output layout under the dataset root:
//!
//! ```text
//! manifest.jsonl            header record, then one record per patch
//! patches/<id>_a.png
//! patches/<id>_b.png
//! priors/<id>.png           8-bit prior
//! priors/<id>.json          confidence sidecar
//! ```
//!
//! Paths inside the manifest are relative to the dataset root.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::imaging::{extract_patches, resize_to_cap, ImagePair, Patch};
use crate::metrics::{format_metric, MetricReport, METRIC_COLUMNS};
use crate::prior::{gbpc, sidecar_path};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub cap_w: usize,
    pub cap_h: usize,
    pub patch_size: usize,
    pub stride: usize,
    pub k: u32,
    pub delta_d: f64,
    pub m: f64,
    pub seed: u64,
    /// Number of trailing pairs (in id order) marked as holdout.
    pub holdout: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            cap_w: 640,
            cap_h: 480,
            patch_size: 128,
            stride: 64,
            k: 6,
            delta_d: 10.0,
            m: 0.95,
            seed: 0,
            holdout: 0,
        }
    }
}

impl DatasetConfig {
    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            delta_d: self.delta_d,
            k: self.k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Holdout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema: u32,
    pub record: String,
    pub config: DatasetConfig,
    pub entries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub schema: u32,
    pub record: String,
    pub id: String,
    pub pair_id: String,
    pub origin_x: usize,
    pub origin_y: usize,
    pub flip_h: bool,
    pub flip_v: bool,
    pub split: Split,
    pub patch_a: PathBuf,
    pub patch_b: PathBuf,
    pub prior: PathBuf,
    pub sidecar: PathBuf,
    pub r_pos: f64,
    pub r_bnd: f64,
    pub gated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub config: DatasetConfig,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_jsonl(&self) -> String {
        let header = ManifestHeader {
            schema: MANIFEST_SCHEMA,
            record: "header".into(),
            config: self.config,
            entries: self.entries.len(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let json_err = |source| Error::Json {
            path: path.to_path_buf(),
            source,
        };
        let first = lines
            .next()
            .ok_or_else(|| Error::InvalidConfig(format!("{} is empty", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let header: ManifestHeader = serde_json::from_str(&first).map_err(json_err)?;
        if header.schema != MANIFEST_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported manifest schema {}",
                header.schema
            )));
        }
        let mut entries = Vec::with_capacity(header.entries);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(json_err)?);
        }
        Ok(Self {
            config: header.config,
            entries,
        })
    }
}

/// Flip seed for the `index`-th pair in id order.
fn pair_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Resizes, crops and flips every pair, runs GBPC per patch and writes the
/// patches, priors, sidecars and manifest under `root`.
pub fn build_dataset(
    pairs: &[ImagePair],
    cfg: &DatasetConfig,
    root: &Path,
) -> Result<DatasetManifest> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("no input pairs".into()));
    }
    let engine = cfg.engine();
    engine.validate()?;

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| pairs[i].id.cmp(&pairs[j].id));
    if let Some(w) = order.windows(2).find(|w| pairs[w[0]].id == pairs[w[1]].id) {
        return Err(Error::InvalidConfig(format!(
            "duplicate pair id {:?}",
            pairs[w[0]].id
        )));
    }
    let holdout_from = pairs.len().saturating_sub(cfg.holdout);

    let mut jobs: Vec<(&str, Split, Patch)> = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        let resized = resize_to_cap(&pairs[i], cfg.cap_w, cfg.cap_h);
        let split = if rank >= holdout_from {
            Split::Holdout
        } else {
            Split::Train
        };
        let patches = extract_patches(
            &resized,
            cfg.patch_size,
            cfg.stride,
            Some(pair_seed(cfg.seed, rank)),
        )?;
        jobs.extend(
            patches
                .into_iter()
                .map(|p| (pairs[i].id.as_str(), split, p)),
        );
    }

    let entries = jobs
        .par_iter()
        .map(|(pair_id, split, patch)| write_patch(root, pair_id, patch, *split, &engine, cfg.m))
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        config: *cfg,
        entries,
    };
    fsutil::write_atomic(&root.join(MANIFEST_FILE), manifest.to_jsonl().as_bytes())?;
    Ok(manifest)
}

fn write_patch(
    root: &Path,
    pair_id: &str,
    patch: &Patch,
    split: Split,
    engine: &EngineConfig,
    m: f64,
) -> Result<ManifestEntry> {
    let id = patch.pair.id.clone();
    let patch_a = PathBuf::from("patches").join(format!("{id}_a.png"));
    let patch_b = PathBuf::from("patches").join(format!("{id}_b.png"));
    let prior_png = PathBuf::from("priors").join(format!("{id}.png"));
    let sidecar = sidecar_path(&prior_png);

    patch.pair.a.luma.save_png(&root.join(&patch_a))?;
    patch.pair.b.luma.save_png(&root.join(&patch_b))?;
    let prior = gbpc(&patch.pair, engine, m)?;
    prior.export(&root.join(&prior_png))?;

    Ok(ManifestEntry {
        schema: MANIFEST_SCHEMA,
        record: "patch".into(),
        id,
        pair_id: pair_id.to_owned(),
        origin_x: patch.origin_x,
        origin_y: patch.origin_y,
        flip_h: patch.flip_h,
        flip_v: patch.flip_v,
        split,
        patch_a,
        patch_b,
        prior: prior_png,
        sidecar,
        r_pos: prior.r_pos(),
        r_bnd: prior.r_bnd(),
        gated: prior.gated(),
    })
}

/// Aggregated prior quality for one `(k, delta_d)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub k: u32,
    pub delta_d: f64,
    /// Means over pairs, in [`METRIC_COLUMNS`] order.
    pub metrics: [f64; 8],
    pub mean_r_pos: f64,
    pub gated_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub ks: Vec<u32>,
    pub delta_ds: Vec<f64>,
    /// Row-major over `ks`, then `delta_ds`.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["k".to_owned(), "delta_d".to_owned()];
        header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
        header.push("mean_r_pos".into());
        header.push("gated_fraction".into());
        w.write_record(&header).expect("in-memory CSV");
        for c in &self.cells {
            let mut rec = vec![c.k.to_string(), format_metric(c.delta_d)];
            rec.extend(c.metrics.iter().map(|&v| format_metric(v)));
            rec.push(format_metric(c.mean_r_pos));
            rec.push(format_metric(c.gated_fraction));
            w.write_record(&rec).expect("in-memory CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
    }
}

/// Runs GBPC for every `(k, delta_d)` on every pair and averages the metric
/// suite of the rounded priors against their sources.
pub fn sweep(pairs: &[ImagePair], ks: &[u32], delta_ds: &[f64], m: f64) -> Result<SweepGrid> {
    if pairs.is_empty() || ks.is_empty() || delta_ds.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep grid and pair list must be non-empty".into(),
        ));
    }
    let grid: Vec<(u32, f64)> = ks
        .iter()
        .flat_map(|&k| delta_ds.iter().map(move |&dd| (k, dd)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(k, delta_d)| {
            let cfg = EngineConfig::new(k, delta_d)?;
            let mut sums = [0.0; 8];
            let mut r_pos = 0.0;
            let mut gated = 0usize;
            for pair in pairs {
                let prior = gbpc(pair, &cfg, m)?;
                let report = MetricReport::compute(
                    &pair.id,
                    "gbpc",
                    &prior.to_luma(),
                    &pair.a.luma,
                    &pair.b.luma,
                )?;
                for (s, v) in sums.iter_mut().zip(report.values()) {
                    *s += v;
                }
                r_pos += prior.r_pos();
                gated += usize::from(prior.gated());
            }
            let n = pairs.len() as f64;
            Ok(SweepCell {
                k,
                delta_d,
                metrics: sums.map(|s| s / n),
                mean_r_pos: r_pos / n,
                gated_fraction: gated as f64 / n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        ks: ks.to_vec(),
        delta_ds: delta_ds.to_vec(),
        cells,
    })
}
