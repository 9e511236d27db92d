//! Subcommand implementations and the error-to-exit-code mapping.

use std::fmt;
use std::path::{Path, PathBuf};

use gbpc::engine::evolve_traced;
use gbpc::fsutil::{write_atomic, write_json_atomic};
use gbpc::kernels::{l1, loss_total, ssim, LossBreakdown};
use gbpc::metrics::reports_to_csv;
use gbpc::prior::{sidecar_path, PriorSidecar};
use gbpc::{
    build_dataset, build_universe, gbpc, laplacian, load_pair, sobel, sweep, Confidence,
    DatasetConfig, EngineConfig, Error, ImagePair, LumaPlane, MetricReport, Plane,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    parse_grid, parse_int_grid, Command, DatasetArgs, EngineArgs, Format, KernelsArgs, MetricsArgs,
    PairInputs, PriorArgs, SweepArgs,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONTRACT: u8 = 3;
pub const EXIT_MISSING_INPUT: u8 = 4;
pub const EXIT_IO: u8 = 5;

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Input violates a precondition; the message names the inputs.
    Contract(String),
    MissingInput(PathBuf),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Contract(_) => EXIT_CONTRACT,
            CliError::MissingInput(_) => EXIT_MISSING_INPUT,
            CliError::Core(e) => match e {
                Error::DimensionMismatch { .. }
                | Error::PatchTooLarge { .. }
                | Error::EmptyImage
                | Error::InvalidConfig(_)
                | Error::UnassignedPixel { .. } => EXIT_CONTRACT,
                Error::Decode { .. }
                | Error::Encode { .. }
                | Error::Io { .. }
                | Error::Json { .. } => EXIT_IO,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Contract(msg) => write!(f, "{msg}"),
            CliError::MissingInput(p) => write!(f, "input not found: {}", p.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn dispatch(command: Command, json: bool) -> CliResult {
    match command {
        Command::Prior(a) => prior(a, json),
        Command::Dataset(a) => dataset(a, json),
        Command::Metrics(a) => metrics(a, json),
        Command::Sweep(a) => run_sweep(a, json),
        Command::Kernels(a) => kernels(a),
    }
}

fn require(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

fn engine_config(e: &EngineArgs) -> CliResult<EngineConfig> {
    if !(0.0..=1.0).contains(&e.m) {
        return Err(CliError::Usage(format!(
            "--m must lie in [0, 1], got {}",
            e.m
        )));
    }
    Ok(EngineConfig::new(e.k, e.delta_d)?)
}

fn load_checked_pair(a: &Path, b: &Path) -> CliResult<ImagePair> {
    require(a)?;
    require(b)?;
    load_pair(a, b).map_err(|e| match e {
        Error::DimensionMismatch { .. } => {
            CliError::Contract(format!("{} vs {}: {e}", a.display(), b.display()))
        }
        other => other.into(),
    })
}

/// Writes `text` atomically to `out`, or prints it.
fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => Ok(write_atomic(path, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn prior(args: PriorArgs, json: bool) -> CliResult {
    let cfg = engine_config(&args.engine)?;
    let pair = load_checked_pair(&args.a, &args.b)?;
    let result = gbpc(&pair, &cfg, args.engine.m)?;
    let sidecar = result.export(&args.out)?;
    if let Some(trace_path) = &args.trace {
        let (_, trace) = evolve_traced(&build_universe(&pair)?, &cfg)?;
        write_json_atomic(trace_path, &trace)?;
    }
    if json {
        let report = json!({
            "prior": args.out,
            "sidecar": sidecar,
            "width": pair.width(),
            "height": pair.height(),
            "dr_pos": result.dr_pos,
            "dr_bnd": result.dr_bnd,
            "r_pos": result.r_pos(),
            "r_bnd": result.r_bnd(),
            "gated": result.gated(),
            "k": cfg.k,
            "delta_d": cfg.delta_d,
            "m": args.engine.m,
            "trace": args.trace,
        });
        print!("{}", to_json(&report));
    } else {
        println!(
            "wrote {} ({}x{}, r_pos {}, r_bnd {}, gated {})",
            args.out.display(),
            pair.width(),
            pair.height(),
            result.r_pos(),
            result.r_bnd(),
            result.gated()
        );
    }
    Ok(())
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

fn resolve_pairs(inputs: &PairInputs) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    if let (Some(a_dir), Some(b_dir)) = (&inputs.a_dir, &inputs.b_dir) {
        for dir in [a_dir, b_dir] {
            if !dir.is_dir() {
                return Err(CliError::MissingInput(dir.clone()));
            }
        }
        let read = std::fs::read_dir(a_dir).map_err(|e| {
            CliError::Core(Error::Io {
                path: a_dir.clone(),
                source: e,
            })
        })?;
        let mut names: Vec<_> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .filter_map(|p| p.file_name().map(|n| n.to_owned()))
            .collect();
        names.sort();
        if names.is_empty() {
            return Err(CliError::Usage(format!("no images in {}", a_dir.display())));
        }
        return names
            .into_iter()
            .map(|n| {
                let b = b_dir.join(&n);
                if b.is_file() {
                    Ok((a_dir.join(&n), b))
                } else {
                    Err(CliError::MissingInput(b))
                }
            })
            .collect();
    }
    if inputs.pairs.is_empty() {
        return Err(CliError::Usage(
            "no inputs: give --pair A,B or --a-dir/--b-dir".into(),
        ));
    }
    inputs
        .pairs
        .iter()
        .map(|spec| match spec.split_once(',') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => {
                Ok((PathBuf::from(a), PathBuf::from(b)))
            }
            _ => Err(CliError::Usage(format!("--pair expects A,B, got {spec:?}"))),
        })
        .collect()
}

fn load_pairs(inputs: &PairInputs) -> CliResult<Vec<ImagePair>> {
    resolve_pairs(inputs)?
        .iter()
        .map(|(a, b)| load_checked_pair(a, b))
        .collect()
}

fn dataset(args: DatasetArgs, json: bool) -> CliResult {
    let engine = engine_config(&args.engine)?;
    if args.patch_size == 0 || args.stride == 0 || args.cap_w == 0 || args.cap_h == 0 {
        return Err(CliError::Usage(
            "patch size, stride and resize cap must be positive".into(),
        ));
    }
    let pairs = load_pairs(&args.inputs)?;
    let cfg = DatasetConfig {
        cap_w: args.cap_w,
        cap_h: args.cap_h,
        patch_size: args.patch_size,
        stride: args.stride,
        k: engine.k,
        delta_d: engine.delta_d,
        m: args.engine.m,
        seed: args.seed,
        holdout: args.holdout,
    };
    let manifest = build_dataset(&pairs, &cfg, &args.out)?;
    let manifest_path = args.out.join(gbpc::dataset::MANIFEST_FILE);
    let holdout = manifest
        .entries
        .iter()
        .filter(|e| e.split == gbpc::dataset::Split::Holdout)
        .count();
    if json {
        let report = json!({
            "manifest": manifest_path,
            "pairs": pairs.len(),
            "entries": manifest.entries.len(),
            "train": manifest.entries.len() - holdout,
            "holdout": holdout,
            "gated": manifest.entries.iter().filter(|e| e.gated).count(),
        });
        print!("{}", to_json(&report));
    } else {
        println!(
            "wrote {} ({} pairs, {} patches, {} holdout)",
            manifest_path.display(),
            pairs.len(),
            manifest.entries.len(),
            holdout
        );
    }
    Ok(())
}

fn metrics(args: MetricsArgs, json: bool) -> CliResult {
    for p in [&args.fused, &args.a, &args.b] {
        require(p)?;
    }
    let f = LumaPlane::load(&args.fused)?;
    let a = LumaPlane::load(&args.a)?;
    let b = LumaPlane::load(&args.b)?;
    let id = args
        .fused
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let report = MetricReport::compute(id, &args.method, &f, &a, &b)?;
    let text = if json || args.format == Format::Json {
        to_json(&report)
    } else {
        reports_to_csv(std::slice::from_ref(&report))
    };
    emit(args.out.as_deref(), &text)
}

fn run_sweep(args: SweepArgs, json: bool) -> CliResult {
    let ks =
        parse_int_grid(&args.k, args.step).map_err(|e| CliError::Usage(format!("--k: {e}")))?;
    let dds = parse_grid(&args.delta_d, args.step)
        .map_err(|e| CliError::Usage(format!("--delta-d: {e}")))?;
    if dds.iter().any(|&d| d <= 0.0) {
        return Err(CliError::Usage("--delta-d values must be positive".into()));
    }
    let pairs = load_pairs(&args.inputs)?;
    let grid = sweep(&pairs, &ks, &dds, args.m)?;
    let text = if json { to_json(&grid) } else { grid.to_csv() };
    emit(args.out.as_deref(), &text)
}

#[derive(Serialize)]
struct MapDump {
    width: usize,
    height: usize,
    /// Row-major samples.
    data: Vec<f64>,
}

impl From<Plane> for MapDump {
    fn from(p: Plane) -> Self {
        MapDump {
            width: p.width,
            height: p.height,
            data: p.data,
        }
    }
}

#[derive(Serialize)]
struct KernelDump {
    width: usize,
    height: usize,
    a: PathBuf,
    b: PathBuf,
    prior: Option<PathBuf>,
    output: Option<PathBuf>,
    confidence: Confidence,
    ssim: f64,
    l1_sobel_prior: f64,
    loss: LossBreakdown,
    /// Normalized prior actually used (the rounded 8-bit prior over 255).
    prior_plane: MapDump,
    sobel_output: MapDump,
    sobel_prior: MapDump,
    sobel_a: MapDump,
    sobel_b: MapDump,
    laplacian_output: MapDump,
    laplacian_a: MapDump,
    laplacian_b: MapDump,
}

fn same_dims(reference: &LumaPlane, other: &LumaPlane) -> CliResult {
    if reference.dims() != other.dims() {
        return Err(Error::DimensionMismatch {
            left_w: reference.width(),
            left_h: reference.height(),
            right_w: other.width(),
            right_h: other.height(),
        }
        .into());
    }
    Ok(())
}

fn kernels(args: KernelsArgs) -> CliResult {
    let cfg = engine_config(&args.engine)?;
    let pair = load_checked_pair(&args.a, &args.b)?;

    let (prior_luma, mut confidence) = match &args.prior {
        Some(path) => {
            require(path)?;
            let luma = LumaPlane::load(path)?;
            same_dims(&pair.a.luma, &luma)?;
            let confidence = if args.r_pos.is_some() {
                None
            } else {
                let side = sidecar_path(path);
                require(&side)?;
                let s = PriorSidecar::load(&side)?;
                Some(Confidence {
                    r_pos: s.r_pos,
                    r_bnd: s.r_bnd,
                    gated: s.gated,
                })
            };
            (luma, confidence)
        }
        None => {
            let result = gbpc(&pair, &cfg, args.engine.m)?;
            (result.to_luma(), Some(result.confidence))
        }
    };
    if let (Some(r_pos), Some(r_bnd)) = (args.r_pos, args.r_bnd) {
        confidence = Some(Confidence {
            r_pos,
            r_bnd,
            gated: false,
        });
    }
    let confidence = confidence.expect("confidence comes from the sidecar, gbpc or overrides");

    let output_luma = match &args.output {
        Some(path) => {
            require(path)?;
            let luma = LumaPlane::load(path)?;
            same_dims(&pair.a.luma, &luma)?;
            luma
        }
        None => prior_luma.clone(),
    };

    let (out, prior, a, b) = (
        output_luma.normalized(),
        prior_luma.normalized(),
        pair.a.luma.normalized(),
        pair.b.luma.normalized(),
    );
    let loss = loss_total(&out, &prior, &confidence, &a, &b)?;
    let sobel_output = sobel(&out);
    let sobel_prior = sobel(&prior);
    let dump = KernelDump {
        width: pair.width(),
        height: pair.height(),
        a: args.a.clone(),
        b: args.b.clone(),
        prior: args.prior.clone(),
        output: args.output.clone(),
        confidence,
        ssim: ssim(&out, &prior)?,
        l1_sobel_prior: l1(&sobel_output, &sobel_prior)?,
        loss,
        prior_plane: prior.into(),
        sobel_output: sobel_output.into(),
        sobel_prior: sobel_prior.into(),
        sobel_a: sobel(&a).into(),
        sobel_b: sobel(&b).into(),
        laplacian_output: laplacian(&out).into(),
        laplacian_a: laplacian(&a).into(),
        laplacian_b: laplacian(&b).into(),
    };
    emit(args.out.as_deref(), &to_json(&dump))
}
