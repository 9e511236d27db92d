mod support;

use gbpc::dataset::{Split, MANIFEST_FILE};
use gbpc::metrics::MetricReport;
use gbpc::prior::PriorSidecar;
use gbpc::{
    build_dataset, gbpc, sweep, DatasetConfig, DatasetManifest, EngineConfig, Error, ImagePair,
    LumaPlane,
};
use support::scene_pair;

fn small_config(seed: u64) -> DatasetConfig {
    DatasetConfig {
        cap_w: 64,
        cap_h: 48,
        patch_size: 32,
        stride: 16,
        seed,
        ..DatasetConfig::default()
    }
}

fn pairs(n: usize, w: usize, h: usize) -> Vec<ImagePair> {
    (0..n)
        .map(|i| scene_pair(&format!("pair{i:02}"), w, h, 40 + i as u64))
        .collect()
}

fn read_tree(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["", "patches", "priors"] {
        let dir = root.join(sub);
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                out.push((
                    p.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn manifest_counts_and_files() {
    let dir = tempfile::tempdir().unwrap();
    // 80x60 inputs are resized down to the 64x48 cap: 3 x 2 windows each.
    let m = build_dataset(&pairs(3, 80, 60), &small_config(1), dir.path()).unwrap();
    assert_eq!(m.entries.len(), 18);
    for e in &m.entries {
        for p in [&e.patch_a, &e.patch_b, &e.prior, &e.sidecar] {
            assert!(dir.path().join(p).is_file(), "{} missing", p.display());
        }
        assert_eq!(
            LumaPlane::load(&dir.path().join(&e.patch_a))
                .unwrap()
                .dims(),
            (32, 32)
        );
    }
    let reread = DatasetManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(reread, m);
    let first = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    let header: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(header["schema"], 1);
    assert_eq!(header["record"], "header");
    assert_eq!(header["entries"], 18);
}

#[test]
fn manifest_integrity_reproduces_confidence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(5);
    build_dataset(&pairs(2, 64, 48), &cfg, dir.path()).unwrap();
    let m = DatasetManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    for e in &m.entries {
        let a = LumaPlane::load(&dir.path().join(&e.patch_a)).unwrap();
        let b = LumaPlane::load(&dir.path().join(&e.patch_b)).unwrap();
        let prior = gbpc(
            &ImagePair::from_luma(&e.id, a, b).unwrap(),
            &cfg.engine(),
            cfg.m,
        )
        .unwrap();
        assert_eq!(prior.r_pos().to_bits(), e.r_pos.to_bits());
        assert_eq!(prior.r_bnd().to_bits(), e.r_bnd.to_bits());
        assert_eq!(prior.gated(), e.gated);
        let side = PriorSidecar::load(&dir.path().join(&e.sidecar)).unwrap();
        assert_eq!(side.r_pos.to_bits(), e.r_pos.to_bits());
        assert_eq!(
            LumaPlane::load(&dir.path().join(&e.prior)).unwrap(),
            prior.to_luma()
        );
    }
}

#[test]
fn same_seed_same_bytes_and_input_order_does_not_matter() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let d3 = tempfile::tempdir().unwrap();
    let mut input = pairs(3, 64, 48);
    build_dataset(&input, &small_config(9), d1.path()).unwrap();
    input.reverse();
    build_dataset(&input, &small_config(9), d2.path()).unwrap();
    assert_eq!(read_tree(d1.path()), read_tree(d2.path()));

    build_dataset(&input, &small_config(10), d3.path()).unwrap();
    let flips = |d: &std::path::Path| {
        DatasetManifest::read(&d.join(MANIFEST_FILE))
            .unwrap()
            .entries
            .iter()
            .map(|e| (e.flip_h, e.flip_v))
            .collect::<Vec<_>>()
    };
    assert_ne!(flips(d1.path()), flips(d3.path()));
}

#[test]
fn flips_follow_the_patch_and_are_mixed() {
    let dir = tempfile::tempdir().unwrap();
    let input = pairs(4, 64, 48);
    let m = build_dataset(&input, &small_config(3), dir.path()).unwrap();
    let any_h = m.entries.iter().any(|e| e.flip_h);
    let any_plain = m.entries.iter().any(|e| !e.flip_h && !e.flip_v);
    assert!(any_h && any_plain);
    for e in &m.entries {
        let src = input.iter().find(|p| p.id == e.pair_id).unwrap();
        let mut want = src.a.luma.crop(e.origin_x, e.origin_y, 32, 32);
        if e.flip_h {
            want = want.flip_horizontal();
        }
        if e.flip_v {
            want = want.flip_vertical();
        }
        assert_eq!(LumaPlane::load(&dir.path().join(&e.patch_a)).unwrap(), want);
    }
}

#[test]
fn holdout_marks_trailing_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig {
        holdout: 1,
        ..small_config(0)
    };
    let m = build_dataset(&pairs(3, 64, 48), &cfg, dir.path()).unwrap();
    for e in &m.entries {
        let want = if e.pair_id == "pair02" {
            Split::Holdout
        } else {
            Split::Train
        };
        assert_eq!(e.split, want);
    }
}

#[test]
fn equal_constant_pair_has_no_pos_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let c = LumaPlane::filled(64, 48, 77);
    let pair = ImagePair::from_luma("flat", c.clone(), c).unwrap();
    let m = build_dataset(&[pair], &small_config(0), dir.path()).unwrap();
    assert_eq!(m.entries.len(), 6);
    assert!(m.entries.iter().all(|e| e.r_pos == 0.0 && !e.gated));
}

#[test]
fn bad_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        build_dataset(&[], &small_config(0), dir.path()),
        Err(Error::InvalidConfig(_))
    ));
    let dup = vec![scene_pair("x", 64, 48, 1), scene_pair("x", 64, 48, 2)];
    assert!(build_dataset(&dup, &small_config(0), dir.path()).is_err());
    let tiny = vec![scene_pair("t", 16, 16, 1)];
    assert!(matches!(
        build_dataset(&tiny, &small_config(0), dir.path()),
        Err(Error::PatchTooLarge { .. })
    ));
}

#[test]
fn degenerate_sweep_matches_direct_evaluation() {
    let input = pairs(2, 40, 30);
    let grid = sweep(&input, &[6], &[10.0], 0.95).unwrap();
    assert_eq!(grid.cells.len(), 1);
    let mut want = [0.0; 8];
    for p in &input {
        let prior = gbpc(p, &EngineConfig::default(), 0.95).unwrap();
        let r =
            MetricReport::compute(&p.id, "gbpc", &prior.to_luma(), &p.a.luma, &p.b.luma).unwrap();
        for (w, v) in want.iter_mut().zip(r.values()) {
            *w += v / 2.0;
        }
    }
    for (got, want) in grid.cells[0].metrics.iter().zip(want) {
        assert!((got - want).abs() < 1e-9);
    }
}

#[test]
fn sweep_grid_is_complete() {
    let grid = sweep(&pairs(1, 24, 24), &[2, 4, 6], &[5.0, 10.0, 15.0], 0.95).unwrap();
    assert_eq!(grid.cells.len(), 9);
    let csv = grid.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(
        lines[0],
        "k,delta_d,EN,MI,PSNR,SD,AG,CC,SCD,Qabf,mean_r_pos,gated_fraction"
    );
    assert!(lines[1].starts_with("2,5,"));
    assert!(lines[9].starts_with("6,15,"));
    assert!(sweep(&pairs(1, 24, 24), &[], &[5.0], 0.95).is_err());
}
