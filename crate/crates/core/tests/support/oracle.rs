//! Straight-line reference of the granular-ball evolution.
//!
//! Works pixel by pixel with no grouping, bucketing or incremental counts:
//! every step rescans all unassigned pixels. Only shares the rules with the
//! library, not the code path.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleAssignment {
    pub pos: bool,
    pub mu: f64,
    pub r: f64,
    pub t: u32,
    pub domain: u32,
}

pub fn oracle_evolve(a: &[u8], b: &[u8], k: u32, delta_d: f64) -> Vec<OracleAssignment> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let lo = |p: usize| f64::from(a[p].min(b[p]));
    let hi = |p: usize| f64::from(a[p].max(b[p]));
    let mut out: Vec<Option<OracleAssignment>> = vec![None; n];
    let (mut mu, mut r) = (0.0f64, 0.0f64);
    let mut t = 0u32;
    let mut next_domain = 0u32;
    let limit = f64::from(k) * delta_d;

    loop {
        let open: Vec<usize> = (0..n).filter(|&p| out[p].is_none()).collect();
        if open.is_empty() {
            break;
        }
        let right = mu + r;
        // (pixel, is_pos, mu, r)
        let mut decided: Vec<(usize, bool, f64, f64)> = Vec::new();

        if right >= 255.0 {
            for &p in &open {
                let together = (lo(p) <= mu) == (hi(p) <= mu);
                decided.push((p, !together, mu, r));
            }
        } else {
            let mut nearest: Option<f64> = None;
            for &p in &open {
                for v in [lo(p), hi(p)] {
                    if v > right && nearest.is_none_or(|m| v < m) {
                        nearest = Some(v);
                    }
                }
            }
            let slide = matches!(nearest, Some(v) if v > right + delta_d);
            if slide {
                for &p in &open {
                    if lo(p) <= right {
                        decided.push((p, hi(p) > right, mu, r));
                    }
                }
                let mut target: Option<f64> = None;
                for &p in &open {
                    if decided.iter().any(|d| d.0 == p) {
                        continue;
                    }
                    for v in [lo(p), hi(p)] {
                        if v > right && target.is_none_or(|m| v < m) {
                            target = Some(v);
                        }
                    }
                }
                if let Some(v) = target {
                    mu += v - right;
                }
            } else {
                r += delta_d;
                if r >= limit {
                    let right = mu + r;
                    for &p in &open {
                        let (l, h) = (lo(p), hi(p));
                        if l <= mu && h <= mu {
                            decided.push((p, false, mu - r / 2.0, r / 2.0));
                        } else if l <= mu || (l <= right && h > right) {
                            // Split across the children, or one in and one out.
                            decided.push((p, true, mu, r));
                        }
                    }
                    mu += r / 2.0;
                    r /= 2.0;
                }
            }
        }

        for want_pos in [false, true] {
            let group: Vec<_> = decided.iter().filter(|d| d.1 == want_pos).collect();
            if group.is_empty() {
                continue;
            }
            for &&(p, pos, m, rr) in &group {
                out[p] = Some(OracleAssignment {
                    pos,
                    mu: m,
                    r: rr,
                    t,
                    domain: next_domain,
                });
            }
            next_domain += 1;
        }
        t += 1;
    }
    out.into_iter().map(Option::unwrap).collect()
}

/// Compares the library's assignment with the oracle bit for bit.
pub fn matches_oracle(
    a: &[u8],
    b: &[u8],
    w: usize,
    h: usize,
    k: u32,
    delta_d: f64,
) -> Result<(), String> {
    use gbpc::{build_universe, evolve, EngineConfig, ImagePair, LumaPlane, Region};
    let pair = ImagePair::from_luma(
        "o",
        LumaPlane::new(w, h, a.to_vec()).unwrap(),
        LumaPlane::new(w, h, b.to_vec()).unwrap(),
    )
    .unwrap();
    let d = evolve(
        &build_universe(&pair).unwrap(),
        &EngineConfig { delta_d, k },
    )
    .unwrap();
    let expect = oracle_evolve(a, b, k, delta_d);
    for (p, e) in expect.iter().enumerate() {
        let got = d.at_index(p);
        let same = (got.region == Region::Pos) == e.pos
            && got.scale.mu.to_bits() == e.mu.to_bits()
            && got.scale.r.to_bits() == e.r.to_bits()
            && got.scale.t == e.t
            && got.domain == e.domain;
        if !same {
            return Err(format!(
                "pixel {p} ({}, {}): library {got:?} vs oracle {e:?}",
                a[p], b[p]
            ));
        }
    }
    Ok(())
}
