//! Fusion quality metrics: EN, MI, PSNR, SD, AG, CC, SCD and the
//! Xydeas-Petrovic edge preservation index Q^{AB/F}.
//!
//! `f` is the fused image, `a` and `b` the sources. Degenerate inputs map to
//! fixed values instead of NaN: a zero-variance operand has Pearson
//! correlation 0, identical images have PSNR `+inf`, and images without any
//! source edges have Q^{AB/F} 0.

use std::f64::consts::FRAC_PI_2;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::imaging::{LumaPlane, Plane};
use crate::kernels::sobel_components;

fn check_dims(f: &LumaPlane, other: &LumaPlane) -> Result<()> {
    if f.dims() != other.dims() {
        return Err(Error::DimensionMismatch {
            left_w: f.width(),
            left_h: f.height(),
            right_w: other.width(),
            right_h: other.height(),
        });
    }
    Ok(())
}

fn histogram(f: &LumaPlane) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &v in f.data() {
        h[usize::from(v)] += 1;
    }
    h
}

/// Shannon entropy (bits) of the 256-bin histogram.
pub fn entropy(f: &LumaPlane) -> f64 {
    let n = f.len() as f64;
    histogram(f)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Mutual information (bits) between two 8-bit images.
pub fn pairwise_mutual_information(x: &LumaPlane, y: &LumaPlane) -> Result<f64> {
    check_dims(x, y)?;
    let n = x.len() as f64;
    let mut joint = vec![0u64; 256 * 256];
    for (&p, &q) in x.data().iter().zip(y.data()) {
        joint[usize::from(p) * 256 + usize::from(q)] += 1;
    }
    let hx = histogram(x);
    let hy = histogram(y);
    let mut mi = 0.0;
    for (i, &cx) in hx.iter().enumerate() {
        if cx == 0 {
            continue;
        }
        for (j, &cy) in hy.iter().enumerate() {
            let c = joint[i * 256 + j];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * (c as f64 * n / (cx as f64 * cy as f64)).log2();
        }
    }
    Ok(mi)
}

/// `MI(F, A) + MI(F, B)`.
pub fn mutual_information(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<f64> {
    Ok(pairwise_mutual_information(f, a)? + pairwise_mutual_information(f, b)?)
}

fn mse(x: &LumaPlane, y: &LumaPlane) -> f64 {
    let sum: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&p, &q)| {
            let d = f64::from(p) - f64::from(q);
            d * d
        })
        .sum();
    sum / x.len() as f64
}

/// PSNR in dB against the mean of the two source MSEs; `+inf` when both are 0.
pub fn psnr_fusion(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<f64> {
    check_dims(f, a)?;
    check_dims(f, b)?;
    let m = (mse(f, a) + mse(f, b)) / 2.0;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / m).log10())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
pub fn standard_deviation(f: &LumaPlane) -> f64 {
    let v: Vec<f64> = f.data().iter().map(|&p| f64::from(p)).collect();
    let m = mean(&v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Mean of `sqrt((dx^2 + dy^2) / 2)` with forward differences, over pixels
/// that have both a right and a lower neighbour.
pub fn average_gradient(f: &LumaPlane) -> f64 {
    let (w, h) = f.dims();
    if w < 2 || h < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let c = f64::from(f.get(x, y));
            let dx = f64::from(f.get(x + 1, y)) - c;
            let dy = f64::from(f.get(x, y + 1)) - c;
            sum += ((dx * dx + dy * dy) / 2.0).sqrt();
        }
    }
    sum / ((w - 1) * (h - 1)) as f64
}

/// Pearson correlation; 0 if either operand has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&p, &q) in x.iter().zip(y) {
        let (dp, dq) = (p - mx, q - my);
        sxy += dp * dq;
        sxx += dp * dp;
        syy += dq * dq;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

fn reals(p: &LumaPlane) -> Vec<f64> {
    p.data().iter().map(|&v| f64::from(v)).collect()
}

/// Mean of `pearson(F, A)` and `pearson(F, B)`.
pub fn correlation_coefficient(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<f64> {
    check_dims(f, a)?;
    check_dims(f, b)?;
    let (fv, av, bv) = (reals(f), reals(a), reals(b));
    Ok((pearson(&fv, &av) + pearson(&fv, &bv)) / 2.0)
}

/// Sum of correlation differences: `pearson(F - B, A) + pearson(F - A, B)`.
pub fn scd(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<f64> {
    check_dims(f, a)?;
    check_dims(f, b)?;
    let (fv, av, bv) = (reals(f), reals(a), reals(b));
    let f_minus_b: Vec<f64> = fv.iter().zip(&bv).map(|(p, q)| p - q).collect();
    let f_minus_a: Vec<f64> = fv.iter().zip(&av).map(|(p, q)| p - q).collect();
    Ok(pearson(&f_minus_b, &av) + pearson(&f_minus_a, &bv))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scalars {
    pub sd: f64,
    pub ag: f64,
    pub cc: f64,
    pub scd: f64,
}

pub fn remaining_scalars(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<Scalars> {
    Ok(Scalars {
        sd: standard_deviation(f),
        ag: average_gradient(f),
        cc: correlation_coefficient(f, a, b)?,
        scd: scd(f, a, b)?,
    })
}

/// Sigmoid constants of the edge preservation index.
pub mod qabf {
    pub const GAMMA_G: f64 = 0.9994;
    pub const KAPPA_G: f64 = -15.0;
    pub const SIGMA_G: f64 = 0.5;
    pub const GAMMA_A: f64 = 0.9879;
    pub const KAPPA_A: f64 = -22.0;
    pub const SIGMA_A: f64 = 0.8;
}

struct EdgeField {
    strength: Vec<f64>,
    angle: Vec<f64>,
}

fn edge_field(p: &LumaPlane) -> EdgeField {
    let plane: Plane = p.to_plane();
    let (gx, gy) = sobel_components(&plane);
    let strength = gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(x, y)| x.hypot(*y))
        .collect();
    let angle = gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(&x, &y)| {
            if x == 0.0 {
                if y == 0.0 {
                    0.0
                } else {
                    FRAC_PI_2.copysign(y)
                }
            } else {
                (y / x).atan()
            }
        })
        .collect();
    EdgeField { strength, angle }
}

/// Per-pixel preservation of source edges in `f`.
fn preservation(src: &EdgeField, fused: &EdgeField) -> Vec<f64> {
    use qabf::*;
    src.strength
        .iter()
        .zip(&fused.strength)
        .zip(src.angle.iter().zip(&fused.angle))
        .map(|((&gs, &gf), (&as_, &af))| {
            let g = if gs > gf {
                gf / gs
            } else if gs == gf {
                1.0
            } else {
                gs / gf
            };
            let a = 1.0 - (as_ - af).abs() / FRAC_PI_2;
            let qg = GAMMA_G / (1.0 + (KAPPA_G * (g - SIGMA_G)).exp());
            let qa = GAMMA_A / (1.0 + (KAPPA_A * (a - SIGMA_A)).exp());
            qg * qa
        })
        .collect()
}

/// Gradient-based edge preservation Q^{AB/F} in `[0, 1]`.
pub fn edge_preservation_q(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<f64> {
    check_dims(f, a)?;
    check_dims(f, b)?;
    let ef = edge_field(f);
    let ea = edge_field(a);
    let eb = edge_field(b);
    let qa = preservation(&ea, &ef);
    let qb = preservation(&eb, &ef);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..qa.len() {
        let (wa, wb) = (ea.strength[i], eb.strength[i]);
        num += qa[i] * wa + qb[i] * wb;
        den += wa + wb;
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Alias of [`edge_preservation_q`] reported under the Qab name.
pub fn q_ab(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<f64> {
    edge_preservation_q(f, a, b)
}

/// Alias of [`edge_preservation_q`] reported under the Qg name.
pub fn q_g(f: &LumaPlane, a: &LumaPlane, b: &LumaPlane) -> Result<f64> {
    edge_preservation_q(f, a, b)
}

/// Fixed CSV column order of the metric values.
pub const METRIC_COLUMNS: [&str; 8] = ["EN", "MI", "PSNR", "SD", "AG", "CC", "SCD", "Qabf"];

fn finite_or_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_metric(*v))
    }
}

fn vif_marker<S: Serializer>(_: &(), s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("not computed")
}

/// Formats a metric value for CSV; infinities become `inf` / `-inf`.
pub fn format_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_owned()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_owned()
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub pair: String,
    pub method: String,
    #[serde(rename = "EN")]
    pub en: f64,
    #[serde(rename = "MI")]
    pub mi: f64,
    #[serde(rename = "PSNR", serialize_with = "finite_or_string")]
    pub psnr: f64,
    #[serde(rename = "SD")]
    pub sd: f64,
    #[serde(rename = "AG")]
    pub ag: f64,
    #[serde(rename = "CC")]
    pub cc: f64,
    #[serde(rename = "SCD")]
    pub scd: f64,
    #[serde(rename = "Qabf")]
    pub qabf: f64,
    #[serde(rename = "VIF", serialize_with = "vif_marker")]
    pub vif: (),
}

impl MetricReport {
    pub fn compute(
        pair: impl Into<String>,
        method: impl Into<String>,
        f: &LumaPlane,
        a: &LumaPlane,
        b: &LumaPlane,
    ) -> Result<Self> {
        let s = remaining_scalars(f, a, b)?;
        Ok(Self {
            pair: pair.into(),
            method: method.into(),
            en: entropy(f),
            mi: mutual_information(f, a, b)?,
            psnr: psnr_fusion(f, a, b)?,
            sd: s.sd,
            ag: s.ag,
            cc: s.cc,
            scd: s.scd,
            qabf: edge_preservation_q(f, a, b)?,
            vif: (),
        })
    }

    pub fn values(&self) -> [f64; 8] {
        [
            self.en, self.mi, self.psnr, self.sd, self.ag, self.cc, self.scd, self.qabf,
        ]
    }

    pub fn csv_header() -> Vec<String> {
        let mut h = vec!["pair".to_owned(), "method".to_owned()];
        h.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let mut r = vec![self.pair.clone(), self.method.clone()];
        r.extend(self.values().iter().map(|&v| format_metric(v)));
        r
    }
}

/// Renders reports as CSV with a header row.
pub fn reports_to_csv(reports: &[MetricReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MetricReport::csv_header())
        .expect("in-memory CSV");
    for r in reports {
        w.write_record(r.csv_record()).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_plane(w: usize, h: usize, seed: u64) -> LumaPlane {
        let mut s = seed;
        LumaPlane::from_fn(w, h, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 56) as u8
        })
    }

    #[test]
    fn entropy_reference_values() {
        assert_eq!(entropy(&LumaPlane::filled(9, 9, 42)), 0.0);
        let two = LumaPlane::from_fn(8, 8, |x, _| if x < 4 { 10 } else { 200 });
        assert_eq!(entropy(&two), 1.0);
        let uniform = LumaPlane::from_fn(16, 16, |x, y| (y * 16 + x) as u8);
        assert_eq!(entropy(&uniform), 8.0);
    }

    #[test]
    fn mi_of_identical_images_is_twice_entropy() {
        let a = lcg_plane(32, 32, 5);
        let mi = mutual_information(&a, &a, &a).unwrap();
        assert!((mi - 2.0 * entropy(&a)).abs() < 1e-9);
        let c = LumaPlane::filled(32, 32, 9);
        assert!(pairwise_mutual_information(&a, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn psnr_reference_values() {
        let a = lcg_plane(10, 10, 1)
            .data()
            .iter()
            .map(|&v| v.min(254))
            .collect();
        let a = LumaPlane::new(10, 10, a).unwrap();
        assert_eq!(psnr_fusion(&a, &a, &a).unwrap(), f64::INFINITY);
        let f = LumaPlane::new(10, 10, a.data().iter().map(|&v| v + 1).collect()).unwrap();
        let p = psnr_fusion(&f, &a, &a).unwrap();
        assert!((p - 10.0 * (255.0f64 * 255.0).log10()).abs() < 1e-12);
        assert!((p - 48.1308).abs() < 1e-4);
        let b = lcg_plane(10, 10, 2);
        assert_eq!(
            psnr_fusion(&f, &a, &b).unwrap(),
            psnr_fusion(&f, &b, &a).unwrap()
        );
    }

    #[test]
    fn scalar_edge_cases() {
        let c = LumaPlane::filled(6, 6, 77);
        assert_eq!(standard_deviation(&c), 0.0);
        assert_eq!(average_gradient(&c), 0.0);
        let a = lcg_plane(6, 6, 3);
        let cc = correlation_coefficient(&a, &a, &c).unwrap();
        assert!((cc - 0.5).abs() < 1e-12);
        let s = scd(&c, &c, &c).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn permutation_invariance_both_ways() {
        let a = LumaPlane::from_fn(16, 16, |x, y| ((x * 16 + y) * 3 % 256) as u8);
        let mut data = a.data().to_vec();
        data.reverse();
        data.swap(3, 200);
        let p = LumaPlane::new(16, 16, data).unwrap();
        assert_eq!(entropy(&a), entropy(&p));
        assert!((standard_deviation(&a) - standard_deviation(&p)).abs() < 1e-12);
        assert_ne!(average_gradient(&a), average_gradient(&p));
        let b = lcg_plane(16, 16, 8);
        assert_ne!(
            edge_preservation_q(&a, &a, &b).unwrap(),
            edge_preservation_q(&p, &a, &b).unwrap()
        );
    }

    #[test]
    fn qabf_symmetry_and_extremes() {
        let a = lcg_plane(24, 24, 11);
        let b = lcg_plane(24, 24, 12);
        let f = lcg_plane(24, 24, 13);
        assert_eq!(
            edge_preservation_q(&f, &a, &b).unwrap(),
            edge_preservation_q(&f, &b, &a).unwrap()
        );
        let ceiling = qabf::GAMMA_G / (1.0 + (qabf::KAPPA_G * (1.0 - qabf::SIGMA_G)).exp())
            * qabf::GAMMA_A
            / (1.0 + (qabf::KAPPA_A * (1.0 - qabf::SIGMA_A)).exp());
        let q = edge_preservation_q(&a, &a, &a).unwrap();
        assert!((q - ceiling).abs() < 1e-12);
        let flat = LumaPlane::filled(24, 24, 128);
        assert!(edge_preservation_q(&flat, &a, &b).unwrap() < 0.01);
        assert_eq!(edge_preservation_q(&flat, &flat, &flat).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let a = LumaPlane::filled(4, 4, 0);
        let b = LumaPlane::filled(4, 3, 0);
        assert!(mutual_information(&a, &a, &b).is_err());
        assert!(psnr_fusion(&a, &b, &a).is_err());
        assert!(remaining_scalars(&a, &a, &b).is_err());
        assert!(edge_preservation_q(&b, &a, &a).is_err());
    }

    #[test]
    fn report_serialization() {
        let a = lcg_plane(8, 8, 1);
        let r = MetricReport::compute("p", "m", &a, &a, &a).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["PSNR"], "inf");
        assert_eq!(json["VIF"], "not computed");
        let csv = reports_to_csv(&[r]);
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "pair,method,EN,MI,PSNR,SD,AG,CC,SCD,Qabf");
        assert!(csv.lines().nth(1).unwrap().contains(",inf,"));
    }
}
