//! Granular-ball evolution over the luminance axis.
//!
//! Every pixel of a co-registered pair contributes one meta-granular ball,
//! the pair `(L_A, L_B)` of its two luminances. Pixels sharing the same pair
//! are grouped into one [`MetaGranularBall`]. A single active granular ball
//! `[mu - r, mu + r]` then sweeps the axis from 0 to 255:
//!
//! * **slide**: if no unassigned element lies within `delta_d` past the right
//!   boundary but some lie further out, flush the ball's contents and jump so
//!   the right boundary lands on the nearest remaining element;
//! * **expand**: otherwise grow the radius by `delta_d`;
//! * **split**: once `r >= k * delta_d`, cut the ball at `mu` into two
//!   children; the right child carries on as the active ball.
//!
//! Each flush assigns meta-granular balls to the boundary domain (BND, both
//! elements covered together) or the positive domain (POS, elements separable
//! at the current scale). The result is a partition of the universe.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::ImagePair;

/// Largest element value on the luminance axis.
const AXIS_MAX: usize = 255;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EngineConfig {
    /// Radius increment per expansion.
    pub delta_d: f64,
    /// Split once the radius reaches `k * delta_d`.
    pub k: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            delta_d: 10.0,
            k: 6,
        }
    }
}

impl EngineConfig {
    pub fn new(k: u32, delta_d: f64) -> Result<Self> {
        let cfg = Self { delta_d, k };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_d.is_finite() && self.delta_d > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "delta_d must be positive and finite, got {}",
                self.delta_d
            )));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }

    /// Radius at which the active ball splits.
    pub fn split_radius(&self) -> f64 {
        f64::from(self.k) * self.delta_d
    }
}

/// Distinct `(L_A, L_B)` pair and how many pixels carry it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MetaGranularBall {
    pub l_a: u8,
    pub l_b: u8,
    pub count: u32,
}

impl MetaGranularBall {
    #[inline]
    pub fn lo(&self) -> u8 {
        self.l_a.min(self.l_b)
    }

    #[inline]
    pub fn hi(&self) -> u8 {
        self.l_a.max(self.l_b)
    }
}

/// All meta-granular balls of one pair, with their pixel coordinates.
#[derive(Clone, Debug)]
pub struct Universe {
    width: usize,
    height: usize,
    balls: Vec<MetaGranularBall>,
    /// Ball index of every pixel, row-major.
    pixel_ball: Vec<u32>,
    /// Pixels grouped by ball: `members[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<u32>,
    members: Vec<u32>,
}

impl Universe {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.pixel_ball.len()
    }

    pub fn balls(&self) -> &[MetaGranularBall] {
        &self.balls
    }

    pub fn pixel_ball(&self) -> &[u32] {
        &self.pixel_ball
    }

    /// Row-major pixel indices belonging to ball `id`.
    pub fn members(&self, id: usize) -> &[u32] {
        &self.members[self.offsets[id] as usize..self.offsets[id + 1] as usize]
    }

    /// `(x, y)` coordinates belonging to ball `id`.
    pub fn coords(&self, id: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.members(id)
            .iter()
            .map(move |&p| (p as usize % w, p as usize / w))
    }
}

/// Groups the pixels of a pair by their luminance pair.
///
/// Balls are ordered by `(l_a, l_b)`; coordinates within a ball are in
/// raster order.
pub fn build_universe(img: &ImagePair) -> Result<Universe> {
    let (width, height) = img.dims();
    let a = img.a.luma.data();
    let b = img.b.luma.data();
    if a.is_empty() {
        return Err(Error::EmptyImage);
    }

    let mut counts = vec![0u32; 1 << 16];
    for (&la, &lb) in a.iter().zip(b) {
        counts[(usize::from(la) << 8) | usize::from(lb)] += 1;
    }
    let mut slot = vec![u32::MAX; 1 << 16];
    let mut balls = Vec::new();
    for (key, &count) in counts.iter().enumerate() {
        if count > 0 {
            slot[key] = balls.len() as u32;
            balls.push(MetaGranularBall {
                l_a: (key >> 8) as u8,
                l_b: (key & 0xff) as u8,
                count,
            });
        }
    }

    let pixel_ball: Vec<u32> = a
        .iter()
        .zip(b)
        .map(|(&la, &lb)| slot[(usize::from(la) << 8) | usize::from(lb)])
        .collect();

    let mut offsets = Vec::with_capacity(balls.len() + 1);
    let mut acc = 0u32;
    offsets.push(0);
    for ball in &balls {
        acc += ball.count;
        offsets.push(acc);
    }
    let mut cursor: Vec<u32> = offsets[..balls.len()].to_vec();
    let mut members = vec![0u32; pixel_ball.len()];
    for (p, &id) in pixel_ball.iter().enumerate() {
        let c = &mut cursor[id as usize];
        members[*c as usize] = p as u32;
        *c += 1;
    }

    Ok(Universe {
        width,
        height,
        balls,
        pixel_ball,
        offsets,
        members,
    })
}

/// Interval `[mu - r, mu + r]` on the luminance axis, tagged with the
/// iteration in which it was in force.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GranularBall {
    pub mu: f64,
    pub r: f64,
    pub t: u32,
}

impl GranularBall {
    #[inline]
    pub fn left(&self) -> f64 {
        self.mu - self.r
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.mu + self.r
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.left() <= v && v <= self.right()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Region {
    Pos,
    Bnd,
}

/// Where and at which scale one meta-granular ball was assigned.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallAssignment {
    pub region: Region,
    pub scale: GranularBall,
    /// Index of the decision domain `R_i`.
    pub domain: u32,
}

/// Output of [`evolve`]: a POS/BND partition of the universe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainAssignment {
    pub width: usize,
    pub height: usize,
    pub balls: Vec<MetaGranularBall>,
    pub assignments: Vec<BallAssignment>,
    #[serde(skip)]
    pixel_ball: Vec<u32>,
    pub n_domains: u32,
}

impl DomainAssignment {
    pub fn n_pixels(&self) -> usize {
        self.pixel_ball.len()
    }

    pub fn pixel_ball(&self) -> &[u32] {
        &self.pixel_ball
    }

    fn index(&self, x: usize, y: usize) -> Result<usize> {
        if x >= self.width || y >= self.height {
            return Err(Error::UnassignedPixel {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(y * self.width + x)
    }

    pub fn at(&self, x: usize, y: usize) -> Result<&BallAssignment> {
        let p = self.index(x, y)?;
        Ok(&self.assignments[self.pixel_ball[p] as usize])
    }

    /// Assignment of the pixel at row-major index `p`.
    #[inline]
    pub fn at_index(&self, p: usize) -> &BallAssignment {
        &self.assignments[self.pixel_ball[p] as usize]
    }

    /// `(POS, BND)` pixel counts.
    pub fn region_counts(&self) -> (usize, usize) {
        let mut pos = 0usize;
        let mut bnd = 0usize;
        for (ball, asg) in self.balls.iter().zip(&self.assignments) {
            match asg.region {
                Region::Pos => pos += ball.count as usize,
                Region::Bnd => bnd += ball.count as usize,
            }
        }
        (pos, bnd)
    }

    /// Per-pixel region labels, row-major.
    pub fn labels(&self) -> Vec<Region> {
        self.pixel_ball
            .iter()
            .map(|&b| self.assignments[b as usize].region)
            .collect()
    }
}

/// Both pixels were assigned in the same decision domain.
pub fn fine_equivalent(p: (usize, usize), q: (usize, usize), d: &DomainAssignment) -> Result<bool> {
    Ok(d.at(p.0, p.1)?.domain == d.at(q.0, q.1)?.domain)
}

/// Both pixels carry the same POS/BND label.
pub fn coarse_equivalent(
    p: (usize, usize),
    q: (usize, usize),
    d: &DomainAssignment,
) -> Result<bool> {
    Ok(d.at(p.0, p.1)?.region == d.at(q.0, q.1)?.region)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Slide,
    Expand,
    Split,
    Flush,
}

/// One step of the evolution, for debug dumps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEvent {
    pub t: u32,
    pub event: EventKind,
    /// Ball state after the step.
    pub mu: f64,
    pub r: f64,
    /// Pixel counts.
    pub pos_assigned: u32,
    pub bnd_assigned: u32,
    pub residual: u32,
}

pub fn evolve(u: &Universe, cfg: &EngineConfig) -> Result<DomainAssignment> {
    Ok(Evolution::new(u, cfg, false)?.run().0)
}

/// Like [`evolve`], also returning the per-iteration ball states.
pub fn evolve_traced(
    u: &Universe,
    cfg: &EngineConfig,
) -> Result<(DomainAssignment, Vec<TraceEvent>)> {
    Ok(Evolution::new(u, cfg, true)?.run())
}

struct Evolution<'a> {
    u: &'a Universe,
    delta_d: f64,
    split_radius: f64,
    mu: f64,
    r: f64,
    t: u32,
    /// Unassigned element occurrences per luminance value.
    elem_count: [u32; AXIS_MAX + 1],
    /// Residual balls keyed by their smaller element.
    by_lo: Vec<Vec<u32>>,
    residual: usize,
    residual_pixels: u32,
    assignments: Vec<Option<BallAssignment>>,
    next_domain: u32,
    trace: Option<Vec<TraceEvent>>,
}

/// What a flush decides for one residual ball.
enum Verdict {
    Bnd(GranularBall),
    Pos(GranularBall),
    Keep,
}

impl<'a> Evolution<'a> {
    fn new(u: &'a Universe, cfg: &EngineConfig, traced: bool) -> Result<Self> {
        cfg.validate()?;
        if u.balls.is_empty() {
            return Err(Error::EmptyImage);
        }
        let mut elem_count = [0u32; AXIS_MAX + 1];
        let mut by_lo = vec![Vec::new(); AXIS_MAX + 1];
        for (id, ball) in u.balls.iter().enumerate() {
            elem_count[usize::from(ball.l_a)] += 1;
            elem_count[usize::from(ball.l_b)] += 1;
            by_lo[usize::from(ball.lo())].push(id as u32);
        }
        Ok(Self {
            u,
            delta_d: cfg.delta_d,
            split_radius: cfg.split_radius(),
            mu: 0.0,
            r: 0.0,
            t: 0,
            elem_count,
            by_lo,
            residual: u.balls.len(),
            residual_pixels: u.n_pixels() as u32,
            assignments: vec![None; u.balls.len()],
            next_domain: 0,
            trace: traced.then(Vec::new),
        })
    }

    fn ball(&self) -> GranularBall {
        GranularBall {
            mu: self.mu,
            r: self.r,
            t: self.t,
        }
    }

    /// Smallest unassigned element value strictly greater than `bound`.
    fn next_value_above(&self, bound: f64) -> Option<usize> {
        let start = first_int_above(bound)?;
        (start..=AXIS_MAX).find(|&v| self.elem_count[v] > 0)
    }

    fn run(mut self) -> (DomainAssignment, Vec<TraceEvent>) {
        while self.residual > 0 {
            let right = self.mu + self.r;
            if right >= AXIS_MAX as f64 {
                self.final_flush();
            } else {
                let nearest = self.next_value_above(right);
                let captured_by_expansion =
                    matches!(nearest, Some(v) if v as f64 <= right + self.delta_d);
                match nearest {
                    Some(_) if !captured_by_expansion => self.slide(right),
                    _ => self.expand(),
                }
            }
            self.t += 1;
        }

        let assignments: Vec<BallAssignment> = self
            .assignments
            .into_iter()
            .map(|a| a.expect("evolution drains the residual universe"))
            .collect();
        (
            DomainAssignment {
                width: self.u.width,
                height: self.u.height,
                balls: self.u.balls.clone(),
                assignments,
                pixel_ball: self.u.pixel_ball.clone(),
                n_domains: self.next_domain,
            },
            self.trace.unwrap_or_default(),
        )
    }

    fn slide(&mut self, right: f64) {
        let ball = self.ball();
        let (pos, bnd) = self.flush(right, |b| {
            if f64::from(b.hi()) <= ball.right() {
                Verdict::Bnd(ball)
            } else {
                Verdict::Pos(ball)
            }
        });
        if let Some(target) = self.next_value_above(right) {
            self.mu += target as f64 - right;
        }
        self.record(EventKind::Slide, pos, bnd);
    }

    fn expand(&mut self) {
        self.r += self.delta_d;
        if self.r >= self.split_radius {
            self.split();
        } else {
            self.record(EventKind::Expand, 0, 0);
        }
    }

    fn split(&mut self) {
        let parent = self.ball();
        let half = parent.r / 2.0;
        let left_child = GranularBall {
            mu: parent.mu - half,
            r: half,
            t: parent.t,
        };
        let (pos, bnd) = self.flush(parent.right(), |b| {
            let (lo, hi) = (f64::from(b.lo()), f64::from(b.hi()));
            if lo <= parent.mu {
                if hi <= parent.mu {
                    Verdict::Bnd(left_child)
                } else {
                    Verdict::Pos(parent)
                }
            } else if hi <= parent.right() {
                Verdict::Keep
            } else {
                Verdict::Pos(parent)
            }
        });
        self.mu = parent.mu + half;
        self.r = half;
        self.record(EventKind::Split, pos, bnd);
    }

    fn final_flush(&mut self) {
        let ball = self.ball();
        let (pos, bnd) = self.flush(f64::INFINITY, |b| {
            let (lo, hi) = (f64::from(b.lo()), f64::from(b.hi()));
            if (lo <= ball.mu) == (hi <= ball.mu) {
                Verdict::Bnd(ball)
            } else {
                Verdict::Pos(ball)
            }
        });
        self.record(EventKind::Flush, pos, bnd);
    }

    /// Applies `decide` to every residual ball whose smaller element is at
    /// most `upto`, creating at most one BND and one POS decision domain.
    fn flush(&mut self, upto: f64, decide: impl Fn(&MetaGranularBall) -> Verdict) -> (u32, u32) {
        let last = if upto >= AXIS_MAX as f64 {
            AXIS_MAX
        } else if upto < 0.0 {
            return (0, 0);
        } else {
            upto.floor() as usize
        };
        let mut bnd_ids = Vec::new();
        let mut pos_ids = Vec::new();
        for lo in 0..=last {
            if self.by_lo[lo].is_empty() {
                continue;
            }
            let bucket = std::mem::take(&mut self.by_lo[lo]);
            let mut kept = Vec::new();
            for id in bucket {
                let b = &self.u.balls[id as usize];
                debug_assert!(f64::from(b.lo()) >= self.mu - self.r);
                match decide(b) {
                    Verdict::Bnd(scale) => bnd_ids.push((id, scale)),
                    Verdict::Pos(scale) => pos_ids.push((id, scale)),
                    Verdict::Keep => kept.push(id),
                }
            }
            self.by_lo[lo] = kept;
        }
        let n_bnd = self.commit(Region::Bnd, &bnd_ids);
        let n_pos = self.commit(Region::Pos, &pos_ids);
        (n_pos, n_bnd)
    }

    fn commit(&mut self, region: Region, ids: &[(u32, GranularBall)]) -> u32 {
        if ids.is_empty() {
            return 0;
        }
        let domain = self.next_domain;
        self.next_domain += 1;
        let mut pixels = 0u32;
        for &(id, scale) in ids {
            let ball = self.u.balls[id as usize];
            debug_assert!(self.assignments[id as usize].is_none());
            self.assignments[id as usize] = Some(BallAssignment {
                region,
                scale,
                domain,
            });
            self.elem_count[usize::from(ball.l_a)] -= 1;
            self.elem_count[usize::from(ball.l_b)] -= 1;
            pixels += ball.count;
        }
        self.residual -= ids.len();
        self.residual_pixels -= pixels;
        pixels
    }

    fn record(&mut self, event: EventKind, pos_assigned: u32, bnd_assigned: u32) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEvent {
                t: self.t,
                event,
                mu: self.mu,
                r: self.r,
                pos_assigned,
                bnd_assigned,
                residual: self.residual_pixels,
            });
        }
    }
}

/// Smallest axis integer strictly greater than `bound`, if any.
fn first_int_above(bound: f64) -> Option<usize> {
    if bound < 0.0 {
        return Some(0);
    }
    let v = bound.floor() as usize + 1;
    (v <= AXIS_MAX).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::LumaPlane;

    fn pair(w: usize, h: usize, a: &[u8], b: &[u8]) -> ImagePair {
        ImagePair::from_luma(
            "t",
            LumaPlane::new(w, h, a.to_vec()).unwrap(),
            LumaPlane::new(w, h, b.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn universe_groups_equal_pairs() {
        let u = build_universe(&pair(2, 1, &[10, 10], &[12, 200])).unwrap();
        let got: Vec<(u8, u8)> = u.balls().iter().map(|b| (b.l_a, b.l_b)).collect();
        assert_eq!(got, vec![(10, 12), (10, 200)]);
        assert_eq!(u.coords(1).collect::<Vec<_>>(), vec![(1, 0)]);
    }

    #[test]
    fn universe_counts_every_pixel_once() {
        let a = LumaPlane::from_fn(128, 128, |x, y| ((x * 31 + y * 17) % 251) as u8);
        let b = LumaPlane::from_fn(128, 128, |x, y| ((x * x + y) % 256) as u8);
        let u = build_universe(&ImagePair::from_luma("p", a, b).unwrap()).unwrap();
        let total: usize = u.balls().iter().map(|b| b.count as usize).sum();
        assert_eq!(total, 16384);
        let mut seen = vec![false; 16384];
        for id in 0..u.balls().len() {
            for &p in u.members(id) {
                assert!(!seen[p as usize]);
                seen[p as usize] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn identical_inputs_give_diagonal_balls() {
        let a = LumaPlane::from_fn(9, 7, |x, y| (x * 20 + y) as u8);
        let u = build_universe(&ImagePair::from_luma("p", a.clone(), a).unwrap()).unwrap();
        assert!(u.balls().iter().all(|b| b.l_a == b.l_b));
    }

    #[test]
    fn worked_two_pixel_example() {
        let u = build_universe(&pair(2, 1, &[10, 10], &[12, 200])).unwrap();
        let (d, trace) = evolve_traced(&u, &EngineConfig::default()).unwrap();
        let near = d.at(0, 0).unwrap();
        assert_eq!(near.region, Region::Bnd);
        assert_eq!((near.scale.mu, near.scale.r), (0.0, 20.0));
        let far = d.at(1, 0).unwrap();
        assert_eq!(far.region, Region::Pos);
        let kinds: Vec<EventKind> = trace.iter().map(|e| e.event).collect();
        assert_eq!(
            kinds,
            vec![EventKind::Expand, EventKind::Expand, EventKind::Slide]
        );
        assert_eq!(trace[2].pos_assigned, 1);
        assert_eq!(trace[2].bnd_assigned, 1);
        assert_eq!(d.n_domains, 2);
    }

    #[test]
    fn constant_equal_pair_is_all_boundary() {
        for v in [0u8, 37, 200, 255] {
            let u = build_universe(&pair(3, 3, &[v; 9], &[v; 9])).unwrap();
            let d = evolve(&u, &EngineConfig::default()).unwrap();
            assert_eq!(d.region_counts(), (0, 9), "value {v}");
        }
    }

    #[test]
    fn separated_constant_pair_is_all_positive() {
        let u = build_universe(&pair(4, 4, &[20; 16], &[230; 16])).unwrap();
        let d = evolve(&u, &EngineConfig::default()).unwrap();
        assert_eq!(d.region_counts(), (16, 0));
    }

    #[test]
    fn split_assigns_left_child_scale() {
        // The first split at mu = 0 carries (5, 8) in the right child; the
        // second split at mu = 30 leaves both in its left child [0, 30].
        let u = build_universe(&pair(1, 1, &[5], &[8])).unwrap();
        let (d, trace) = evolve_traced(&u, &EngineConfig::default()).unwrap();
        let a = d.at(0, 0).unwrap();
        assert_eq!(a.region, Region::Bnd);
        assert_eq!((a.scale.mu, a.scale.r), (0.0, 30.0));
        assert_eq!(trace.last().unwrap().event, EventKind::Split);
    }

    #[test]
    fn split_separates_across_children() {
        // Slide to 25, expand over 35 up to r = 60, split at mu = 25.
        let u = build_universe(&pair(1, 1, &[25], &[35])).unwrap();
        let d = evolve(&u, &EngineConfig::default()).unwrap();
        let a = d.at(0, 0).unwrap();
        assert_eq!(a.region, Region::Pos);
        assert_eq!((a.scale.mu, a.scale.r), (25.0, 60.0));
    }

    #[test]
    fn fine_and_coarse_relations() {
        let u = build_universe(&pair(3, 1, &[10, 10, 10], &[12, 12, 200])).unwrap();
        let d = evolve(&u, &EngineConfig::default()).unwrap();
        assert!(fine_equivalent((0, 0), (1, 0), &d).unwrap());
        assert!(fine_equivalent((2, 0), (2, 0), &d).unwrap());
        assert!(!fine_equivalent((0, 0), (2, 0), &d).unwrap());
        assert!(coarse_equivalent((0, 0), (1, 0), &d).unwrap());
        assert!(!coarse_equivalent((0, 0), (2, 0), &d).unwrap());
        assert!(matches!(
            fine_equivalent((3, 0), (0, 0), &d),
            Err(Error::UnassignedPixel { x: 3, .. })
        ));
        assert!(coarse_equivalent((0, 5), (0, 0), &d).is_err());
    }

    #[test]
    fn different_split_events_are_not_fine_equivalent() {
        // A chain of values 8 apart keeps the ball expanding, so the low end
        // is drained split by split.
        let chain: Vec<u8> = (0..11).map(|i| 20 + 8 * i).collect();
        let u = build_universe(&pair(11, 1, &chain, &chain)).unwrap();
        let (d, trace) = evolve_traced(&u, &EngineConfig::default()).unwrap();
        assert!(!fine_equivalent((0, 0), (1, 0), &d).unwrap());
        assert!(coarse_equivalent((0, 0), (1, 0), &d).unwrap());
        let splits = trace
            .iter()
            .filter(|e| e.event == EventKind::Split && e.bnd_assigned > 0)
            .count();
        assert!(splits >= 2);
        assert_eq!(d.at(0, 0).unwrap().region, Region::Bnd);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let u = build_universe(&pair(1, 1, &[1], &[2])).unwrap();
        for cfg in [
            EngineConfig { delta_d: 0.0, k: 6 },
            EngineConfig {
                delta_d: f64::NAN,
                k: 6,
            },
            EngineConfig {
                delta_d: 10.0,
                k: 0,
            },
        ] {
            assert!(matches!(evolve(&u, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn right_boundary_strictly_increases() {
        let a = LumaPlane::from_fn(16, 16, |x, y| ((x * 13 + y * 7) % 256) as u8);
        let b = LumaPlane::from_fn(16, 16, |x, y| ((x * y * 3 + 40) % 256) as u8);
        let u = build_universe(&ImagePair::from_luma("p", a, b).unwrap()).unwrap();
        for (k, dd) in [(6, 10.0), (1, 0.5), (3, 7.0)] {
            let (_, trace) = evolve_traced(&u, &EngineConfig { delta_d: dd, k }).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for e in trace
                .iter()
                .filter(|e| e.event != EventKind::Flush && e.residual > 0)
            {
                assert!(e.mu + e.r > prev);
                prev = e.mu + e.r;
            }
            let bound = (256.0 / dd.min(1.0)).ceil() as usize + u.balls().len() * 2;
            assert!(trace.len() <= bound);
        }
    }
}
