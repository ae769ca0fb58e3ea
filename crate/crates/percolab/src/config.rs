//! Percolation states on a rectangle's edge set and their sampling.
//!
//! Randomness is keyed, not streamed: the uniform label of edge `i` in
//! sample `s` is a pure function of `(seed, s, i)`. Worker count and
//! evaluation order therefore never change a single bit of any result.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Rect;

/// Identifier and metadata for the keyed random stream. Recorded in all
/// outputs so a run can be reproduced exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub seed: u64,
    pub algorithm: &'static str,
}

const ALGORITHM: &str = "splitmix64-keyed-v1";

/// splitmix64 finalizer; a full-avalanche 64-bit mixer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed, algorithm: ALGORITHM }
    }

    /// 64 uniform bits keyed by `(seed, sample, edge)`.
    fn bits(&self, sample: u64, edge: u64) -> u64 {
        let mut z = mix64(self.seed ^ 0x6A09_E667_F3BC_C909);
        z = mix64(z ^ sample.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        mix64(z ^ edge.wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
    }

    /// The 53-bit integer mantissa of the uniform label for
    /// `(sample, edge)`; the label itself is `mantissa / 2^53`.
    pub fn label_mantissa(&self, sample: u64, edge: u64) -> u64 {
        self.bits(sample, edge) >> 11
    }

    /// Uniform label in `[0, 1)` with 53-bit granularity.
    pub fn label(&self, sample: u64, edge: u64) -> f64 {
        self.label_mantissa(sample, edge) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Whether the edge is open at threshold `p`; agrees exactly with
    /// `sample` and `UniformLabels::threshold`.
    pub fn edge_open(&self, sample: u64, edge: u64, p: f64) -> bool {
        self.label_mantissa(sample, edge) < mantissa_threshold(p)
    }
}

/// An edge is open iff its label is strictly below the threshold. The
/// comparison is done on the 53-bit mantissa so that thresholding a
/// stored `f64` label and sampling directly agree exactly.
pub(crate) fn mantissa_threshold(p: f64) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p));
    // p * 2^53 is exact: multiplying an f64 by a power of two only
    // shifts the exponent.
    (p * (1u64 << 53) as f64).ceil() as u64
}

/// Desired state for a single edge flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeState {
    Open,
    Closed,
}

/// Open/closed states for every edge of a rectangle, bit-packed; bit `i`
/// is 1 iff the edge with canonical index `i` is open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    rect: Rect,
    words: Vec<u64>,
}

impl Configuration {
    pub fn all_closed(rect: Rect) -> Self {
        let words = vec![0u64; rect.edge_count().div_ceil(64)];
        Configuration { rect, words }
    }

    pub fn all_open(rect: Rect) -> Self {
        let mut cfg = Configuration::all_closed(rect);
        for i in 0..rect.edge_count() {
            cfg.set(i, true);
        }
        cfg
    }

    /// Builds a configuration from a per-edge predicate.
    pub fn from_fn(rect: Rect, mut open: impl FnMut(usize) -> bool) -> Self {
        let mut cfg = Configuration::all_closed(rect);
        for i in 0..rect.edge_count() {
            if open(i) {
                cfg.set(i, true);
            }
        }
        cfg
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn edge_count(&self) -> usize {
        self.rect.edge_count()
    }

    pub fn is_open(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub(crate) fn set(&mut self, i: usize, open: bool) {
        let mask = 1u64 << (i % 64);
        if open {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn open_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn closed_count(&self) -> usize {
        self.edge_count() - self.open_count()
    }

    /// Indices of open edges, in canonical order.
    pub fn open_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edge_count()).filter(move |&i| self.is_open(i))
    }

    /// A copy that agrees with `self` everywhere except possibly at edge
    /// `e`, which is forced to `to`.
    pub fn flip(&self, e: usize, to: EdgeState) -> Result<Configuration> {
        if e >= self.edge_count() {
            return Err(Error::EdgeIndexOutOfRange { index: e, edge_count: self.edge_count() });
        }
        let mut out = self.clone();
        out.set(e, matches!(to, EdgeState::Open));
        Ok(out)
    }

    /// Debug/golden-test dump: header `PERC1 k l E`, then `E` characters
    /// `'0'`/`'1'` in canonical edge order.
    pub fn dump(&self) -> String {
        let e = self.edge_count();
        let mut s = String::with_capacity(e + 24);
        let _ = writeln!(s, "PERC1 {} {} {}", self.rect.k(), self.rect.l(), e);
        for i in 0..e {
            s.push(if self.is_open(i) { '1' } else { '0' });
        }
        s.push('\n');
        s
    }

    /// Parses the `dump` format. The origin is not part of the format;
    /// the result sits at `(0, 0)`.
    pub fn parse_dump(text: &str) -> Result<Configuration> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Dump("missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "PERC1" {
            return Err(Error::Dump("header must be 'PERC1 k l E'".into()));
        }
        let parse = |s: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::Dump(format!("bad header field {s:?}")))
        };
        let (k, l, e) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
        let rect = Rect::at_origin(k as u32, l as u32)?;
        if rect.edge_count() as u64 != e {
            return Err(Error::Dump(format!("edge count {e} does not match {k}x{l}")));
        }
        let body = lines.next().ok_or_else(|| Error::Dump("missing state line".into()))?;
        if body.len() != e as usize {
            return Err(Error::Dump(format!("expected {e} state characters, got {}", body.len())));
        }
        let mut cfg = Configuration::all_closed(rect);
        for (i, c) in body.chars().enumerate() {
            match c {
                '1' => cfg.set(i, true),
                '0' => {}
                other => return Err(Error::Dump(format!("unexpected state character {other:?}"))),
            }
        }
        Ok(cfg)
    }
}

/// One uniform label per edge; thresholding at `p` (open iff label < p)
/// yields a configuration distributed as the product measure, monotone
/// coupled over all `p` simultaneously.
#[derive(Debug, Clone)]
pub struct UniformLabels {
    rect: Rect,
    mantissas: Vec<u64>,
}

impl UniformLabels {
    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn label(&self, i: usize) -> f64 {
        self.mantissas[i] as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn len(&self) -> usize {
        self.mantissas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mantissas.is_empty()
    }

    /// Open set `{i : label_i < p}` as a configuration.
    pub fn threshold(&self, p: f64) -> Result<Configuration> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let t = mantissa_threshold(p);
        Ok(Configuration::from_fn(self.rect, |i| self.mantissas[i] < t))
    }
}

/// Draws the i.i.d. uniform labels for one sample.
pub fn sample_labels(rect: Rect, rng: RngSpec, sample_index: u64) -> UniformLabels {
    let mantissas = (0..rect.edge_count() as u64).map(|i| rng.label_mantissa(sample_index, i)).collect();
    UniformLabels { rect, mantissas }
}

/// Draws one configuration in which each edge is open independently with
/// probability `p`. Deterministic in `(rect, p, seed, sample_index)`.
pub fn sample(rect: Rect, p: f64, rng: RngSpec, sample_index: u64) -> Result<Configuration> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let t = mantissa_threshold(p);
    Ok(Configuration::from_fn(rect, |i| rng.label_mantissa(sample_index, i as u64) < t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(k: u32, l: u32) -> Rect {
        Rect::at_origin(k, l).unwrap()
    }

    #[test]
    fn extreme_probabilities() {
        let r = rect(3, 2);
        let rng = RngSpec::new(7);
        let closed = sample(r, 0.0, rng, 0).unwrap();
        assert_eq!(closed.open_count(), 0);
        let open = sample(r, 1.0, rng, 0).unwrap();
        assert_eq!(open.open_count(), r.edge_count());
        assert!(sample(r, -0.1, rng, 0).is_err());
        assert!(sample(r, 1.5, rng, 0).is_err());
    }

    #[test]
    fn binomial_mean_on_unit_square() {
        let r = rect(1, 1);
        let rng = RngSpec::new(20260810);
        let n = 100_000u64;
        let total: usize = (0..n).map(|s| sample(r, 0.5, rng, s).unwrap().open_count()).sum();
        let mean = total as f64 / (4.0 * n as f64);
        assert!((mean - 0.5).abs() < 0.01, "mean open fraction {mean}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = rect(5, 4);
        let rng = RngSpec::new(99);
        let a = sample(r, 0.37, rng, 12).unwrap();
        let b = sample(r, 0.37, rng, 12).unwrap();
        assert_eq!(a, b);
        let c = sample(r, 0.37, rng, 13).unwrap();
        assert_ne!(a, c, "different sample indices should differ");
        let d = sample(r, 0.37, RngSpec::new(100), 12).unwrap();
        assert_ne!(a, d, "different seeds should differ");
    }

    #[test]
    fn threshold_matches_direct_sampling_exactly() {
        let r = rect(4, 3);
        let rng = RngSpec::new(5);
        for s in 0..20 {
            let labels = sample_labels(r, rng, s);
            for p in [0.0, 0.1, 0.25, 0.5, 0.733, 1.0] {
                assert_eq!(labels.threshold(p).unwrap(), sample(r, p, rng, s).unwrap());
            }
        }
    }

    #[test]
    fn coupling_is_monotone() {
        let r = rect(6, 3);
        let labels = sample_labels(r, RngSpec::new(11), 3);
        let mut prev = labels.threshold(0.0).unwrap();
        for step in 1..=20 {
            let cur = labels.threshold(step as f64 / 20.0).unwrap();
            for i in 0..r.edge_count() {
                assert!(!prev.is_open(i) || cur.is_open(i), "open sets must be nested");
            }
            prev = cur;
        }
    }

    #[test]
    fn flip_semantics() {
        let r = rect(2, 1);
        let all_closed = Configuration::all_closed(r);
        let one = all_closed.flip(0, EdgeState::Open).unwrap();
        assert_eq!(one.open_count(), 1);
        assert!(one.is_open(0));
        assert_eq!(all_closed.open_count(), 0, "flip must not mutate its input");

        let back = one.flip(0, EdgeState::Closed).unwrap();
        assert_eq!(back, all_closed);
        assert!(all_closed.flip(7, EdgeState::Open).is_err());

        // Opening may add at most one open edge.
        let cfg = sample(r, 0.5, RngSpec::new(1), 0).unwrap();
        for e in 0..r.edge_count() {
            let up = cfg.flip(e, EdgeState::Open).unwrap();
            let delta = up.open_count() - cfg.open_count();
            assert!(delta == 0 || delta == 1);
        }
    }

    #[test]
    fn per_edge_frequencies_within_binomial_band() {
        // 99% binomial interval must hold for at least 95% of edges.
        let r = rect(4, 4);
        let rng = RngSpec::new(31337);
        let n = 10_000u64;
        let p = 0.3;
        let mut counts = vec![0u64; r.edge_count()];
        for s in 0..n {
            let cfg = sample(r, p, rng, s).unwrap();
            for (i, c) in counts.iter_mut().enumerate() {
                *c += u64::from(cfg.is_open(i));
            }
        }
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        let z = 2.575_829; // 99% two-sided normal quantile
        let ok = counts
            .iter()
            .filter(|&&c| (c as f64 / n as f64 - p).abs() <= z * sd)
            .count();
        assert!(
            ok as f64 >= 0.95 * r.edge_count() as f64,
            "{ok}/{} edges inside the 99% band",
            r.edge_count()
        );
    }

    #[test]
    fn dump_round_trip() {
        let r = rect(3, 1);
        let cfg = sample(r, 0.5, RngSpec::new(42), 0).unwrap();
        let text = cfg.dump();
        assert!(text.starts_with("PERC1 3 1 10\n"));
        let back = Configuration::parse_dump(&text).unwrap();
        assert_eq!(cfg, back);
        assert!(Configuration::parse_dump("PERC1 3 1 9\n000000000").is_err());
        assert!(Configuration::parse_dump("PERC1 3 1 10\n01").is_err());
    }

    #[test]
    fn dump_golden() {
        let r = rect(1, 1);
        let mut cfg = Configuration::all_closed(r);
        cfg.set(0, true); // bottom
        cfg.set(3, true); // right
        assert_eq!(cfg.dump(), "PERC1 1 1 4\n1001\n");
    }
}
