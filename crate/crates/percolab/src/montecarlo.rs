//! Monte Carlo estimation: fixed-p event frequencies with Wilson
//! intervals, coupled threshold sweeps yielding the whole crossing curve
//! from one connectivity pass per sample, and per-edge pivotal
//! frequencies.
//!
//! Samples are partitioned freely across workers; every number reported
//! here is an order-independent reduction (integer counts summed), so
//! results are bit-identical for any worker count.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::config::{mantissa_threshold, RngSpec};
use crate::connectivity::{Event, EventEvaluator, HorizontalCrossingEvaluator};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::lattice::Rect;
use crate::pivotal::PivotalScanner;
use crate::stats;

/// A Monte Carlo point estimate with its Wilson score interval.
#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
    pub seed: u64,
    pub algorithm: &'static str,
    /// Wall time of the producing call; excluded from serialized
    /// payloads so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl Estimate {
    fn from_hits(hits: u64, n: u64, z: f64, rng: RngSpec, wall_time: Duration) -> Estimate {
        let (ci_low, ci_high) = stats::wilson_interval(hits, n, z);
        Estimate {
            p_hat: hits as f64 / n as f64,
            ci_low,
            ci_high,
            n,
            seed: rng.seed,
            algorithm: rng.algorithm,
            wall_time,
        }
    }

    /// Half-width of the confidence interval.
    pub fn margin(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

fn default_z() -> f64 {
    stats::z_for_confidence(stats::DEFAULT_CONFIDENCE)
}

/// Frequency estimator for one event at a fixed `p` over `n` keyed
/// samples.
pub fn estimate_event(
    event: &Event,
    p: f64,
    n: u64,
    rng: RngSpec,
    mode: ExecMode,
) -> Result<Estimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    let start = Instant::now();
    let t = mantissa_threshold(p);
    let hits = exec::sum_u64(
        mode,
        n,
        || EventEvaluator::new(event),
        |ev, s| u64::from(ev.eval(|i| rng.label_mantissa(s, i as u64) < t)),
    );
    Ok(Estimate::from_hits(hits, n, default_z(), rng, start.elapsed()))
}

/// The level at which the horizontal crossing first appears when edges
/// open in increasing label order: for the same labels, the crossing
/// holds at threshold `p` iff `p > tau`, strictly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSample {
    pub tau: f64,
}

struct SweepScratch {
    crossing: HorizontalCrossingEvaluator,
    order: Vec<(u64, u32)>,
}

impl SweepScratch {
    fn new(rect: Rect) -> Self {
        SweepScratch {
            crossing: HorizontalCrossingEvaluator::new(rect),
            order: Vec::with_capacity(rect.edge_count()),
        }
    }

    fn sweep(&mut self, rect: Rect, rng: RngSpec, sample_index: u64) -> f64 {
        self.order.clear();
        self.order
            .extend((0..rect.edge_count() as u64).map(|i| (rng.label_mantissa(sample_index, i), i as u32)));
        // Ties (identical mantissas) break by edge index, keeping the
        // insertion order fully deterministic.
        self.order.sort_unstable();
        self.crossing.start();
        for idx in 0..self.order.len() {
            let (mantissa, edge) = self.order[idx];
            if self.crossing.insert(edge as usize) {
                return mantissa as f64 * (1.0 / (1u64 << 53) as f64);
            }
        }
        unreachable!("the all-open configuration always crosses");
    }
}

/// Runs one coupled sweep: sorts the sample's labels, inserts edges one
/// at a time into the union-find structure, and returns the label of the
/// edge whose insertion first joins the left side to the right side.
pub fn sweep_threshold(rect: Rect, rng: RngSpec, sample_index: u64) -> ThresholdSample {
    ThresholdSample { tau: SweepScratch::new(rect).sweep(rect, rng, sample_index) }
}

/// Sweeps a contiguous range of sample indices.
pub fn sweep_thresholds(
    rect: Rect,
    rng: RngSpec,
    samples: std::ops::Range<u64>,
    mode: ExecMode,
) -> Vec<f64> {
    let base = samples.start;
    let count = samples.end.saturating_sub(samples.start);
    exec::map_collect_init(mode, count, || SweepScratch::new(rect), move |scratch, s| {
        scratch.sweep(rect, rng, base + s)
    })
}

/// The empirical crossing curve `p -> Pr_p(H)` over a grid, read off a
/// common set of threshold samples.
#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub rect: Rect,
    pub grid: Vec<f64>,
    pub points: Vec<Estimate>,
}

/// Estimates the whole curve with one connectivity pass per sample,
/// independent of grid size. Estimates from the shared samples are
/// nondecreasing along a sorted grid, exactly.
pub fn estimate_curve(
    rect: Rect,
    grid: &[f64],
    n: u64,
    rng: RngSpec,
    mode: ExecMode,
) -> Result<Curve> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    if let Some(&p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let start = Instant::now();
    let mut taus = sweep_thresholds(rect, rng, 0..n, mode);
    taus.sort_unstable_by(f64::total_cmp);
    let wall = start.elapsed();
    let z = default_z();
    let points = grid
        .iter()
        .map(|&p| {
            let hits = taus.partition_point(|&tau| tau < p) as u64;
            Estimate::from_hits(hits, n, z, rng, wall)
        })
        .collect();
    Ok(Curve { rect, grid: grid.to_vec(), points })
}

/// Per-edge pivotal frequencies for the horizontal crossing at one `p`,
/// from a single pivotal scan per sample.
#[derive(Debug, Clone, Serialize)]
pub struct MaxPivotalReport {
    pub rect: Rect,
    pub p: f64,
    pub n: u64,
    pub seed: u64,
    pub algorithm: &'static str,
    /// Hits per canonical edge index.
    pub per_edge_hits: Vec<u64>,
    /// Edge attaining the maximum frequency (smallest index on ties).
    pub max_edge: usize,
    /// Estimate of the maximum pivotal probability; the interval uses a
    /// Bonferroni-adjusted quantile over all edges, making it a
    /// conservative simultaneous bound for the maximum.
    pub estimate: Estimate,
}

pub fn estimate_max_pivotal(
    rect: Rect,
    p: f64,
    n: u64,
    rng: RngSpec,
    mode: ExecMode,
) -> Result<MaxPivotalReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    let start = Instant::now();
    let t = mantissa_threshold(p);
    let edge_count = rect.edge_count();
    let per_edge_hits = exec::accumulate_counts(
        mode,
        n,
        edge_count,
        || PivotalScanner::new(rect),
        |scanner, s, acc| {
            scanner.scan_with(|i| rng.label_mantissa(s, i as u64) < t, |e| acc[e] += 1);
        },
    );
    let (max_edge, &hits) = per_edge_hits
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("rectangles have at least one edge");
    let z = stats::z_union_bound(stats::DEFAULT_CONFIDENCE, edge_count);
    let estimate = Estimate::from_hits(hits, n, z, rng, start.elapsed());
    Ok(MaxPivotalReport {
        rect,
        p,
        n,
        seed: rng.seed,
        algorithm: rng.algorithm,
        per_edge_hits,
        max_edge,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{sample_labels, sample};
    use crate::connectivity::has_horizontal_crossing;
    use crate::exec::ExecMode;
    use crate::oracle;

    fn rect(k: u32, l: u32) -> Rect {
        Rect::at_origin(k, l).unwrap()
    }

    fn crossing(r: Rect) -> Event {
        Event::HorizontalCrossing(r)
    }

    #[test]
    fn estimate_validates_inputs() {
        let r = rect(2, 1);
        let rng = RngSpec::new(1);
        assert!(estimate_event(&crossing(r), 1.2, 10, rng, ExecMode::Sequential).is_err());
        assert!(estimate_event(&crossing(r), 0.5, 0, rng, ExecMode::Sequential).is_err());
    }

    #[test]
    fn p_one_estimates_exactly_one() {
        let r = rect(4, 2);
        let est = estimate_event(&crossing(r), 1.0, 10, RngSpec::new(3), ExecMode::Sequential).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert!(est.ci_low <= 1.0 && est.ci_high == 1.0);
    }

    #[test]
    fn estimate_matches_oracle_on_unit_square() {
        // Oracle value 3/4 at p = 1/2; 99.9% band at n = 20000.
        let r = rect(1, 1);
        let est = estimate_event(&crossing(r), 0.5, 20_000, RngSpec::new(42), ExecMode::Parallel).unwrap();
        let (lo, hi) = stats::binomial_band(0.75, est.n, 0.999);
        assert!(est.p_hat >= lo && est.p_hat <= hi, "{} outside [{lo},{hi}]", est.p_hat);
    }

    #[test]
    fn workers_do_not_change_the_numbers() {
        let r = rect(5, 3);
        let rng = RngSpec::new(7);
        let a = estimate_event(&crossing(r), 0.47, 5000, rng, ExecMode::Sequential).unwrap();
        let b = estimate_event(&crossing(r), 0.47, 5000, rng, ExecMode::Parallel).unwrap();
        assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
        assert_eq!(a.ci_low.to_bits(), b.ci_low.to_bits());
        assert_eq!(a.ci_high.to_bits(), b.ci_high.to_bits());

        let mp_a = estimate_max_pivotal(r, 0.5, 2000, rng, ExecMode::Sequential).unwrap();
        let mp_b = estimate_max_pivotal(r, 0.5, 2000, rng, ExecMode::Parallel).unwrap();
        assert_eq!(mp_a.per_edge_hits, mp_b.per_edge_hits);
        assert_eq!(mp_a.max_edge, mp_b.max_edge);

        let grid = [0.2, 0.5, 0.8];
        let c_a = estimate_curve(r, &grid, 3000, rng, ExecMode::Sequential).unwrap();
        let c_b = estimate_curve(r, &grid, 3000, rng, ExecMode::Parallel).unwrap();
        for (x, y) in c_a.points.iter().zip(&c_b.points) {
            assert_eq!(x.p_hat.to_bits(), y.p_hat.to_bits());
        }
    }

    #[test]
    fn sweep_tau_on_unit_square_is_min_of_bottom_and_top() {
        let r = rect(1, 1);
        let rng = RngSpec::new(11);
        for s in 0..200 {
            let labels = sample_labels(r, rng, s);
            let tau = sweep_threshold(r, rng, s).tau;
            let expect = labels.label(0).min(labels.label(1));
            assert_eq!(tau, expect, "sample {s}");
        }
    }

    #[test]
    fn sweep_tau_flips_the_crossing() {
        let r = rect(3, 2);
        let rng = RngSpec::new(23);
        for s in 0..100 {
            let labels = sample_labels(r, rng, s);
            let tau = sweep_threshold(r, rng, s).tau;
            let below = labels.threshold(tau).unwrap();
            assert!(!has_horizontal_crossing(r, &below).unwrap(), "no crossing strictly below tau");
            let above = labels.threshold(tau + 2f64.powi(-53)).unwrap();
            assert!(has_horizontal_crossing(r, &above).unwrap(), "crossing just above tau");
        }
    }

    #[test]
    fn sweep_agrees_with_thresholded_crossing() {
        // Coupling consistency across several levels and samples.
        let r = rect(4, 3);
        let rng = RngSpec::new(5);
        for s in 0..500 {
            let tau = sweep_threshold(r, rng, s).tau;
            for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let cfg = sample(r, p, rng, s).unwrap();
                assert_eq!(
                    has_horizontal_crossing(r, &cfg).unwrap(),
                    p > tau,
                    "sample {s} at p {p}"
                );
            }
        }
    }

    #[test]
    fn curve_is_monotone_and_exact_at_the_ends() {
        let r = rect(3, 2);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let curve = estimate_curve(r, &grid, 4000, RngSpec::new(9), ExecMode::Parallel).unwrap();
        assert_eq!(curve.points.first().unwrap().p_hat, 0.0);
        assert_eq!(curve.points.last().unwrap().p_hat, 1.0);
        for w in curve.points.windows(2) {
            assert!(w[1].p_hat >= w[0].p_hat);
        }
    }

    #[test]
    fn curve_matches_oracle_on_two_by_one() {
        let r = rect(2, 1);
        let curve = estimate_curve(r, &[0.5], 20_000, RngSpec::new(31), ExecMode::Parallel).unwrap();
        let (lo, hi) = stats::binomial_band(0.5, 20_000, 0.999);
        let got = curve.points[0].p_hat;
        assert!(got >= lo && got <= hi, "{got} outside [{lo},{hi}]");
    }

    #[test]
    fn max_pivotal_on_unit_square_matches_oracle() {
        // max_e Pr(edge pivotal) at p = 1/2 is 1/2, attained at the
        // bottom and top edges.
        let r = rect(1, 1);
        let report = estimate_max_pivotal(r, 0.5, 20_000, RngSpec::new(13), ExecMode::Parallel).unwrap();
        assert!(report.max_edge == 0 || report.max_edge == 1);
        let (lo, hi) = stats::binomial_band(0.5, report.n, 0.999);
        assert!(report.estimate.p_hat >= lo && report.estimate.p_hat <= hi);
        // Exact cross-check of the per-edge frequencies against the
        // enumeration oracle at the two never-pivotal side edges.
        let left = oracle::exact_pivotal_probability(r, 2, ExecMode::Sequential).unwrap();
        assert_eq!(left.satisfying_states(), 0);
        assert_eq!(report.per_edge_hits[2], 0);
        assert_eq!(report.per_edge_hits[3], 0);
    }

    #[test]
    fn all_open_robust_rectangles_have_no_pivotal_edges_at_p_one() {
        // With every edge open and l >= 1 there are two edge-disjoint
        // crossing rows, so no single closure is pivotal.
        for r in [rect(2, 1), rect(4, 2)] {
            let report = estimate_max_pivotal(r, 1.0, 50, RngSpec::new(1), ExecMode::Sequential).unwrap();
            assert_eq!(report.estimate.p_hat, 0.0);
            assert!(report.per_edge_hits.iter().all(|&h| h == 0));
        }
    }
}
