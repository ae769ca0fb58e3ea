//! Sharp-threshold experiments: the crossing floor at p = 1/2, the
//! width of the threshold window, arm-probability decay at p = 1/2, and
//! supercritical crossing growth with rectangle size.

use serde::Serialize;

use crate::config::RngSpec;
use crate::connectivity::{edge_endpoint_ids, DisjointSets, Event};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::lattice::{Rect, Vertex};
use crate::montecarlo::{self, Estimate, MaxPivotalReport};
use crate::stats;

/// Sampling budget for `measure_window`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowBudget {
    /// Sweeps drawn before the first bisection step.
    pub initial_sweeps: u64,
    /// Hard cap on the shared sweep pool.
    pub max_sweeps: u64,
    /// Samples for the companion max-pivotal measurement at p = 1/2.
    pub pivotal_samples: u64,
}

impl Default for WindowBudget {
    fn default() -> Self {
        WindowBudget { initial_sweeps: 4096, max_sweeps: 131_072, pivotal_samples: 20_000 }
    }
}

/// Where the crossing curve passes a target level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelLocation {
    pub target: f64,
    pub p: f64,
    /// Set when the sweep budget ran out before the interval at some
    /// bisection point excluded the target; the location then rests on
    /// point estimates.
    pub uncertain: bool,
}

/// The measured threshold window of one rectangle, with the companion
/// max-pivotal measurement at p = 1/2.
#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub rect: Rect,
    pub epsilon: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub width: f64,
    pub low: LevelLocation,
    pub high: LevelLocation,
    /// Total sweeps in the shared pool when bisection finished.
    pub sweeps_used: u64,
    pub max_pivotal: MaxPivotalReport,
    pub seed: u64,
    pub algorithm: &'static str,
}

/// Shared, growable pool of threshold samples; every level query reads
/// the same coupled sweeps, so estimates are monotone in p exactly.
struct TauPool {
    rect: Rect,
    rng: RngSpec,
    mode: ExecMode,
    sorted: Vec<f64>,
}

impl TauPool {
    fn new(rect: Rect, rng: RngSpec, mode: ExecMode) -> Self {
        TauPool { rect, rng, mode, sorted: Vec::new() }
    }

    fn len(&self) -> u64 {
        self.sorted.len() as u64
    }

    fn grow_to(&mut self, target: u64) {
        let have = self.len();
        if target <= have {
            return;
        }
        let fresh = montecarlo::sweep_thresholds(self.rect, self.rng, have..target, self.mode);
        self.sorted.extend(fresh);
        self.sorted.sort_unstable_by(f64::total_cmp);
    }

    fn hits_below(&self, p: f64) -> u64 {
        self.sorted.partition_point(|&tau| tau < p) as u64
    }
}

const WINDOW_P_RESOLUTION: f64 = 1e-3;

fn locate_level(pool: &mut TauPool, target: f64, budget: &WindowBudget) -> LevelLocation {
    let z = stats::z_for_confidence(stats::DEFAULT_CONFIDENCE);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut uncertain = false;
    while hi - lo > WINDOW_P_RESOLUTION {
        let mid = (lo + hi) / 2.0;
        loop {
            let hits = pool.hits_below(mid);
            let (ci_low, ci_high) = stats::wilson_interval(hits, pool.len(), z);
            if ci_low > target {
                hi = mid;
                break;
            }
            if ci_high < target {
                lo = mid;
                break;
            }
            if pool.len() >= budget.max_sweeps {
                uncertain = true;
                if hits as f64 / pool.len() as f64 >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
                break;
            }
            pool.grow_to((pool.len() * 2).min(budget.max_sweeps));
        }
    }
    LevelLocation { target, p: (lo + hi) / 2.0, uncertain }
}

/// Locates `p_low` with `Pr(H) ~ epsilon` and `p_high` with
/// `Pr(H) ~ 1 - epsilon` by monotone bisection over a shared pool of
/// coupled sweeps, growing the pool until the Wilson interval at the
/// candidate excludes the target or the resolution reaches 1e-3. A
/// drained budget flags the affected endpoint instead of failing.
pub fn measure_window(
    rect: Rect,
    epsilon: f64,
    rng: RngSpec,
    budget: &WindowBudget,
    mode: ExecMode,
) -> Result<WindowReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let mut pool = TauPool::new(rect, rng, mode);
    pool.grow_to(budget.initial_sweeps.max(2));
    let low = locate_level(&mut pool, epsilon, budget);
    let high = locate_level(&mut pool, 1.0 - epsilon, budget);
    // The shared pool makes the empirical curve exactly monotone, so the
    // two bisections cannot cross by more than the p-resolution.
    let p_low = low.p.min(high.p);
    let p_high = high.p.max(low.p);
    let max_pivotal = montecarlo::estimate_max_pivotal(rect, 0.5, budget.pivotal_samples, rng, mode)?;
    Ok(WindowReport {
        rect,
        epsilon,
        p_low,
        p_high,
        width: p_high - p_low,
        low,
        high,
        sweeps_used: pool.len(),
        max_pivotal,
        seed: rng.seed,
        algorithm: rng.algorithm,
    })
}

/// One rectangle-size row of a crossing table.
#[derive(Debug, Clone, Serialize)]
pub struct CrossingRow {
    pub n: u32,
    pub rect: Rect,
    pub estimate: Estimate,
}

fn crossing_table(
    ns: &[u32],
    aspect: u32,
    p: f64,
    samples: u64,
    rng: RngSpec,
    mode: ExecMode,
) -> Result<Vec<CrossingRow>> {
    ns.iter()
        .map(|&n| {
            let rect = Rect::at_origin(aspect * n, n)?;
            let estimate = montecarlo::estimate_event(&Event::HorizontalCrossing(rect), p, samples, rng, mode)?;
            Ok(CrossingRow { n, rect, estimate })
        })
        .collect()
}

/// Crossing estimates for aspect-ratio rectangles at p = 1/2, checked
/// against a uniform positive floor.
#[derive(Debug, Clone, Serialize)]
pub struct RswReport {
    pub p: f64,
    pub aspect: u32,
    pub floor: f64,
    pub rows: Vec<CrossingRow>,
}

impl RswReport {
    /// Every estimate clears the floor with its whole interval.
    pub fn floor_ok(&self) -> bool {
        self.rows.iter().all(|r| r.estimate.ci_low >= self.floor)
    }

    /// Largest difference between successive estimates.
    pub fn max_successive_difference(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| (w[1].estimate.p_hat - w[0].estimate.p_hat).abs())
            .fold(0.0, f64::max)
    }
}

/// Estimates `Pr_{1/2}(H)` on `aspect*n x n` rectangles for each `n`.
pub fn rsw_floor_check(
    ns: &[u32],
    aspect: u32,
    samples: u64,
    floor: f64,
    rng: RngSpec,
    mode: ExecMode,
) -> Result<RswReport> {
    let rows = crossing_table(ns, aspect, 0.5, samples, rng, mode)?;
    Ok(RswReport { p: 0.5, aspect, floor, rows })
}

/// Supercritical crossing table for `aspect*n x n` rectangles.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Report {
    pub p: f64,
    pub aspect: u32,
    pub target: f64,
    pub rows: Vec<CrossingRow>,
}

impl Lemma2Report {
    /// No successive pair decreases beyond the joint interval noise.
    pub fn nondecreasing_beyond_ci(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].estimate.ci_high >= w[0].estimate.ci_low)
    }

    /// The largest rectangle clears the target.
    pub fn final_target_ok(&self) -> bool {
        self.rows.last().map(|r| r.estimate.p_hat >= self.target).unwrap_or(false)
    }
}

/// Estimates `Pr_p(H)` for a fixed `p > 1/2` across rectangle sizes.
pub fn lemma2_check(
    p: f64,
    ns: &[u32],
    aspect: u32,
    samples: u64,
    target: f64,
    rng: RngSpec,
    mode: ExecMode,
) -> Result<Lemma2Report> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if p <= 0.5 {
        return Err(Error::SubcriticalP(p));
    }
    let rows = crossing_table(ns, aspect, p, samples, rng, mode)?;
    Ok(Lemma2Report { p, aspect, target, rows })
}

/// One radius row of an arm-decay table.
#[derive(Debug, Clone, Serialize)]
pub struct ArmRow {
    pub radius: u32,
    pub estimate: Estimate,
}

/// Paired drop between consecutive radii, from the shared samples; the
/// nested indicators make the per-sample drop `{arm at r} and not
/// {arm at r'}` a plain binomial.
#[derive(Debug, Clone, Serialize)]
pub struct ArmDrop {
    pub from_radius: u32,
    pub to_radius: u32,
    pub drop_hits: u64,
    pub drop_ci_low: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmDecayReport {
    pub p: f64,
    pub center: (i64, i64),
    pub n: u64,
    pub seed: u64,
    pub algorithm: &'static str,
    pub rows: Vec<ArmRow>,
    pub drops: Vec<ArmDrop>,
}

impl ArmDecayReport {
    /// Every consecutive pair decreases by a margin the paired interval
    /// keeps away from zero.
    pub fn strictly_decreasing_beyond_ci(&self) -> bool {
        !self.drops.is_empty() && self.drops.iter().all(|d| d.drop_ci_low > 0.0)
    }
}

/// Scratch for the incremental per-sample evaluation of nested arm
/// events: edges enter the union-find structure ordered by the smallest
/// ball that contains them, pausing at each requested radius.
struct ArmSweep {
    ball: Rect,
    center_id: u32,
    /// Edge indices of the outer ball, grouped by target radius.
    groups: Vec<Vec<u32>>,
    /// Ring vertex ids at each target radius.
    rings: Vec<Vec<u32>>,
    dsu: DisjointSets,
}

impl ArmSweep {
    fn new(center: Vertex, radii: &[u32]) -> Self {
        let r_max = *radii.last().expect("radii nonempty");
        let ball = Rect::ball(center, r_max).expect("radius >= 1");
        let enclosing = |i: usize| -> u64 {
            let (a, b) = ball.edge_at(i).expect("index in range").endpoints();
            a.linf_distance(center).max(b.linf_distance(center))
        };
        let mut groups = vec![Vec::new(); radii.len()];
        for i in 0..ball.edge_count() {
            let r = enclosing(i);
            if let Some(g) = radii.iter().position(|&t| r <= u64::from(t)) {
                groups[g].push(i as u32);
            }
        }
        let rings = radii
            .iter()
            .map(|&r| {
                (0..ball.vertex_count())
                    .filter(|&i| ball.vertex_at(i).linf_distance(center) == u64::from(r))
                    .map(|i| i as u32)
                    .collect()
            })
            .collect();
        ArmSweep {
            ball,
            center_id: ball.vertex_index(center).expect("center inside ball") as u32,
            groups,
            rings,
            dsu: DisjointSets::default(),
        }
    }

    /// Indicator bitmask over the radius list for one sample.
    fn indicators(&mut self, mut is_open: impl FnMut(usize) -> bool) -> u32 {
        self.dsu.reset(self.ball.vertex_count());
        let mut mask = 0u32;
        for g in 0..self.groups.len() {
            for gi in 0..self.groups[g].len() {
                let i = self.groups[g][gi] as usize;
                if is_open(i) {
                    let (a, b) = edge_endpoint_ids(self.ball, i);
                    self.dsu.union(a, b);
                }
            }
            let root = self.dsu.find(self.center_id);
            let hit = self.rings[g].iter().any(|&v| self.dsu.find(v) == root);
            if hit {
                mask |= 1 << g;
            }
        }
        mask
    }
}

/// Estimates `Pr_p(arm to radius r)` for every requested radius from
/// common samples, so the table is exactly nonincreasing, together with
/// the paired drops between consecutive radii.
pub fn arm_decay(
    p: f64,
    radii: &[u32],
    samples: u64,
    rng: RngSpec,
    mode: ExecMode,
) -> Result<ArmDecayReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] == 0 {
        return Err(Error::InvalidRadii);
    }
    assert!(radii.len() <= 31, "radius list fits a u32 indicator mask");
    let center = Vertex::new(0, 0);
    let t = crate::config::mantissa_threshold(p);
    let m = radii.len();
    // Layout: hits per radius, then drop hits per consecutive pair.
    let counts = exec::accumulate_counts(
        mode,
        samples,
        2 * m - 1,
        || ArmSweep::new(center, radii),
        |sweep, s, acc| {
            let mask = sweep.indicators(|i| rng.label_mantissa(s, i as u64) < t);
            for g in 0..m {
                acc[g] += u64::from(mask >> g & 1);
            }
            for g in 0..m - 1 {
                acc[m + g] += u64::from(mask >> g & 1 == 1 && mask >> (g + 1) & 1 == 0);
            }
        },
    );
    let z = stats::z_for_confidence(stats::DEFAULT_CONFIDENCE);
    let rows = radii
        .iter()
        .enumerate()
        .map(|(g, &radius)| ArmRow {
            radius,
            estimate: {
                let (ci_low, ci_high) = stats::wilson_interval(counts[g], samples, z);
                Estimate {
                    p_hat: counts[g] as f64 / samples as f64,
                    ci_low,
                    ci_high,
                    n: samples,
                    seed: rng.seed,
                    algorithm: rng.algorithm,
                    wall_time: std::time::Duration::ZERO,
                }
            },
        })
        .collect();
    let drops = (0..m - 1)
        .map(|g| {
            let hits = counts[m + g];
            let (lo, _) = stats::wilson_interval(hits, samples, z);
            ArmDrop { from_radius: radii[g], to_radius: radii[g + 1], drop_hits: hits, drop_ci_low: lo }
        })
        .collect();
    Ok(ArmDecayReport {
        p,
        center: (center.x, center.y),
        n: samples,
        seed: rng.seed,
        algorithm: rng.algorithm,
        rows,
        drops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::sample;
    use crate::connectivity::arm_event;
    use crate::oracle;

    const MODE: ExecMode = ExecMode::Parallel;

    #[test]
    fn window_brackets_the_self_dual_point_on_two_by_one() {
        // The exact curve of the 2x1 rectangle passes 1/2 at p = 1/2 and
        // is strictly monotone, so a quarter-window must bracket 1/2.
        let rect = Rect::at_origin(2, 1).unwrap();
        let budget = WindowBudget { initial_sweeps: 2048, max_sweeps: 65_536, pivotal_samples: 2000 };
        let report = measure_window(rect, 0.25, RngSpec::new(6), &budget, MODE).unwrap();
        assert!(report.p_low <= report.p_high);
        assert!(report.p_low < 0.5 && 0.5 < report.p_high, "{report:?}");
        // Cross-check the endpoints against the exact curve: the level
        // at p_low should be near epsilon, at p_high near 1 - epsilon.
        let poly = oracle::exact_probability(&Event::HorizontalCrossing(rect), MODE).unwrap();
        assert!((poly.evaluate(report.p_low).unwrap() - 0.25).abs() < 0.03, "{report:?}");
        assert!((poly.evaluate(report.p_high).unwrap() - 0.75).abs() < 0.03, "{report:?}");
    }

    #[test]
    fn window_rejects_bad_epsilon() {
        let rect = Rect::at_origin(2, 1).unwrap();
        let budget = WindowBudget::default();
        assert!(measure_window(rect, 0.0, RngSpec::new(1), &budget, MODE).is_err());
        assert!(measure_window(rect, 0.5, RngSpec::new(1), &budget, MODE).is_err());
    }

    #[test]
    fn exhausted_budget_is_flagged_not_silent() {
        let rect = Rect::at_origin(3, 1).unwrap();
        let budget = WindowBudget { initial_sweeps: 16, max_sweeps: 32, pivotal_samples: 100 };
        let report = measure_window(rect, 0.4, RngSpec::new(2), &budget, MODE).unwrap();
        assert!(report.low.uncertain || report.high.uncertain);
        assert!(report.p_low <= report.p_high);
    }

    #[test]
    fn lemma2_requires_supercritical_p() {
        assert!(lemma2_check(0.5, &[2], 3, 10, 0.5, RngSpec::new(1), MODE).is_err());
        assert!(lemma2_check(0.4, &[2], 3, 10, 0.5, RngSpec::new(1), MODE).is_err());
    }

    #[test]
    fn lemma2_at_p_one_is_exactly_one() {
        let report = lemma2_check(1.0, &[2, 4], 3, 20, 0.99, RngSpec::new(1), MODE).unwrap();
        for row in &report.rows {
            assert_eq!(row.estimate.p_hat, 1.0);
        }
        assert!(report.nondecreasing_beyond_ci());
        assert!(report.final_target_ok());
    }

    #[test]
    fn coupled_estimates_are_monotone_in_p() {
        // At fixed n, the curve estimate from common sweeps at 0.55 is
        // dominated by the one at 0.6, exactly.
        let rect = Rect::at_origin(9, 3).unwrap();
        let curve =
            montecarlo::estimate_curve(rect, &[0.55, 0.6], 2000, RngSpec::new(4), MODE).unwrap();
        assert!(curve.points[1].p_hat >= curve.points[0].p_hat);
    }

    #[test]
    fn arm_decay_validates_radii() {
        let rng = RngSpec::new(1);
        assert!(arm_decay(0.5, &[], 10, rng, MODE).is_err());
        assert!(arm_decay(0.5, &[4, 4], 10, rng, MODE).is_err());
        assert!(arm_decay(0.5, &[8, 4], 10, rng, MODE).is_err());
        assert!(arm_decay(0.5, &[0, 4], 10, rng, MODE).is_err());
        assert!(arm_decay(1.5, &[4], 10, rng, MODE).is_err());
    }

    #[test]
    fn arm_decay_rows_are_nonincreasing_exactly() {
        let report = arm_decay(0.5, &[2, 4, 8], 2000, RngSpec::new(3), MODE).unwrap();
        for w in report.rows.windows(2) {
            assert!(w[1].estimate.p_hat <= w[0].estimate.p_hat);
        }
        // Drops accumulate to the total decay.
        let total_drop: u64 = report.drops.iter().map(|d| d.drop_hits).sum();
        let first = (report.rows[0].estimate.p_hat * report.n as f64).round() as u64;
        let last = (report.rows.last().unwrap().estimate.p_hat * report.n as f64).round() as u64;
        assert_eq!(first - last, total_drop);
    }

    #[test]
    fn arm_sweep_matches_single_arm_events() {
        // The incremental nested evaluation agrees with the standalone
        // arm event at every radius.
        let radii = [1u32, 2, 3];
        let rng = RngSpec::new(21);
        let center = Vertex::new(0, 0);
        let ball = Rect::ball(center, 3).unwrap();
        let mut sweep = ArmSweep::new(center, &radii);
        let t = crate::config::mantissa_threshold(0.5);
        for s in 0..300 {
            let mask = sweep.indicators(|i| rng.label_mantissa(s, i as u64) < t);
            let cfg = sample(ball, 0.5, rng, s).unwrap();
            for (g, &r) in radii.iter().enumerate() {
                assert_eq!(
                    mask >> g & 1 == 1,
                    arm_event(center, r, &cfg).unwrap(),
                    "sample {s} radius {r}"
                );
            }
        }
    }

    #[test]
    fn tables_regenerate_bit_identically() {
        let rng = RngSpec::new(8);
        let a = rsw_floor_check(&[2, 4], 3, 500, 0.01, rng, ExecMode::Sequential).unwrap();
        let b = rsw_floor_check(&[2, 4], 3, 500, 0.01, rng, ExecMode::Parallel).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.estimate.p_hat.to_bits(), y.estimate.p_hat.to_bits());
        }
        let c = arm_decay(0.5, &[2, 4], 500, rng, ExecMode::Sequential).unwrap();
        let d = arm_decay(0.5, &[2, 4], 500, rng, ExecMode::Parallel).unwrap();
        for (x, y) in c.rows.iter().zip(&d.rows) {
            assert_eq!(x.estimate.p_hat.to_bits(), y.estimate.p_hat.to_bits());
        }
    }
}
