//! Exact exhaustive-enumeration ground truth on small rectangles.
//!
//! Probabilities of local events are represented as crossing
//! polynomials: integer counts `N_j` of satisfying configurations with
//! exactly `j` open edges, so that `Pr_p(A) = sum_j N_j p^j (1-p)^(E-j)`.
//! All identities (the derivative formula, the duality refinement, the
//! inequality scheme) are checked in exact integer arithmetic;
//! floating point only ever appears when a polynomial is evaluated for
//! reporting.

use serde::Serialize;

use crate::connectivity::{Event, EventEvaluator};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::lattice::{DualGraph, Rect, Vertex};

/// Largest edge count accepted for plain event enumeration (2^E states).
pub const EVENT_ENUMERATION_CAP: usize = 24;
/// Largest edge count accepted for per-edge identities and path events.
pub const IDENTITY_ENUMERATION_CAP: usize = 20;

/// Exact distribution of an event by open-edge count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossingPolynomial {
    rect: Rect,
    counts: Vec<u64>,
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl CrossingPolynomial {
    pub fn rect(&self) -> Rect {
        self.rect
    }

    /// `counts[j]` = number of satisfying states with `j` open edges.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn edge_count(&self) -> usize {
        self.counts.len() - 1
    }

    /// Total number of satisfying states.
    pub fn satisfying_states(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Pr_p(A)` in floating point.
    pub fn evaluate(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let e = self.edge_count() as i32;
        let q = 1.0 - p;
        Ok(self
            .counts
            .iter()
            .enumerate()
            .map(|(j, &n)| n as f64 * p.powi(j as i32) * q.powi(e - j as i32))
            .sum())
    }

    /// Exact evaluation at the rational `p = num/den`, unreduced, with
    /// denominator `den^E`.
    fn evaluate_rational_raw(&self, num: u64, den: u64) -> Result<(u128, u128)> {
        if den == 0 || num > den {
            return Err(Error::InvalidProbability(num as f64 / den as f64));
        }
        let e = self.edge_count() as u32;
        let den128 = u128::from(den);
        let full = den128.checked_pow(e).ok_or(Error::RationalOverflow)?;
        let p = u128::from(num);
        let q = den128 - p;
        // Walk j upward keeping p^j and q^(E-j) incrementally.
        let mut q_pows = vec![1u128; e as usize + 1];
        for i in 1..=e as usize {
            q_pows[i] = q_pows[i - 1].checked_mul(q).ok_or(Error::RationalOverflow)?;
        }
        let mut p_pow = 1u128;
        let mut total = 0u128;
        for (j, &n) in self.counts.iter().enumerate() {
            let term = u128::from(n)
                .checked_mul(p_pow)
                .and_then(|t| t.checked_mul(q_pows[e as usize - j]))
                .ok_or(Error::RationalOverflow)?;
            total = total.checked_add(term).ok_or(Error::RationalOverflow)?;
            if j < e as usize {
                p_pow = p_pow.checked_mul(p).ok_or(Error::RationalOverflow)?;
            }
        }
        Ok((total, full))
    }

    /// Exact `Pr_{num/den}(A)` as a reduced fraction.
    pub fn evaluate_rational(&self, num: u64, den: u64) -> Result<(u128, u128)> {
        let (n, d) = self.evaluate_rational_raw(num, den)?;
        let g = gcd(n, d);
        Ok((n / g, d / g))
    }

    /// Counts of the complementary event: `C(E, j) - N_j`.
    pub fn complement(&self) -> CrossingPolynomial {
        let e = self.edge_count();
        let counts = self
            .counts
            .iter()
            .enumerate()
            .map(|(j, &n)| binomial(e, j) - n)
            .collect();
        CrossingPolynomial { rect: self.rect, counts }
    }

    /// Coefficients of `sum_j N_j p^j (1-p)^(E-j)` in the monomial basis,
    /// exact: entry `t` is the coefficient of `p^t`.
    pub fn monomial_coefficients(&self) -> Vec<i128> {
        let e = self.edge_count();
        let mut coeffs = vec![0i128; e + 1];
        for (j, &n) in self.counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            // N_j p^j (1-p)^(E-j) = N_j sum_m C(E-j, m) (-1)^m p^(j+m)
            for m in 0..=(e - j) {
                let c = binomial(e - j, m) as i128 * n as i128;
                if m % 2 == 0 {
                    coeffs[j + m] += c;
                } else {
                    coeffs[j + m] -= c;
                }
            }
        }
        coeffs
    }
}

/// Anything evaluable on a bitmask state over a rectangle's edges. Bit
/// `i` of the state is 1 iff edge `i` is open.
trait StateEvent {
    fn holds(&mut self, state: u64) -> bool;
}

struct EventOnState(EventEvaluator);

impl StateEvent for EventOnState {
    fn holds(&mut self, state: u64) -> bool {
        self.0.eval(|i| state >> i & 1 == 1)
    }
}

fn check_cap(rect: Rect, cap: usize) -> Result<usize> {
    let e = rect.edge_count();
    if e > cap {
        return Err(Error::EnumerationTooLarge { edges: e, cap });
    }
    Ok(e)
}

/// Bit table of an event over all `2^E` states, packed 64 states per
/// word. Workers own disjoint words, so partitioning cannot change the
/// result.
fn state_table<T, F>(rect: Rect, cap: usize, mode: ExecMode, make: F) -> Result<Vec<u64>>
where
    T: StateEvent,
    F: Fn() -> T + Sync + Send,
{
    let e = check_cap(rect, cap)?;
    let states = 1u64 << e;
    let words = states.div_ceil(64);
    Ok(exec::map_collect_init(mode, words, make, |ev, w| {
        let base = w * 64;
        let mut word = 0u64;
        for b in 0..64u64.min(states - base) {
            if ev.holds(base + b) {
                word |= 1 << b;
            }
        }
        word
    }))
}

fn table_bit(table: &[u64], state: u64) -> bool {
    table[(state / 64) as usize] >> (state % 64) & 1 == 1
}

fn counts_from_table(rect: Rect, table: &[u64], mode: ExecMode) -> CrossingPolynomial {
    let e = rect.edge_count();
    let states = 1u64 << e;
    let words = states.div_ceil(64);
    let counts = exec::accumulate_counts(mode, words, e + 1, || (), |_, w, acc| {
        let base = w * 64;
        let mut word = table[w as usize];
        while word != 0 {
            let b = word.trailing_zeros() as u64;
            acc[(base + b).count_ones() as usize] += 1;
            word &= word - 1;
        }
    });
    CrossingPolynomial { rect, counts }
}

/// Exact probability of a local event by full enumeration of all `2^E`
/// states of its domain rectangle. Refuses domains above
/// `EVENT_ENUMERATION_CAP` edges.
pub fn exact_probability(event: &Event, mode: ExecMode) -> Result<CrossingPolynomial> {
    let rect = event.domain();
    let table = state_table(rect, EVENT_ENUMERATION_CAP, mode, || EventOnState(EventEvaluator::new(event)))?;
    Ok(counts_from_table(rect, &table, mode))
}

/// Exact counts of the event "edge `e` is pivotal for the horizontal
/// crossing": the crossing holds in exactly one of the two states that
/// force `e` open or closed.
pub fn exact_pivotal_probability(rect: Rect, e: usize, mode: ExecMode) -> Result<CrossingPolynomial> {
    if e >= rect.edge_count() {
        return Err(Error::EdgeIndexOutOfRange { index: e, edge_count: rect.edge_count() });
    }
    let event = Event::HorizontalCrossing(rect);
    let table = state_table(rect, EVENT_ENUMERATION_CAP, mode, || EventOnState(EventEvaluator::new(&event)))?;
    let bit = 1u64 << e;
    let ec = rect.edge_count();
    let states = 1u64 << ec;
    let words = states.div_ceil(64);
    let counts = exec::accumulate_counts(mode, words, ec + 1, || (), |_, w, acc| {
        for b in 0..64u64.min(states - w * 64) {
            let s = w * 64 + b;
            if table_bit(&table, s | bit) != table_bit(&table, s & !bit) {
                acc[s.count_ones() as usize] += 1;
            }
        }
    });
    Ok(CrossingPolynomial { rect, counts })
}

/// Result of checking the exact derivative identity
/// `d/dp Pr_p(H) = sum_e Pr_p(edge e pivotal)` on one rectangle.
#[derive(Debug, Clone, Serialize)]
pub struct RussoReport {
    pub rect: Rect,
    /// Largest absolute difference between integer monomial
    /// coefficients of the two sides; the identity demands exactly 0.
    pub max_abs_residual: u128,
}

impl RussoReport {
    pub fn holds(&self) -> bool {
        self.max_abs_residual == 0
    }
}

/// Verifies the derivative identity as an exact polynomial identity in
/// integer arithmetic.
pub fn russo_derivative_check(rect: Rect, mode: ExecMode) -> Result<RussoReport> {
    let e = check_cap(rect, IDENTITY_ENUMERATION_CAP)?;
    let crossing = exact_probability(&Event::HorizontalCrossing(rect), mode)?;
    let coeffs = crossing.monomial_coefficients();
    let mut derivative = vec![0i128; e + 1];
    for t in 0..e {
        derivative[t] = (t as i128 + 1) * coeffs[t + 1];
    }

    let per_edge = exec::map_collect(mode, e as u64, |idx| {
        exact_pivotal_probability(rect, idx as usize, ExecMode::Sequential)
            .expect("cap already checked")
            .monomial_coefficients()
    });
    let mut rhs = vec![0i128; e + 1];
    for c in per_edge {
        for (t, v) in c.into_iter().enumerate() {
            rhs[t] += v;
        }
    }

    let max_abs_residual = derivative
        .iter()
        .zip(&rhs)
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0);
    Ok(RussoReport { rect, max_abs_residual })
}

/// Self-avoiding path search over the open edges of one rectangle.
struct PathSearcher {
    adj: Vec<Vec<(usize, u32)>>,
    start: u32,
    min_len: usize,
}

impl PathSearcher {
    fn new(rect: Rect, from: Vertex, min_len: usize) -> Result<Self> {
        assert!(rect.vertex_count() <= 64, "vertex mask is a u64");
        let mut adj = vec![Vec::new(); rect.vertex_count()];
        for (i, edge) in rect.edges().enumerate() {
            let (a, b) = edge.endpoints();
            let ai = rect.vertex_index(a)? as u32;
            let bi = rect.vertex_index(b)? as u32;
            adj[ai as usize].push((i, bi));
            adj[bi as usize].push((i, ai));
        }
        Ok(PathSearcher { adj, start: rect.vertex_index(from)? as u32, min_len })
    }

    fn dfs(&self, u: u32, need: usize, visited: u64, state: u64) -> bool {
        if need == 0 {
            return true;
        }
        for &(e, w) in &self.adj[u as usize] {
            if state >> e & 1 == 1 && visited >> w & 1 == 0 && self.dfs(w, need - 1, visited | 1 << w, state) {
                return true;
            }
        }
        false
    }
}

impl StateEvent for PathSearcher {
    fn holds(&mut self, state: u64) -> bool {
        self.dfs(self.start, self.min_len, 1u64 << self.start, state)
    }
}

/// Exact counts of "there is a self-avoiding open path of length at
/// least `min_len` edges starting at `from` inside `rect`".
pub fn exact_path_event(rect: Rect, from: Vertex, min_len: usize, mode: ExecMode) -> Result<CrossingPolynomial> {
    check_cap(rect, IDENTITY_ENUMERATION_CAP)?;
    if min_len > rect.edge_count() {
        let counts = vec![0u64; rect.edge_count() + 1];
        return Ok(CrossingPolynomial { rect, counts });
    }
    let probe = PathSearcher::new(rect, from, min_len)?; // validate inputs before spawning workers
    drop(probe);
    let table = state_table(rect, IDENTITY_ENUMERATION_CAP, mode, || {
        PathSearcher::new(rect, from, min_len).expect("inputs validated")
    })?;
    Ok(counts_from_table(rect, &table, mode))
}

/// Self-avoiding dual path search: a path of total length at least
/// `min_len` passing through the fixed dual vertex, on dual edges whose
/// primal partners are closed. The partner of `forced_edge` counts as
/// usable regardless of its state.
struct DualThroughSearcher {
    adj: Vec<Vec<(usize, u32)>>,
    through: u32,
    forced_edge: usize,
    min_len: usize,
}

impl DualThroughSearcher {
    fn new(dual: &DualGraph, through: u32, forced_edge: usize, min_len: usize) -> Self {
        assert!(dual.vertex_count() <= 64, "dual vertex mask is a u64");
        let mut adj = vec![Vec::new(); dual.vertex_count()];
        for de in dual.edges() {
            let a = dual.vertex_index(de.a).unwrap() as u32;
            let b = dual.vertex_index(de.b).unwrap() as u32;
            adj[a as usize].push((de.primal, b));
            adj[b as usize].push((de.primal, a));
        }
        DualThroughSearcher { adj, through, forced_edge, min_len }
    }

    fn usable(&self, primal: usize, state: u64) -> bool {
        primal == self.forced_edge || state >> primal & 1 == 0
    }

    /// Plain arm: a self-avoiding path of `need` more edges from `u`.
    fn arm(&self, u: u32, need: usize, visited: u64, state: u64) -> bool {
        if need == 0 {
            return true;
        }
        for &(e, w) in &self.adj[u as usize] {
            if self.usable(e, state) && visited >> w & 1 == 0 && self.arm(w, need - 1, visited | 1 << w, state) {
                return true;
            }
        }
        false
    }

    /// First arm extension; at every prefix, try to complete the total
    /// length with a second arm from `through` that avoids the first.
    fn two_arms(&self, u: u32, len1: usize, visited: u64, state: u64) -> bool {
        if len1 >= self.min_len || self.arm(self.through, self.min_len - len1, visited, state) {
            return true;
        }
        for &(e, w) in &self.adj[u as usize] {
            if self.usable(e, state) && visited >> w & 1 == 0 && self.two_arms(w, len1 + 1, visited | 1 << w, state) {
                return true;
            }
        }
        false
    }
}

impl StateEvent for DualThroughSearcher {
    fn holds(&mut self, state: u64) -> bool {
        self.two_arms(self.through, 0, 1u64 << self.through, state)
    }
}

/// One grid point of the inequality check, exact on both sides over the
/// common denominator `den^E`.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityPoint {
    pub p_num: u32,
    pub p_den: u32,
    pub pivotal: u128,
    pub primal_bound: u128,
    pub dual_bound: u128,
    pub primal_ok: bool,
    pub dual_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub rect: Rect,
    pub edge: usize,
    pub primal_min_len: usize,
    pub dual_min_len: usize,
    pub points: Vec<InequalityPoint>,
}

impl InequalityReport {
    pub fn all_ok(&self) -> bool {
        self.points.iter().all(|pt| pt.primal_ok && pt.dual_ok)
    }
}

/// Checks, pointwise and in exact arithmetic, that the pivotal
/// probability of `e` is bounded by twice the best endpoint path event
/// of length `ceil((k-1)/2)`, and by twice the best dual through-path
/// event of length `l+1` at the endpoints of the dual partner.
pub fn pivotal_inequality_check(
    rect: Rect,
    e: usize,
    grid: &[(u32, u32)],
    mode: ExecMode,
) -> Result<InequalityReport> {
    check_cap(rect, IDENTITY_ENUMERATION_CAP)?;
    let pivotal = exact_pivotal_probability(rect, e, mode)?;

    let primal_min_len = (rect.k() as usize).saturating_sub(1).div_ceil(2);
    let edge = rect.edge_at(e)?;
    let (u, v) = edge.endpoints();
    let path_u = exact_path_event(rect, u, primal_min_len, mode)?;
    let path_v = exact_path_event(rect, v, primal_min_len, mode)?;

    let dual_min_len = rect.l() as usize + 1;
    let dual_graph = rect.dual();
    let dual_polys: Vec<CrossingPolynomial> = match dual_graph.partner_of_primal(e) {
        None => Vec::new(),
        Some(de) => [de.a, de.b]
            .iter()
            .map(|&w| {
                let wid = dual_graph.vertex_index(w).unwrap() as u32;
                let table = state_table(rect, IDENTITY_ENUMERATION_CAP, mode, || {
                    DualThroughSearcher::new(&dual_graph, wid, e, dual_min_len)
                })?;
                Ok(counts_from_table(rect, &table, mode))
            })
            .collect::<Result<_>>()?,
    };

    let mut points = Vec::with_capacity(grid.len());
    for &(num, den) in grid {
        let (lhs, _) = pivotal.evaluate_rational_raw(num.into(), den.into())?;
        let primal_best = path_u
            .evaluate_rational_raw(num.into(), den.into())?
            .0
            .max(path_v.evaluate_rational_raw(num.into(), den.into())?.0);
        let dual_best = dual_polys
            .iter()
            .map(|poly| poly.evaluate_rational_raw(num.into(), den.into()).map(|(n, _)| n))
            .try_fold(0u128, |best, n| n.map(|n| best.max(n)))?;
        points.push(InequalityPoint {
            p_num: num,
            p_den: den,
            pivotal: lhs,
            primal_bound: 2 * primal_best,
            dual_bound: 2 * dual_best,
            primal_ok: lhs <= 2 * primal_best,
            dual_ok: lhs <= 2 * dual_best,
        });
    }
    Ok(InequalityReport { rect, edge: e, primal_min_len, dual_min_len, points })
}

/// The decimal grid `p = 1/10, ..., 9/10`.
pub fn tenths_grid() -> Vec<(u32, u32)> {
    (1..=9).map(|i| (i, 10)).collect()
}
