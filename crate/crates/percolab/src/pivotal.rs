//! Pivotal edges for the horizontal crossing and the structure forced on
//! a configuration by pivotality: open arms from the edge's endpoints to
//! the left and right sides, and dual arms from its dual endpoints to
//! the top and bottom dual rows.
//!
//! The definitional test evaluates the event twice, once with the edge
//! forced open and once forced closed. The fast scanner classifies every
//! edge of a configuration from a single primal labeling (left/right
//! components) plus a single dual labeling (top/bottom components):
//! when the crossing holds only open edges straddling the dual
//! top/bottom components are pivotal, and when it fails only closed
//! edges straddling the primal left/right components are.

use serde::Serialize;

use crate::config::{Configuration, EdgeState};
use crate::connectivity::{
    cluster_edge_count, DualCrossingEvaluator, Event, HorizontalCrossingEvaluator,
};
use crate::error::{Error, Result};
use crate::lattice::Rect;

/// Outcome of the two forced evaluations at one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotalWitness {
    pub edge: usize,
    /// Event value with the edge forced open.
    pub holds_plus: bool,
    /// Event value with the edge forced closed.
    pub holds_minus: bool,
}

impl PivotalWitness {
    pub fn is_pivotal(&self) -> bool {
        self.holds_plus != self.holds_minus
    }
}

/// Double evaluation of `event` at edge `e` of `cfg`'s rectangle.
pub fn is_pivotal(event: &Event, cfg: &Configuration, e: usize) -> Result<PivotalWitness> {
    let plus = cfg.flip(e, EdgeState::Open)?;
    let minus = cfg.flip(e, EdgeState::Closed)?;
    Ok(PivotalWitness {
        edge: e,
        holds_plus: event.holds(&plus)?,
        holds_minus: event.holds(&minus)?,
    })
}

/// Reusable fast classifier of all edges pivotal for the horizontal
/// crossing of one rectangle.
pub struct PivotalScanner {
    rect: Rect,
    primal: HorizontalCrossingEvaluator,
    dual: DualCrossingEvaluator,
    /// primal edge index -> dual endpoint vertex ids, when a dual
    /// partner exists.
    dual_ends: Vec<Option<(u32, u32)>>,
}

impl PivotalScanner {
    pub fn new(rect: Rect) -> Self {
        let dual_graph = rect.dual();
        let dual = DualCrossingEvaluator::new(&dual_graph);
        let mut dual_ends = vec![None; rect.edge_count()];
        for &(a, b, primal) in dual.dual_edge_ends() {
            dual_ends[primal as usize] = Some((a, b));
        }
        PivotalScanner { rect, primal: HorizontalCrossingEvaluator::new(rect), dual, dual_ends }
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    /// Classifies every edge, calling `emit` with the pivotal indices in
    /// increasing order. `is_open` reads canonical edge indices.
    pub fn scan_with(&mut self, mut is_open: impl FnMut(usize) -> bool, mut emit: impl FnMut(usize)) {
        let crossing = self.primal.eval(&mut is_open);
        let dual_crossing = self.dual.eval(&mut is_open);
        debug_assert!(crossing ^ dual_crossing, "crossing dichotomy violated");
        if crossing {
            // Only an open edge can be pivotal; it is iff its dual
            // endpoints reach the top and bottom dual rows through
            // closed-partner dual edges.
            let (top, bottom) = (self.dual.top, self.dual.bottom);
            for e in 0..self.rect.edge_count() {
                if !is_open(e) {
                    continue;
                }
                let Some((a, b)) = self.dual_ends[e] else { continue };
                let a_top = self.dual.dsu.same(a, top);
                let a_bot = self.dual.dsu.same(a, bottom);
                let b_top = self.dual.dsu.same(b, top);
                let b_bot = self.dual.dsu.same(b, bottom);
                if (a_top && b_bot) || (a_bot && b_top) {
                    emit(e);
                }
            }
        } else {
            // Only a closed edge can be pivotal; it is iff its endpoints
            // reach the left and right sides through open edges.
            let (left, right) = (self.primal.left, self.primal.right);
            for e in 0..self.rect.edge_count() {
                if is_open(e) {
                    continue;
                }
                let (u, v) = self.primal.endpoint_ids(e);
                let u_l = self.primal.dsu.same(u, left);
                let u_r = self.primal.dsu.same(u, right);
                let v_l = self.primal.dsu.same(v, left);
                let v_r = self.primal.dsu.same(v, right);
                if (u_l && v_r) || (u_r && v_l) {
                    emit(e);
                }
            }
        }
    }

    pub fn scan(&mut self, cfg: &Configuration) -> Vec<usize> {
        assert_eq!(cfg.rect(), self.rect, "configuration rectangle mismatch");
        let mut out = Vec::new();
        self.scan_with(|i| cfg.is_open(i), |e| out.push(e));
        out
    }
}

/// Edges pivotal for the horizontal crossing of `cfg`'s rectangle, in
/// increasing index order.
pub fn pivotal_set(cfg: &Configuration) -> Vec<usize> {
    PivotalScanner::new(cfg.rect()).scan(cfg)
}

/// The definitional pivotal set: two crossing evaluations per edge.
/// Slow; kept as the ground truth the fast scanner is validated against.
pub fn pivotal_set_by_double_evaluation(cfg: &Configuration) -> Vec<usize> {
    let rect = cfg.rect();
    let mut ev = HorizontalCrossingEvaluator::new(rect);
    (0..rect.edge_count())
        .filter(|&e| {
            let plus = ev.eval(|i| i == e || cfg.is_open(i));
            let minus = ev.eval(|i| i != e && cfg.is_open(i));
            plus != minus
        })
        .collect()
}

/// The structural consequences of pivotality at one edge.
#[derive(Debug, Clone, Serialize)]
pub struct PivotalStructure {
    pub edge: usize,
    /// In the configuration with the edge removed, one endpoint joins
    /// the left side and the other the right side.
    pub primal_arms_ok: bool,
    /// The dual endpoints of the edge's dual partner join the top and
    /// bottom dual rows through closed-partner dual edges (the partner
    /// itself excluded).
    pub dual_arms_ok: bool,
    /// Open edges in the larger of the two endpoint components, the
    /// partner edge excluded.
    pub primal_cluster_edges: usize,
    /// Required lower bound `ceil((k-1)/2)`.
    pub primal_cluster_bound: usize,
    /// Dual edges in the component of the dual partner when the edge is
    /// treated as closed.
    pub dual_component_edges: usize,
    /// Required lower bound `l + 1`.
    pub dual_component_bound: usize,
}

impl PivotalStructure {
    pub fn primal_cluster_ok(&self) -> bool {
        self.primal_cluster_edges >= self.primal_cluster_bound
    }

    pub fn dual_component_ok(&self) -> bool {
        self.dual_component_edges >= self.dual_component_bound
    }

    pub fn all_ok(&self) -> bool {
        self.primal_arms_ok && self.dual_arms_ok && self.primal_cluster_ok() && self.dual_component_ok()
    }
}

/// Verifies the structure forced by pivotality of `e` for the horizontal
/// crossing of `cfg`'s rectangle. Fails with `NotPivotal` when the
/// precondition does not hold; any false flag in the returned report
/// would falsify the implementation, not the input.
pub fn check_pivotal_structure(cfg: &Configuration, e: usize) -> Result<PivotalStructure> {
    let rect = cfg.rect();
    if e >= rect.edge_count() {
        return Err(Error::EdgeIndexOutOfRange { index: e, edge_count: rect.edge_count() });
    }
    let event = Event::HorizontalCrossing(rect);
    if !is_pivotal(&event, cfg, e)?.is_pivotal() {
        return Err(Error::NotPivotal(e));
    }

    // (i) open arms to the two sides, with e itself removed.
    let mut primal = HorizontalCrossingEvaluator::new(rect);
    primal.eval(|i| i != e && cfg.is_open(i));
    let (u, v) = primal.endpoint_ids(e);
    let (left, right) = (primal.left, primal.right);
    let u_l = primal.dsu.same(u, left);
    let u_r = primal.dsu.same(u, right);
    let v_l = primal.dsu.same(v, left);
    let v_r = primal.dsu.same(v, right);
    let primal_arms_ok = (u_l && v_r) || (u_r && v_l);

    // (iii) the larger endpoint cluster carries at least ceil((k-1)/2)
    // open edges.
    let edge = rect.edge_at(e)?;
    let (pu, pv) = edge.endpoints();
    let cu = cluster_edge_count(pu, rect, cfg, Some(e))?;
    let cv = cluster_edge_count(pv, rect, cfg, Some(e))?;
    let primal_cluster_edges = cu.max(cv);
    let primal_cluster_bound = (rect.k() as usize).saturating_sub(1).div_ceil(2);

    // (ii) dual arms from the partner's endpoints to the top and bottom
    // rows, partner excluded; (iv) the partner's dual component in the
    // configuration with e closed carries at least l+1 dual edges.
    let dual_graph = rect.dual();
    let mut dual = DualCrossingEvaluator::new(&dual_graph);
    let (dual_arms_ok, dual_component_edges) = match dual_graph.partner_of_primal(e) {
        None => (false, 0),
        Some(de) => {
            let a = dual_graph.vertex_index(de.a).unwrap() as u32;
            let b = dual_graph.vertex_index(de.b).unwrap() as u32;

            // Arms without the partner: treat e as open so its dual edge
            // is unusable, keeping the check independent of e's state.
            dual.eval(|i| i == e || cfg.is_open(i));
            let (top, bottom) = (dual.top, dual.bottom);
            let a_top = dual.dsu.same(a, top);
            let a_bot = dual.dsu.same(a, bottom);
            let b_top = dual.dsu.same(b, top);
            let b_bot = dual.dsu.same(b, bottom);
            let arms = (a_top && b_bot) || (a_bot && b_top);

            // Component size with e closed, so the partner participates.
            dual.eval(|i| i != e && cfg.is_open(i));
            let root = dual.dsu.find(a);
            let mut component = 0usize;
            for idx in 0..dual.dual_edge_ends().len() {
                let (da, _, primal_idx) = dual.dual_edge_ends()[idx];
                let usable = primal_idx as usize == e || !cfg.is_open(primal_idx as usize);
                if usable && dual.dsu.find(da) == root {
                    component += 1;
                }
            }
            (arms, component)
        }
    };
    let dual_component_bound = rect.l() as usize + 1;

    Ok(PivotalStructure {
        edge: e,
        primal_arms_ok,
        dual_arms_ok,
        primal_cluster_edges,
        primal_cluster_bound,
        dual_component_edges,
        dual_component_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{sample, RngSpec};
    use crate::lattice::Vertex;

    fn rect(k: u32, l: u32) -> Rect {
        Rect::at_origin(k, l).unwrap()
    }

    fn config_from_mask(r: Rect, mask: u64) -> Configuration {
        Configuration::from_fn(r, |i| mask >> i & 1 == 1)
    }

    #[test]
    fn unit_square_bottom_pivotal_iff_top_closed() {
        // Edge order: 0 bottom, 1 top, 2 left, 3 right.
        let r = rect(1, 1);
        let event = Event::HorizontalCrossing(r);
        for mask in 0u64..16 {
            let cfg = config_from_mask(r, mask);
            let w = is_pivotal(&event, &cfg, 0).unwrap();
            assert_eq!(w.is_pivotal(), mask & 2 == 0, "mask {mask:04b}");
        }
    }

    #[test]
    fn increasing_event_pivotality_orientation() {
        let r = rect(1, 1);
        let event = Event::HorizontalCrossing(r);
        for mask in 0u64..16 {
            let cfg = config_from_mask(r, mask);
            for e in 0..4 {
                let w = is_pivotal(&event, &cfg, e).unwrap();
                if w.is_pivotal() {
                    assert!(w.holds_plus && !w.holds_minus);
                }
            }
        }
    }

    #[test]
    fn edge_outside_event_support_is_never_pivotal() {
        // Configuration on 3x1; event on the left 1x1 sub-square.
        let big = rect(3, 1);
        let small = rect(1, 1);
        let event = Event::HorizontalCrossing(small);
        let cfg = sample(big, 0.5, RngSpec::new(8), 0).unwrap();
        for e in 0..big.edge_count() {
            let edge = big.edge_at(e).unwrap();
            if !small.contains_edge(&edge) {
                assert!(!is_pivotal(&event, &cfg, e).unwrap().is_pivotal());
            }
        }
    }

    #[test]
    fn pivotal_set_examples() {
        let r = rect(1, 1);
        assert!(pivotal_set(&Configuration::all_open(r)).is_empty());
        let only_bottom = config_from_mask(r, 0b0001);
        assert_eq!(pivotal_set(&only_bottom), vec![0]);
        for k in [2u32, 3, 5] {
            let r = rect(k, 2);
            assert!(pivotal_set(&Configuration::all_closed(r)).is_empty());
        }
    }

    #[test]
    fn fast_scanner_matches_double_evaluation_exhaustively() {
        for r in [rect(1, 1), rect(2, 1), rect(2, 2)] {
            let mut scanner = PivotalScanner::new(r);
            for mask in 0u64..1 << r.edge_count() {
                let cfg = config_from_mask(r, mask);
                assert_eq!(
                    scanner.scan(&cfg),
                    pivotal_set_by_double_evaluation(&cfg),
                    "rect {r} mask {mask:b}"
                );
            }
        }
    }

    #[test]
    fn fast_scanner_matches_double_evaluation_sampled() {
        let r = rect(6, 3);
        let rng = RngSpec::new(55);
        let mut scanner = PivotalScanner::new(r);
        for s in 0..300 {
            for p in [0.3, 0.5, 0.7] {
                let cfg = sample(r, p, rng, s).unwrap();
                assert_eq!(scanner.scan(&cfg), pivotal_set_by_double_evaluation(&cfg));
            }
        }
    }

    #[test]
    fn pivotality_does_not_depend_on_the_edge_state() {
        let r = rect(4, 2);
        let rng = RngSpec::new(2);
        let event = Event::HorizontalCrossing(r);
        for s in 0..100 {
            let cfg = sample(r, 0.5, rng, s).unwrap();
            for e in 0..r.edge_count() {
                let base = is_pivotal(&event, &cfg, e).unwrap().is_pivotal();
                let up = cfg.flip(e, EdgeState::Open).unwrap();
                let down = cfg.flip(e, EdgeState::Closed).unwrap();
                assert_eq!(base, is_pivotal(&event, &up, e).unwrap().is_pivotal());
                assert_eq!(base, is_pivotal(&event, &down, e).unwrap().is_pivotal());
            }
        }
    }

    #[test]
    fn structure_on_unit_square_bottom() {
        let r = rect(1, 1);
        let only_bottom = config_from_mask(r, 0b0001);
        let report = check_pivotal_structure(&only_bottom, 0).unwrap();
        assert!(report.primal_arms_ok);
        assert!(report.dual_arms_ok);
        assert_eq!(report.primal_cluster_bound, 0);
        assert_eq!(report.dual_component_bound, 2);
        assert_eq!(report.dual_component_edges, 2);
        assert!(report.all_ok());
    }

    #[test]
    fn structure_requires_pivotality() {
        let r = rect(1, 1);
        let all_open = Configuration::all_open(r);
        assert!(matches!(check_pivotal_structure(&all_open, 0), Err(Error::NotPivotal(0))));
    }

    #[test]
    fn structure_holds_exhaustively_on_three_by_one() {
        let r = rect(3, 1);
        let mut scanner = PivotalScanner::new(r);
        for mask in 0u64..1 << r.edge_count() {
            let cfg = config_from_mask(r, mask);
            for e in scanner.scan(&cfg) {
                let report = check_pivotal_structure(&cfg, e).unwrap();
                assert!(report.all_ok(), "mask {mask:b} edge {e}: {report:?}");
            }
        }
    }

    #[test]
    fn structure_holds_on_random_configurations() {
        let r = rect(6, 2);
        let rng = RngSpec::new(123);
        let mut scanner = PivotalScanner::new(r);
        for s in 0..500 {
            let cfg = sample(r, 0.5, rng, s).unwrap();
            for e in scanner.scan(&cfg) {
                let report = check_pivotal_structure(&cfg, e).unwrap();
                assert!(report.all_ok(), "sample {s} edge {e}: {report:?}");
            }
        }
    }

    #[test]
    fn support_locality() {
        // Arm event centered away from the origin: edges of the
        // configuration outside the ball are never pivotal.
        let center = Vertex::new(2, 2);
        let event = Event::Arm { center, radius: 1 };
        let big = Rect::at_origin(4, 4).unwrap();
        let cfg = sample(big, 0.5, RngSpec::new(77), 3).unwrap();
        let ball = event.domain();
        for e in 0..big.edge_count() {
            let edge = big.edge_at(e).unwrap();
            if !ball.contains_edge(&edge) {
                assert!(!is_pivotal(&event, &cfg, e).unwrap().is_pivotal());
            }
        }
    }
}
