//! Event evaluation on configurations via disjoint sets: horizontal open
//! crossings, vertical dual crossings, arm events, and cluster sizes.
//!
//! Crossing queries use virtual side nodes so the final test is a single
//! find-equality. This is the hot loop of the whole crate; evaluators
//! below precompute endpoint tables per rectangle and reuse their arrays
//! across configurations.

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{DualGraph, Rect, Vertex};

/// Union-find over a fixed vertex universe, union by size with path
/// halving.
#[derive(Debug, Clone, Default)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        let mut dsu = DisjointSets::default();
        dsu.reset(n);
        dsu
    }

    /// Reinitializes to `n` singletons, reusing the allocation.
    pub fn reset(&mut self, n: usize) {
        assert!(n <= u32::MAX as usize);
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.size.clear();
        self.size.resize(n, 1);
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        loop {
            let p = self.parent[x as usize];
            if p == x {
                return x;
            }
            let gp = self.parent[p as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
    }

    /// Merges the classes of `a` and `b`; returns false when they were
    /// already joined.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        true
    }

    pub fn same(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn component_size(&mut self, a: u32) -> u32 {
        let r = self.find(a);
        self.size[r as usize]
    }
}

/// Vertex ids of an edge's endpoints under row-major vertex indexing.
pub(crate) fn edge_endpoint_ids(rect: Rect, i: usize) -> (u32, u32) {
    let k = rect.k() as usize;
    let w = k + 1;
    let eh = rect.horizontal_edge_count();
    if i < eh {
        let a = (i / k) * w + (i % k);
        (a as u32, (a + 1) as u32)
    } else {
        let j = i - eh;
        let a = (j / w) * w + (j % w);
        (a as u32, (a + w) as u32)
    }
}

/// Reusable evaluator for the horizontal crossing of one rectangle.
pub(crate) struct HorizontalCrossingEvaluator {
    rect: Rect,
    ends: Vec<(u32, u32)>,
    pub(crate) dsu: DisjointSets,
    pub(crate) left: u32,
    pub(crate) right: u32,
}

impl HorizontalCrossingEvaluator {
    pub fn new(rect: Rect) -> Self {
        let ends = (0..rect.edge_count()).map(|i| edge_endpoint_ids(rect, i)).collect();
        let v = rect.vertex_count() as u32;
        HorizontalCrossingEvaluator { rect, ends, dsu: DisjointSets::default(), left: v, right: v + 1 }
    }

    /// Evaluates the crossing for the open set described by `is_open`
    /// over canonical edge indices of this rectangle.
    pub fn eval(&mut self, mut is_open: impl FnMut(usize) -> bool) -> bool {
        self.start();
        for (i, &(a, b)) in self.ends.iter().enumerate() {
            if is_open(i) {
                self.dsu.union(a, b);
            }
        }
        self.dsu.same(self.left, self.right)
    }

    /// Resets the structure and attaches the virtual side nodes, leaving
    /// edge insertion to the caller.
    pub fn start(&mut self) {
        let w = self.rect.k() as usize + 1;
        self.dsu.reset(self.rect.vertex_count() + 2);
        for row in 0..=(self.rect.l() as usize) {
            self.dsu.union(self.left, (row * w) as u32);
            self.dsu.union(self.right, (row * w + w - 1) as u32);
        }
    }

    /// Inserts edge `i`; returns true when left and right become (or
    /// already are) connected.
    pub fn insert(&mut self, i: usize) -> bool {
        let (a, b) = self.ends[i];
        self.dsu.union(a, b);
        self.dsu.same(self.left, self.right)
    }

    pub fn endpoint_ids(&self, i: usize) -> (u32, u32) {
        self.ends[i]
    }
}

/// Reusable evaluator for the top-to-bottom dual crossing of one
/// rectangle; a dual edge is usable iff its primal partner is closed.
pub(crate) struct DualCrossingEvaluator {
    ends: Vec<(u32, u32, u32)>, // (dual a, dual b, primal edge index)
    vertex_count: usize,
    top_ids: Vec<u32>,
    bottom_ids: Vec<u32>,
    pub(crate) dsu: DisjointSets,
    pub(crate) top: u32,
    pub(crate) bottom: u32,
}

impl DualCrossingEvaluator {
    pub fn new(dual: &DualGraph) -> Self {
        let ends = dual
            .edges()
            .iter()
            .map(|de| {
                let a = dual.vertex_index(de.a).expect("dual endpoint in graph") as u32;
                let b = dual.vertex_index(de.b).expect("dual endpoint in graph") as u32;
                (a, b, de.primal as u32)
            })
            .collect();
        let v = dual.vertex_count();
        let top_ids = dual.top_row().iter().map(|&t| dual.vertex_index(t).unwrap() as u32).collect();
        let bottom_ids = dual.bottom_row().iter().map(|&t| dual.vertex_index(t).unwrap() as u32).collect();
        DualCrossingEvaluator {
            ends,
            vertex_count: v,
            top_ids,
            bottom_ids,
            dsu: DisjointSets::default(),
            top: v as u32,
            bottom: v as u32 + 1,
        }
    }

    pub fn eval(&mut self, mut is_open: impl FnMut(usize) -> bool) -> bool {
        self.start();
        for i in 0..self.ends.len() {
            let (a, b, primal) = self.ends[i];
            if !is_open(primal as usize) {
                self.dsu.union(a, b);
            }
        }
        self.dsu.same(self.top, self.bottom)
    }

    pub fn start(&mut self) {
        self.dsu.reset(self.vertex_count + 2);
        for i in 0..self.top_ids.len() {
            self.dsu.union(self.top, self.top_ids[i]);
            self.dsu.union(self.bottom, self.bottom_ids[i]);
        }
    }

    pub fn dual_edge_ends(&self) -> &[(u32, u32, u32)] {
        &self.ends
    }
}

/// Reusable evaluator for an arm event; `is_open` reads canonical edge
/// indices of the ball rectangle.
pub(crate) struct ArmEvaluator {
    ends: Vec<(u32, u32)>,
    ring_ids: Vec<u32>,
    center_id: u32,
    ring: u32,
    vertex_count: usize,
    dsu: DisjointSets,
    trivial: bool,
}

impl ArmEvaluator {
    pub fn new(center: Vertex, radius: u32) -> Self {
        let ball = Rect::ball(center, radius.max(1)).expect("radius clamped to >= 1");
        let v = ball.vertex_count();
        let ring_ids = (0..v)
            .filter(|&i| ball.vertex_at(i).linf_distance(center) == u64::from(radius.max(1)))
            .map(|i| i as u32)
            .collect();
        let ends = (0..ball.edge_count()).map(|i| edge_endpoint_ids(ball, i)).collect();
        ArmEvaluator {
            ends,
            ring_ids,
            center_id: ball.vertex_index(center).expect("center inside ball") as u32,
            ring: v as u32,
            vertex_count: v,
            dsu: DisjointSets::default(),
            trivial: radius == 0,
        }
    }

    pub fn eval(&mut self, mut is_open: impl FnMut(usize) -> bool) -> bool {
        if self.trivial {
            return true;
        }
        self.dsu.reset(self.vertex_count + 1);
        for i in 0..self.ring_ids.len() {
            self.dsu.union(self.ring, self.ring_ids[i]);
        }
        for (i, &(a, b)) in self.ends.iter().enumerate() {
            if is_open(i) {
                self.dsu.union(a, b);
            }
        }
        self.dsu.same(self.center_id, self.ring)
    }
}

/// One evaluator per event kind, reusing scratch arrays across
/// configurations. `is_open` always reads canonical edge indices of the
/// event's domain rectangle.
pub(crate) enum EventEvaluator {
    Horizontal(HorizontalCrossingEvaluator),
    DualVertical(DualCrossingEvaluator),
    Arm(ArmEvaluator),
}

impl EventEvaluator {
    pub fn new(event: &Event) -> Self {
        match *event {
            Event::HorizontalCrossing(r) => {
                EventEvaluator::Horizontal(HorizontalCrossingEvaluator::new(r))
            }
            Event::VerticalDualCrossing(r) => {
                EventEvaluator::DualVertical(DualCrossingEvaluator::new(&r.dual()))
            }
            Event::Arm { center, radius } => EventEvaluator::Arm(ArmEvaluator::new(center, radius)),
        }
    }

    pub fn eval(&mut self, is_open: impl FnMut(usize) -> bool) -> bool {
        match self {
            EventEvaluator::Horizontal(ev) => ev.eval(is_open),
            EventEvaluator::DualVertical(ev) => ev.eval(is_open),
            EventEvaluator::Arm(ev) => ev.eval(is_open),
        }
    }
}

/// Reusable checker for one event: precomputes the endpoint tables once
/// and reuses the union-find arrays across configurations. The hot-loop
/// counterpart of [`Event::holds`].
pub struct EventChecker {
    domain: Rect,
    inner: EventEvaluator,
}

impl EventChecker {
    pub fn new(event: &Event) -> Self {
        EventChecker { domain: event.domain(), inner: EventEvaluator::new(event) }
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    /// Evaluates against a raw open-edge predicate over canonical edge
    /// indices of the event's domain rectangle.
    pub fn holds_where(&mut self, is_open: impl FnMut(usize) -> bool) -> bool {
        self.inner.eval(is_open)
    }

    pub fn holds(&mut self, cfg: &Configuration) -> Result<bool> {
        require_covering(self.domain, cfg)?;
        let domain = self.domain;
        Ok(self.inner.eval(|i| open_in(domain, cfg, i)))
    }
}

fn require_covering(rect: Rect, cfg: &Configuration) -> Result<()> {
    if cfg.rect() == rect || cfg.rect().contains_rect(&rect) {
        Ok(())
    } else {
        Err(Error::ConfigurationTooSmall)
    }
}

/// Looks up the open state of `rect`'s edge `i` inside a configuration
/// that covers `rect`.
fn open_in(rect: Rect, cfg: &Configuration, i: usize) -> bool {
    if cfg.rect() == rect {
        cfg.is_open(i)
    } else {
        let e = rect.edge_at(i).expect("index in range");
        cfg.is_open(cfg.rect().index_of(&e).expect("covering configuration"))
    }
}

/// True iff some path of open edges inside `rect` joins a left-side
/// vertex to a right-side vertex.
pub fn has_horizontal_crossing(rect: Rect, cfg: &Configuration) -> Result<bool> {
    require_covering(rect, cfg)?;
    let mut ev = HorizontalCrossingEvaluator::new(rect);
    Ok(ev.eval(|i| open_in(rect, cfg, i)))
}

/// True iff a path of dual edges whose primal partners are closed joins
/// the top dual row to the bottom dual row.
pub fn has_vertical_dual_crossing(rect: Rect, cfg: &Configuration) -> Result<bool> {
    require_covering(rect, cfg)?;
    let mut ev = DualCrossingEvaluator::new(&rect.dual());
    Ok(ev.eval(|i| open_in(rect, cfg, i)))
}

/// True iff `center` is joined by open edges, inside the box of
/// L-infinity radius `radius` about it, to some vertex at distance
/// exactly `radius`. Radius 0 holds trivially.
pub fn arm_event(center: Vertex, radius: u32, cfg: &Configuration) -> Result<bool> {
    if radius == 0 {
        return Ok(true);
    }
    let ball = Rect::ball(center, radius)?;
    require_covering(ball, cfg)?;
    let mut ev = ArmEvaluator::new(center, radius);
    Ok(ev.eval(|i| open_in(ball, cfg, i)))
}

/// Number of open edges (excluding `excluding`, if given) in the open
/// component of `v` inside `rect`.
pub fn cluster_edge_count(
    v: Vertex,
    rect: Rect,
    cfg: &Configuration,
    excluding: Option<usize>,
) -> Result<usize> {
    require_covering(rect, cfg)?;
    let vid = rect.vertex_index(v)? as u32;
    let mut dsu = DisjointSets::new(rect.vertex_count());
    let usable = |i: usize| open_in(rect, cfg, i) && excluding != Some(i);
    for i in 0..rect.edge_count() {
        if usable(i) {
            let (a, b) = edge_endpoint_ids(rect, i);
            dsu.union(a, b);
        }
    }
    let root = dsu.find(vid);
    let mut count = 0;
    for i in 0..rect.edge_count() {
        if usable(i) {
            let (a, _) = edge_endpoint_ids(rect, i);
            if dsu.find(a) == root {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// A local event over a finite edge set. All three variants are monotone:
/// the crossings and arm events in the open set they read, the dual
/// crossing in the closed set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    HorizontalCrossing(Rect),
    VerticalDualCrossing(Rect),
    Arm { center: Vertex, radius: u32 },
}

impl Event {
    /// The rectangle carrying every edge the event depends on.
    pub fn domain(&self) -> Rect {
        match *self {
            Event::HorizontalCrossing(r) | Event::VerticalDualCrossing(r) => r,
            Event::Arm { center, radius } => Rect::ball(center, radius.max(1)).expect("radius >= 1"),
        }
    }

    /// Whether the event is increasing in the set of open edges. The
    /// dual crossing is decreasing (increasing in the reversed order).
    pub fn increasing_in_open(&self) -> bool {
        !matches!(self, Event::VerticalDualCrossing(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Event::HorizontalCrossing(_) => "crossing",
            Event::VerticalDualCrossing(_) => "dual-crossing",
            Event::Arm { .. } => "arm",
        }
    }

    pub fn holds(&self, cfg: &Configuration) -> Result<bool> {
        match *self {
            Event::HorizontalCrossing(r) => has_horizontal_crossing(r, cfg),
            Event::VerticalDualCrossing(r) => has_vertical_dual_crossing(r, cfg),
            Event::Arm { center, radius } => arm_event(center, radius, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{sample, Configuration, RngSpec};

    fn rect(k: u32, l: u32) -> Rect {
        Rect::at_origin(k, l).unwrap()
    }

    fn config_from_mask(r: Rect, mask: u64) -> Configuration {
        Configuration::from_fn(r, |i| mask >> i & 1 == 1)
    }

    #[test]
    fn all_open_crosses_all_closed_does_not() {
        for r in [rect(1, 1), rect(3, 2), rect(5, 1)] {
            assert!(has_horizontal_crossing(r, &Configuration::all_open(r)).unwrap());
            assert!(!has_horizontal_crossing(r, &Configuration::all_closed(r)).unwrap());
            assert!(!has_vertical_dual_crossing(r, &Configuration::all_open(r)).unwrap());
            assert!(has_vertical_dual_crossing(r, &Configuration::all_closed(r)).unwrap());
        }
    }

    #[test]
    fn unit_square_crossing_rule() {
        // Exhaustive over the 16 states: crossing iff bottom or top open.
        // Edge order: 0 bottom, 1 top, 2 left, 3 right.
        let r = rect(1, 1);
        for mask in 0u64..16 {
            let cfg = config_from_mask(r, mask);
            let expect = mask & 1 == 1 || mask & 2 == 2;
            assert_eq!(has_horizontal_crossing(r, &cfg).unwrap(), expect, "mask {mask:04b}");
        }
    }

    #[test]
    fn unit_square_dual_crossing_rule() {
        // Dual crossing iff both bottom and top are closed.
        let r = rect(1, 1);
        for mask in 0u64..16 {
            let cfg = config_from_mask(r, mask);
            let expect = mask & 1 == 0 && mask & 2 == 0;
            assert_eq!(has_vertical_dual_crossing(r, &cfg).unwrap(), expect, "mask {mask:04b}");
        }
    }

    #[test]
    fn dichotomy_exhaustive_small() {
        for r in [rect(1, 1), rect(2, 1), rect(2, 2)] {
            let e = r.edge_count();
            for mask in 0u64..1 << e {
                let cfg = config_from_mask(r, mask);
                let h = has_horizontal_crossing(r, &cfg).unwrap();
                let v = has_vertical_dual_crossing(r, &cfg).unwrap();
                assert!(h ^ v, "dichotomy violated on {r} mask {mask:b}");
            }
        }
    }

    #[test]
    fn crossing_is_monotone_in_open_set() {
        let r = rect(4, 3);
        let rng = RngSpec::new(3);
        for s in 0..50 {
            let cfg = sample(r, 0.45, rng, s).unwrap();
            let h = has_horizontal_crossing(r, &cfg).unwrap();
            let v = has_vertical_dual_crossing(r, &cfg).unwrap();
            // Open one more edge: crossing may only appear, dual crossing may only vanish.
            for e in 0..r.edge_count() {
                let up = cfg.flip(e, crate::config::EdgeState::Open).unwrap();
                assert!(has_horizontal_crossing(r, &up).unwrap() >= h);
                assert!(has_vertical_dual_crossing(r, &up).unwrap() <= v);
            }
        }
    }

    #[test]
    fn arm_event_examples() {
        let center = Vertex::new(0, 0);
        let ball = Rect::ball(center, 3).unwrap();
        assert!(arm_event(center, 3, &Configuration::all_open(ball)).unwrap());
        assert!(!arm_event(center, 3, &Configuration::all_closed(ball)).unwrap());
        assert!(arm_event(center, 0, &Configuration::all_closed(ball)).unwrap());
    }

    #[test]
    fn arm_events_are_nested() {
        let center = Vertex::new(0, 0);
        let outer = Rect::ball(center, 4).unwrap();
        let rng = RngSpec::new(17);
        for s in 0..200 {
            let cfg = sample(outer, 0.5, rng, s).unwrap();
            let mut prev = true;
            for r in 1..=4 {
                let cur = arm_event(center, r, &cfg).unwrap();
                assert!(!cur || prev, "arm at radius {r} without arm at radius {}", r - 1);
                prev = cur;
            }
        }
    }

    #[test]
    fn cluster_edge_count_examples() {
        let r = rect(1, 1);
        assert_eq!(cluster_edge_count(Vertex::new(0, 0), r, &Configuration::all_closed(r), None).unwrap(), 0);
        assert_eq!(cluster_edge_count(Vertex::new(1, 1), r, &Configuration::all_open(r), None).unwrap(), 4);
        // Bottom and left open: the component of (0,0) is the L-shaped pair.
        let mut cfg = Configuration::all_closed(r);
        cfg.set(0, true);
        cfg.set(2, true);
        assert_eq!(cluster_edge_count(Vertex::new(0, 0), r, &cfg, None).unwrap(), 2);
        // Excluding the bottom edge leaves only the left edge.
        assert_eq!(cluster_edge_count(Vertex::new(0, 0), r, &cfg, Some(0)).unwrap(), 1);
    }

    #[test]
    fn disjoint_sets_basics() {
        let mut dsu = DisjointSets::new(5);
        assert!(dsu.union(0, 1));
        assert!(!dsu.union(1, 0));
        assert!(dsu.union(2, 3));
        assert!(!dsu.same(0, 2));
        dsu.union(1, 3);
        assert!(dsu.same(0, 2));
        assert_eq!(dsu.component_size(3), 4);
        assert_eq!(dsu.component_size(4), 1);
        // Component sizes sum to the universe size.
        let mut roots = std::collections::HashMap::new();
        for x in 0..5u32 {
            let r = dsu.find(x);
            *roots.entry(r).or_insert(0u32) += 1;
        }
        assert_eq!(roots.values().sum::<u32>(), 5);
    }

    #[test]
    fn event_checker_matches_one_shot_evaluation() {
        let r = rect(4, 2);
        let rng = RngSpec::new(19);
        for event in [
            Event::HorizontalCrossing(r),
            Event::VerticalDualCrossing(r),
            Event::Arm { center: Vertex::new(2, 1), radius: 1 },
        ] {
            let mut checker = EventChecker::new(&event);
            for s in 0..100 {
                let cfg = sample(r, 0.5, rng, s).unwrap();
                assert_eq!(checker.holds(&cfg).unwrap(), event.holds(&cfg).unwrap(), "{event:?} sample {s}");
            }
        }
    }

    #[test]
    fn events_expose_domain_and_monotonicity() {
        let r = rect(3, 1);
        assert!(Event::HorizontalCrossing(r).increasing_in_open());
        assert!(!Event::VerticalDualCrossing(r).increasing_in_open());
        let arm = Event::Arm { center: Vertex::new(0, 0), radius: 2 };
        assert_eq!(arm.domain(), Rect::new(-2, -2, 4, 4).unwrap());
        assert_eq!(arm.kind_name(), "arm");
    }
}
