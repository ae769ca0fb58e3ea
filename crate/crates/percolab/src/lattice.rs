//! Rectangles of the square lattice and their dual graphs.
//!
//! A `Rect` is the subgraph of the integer lattice induced by
//! `[x0, x0+k] x [y0, y0+l]`, boundary included. Its edges carry a
//! canonical index: all `k*(l+1)` horizontal edges in row-major order
//! first, then all `(k+1)*l` vertical edges in row-major order. Every
//! file format and random stream in this crate is keyed to that order.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A lattice vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    pub fn new(x: i64, y: i64) -> Self {
        Vertex { x, y }
    }

    /// L-infinity distance to another vertex.
    pub fn linf_distance(&self, other: Vertex) -> u64 {
        let dx = (self.x - other.x).unsigned_abs();
        let dy = (self.y - other.y).unsigned_abs();
        dx.max(dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    pub fn name(&self) -> &'static str {
        match self {
            Orientation::Horizontal => "horizontal",
            Orientation::Vertical => "vertical",
        }
    }
}

/// An edge of the square lattice, identified by its lower-left endpoint.
///
/// A horizontal edge joins `(x, y)` to `(x+1, y)`; a vertical edge joins
/// `(x, y)` to `(x, y+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub origin: Vertex,
    pub orientation: Orientation,
}

impl Edge {
    pub fn horizontal(x: i64, y: i64) -> Self {
        Edge { origin: Vertex::new(x, y), orientation: Orientation::Horizontal }
    }

    pub fn vertical(x: i64, y: i64) -> Self {
        Edge { origin: Vertex::new(x, y), orientation: Orientation::Vertical }
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        let Vertex { x, y } = self.origin;
        match self.orientation {
            Orientation::Horizontal => (self.origin, Vertex::new(x + 1, y)),
            Orientation::Vertical => (self.origin, Vertex::new(x, y + 1)),
        }
    }
}

/// One of the four sides of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

/// An axis-aligned lattice rectangle `[x0, x0+k] x [y0, y0+l]` with
/// `k, l >= 1`, identified with the induced subgraph of the square
/// lattice including its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    x0: i64,
    y0: i64,
    k: u32,
    l: u32,
}

impl Rect {
    pub fn new(x0: i64, y0: i64, k: u32, l: u32) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::EmptyRect { k, l });
        }
        Ok(Rect { x0, y0, k, l })
    }

    /// Rectangle with origin `(0, 0)`.
    pub fn at_origin(k: u32, l: u32) -> Result<Self> {
        Rect::new(0, 0, k, l)
    }

    /// The box of L-infinity radius `r` about `center`: a `2r x 2r`
    /// rectangle with `center` in the middle.
    pub fn ball(center: Vertex, r: u32) -> Result<Self> {
        let r = r.max(1);
        Rect::new(center.x - i64::from(r), center.y - i64::from(r), 2 * r, 2 * r)
    }

    pub fn x0(&self) -> i64 {
        self.x0
    }

    pub fn y0(&self) -> i64 {
        self.y0
    }

    /// Width in edges.
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Height in edges.
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn x1(&self) -> i64 {
        self.x0 + i64::from(self.k)
    }

    pub fn y1(&self) -> i64 {
        self.y0 + i64::from(self.l)
    }

    pub fn vertex_count(&self) -> usize {
        (self.k as usize + 1) * (self.l as usize + 1)
    }

    pub fn horizontal_edge_count(&self) -> usize {
        self.k as usize * (self.l as usize + 1)
    }

    pub fn vertical_edge_count(&self) -> usize {
        (self.k as usize + 1) * self.l as usize
    }

    /// Total number of edges `E = k(l+1) + (k+1)l`.
    pub fn edge_count(&self) -> usize {
        self.horizontal_edge_count() + self.vertical_edge_count()
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        v.x >= self.x0 && v.x <= self.x1() && v.y >= self.y0 && v.y <= self.y1()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1() <= self.x1() && other.y0 >= self.y0 && other.y1() <= self.y1()
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        let (a, b) = e.endpoints();
        self.contains_vertex(a) && self.contains_vertex(b)
    }

    /// Row-major vertex index in `[0, vertex_count)`.
    pub fn vertex_index(&self, v: Vertex) -> Result<usize> {
        if !self.contains_vertex(v) {
            return Err(Error::VertexOutsideRect(v));
        }
        let dx = (v.x - self.x0) as usize;
        let dy = (v.y - self.y0) as usize;
        Ok(dy * (self.k as usize + 1) + dx)
    }

    pub fn vertex_at(&self, index: usize) -> Vertex {
        let w = self.k as usize + 1;
        Vertex::new(self.x0 + (index % w) as i64, self.y0 + (index / w) as i64)
    }

    /// The edge at canonical index `i`.
    pub fn edge_at(&self, i: usize) -> Result<Edge> {
        let eh = self.horizontal_edge_count();
        let e = self.edge_count();
        if i < eh {
            let k = self.k as usize;
            Ok(Edge::horizontal(self.x0 + (i % k) as i64, self.y0 + (i / k) as i64))
        } else if i < e {
            let j = i - eh;
            let w = self.k as usize + 1;
            Ok(Edge::vertical(self.x0 + (j % w) as i64, self.y0 + (j / w) as i64))
        } else {
            Err(Error::EdgeIndexOutOfRange { index: i, edge_count: e })
        }
    }

    /// Canonical index of an edge of this rectangle, or `None` when the
    /// edge does not belong to it.
    pub fn index_of(&self, e: &Edge) -> Option<usize> {
        let Vertex { x, y } = e.origin;
        let dx = x - self.x0;
        let dy = y - self.y0;
        match e.orientation {
            Orientation::Horizontal => {
                if dx < 0 || dx >= i64::from(self.k) || dy < 0 || dy > i64::from(self.l) {
                    return None;
                }
                Some(dy as usize * self.k as usize + dx as usize)
            }
            Orientation::Vertical => {
                if dx < 0 || dx > i64::from(self.k) || dy < 0 || dy >= i64::from(self.l) {
                    return None;
                }
                Some(self.horizontal_edge_count() + dy as usize * (self.k as usize + 1) + dx as usize)
            }
        }
    }

    /// All edges in canonical order: horizontal row-major, then vertical
    /// row-major. Deterministic and stable across runs.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.edge_count()).map(move |i| self.edge_at(i).expect("index in range"))
    }

    /// The vertices of one side, in increasing coordinate order.
    pub fn side_vertices(&self, side: Side) -> Vec<Vertex> {
        match side {
            Side::Left => (self.y0..=self.y1()).map(|y| Vertex::new(self.x0, y)).collect(),
            Side::Right => (self.y0..=self.y1()).map(|y| Vertex::new(self.x1(), y)).collect(),
            Side::Bottom => (self.x0..=self.x1()).map(|x| Vertex::new(x, self.y0)).collect(),
            Side::Top => (self.x0..=self.x1()).map(|x| Vertex::new(x, self.y1())).collect(),
        }
    }

    /// Degree of a vertex inside the rectangle-as-graph (between 2 and 4).
    pub fn degree(&self, v: Vertex) -> Result<usize> {
        if !self.contains_vertex(v) {
            return Err(Error::VertexOutsideRect(v));
        }
        let mut d = 0;
        if v.x > self.x0 {
            d += 1;
        }
        if v.x < self.x1() {
            d += 1;
        }
        if v.y > self.y0 {
            d += 1;
        }
        if v.y < self.y1() {
            d += 1;
        }
        Ok(d)
    }

    pub fn dual(&self) -> DualGraph {
        DualGraph::new(*self)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.x0 == 0 && self.y0 == 0 {
            write!(f, "{}x{}", self.k, self.l)
        } else {
            write!(f, "{}x{}@{},{}", self.k, self.l, self.x0, self.y0)
        }
    }
}

impl FromStr for Rect {
    type Err = Error;

    /// Parses `"KxL"` or `"KxL@X,Y"`, e.g. `96x32` or `3x2@0,0`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::RectParse { input: s.to_string(), reason: reason.to_string() };
        let (dims, origin) = match s.split_once('@') {
            Some((d, o)) => (d, Some(o)),
            None => (s, None),
        };
        let (ks, ls) = dims.split_once('x').ok_or_else(|| bad("expected KxL"))?;
        let k: u32 = ks.trim().parse().map_err(|_| bad("width is not a positive integer"))?;
        let l: u32 = ls.trim().parse().map_err(|_| bad("height is not a positive integer"))?;
        let (x0, y0) = match origin {
            None => (0, 0),
            Some(o) => {
                let (xs, ys) = o.split_once(',').ok_or_else(|| bad("expected X,Y after '@'"))?;
                let x: i64 = xs.trim().parse().map_err(|_| bad("origin x is not an integer"))?;
                let y: i64 = ys.trim().parse().map_err(|_| bad("origin y is not an integer"))?;
                (x, y)
            }
        };
        Rect::new(x0, y0, k, l)
    }
}

impl Serialize for Rect {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// A vertex of the dual lattice. The pair `(x, y)` stands for the face
/// center `(x + 1/2, y + 1/2)`; integer coordinates keep files and code
/// free of fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DualVertex {
    pub x: i64,
    pub y: i64,
}

impl DualVertex {
    pub fn new(x: i64, y: i64) -> Self {
        DualVertex { x, y }
    }
}

/// A dual edge together with the canonical index of its primal partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualEdge {
    pub a: DualVertex,
    pub b: DualVertex,
    /// Canonical index of the primal edge this dual edge crosses.
    pub primal: usize,
}

/// The dual graph of a rectangle.
///
/// Dual vertices are the face centers `(x + 1/2, y + 1/2)` for
/// `x0 <= x <= x0+k-1` and `y0-1 <= y <= y0+l`: the faces of the
/// rectangle plus one extra row of faces below and one above. Every
/// horizontal primal edge has a vertical dual partner; vertical primal
/// edges in interior columns have a horizontal dual partner;
/// boundary-column vertical edges have none. Crossing the rectangle top
/// row to bottom row in the dual, on edges whose primal partners are
/// closed, is the complementary event to the primal horizontal crossing.
#[derive(Debug, Clone)]
pub struct DualGraph {
    rect: Rect,
    edges: Vec<DualEdge>,
    /// primal edge index -> index into `edges`, when a partner exists.
    partner: Vec<Option<u32>>,
}

impl DualGraph {
    pub fn new(rect: Rect) -> Self {
        let mut edges = Vec::with_capacity(rect.edge_count());
        let mut partner = vec![None; rect.edge_count()];
        for (i, e) in rect.edges().enumerate() {
            let Vertex { x, y } = e.origin;
            let dual = match e.orientation {
                Orientation::Horizontal => {
                    Some(DualEdge { a: DualVertex::new(x, y - 1), b: DualVertex::new(x, y), primal: i })
                }
                Orientation::Vertical if x > rect.x0() && x < rect.x1() => {
                    Some(DualEdge { a: DualVertex::new(x - 1, y), b: DualVertex::new(x, y), primal: i })
                }
                Orientation::Vertical => None,
            };
            if let Some(d) = dual {
                partner[i] = Some(edges.len() as u32);
                edges.push(d);
            }
        }
        DualGraph { rect, edges, partner }
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn edges(&self) -> &[DualEdge] {
        &self.edges
    }

    /// The dual edge crossing primal edge `i`, if that edge has one.
    pub fn partner_of_primal(&self, i: usize) -> Option<&DualEdge> {
        self.partner.get(i).copied().flatten().map(|j| &self.edges[j as usize])
    }

    /// Number of dual vertices: `k` columns by `l + 2` rows.
    pub fn vertex_count(&self) -> usize {
        self.rect.k() as usize * (self.rect.l() as usize + 2)
    }

    pub fn contains_vertex(&self, v: DualVertex) -> bool {
        v.x >= self.rect.x0()
            && v.x < self.rect.x1()
            && v.y >= self.rect.y0() - 1
            && v.y <= self.rect.y1()
    }

    /// Row-major dual vertex index in `[0, vertex_count)`.
    pub fn vertex_index(&self, v: DualVertex) -> Option<usize> {
        if !self.contains_vertex(v) {
            return None;
        }
        let dx = (v.x - self.rect.x0()) as usize;
        let dy = (v.y - (self.rect.y0() - 1)) as usize;
        Some(dy * self.rect.k() as usize + dx)
    }

    /// Dual vertices of the top row, at `y = y0 + l` (face centers above
    /// the rectangle's top side).
    pub fn top_row(&self) -> Vec<DualVertex> {
        (self.rect.x0()..self.rect.x1()).map(|x| DualVertex::new(x, self.rect.y1())).collect()
    }

    /// Dual vertices of the bottom row, at `y = y0 - 1`.
    pub fn bottom_row(&self) -> Vec<DualVertex> {
        (self.rect.x0()..self.rect.x1()).map(|x| DualVertex::new(x, self.rect.y0() - 1)).collect()
    }

    pub fn is_top(&self, v: DualVertex) -> bool {
        v.y == self.rect.y1()
    }

    pub fn is_bottom(&self, v: DualVertex) -> bool {
        v.y == self.rect.y0() - 1
    }
}
