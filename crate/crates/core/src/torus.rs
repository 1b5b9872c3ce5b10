//! Torus geometry: nodes, directed edges, distances and automorphisms.

use std::fmt;

use crate::{Error, Result};

/// Dimensions and link capacities of an `rows x cols` torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusSpec {
    /// Vertical extent `N`.
    pub rows: usize,
    /// Horizontal extent `M`.
    pub cols: usize,
    /// Capacity `c1` of the vertical links.
    pub cap_vertical: f64,
    /// Capacity `c2` of the horizontal links.
    pub cap_horizontal: f64,
}

/// A node, always stored reduced modulo the torus extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub x: usize,
    pub y: usize,
}

impl Node {
    pub const ORIGIN: Node = Node { x: 0, y: 0 };

    pub const fn new(x: usize, y: usize) -> Self {
        Node { x, y }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// One of the four unit moves. The declaration order is the canonical
/// neighbour order used by every search in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    PosVert = 0,
    NegVert = 1,
    PosHor = 2,
    NegHor = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::PosVert,
        Direction::NegVert,
        Direction::PosHor,
        Direction::NegHor,
    ];

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn negate(self) -> Direction {
        match self {
            Direction::PosVert => Direction::NegVert,
            Direction::NegVert => Direction::PosVert,
            Direction::PosHor => Direction::NegHor,
            Direction::NegHor => Direction::PosHor,
        }
    }

    /// Exchange the vertical and horizontal axes.
    pub fn swap_axes(self) -> Direction {
        match self {
            Direction::PosVert => Direction::PosHor,
            Direction::NegVert => Direction::NegHor,
            Direction::PosHor => Direction::PosVert,
            Direction::NegHor => Direction::NegVert,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Direction::PosVert | Direction::NegVert)
    }

    /// Unit displacement `(dx, dy)`.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::PosVert => (0, 1),
            Direction::NegVert => (0, -1),
            Direction::PosHor => (1, 0),
            Direction::NegHor => (-1, 0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::PosVert => "+v",
            Direction::NegVert => "-v",
            Direction::PosHor => "+h",
            Direction::NegHor => "-h",
        }
    }

    /// Short name used inside LP variable names.
    pub fn tag(self) -> &'static str {
        match self {
            Direction::PosVert => "pv",
            Direction::NegVert => "nv",
            Direction::PosHor => "ph",
            Direction::NegHor => "nh",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s.trim() {
            "+v" | "pv" => Some(Direction::PosVert),
            "-v" | "nv" => Some(Direction::NegVert),
            "+h" | "ph" => Some(Direction::PosHor),
            "-h" | "nh" => Some(Direction::NegHor),
            _ => None,
        }
    }
}

/// The link leaving `tail` in direction `dir`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedEdge {
    pub tail: Node,
    pub dir: Direction,
}

impl DirectedEdge {
    pub const fn new(tail: Node, dir: Direction) -> Self {
        DirectedEdge { tail, dir }
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.tail, self.dir.label())
    }
}

impl TorusSpec {
    pub fn new(rows: usize, cols: usize, cap_vertical: f64, cap_horizontal: f64) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::InvalidSpec(format!(
                "dimensions must be at least 3, got {rows}x{cols}"
            )));
        }
        if !(cap_vertical > 0.0 && cap_vertical.is_finite()) || !(cap_horizontal > 0.0 && cap_horizontal.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "capacities must be positive, got c1={cap_vertical}, c2={cap_horizontal}"
            )));
        }
        Ok(TorusSpec {
            rows,
            cols,
            cap_vertical,
            cap_horizontal,
        })
    }

    /// Square torus with unit capacities.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    /// `rows x cols` torus with unit capacities.
    pub fn unit(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, 1.0, 1.0)
    }

    pub fn is_square_symmetric(&self) -> bool {
        self.rows == self.cols && self.cap_vertical == self.cap_horizontal
    }

    pub fn num_nodes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_edges(&self) -> usize {
        4 * self.num_nodes()
    }

    /// Build a node from signed coordinates, reducing them modulo the extent.
    pub fn node(&self, x: i64, y: i64) -> Node {
        Node {
            x: x.rem_euclid(self.cols as i64) as usize,
            y: y.rem_euclid(self.rows as i64) as usize,
        }
    }

    /// Build a node, rejecting coordinates outside the torus.
    pub fn checked_node(&self, x: i64, y: i64) -> Result<Node> {
        if x < 0 || y < 0 || x >= self.cols as i64 || y >= self.rows as i64 {
            return Err(Error::InvalidNode {
                x,
                y,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(Node {
            x: x as usize,
            y: y as usize,
        })
    }

    pub fn contains(&self, u: Node) -> bool {
        u.x < self.cols && u.y < self.rows
    }

    pub fn node_index(&self, u: Node) -> usize {
        u.y * self.cols + u.x
    }

    pub fn node_at(&self, index: usize) -> Node {
        Node {
            x: index % self.cols,
            y: index / self.cols,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.num_nodes()).map(move |i| self.node_at(i))
    }

    pub fn add(&self, u: Node, v: Node) -> Node {
        Node {
            x: (u.x + v.x) % self.cols,
            y: (u.y + v.y) % self.rows,
        }
    }

    pub fn sub(&self, u: Node, v: Node) -> Node {
        Node {
            x: (u.x + self.cols - v.x) % self.cols,
            y: (u.y + self.rows - v.y) % self.rows,
        }
    }

    pub fn neg(&self, u: Node) -> Node {
        self.sub(Node::ORIGIN, u)
    }

    pub fn step(&self, u: Node, dir: Direction) -> Node {
        let (dx, dy) = dir.delta();
        self.node(u.x as i64 + dx, u.y as i64 + dy)
    }

    /// Node reached from `u` after `hops` moves in `dir`.
    pub fn walk(&self, u: Node, dir: Direction, hops: usize) -> Node {
        let (dx, dy) = dir.delta();
        let h = hops as i64;
        self.node(u.x as i64 + dx * h, u.y as i64 + dy * h)
    }

    pub fn head(&self, e: DirectedEdge) -> Node {
        self.step(e.tail, e.dir)
    }

    pub fn capacity(&self, dir: Direction) -> f64 {
        if dir.is_vertical() {
            self.cap_vertical
        } else {
            self.cap_horizontal
        }
    }

    pub fn edge_index(&self, e: DirectedEdge) -> usize {
        self.node_index(e.tail) * 4 + e.dir.index()
    }

    pub fn edge_at(&self, index: usize) -> DirectedEdge {
        DirectedEdge {
            tail: self.node_at(index / 4),
            dir: Direction::from_index(index % 4),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = DirectedEdge> + '_ {
        (0..self.num_edges()).map(move |i| self.edge_at(i))
    }

    /// Shift an edge by a node offset.
    pub fn translate_edge(&self, e: DirectedEdge, by: Node) -> DirectedEdge {
        DirectedEdge {
            tail: self.add(e.tail, by),
            dir: e.dir,
        }
    }

    /// Signed shortest offset along the horizontal axis, in `(-cols/2, cols/2]`.
    pub fn signed_dx(&self, from: Node, to: Node) -> i64 {
        signed_offset(to.x as i64 - from.x as i64, self.cols as i64)
    }

    /// Signed shortest offset along the vertical axis, in `(-rows/2, rows/2]`.
    pub fn signed_dy(&self, from: Node, to: Node) -> i64 {
        signed_offset(to.y as i64 - from.y as i64, self.rows as i64)
    }

    pub fn horizontal_distance(&self, u: Node, v: Node) -> usize {
        ring_distance(u.x, v.x, self.cols)
    }

    pub fn vertical_distance(&self, u: Node, v: Node) -> usize {
        ring_distance(u.y, v.y, self.rows)
    }

    pub fn hop_distance(&self, u: Node, v: Node) -> usize {
        self.horizontal_distance(u, v) + self.vertical_distance(u, v)
    }

    /// Distance with per-axis hop weights `lambda_v` (vertical) and `lambda_h`.
    pub fn weighted_distance(&self, u: Node, v: Node, lambda_v: f64, lambda_h: f64) -> f64 {
        lambda_v * self.vertical_distance(u, v) as f64 + lambda_h * self.horizontal_distance(u, v) as f64
    }

    /// Maximum hop distance from the origin.
    pub fn diameter(&self) -> usize {
        self.rows / 2 + self.cols / 2
    }

    pub fn apply(&self, phi: &Automorphism, u: Node) -> Result<Node> {
        phi.check(self)?;
        Ok(phi.apply_unchecked(self, u))
    }

    pub fn apply_edge(&self, phi: &Automorphism, e: DirectedEdge) -> Result<DirectedEdge> {
        phi.check(self)?;
        Ok(phi.apply_edge_unchecked(self, e))
    }

    /// Every automorphism the routing theory uses: all translations composed
    /// with the point group `{I, R0}` or `{I, Rxy, R0, R0 Rxy}`.
    pub fn automorphism_group(&self) -> Vec<Automorphism> {
        let points = self.point_group();
        let mut group = Vec::with_capacity(points.len() * self.num_nodes());
        for p in &points {
            for v in self.nodes() {
                group.push(Automorphism { translation: v, ..*p });
            }
        }
        group
    }

    /// Reflections fixing the origin that preserve capacities.
    pub fn point_group(&self) -> Vec<Automorphism> {
        let mut points = vec![Automorphism::IDENTITY, Automorphism::R0];
        if self.is_square_symmetric() {
            points.push(Automorphism::RXY);
            points.push(Automorphism::R0_RXY);
        }
        points
    }
}

fn ring_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

fn signed_offset(d: i64, n: i64) -> i64 {
    let d = d.rem_euclid(n);
    if 2 * d > n {
        d - n
    } else {
        d
    }
}

/// A torus automorphism in normal form: `u -> P(u) - translation`, where
/// `P` applies the diagonal swap first and the origin reflection second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Automorphism {
    pub translation: Node,
    pub reflect_xy: bool,
    pub reflect_origin: bool,
}

impl Automorphism {
    pub const IDENTITY: Automorphism = Automorphism {
        translation: Node::ORIGIN,
        reflect_xy: false,
        reflect_origin: false,
    };
    pub const R0: Automorphism = Automorphism {
        translation: Node::ORIGIN,
        reflect_xy: false,
        reflect_origin: true,
    };
    pub const RXY: Automorphism = Automorphism {
        translation: Node::ORIGIN,
        reflect_xy: true,
        reflect_origin: false,
    };
    pub const R0_RXY: Automorphism = Automorphism {
        translation: Node::ORIGIN,
        reflect_xy: true,
        reflect_origin: true,
    };

    /// Pure translation `T_v(i) = i - v`.
    pub fn translation(v: Node) -> Automorphism {
        Automorphism {
            translation: v,
            ..Self::IDENTITY
        }
    }

    pub fn check(&self, spec: &TorusSpec) -> Result<()> {
        if self.reflect_xy && !spec.is_square_symmetric() {
            return Err(Error::InvalidAutomorphism(
                "diagonal reflection needs a square torus with equal capacities".into(),
            ));
        }
        if !spec.contains(self.translation) {
            return Err(Error::InvalidAutomorphism(format!(
                "translation {} outside the torus",
                self.translation
            )));
        }
        Ok(())
    }

    /// The reflection part with the translation dropped.
    pub fn linear_part(&self) -> Automorphism {
        Automorphism {
            translation: Node::ORIGIN,
            ..*self
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Apply the reflections only.
    pub fn apply_linear(&self, spec: &TorusSpec, u: Node) -> Node {
        let mut u = u;
        if self.reflect_xy {
            u = Node { x: u.y, y: u.x };
        }
        if self.reflect_origin {
            u = spec.neg(u);
        }
        u
    }

    pub fn apply_dir(&self, dir: Direction) -> Direction {
        let mut d = dir;
        if self.reflect_xy {
            d = d.swap_axes();
        }
        if self.reflect_origin {
            d = d.negate();
        }
        d
    }

    /// Apply without validating against the spec.
    pub fn apply_unchecked(&self, spec: &TorusSpec, u: Node) -> Node {
        spec.sub(self.apply_linear(spec, u), self.translation)
    }

    pub fn apply_edge_unchecked(&self, spec: &TorusSpec, e: DirectedEdge) -> DirectedEdge {
        DirectedEdge {
            tail: self.apply_unchecked(spec, e.tail),
            dir: self.apply_dir(e.dir),
        }
    }

    /// `self` after `first`: `u -> self(first(u))`.
    pub fn compose(&self, spec: &TorusSpec, first: &Automorphism) -> Automorphism {
        // P2(P1 u - v1) - v2 = P2 P1 u - (P2 v1 + v2)
        let shifted = self.apply_linear(spec, first.translation);
        Automorphism {
            translation: spec.add(shifted, self.translation),
            reflect_xy: self.reflect_xy ^ first.reflect_xy,
            reflect_origin: self.reflect_origin ^ first.reflect_origin,
        }
    }

    pub fn inverse(&self, spec: &TorusSpec) -> Automorphism {
        // P^{-1} = P, so u = P(w + v) = P w + P v.
        let lin = self.linear_part();
        Automorphism {
            translation: spec.neg(lin.apply_linear(spec, self.translation)),
            ..lin
        }
    }
}
