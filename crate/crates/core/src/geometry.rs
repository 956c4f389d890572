//! Planar points, the fixed reference-node lattice, and unit-disk connectivity.
//!
//! Axis convention: `x` grows to the right and `y` grows *downwards*, so the
//! lattice origin is the top-left node. Row index maps to `y`, column index to
//! `x`, and node ids are assigned row-major.

use std::collections::VecDeque;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack applied to every closed-ball membership test.
pub const DISTANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(Error::Domain(format!("non-finite coordinate ({x}, {y})")))
        }
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl Sub for Point2D {
    type Output = Displacement;
    fn sub(self, rhs: Point2D) -> Displacement {
        Displacement::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Add<Displacement> for Point2D {
    type Output = Point2D;
    fn add(self, d: Displacement) -> Point2D {
        Point2D::new(self.x + d.dx, self.y + d.dy)
    }
}

/// A planar displacement vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub dx: f64,
    pub dy: f64,
}

impl Displacement {
    pub const ZERO: Displacement = Displacement { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn from_polar(length: f64, angle_rad: f64) -> Self {
        Self::new(length * angle_rad.cos(), length * angle_rad.sin())
    }

    pub fn norm(self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn cross(self, other: Displacement) -> f64 {
        self.dx * other.dy - self.dy * other.dx
    }
}

impl Add for Displacement {
    type Output = Displacement;
    fn add(self, rhs: Displacement) -> Displacement {
        Displacement::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl AddAssign for Displacement {
    fn add_assign(&mut self, rhs: Displacement) {
        self.dx += rhs.dx;
        self.dy += rhs.dy;
    }
}

/// Index of a reference node in row-major lattice order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// Axis-aligned rectangle, `min` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2D,
    pub max: Point2D,
}

impl Rect {
    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.min.x - DISTANCE_TOLERANCE
            && p.x <= self.max.x + DISTANCE_TOLERANCE
            && p.y >= self.min.y - DISTANCE_TOLERANCE
            && p.y <= self.max.y + DISTANCE_TOLERANCE
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// The fixed lattice of reference nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
    pub cell_side: f64,
    pub origin: Point2D,
}

impl GridConfig {
    pub fn new(rows: usize, cols: usize, cell_side: f64, origin: Point2D) -> Result<Self> {
        let cfg = Self {
            rows,
            cols,
            cell_side,
            origin,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The 5×5 lattice with 75 m cells anchored at the origin.
    pub fn paper_default() -> Self {
        Self {
            rows: 5,
            cols: 5,
            cell_side: 75.0,
            origin: Point2D::ORIGIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::Config(format!(
                "grid must be at least 2x2, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.cell_side.is_finite() && self.cell_side > 0.0) {
            return Err(Error::Config(format!(
                "cell side must be positive, got {}",
                self.cell_side
            )));
        }
        Point2D::try_new(self.origin.x, self.origin.y).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn position(&self, id: NodeId) -> Point2D {
        let row = id.0 / self.cols;
        let col = id.0 % self.cols;
        Point2D::new(
            self.origin.x + col as f64 * self.cell_side,
            self.origin.y + row as f64 * self.cell_side,
        )
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            min: self.origin,
            max: Point2D::new(
                self.origin.x + (self.cols - 1) as f64 * self.cell_side,
                self.origin.y + (self.rows - 1) as f64 * self.cell_side,
            ),
        }
    }
}

/// Node positions in row-major order.
pub fn grid_positions(cfg: &GridConfig) -> Result<Vec<Point2D>> {
    cfg.validate()?;
    Ok((0..cfg.node_count())
        .map(|i| cfg.position(NodeId(i)))
        .collect())
}

/// Unit-disk graph over a set of nodes plus hop counts from a gateway.
#[derive(Debug, Clone, PartialEq)]
pub struct Connectivity {
    pub adjacency: Vec<Vec<usize>>,
    pub connected: bool,
    /// Breadth-first hop count from the gateway; `None` when unreachable.
    pub hops: Vec<Option<u32>>,
    pub gateway: usize,
}

impl Connectivity {
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Builds the closed unit-disk graph (`edge iff distance <= range`) and runs a
/// BFS from `gateway`. Node 0 is the origin corner of a lattice and is the
/// usual gateway.
pub fn connectivity_graph(positions: &[Point2D], range: f64, gateway: usize) -> Result<Connectivity> {
    if positions.is_empty() {
        return Err(Error::Domain("connectivity needs at least one node".into()));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::Domain(format!("range must be positive, got {range}")));
    }
    if gateway >= positions.len() {
        return Err(Error::Domain(format!(
            "gateway {gateway} out of bounds for {} nodes",
            positions.len()
        )));
    }

    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if positions[i].distance(positions[j]) <= range + DISTANCE_TOLERANCE {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }

    let mut hops = vec![None; n];
    hops[gateway] = Some(0);
    let mut queue = VecDeque::from([gateway]);
    while let Some(u) = queue.pop_front() {
        let next = hops[u].map(|h| h + 1);
        for &v in &adjacency[u] {
            if hops[v].is_none() {
                hops[v] = next;
                queue.push_back(v);
            }
        }
    }
    let connected = hops.iter().all(Option::is_some);

    Ok(Connectivity {
        adjacency,
        connected,
        hops,
        gateway,
    })
}
