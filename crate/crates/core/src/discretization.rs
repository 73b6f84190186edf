//! Uniform node grid shared by the peridynamic solid and the bilinear flow
//! mesh, plus the fixed bond families built on top of it.
//!
//! Nodes sit on cell corners and are numbered row by row with x running
//! fastest: `id = iy * (nx + 1) + ix`. The same ids index peridynamic
//! material points and finite-element pressure nodes.

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Relative tolerance on the horizon radius when collecting family members.
/// Lattice distances such as `3 * dx` must land inside a `3 * dx` horizon.
pub const FAMILY_RADIUS_TOL: f64 = 1e-12;

/// Relative tolerance for deciding that an extent is a whole number of cells.
const CELL_COUNT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub extent_x: f64,
    pub extent_y: f64,
    pub spacing: f64,
    /// Horizon as a multiple of the spacing.
    pub m_ratio: f64,
    pub thickness: f64,
    /// Halve edge volumes and quarter corner volumes. Off by default so every
    /// material point carries the full `dx^2 * thickness`.
    pub partial_boundary_volumes: bool,
}

impl GridConfig {
    pub fn new(extent_x: f64, extent_y: f64, spacing: f64) -> Self {
        Self {
            extent_x,
            extent_y,
            spacing,
            m_ratio: 3.0,
            thickness: 1.0,
            partial_boundary_volumes: false,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.m_ratio * self.spacing
    }

    /// Cell counts along x and y. Fails unless both extents are positive whole
    /// multiples of the spacing.
    pub fn cell_counts(&self) -> Result<(usize, usize)> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::Config(format!("grid spacing must be positive, got {}", self.spacing)));
        }
        if !(self.thickness > 0.0) {
            return Err(Error::Config(format!("thickness must be positive, got {}", self.thickness)));
        }
        if !(self.m_ratio > 0.0) {
            return Err(Error::Config(format!("m_ratio must be positive, got {}", self.m_ratio)));
        }
        let count = |extent: f64, axis: &str| -> Result<usize> {
            if !(extent > 0.0) || !extent.is_finite() {
                return Err(Error::Config(format!("extent_{axis} must be positive, got {extent}")));
            }
            let ratio = extent / self.spacing;
            let n = ratio.round();
            if n < 1.0 || (ratio - n).abs() > CELL_COUNT_TOL * n.max(1.0) {
                return Err(Error::Config(format!(
                    "extent_{axis} = {extent} is not a whole number of cells of size {}",
                    self.spacing
                )));
            }
            Ok(n as usize)
        };
        Ok((count(self.extent_x, "x")?, count(self.extent_y, "y")?))
    }
}

/// Which outer edges a node lies on. Corner nodes carry two flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeFlags(u8);

impl EdgeFlags {
    pub const LEFT: u8 = 1;
    pub const RIGHT: u8 = 2;
    pub const BOTTOM: u8 = 4;
    pub const TOP: u8 = 8;

    pub fn contains(self, edge: Edge) -> bool {
        self.0 & edge.bit() != 0
    }

    pub fn is_boundary(self) -> bool {
        self.0 != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    fn bit(self) -> u8 {
        match self {
            Edge::Left => EdgeFlags::LEFT,
            Edge::Right => EdgeFlags::RIGHT,
            Edge::Bottom => EdgeFlags::BOTTOM,
            Edge::Top => EdgeFlags::TOP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeGrid {
    /// Cells along x and y; there are `nx + 1` by `ny + 1` nodes.
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub thickness: f64,
    pub horizon: f64,
    pub positions: Vec<Vec2>,
    pub volumes: Vec<f64>,
    pub edges: Vec<EdgeFlags>,
}

impl NodeGrid {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn nodes_per_row(&self) -> usize {
        self.nx + 1
    }

    pub fn id(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    pub fn ij(&self, id: usize) -> (usize, usize) {
        (id % (self.nx + 1), id / (self.nx + 1))
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.spacing, self.ny as f64 * self.spacing)
    }

    /// Node ids on one outer edge, in increasing id order.
    pub fn edge_nodes(&self, edge: Edge) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.edges[i].contains(edge)).collect()
    }

    /// Node closest to `point`; ties go to the lower id.
    pub fn nearest_node(&self, point: Vec2) -> usize {
        let clamp = |v: f64, n: usize| (v / self.spacing).round().clamp(0.0, n as f64) as usize;
        self.id(clamp(point.x, self.nx), clamp(point.y, self.ny))
    }

    pub fn contains(&self, point: Vec2) -> bool {
        let (lx, ly) = self.extent();
        let eps = 1e-12 * self.spacing;
        point.x >= -eps && point.y >= -eps && point.x <= lx + eps && point.y <= ly + eps
    }
}

pub fn build_grid(cfg: &GridConfig) -> Result<NodeGrid> {
    let (nx, ny) = cfg.cell_counts()?;
    let n = (nx + 1) * (ny + 1);
    let mut positions = Vec::with_capacity(n);
    let mut volumes = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n);
    let full = cfg.spacing * cfg.spacing * cfg.thickness;
    for iy in 0..=ny {
        for ix in 0..=nx {
            positions.push(Vec2::new(ix as f64 * cfg.spacing, iy as f64 * cfg.spacing));
            let mut flags = 0u8;
            if ix == 0 {
                flags |= EdgeFlags::LEFT;
            }
            if ix == nx {
                flags |= EdgeFlags::RIGHT;
            }
            if iy == 0 {
                flags |= EdgeFlags::BOTTOM;
            }
            if iy == ny {
                flags |= EdgeFlags::TOP;
            }
            let mut v = full;
            if cfg.partial_boundary_volumes {
                if ix == 0 || ix == nx {
                    v *= 0.5;
                }
                if iy == 0 || iy == ny {
                    v *= 0.5;
                }
            }
            volumes.push(v);
            edges.push(EdgeFlags(flags));
        }
    }
    Ok(NodeGrid {
        nx,
        ny,
        spacing: cfg.spacing,
        thickness: cfg.thickness,
        horizon: cfg.horizon(),
        positions,
        volumes,
        edges,
    })
}

/// Influence function of the bond length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Influence {
    /// `exp(-|xi|^2 / delta^2)`
    Gaussian,
    Unit,
}

impl Influence {
    pub fn weight(self, length: f64, horizon: f64) -> f64 {
        match self {
            Influence::Gaussian => (-(length * length) / (horizon * horizon)).exp(),
            Influence::Unit => 1.0,
        }
    }
}

/// One directed family member of node `i`. Every bond is stored twice, once
/// from each end, and `reverse` points at the partner entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub j: usize,
    pub xi: Vec2,
    pub length: f64,
    pub weight: f64,
    pub reverse: usize,
}

/// Families in compressed-row form: the bonds of node `i` are
/// `bonds[offsets[i]..offsets[i + 1]]`, sorted by neighbour id.
#[derive(Debug, Clone)]
pub struct BondTable {
    pub horizon: f64,
    pub influence: Influence,
    pub offsets: Vec<usize>,
    pub bonds: Vec<Bond>,
    pub intact: Vec<bool>,
    /// Weighted volume with the configured influence function.
    pub weighted_volume: Vec<f64>,
    /// Weighted volume with unit influence; used by the pore-pressure term.
    pub unit_weighted_volume: Vec<f64>,
    /// `sum_j w V_j` over the full original family; denominator of damage.
    pub influence_volume: Vec<f64>,
    pub volumes: Vec<f64>,
}

impl BondTable {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn family_size(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Breaks a bond and its partner entry.
    pub fn break_bond(&mut self, k: usize) {
        self.intact[k] = false;
        let r = self.bonds[k].reverse;
        self.intact[r] = false;
    }

    /// Index of the directed bond `i -> j`, if `j` is in the family of `i`.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.range(i);
        self.bonds[r.clone()].binary_search_by_key(&j, |b| b.j).ok().map(|k| r.start + k)
    }

    pub fn broken_count(&self) -> usize {
        self.intact.iter().filter(|&&b| !b).count() / 2
    }
}

pub fn build_bonds(grid: &NodeGrid, horizon: f64, influence: Influence) -> Result<BondTable> {
    if !(horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    let n = grid.node_count();
    let reach = (horizon * (1.0 + FAMILY_RADIUS_TOL) / grid.spacing).floor() as i64;
    let radius = horizon + FAMILY_RADIUS_TOL * horizon;
    let mut offsets = Vec::with_capacity(n + 1);
    let mut bonds = Vec::new();
    offsets.push(0);
    for i in 0..n {
        let (ix, iy) = grid.ij(i);
        let xi_pos = grid.positions[i];
        for dy in -reach..=reach {
            let jy = iy as i64 + dy;
            if jy < 0 || jy > grid.ny as i64 {
                continue;
            }
            for dx in -reach..=reach {
                let jx = ix as i64 + dx;
                if (dx == 0 && dy == 0) || jx < 0 || jx > grid.nx as i64 {
                    continue;
                }
                let j = grid.id(jx as usize, jy as usize);
                let xi = grid.positions[j] - xi_pos;
                let length = xi.norm();
                if length <= radius {
                    bonds.push(Bond { j, xi, length, weight: influence.weight(length, horizon), reverse: usize::MAX });
                }
            }
        }
        offsets.push(bonds.len());
    }
    // Candidate offsets were visited in row order, so each family is already
    // sorted by neighbour id and the partner can be found by bisection.
    let mut table = BondTable {
        horizon,
        influence,
        offsets,
        intact: vec![true; bonds.len()],
        bonds,
        weighted_volume: vec![0.0; n],
        unit_weighted_volume: vec![0.0; n],
        influence_volume: vec![0.0; n],
        volumes: grid.volumes.clone(),
    };
    for i in 0..n {
        for k in table.range(i) {
            let j = table.bonds[k].j;
            let r = table.find(j, i).expect("bond families are symmetric on a uniform grid");
            table.bonds[k].reverse = r;
        }
    }
    for i in 0..n {
        let (mut m, mut m1, mut wv) = (0.0, 0.0, 0.0);
        for b in &table.bonds[table.range(i)] {
            let vj = table.volumes[b.j];
            m += b.weight * b.length * b.length * vj;
            m1 += b.length * b.length * vj;
            wv += b.weight * vj;
        }
        table.weighted_volume[i] = m;
        table.unit_weighted_volume[i] = m1;
        table.influence_volume[i] = wv;
    }
    Ok(table)
}

/// Bilinear quadrilateral mesh over the same nodes. Each element lists its
/// corners counter-clockwise starting at the lower left.
#[derive(Debug, Clone)]
pub struct FluidMesh {
    pub elements: Vec<[usize; 4]>,
    pub spacing: f64,
    pub thickness: f64,
    pub node_count: usize,
}

impl FluidMesh {
    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Elements touching each node, for nodal-to-element averaging and
    /// sparsity queries.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count];
        for (e, conn) in self.elements.iter().enumerate() {
            for &a in conn {
                out[a].push(e);
            }
        }
        out
    }
}

pub fn build_fluid_mesh(grid: &NodeGrid) -> FluidMesh {
    let mut elements = Vec::with_capacity(grid.nx * grid.ny);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            elements.push([
                grid.id(ix, iy),
                grid.id(ix + 1, iy),
                grid.id(ix + 1, iy + 1),
                grid.id(ix, iy + 1),
            ]);
        }
    }
    FluidMesh { elements, spacing: grid.spacing, thickness: grid.thickness, node_count: grid.node_count() }
}

/// Proper-crossing test between the bond chord `a -> b` and a crack segment
/// `c -> d`. An endpoint lying exactly on the crack line counts as being on
/// the positive side, which behaves like nudging the crack by an
/// infinitesimal amount; bonds that merely touch the line therefore cross it
/// from one side only and the two crack faces stay well defined.
pub fn chord_crosses_segment(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let side = |p: Vec2, q: Vec2, r: Vec2| -> bool {
        let cross = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
        cross >= 0.0
    };
    let strict = |p: Vec2, q: Vec2, r: Vec2| -> f64 { (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x) };
    if side(c, d, a) == side(c, d, b) {
        return false;
    }
    // The chord straddles the crack line; now require the crack segment to
    // straddle the chord line, endpoints of the segment included.
    let s1 = strict(a, b, c);
    let s2 = strict(a, b, d);
    (s1 <= 0.0 && s2 >= 0.0) || (s1 >= 0.0 && s2 <= 0.0)
}

/// Breaks every bond whose chord crosses one of the segments. Returns the
/// number of bonds broken by this call.
pub fn apply_initial_crack(grid: &NodeGrid, bonds: &mut BondTable, segments: &[(Vec2, Vec2)]) -> Result<usize> {
    for (c, d) in segments {
        if !grid.contains(*c) || !grid.contains(*d) {
            return Err(Error::Config(format!(
                "crack segment ({}, {}) -> ({}, {}) leaves the domain",
                c.x, c.y, d.x, d.y
            )));
        }
    }
    let mut count = 0;
    for i in 0..bonds.node_count() {
        for k in bonds.range(i) {
            let j = bonds.bonds[k].j;
            if j < i || !bonds.intact[k] {
                continue;
            }
            let (a, b) = (grid.positions[i], grid.positions[j]);
            if segments.iter().any(|(c, d)| chord_crosses_segment(a, b, *c, *d)) {
                bonds.break_bond(k);
                count += 1;
            }
        }
    }
    Ok(count)
}
