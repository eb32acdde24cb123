//! Synthetic session traces from mobility models.
//!
//! Nodes move in a rectangular world divided into square cells; a cell is one
//! "location" (access point). A node is online only while paused, and each
//! pause becomes one session at the cell it paused in. Output traces use the
//! same session format as real traces.
//!
//! Every node draws from its own random stream (`seed`, node index), so
//! adding nodes never changes existing nodes' trajectories and parallel
//! generation matches sequential generation.

mod rd;
mod tvc;

pub use rd::{generate_random_direction, RdConfig};
pub use tvc::{generate_tvc, Period, Schedule, TvcConfig, WEEK};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldGrid {
    pub width: f64,
    pub height: f64,
    pub cell_size: f64,
}

impl Default for WorldGrid {
    fn default() -> Self {
        WorldGrid {
            width: 1000.0,
            height: 1000.0,
            cell_size: 100.0,
        }
    }
}

impl WorldGrid {
    pub fn new(width: f64, height: f64, cell_size: f64) -> Result<Self> {
        let w = WorldGrid {
            width,
            height,
            cell_size,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let divides = |len: f64| {
            let q = len / self.cell_size;
            (q - q.round()).abs() < 1e-9 && q.round() >= 1.0
        };
        if !(self.cell_size > 0.0 && self.width > 0.0 && self.height > 0.0) {
            return Err(Error::arg("world dimensions must be positive"));
        }
        if !divides(self.width) || !divides(self.height) {
            return Err(Error::arg(format!(
                "cell size {} does not divide world {}x{}",
                self.cell_size, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn cols(&self) -> usize {
        (self.width / self.cell_size).round() as usize
    }

    pub fn rows(&self) -> usize {
        (self.height / self.cell_size).round() as usize
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    /// Column and row of a position; see [`map_position_to_location`].
    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if !(0.0..=self.width).contains(&x) || !(0.0..=self.height).contains(&y) {
            return Err(Error::arg(format!("position ({x}, {y}) outside the world")));
        }
        let index = |p: f64, cells: usize| {
            if p <= 0.0 {
                0
            } else {
                ((p / self.cell_size).ceil() as usize)
                    .saturating_sub(1)
                    .min(cells - 1)
            }
        };
        Ok((index(x, self.cols()), index(y, self.rows())))
    }
}

pub fn location_id(col: usize, row: usize) -> String {
    format!("cell_{col}_{row}")
}

/// `cell_<col>_<row>` of the cell containing `pos`. A position on a cell
/// boundary belongs to the lower-index cell.
pub fn map_position_to_location(pos: (f64, f64), world: &WorldGrid) -> Result<String> {
    let (c, r) = world.cell_of(pos.0, pos.1)?;
    Ok(location_id(c, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// True when the interiors overlap; shared edges do not count.
    pub fn intersects(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    pub fn within(&self, o: &Rect) -> bool {
        self.x0 >= o.x0 && self.x1 <= o.x1 && self.y0 >= o.y0 && self.y1 <= o.y1
    }

    /// Uniform point in `(x0, x1] × (y0, y1]`, so a cell-aligned rectangle
    /// never yields a point that maps outside it.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        (
            self.x1 - u * (self.x1 - self.x0),
            self.y1 - v * (self.y1 - self.y0),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AssignmentMode {
    /// Every node shares one community set.
    Homogeneous,
    /// Equal-size node groups, each with its own primary community and a
    /// shared hub.
    Grouped { groups: usize },
}

/// Per-node community rectangles with the planted group of each node.
#[derive(Clone, Debug, PartialEq)]
pub struct CommunityAssignment {
    group_communities: Vec<Vec<Rect>>,
    planted_label: Vec<usize>,
}

impl CommunityAssignment {
    pub fn node_count(&self) -> usize {
        self.planted_label.len()
    }

    pub fn communities_of(&self, node: usize) -> &[Rect] {
        &self.group_communities[self.planted_label[node]]
    }

    pub fn planted_labels(&self) -> &[usize] {
        &self.planted_label
    }

    pub fn groups(&self) -> usize {
        self.group_communities.len()
    }

    /// Community list of each group; the last entry of each is the hub.
    pub fn group_communities(&self) -> &[Vec<Rect>] {
        &self.group_communities
    }
}

/// Single-cell communities.
pub fn assign_communities(
    node_count: usize,
    mode: AssignmentMode,
    world: &WorldGrid,
    seed: u64,
) -> Result<CommunityAssignment> {
    assign_communities_sized(node_count, mode, world, 1, seed)
}

/// Communities are `span × span` cell blocks on a block-aligned tiling of
/// the world; the primaries and the hub are distinct tiles, so they are
/// pairwise disjoint. Homogeneous mode is the one-group case.
pub fn assign_communities_sized(
    node_count: usize,
    mode: AssignmentMode,
    world: &WorldGrid,
    span: usize,
    seed: u64,
) -> Result<CommunityAssignment> {
    world.validate()?;
    let groups = match mode {
        AssignmentMode::Homogeneous => 1,
        AssignmentMode::Grouped { groups } => groups,
    };
    if groups == 0 || groups > node_count.max(1) {
        return Err(Error::arg(format!(
            "cannot form {groups} groups from {node_count} nodes"
        )));
    }
    if span == 0 {
        return Err(Error::arg("community span must be at least one cell"));
    }
    let (bcols, brows) = (world.cols() / span, world.rows() / span);
    let tiles = bcols * brows;
    if tiles < groups + 1 {
        return Err(Error::arg(format!(
            "world holds {tiles} disjoint {span}x{span}-cell communities, need {}",
            groups + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = index::sample(&mut rng, tiles, groups + 1).into_vec();
    let side = span as f64 * world.cell_size;
    let rect_of = |tile: usize| {
        let (c, r) = (tile % bcols, tile / bcols);
        Rect::new(
            c as f64 * side,
            r as f64 * side,
            (c + 1) as f64 * side,
            (r + 1) as f64 * side,
        )
    };
    let hub = rect_of(chosen[groups]);
    let group_communities = (0..groups).map(|g| vec![rect_of(chosen[g]), hub]).collect();
    let planted_label = (0..node_count).map(|i| i * groups / node_count).collect();
    Ok(CommunityAssignment {
        group_communities,
        planted_label,
    })
}

pub fn node_name(i: usize) -> String {
    format!("node_{i:05}")
}

pub(crate) fn node_rng(seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng
}

/// Replay record written alongside every generated trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMetadata {
    pub generator: String,
    pub generator_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub node_count: usize,
    pub sessions: usize,
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config types serialize");
    hex::encode(Sha256::digest(&json))
}
