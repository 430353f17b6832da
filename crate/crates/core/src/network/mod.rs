//! Attributed road network: nodes with planar coordinates and elevation,
//! undirected edges carrying slope, surface, width, safety and the set of
//! travel modes they admit, plus the dwellings and facilities pinned to nodes.
//!
//! The network is immutable once built (apart from the scenario helpers that
//! work on an owned copy), so it can be shared across replicate threads.

pub mod io;
mod search;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_network, save_network, NetworkPaths};
pub use search::SearchTree;
use search::{search, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DwellingId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FacilityId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DwellingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for FacilityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Travel mode of an agent or admitted by an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Walk,
    Car,
    Public,
    Green,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Walk, Mode::Car, Mode::Public, Mode::Green];

    pub fn token(self) -> &'static str {
        match self {
            Mode::Walk => "walk",
            Mode::Car => "car",
            Mode::Public => "public",
            Mode::Green => "green",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for Mode {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "walk" => Ok(Mode::Walk),
            "car" => Ok(Mode::Car),
            "public" => Ok(Mode::Public),
            "green" => Ok(Mode::Green),
            other => Err(NetworkError::UnknownMode(other.to_string())),
        }
    }
}

/// Set of modes admitted by an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const fn empty() -> Self {
        ModeSet(0)
    }

    pub fn all() -> Self {
        Mode::ALL.into_iter().collect()
    }

    pub fn with(mut self, mode: Mode) -> Self {
        self.0 |= mode.bit();
        self
    }

    pub fn contains(self, mode: Mode) -> bool {
        self.0 & mode.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |m| self.contains(*m))
    }

    /// Parses pipe-separated tokens, e.g. `walk|car`.
    pub fn parse(s: &str) -> Result<Self, NetworkError> {
        s.split('|')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse::<Mode>)
            .collect()
    }
}

impl FromIterator<Mode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = Mode>>(iter: I) -> Self {
        iter.into_iter().fold(ModeSet::empty(), ModeSet::with)
    }
}

impl<'a> FromIterator<&'a Mode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = &'a Mode>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<&str> = self.iter().map(Mode::token).collect();
        f.write_str(&tokens.join("|"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub elevation: f64,
}

/// Undirected edge. `slope` is the grade when travelling from `u` to `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub length: f64,
    pub slope: f64,
    pub surface: f64,
    pub width: f64,
    pub safety: f64,
    pub modes: ModeSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dwelling {
    pub id: DwellingId,
    pub node: NodeId,
    pub inhabited: bool,
    pub has_elder_75: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Facility {
    pub id: FacilityId,
    pub kind: usize,
    pub node: NodeId,
    pub essential: bool,
}

/// Base speeds per mode in km/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedConfig {
    pub walk: f64,
    pub car: f64,
    pub public: f64,
    pub green: f64,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        SpeedConfig {
            walk: 4.0,
            car: 40.0,
            public: 30.0,
            green: 10.0,
        }
    }
}

impl SpeedConfig {
    pub fn base(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Walk => self.walk,
            Mode::Car => self.car,
            Mode::Public => self.public,
            Mode::Green => self.green,
        }
    }
}

const TOBLER_DECAY: f64 = 3.5;
const TOBLER_OFFSET: f64 = 0.05;

/// Travel speed in km/h for `mode` on a grade of `slope`.
///
/// Walking follows an exponential hiking function normalised so that flat
/// ground gives exactly the base walking speed, clamped to
/// `[0.2, 1.2] x` base. Vehicle modes ignore slope.
pub fn effective_speed(mode: Mode, slope: f64, speeds: &SpeedConfig) -> f64 {
    let base = speeds.base(mode);
    match mode {
        Mode::Walk => {
            let factor = (-TOBLER_DECAY * (slope + TOBLER_OFFSET).abs()).exp()
                / (-TOBLER_DECAY * TOBLER_OFFSET).exp();
            (base * factor).clamp(0.2 * base, 1.2 * base)
        }
        Mode::Car | Mode::Public | Mode::Green => base,
    }
}

/// Minutes needed to cover `length_m` meters at `speed_kmh`.
pub fn minutes_for(length_m: f64, speed_kmh: f64) -> f64 {
    length_m / 1000.0 / speed_kmh * 60.0
}

/// A route between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Visited nodes from origin to destination; a single node when origin = destination.
    pub nodes: Vec<NodeId>,
    /// Indices into [`RoadNetwork::edges`], in traversal order.
    pub edges: Vec<usize>,
    /// Meters.
    pub length: f64,
    /// Minutes.
    pub travel_time: f64,
}

impl PathResult {
    pub fn is_trivial(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("node {0} has non-finite coordinates")]
    NonFiniteNode(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("edge #{index} ({u}-{v}): {reason}")]
    InvalidEdge {
        index: usize,
        u: NodeId,
        v: NodeId,
        reason: String,
    },
    #[error("duplicate dwelling id {0}")]
    DuplicateDwelling(DwellingId),
    #[error("dwelling {0} references unknown node {1}")]
    DwellingNode(DwellingId, NodeId),
    #[error("duplicate facility id {0}")]
    DuplicateFacility(FacilityId),
    #[error("facility {0} references unknown node {1}")]
    FacilityNode(FacilityId, NodeId),
    #[error("unknown facility id {0}")]
    UnknownFacility(FacilityId),
    #[error("unknown travel mode '{0}'")]
    UnknownMode(String),
    #[error("no {mode} route from node {from} to node {to}")]
    NoRoute {
        from: NodeId,
        to: NodeId,
        mode: Mode,
    },
    #[error("{file}: line {line}: {message}")]
    Csv {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}: {message}")]
    Io { file: String, message: String },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Adjacent {
    pub node: usize,
    pub edge: usize,
    /// True when traversing the edge from `u` to `v`.
    pub forward: bool,
}

/// Planar road graph with dwellings and facilities attached to nodes.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    dwellings: Vec<Dwelling>,
    facilities: Vec<Facility>,
    index: HashMap<NodeId, usize>,
    adjacency: Vec<Vec<Adjacent>>,
}

/// Networks are equal when their tables are; the derived indices follow.
impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.dwellings == other.dwellings
            && self.facilities == other.facilities
    }
}

impl RoadNetwork {
    pub fn new(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        dwellings: Vec<Dwelling>,
        facilities: Vec<Facility>,
    ) -> Result<Self, NetworkError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite() && n.elevation.is_finite()) {
                return Err(NetworkError::NonFiniteNode(n.id));
            }
            if index.insert(n.id, i).is_some() {
                return Err(NetworkError::DuplicateNode(n.id));
            }
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            let invalid = |reason: &str| NetworkError::InvalidEdge {
                index: i,
                u: e.u,
                v: e.v,
                reason: reason.to_string(),
            };
            let ui = *index
                .get(&e.u)
                .ok_or_else(|| invalid("unknown endpoint u"))?;
            let vi = *index
                .get(&e.v)
                .ok_or_else(|| invalid("unknown endpoint v"))?;
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(invalid("length must be > 0"));
            }
            if !(e.slope.is_finite() && e.slope.abs() <= 1.0) {
                return Err(invalid("|slope| must be <= 1"));
            }
            if !(0.0..=1.0).contains(&e.surface) {
                return Err(invalid("surface must lie in [0,1]"));
            }
            if !(0.0..=1.0).contains(&e.safety) {
                return Err(invalid("safety must lie in [0,1]"));
            }
            if !(e.width.is_finite() && e.width >= 0.0) {
                return Err(invalid("width must be >= 0"));
            }
            if e.modes.is_empty() {
                return Err(invalid("mode set is empty"));
            }
            adjacency[ui].push(Adjacent {
                node: vi,
                edge: i,
                forward: true,
            });
            adjacency[vi].push(Adjacent {
                node: ui,
                edge: i,
                forward: false,
            });
        }
        for list in &mut adjacency {
            list.sort_by_key(|a| (nodes[a.node].id, a.edge));
        }

        let mut seen = BTreeSet::new();
        for d in &dwellings {
            if !seen.insert(d.id) {
                return Err(NetworkError::DuplicateDwelling(d.id));
            }
            if !index.contains_key(&d.node) {
                return Err(NetworkError::DwellingNode(d.id, d.node));
            }
        }
        let mut seen = BTreeSet::new();
        for f in &facilities {
            if !seen.insert(f.id) {
                return Err(NetworkError::DuplicateFacility(f.id));
            }
            if !index.contains_key(&f.node) {
                return Err(NetworkError::FacilityNode(f.id, f.node));
            }
        }

        Ok(RoadNetwork {
            nodes,
            edges,
            dwellings,
            facilities,
            index,
            adjacency,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn dwellings(&self) -> &[Dwelling] {
        &self.dwellings
    }

    pub fn facilities(&self) -> &[Facility] {
        &self.facilities
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn facility(&self, id: FacilityId) -> Option<&Facility> {
        self.facilities.iter().find(|f| f.id == id)
    }

    pub fn dwelling(&self, id: DwellingId) -> Option<&Dwelling> {
        self.dwellings.iter().find(|d| d.id == id)
    }

    pub(crate) fn index_of(&self, id: NodeId) -> Result<usize, NetworkError> {
        self.index
            .get(&id)
            .copied()
            .ok_or(NetworkError::UnknownNode(id))
    }

    pub(crate) fn adjacency(&self, idx: usize) -> &[Adjacent] {
        &self.adjacency[idx]
    }

    /// Moves a facility to another node.
    pub fn relocate_facility(&mut self, id: FacilityId, node: NodeId) -> Result<(), NetworkError> {
        if !self.contains_node(node) {
            return Err(NetworkError::UnknownNode(node));
        }
        let f = self
            .facilities
            .iter_mut()
            .find(|f| f.id == id)
            .ok_or(NetworkError::UnknownFacility(id))?;
        f.node = node;
        Ok(())
    }

    /// Overwrites the `has_elder_75` flag of every dwelling.
    pub fn set_elder_flags(&mut self, elder: &BTreeSet<DwellingId>) {
        for d in &mut self.dwellings {
            d.has_elder_75 = elder.contains(&d.id);
        }
    }

    /// Grade of `edge` in the direction of travel.
    pub fn directed_slope(&self, edge: usize, forward: bool) -> f64 {
        let s = self.edges[edge].slope;
        if forward {
            s
        } else {
            -s
        }
    }

    /// Minutes to traverse `edge` by `mode`, or `None` when the edge does not admit it.
    pub fn traversal_minutes(
        &self,
        edge: usize,
        forward: bool,
        mode: Mode,
        speeds: &SpeedConfig,
    ) -> Option<f64> {
        let e = &self.edges[edge];
        if !e.modes.contains(mode) {
            return None;
        }
        let speed = effective_speed(mode, self.directed_slope(edge, forward), speeds);
        Some(minutes_for(e.length, speed))
    }

    /// Planar Euclidean distance in meters; elevation is ignored.
    pub fn straight_line(&self, a: NodeId, b: NodeId) -> Result<f64, NetworkError> {
        let na = &self.nodes[self.index_of(a)?];
        let nb = &self.nodes[self.index_of(b)?];
        Ok((na.x - nb.x).hypot(na.y - nb.y))
    }

    /// Fastest route by `mode`. Ties go to fewer edges, then to the
    /// lexicographically smallest node sequence.
    pub fn shortest_path(
        &self,
        origin: NodeId,
        dest: NodeId,
        mode: Mode,
        speeds: &SpeedConfig,
    ) -> Result<PathResult, NetworkError> {
        let o = self.index_of(origin)?;
        let d = self.index_of(dest)?;
        let tree = search(
            self,
            o,
            mode,
            Metric::Time(*speeds),
            f64::INFINITY,
            None,
            Some(d),
        );
        tree.path_to(self, d, mode, speeds)
            .ok_or(NetworkError::NoRoute {
                from: origin,
                to: dest,
                mode,
            })
    }

    /// Route of minimum length (meters) by `mode`, same tie-breaking as
    /// [`RoadNetwork::shortest_path`].
    pub fn shortest_distance_path(
        &self,
        origin: NodeId,
        dest: NodeId,
        mode: Mode,
        speeds: &SpeedConfig,
    ) -> Result<PathResult, NetworkError> {
        let o = self.index_of(origin)?;
        let d = self.index_of(dest)?;
        let tree = search(self, o, mode, Metric::Length, f64::INFINITY, None, Some(d));
        tree.path_to(self, d, mode, speeds)
            .ok_or(NetworkError::NoRoute {
                from: origin,
                to: dest,
                mode,
            })
    }

    /// Travel-time tree (minutes) from `origin`, pruned at `limit`.
    pub fn travel_times_from(
        &self,
        origin: NodeId,
        mode: Mode,
        speeds: &SpeedConfig,
        limit: f64,
    ) -> Result<SearchTree, NetworkError> {
        let o = self.index_of(origin)?;
        Ok(search(
            self,
            o,
            mode,
            Metric::Time(*speeds),
            limit,
            None,
            None,
        ))
    }

    /// Travel-time tree restricted to edges accepted by `keep`.
    pub fn travel_times_filtered(
        &self,
        origin: NodeId,
        mode: Mode,
        speeds: &SpeedConfig,
        limit: f64,
        keep: &dyn Fn(usize) -> bool,
    ) -> Result<SearchTree, NetworkError> {
        let o = self.index_of(origin)?;
        Ok(search(
            self,
            o,
            mode,
            Metric::Time(*speeds),
            limit,
            Some(keep),
            None,
        ))
    }

    /// Network distance tree (meters) from `origin` by `mode`, pruned at `limit`.
    pub fn distances_from(
        &self,
        origin: NodeId,
        mode: Mode,
        limit: f64,
    ) -> Result<SearchTree, NetworkError> {
        let o = self.index_of(origin)?;
        Ok(search(self, o, mode, Metric::Length, limit, None, None))
    }

    /// Nodes whose fastest travel time from `origin` is at most `minutes`.
    pub fn reachable_nodes(
        &self,
        origin: NodeId,
        minutes: f64,
        mode: Mode,
        speeds: &SpeedConfig,
    ) -> Result<BTreeSet<NodeId>, NetworkError> {
        let tree = self.travel_times_from(origin, mode, speeds, minutes.max(0.0))?;
        Ok(tree.reached(self).collect())
    }

    /// Inhabited dwellings within `radius_m` meters of walking network distance.
    pub fn dwellings_within(
        &self,
        node: NodeId,
        radius_m: f64,
    ) -> Result<Vec<&Dwelling>, NetworkError> {
        let tree = self.distances_from(node, Mode::Walk, radius_m.max(0.0))?;
        Ok(self
            .dwellings
            .iter()
            .filter(|d| d.inhabited && tree.cost(self, d.node).is_some())
            .collect())
    }

    /// Node closest to the planar point `(x, y)`; ties go to the smaller id.
    pub fn nearest_node(&self, x: f64, y: f64) -> Option<NodeId> {
        self.nodes
            .iter()
            .map(|n| ((n.x - x).hypot(n.y - y), n.id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }
}
