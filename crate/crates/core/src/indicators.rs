//! Accessibility indicators and the composite walkability index.
//!
//! All indicators are evaluated on the walking subgraph. Functional forms and
//! weights live in [`IndicatorConfig`] so that sweeps can probe them.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvfmt::fmt_f64;
use crate::network::{Edge, Mode, NetworkError, NodeId, PathResult, RoadNetwork, SpeedConfig};

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("invalid indicator configuration: {0}")]
    InvalidConfig(String),
    #[error("no walking route from node {from} to node {to}")]
    NoRoute { from: NodeId, to: NodeId },
    #[error("nodes {0} and {1} are distinct but co-located")]
    DegenerateGeometry(NodeId, NodeId),
    #[error("resident list is empty")]
    EmptyPopulation,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuitabilityWeights {
    pub surface: f64,
    pub width: f64,
    pub slope: f64,
    pub safety: f64,
}

impl Default for SuitabilityWeights {
    fn default() -> Self {
        SuitabilityWeights {
            surface: 0.3,
            width: 0.2,
            slope: 0.3,
            safety: 0.2,
        }
    }
}

/// Blend of the three walkability terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkabilityWeights {
    pub service: f64,
    pub infrastructure: f64,
    pub directness: f64,
}

impl Default for WalkabilityWeights {
    fn default() -> Self {
        WalkabilityWeights {
            service: 0.4,
            infrastructure: 0.4,
            directness: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub walk_range_minutes: f64,
    pub buffer_m: f64,
    /// One weight per facility kind; must sum to 1.
    pub kind_weights: Vec<f64>,
    pub suitability_weights: SuitabilityWeights,
    /// Minimum edge suitability for a path to count as safe.
    pub s_min: f64,
    /// Extra weight of dwellings hosting someone aged 75+.
    pub gamma_vuln: f64,
    pub walkability_weights: WalkabilityWeights,
    /// Width (m) at which the width term saturates.
    pub width_saturation_m: f64,
    /// Absolute grade at which the slope term reaches zero.
    pub slope_cutoff: f64,
    /// Set from the engine configuration, never read from indicator overrides.
    #[serde(skip)]
    pub speeds: SpeedConfig,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig::uniform(5)
    }
}

impl IndicatorConfig {
    /// Defaults with uniform weights over `kinds` facility kinds.
    pub fn uniform(kinds: usize) -> Self {
        IndicatorConfig {
            walk_range_minutes: 15.0,
            buffer_m: 300.0,
            kind_weights: vec![1.0 / kinds as f64; kinds],
            suitability_weights: SuitabilityWeights::default(),
            s_min: 0.4,
            gamma_vuln: 0.0,
            walkability_weights: WalkabilityWeights::default(),
            width_saturation_m: 2.0,
            slope_cutoff: 0.15,
            speeds: SpeedConfig::default(),
        }
    }

    pub fn kinds(&self) -> usize {
        self.kind_weights.len()
    }

    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), IndicatorError> {
        let bad = |m: String| Err(IndicatorError::InvalidConfig(m));
        let check_weights = |name: &str, ws: &[f64]| -> Result<(), IndicatorError> {
            if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(IndicatorError::InvalidConfig(format!(
                    "{name} must be non-negative"
                )));
            }
            let sum: f64 = ws.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(IndicatorError::InvalidConfig(format!(
                    "{name} sum to {sum}, expected 1"
                )));
            }
            Ok(())
        };
        if self.kind_weights.is_empty() {
            return bad("kind_weights is empty".into());
        }
        check_weights("kind_weights", &self.kind_weights)?;
        let s = &self.suitability_weights;
        check_weights(
            "suitability_weights",
            &[s.surface, s.width, s.slope, s.safety],
        )?;
        let w = &self.walkability_weights;
        check_weights(
            "walkability_weights",
            &[w.service, w.infrastructure, w.directness],
        )?;
        if !(self.walk_range_minutes >= 0.0) {
            return bad("walk_range_minutes must be >= 0".into());
        }
        if !(self.buffer_m >= 0.0) {
            return bad("buffer_m must be >= 0".into());
        }
        if !(self.gamma_vuln >= 0.0) {
            return bad("gamma_vuln must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.s_min) {
            return bad("s_min must lie in [0,1]".into());
        }
        if !(self.width_saturation_m > 0.0 && self.slope_cutoff > 0.0) {
            return bad("width_saturation_m and slope_cutoff must be > 0".into());
        }
        Ok(())
    }
}

/// Shortest walkable path length over straight-line distance.
///
/// Returns 1 when `origin == dest`.
pub fn route_efficiency(
    net: &RoadNetwork,
    origin: NodeId,
    dest: NodeId,
    cfg: &IndicatorConfig,
) -> Result<f64, IndicatorError> {
    if origin == dest {
        net.straight_line(origin, dest)?;
        return Ok(1.0);
    }
    let chord = net.straight_line(origin, dest)?;
    let path = match net.shortest_distance_path(origin, dest, Mode::Walk, &cfg.speeds) {
        Ok(p) => p,
        Err(NetworkError::NoRoute { .. }) => {
            return Err(IndicatorError::NoRoute {
                from: origin,
                to: dest,
            })
        }
        Err(e) => return Err(e.into()),
    };
    if chord == 0.0 {
        return Err(IndicatorError::DegenerateGeometry(origin, dest));
    }
    Ok(path.length / chord)
}

fn walk_tree(
    net: &RoadNetwork,
    origin: NodeId,
    cfg: &IndicatorConfig,
) -> Result<crate::network::SearchTree, IndicatorError> {
    Ok(net.travel_times_from(origin, Mode::Walk, &cfg.speeds, cfg.walk_range_minutes)?)
}

fn accessibility_from_tree(
    net: &RoadNetwork,
    tree: &crate::network::SearchTree,
    cfg: &IndicatorConfig,
) -> f64 {
    let mut present = vec![false; cfg.kinds()];
    for f in net.facilities() {
        if f.kind < present.len() && tree.is_reached(net, f.node) {
            present[f.kind] = true;
        }
    }
    present
        .iter()
        .zip(&cfg.kind_weights)
        .filter(|(p, _)| **p)
        .map(|(_, w)| w)
        .sum()
}

/// Weighted presence of facility kinds within the walking range.
pub fn service_accessibility(
    net: &RoadNetwork,
    origin: NodeId,
    cfg: &IndicatorConfig,
) -> Result<f64, IndicatorError> {
    let tree = walk_tree(net, origin, cfg)?;
    Ok(accessibility_from_tree(net, &tree, cfg))
}

/// Inhabited dwellings within the buffer, elder-hosting ones weighted by `1 + gamma_vuln`.
pub fn residential_proximity(
    net: &RoadNetwork,
    origin: NodeId,
    cfg: &IndicatorConfig,
) -> Result<f64, IndicatorError> {
    Ok(net
        .dwellings_within(origin, cfg.buffer_m)?
        .iter()
        .map(|d| 1.0 + if d.has_elder_75 { cfg.gamma_vuln } else { 0.0 })
        .sum())
}

/// Pedestrian suitability of one edge in `[0, 1]`.
pub fn infrastructure_suitability(edge: &Edge, cfg: &IndicatorConfig) -> f64 {
    let w = &cfg.suitability_weights;
    let width = (edge.width / cfg.width_saturation_m).min(1.0);
    let slope = (1.0 - edge.slope.abs() / cfg.slope_cutoff).max(0.0);
    w.surface * edge.surface + w.width * width + w.slope * slope + w.safety * edge.safety
}

/// Weakest edge along `path`; 1 for a trivial path.
pub fn min_edge_suitability(net: &RoadNetwork, path: &PathResult, cfg: &IndicatorConfig) -> f64 {
    path.edges
        .iter()
        .map(|&e| infrastructure_suitability(&net.edges()[e], cfg))
        .fold(1.0, f64::min)
}

/// Share of residents reaching an essential facility within the walking
/// range along edges that all meet `s_min`.
pub fn overall_service_access(
    net: &RoadNetwork,
    residents: &[NodeId],
    cfg: &IndicatorConfig,
) -> Result<f64, IndicatorError> {
    if residents.is_empty() {
        return Err(IndicatorError::EmptyPopulation);
    }
    let safe: Vec<bool> = net
        .edges()
        .iter()
        .map(|e| infrastructure_suitability(e, cfg) >= cfg.s_min)
        .collect();
    let keep = |e: usize| safe[e];
    let mut cache: BTreeMap<NodeId, bool> = BTreeMap::new();
    let mut served = 0usize;
    for &home in residents {
        let ok = match cache.get(&home) {
            Some(&ok) => ok,
            None => {
                let tree = net.travel_times_filtered(
                    home,
                    Mode::Walk,
                    &cfg.speeds,
                    cfg.walk_range_minutes,
                    &keep,
                )?;
                let ok = net
                    .facilities()
                    .iter()
                    .any(|f| f.essential && tree.is_reached(net, f.node));
                cache.insert(home, ok);
                ok
            }
        };
        served += usize::from(ok);
    }
    Ok(served as f64 / residents.len() as f64)
}

/// The three walkability ingredients, each in `[0, 1]`, and the blended index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkabilityTerms {
    pub service: f64,
    pub infrastructure: f64,
    pub directness: f64,
    pub index: f64,
}

pub fn walkability_terms(
    net: &RoadNetwork,
    origin: NodeId,
    cfg: &IndicatorConfig,
) -> Result<WalkabilityTerms, IndicatorError> {
    let tree = walk_tree(net, origin, cfg)?;
    let service = accessibility_from_tree(net, &tree, cfg);

    let (sum, count) = net
        .edges()
        .iter()
        .filter(|e| {
            e.modes.contains(Mode::Walk) && tree.is_reached(net, e.u) && tree.is_reached(net, e.v)
        })
        .fold((0.0, 0usize), |(s, c), e| {
            (s + infrastructure_suitability(e, cfg), c + 1)
        });
    let infrastructure = if count == 0 { 0.0 } else { sum / count as f64 };

    let nearest = net
        .facilities()
        .iter()
        .filter_map(|f| tree.cost(net, f.node).map(|t| (t, f.id, f.node)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let directness = match nearest {
        None => 0.0,
        Some((_, _, node)) => match route_efficiency(net, origin, node, cfg) {
            Ok(ratio) => (1.0 / ratio).min(1.0),
            Err(IndicatorError::DegenerateGeometry(..)) => 0.0,
            Err(e) => return Err(e),
        },
    };

    let w = &cfg.walkability_weights;
    let index = 100.0
        * (w.service * service + w.infrastructure * infrastructure + w.directness * directness);
    Ok(WalkabilityTerms {
        service,
        infrastructure,
        directness,
        index: index.clamp(0.0, 100.0),
    })
}

/// Composite walkability score in `[0, 100]`.
pub fn walkability_index(
    net: &RoadNetwork,
    origin: NodeId,
    cfg: &IndicatorConfig,
) -> Result<f64, IndicatorError> {
    walkability_terms(net, origin, cfg).map(|t| t.index)
}

/// Rectangular raster over which walkability is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub cell_size: f64,
}

impl GridSpec {
    /// Bounding box of the network nodes.
    pub fn covering(net: &RoadNetwork, cell_size: f64) -> Self {
        let mut g = GridSpec {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
            cell_size,
        };
        for n in net.nodes() {
            g.min_x = g.min_x.min(n.x);
            g.min_y = g.min_y.min(n.y);
            g.max_x = g.max_x.max(n.x);
            g.max_y = g.max_y.max(n.y);
        }
        if net.nodes().is_empty() {
            g.min_x = 0.0;
            g.min_y = 0.0;
            g.max_x = 0.0;
            g.max_y = 0.0;
        }
        g
    }

    fn cells_along(lo: f64, hi: f64, size: f64) -> usize {
        (((hi - lo) / size).ceil() as usize).max(1)
    }

    /// Cell centres, row by row from `min_y`.
    pub fn centres(&self) -> Vec<(f64, f64)> {
        let nx = Self::cells_along(self.min_x, self.max_x, self.cell_size);
        let ny = Self::cells_along(self.min_y, self.max_y, self.cell_size);
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push((
                    self.min_x + (i as f64 + 0.5) * self.cell_size,
                    self.min_y + (j as f64 + 0.5) * self.cell_size,
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    pub walkability: f64,
}

/// Walkability of the nearest network node for every cell of `grid`.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn walkability_grid(
    net: &RoadNetwork,
    grid: &GridSpec,
    cfg: &IndicatorConfig,
) -> Result<Vec<GridCell>, IndicatorError> {
    if !(grid.cell_size > 0.0) {
        return Err(IndicatorError::InvalidConfig(
            "cell_size must be > 0".into(),
        ));
    }
    let mut cache: BTreeMap<NodeId, f64> = BTreeMap::new();
    grid.centres()
        .into_iter()
        .map(|(x, y)| {
            let walkability = match net.nearest_node(x, y) {
                None => 0.0,
                Some(node) => match cache.get(&node) {
                    Some(&w) => w,
                    None => {
                        let w = walkability_index(net, node, cfg)?;
                        cache.insert(node, w);
                        w
                    }
                },
            };
            Ok(GridCell { x, y, walkability })
        })
        .collect()
}

pub fn write_grid<W: Write>(writer: W, cells: &[GridCell]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cell_x", "cell_y", "walkability"])?;
    for c in cells {
        w.write_record([fmt_f64(c.x), fmt_f64(c.y), fmt_f64(c.walkability)])?;
    }
    w.flush()?;
    Ok(())
}
