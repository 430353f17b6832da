use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Mode, NodeId, PathResult, RoadNetwork, SpeedConfig};

#[derive(Debug, Clone, Copy)]
pub(crate) enum Metric {
    /// Minutes, slope- and mode-aware.
    Time(SpeedConfig),
    /// Meters.
    Length,
}

#[derive(Debug, Clone, Copy)]
struct Pred {
    node: usize,
    edge: usize,
}

/// Result of a single-source label-setting search.
///
/// Labels are ordered by (cost, edge count, node sequence), so the recorded
/// predecessor chains are unique and platform independent.
#[derive(Debug, Clone)]
pub struct SearchTree {
    origin: usize,
    cost: Vec<f64>,
    hops: Vec<u32>,
    pred: Vec<Option<Pred>>,
    settled: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cost: f64,
    hops: u32,
    id: NodeId,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.hops.cmp(&self.hops))
            .then(other.id.cmp(&self.id))
    }
}

pub(crate) fn search(
    net: &RoadNetwork,
    origin: usize,
    mode: Mode,
    metric: Metric,
    limit: f64,
    keep: Option<&dyn Fn(usize) -> bool>,
    target: Option<usize>,
) -> SearchTree {
    let n = net.nodes.len();
    let mut tree = SearchTree {
        origin,
        cost: vec![f64::INFINITY; n],
        hops: vec![u32::MAX; n],
        pred: vec![None; n],
        settled: vec![false; n],
    };
    tree.cost[origin] = 0.0;
    tree.hops[origin] = 0;

    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        cost: 0.0,
        hops: 0,
        id: net.nodes[origin].id,
        node: origin,
    });

    while let Some(Entry {
        cost, hops, node, ..
    }) = heap.pop()
    {
        if tree.settled[node] || cost > tree.cost[node] || hops > tree.hops[node] {
            continue;
        }
        tree.settled[node] = true;
        if Some(node) == target {
            break;
        }
        for adj in net.adjacency(node) {
            if tree.settled[adj.node] {
                continue;
            }
            if let Some(keep) = keep {
                if !keep(adj.edge) {
                    continue;
                }
            }
            let weight = match metric {
                Metric::Time(speeds) => {
                    match net.traversal_minutes(adj.edge, adj.forward, mode, &speeds) {
                        Some(w) => w,
                        None => continue,
                    }
                }
                Metric::Length => {
                    let e = &net.edges[adj.edge];
                    if !e.modes.contains(mode) {
                        continue;
                    }
                    e.length
                }
            };
            let next_cost = cost + weight;
            let next_hops = hops + 1;
            if next_cost > limit {
                continue;
            }
            let v = adj.node;
            let better = match next_cost
                .total_cmp(&tree.cost[v])
                .then(next_hops.cmp(&tree.hops[v]))
            {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => tree.prefers(net, node, adj.edge, v),
            };
            if better {
                let improved_label = next_cost != tree.cost[v] || next_hops != tree.hops[v];
                tree.cost[v] = next_cost;
                tree.hops[v] = next_hops;
                tree.pred[v] = Some(Pred {
                    node,
                    edge: adj.edge,
                });
                if improved_label {
                    heap.push(Entry {
                        cost: next_cost,
                        hops: next_hops,
                        id: net.nodes[v].id,
                        node: v,
                    });
                }
            }
        }
    }
    tree
}

impl SearchTree {
    /// On an exact (cost, hops) tie, is reaching `v` through `via`/`edge`
    /// preferable to its current predecessor?
    fn prefers(&self, net: &RoadNetwork, via: usize, edge: usize, v: usize) -> bool {
        let Some(current) = self.pred[v] else {
            return false;
        };
        if current.node == via {
            return edge < current.edge;
        }
        // Both candidate prefixes are settled and have equal length.
        let a = self.node_ids(net, via);
        let b = self.node_ids(net, current.node);
        a < b
    }

    fn node_ids(&self, net: &RoadNetwork, mut node: usize) -> Vec<NodeId> {
        let mut ids = vec![net.nodes[node].id];
        while let Some(p) = self.pred[node] {
            node = p.node;
            ids.push(net.nodes[node].id);
        }
        ids.reverse();
        ids
    }

    pub fn origin(&self, net: &RoadNetwork) -> NodeId {
        net.nodes[self.origin].id
    }

    /// Settled cost to `node`, if reached within the search limit.
    pub fn cost(&self, net: &RoadNetwork, node: NodeId) -> Option<f64> {
        let i = net.index_of(node).ok()?;
        self.cost_at(i)
    }

    pub(crate) fn cost_at(&self, i: usize) -> Option<f64> {
        self.settled[i].then(|| self.cost[i])
    }

    pub fn is_reached(&self, net: &RoadNetwork, node: NodeId) -> bool {
        self.cost(net, node).is_some()
    }

    /// Reached node ids in ascending id order.
    pub fn reached<'a>(&'a self, net: &'a RoadNetwork) -> impl Iterator<Item = NodeId> + 'a {
        let mut ids: Vec<NodeId> = (0..net.nodes.len())
            .filter(|&i| self.settled[i])
            .map(|i| net.nodes[i].id)
            .collect();
        ids.sort_unstable();
        ids.into_iter()
    }

    pub(crate) fn path_to(
        &self,
        net: &RoadNetwork,
        dest: usize,
        mode: Mode,
        speeds: &SpeedConfig,
    ) -> Option<PathResult> {
        if !self.settled[dest] {
            return None;
        }
        let mut nodes = vec![net.nodes[dest].id];
        let mut edges = Vec::new();
        let mut steps = Vec::new();
        let mut cur = dest;
        while let Some(p) = self.pred[cur] {
            let forward = net.edges[p.edge].u == net.nodes[p.node].id
                && net.edges[p.edge].v == net.nodes[cur].id;
            steps.push((p.edge, forward));
            edges.push(p.edge);
            nodes.push(net.nodes[p.node].id);
            cur = p.node;
        }
        nodes.reverse();
        edges.reverse();
        steps.reverse();
        let mut length = 0.0;
        let mut travel_time = 0.0;
        for (edge, forward) in steps {
            length += net.edges[edge].length;
            travel_time += net
                .traversal_minutes(edge, forward, mode, speeds)
                .unwrap_or(f64::INFINITY);
        }
        Some(PathResult {
            nodes,
            edges,
            length,
            travel_time,
        })
    }
}
