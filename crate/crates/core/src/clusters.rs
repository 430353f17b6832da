//! Settlement clusters: dwellings joined by single linkage on walking
//! network distance.

use std::collections::BTreeMap;

use crate::network::{DwellingId, Mode, NetworkError, NodeId, RoadNetwork};

/// Dwelling to cluster id. Ids are dense and numbered in order of each
/// cluster's smallest dwelling id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterMap {
    of: BTreeMap<DwellingId, usize>,
    count: usize,
}

impl ClusterMap {
    pub fn cluster_of(&self, d: DwellingId) -> Option<usize> {
        self.of.get(&d).copied()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn iter(&self) -> impl Iterator<Item = (DwellingId, usize)> + '_ {
        self.of.iter().map(|(d, c)| (*d, *c))
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups all dwellings whose walking distance chains stay within `linkage_m`.
pub fn settlement_clusters(net: &RoadNetwork, linkage_m: f64) -> Result<ClusterMap, NetworkError> {
    let mut dwellings: Vec<(DwellingId, NodeId)> =
        net.dwellings().iter().map(|d| (d.id, d.node)).collect();
    dwellings.sort();
    let mut parent: Vec<usize> = (0..dwellings.len()).collect();

    let mut at_node: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, (_, node)) in dwellings.iter().enumerate() {
        at_node.entry(*node).or_default().push(i);
    }
    for (&node, members) in &at_node {
        let tree = net.distances_from(node, Mode::Walk, linkage_m)?;
        for other in tree.reached(net) {
            if let Some(others) = at_node.get(&other) {
                for &j in others {
                    let (a, b) = (find(&mut parent, members[0]), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        for &j in &members[1..] {
            let (a, b) = (find(&mut parent, members[0]), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut of = BTreeMap::new();
    for (i, d) in dwellings.iter().enumerate() {
        let root = find(&mut parent, i);
        let next = label.len();
        let c = *label.entry(root).or_insert(next);
        of.insert(d.0, c);
    }
    Ok(ClusterMap {
        of,
        count: label.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Dwelling, Edge, ModeSet, Node};

    #[test]
    fn chains_link_through_intermediate_dwellings() {
        // Nodes 200 m apart along a line; a 600 m gap between nodes 2 and 3.
        let xs = [0.0, 200.0, 400.0, 1000.0, 1100.0];
        let nodes: Vec<Node> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| Node {
                id: NodeId(i as u32),
                x,
                y: 0.0,
                elevation: 0.0,
            })
            .collect();
        let edges = (1..xs.len())
            .map(|i| Edge {
                u: NodeId(i as u32 - 1),
                v: NodeId(i as u32),
                length: xs[i] - xs[i - 1],
                slope: 0.0,
                surface: 1.0,
                width: 2.0,
                safety: 1.0,
                modes: ModeSet::all(),
            })
            .collect();
        let dwellings = [4u32, 0, 1, 2, 3, 4]
            .iter()
            .enumerate()
            .map(|(i, &n)| Dwelling {
                id: DwellingId(i as u32),
                node: NodeId(n),
                inhabited: true,
                has_elder_75: false,
            })
            .collect();
        let net = RoadNetwork::new(nodes, edges, dwellings, vec![]).unwrap();
        let map = settlement_clusters(&net, 250.0).unwrap();
        assert_eq!(map.count(), 2);
        // Dwelling 0 sits at node 4, so the eastern cluster gets id 0.
        assert_eq!(map.cluster_of(DwellingId(0)), Some(0));
        assert_eq!(map.cluster_of(DwellingId(5)), Some(0));
        assert_eq!(map.cluster_of(DwellingId(4)), Some(0));
        assert_eq!(map.cluster_of(DwellingId(1)), Some(1));
        assert_eq!(map.cluster_of(DwellingId(3)), Some(1));
    }
}
