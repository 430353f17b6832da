//! Generates the synthetic mountain-town network shipped under
//! `fixtures/mountain-town`.
//!
//! Three hamlets of 5×5 street grids (80 m blocks) share a road junction.
//! Hamlet C sits uphill. The baseline clinic (facility 0, the only essential
//! service) lies down in the valley, 1.4–2.4 km from every home along the
//! road. The relocation site R is close to hamlet A as the crow flies but only
//! reachable over a long western footpath loop, more than 3 km from any home.
//!
//! Usage: `cargo run -p caresim --example mountain_town [OUT_DIR]`

use std::path::PathBuf;

use caresim::network::{
    save_network, Dwelling, DwellingId, Edge, Facility, FacilityId, Mode, ModeSet, Node, NodeId,
    RoadNetwork,
};

const BLOCK: f64 = 80.0;
const GRID: u32 = 5;
const DWELLINGS_PER_NODE: u32 = 3;

struct Builder {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl Builder {
    fn node(&mut self, x: f64, y: f64, elevation: f64) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            id,
            x,
            y,
            elevation,
        });
        id
    }

    fn edge(&mut self, u: NodeId, v: NodeId, quality: (f64, f64, f64), modes: ModeSet) {
        let (a, b) = (&self.nodes[u.0 as usize], &self.nodes[v.0 as usize]);
        let length = (a.x - b.x).hypot(a.y - b.y);
        let slope = (b.elevation - a.elevation) / length;
        let (surface, width, safety) = quality;
        self.edges.push(Edge {
            u,
            v,
            length,
            slope,
            surface,
            width,
            safety,
            modes,
        });
    }

    /// A 5×5 grid with its south-west corner at `(x0, y0)`; elevation rises
    /// by `rise` meters per row. Returns node ids row-major from the south.
    fn hamlet(&mut self, x0: f64, y0: f64, elevation: f64, rise: f64) -> Vec<NodeId> {
        let mut ids = Vec::new();
        for row in 0..GRID {
            for col in 0..GRID {
                ids.push(self.node(
                    x0 + BLOCK * col as f64,
                    y0 + BLOCK * row as f64,
                    elevation + rise * row as f64,
                ));
            }
        }
        let street = (0.8, 2.0, 0.9);
        let roads = ModeSet::all();
        for row in 0..GRID {
            for col in 0..GRID {
                let i = (row * GRID + col) as usize;
                if col + 1 < GRID {
                    self.edge(ids[i], ids[i + 1], street, roads);
                }
                if row + 1 < GRID {
                    self.edge(ids[i], ids[i + GRID as usize], street, roads);
                }
            }
        }
        ids
    }
}

fn build() -> RoadNetwork {
    let mut b = Builder {
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let a = b.hamlet(0.0, 0.0, 800.0, 2.0);
    let bh = b.hamlet(900.0, 0.0, 805.0, 2.0);
    let c = b.hamlet(450.0, 900.0, 900.0, 5.0);

    let road = (0.7, 3.0, 0.6);
    let all = ModeSet::all();
    let junction = b.node(610.0, 160.0, 802.0);
    b.edge(a[2 * GRID as usize + 4], junction, road, all); // A east edge, middle row
    b.edge(junction, bh[2 * GRID as usize], road, all); // B west edge, middle row
    b.edge(junction, c[2], road, all); // C south edge, middle column

    let valley = b.node(610.0, -1000.0, 700.0);
    b.edge(junction, valley, road, all);

    // Western footpath loop to the relocation site R.
    let path = (0.5, 1.2, 0.8);
    let foot = ModeSet::empty().with(Mode::Walk);
    let w1 = b.node(-500.0, 160.0, 810.0);
    let w2 = b.node(-500.0, 1400.0, 880.0);
    let w3 = b.node(160.0, 1400.0, 870.0);
    let r = b.node(160.0, 700.0, 840.0);
    b.edge(a[2 * GRID as usize], w1, path, foot); // A west edge, middle row
    b.edge(w1, w2, path, foot);
    b.edge(w2, w3, path, foot);
    b.edge(w3, r, path, foot);

    let mut dwellings = Vec::new();
    for &n in a.iter().chain(&bh).chain(&c) {
        for _ in 0..DWELLINGS_PER_NODE {
            dwellings.push(Dwelling {
                id: DwellingId(dwellings.len() as u32),
                node: n,
                inhabited: true,
                has_elder_75: false,
            });
        }
    }

    let centre = (2 * GRID + 2) as usize;
    let facilities = vec![
        (0, valley, true),
        (1, a[centre], false),
        (2, a[centre + 1], false),
        (3, bh[centre], false),
        (1, bh[centre - 1], false),
        (4, c[centre], false),
        (2, c[centre + 1], false),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, (kind, node, essential))| Facility {
        id: FacilityId(i as u32),
        kind,
        node,
        essential,
    })
    .collect();

    let net = RoadNetwork::new(b.nodes, b.edges, dwellings, facilities)
        .expect("fixture network is valid");
    assert_eq!(r, NodeId(net.nodes().len() as u32 - 1));
    net
}

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures/mountain-town"));
    let net = build();
    save_network(&net, &out)?;
    println!(
        "wrote {} nodes, {} edges, {} dwellings, {} facilities to {}",
        net.nodes().len(),
        net.edges().len(),
        net.dwellings().len(),
        net.facilities().len(),
        out.display()
    );
    Ok(())
}
