//! Independent oracles and fixture builders shared by the integration tests.
//!
//! Everything here is deliberately written without calling into the code it
//! checks: brute-force enumeration, textbook formulas, plain loops.

#![allow(dead_code)]

use std::path::PathBuf;

use caresim::config::LoadedConfig;
use caresim::network::{
    Dwelling, DwellingId, Edge, Facility, FacilityId, Mode, ModeSet, Node, NodeId, RoadNetwork,
    SpeedConfig,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mountain-town/experiment.json")
}

pub fn mountain_town() -> LoadedConfig {
    LoadedConfig::load(&fixture_config_path()).expect("fixture config loads")
}

pub fn node(id: u32, x: f64, y: f64) -> Node {
    Node {
        id: NodeId(id),
        x,
        y,
        elevation: 0.0,
    }
}

/// Flat, perfectly suitable walking street.
pub fn street(u: u32, v: u32, length: f64) -> Edge {
    Edge {
        u: NodeId(u),
        v: NodeId(v),
        length,
        slope: 0.0,
        surface: 1.0,
        width: 2.0,
        safety: 1.0,
        modes: ModeSet::all(),
    }
}

pub fn dwelling(id: u32, node: u32) -> Dwelling {
    Dwelling {
        id: DwellingId(id),
        node: NodeId(node),
        inhabited: true,
        has_elder_75: false,
    }
}

pub fn facility(id: u32, kind: usize, node: u32, essential: bool) -> Facility {
    Facility {
        id: FacilityId(id),
        kind,
        node: NodeId(node),
        essential,
    }
}

/// A straight chain of `n` nodes spaced `spacing` meters along the x axis.
pub fn chain(n: u32, spacing: f64) -> RoadNetwork {
    let nodes = (0..n).map(|i| node(i, i as f64 * spacing, 0.0)).collect();
    let edges = (1..n).map(|i| street(i - 1, i, spacing)).collect();
    RoadNetwork::new(nodes, edges, vec![], vec![]).unwrap()
}

/// Random connected graph with at most `max_nodes` nodes.
///
/// With `integral` set, lengths are small integers and slopes are zero so
/// that many routes tie exactly and tie-breaking gets exercised.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: u32, integral: bool) -> RoadNetwork {
    let n = rng.random_range(2..=max_nodes);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: NodeId(i * 3 + 1),
            x: rng.random_range(0.0..500.0),
            y: rng.random_range(0.0..500.0),
            elevation: rng.random_range(0.0..40.0),
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 1..n as usize {
        pairs.push((rng.random_range(0..i), i));
    }
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            if !pairs.contains(&(i, j)) && rng.random_bool(0.3) {
                pairs.push((i, j));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
            let (na, nb) = (&nodes[a], &nodes[b]);
            let chord = (na.x - nb.x).hypot(na.y - nb.y);
            let (length, slope) = if integral {
                (rng.random_range(1..=4) as f64 * 100.0, 0.0)
            } else {
                let length = chord.max(1.0) * rng.random_range(1.0..1.6);
                (
                    length,
                    ((nb.elevation - na.elevation) / length).clamp(-1.0, 1.0),
                )
            };
            let mut modes = ModeSet::empty().with(Mode::Walk);
            if rng.random_bool(0.6) {
                modes = modes.with(Mode::Car);
            }
            Edge {
                u: na.id,
                v: nb.id,
                length,
                slope,
                surface: rng.random_range(0.0..=1.0),
                width: rng.random_range(0.0..4.0),
                safety: rng.random_range(0.0..=1.0),
                modes,
            }
        })
        .collect();
    RoadNetwork::new(nodes, edges, vec![], vec![]).unwrap()
}

/// Walking speed straight from the closed form, clamped to [0.2, 1.2] x base.
pub fn oracle_speed(mode: Mode, slope: f64, speeds: &SpeedConfig) -> f64 {
    match mode {
        Mode::Walk => {
            let base = speeds.walk;
            let v = base * (-3.5 * (slope + 0.05).abs()).exp() / (-3.5 * 0.05f64).exp();
            v.clamp(0.2 * base, 1.2 * base)
        }
        Mode::Car => speeds.car,
        Mode::Public => speeds.public,
        Mode::Green => speeds.green,
    }
}

/// Best simple path by exhaustive enumeration, ranked by
/// (travel time, hop count, node sequence).
pub struct BrutePath {
    pub nodes: Vec<NodeId>,
    pub minutes: f64,
    pub length: f64,
}

pub fn brute_force_path(
    net: &RoadNetwork,
    origin: NodeId,
    dest: NodeId,
    mode: Mode,
    speeds: &SpeedConfig,
    by_length: bool,
) -> Option<BrutePath> {
    let mut best: Option<(f64, BrutePath)> = None;
    let mut stack = vec![origin];
    dfs(
        net, dest, mode, speeds, by_length, &mut stack, 0.0, 0.0, 0.0, &mut best,
    );
    best.map(|(_, p)| p)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    net: &RoadNetwork,
    dest: NodeId,
    mode: Mode,
    speeds: &SpeedConfig,
    by_length: bool,
    stack: &mut Vec<NodeId>,
    cost: f64,
    minutes: f64,
    length: f64,
    best: &mut Option<(f64, BrutePath)>,
) {
    let here = *stack.last().unwrap();
    if here == dest {
        let better = match best {
            None => true,
            Some((c, p)) => {
                (cost, stack.len(), stack.as_slice()) < (*c, p.nodes.len(), p.nodes.as_slice())
            }
        };
        if better {
            *best = Some((
                cost,
                BrutePath {
                    nodes: stack.clone(),
                    minutes,
                    length,
                },
            ));
        }
        return;
    }
    for e in net.edges() {
        if !e.modes.contains(mode) {
            continue;
        }
        let (next, slope) = if e.u == here {
            (e.v, e.slope)
        } else if e.v == here {
            (e.u, -e.slope)
        } else {
            continue;
        };
        if stack.contains(&next) {
            continue;
        }
        let step = e.length / 1000.0 / oracle_speed(mode, slope, speeds) * 60.0;
        let (m, l) = (minutes + step, length + e.length);
        stack.push(next);
        dfs(
            net,
            dest,
            mode,
            speeds,
            by_length,
            stack,
            if by_length { l } else { m },
            m,
            l,
            best,
        );
        stack.pop();
    }
}

/// Two-sided Student-t p-value by composite Simpson integration of the density
/// over `[0, |t|]` with `intervals` panels.
pub fn t_p_value_by_quadrature(t: f64, df: f64, intervals: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let log_c =
        ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |x: f64| (log_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let n = intervals + intervals % 2;
    let h = t.abs() / n as f64;
    let mut acc = density(0.0) + density(t.abs());
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(i as f64 * h);
    }
    let central = acc * h / 3.0;
    1.0 - 2.0 * central
}

/// ICC(1) from ANOVA components, with the within sum of squares computed from
/// pairwise differences and the between part as total minus within.
pub fn brute_force_icc(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let g = groups.len() as f64;
    let grand = all.iter().sum::<f64>() / n;
    let sst: f64 = all.iter().map(|x| (x - grand) * (x - grand)).sum();
    let mut ssw = 0.0;
    for grp in groups {
        let mut pair_sum = 0.0;
        for i in 0..grp.len() {
            for j in i + 1..grp.len() {
                pair_sum += (grp[i] - grp[j]).powi(2);
            }
        }
        ssw += pair_sum / grp.len() as f64;
    }
    let ssb = sst - ssw;
    let msb = ssb / (g - 1.0);
    let msw = ssw / (n - g);
    let sum_sq: f64 = groups
        .iter()
        .map(|grp| (grp.len() * grp.len()) as f64)
        .sum();
    let m0 = (n - sum_sq / n) / (g - 1.0);
    (msb - msw) / (msb + (m0 - 1.0) * msw)
}

/// Gauss-Jordan inverse with partial pivoting on plain nested vectors.
pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..k {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..k {
            if i != col {
                let f = a[i][col];
                for j in 0..k {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// OLS coefficients and CR1 standard errors from the textbook sandwich,
/// accumulated observation by observation.
pub fn sandwich_cr1(x: &[Vec<f64>], y: &[f64], cluster: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let k = x[0].len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            xty[a] += x[i][a] * y[i];
            for b in 0..k {
                xtx[a][b] += x[i][a] * x[i][b];
            }
        }
    }
    let bread = invert(xtx);
    let beta: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| bread[a][b] * xty[b]).sum())
        .collect();
    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..k).map(|a| x[i][a] * beta[a]).sum::<f64>())
        .collect();
    let mut ids: Vec<usize> = cluster.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let g = ids.len();
    let mut meat = vec![vec![0.0; k]; k];
    for id in &ids {
        let mut s = vec![0.0; k];
        for i in (0..n).filter(|&i| cluster[i] == *id) {
            for a in 0..k {
                s[a] += x[i][a] * resid[i];
            }
        }
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += s[a] * s[b];
            }
        }
    }
    let scale = (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64));
    let mut se = vec![0.0; k];
    for j in 0..k {
        let mut v = 0.0;
        for a in 0..k {
            for b in 0..k {
                v += bread[j][a] * meat[a][b] * bread[b][j];
            }
        }
        se[j] = (v * scale).max(0.0).sqrt();
    }
    (beta, se)
}

/// Paired vectors whose means and difference SD are exactly the given values.
pub fn engineered_pair(n: usize, mean_a: f64, mean_b: f64, sd_diff: f64) -> (Vec<f64>, Vec<f64>) {
    // Zero-mean pattern with unit sample SD.
    let raw: Vec<f64> = (0..n).map(|i| i as f64 - (n - 1) as f64 / 2.0).collect();
    let ss: f64 = raw.iter().map(|r| r * r).sum();
    let unit = (ss / (n - 1) as f64).sqrt();
    let a: Vec<f64> = (0..n)
        .map(|i| mean_a + 0.01 * ((i * 7 % n) as f64 - (n - 1) as f64 / 2.0))
        .collect();
    let b = a
        .iter()
        .zip(&raw)
        .map(|(x, r)| x + (mean_b - mean_a) + sd_diff * r / unit)
        .collect();
    (a, b)
}
