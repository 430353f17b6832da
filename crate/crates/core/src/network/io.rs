//! CSV ingest and export for networks.
//!
//! `nodes.csv`: `id,x,y,elevation`
//! `edges.csv`: `u,v,length,slope,surface,width,safety,modes` (modes pipe-separated)
//! `dwellings.csv`: `id,node,inhabited,has_elder_75`
//! `facilities.csv`: `id,kind,node,essential`

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    Dwelling, DwellingId, Edge, Facility, FacilityId, ModeSet, NetworkError, Node, NodeId,
    RoadNetwork,
};
use crate::csvfmt::{fmt_bool, fmt_f64, parse_bool};

/// Locations of the four network tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkPaths {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub dwellings: PathBuf,
    pub facilities: PathBuf,
}

impl NetworkPaths {
    /// The conventional file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        NetworkPaths {
            nodes: dir.join("nodes.csv"),
            edges: dir.join("edges.csv"),
            dwellings: dir.join("dwellings.csv"),
            facilities: dir.join("facilities.csv"),
        }
    }

    pub fn resolve(&self, base: &Path) -> Self {
        NetworkPaths {
            nodes: base.join(&self.nodes),
            edges: base.join(&self.edges),
            dwellings: base.join(&self.dwellings),
            facilities: base.join(&self.facilities),
        }
    }

    pub fn all(&self) -> [&Path; 4] {
        [&self.nodes, &self.edges, &self.dwellings, &self.facilities]
    }
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    id: u32,
    x: f64,
    y: f64,
    elevation: f64,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    u: u32,
    v: u32,
    length: f64,
    slope: f64,
    surface: f64,
    width: f64,
    safety: f64,
    modes: String,
}

#[derive(Debug, Deserialize)]
struct DwellingRow {
    id: u32,
    node: u32,
    inhabited: String,
    has_elder_75: String,
}

#[derive(Debug, Deserialize)]
struct FacilityRow {
    id: u32,
    kind: usize,
    node: u32,
    essential: String,
}

fn csv_error(file: &str, err: &csv::Error) -> NetworkError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    NetworkError::Csv {
        file: file.to_string(),
        line,
        message: err.to_string(),
    }
}

fn read_rows<T, R>(file: &str, reader: R) -> Result<Vec<(u64, T)>, NetworkError>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<T>() {
        match rec {
            Ok(row) => rows.push(row),
            Err(e) => return Err(csv_error(file, &e)),
        }
    }
    // Header is line 1.
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| (i as u64 + 2, r))
        .collect())
}

fn field_error(file: &str, line: u64, message: String) -> NetworkError {
    NetworkError::Csv {
        file: file.to_string(),
        line,
        message,
    }
}

pub fn read_nodes<R: Read>(reader: R) -> Result<Vec<Node>, NetworkError> {
    Ok(read_rows::<NodeRow, _>("nodes.csv", reader)?
        .into_iter()
        .map(|(_, r)| Node {
            id: NodeId(r.id),
            x: r.x,
            y: r.y,
            elevation: r.elevation,
        })
        .collect())
}

pub fn read_edges<R: Read>(reader: R) -> Result<Vec<Edge>, NetworkError> {
    read_rows::<EdgeRow, _>("edges.csv", reader)?
        .into_iter()
        .map(|(line, r)| {
            let modes = ModeSet::parse(&r.modes)
                .map_err(|e| field_error("edges.csv", line, e.to_string()))?;
            Ok(Edge {
                u: NodeId(r.u),
                v: NodeId(r.v),
                length: r.length,
                slope: r.slope,
                surface: r.surface,
                width: r.width,
                safety: r.safety,
                modes,
            })
        })
        .collect()
}

pub fn read_dwellings<R: Read>(reader: R) -> Result<Vec<Dwelling>, NetworkError> {
    read_rows::<DwellingRow, _>("dwellings.csv", reader)?
        .into_iter()
        .map(|(line, r)| {
            let flag = |s: &str| {
                parse_bool(s).ok_or_else(|| {
                    field_error("dwellings.csv", line, format!("invalid boolean '{s}'"))
                })
            };
            Ok(Dwelling {
                id: DwellingId(r.id),
                node: NodeId(r.node),
                inhabited: flag(&r.inhabited)?,
                has_elder_75: flag(&r.has_elder_75)?,
            })
        })
        .collect()
}

pub fn read_facilities<R: Read>(reader: R) -> Result<Vec<Facility>, NetworkError> {
    read_rows::<FacilityRow, _>("facilities.csv", reader)?
        .into_iter()
        .map(|(line, r)| {
            let essential = parse_bool(&r.essential).ok_or_else(|| {
                field_error(
                    "facilities.csv",
                    line,
                    format!("invalid boolean '{}'", r.essential),
                )
            })?;
            Ok(Facility {
                id: FacilityId(r.id),
                kind: r.kind,
                node: NodeId(r.node),
                essential,
            })
        })
        .collect()
}

fn open(path: &Path) -> Result<std::fs::File, NetworkError> {
    std::fs::File::open(path).map_err(|e| NetworkError::Io {
        file: path.display().to_string(),
        message: e.to_string(),
    })
}

fn with_file_name(err: NetworkError, path: &Path) -> NetworkError {
    match err {
        NetworkError::Csv { line, message, .. } => NetworkError::Csv {
            file: path.display().to_string(),
            line,
            message,
        },
        other => other,
    }
}

/// Loads and validates a network from its four CSV tables.
pub fn load_network(paths: &NetworkPaths) -> Result<RoadNetwork, NetworkError> {
    let nodes = read_nodes(open(&paths.nodes)?).map_err(|e| with_file_name(e, &paths.nodes))?;
    let edges = read_edges(open(&paths.edges)?).map_err(|e| with_file_name(e, &paths.edges))?;
    let dwellings =
        read_dwellings(open(&paths.dwellings)?).map_err(|e| with_file_name(e, &paths.dwellings))?;
    let facilities = read_facilities(open(&paths.facilities)?)
        .map_err(|e| with_file_name(e, &paths.facilities))?;
    RoadNetwork::new(nodes, edges, dwellings, facilities)
}

fn write_table<W: Write>(
    writer: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_nodes<W: Write>(writer: W, nodes: &[Node]) -> csv::Result<()> {
    write_table(
        writer,
        &["id", "x", "y", "elevation"],
        nodes.iter().map(|n| {
            vec![
                n.id.to_string(),
                fmt_f64(n.x),
                fmt_f64(n.y),
                fmt_f64(n.elevation),
            ]
        }),
    )
}

pub fn write_edges<W: Write>(writer: W, edges: &[Edge]) -> csv::Result<()> {
    write_table(
        writer,
        &[
            "u", "v", "length", "slope", "surface", "width", "safety", "modes",
        ],
        edges.iter().map(|e| {
            vec![
                e.u.to_string(),
                e.v.to_string(),
                fmt_f64(e.length),
                fmt_f64(e.slope),
                fmt_f64(e.surface),
                fmt_f64(e.width),
                fmt_f64(e.safety),
                e.modes.to_string(),
            ]
        }),
    )
}

pub fn write_dwellings<W: Write>(writer: W, dwellings: &[Dwelling]) -> csv::Result<()> {
    write_table(
        writer,
        &["id", "node", "inhabited", "has_elder_75"],
        dwellings.iter().map(|d| {
            vec![
                d.id.to_string(),
                d.node.to_string(),
                fmt_bool(d.inhabited).to_string(),
                fmt_bool(d.has_elder_75).to_string(),
            ]
        }),
    )
}

pub fn write_facilities<W: Write>(writer: W, facilities: &[Facility]) -> csv::Result<()> {
    write_table(
        writer,
        &["id", "kind", "node", "essential"],
        facilities.iter().map(|f| {
            vec![
                f.id.to_string(),
                f.kind.to_string(),
                f.node.to_string(),
                fmt_bool(f.essential).to_string(),
            ]
        }),
    )
}

/// Writes the four tables into `dir` under their conventional names.
pub fn save_network(net: &RoadNetwork, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let paths = NetworkPaths::in_dir(dir);
    let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
    write_nodes(std::fs::File::create(&paths.nodes)?, net.nodes()).map_err(to_io)?;
    write_edges(std::fs::File::create(&paths.edges)?, net.edges()).map_err(to_io)?;
    write_dwellings(std::fs::File::create(&paths.dwellings)?, net.dwellings()).map_err(to_io)?;
    write_facilities(std::fs::File::create(&paths.facilities)?, net.facilities()).map_err(to_io)?;
    Ok(())
}
