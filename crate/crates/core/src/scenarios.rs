//! Baseline/relocation scenarios and paired-seed experiments.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusters::{settlement_clusters, ClusterMap};
use crate::csvfmt::{fmt_f64, fmt_opt, parse_opt};
use crate::engine::{run, ClusterKpis, EngineError, RunOutput, SimConfig};
use crate::exec::Execution;
use crate::indicators::IndicatorConfig;
use crate::network::{FacilityId, NetworkError, NodeId, RoadNetwork};
use crate::population::{DemographicMarginals, Population, PopulationError, StageTable, STAGES};
use crate::seed;

/// Named set of facility relocations (facility id → node id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub moves: BTreeMap<u32, u32>,
}

impl Scenario {
    pub fn baseline(name: &str) -> Self {
        Scenario {
            name: name.to_string(),
            moves: BTreeMap::new(),
        }
    }

    pub fn validate(&self, net: &RoadNetwork) -> Result<(), NetworkError> {
        for (&f, &n) in &self.moves {
            if net.facility(FacilityId(f)).is_none() {
                return Err(NetworkError::UnknownFacility(FacilityId(f)));
            }
            if !net.contains_node(NodeId(n)) {
                return Err(NetworkError::UnknownNode(NodeId(n)));
            }
        }
        Ok(())
    }
}

/// Copy of `net` with the scenario's facilities moved; `net` is untouched.
pub fn apply_scenario(net: &RoadNetwork, scenario: &Scenario) -> Result<RoadNetwork, NetworkError> {
    scenario.validate(net)?;
    let mut out = net.clone();
    for (&f, &n) in &scenario.moves {
        out.relocate_facility(FacilityId(f), NodeId(n))?;
    }
    Ok(out)
}

/// Values swept for the income multipliers and the walk-willing share.
/// An empty list means "engine default only".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweeps {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub x3: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Sweeps {
    /// Cartesian product with `x1` outermost and `x3` innermost.
    pub fn points(&self, base: &SimConfig) -> Vec<SweepPoint> {
        let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
        let (x1s, x2s, x3s) = (
            or(&self.x1, base.x1),
            or(&self.x2, base.x2),
            or(&self.x3, base.walk_share()),
        );
        let mut out = Vec::new();
        for &x1 in &x1s {
            for &x2 in &x2s {
                for &x3 in &x3s {
                    out.push(SweepPoint {
                        index: out.len(),
                        x1,
                        x2,
                        x3,
                    });
                }
            }
        }
        out
    }
}

/// Two scenarios compared over paired replicates at every sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    /// Baseline first, relocation second.
    pub scenarios: [Scenario; 2],
    pub replicates: usize,
    pub base_seed: u64,
    pub sweeps: Sweeps,
    /// Synthetic population size per replicate.
    pub population: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("scenario '{scenario}': {source}")]
    Scenario {
        scenario: String,
        source: NetworkError,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("population for replicate {replicate}, sweep point {sweep}: {source}")]
    Population {
        replicate: usize,
        sweep: usize,
        source: PopulationError,
    },
    #[error("scenario '{scenario}', replicate {replicate}, sweep point {sweep}: {source}")]
    Run {
        scenario: String,
        replicate: usize,
        sweep: usize,
        source: EngineError,
    },
}

impl Experiment {
    pub fn validate(&self, net: &RoadNetwork, sim: &SimConfig) -> Result<(), ExperimentError> {
        if self.replicates < 2 {
            return Err(ExperimentError::Invalid("replicates must be >= 2".into()));
        }
        if self.population == 0 {
            return Err(ExperimentError::Invalid("population must be > 0".into()));
        }
        for s in &self.scenarios {
            s.validate(net).map_err(|e| ExperimentError::Scenario {
                scenario: s.name.clone(),
                source: e,
            })?;
        }
        if self.scenarios[0].name == self.scenarios[1].name {
            return Err(ExperimentError::Invalid(
                "scenario names must differ".into(),
            ));
        }
        for p in self.sweeps.points(sim) {
            let cfg = SimConfig {
                x1: p.x1,
                x2: p.x2,
                x3: Some(p.x3),
                ..sim.clone()
            };
            cfg.validate()
                .map_err(|e| ExperimentError::Invalid(format!("sweep point {}: {e}", p.index)))?;
        }
        Ok(())
    }
}

/// Per-stage micro-conditions and KPIs of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StageRecord {
    pub effort: Option<f64>,
    pub unmet: Option<f64>,
    pub detour: Option<f64>,
    pub walkability: Option<f64>,
    pub proximity: Option<f64>,
}

/// One row of `replicates.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    /// 0 for the baseline, 1 for the relocation scenario.
    pub scenario_id: usize,
    pub scenario: String,
    pub replicate: usize,
    pub sweep: usize,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub seed: u64,
    pub effort: f64,
    pub overwhelmed: f64,
    pub walkability: f64,
    pub unmet_hours: f64,
    pub detour_ratio: Option<f64>,
    pub stages: [StageRecord; STAGES],
    pub clusters: Vec<ClusterKpis>,
}

impl ReplicateRecord {
    fn from_run(
        scenario_id: usize,
        scenario: &str,
        replicate: usize,
        point: &SweepPoint,
        seed: u64,
        out: &RunOutput,
    ) -> Self {
        let s = &out.summary;
        ReplicateRecord {
            scenario_id,
            scenario: scenario.to_string(),
            replicate,
            sweep: point.index,
            x1: point.x1,
            x2: point.x2,
            x3: point.x3,
            seed,
            effort: s.effort,
            overwhelmed: s.overwhelmed,
            walkability: s.walkability,
            unmet_hours: s.unmet_hours,
            detour_ratio: out.micro.detour_ratio,
            stages: std::array::from_fn(|k| StageRecord {
                effort: s.stage_effort[k],
                unmet: s.stage_unmet[k],
                detour: out.micro.stages[k].detour_ratio,
                walkability: out.micro.stages[k].walkability,
                proximity: out.micro.stages[k].household_proximity,
            }),
            clusters: s.clusters.clone(),
        }
    }

    /// Sort key: sweep point, replicate, scenario.
    pub fn key(&self) -> (usize, usize, usize) {
        (self.sweep, self.replicate, self.scenario_id)
    }
}

/// Everything shared read-only by the experiment cells.
#[derive(Debug, Clone)]
pub struct ExperimentInputs<'a> {
    pub net: &'a RoadNetwork,
    pub marginals: &'a DemographicMarginals,
    pub stages: &'a StageTable,
    pub sim: &'a SimConfig,
    pub indicators: &'a IndicatorConfig,
}

/// Optional per-day output of a single cell.
pub type DayRecordSink<'a> = &'a (dyn Fn(&ReplicateRecord, &RunOutput) + Sync);

/// Runs every (sweep point, replicate) cell. Both scenarios of a cell share
/// one population and one engine seed.
pub fn run_experiment(
    inputs: &ExperimentInputs<'_>,
    experiment: &Experiment,
    execution: Execution,
) -> Result<Vec<ReplicateRecord>, ExperimentError> {
    run_experiment_with(inputs, experiment, execution, None)
}

/// [`run_experiment`] with a callback receiving each run's full output.
pub fn run_experiment_with(
    inputs: &ExperimentInputs<'_>,
    experiment: &Experiment,
    execution: Execution,
    sink: Option<DayRecordSink<'_>>,
) -> Result<Vec<ReplicateRecord>, ExperimentError> {
    experiment.validate(inputs.net, inputs.sim)?;
    inputs
        .marginals
        .validate()
        .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let clusters = settlement_clusters(inputs.net, inputs.sim.cluster_linkage_m)?;
    let points = experiment.sweeps.points(inputs.sim);
    let cells: Vec<(SweepPoint, usize)> = points
        .iter()
        .flat_map(|p| (0..experiment.replicates).map(move |r| (*p, r)))
        .collect();

    let results = execution.map(&cells, |(point, r)| {
        run_cell(inputs, experiment, &clusters, point, *r, sink)
    });
    let mut records = Vec::with_capacity(cells.len() * 2);
    for cell in results {
        records.extend(cell?);
    }
    records.sort_by_key(ReplicateRecord::key);
    Ok(records)
}

fn run_cell(
    inputs: &ExperimentInputs<'_>,
    experiment: &Experiment,
    clusters: &ClusterMap,
    point: &SweepPoint,
    replicate: usize,
    sink: Option<DayRecordSink<'_>>,
) -> Result<Vec<ReplicateRecord>, ExperimentError> {
    let cell_seed = seed::cell_seed(experiment.base_seed, replicate as u64, point.index as u64);
    let sim = SimConfig {
        x1: point.x1,
        x2: point.x2,
        x3: Some(point.x3),
        seed: seed::derive(cell_seed, &[seed::STREAM_ENGINE]),
        ..inputs.sim.clone()
    };
    let population = Population::build(
        inputs.net,
        inputs.marginals,
        inputs.stages,
        experiment.population,
        &sim.population_params(),
        seed::derive(cell_seed, &[seed::STREAM_POPULATION]),
    )
    .map_err(|e| ExperimentError::Population {
        replicate,
        sweep: point.index,
        source: e,
    })?;
    let mut base = inputs.net.clone();
    base.set_elder_flags(&population.elder_dwellings);

    let mut out = Vec::with_capacity(2);
    for (id, scenario) in experiment.scenarios.iter().enumerate() {
        let net = apply_scenario(&base, scenario).map_err(|e| ExperimentError::Scenario {
            scenario: scenario.name.clone(),
            source: e,
        })?;
        let result = run(
            &net,
            &population,
            &sim,
            inputs.stages,
            inputs.indicators,
            clusters,
        )
        .map_err(|e| ExperimentError::Run {
            scenario: scenario.name.clone(),
            replicate,
            sweep: point.index,
            source: e,
        })?;
        let record =
            ReplicateRecord::from_run(id, &scenario.name, replicate, point, cell_seed, &result);
        if let Some(sink) = sink {
            sink(&record, &result);
        }
        out.push(record);
    }
    Ok(out)
}

const FIXED_COLUMNS: [&str; 14] = [
    "scenario_id",
    "scenario",
    "replicate",
    "sweep",
    "x1",
    "x2",
    "x3",
    "seed",
    "effort",
    "overwhelmed",
    "walkability",
    "unmet_hours",
    "detour_ratio",
    "n_clusters",
];
const STAGE_COLUMNS: [&str; 5] = ["effort", "unmet", "detour", "walkability", "proximity"];
const CLUSTER_COLUMNS: [&str; 4] = ["effort", "overwhelmed", "walkability", "unmet"];

/// Header of `replicates.csv` for `n_clusters` settlement clusters.
pub fn record_header(n_clusters: usize) -> Vec<String> {
    let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for s in 0..STAGES {
        for c in STAGE_COLUMNS {
            h.push(format!("s{s}_{c}"));
        }
    }
    for k in 0..n_clusters {
        for c in CLUSTER_COLUMNS {
            h.push(format!("c{k}_{c}"));
        }
    }
    h
}

fn record_row(r: &ReplicateRecord) -> Vec<String> {
    let mut row = vec![
        r.scenario_id.to_string(),
        r.scenario.clone(),
        r.replicate.to_string(),
        r.sweep.to_string(),
        fmt_f64(r.x1),
        fmt_f64(r.x2),
        fmt_f64(r.x3),
        r.seed.to_string(),
        fmt_f64(r.effort),
        fmt_f64(r.overwhelmed),
        fmt_f64(r.walkability),
        fmt_f64(r.unmet_hours),
        fmt_opt(r.detour_ratio),
        r.clusters.len().to_string(),
    ];
    for s in &r.stages {
        row.extend([s.effort, s.unmet, s.detour, s.walkability, s.proximity].map(fmt_opt));
    }
    for c in &r.clusters {
        row.extend([c.effort, c.overwhelmed, c.walkability, c.unmet_hours].map(fmt_opt));
    }
    row
}

/// Writes records with a stable column order. All records must report the
/// same number of clusters.
pub fn write_records<W: Write>(writer: W, records: &[ReplicateRecord]) -> Result<(), RecordError> {
    let n_clusters = records.first().map_or(0, |r| r.clusters.len());
    if let Some(r) = records.iter().find(|r| r.clusters.len() != n_clusters) {
        return Err(RecordError::Schema {
            line: 0,
            message: format!(
                "record ({}, {}, {}) has {} clusters, expected {n_clusters}",
                r.scenario,
                r.replicate,
                r.sweep,
                r.clusters.len()
            ),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(record_header(n_clusters))?;
    for r in records {
        w.write_record(record_row(r))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Schema { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads `replicates.csv`, checking the header and every cell.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<ReplicateRecord>, RecordError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let fixed_len = FIXED_COLUMNS.len() + STAGES * STAGE_COLUMNS.len();
    let schema = |line: u64, message: String| RecordError::Schema { line, message };
    if header.len() < fixed_len || !(header.len() - fixed_len).is_multiple_of(CLUSTER_COLUMNS.len())
    {
        return Err(schema(
            1,
            format!("unexpected column count {}", header.len()),
        ));
    }
    let n_clusters = (header.len() - fixed_len) / CLUSTER_COLUMNS.len();
    let expected = record_header(n_clusters);
    if let Some((i, (got, want))) = header
        .iter()
        .zip(&expected)
        .enumerate()
        .find(|(_, (g, w))| g != w)
    {
        return Err(schema(
            1,
            format!("column {} is '{got}', expected '{want}'", i + 1),
        ));
    }

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let cell = |c: usize| row.get(c).unwrap_or("");
        let bad = |c: usize| {
            schema(
                line,
                format!("invalid value '{}' in column '{}'", cell(c), expected[c]),
            )
        };
        let num = |c: usize| -> Result<f64, RecordError> {
            cell(c)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(c))
        };
        let int = |c: usize| -> Result<u64, RecordError> { cell(c).parse().map_err(|_| bad(c)) };
        let opt = |c: usize| -> Result<Option<f64>, RecordError> {
            parse_opt(cell(c)).map_err(|_| bad(c))
        };
        if row.len() != expected.len() {
            return Err(schema(
                line,
                format!("expected {} fields, found {}", expected.len(), row.len()),
            ));
        }
        let scenario_id = int(0)? as usize;
        if scenario_id > 1 {
            return Err(bad(0));
        }
        if int(13)? as usize != n_clusters {
            return Err(bad(13));
        }
        let mut stages = [StageRecord::default(); STAGES];
        let mut c = FIXED_COLUMNS.len();
        for s in &mut stages {
            *s = StageRecord {
                effort: opt(c)?,
                unmet: opt(c + 1)?,
                detour: opt(c + 2)?,
                walkability: opt(c + 3)?,
                proximity: opt(c + 4)?,
            };
            c += STAGE_COLUMNS.len();
        }
        let mut clusters = Vec::with_capacity(n_clusters);
        for _ in 0..n_clusters {
            clusters.push(ClusterKpis {
                effort: opt(c)?,
                overwhelmed: opt(c + 1)?,
                walkability: opt(c + 2)?,
                unmet_hours: opt(c + 3)?,
            });
            c += CLUSTER_COLUMNS.len();
        }
        out.push(ReplicateRecord {
            scenario_id,
            scenario: cell(1).to_string(),
            replicate: int(2)? as usize,
            sweep: int(3)? as usize,
            x1: num(4)?,
            x2: num(5)?,
            x3: num(6)?,
            seed: int(7)?,
            effort: num(8)?,
            overwhelmed: num(9)?,
            walkability: num(10)?,
            unmet_hours: num(11)?,
            detour_ratio: opt(12)?,
            stages,
            clusters,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Dwelling, DwellingId, Edge, Facility, ModeSet, Node};

    fn line() -> RoadNetwork {
        let nodes = (0..3)
            .map(|i| Node {
                id: NodeId(i),
                x: 100.0 * i as f64,
                y: 0.0,
                elevation: 0.0,
            })
            .collect();
        let edges = (1..3)
            .map(|i| Edge {
                u: NodeId(i - 1),
                v: NodeId(i),
                length: 100.0,
                slope: 0.0,
                surface: 1.0,
                width: 2.0,
                safety: 1.0,
                modes: ModeSet::all(),
            })
            .collect();
        let dwellings = vec![Dwelling {
            id: DwellingId(0),
            node: NodeId(2),
            inhabited: true,
            has_elder_75: false,
        }];
        let facilities = vec![Facility {
            id: FacilityId(0),
            kind: 0,
            node: NodeId(0),
            essential: true,
        }];
        RoadNetwork::new(nodes, edges, dwellings, facilities).unwrap()
    }

    #[test]
    fn empty_scenario_is_identity() {
        let net = line();
        assert_eq!(
            apply_scenario(&net, &Scenario::baseline("S1")).unwrap(),
            net
        );
    }

    #[test]
    fn relocation_moves_only_the_copy() {
        let net = line();
        let s = Scenario {
            name: "S2".into(),
            moves: BTreeMap::from([(0, 2)]),
        };
        let moved = apply_scenario(&net, &s).unwrap();
        assert_eq!(moved.facility(FacilityId(0)).unwrap().node, NodeId(2));
        assert_eq!(net.facility(FacilityId(0)).unwrap().node, NodeId(0));
        assert_eq!(moved.facilities().len(), net.facilities().len());
    }

    #[test]
    fn unknown_targets_are_rejected() {
        let net = line();
        let bad_f = Scenario {
            name: "x".into(),
            moves: BTreeMap::from([(9, 0)]),
        };
        assert_eq!(
            apply_scenario(&net, &bad_f),
            Err(NetworkError::UnknownFacility(FacilityId(9)))
        );
        let bad_n = Scenario {
            name: "x".into(),
            moves: BTreeMap::from([(0, 9)]),
        };
        assert_eq!(
            apply_scenario(&net, &bad_n),
            Err(NetworkError::UnknownNode(NodeId(9)))
        );
    }

    #[test]
    fn sweep_product_order() {
        let sweeps = Sweeps {
            x1: vec![1.0, 2.0],
            x2: vec![],
            x3: vec![0.1, 0.5],
        };
        let pts = sweeps.points(&SimConfig::default());
        let xs: Vec<(f64, f64, f64)> = pts.iter().map(|p| (p.x1, p.x2, p.x3)).collect();
        assert_eq!(
            xs,
            vec![
                (1.0, 1.0, 0.1),
                (1.0, 1.0, 0.5),
                (2.0, 1.0, 0.1),
                (2.0, 1.0, 0.5)
            ]
        );
        assert_eq!(pts[3].index, 3);
    }

    #[test]
    fn header_rejects_foreign_columns() {
        let text = "a,b,c\n1,2,3\n";
        match read_records(text.as_bytes()) {
            Err(RecordError::Schema { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
