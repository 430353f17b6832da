//! Builds the analysis summary of an experiment's replicate records.
//!
//! For every sweep point the baseline (scenario 0) is paired with the
//! relocation (scenario 1) by replicate index, and at the sim×cluster level by
//! (replicate, settlement cluster).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::population::STAGES;
use crate::scenarios::ReplicateRecord;
use crate::stats::{
    aggregate_groups, cluster_robust_ols, design_effect, icc_oneway, paired_summary, paired_t_test,
    IccResult, PairedSummary, RegressionResult, StatsError, TTest,
};

pub const KPIS: [&str; 4] = ["effort", "overwhelmed", "walkability", "unmet_hours"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no records")]
    Empty,
    #[error(
        "duplicate record for scenario {scenario}, replicate {replicate}, sweep point {sweep}"
    )]
    Duplicate {
        scenario: usize,
        replicate: usize,
        sweep: usize,
    },
    #[error("replicate {replicate} at sweep point {sweep} lacks its paired scenario")]
    Unpaired { replicate: usize, sweep: usize },
    #[error("records disagree on the number of settlement clusters")]
    ClusterMismatch,
}

/// Paired comparison of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedResult {
    pub summary: Option<PairedSummary>,
    pub t_test: Option<TTest>,
    /// Why a statistic is missing.
    pub note: Option<String>,
}

impl PairedResult {
    fn compute(a: &[f64], b: &[f64]) -> Self {
        let summary = match paired_summary(a, b) {
            Ok(s) => s,
            Err(e) => {
                return PairedResult {
                    summary: None,
                    t_test: None,
                    note: Some(e.to_string()),
                }
            }
        };
        let (t_test, note) = match paired_t_test(a, b) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        };
        PairedResult {
            summary: Some(summary),
            t_test,
            note,
        }
    }

    /// Pairs where both sides are present.
    fn from_options(pairs: impl Iterator<Item = (Option<f64>, Option<f64>)>) -> Self {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.filter_map(|(a, b)| Some((a?, b?))).unzip();
        Self::compute(&a, &b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IccEntry {
    pub icc: Option<IccResult>,
    /// Mean observations per settlement cluster.
    pub mean_cluster_size: f64,
    pub design_effect: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionEntry {
    /// Terms: intercept, relocation indicator.
    pub terms: [&'static str; 2],
    pub result: Option<RegressionResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimClusterLevel {
    /// Number of (scenario, replicate, cluster) groups.
    pub groups: usize,
    pub kpis: BTreeMap<&'static str, PairedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSynthesis {
    pub stage: usize,
    pub effort: PairedResult,
    pub unmet_hours: PairedResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroSynthesis {
    pub stage: usize,
    pub detour_ratio: PairedResult,
    pub walkability: PairedResult,
    pub household_proximity: PairedResult,
}

/// System, stage and micro level views of the relocation effect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Synthesis {
    pub system: BTreeMap<&'static str, Option<PairedSummary>>,
    pub stage: Vec<StageSynthesis>,
    pub micro: Vec<MicroSynthesis>,
    pub detour_ratio: PairedResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAnalysis {
    pub sweep: usize,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub replicates: usize,
    pub replicate_level: BTreeMap<&'static str, PairedResult>,
    pub sim_cluster_level: SimClusterLevel,
    pub icc: BTreeMap<&'static str, IccEntry>,
    pub regression: BTreeMap<&'static str, RegressionEntry>,
    pub synthesis: Synthesis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub baseline: String,
    pub relocation: String,
    pub n_clusters: usize,
    pub sweep_points: usize,
    pub sd: &'static str,
    pub t_test: &'static str,
    pub icc: &'static str,
    pub design_effect: &'static str,
    pub regression: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub metadata: Metadata,
    pub sweeps: Vec<SweepAnalysis>,
}

fn kpi(r: &ReplicateRecord, k: &str) -> f64 {
    match k {
        "effort" => r.effort,
        "overwhelmed" => r.overwhelmed,
        "walkability" => r.walkability,
        _ => r.unmet_hours,
    }
}

fn cluster_kpi(r: &ReplicateRecord, c: usize, k: &str) -> Option<f64> {
    let v = &r.clusters[c];
    match k {
        "effort" => v.effort,
        "overwhelmed" => v.overwhelmed,
        "walkability" => v.walkability,
        _ => v.unmet_hours,
    }
}

/// Baseline/relocation record pairs of one sweep point, by replicate.
type Pairs<'a> = Vec<(&'a ReplicateRecord, &'a ReplicateRecord)>;

fn pair_up(records: &[ReplicateRecord]) -> Result<BTreeMap<usize, Pairs<'_>>, AnalysisError> {
    let mut cells: BTreeMap<(usize, usize), [Option<&ReplicateRecord>; 2]> = BTreeMap::new();
    for r in records {
        let slot = &mut cells.entry((r.sweep, r.replicate)).or_default()[r.scenario_id.min(1)];
        if slot.is_some() {
            return Err(AnalysisError::Duplicate {
                scenario: r.scenario_id,
                replicate: r.replicate,
                sweep: r.sweep,
            });
        }
        *slot = Some(r);
    }
    let mut out: BTreeMap<usize, Pairs<'_>> = BTreeMap::new();
    for ((sweep, replicate), [a, b]) in cells {
        match (a, b) {
            (Some(a), Some(b)) => out.entry(sweep).or_default().push((a, b)),
            _ => return Err(AnalysisError::Unpaired { replicate, sweep }),
        }
    }
    Ok(out)
}

fn sim_cluster_level(pairs: &Pairs<'_>, n_clusters: usize) -> SimClusterLevel {
    // Each record carries one value per cluster, so grouping by
    // (scenario, replicate, cluster) is a pass-through unless replicate
    // indices repeat; the aggregation keeps the definition explicit.
    let mut rows = Vec::new();
    for (a, b) in pairs {
        for r in [a, b] {
            for c in 0..n_clusters {
                let values = KPIS.iter().map(|k| cluster_kpi(r, c, k)).collect();
                rows.push(((r.scenario_id, r.replicate, c), values));
            }
        }
    }
    let groups = aggregate_groups(&rows);
    let lookup: BTreeMap<_, _> = groups.iter().map(|g| (g.key, &g.means)).collect();
    let present = groups
        .iter()
        .filter(|g| g.means.iter().any(Option::is_some))
        .count();
    let kpis = KPIS
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let result = PairedResult::from_options(pairs.iter().flat_map(|(a, _)| {
                let lookup = &lookup;
                (0..n_clusters).map(move |c| {
                    let get = |s: usize| lookup.get(&(s, a.replicate, c)).and_then(|m| m[i]);
                    (get(0), get(1))
                })
            }));
            (*k, result)
        })
        .collect();
    SimClusterLevel {
        groups: present,
        kpis,
    }
}

fn icc_entry(pairs: &Pairs<'_>, n_clusters: usize, k: &str) -> IccEntry {
    let groups: Vec<Vec<f64>> = (0..n_clusters)
        .map(|c| {
            pairs
                .iter()
                .flat_map(|(a, b)| [cluster_kpi(a, c, k), cluster_kpi(b, c, k)])
                .flatten()
                .collect()
        })
        .filter(|g: &Vec<f64>| !g.is_empty())
        .collect();
    let n: usize = groups.iter().map(Vec::len).sum();
    let mean_cluster_size = if groups.is_empty() {
        0.0
    } else {
        n as f64 / groups.len() as f64
    };
    match icc_oneway(&groups) {
        Ok(r) => IccEntry {
            icc: Some(r),
            mean_cluster_size,
            design_effect: Some(design_effect(r.icc, mean_cluster_size)),
            note: r.raw.is_none().then(|| "all values identical".to_string()),
        },
        Err(e) => IccEntry {
            icc: None,
            mean_cluster_size,
            design_effect: None,
            note: Some(e.to_string()),
        },
    }
}

fn regression_entry(pairs: &Pairs<'_>, n_clusters: usize, k: &str) -> RegressionEntry {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut groups = Vec::new();
    for (a, b) in pairs {
        for (r, s2) in [(a, 0.0), (b, 1.0)] {
            for c in 0..n_clusters {
                if let Some(v) = cluster_kpi(r, c, k) {
                    x.extend([1.0, s2]);
                    y.push(v);
                    groups.push((r.replicate, c));
                }
            }
        }
    }
    let result = if y.is_empty() {
        Err(StatsError::SingleCluster)
    } else {
        cluster_robust_ols(
            &DMatrix::from_row_slice(y.len(), 2, &x),
            &DVector::from_vec(y),
            &groups,
        )
    };
    match result {
        Ok(r) => RegressionEntry {
            terms: ["intercept", "relocation"],
            result: Some(r),
            note: None,
        },
        Err(e) => RegressionEntry {
            terms: ["intercept", "relocation"],
            result: None,
            note: Some(e.to_string()),
        },
    }
}

fn synthesis(
    pairs: &Pairs<'_>,
    replicate_level: &BTreeMap<&'static str, PairedResult>,
) -> Synthesis {
    let stage = (0..STAGES)
        .map(|s| StageSynthesis {
            stage: s,
            effort: PairedResult::from_options(
                pairs
                    .iter()
                    .map(|(a, b)| (a.stages[s].effort, b.stages[s].effort)),
            ),
            unmet_hours: PairedResult::from_options(
                pairs
                    .iter()
                    .map(|(a, b)| (a.stages[s].unmet, b.stages[s].unmet)),
            ),
        })
        .collect();
    let micro = (0..STAGES)
        .map(|s| MicroSynthesis {
            stage: s,
            detour_ratio: PairedResult::from_options(
                pairs
                    .iter()
                    .map(|(a, b)| (a.stages[s].detour, b.stages[s].detour)),
            ),
            walkability: PairedResult::from_options(
                pairs
                    .iter()
                    .map(|(a, b)| (a.stages[s].walkability, b.stages[s].walkability)),
            ),
            household_proximity: PairedResult::from_options(
                pairs
                    .iter()
                    .map(|(a, b)| (a.stages[s].proximity, b.stages[s].proximity)),
            ),
        })
        .collect();
    Synthesis {
        system: replicate_level
            .iter()
            .map(|(k, v)| (*k, v.summary))
            .collect(),
        stage,
        micro,
        detour_ratio: PairedResult::from_options(
            pairs.iter().map(|(a, b)| (a.detour_ratio, b.detour_ratio)),
        ),
    }
}

/// Paired summaries, t-tests, ICC/DEFF, cluster-robust regressions and the
/// three-level synthesis for every sweep point.
pub fn analyze(records: &[ReplicateRecord]) -> Result<AnalysisSummary, AnalysisError> {
    let first = records.first().ok_or(AnalysisError::Empty)?;
    let n_clusters = first.clusters.len();
    if records.iter().any(|r| r.clusters.len() != n_clusters) {
        return Err(AnalysisError::ClusterMismatch);
    }
    let by_sweep = pair_up(records)?;
    let name_of = |id: usize| {
        records
            .iter()
            .find(|r| r.scenario_id == id)
            .map(|r| r.scenario.clone())
            .unwrap_or_default()
    };

    let sweeps = by_sweep
        .iter()
        .map(|(&sweep, pairs)| {
            let replicate_level: BTreeMap<&'static str, PairedResult> = KPIS
                .iter()
                .map(|k| {
                    let a: Vec<f64> = pairs.iter().map(|(a, _)| kpi(a, k)).collect();
                    let b: Vec<f64> = pairs.iter().map(|(_, b)| kpi(b, k)).collect();
                    (*k, PairedResult::compute(&a, &b))
                })
                .collect();
            let (a0, _) = pairs[0];
            SweepAnalysis {
                sweep,
                x1: a0.x1,
                x2: a0.x2,
                x3: a0.x3,
                replicates: pairs.len(),
                sim_cluster_level: sim_cluster_level(pairs, n_clusters),
                icc: KPIS
                    .iter()
                    .map(|k| (*k, icc_entry(pairs, n_clusters, k)))
                    .collect(),
                regression: KPIS
                    .iter()
                    .map(|k| (*k, regression_entry(pairs, n_clusters, k)))
                    .collect(),
                synthesis: synthesis(pairs, &replicate_level),
                replicate_level,
            }
        })
        .collect::<Vec<_>>();

    Ok(AnalysisSummary {
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION"),
            baseline: name_of(0),
            relocation: name_of(1),
            n_clusters,
            sweep_points: sweeps.len(),
            sd: "sample standard deviation (n - 1 denominator)",
            t_test: "paired Student t, two-sided, df = n - 1",
            icc: "one-way ICC(1) over settlement clusters of sim x cluster means, unbalanced group-size correction, negative estimates clipped to 0",
            design_effect: "1 + (m - 1) * ICC with m = mean observations per settlement cluster",
            regression: "OLS of sim x cluster KPI on intercept + relocation indicator; CR1 cluster-robust errors clustered by (replicate, settlement cluster); t reference with G - 1 df",
        },
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ClusterKpis;
    use crate::scenarios::StageRecord;

    fn record(scenario_id: usize, replicate: usize, v: f64) -> ReplicateRecord {
        ReplicateRecord {
            scenario_id,
            scenario: if scenario_id == 0 { "S1" } else { "S2" }.into(),
            replicate,
            sweep: 0,
            x1: 1.0,
            x2: 1.0,
            x3: 0.3,
            seed: 1,
            effort: v,
            overwhelmed: v,
            walkability: v,
            unmet_hours: v,
            detour_ratio: Some(v),
            stages: [StageRecord::default(); STAGES],
            clusters: vec![
                ClusterKpis {
                    effort: Some(v),
                    overwhelmed: Some(v),
                    walkability: Some(v),
                    unmet_hours: Some(v),
                },
                ClusterKpis {
                    effort: Some(2.0 * v + 1.0),
                    overwhelmed: Some(v),
                    walkability: Some(v),
                    unmet_hours: Some(v + 3.0),
                },
            ],
        }
    }

    #[test]
    fn identical_scenarios_are_degenerate() {
        let records: Vec<_> = (0..4)
            .flat_map(|r| [record(0, r, r as f64), record(1, r, r as f64)])
            .collect();
        let s = analyze(&records).unwrap();
        let sw = &s.sweeps[0];
        for k in KPIS {
            let p = sw.replicate_level[k].summary.unwrap();
            assert_eq!((p.delta, p.cohens_d, p.degenerate), (0.0, 0.0, true));
            assert!(sw.replicate_level[k].t_test.is_none());
        }
        assert_eq!(sw.sim_cluster_level.groups, 16);
        assert_eq!(
            sw.regression["unmet_hours"]
                .result
                .as_ref()
                .unwrap()
                .n_clusters,
            8
        );
    }

    #[test]
    fn unpaired_records_are_rejected() {
        let records = vec![record(0, 0, 1.0), record(1, 0, 1.0), record(0, 1, 1.0)];
        assert_eq!(
            analyze(&records),
            Err(AnalysisError::Unpaired {
                replicate: 1,
                sweep: 0
            })
        );
    }
}
