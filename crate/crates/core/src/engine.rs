//! Daily-tick simulation of care delivery within dyads.
//!
//! Care quantities are tracked in whole minutes so that
//! `delivered + purchased + unmet == need` holds exactly for every patient-day.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusters::ClusterMap;
use crate::csvfmt::{fmt_f64, fmt_opt};
use crate::indicators::{
    residential_proximity, route_efficiency, walkability_index, IndicatorConfig, IndicatorError,
};
use crate::network::{Mode, NetworkError, NodeId, RoadNetwork, SpeedConfig};
use crate::population::{care_needed, Population, PopulationParams, StageTable, STAGES};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("agent references unknown dwelling")]
    UnknownHome,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
}

/// Global model parameters. Field names follow the published parameter table
/// where one exists; the remaining constants are model choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// km/h
    pub wk_speed: f64,
    pub pr_speed: f64,
    pub pu_speed: f64,
    pub gr_speed: f64,
    /// Walking willingness share, the default for `x3`.
    pub gtperc: f64,
    /// Kilometers of walking distance to an essential facility below which
    /// patients do not accrue walk-related worsening.
    pub radius_preference: f64,
    pub age_ref: u32,
    pub age_work: u32,
    pub age_gold: u32,
    /// Trailing seven-day effort sum above which a caregiver is overwhelmed.
    pub efforts_threshold: f64,
    pub base_income: f64,
    pub base_income_ret: f64,
    pub hrs_ass_max: f64,
    pub n_facilities: usize,
    pub warmup_days: u32,
    pub horizon_days: u32,
    /// Caregiver income multiplier.
    pub x1: f64,
    /// Patient income multiplier.
    pub x2: f64,
    /// Walk-willing share; `None` falls back to `gtperc`.
    pub x3: Option<f64>,
    /// Price of one hour of paid care.
    pub care_price: f64,
    pub seed: u64,
    /// Hours in a caregiver's day available for work, care and travel.
    pub daily_time_budget: f64,
    pub work_hours: f64,
    /// Paid-care hours a caregiver household buys once its income reaches
    /// `buyout_income_factor * base_income`.
    pub buyout_hours: f64,
    pub buyout_income_factor: f64,
    pub round_trip_factor: f64,
    /// Worsening points per unmet hour.
    pub unmet_worsening: f64,
    pub days_per_month: f64,
    pub days_per_year: f64,
    pub rolling_window: usize,
    /// Single-linkage distance (m) between dwellings of one settlement cluster.
    pub cluster_linkage_m: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            wk_speed: 4.0,
            pr_speed: 40.0,
            pu_speed: 30.0,
            gr_speed: 10.0,
            gtperc: 0.3,
            radius_preference: 2.5,
            age_ref: 65,
            age_work: 15,
            age_gold: 75,
            efforts_threshold: 2.5,
            base_income: 1200.0,
            base_income_ret: 700.0,
            hrs_ass_max: 12.0,
            n_facilities: 5,
            warmup_days: 14,
            horizon_days: 56,
            x1: 1.0,
            x2: 1.0,
            x3: None,
            care_price: 15.0,
            seed: 0,
            daily_time_budget: 18.0,
            work_hours: 8.0,
            buyout_hours: 2.0,
            buyout_income_factor: 2.0,
            round_trip_factor: 2.0,
            unmet_worsening: 0.5,
            days_per_month: 30.0,
            days_per_year: 365.0,
            rolling_window: 7,
            cluster_linkage_m: 250.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        let speeds = [self.wk_speed, self.pr_speed, self.pu_speed, self.gr_speed];
        if speeds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("all speeds must be > 0");
        }
        if !(0.0..=1.0).contains(&self.gtperc) {
            return bad("gtperc must lie in [0,1]");
        }
        if let Some(x3) = self.x3 {
            if !(0.0..=1.0).contains(&x3) {
                return bad("x3 must lie in [0,1]");
            }
        }
        if self.warmup_days >= self.horizon_days {
            return bad("warmup_days must be < horizon_days");
        }
        if !(self.x1 >= 0.0 && self.x2 >= 0.0) {
            return bad("income multipliers must be >= 0");
        }
        if !(self.hrs_ass_max > 0.0 && self.hrs_ass_max <= 18.0) {
            return bad("hrs_ass_max must lie in (0,18]");
        }
        if !(self.care_price > 0.0 && self.days_per_month > 0.0 && self.days_per_year > 0.0) {
            return bad("care_price, days_per_month and days_per_year must be > 0");
        }
        if self.age_work >= self.age_ref || self.age_ref >= self.age_gold {
            return bad("ages must satisfy age_work < age_ref < age_gold");
        }
        if self.rolling_window == 0 {
            return bad("rolling_window must be >= 1");
        }
        if self.n_facilities == 0 {
            return bad("n_facilities must be >= 1");
        }
        if !(self.radius_preference >= 0.0 && self.cluster_linkage_m >= 0.0) {
            return bad("radius_preference and cluster_linkage_m must be >= 0");
        }
        Ok(())
    }

    pub fn speeds(&self) -> SpeedConfig {
        SpeedConfig {
            walk: self.wk_speed,
            car: self.pr_speed,
            public: self.pu_speed,
            green: self.gr_speed,
        }
    }

    pub fn walk_share(&self) -> f64 {
        self.x3.unwrap_or(self.gtperc)
    }

    pub fn population_params(&self) -> PopulationParams {
        PopulationParams {
            age_ref: self.age_ref,
            age_work: self.age_work,
            age_gold: self.age_gold,
            base_income: self.base_income,
            base_income_ret: self.base_income_ret,
            hrs_ass_max: self.hrs_ass_max,
        }
    }
}

fn to_minutes(hours: f64) -> u32 {
    (hours * 60.0).round().max(0.0) as u32
}

fn to_hours(minutes: u32) -> f64 {
    minutes as f64 / 60.0
}

/// Indicators evaluated once per home node.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HomeIndicators {
    walkability: f64,
    proximity: f64,
    /// Route efficiency to the nearest essential facility by walking distance.
    detour: Option<f64>,
    /// Essential facility within `radius_preference` km of walking.
    essential_access: bool,
}

#[derive(Debug, Clone)]
struct PatientState {
    stage: u8,
    points: f64,
    alive: bool,
    need: u32,
    purchase: u32,
    home: NodeId,
    cluster: Option<usize>,
    caregiver: Option<usize>,
}

#[derive(Debug, Clone)]
struct CaregiverState {
    patient: usize,
    /// One-way hours; `None` when the patient cannot be reached at all.
    travel: Option<f64>,
    mode: Mode,
    support: u32,
    work_hours: f64,
    buyout: u32,
    window: VecDeque<f64>,
}

impl CaregiverState {
    fn rolling_sum(&self) -> f64 {
        self.window.iter().sum()
    }

    fn rolling_mean(&self, window: usize) -> f64 {
        self.rolling_sum() / window as f64
    }
}

/// One patient's care accounting for one day, in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PatientDay {
    /// Alive at the start of the day.
    pub alive: bool,
    pub stage: u8,
    pub need: u32,
    pub purchased: u32,
    pub delivered: u32,
    pub unmet: u32,
    /// Died at the end of the day.
    pub died: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageDay {
    pub patients: usize,
    /// Mean rolling effort of the caregivers serving this stage.
    pub effort: Option<f64>,
    pub unmet: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClusterDay {
    pub patients: usize,
    pub effort: Option<f64>,
    pub overwhelmed: usize,
    pub walkability: Option<f64>,
    pub unmet: Option<f64>,
}

/// Everything observed on one simulated day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub day: u32,
    /// Effort of each dyad caregiver on this day (not rolled).
    pub caregiver_effort: Vec<f64>,
    /// Dyad caregivers' trailing-window effort sums.
    pub caregiver_rolling_sum: Vec<f64>,
    pub patients: Vec<PatientDay>,
    pub overwhelmed: usize,
    pub mean_effort: f64,
    pub mean_unmet_hours: f64,
    pub mean_walkability: f64,
    pub stages: [StageDay; STAGES],
    pub clusters: Vec<ClusterDay>,
}

/// Run-level KPIs averaged over post-warm-up days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiSummary {
    pub effort: f64,
    pub overwhelmed: f64,
    pub walkability: f64,
    pub unmet_hours: f64,
    pub stage_effort: [Option<f64>; STAGES],
    pub stage_unmet: [Option<f64>; STAGES],
    pub clusters: Vec<ClusterKpis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClusterKpis {
    pub effort: Option<f64>,
    pub overwhelmed: Option<f64>,
    pub walkability: Option<f64>,
    pub unmet_hours: Option<f64>,
}

/// Per-stage environmental conditions around patient homes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StageMicro {
    pub patients: usize,
    pub detour_ratio: Option<f64>,
    pub walkability: Option<f64>,
    pub household_proximity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroConditions {
    pub stages: [StageMicro; STAGES],
    /// Mean detour ratio over all patients with a reachable essential facility.
    pub detour_ratio: Option<f64>,
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

/// Mutable state of one replicate.
#[derive(Debug, Clone)]
pub struct SimState<'a> {
    net: &'a RoadNetwork,
    cfg: SimConfig,
    stages: StageTable,
    patients: Vec<PatientState>,
    caregivers: Vec<CaregiverState>,
    homes: BTreeMap<NodeId, HomeIndicators>,
    n_clusters: usize,
    rng: ChaCha8Rng,
    day: u32,
}

impl<'a> SimState<'a> {
    /// Prepares a replicate: resolves homes, routes every dyad and evaluates
    /// the indicators at each patient home.
    pub fn new(
        net: &'a RoadNetwork,
        population: &Population,
        cfg: &SimConfig,
        stages: &StageTable,
        indicators: &IndicatorConfig,
        clusters: &ClusterMap,
    ) -> Result<Self, EngineError> {
        cfg.validate()?;
        let speeds = cfg.speeds();
        let mut ind = indicators.clone();
        ind.speeds = speeds;

        let node_of = |home: Option<crate::network::DwellingId>| -> Result<NodeId, EngineError> {
            home.and_then(|h| net.dwelling(h))
                .map(|d| d.node)
                .ok_or(EngineError::UnknownHome)
        };

        let patient_index: BTreeMap<_, _> = population
            .patients
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id, i))
            .collect();
        let caregiver_index: BTreeMap<_, _> = population
            .caregivers
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id, i))
            .collect();

        let mut patients = Vec::with_capacity(population.patients.len());
        for p in &population.patients {
            let surplus = (cfg.x2 * p.income - cfg.base_income_ret).max(0.0);
            let hours = (surplus / (cfg.care_price * cfg.days_per_month)).floor();
            patients.push(PatientState {
                stage: p.aging_stage,
                points: p.worsening_points,
                alive: p.alive,
                need: to_minutes(care_needed(stages, p.aging_stage, cfg.hrs_ass_max)),
                purchase: to_minutes(hours),
                home: node_of(p.home)?,
                cluster: p.home.and_then(|h| clusters.cluster_of(h)),
                caregiver: None,
            });
        }

        let mut caregivers = Vec::new();
        for d in &population.dyads {
            let Some(cid) = d.caregiver else { continue };
            let (Some(&pi), Some(&ci)) = (patient_index.get(&d.patient), caregiver_index.get(&cid))
            else {
                continue;
            };
            let c = &population.caregivers[ci];
            let from = node_of(c.home)?;
            let to = patients[pi].home;
            let walk = net
                .shortest_distance_path(from, to, Mode::Walk, &speeds)
                .ok();
            let willing = c.walk_propensity < cfg.walk_share();
            let walks = c.mobility == Mode::Walk
                || (willing
                    && walk
                        .as_ref()
                        .is_some_and(|w| w.length <= c.walking_radius as f64));
            let mut mode = if walks { Mode::Walk } else { c.mobility };
            let mut route = net.shortest_path(from, to, mode, &speeds).ok();
            if route.is_none() && mode != Mode::Walk {
                mode = Mode::Walk;
                route = net.shortest_path(from, to, mode, &speeds).ok();
            }
            let buyout = if cfg.x1 * c.income >= cfg.buyout_income_factor * cfg.base_income {
                to_minutes(cfg.buyout_hours)
            } else {
                0
            };
            patients[pi].caregiver = Some(caregivers.len());
            caregivers.push(CaregiverState {
                patient: pi,
                travel: route.map(|r| r.travel_time / 60.0),
                mode,
                support: to_minutes(c.hrs_support),
                work_hours: if c.has_job { cfg.work_hours } else { 0.0 },
                buyout,
                window: VecDeque::with_capacity(cfg.rolling_window),
            });
        }

        let mut homes = BTreeMap::new();
        let essential: Vec<NodeId> = net
            .facilities()
            .iter()
            .filter(|f| f.essential)
            .map(|f| f.node)
            .collect();
        for p in &patients {
            if homes.contains_key(&p.home) {
                continue;
            }
            let tree = net.distances_from(p.home, Mode::Walk, f64::INFINITY)?;
            let nearest = essential
                .iter()
                .filter_map(|&n| tree.cost(net, n).map(|d| (d, n)))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let detour = match nearest {
                None => None,
                Some((_, n)) => match route_efficiency(net, p.home, n, &ind) {
                    Ok(r) => Some(r),
                    Err(IndicatorError::DegenerateGeometry(..)) => None,
                    Err(e) => return Err(e.into()),
                },
            };
            let essential_access =
                nearest.is_some_and(|(d, _)| d <= cfg.radius_preference * 1000.0);
            homes.insert(
                p.home,
                HomeIndicators {
                    walkability: walkability_index(net, p.home, &ind)?,
                    proximity: residential_proximity(net, p.home, &ind)?,
                    detour,
                    essential_access,
                },
            );
        }

        Ok(SimState {
            net,
            cfg: cfg.clone(),
            stages: stages.clone(),
            patients,
            caregivers,
            homes,
            n_clusters: clusters.count(),
            rng: seed::rng(cfg.seed),
            day: 0,
        })
    }

    pub fn network(&self) -> &RoadNetwork {
        self.net
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn living_patients(&self) -> usize {
        self.patients.iter().filter(|p| p.alive).count()
    }

    /// Travel mode chosen for each dyad caregiver.
    pub fn caregiver_modes(&self) -> Vec<Mode> {
        self.caregivers.iter().map(|c| c.mode).collect()
    }

    /// Advances the state by one day and reports what happened.
    pub fn daily_tick(&mut self) -> DayRecord {
        self.day += 1;
        let cfg = &self.cfg;
        // One draw per patient every day keeps the stream aligned across scenarios.
        let draws: Vec<f64> = (0..self.patients.len())
            .map(|_| self.rng.random::<f64>())
            .collect();

        let mut efforts = vec![0.0; self.caregivers.len()];
        let mut days = Vec::with_capacity(self.patients.len());
        for (i, p) in self.patients.iter_mut().enumerate() {
            if !p.alive {
                days.push(PatientDay {
                    stage: p.stage,
                    ..PatientDay::default()
                });
                continue;
            }
            let need = p.need;
            let cg = p.caregiver.map(|c| &self.caregivers[c]);
            let purchased = need.min(p.purchase + cg.map_or(0, |c| c.buyout));
            let remaining = need - purchased;
            let mut delivered = 0;
            if let (Some(ci), Some(c)) = (p.caregiver, cg) {
                if let Some(travel) = c.travel {
                    let free =
                        cfg.daily_time_budget - c.work_hours - cfg.round_trip_factor * travel;
                    let cap = (free.max(0.0) * 60.0).floor() as u32;
                    delivered = c.support.min(remaining).min(cap);
                    if delivered > 0 {
                        efforts[ci] = (to_hours(delivered) + cfg.round_trip_factor * travel)
                            / cfg.hrs_ass_max;
                    }
                }
            }
            let unmet = remaining - delivered;

            let spec = self.stages.stage(p.stage);
            let home = &self.homes[&p.home];
            let walk_penalty = if home.essential_access {
                0.0
            } else {
                spec.worsening_in_walk
            };
            p.points += walk_penalty + cfg.unmet_worsening * to_hours(unmet);
            let start_stage = p.stage;
            if p.points >= spec.worsening_threshold as f64 && (p.stage as usize) < STAGES - 1 {
                p.stage += 1;
                p.points = 0.0;
                p.need = to_minutes(care_needed(&self.stages, p.stage, cfg.hrs_ass_max));
            }
            let daily_death = self.stages.stage(p.stage).death_probability / cfg.days_per_year;
            let died = draws[i] < daily_death;
            if died {
                p.alive = false;
            }
            days.push(PatientDay {
                alive: true,
                stage: start_stage,
                need,
                purchased,
                delivered,
                unmet,
                died,
            });
        }

        for (c, e) in self.caregivers.iter_mut().zip(&efforts) {
            if c.window.len() == cfg.rolling_window {
                c.window.pop_front();
            }
            c.window.push_back(*e);
        }

        self.record(days, efforts)
    }

    fn record(&self, days: Vec<PatientDay>, efforts: Vec<f64>) -> DayRecord {
        let cfg = &self.cfg;
        let rolling: Vec<f64> = self
            .caregivers
            .iter()
            .map(|c| c.rolling_mean(cfg.rolling_window))
            .collect();
        let sums: Vec<f64> = self
            .caregivers
            .iter()
            .map(CaregiverState::rolling_sum)
            .collect();
        let over: Vec<bool> = sums.iter().map(|s| *s > cfg.efforts_threshold).collect();

        let mut living = 0usize;
        let mut unmet_sum = 0.0;
        let mut walk_sum = 0.0;
        let mut stage_acc = [(0usize, 0.0f64, 0usize, 0.0f64); STAGES];
        let mut cluster_acc = vec![(0usize, 0.0f64, 0.0f64); self.n_clusters];
        for (p, d) in self.patients.iter().zip(&days) {
            if !d.alive {
                continue;
            }
            let unmet = to_hours(d.unmet);
            let walk = self.homes[&p.home].walkability;
            living += 1;
            unmet_sum += unmet;
            walk_sum += walk;
            let s = &mut stage_acc[d.stage as usize];
            s.0 += 1;
            s.1 += unmet;
            if let Some(c) = p.caregiver {
                s.2 += 1;
                s.3 += rolling[c];
            }
            if let Some(k) = p.cluster {
                let acc = &mut cluster_acc[k];
                acc.0 += 1;
                acc.1 += unmet;
                acc.2 += walk;
            }
        }
        let mut cg_acc = vec![(0usize, 0.0f64, 0usize); self.n_clusters];
        for (ci, c) in self.caregivers.iter().enumerate() {
            if let Some(k) = self.patients[c.patient].cluster {
                cg_acc[k].0 += 1;
                cg_acc[k].1 += rolling[ci];
                cg_acc[k].2 += usize::from(over[ci]);
            }
        }

        let stages = std::array::from_fn(|s| {
            let (n, unmet, nc, effort) = stage_acc[s];
            StageDay {
                patients: n,
                effort: mean(effort, nc),
                unmet: mean(unmet, n),
            }
        });
        let clusters = (0..self.n_clusters)
            .map(|k| {
                let (n, unmet, walk) = cluster_acc[k];
                let (nc, effort, overwhelmed) = cg_acc[k];
                ClusterDay {
                    patients: n,
                    effort: mean(effort, nc),
                    overwhelmed,
                    walkability: mean(walk, n),
                    unmet: mean(unmet, n),
                }
            })
            .collect();

        DayRecord {
            day: self.day,
            caregiver_effort: efforts,
            caregiver_rolling_sum: sums,
            patients: days,
            overwhelmed: over.iter().filter(|o| **o).count(),
            mean_effort: mean(rolling.iter().sum(), rolling.len()).unwrap_or(0.0),
            mean_unmet_hours: mean(unmet_sum, living).unwrap_or(0.0),
            mean_walkability: mean(walk_sum, living).unwrap_or(0.0),
            stages,
            clusters,
        }
    }

    /// Caregivers whose trailing-window effort sum exceeds the threshold.
    pub fn overwhelmed_count(&self) -> usize {
        self.caregivers
            .iter()
            .filter(|c| c.rolling_sum() > self.cfg.efforts_threshold)
            .count()
    }

    /// Detour ratio, walkability and household proximity per aging stage of
    /// the living patients.
    pub fn micro_conditions(&self) -> MicroConditions {
        let mut acc = [(0usize, 0.0f64, 0usize, 0.0f64, 0.0f64); STAGES];
        let (mut all_detour, mut all_n) = (0.0, 0usize);
        for p in self.patients.iter().filter(|p| p.alive) {
            let h = &self.homes[&p.home];
            let a = &mut acc[p.stage as usize];
            a.0 += 1;
            a.3 += h.walkability;
            a.4 += h.proximity;
            if let Some(d) = h.detour {
                a.1 += d;
                a.2 += 1;
                all_detour += d;
                all_n += 1;
            }
        }
        MicroConditions {
            stages: std::array::from_fn(|s| {
                let (n, detour, nd, walk, prox) = acc[s];
                StageMicro {
                    patients: n,
                    detour_ratio: mean(detour, nd),
                    walkability: mean(walk, n),
                    household_proximity: mean(prox, n),
                }
            }),
            detour_ratio: mean(all_detour, all_n),
        }
    }
}

/// Averages the post-warm-up records into run KPIs. Depends only on records
/// with `day > warmup_days`.
pub fn summarize(records: &[DayRecord], warmup_days: u32, n_clusters: usize) -> KpiSummary {
    let kept: Vec<&DayRecord> = records.iter().filter(|r| r.day > warmup_days).collect();
    let n = kept.len();
    let avg =
        |f: &dyn Fn(&DayRecord) -> f64| mean(kept.iter().map(|r| f(r)).sum(), n).unwrap_or(0.0);
    let avg_opt = |f: &dyn Fn(&DayRecord) -> Option<f64>| {
        let vals: Vec<f64> = kept.iter().filter_map(|r| f(r)).collect();
        mean(vals.iter().sum(), vals.len())
    };
    KpiSummary {
        effort: avg(&|r| r.mean_effort),
        overwhelmed: avg(&|r| r.overwhelmed as f64),
        walkability: avg(&|r| r.mean_walkability),
        unmet_hours: avg(&|r| r.mean_unmet_hours),
        stage_effort: std::array::from_fn(|s| avg_opt(&|r| r.stages[s].effort)),
        stage_unmet: std::array::from_fn(|s| avg_opt(&|r| r.stages[s].unmet)),
        clusters: (0..n_clusters)
            .map(|k| ClusterKpis {
                effort: avg_opt(&|r| r.clusters[k].effort),
                overwhelmed: avg_opt(&|r| {
                    r.clusters[k]
                        .effort
                        .map(|_| r.clusters[k].overwhelmed as f64)
                }),
                walkability: avg_opt(&|r| r.clusters[k].walkability),
                unmet_hours: avg_opt(&|r| r.clusters[k].unmet),
            })
            .collect(),
    }
}

/// Output of one replicate run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: KpiSummary,
    pub records: Vec<DayRecord>,
    /// Conditions at the start of the run.
    pub micro: MicroConditions,
}

/// Simulates `horizon_days` days and summarises the post-warm-up window.
pub fn run(
    net: &RoadNetwork,
    population: &Population,
    cfg: &SimConfig,
    stages: &StageTable,
    indicators: &IndicatorConfig,
    clusters: &ClusterMap,
) -> Result<RunOutput, EngineError> {
    let mut state = SimState::new(net, population, cfg, stages, indicators, clusters)?;
    let micro = state.micro_conditions();
    let records: Vec<DayRecord> = (0..cfg.horizon_days).map(|_| state.daily_tick()).collect();
    let summary = summarize(&records, cfg.warmup_days, clusters.count());
    Ok(RunOutput {
        summary,
        records,
        micro,
    })
}

/// Writes one row per day: system KPIs, then per-stage and per-cluster columns.
pub fn write_day_records<W: Write>(writer: W, records: &[DayRecord]) -> csv::Result<()> {
    let n_clusters = records.first().map_or(0, |r| r.clusters.len());
    let mut header = vec![
        "day".to_string(),
        "effort".into(),
        "overwhelmed".into(),
        "walkability".into(),
        "unmet_hours".into(),
    ];
    for s in 0..STAGES {
        for col in ["patients", "effort", "unmet"] {
            header.push(format!("s{s}_{col}"));
        }
    }
    for k in 0..n_clusters {
        for col in ["patients", "effort", "overwhelmed", "walkability", "unmet"] {
            header.push(format!("c{k}_{col}"));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.day.to_string(),
            fmt_f64(r.mean_effort),
            r.overwhelmed.to_string(),
            fmt_f64(r.mean_walkability),
            fmt_f64(r.mean_unmet_hours),
        ];
        for s in &r.stages {
            row.push(s.patients.to_string());
            row.push(fmt_opt(s.effort));
            row.push(fmt_opt(s.unmet));
        }
        for c in &r.clusters {
            row.push(c.patients.to_string());
            row.push(fmt_opt(c.effort));
            row.push(c.overwhelmed.to_string());
            row.push(fmt_opt(c.walkability));
            row.push(fmt_opt(c.unmet));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
