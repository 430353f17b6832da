//! Synthetic patients and informal caregivers.
//!
//! Agents are drawn from demographic marginals one attribute at a time. Each
//! binary attribute is assigned to exactly `round(share * group size)` members
//! picked by an independent random permutation, so realised shares match their
//! targets up to rounding while attributes stay mutually independent.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvfmt::{fmt_bool, fmt_f64};
use crate::network::{DwellingId, Mode, NetworkError, NodeId, RoadNetwork, SearchTree};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopulationError {
    #[error("marginal '{key}' = {value} is outside [0,1]")]
    InvalidMarginals { key: String, value: f64 },
    #[error("inconsistent marginals: {0}")]
    InconsistentMarginals(String),
    #[error("invalid aging stage table: {0}")]
    InvalidStages(String),
    #[error("population size must be > 0")]
    EmptyPopulation,
    #[error("no inhabited dwellings to place agents in")]
    NoDwellings,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Demographic shares of the study area, keyed like the census summary rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemographicMarginals {
    pub population: u32,
    pub urbanized: f64,
    pub adults_with_education: f64,
    pub adults_divorced: f64,
    pub employment_males: f64,
    pub employment_females: f64,
    pub unemployed_males: f64,
    pub unemployed_females: f64,
    pub highly_skilled_jobs: f64,
    pub unskilled_jobs: f64,
    pub artisans_farmers: f64,
    pub daily_mobility: f64,
    pub private_transport: f64,
    pub public_transport: f64,
    pub pedestrian_transport: f64,
    /// Elderly residents per working-age adult.
    pub elderly_adults_ratio: f64,
    /// Residents aged 75+ as a share of the whole population.
    pub elderly_over_75: f64,
    pub elderly_single: f64,
    pub elderly_couples_no_children: f64,
    pub elderly_couples_with_children: f64,
    pub elderly_single_parent: f64,
    #[serde(default = "half")]
    pub female_share: f64,
    /// Micro-mobility share; the remainder after all listed modes walks.
    #[serde(default)]
    pub green_transport: f64,
}

fn half() -> f64 {
    0.5
}

impl DemographicMarginals {
    /// Premeno column of the census summary.
    pub fn premeno() -> Self {
        DemographicMarginals {
            population: 746,
            urbanized: 0.964,
            adults_with_education: 0.582,
            adults_divorced: 0.088,
            employment_males: 0.551,
            employment_females: 0.426,
            unemployed_males: 0.068,
            unemployed_females: 0.104,
            highly_skilled_jobs: 0.353,
            unskilled_jobs: 0.135,
            artisans_farmers: 0.218,
            daily_mobility: 0.622,
            private_transport: 0.723,
            public_transport: 0.164,
            pedestrian_transport: 0.101,
            elderly_adults_ratio: 0.39,
            elderly_over_75: 0.129,
            elderly_single: 0.33,
            elderly_couples_no_children: 0.157,
            elderly_couples_with_children: 0.051,
            elderly_single_parent: 0.091,
            female_share: 0.5,
            green_transport: 0.0,
        }
    }

    pub fn shares(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("urbanized", self.urbanized),
            ("adults_with_education", self.adults_with_education),
            ("adults_divorced", self.adults_divorced),
            ("employment_males", self.employment_males),
            ("employment_females", self.employment_females),
            ("unemployed_males", self.unemployed_males),
            ("unemployed_females", self.unemployed_females),
            ("highly_skilled_jobs", self.highly_skilled_jobs),
            ("unskilled_jobs", self.unskilled_jobs),
            ("artisans_farmers", self.artisans_farmers),
            ("daily_mobility", self.daily_mobility),
            ("private_transport", self.private_transport),
            ("public_transport", self.public_transport),
            ("pedestrian_transport", self.pedestrian_transport),
            ("elderly_adults_ratio", self.elderly_adults_ratio),
            ("elderly_over_75", self.elderly_over_75),
            ("elderly_single", self.elderly_single),
            (
                "elderly_couples_no_children",
                self.elderly_couples_no_children,
            ),
            (
                "elderly_couples_with_children",
                self.elderly_couples_with_children,
            ),
            ("elderly_single_parent", self.elderly_single_parent),
            ("female_share", self.female_share),
            ("green_transport", self.green_transport),
        ]
    }

    pub fn validate(&self) -> Result<(), PopulationError> {
        for (key, value) in self.shares() {
            if !(0.0..=1.0).contains(&value) {
                return Err(PopulationError::InvalidMarginals {
                    key: key.to_string(),
                    value,
                });
            }
        }
        let listed = self.private_transport
            + self.public_transport
            + self.green_transport
            + self.pedestrian_transport;
        if listed > 1.0 + 1e-9 {
            return Err(PopulationError::InconsistentMarginals(format!(
                "mobility shares sum to {listed} > 1"
            )));
        }
        if self.elderly_over_75 > self.elderly_share() + 1e-12 {
            return Err(PopulationError::InconsistentMarginals(format!(
                "elderly_over_75 = {} exceeds the elderly share {}",
                self.elderly_over_75,
                self.elderly_share()
            )));
        }
        let with_children = self.elderly_couples_with_children + self.elderly_single_parent;
        if with_children > 1.0 {
            return Err(PopulationError::InconsistentMarginals(
                "elderly households with children exceed 1".into(),
            ));
        }
        Ok(())
    }

    /// Elderly share of the population implied by the elderly/adults ratio.
    pub fn elderly_share(&self) -> f64 {
        self.elderly_adults_ratio / (1.0 + self.elderly_adults_ratio)
    }

    /// Share of elders with at least one child.
    pub fn has_child_share(&self) -> f64 {
        self.elderly_couples_with_children + self.elderly_single_parent
    }

    /// Walking share: everything not assigned to a vehicle mode.
    pub fn walk_share(&self) -> f64 {
        (1.0 - self.private_transport - self.public_transport - self.green_transport).max(0.0)
    }
}

/// Severity parameters of one aging stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgingStageSpec {
    pub severity: u8,
    pub worsening_threshold: u32,
    /// Hours of assistance per day.
    pub base_assistance: f64,
    /// Worsening points per day without walkable access to essential care.
    pub worsening_in_walk: f64,
    pub base_adl: f64,
    /// Annual probability.
    pub death_probability: f64,
}

pub const STAGES: usize = 5;

/// The five aging stages, indexed by severity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StageTable(Vec<AgingStageSpec>);

impl Default for StageTable {
    fn default() -> Self {
        let assistance = [1.0, 3.0, 6.0, 9.0, 12.0];
        let threshold = [15, 12, 9, 6, 4];
        let worsening = [0.5, 1.0, 1.5, 2.0, 3.0];
        let adl = [18.0, 14.0, 10.0, 6.0, 3.0];
        let death = [0.01, 0.02, 0.05, 0.10, 0.20];
        StageTable(
            (0..STAGES)
                .map(|s| AgingStageSpec {
                    severity: s as u8,
                    worsening_threshold: threshold[s],
                    base_assistance: assistance[s],
                    worsening_in_walk: worsening[s],
                    base_adl: adl[s],
                    death_probability: death[s],
                })
                .collect(),
        )
    }
}

impl StageTable {
    pub fn new(specs: Vec<AgingStageSpec>) -> Result<Self, PopulationError> {
        let t = StageTable(specs);
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), PopulationError> {
        let bad = |m: String| Err(PopulationError::InvalidStages(m));
        if self.0.len() != STAGES {
            return bad(format!("expected {STAGES} stages, got {}", self.0.len()));
        }
        for (i, s) in self.0.iter().enumerate() {
            if s.severity as usize != i {
                return bad(format!("stage #{i} has severity {}", s.severity));
            }
            if s.worsening_threshold > 15 {
                return bad(format!("stage {i}: worsening_threshold outside [0,15]"));
            }
            if !(0.0..=15.0).contains(&s.base_assistance) {
                return bad(format!("stage {i}: base_assistance outside [0,15]"));
            }
            if !(0.0..=15.0).contains(&s.worsening_in_walk) {
                return bad(format!("stage {i}: worsening_in_walk outside [0,15]"));
            }
            if !(0.0..=18.0).contains(&s.base_adl) {
                return bad(format!("stage {i}: base_adl outside [0,18]"));
            }
            if !(0.0..=1.0).contains(&s.death_probability) {
                return bad(format!("stage {i}: death_probability outside [0,1]"));
            }
        }
        for w in self.0.windows(2) {
            if w[1].base_assistance < w[0].base_assistance {
                return bad("base_assistance must not decrease with severity".into());
            }
            if w[1].death_probability < w[0].death_probability {
                return bad("death_probability must not decrease with severity".into());
            }
        }
        Ok(())
    }

    pub fn stage(&self, severity: u8) -> &AgingStageSpec {
        &self.0[severity as usize]
    }

    pub fn specs(&self) -> &[AgingStageSpec] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatientId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaregiverId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct PatientAgent {
    pub id: PatientId,
    pub age: u32,
    pub sex: Sex,
    /// Monthly pension income.
    pub income: f64,
    pub life_expectancy: u32,
    pub home: Option<DwellingId>,
    pub mobility: Mode,
    /// Meters.
    pub walking_radius: u32,
    pub aging_stage: u8,
    /// Hours per day.
    pub hrs_care_needed: f64,
    pub has_caregiver: bool,
    pub single: bool,
    pub has_child: bool,
    pub education: bool,
    pub divorced: bool,
    pub worsening_points: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaregiverAgent {
    pub id: CaregiverId,
    pub age: u32,
    pub sex: Sex,
    /// Monthly income.
    pub income: f64,
    pub life_expectancy: u32,
    pub home: Option<DwellingId>,
    pub mobility: Mode,
    /// Meters.
    pub walking_radius: u32,
    pub efforts: f64,
    pub has_job: bool,
    pub skilled_job: bool,
    pub single: bool,
    pub has_child: bool,
    pub education: bool,
    pub divorced: bool,
    pub supported: bool,
    /// Hours per day the caregiver can offer.
    pub hrs_support: f64,
    /// Uniform draw in `[0,1)`; the caregiver is walk-willing when it falls
    /// below the walk-willing share.
    pub walk_propensity: f64,
}

/// A patient and, when matched, their informal caregiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dyad {
    pub patient: PatientId,
    pub caregiver: Option<CaregiverId>,
}

/// Knobs of synthesis taken from the engine configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationParams {
    pub age_ref: u32,
    pub age_work: u32,
    pub age_gold: u32,
    pub base_income: f64,
    pub base_income_ret: f64,
    pub hrs_ass_max: f64,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            age_ref: 65,
            age_work: 15,
            age_gold: 75,
            base_income: 1200.0,
            base_income_ret: 700.0,
            hrs_ass_max: 12.0,
        }
    }
}

pub const INCOME_MIN: f64 = 400.0;
pub const INCOME_MAX: f64 = 3000.0;
pub const LIFE_EXPECTANCY: (u32, u32) = (20, 50);
pub const WALKING_RADIUS_MAX: u32 = 1500;
pub const HRS_SUPPORT_MIN: f64 = 2.0;
/// Oldest age drawn for the 75+ band.
const OLDEST_SPAN: u32 = 20;

/// Aging stage implied by age: five-year bands from `age_ref`, capped at 4.
pub fn stage_for_age(age: u32, age_ref: u32) -> u8 {
    (age.saturating_sub(age_ref) / 5).min(STAGES as u32 - 1) as u8
}

/// Care needed per day at `stage`, capped by the daily assistance maximum.
pub fn care_needed(stages: &StageTable, stage: u8, hrs_ass_max: f64) -> f64 {
    stages.stage(stage).base_assistance.min(hrs_ass_max)
}

/// Marks exactly `round(share * len)` entries, chosen by random permutation.
fn quota(rng: &mut ChaCha8Rng, len: usize, share: f64) -> Vec<bool> {
    let k = ((share * len as f64).round() as usize).min(len);
    let mut flags: Vec<bool> = (0..len).map(|i| i < k).collect();
    flags.shuffle(rng);
    flags
}

/// Categorical quotas by largest remainder, randomly permuted.
fn categorical<T: Copy>(rng: &mut ChaCha8Rng, len: usize, shares: &[(T, f64)]) -> Vec<T> {
    let total: f64 = shares.iter().map(|s| s.1).sum();
    let exact: Vec<f64> = shares.iter().map(|s| s.1 / total * len as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let mut missing = len - counts.iter().sum::<usize>();
    for i in order.into_iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }
    let mut out: Vec<T> = shares
        .iter()
        .zip(&counts)
        .flat_map(|(s, &c)| std::iter::repeat_n(s.0, c))
        .collect();
    out.shuffle(rng);
    out
}

fn income(rng: &mut ChaCha8Rng, base: f64) -> f64 {
    rng.random_range(0.5 * base..=1.5 * base)
        .clamp(INCOME_MIN, INCOME_MAX)
}

/// Draws `n` residents: elders become patients, working-age adults become
/// caregiver candidates.
pub fn synthesize(
    marginals: &DemographicMarginals,
    stages: &StageTable,
    n: usize,
    params: &PopulationParams,
    seed: u64,
) -> Result<(Vec<PatientAgent>, Vec<CaregiverAgent>), PopulationError> {
    marginals.validate()?;
    stages.validate()?;
    if n == 0 {
        return Err(PopulationError::EmptyPopulation);
    }
    let mut rng = seed::rng(seed);

    let n_elder = ((n as f64 * marginals.elderly_share()).round() as usize).min(n);
    let n_old = ((n as f64 * marginals.elderly_over_75).round() as usize).min(n_elder);
    let n_adult = n - n_elder;

    // Ages.
    let mut old_flags: Vec<bool> = (0..n_elder).map(|i| i < n_old).collect();
    old_flags.shuffle(&mut rng);
    let elder_ages: Vec<u32> = old_flags
        .iter()
        .map(|&old| {
            if old {
                rng.random_range(params.age_gold..params.age_gold + OLDEST_SPAN)
            } else {
                rng.random_range(params.age_ref..params.age_gold)
            }
        })
        .collect();
    let adult_ages: Vec<u32> = (0..n_adult)
        .map(|_| rng.random_range(params.age_work..params.age_ref))
        .collect();

    // Sex.
    let elder_female = quota(&mut rng, n_elder, marginals.female_share);
    let adult_female = quota(&mut rng, n_adult, marginals.female_share);

    // Mobility over the whole population.
    let modes = categorical(
        &mut rng,
        n,
        &[
            (Mode::Car, marginals.private_transport),
            (Mode::Public, marginals.public_transport),
            (Mode::Green, marginals.green_transport),
            (Mode::Walk, marginals.walk_share()),
        ],
    );

    let education = quota(&mut rng, n, marginals.adults_with_education);
    let divorced = quota(&mut rng, n, marginals.adults_divorced);
    // The single marginal is an elderly share, so each group gets its own quota.
    let single: Vec<bool> = quota(&mut rng, n_elder, marginals.elderly_single)
        .into_iter()
        .chain(quota(&mut rng, n_adult, marginals.elderly_single))
        .collect();
    let has_child = quota(&mut rng, n, marginals.has_child_share());

    // Employment by sex among working-age adults, skill among the employed.
    let mut has_job = vec![false; n_adult];
    for (female, share) in [
        (false, marginals.employment_males),
        (true, marginals.employment_females),
    ] {
        let members: Vec<usize> = (0..n_adult)
            .filter(|&i| adult_female[i] == female)
            .collect();
        let flags = quota(&mut rng, members.len(), share);
        for (&i, f) in members.iter().zip(flags) {
            has_job[i] = f;
        }
    }
    let employed: Vec<usize> = (0..n_adult).filter(|&i| has_job[i]).collect();
    let mut skilled = vec![false; n_adult];
    for (&i, f) in employed.iter().zip(quota(
        &mut rng,
        employed.len(),
        marginals.highly_skilled_jobs,
    )) {
        skilled[i] = f;
    }

    let sex = |f: bool| if f { Sex::F } else { Sex::M };
    let patients: Vec<PatientAgent> = (0..n_elder)
        .map(|i| {
            let stage = stage_for_age(elder_ages[i], params.age_ref);
            PatientAgent {
                id: PatientId(i as u32),
                age: elder_ages[i],
                sex: sex(elder_female[i]),
                income: income(&mut rng, params.base_income_ret),
                life_expectancy: rng.random_range(LIFE_EXPECTANCY.0..=LIFE_EXPECTANCY.1),
                home: None,
                mobility: modes[i],
                walking_radius: rng.random_range(0..=WALKING_RADIUS_MAX),
                aging_stage: stage,
                hrs_care_needed: care_needed(stages, stage, params.hrs_ass_max),
                has_caregiver: false,
                single: single[i],
                has_child: has_child[i],
                education: education[i],
                divorced: divorced[i],
                worsening_points: 0.0,
                alive: true,
            }
        })
        .collect();
    let support_max = params.hrs_ass_max.max(HRS_SUPPORT_MIN);
    let caregivers: Vec<CaregiverAgent> = (0..n_adult)
        .map(|i| {
            let g = n_elder + i;
            CaregiverAgent {
                id: CaregiverId(i as u32),
                age: adult_ages[i],
                sex: sex(adult_female[i]),
                income: income(&mut rng, params.base_income),
                life_expectancy: rng.random_range(LIFE_EXPECTANCY.0..=LIFE_EXPECTANCY.1),
                home: None,
                mobility: modes[g],
                walking_radius: rng.random_range(0..=WALKING_RADIUS_MAX),
                efforts: 0.0,
                has_job: has_job[i],
                skilled_job: skilled[i],
                single: single[g],
                has_child: has_child[g],
                education: education[g],
                divorced: divorced[g],
                supported: false,
                hrs_support: rng.random_range(HRS_SUPPORT_MIN..=support_max),
                walk_propensity: rng.random::<f64>(),
            }
        })
        .collect();
    Ok((patients, caregivers))
}

/// Places patients, then caregivers, uniformly at random over inhabited
/// dwellings. Returns the dwellings that now host someone aged `age_gold`+.
pub fn assign_homes(
    patients: &mut [PatientAgent],
    caregivers: &mut [CaregiverAgent],
    net: &RoadNetwork,
    age_gold: u32,
    seed: u64,
) -> Result<BTreeSet<DwellingId>, PopulationError> {
    let homes: Vec<DwellingId> = net
        .dwellings()
        .iter()
        .filter(|d| d.inhabited)
        .map(|d| d.id)
        .collect();
    if homes.is_empty() {
        return Err(PopulationError::NoDwellings);
    }
    let mut rng = seed::rng(seed);
    let mut elder = BTreeSet::new();
    for p in patients.iter_mut() {
        let h = homes[rng.random_range(0..homes.len())];
        p.home = Some(h);
        if p.age >= age_gold {
            elder.insert(h);
        }
    }
    for c in caregivers.iter_mut() {
        c.home = Some(homes[rng.random_range(0..homes.len())]);
    }
    Ok(elder)
}

fn home_node(net: &RoadNetwork, home: Option<DwellingId>) -> Option<NodeId> {
    home.and_then(|h| net.dwelling(h)).map(|d| d.node)
}

/// Greedy matching: patients by descending severity (then id) each take the
/// nearest unmatched caregiver by walking network distance (ties by id).
/// Patients with no reachable candidate stay unmatched.
pub fn form_dyads(
    net: &RoadNetwork,
    patients: &mut [PatientAgent],
    caregivers: &mut [CaregiverAgent],
) -> Result<Vec<Dyad>, PopulationError> {
    let mut order: Vec<usize> = (0..patients.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(patients[i].aging_stage), patients[i].id));

    let cg_nodes: Vec<Option<NodeId>> = caregivers.iter().map(|c| home_node(net, c.home)).collect();
    let mut by_id: Vec<usize> = (0..caregivers.len()).collect();
    by_id.sort_by_key(|&j| caregivers[j].id);

    let mut taken = vec![false; caregivers.len()];
    let mut trees: BTreeMap<NodeId, SearchTree> = BTreeMap::new();
    let mut assignment: BTreeMap<PatientId, Option<CaregiverId>> = BTreeMap::new();

    for i in order {
        let mut best: Option<(f64, usize)> = None;
        if let Some(origin) = home_node(net, patients[i].home) {
            if let std::collections::btree_map::Entry::Vacant(e) = trees.entry(origin) {
                e.insert(net.distances_from(origin, Mode::Walk, f64::INFINITY)?);
            }
            let tree = &trees[&origin];
            for &j in &by_id {
                if taken[j] {
                    continue;
                }
                let Some(d) = cg_nodes[j].and_then(|n| tree.cost(net, n)) else {
                    continue;
                };
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
        }
        let cg = best.map(|(_, j)| {
            taken[j] = true;
            caregivers[j].supported = true;
            caregivers[j].id
        });
        patients[i].has_caregiver = cg.is_some();
        assignment.insert(patients[i].id, cg);
    }
    Ok(assignment
        .into_iter()
        .map(|(patient, caregiver)| Dyad { patient, caregiver })
        .collect())
}

/// A synthesised, housed and matched population.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub patients: Vec<PatientAgent>,
    pub caregivers: Vec<CaregiverAgent>,
    pub dyads: Vec<Dyad>,
    /// Dwellings hosting someone aged 75+.
    pub elder_dwellings: BTreeSet<DwellingId>,
}

impl Population {
    /// Synthesis, home assignment and dyad formation from one seed.
    pub fn build(
        net: &RoadNetwork,
        marginals: &DemographicMarginals,
        stages: &StageTable,
        n: usize,
        params: &PopulationParams,
        seed: u64,
    ) -> Result<Self, PopulationError> {
        let (mut patients, mut caregivers) =
            synthesize(marginals, stages, n, params, seed::derive(seed, &[0]))?;
        let elder_dwellings = assign_homes(
            &mut patients,
            &mut caregivers,
            net,
            params.age_gold,
            seed::derive(seed, &[1]),
        )?;
        let dyads = form_dyads(net, &mut patients, &mut caregivers)?;
        Ok(Population {
            patients,
            caregivers,
            dyads,
            elder_dwellings,
        })
    }
}

/// Target and realised value of one marginal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareCheck {
    pub key: &'static str,
    pub target: f64,
    pub realized: f64,
}

fn share(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Realised shares for every marginal that drives synthesis.
pub fn realized_shares(
    m: &DemographicMarginals,
    patients: &[PatientAgent],
    caregivers: &[CaregiverAgent],
    age_gold: u32,
) -> Vec<ShareCheck> {
    let n = patients.len() + caregivers.len();
    let all_flags = |f: &dyn Fn(&PatientAgent) -> bool, g: &dyn Fn(&CaregiverAgent) -> bool| {
        share(
            patients.iter().filter(|p| f(p)).count() + caregivers.iter().filter(|c| g(c)).count(),
            n,
        )
    };
    let mode_share = |mode: Mode| all_flags(&|p| p.mobility == mode, &|c| c.mobility == mode);
    let by_sex = |sex: Sex| -> f64 {
        let group: Vec<&CaregiverAgent> = caregivers.iter().filter(|c| c.sex == sex).collect();
        share(group.iter().filter(|c| c.has_job).count(), group.len())
    };
    let employed: Vec<&CaregiverAgent> = caregivers.iter().filter(|c| c.has_job).collect();
    vec![
        ShareCheck {
            key: "elderly_adults_ratio",
            target: m.elderly_adults_ratio,
            realized: if caregivers.is_empty() {
                0.0
            } else {
                patients.len() as f64 / caregivers.len() as f64
            },
        },
        ShareCheck {
            key: "elderly_over_75",
            target: m.elderly_over_75,
            realized: share(patients.iter().filter(|p| p.age >= age_gold).count(), n),
        },
        ShareCheck {
            key: "elderly_single",
            target: m.elderly_single,
            realized: share(patients.iter().filter(|p| p.single).count(), patients.len()),
        },
        ShareCheck {
            key: "adults_with_education",
            target: m.adults_with_education,
            realized: all_flags(&|p| p.education, &|c| c.education),
        },
        ShareCheck {
            key: "adults_divorced",
            target: m.adults_divorced,
            realized: all_flags(&|p| p.divorced, &|c| c.divorced),
        },
        ShareCheck {
            key: "employment_males",
            target: m.employment_males,
            realized: by_sex(Sex::M),
        },
        ShareCheck {
            key: "employment_females",
            target: m.employment_females,
            realized: by_sex(Sex::F),
        },
        ShareCheck {
            key: "highly_skilled_jobs",
            target: m.highly_skilled_jobs,
            realized: share(
                employed.iter().filter(|c| c.skilled_job).count(),
                employed.len(),
            ),
        },
        ShareCheck {
            key: "private_transport",
            target: m.private_transport,
            realized: mode_share(Mode::Car),
        },
        ShareCheck {
            key: "public_transport",
            target: m.public_transport,
            realized: mode_share(Mode::Public),
        },
        ShareCheck {
            key: "green_transport",
            target: m.green_transport,
            realized: mode_share(Mode::Green),
        },
        ShareCheck {
            key: "walk_remainder",
            target: m.walk_share(),
            realized: mode_share(Mode::Walk),
        },
        ShareCheck {
            key: "has_child",
            target: m.has_child_share(),
            realized: all_flags(&|p| p.has_child, &|c| c.has_child),
        },
        ShareCheck {
            key: "female_share",
            target: m.female_share,
            realized: all_flags(&|p| p.sex == Sex::F, &|c| c.sex == Sex::F),
        },
    ]
}

fn opt_id(h: Option<DwellingId>) -> String {
    h.map(|d| d.to_string()).unwrap_or_default()
}

fn sex_token(s: Sex) -> &'static str {
    match s {
        Sex::M => "M",
        Sex::F => "F",
    }
}

pub fn write_patients<W: Write>(writer: W, patients: &[PatientAgent]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "id",
        "age",
        "sex",
        "income",
        "life_expectancy",
        "home",
        "mobility",
        "walking_radius",
        "aging_stage",
        "hrs_care_needed",
        "has_caregiver",
        "single",
        "has_child",
        "education",
        "divorced",
    ])?;
    for p in patients {
        w.write_record([
            p.id.0.to_string(),
            p.age.to_string(),
            sex_token(p.sex).to_string(),
            fmt_f64(p.income),
            p.life_expectancy.to_string(),
            opt_id(p.home),
            p.mobility.to_string(),
            p.walking_radius.to_string(),
            p.aging_stage.to_string(),
            fmt_f64(p.hrs_care_needed),
            fmt_bool(p.has_caregiver).to_string(),
            fmt_bool(p.single).to_string(),
            fmt_bool(p.has_child).to_string(),
            fmt_bool(p.education).to_string(),
            fmt_bool(p.divorced).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_caregivers<W: Write>(writer: W, caregivers: &[CaregiverAgent]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "id",
        "age",
        "sex",
        "income",
        "life_expectancy",
        "home",
        "mobility",
        "walking_radius",
        "has_job",
        "skilled_job",
        "single",
        "has_child",
        "education",
        "divorced",
        "supported",
        "hrs_support",
        "walk_propensity",
    ])?;
    for c in caregivers {
        w.write_record([
            c.id.0.to_string(),
            c.age.to_string(),
            sex_token(c.sex).to_string(),
            fmt_f64(c.income),
            c.life_expectancy.to_string(),
            opt_id(c.home),
            c.mobility.to_string(),
            c.walking_radius.to_string(),
            fmt_bool(c.has_job).to_string(),
            fmt_bool(c.skilled_job).to_string(),
            fmt_bool(c.single).to_string(),
            fmt_bool(c.has_child).to_string(),
            fmt_bool(c.education).to_string(),
            fmt_bool(c.divorced).to_string(),
            fmt_bool(c.supported).to_string(),
            fmt_f64(c.hrs_support),
            fmt_f64(c.walk_propensity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dyads<W: Write>(writer: W, dyads: &[Dyad]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["patient", "caregiver"])?;
    for d in dyads {
        w.write_record([
            d.patient.0.to_string(),
            d.caregiver.map(|c| c.0.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
