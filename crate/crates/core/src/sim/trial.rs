//! One virtual trial in continuous time.
//!
//! Each enrolled patient `i` owns an inter-arrival gap `g_i` and a pair of
//! latent uniforms, both drawn in enrollment order from their own streams.
//! The gap only runs down while some cohort is enrolling, which makes arrivals
//! that find no open slot equivalent to being turned away. Runs that differ
//! only in the cohort-division flag therefore share every gap and every
//! patient's outcome thresholds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{ArrivalProcess, ScenarioSpec, SimError, TimeModel};
use crate::bayes::{ModelFit, N_PARAMS};
use crate::decision::{
    complete_cohort, enroll, estimate_bodc, DecisionKind, EventPayload, SearchRegion, Stage, TrialEvent,
    TrialSettings, TrialState,
};
use crate::seed::derive_seed;
use crate::{DosePair, Level, ModelId};

const GAP_STREAM: u64 = 1;
const PATIENT_STREAM: u64 = 2;

/// Patients treated at one dose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Allocation {
    pub dose: DosePair,
    pub raw: DosePair,
    /// Level in the prespecified grid; `None` for inserted doses.
    pub level: Option<Level>,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialRecord {
    pub seed: u64,
    pub acd: bool,
    pub allocation: Vec<Allocation>,
    pub selection: Option<DosePair>,
    pub selection_raw: Option<DosePair>,
    pub selection_level: Option<Level>,
    pub inserted: Vec<DosePair>,
    pub divisions: u32,
    pub final_model: Option<ModelId>,
    /// Posterior means under the final model, in `alpha0, alpha1, alpha2, beta0..beta4` order.
    pub posterior_means: Option<[f64; N_PARAMS]>,
    /// Posterior-mean optimal dose at the end of the trial.
    pub final_bodc: Option<DosePair>,
    pub n_treated: u32,
    pub n1: u32,
    pub duration_days: f64,
    pub early_termination: bool,
    pub error: Option<String>,
    pub events: Vec<TrialEvent>,
}

impl TrialRecord {
    pub fn selected_inserted(&self) -> bool {
        self.selection.is_some() && self.selection_level.is_none()
    }
}

#[derive(Default)]
struct CohortClock {
    latents: Vec<(f64, f64)>,
    last_enrolled: f64,
    scheduled: bool,
}

struct Clock {
    gaps: ChaCha8Rng,
    exp: Exp<f64>,
    time: TimeModel,
}

impl Clock {
    fn next_gap(&mut self) -> f64 {
        match self.time.arrival_process {
            ArrivalProcess::Poisson => self.exp.sample(&mut self.gaps),
            ArrivalProcess::Fixed => 1.0 / self.time.accrual_rate_per_day,
        }
    }
}

/// Runs one trial to closure. Engine failures end the run early with `error` set.
pub fn run_trial(scenario: &ScenarioSpec, settings: &TrialSettings, time: &TimeModel, seed: u64) -> TrialRecord {
    let mut settings = settings.clone();
    settings.mcmc.seed = seed;
    let acd = settings.acd;
    let mut last_fit = None;
    let mut state = None;
    let result = simulate(scenario, settings, time, seed, &mut state, &mut last_fit);
    let duration = result.as_ref().copied().unwrap_or(f64::NAN);
    summarize(scenario, state, last_fit, seed, acd, duration, result.err())
}

fn simulate(
    scenario: &ScenarioSpec,
    settings: TrialSettings,
    time: &TimeModel,
    seed: u64,
    out: &mut Option<TrialState>,
    last_fit: &mut Option<ModelFit>,
) -> Result<f64, SimError> {
    time.validate()?;
    if settings.raw_a != scenario.raw_a || settings.raw_b != scenario.raw_b {
        return Err(SimError::Config("scenario and design dose levels differ".into()));
    }
    let mut clock = Clock {
        gaps: ChaCha8Rng::seed_from_u64(derive_seed(seed, GAP_STREAM)),
        exp: Exp::new(time.accrual_rate_per_day).map_err(|e| SimError::Config(e.to_string()))?,
        time: *time,
    };
    let mut patients = ChaCha8Rng::seed_from_u64(derive_seed(seed, PATIENT_STREAM));
    let state = out.insert(TrialState::create(settings, 0.0)?);
    let mut cohorts: Vec<CohortClock> = Vec::new();
    let mut pending: Vec<(f64, u32)> = Vec::new();
    let mut gap_left: Option<f64> = None;
    let mut round_robin = 0usize;
    let mut t = 0.0;

    while state.stage != Stage::Closed {
        cohorts.resize_with(state.cohorts.len(), CohortClock::default);
        let enrolling: Vec<u32> = state.enrolling_cohorts().map(|c| c.id).collect();
        let arrival = if enrolling.is_empty() {
            None
        } else {
            Some(t + *gap_left.get_or_insert_with(|| clock.next_gap()))
        };
        let completion = pending
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.1 .1.cmp(&b.1 .1)))
            .map(|(i, &(tc, id))| (i, tc, id));
        match (arrival, completion) {
            (Some(ta), c) if c.is_none_or(|(_, tc, _)| ta < tc) => {
                t = ta;
                gap_left = None;
                let id = enrolling[round_robin % enrolling.len()];
                round_robin += 1;
                let latent = (patients.random::<f64>(), patients.random::<f64>());
                let cc = &mut cohorts[id as usize];
                cc.latents.push(latent);
                cc.last_enrolled = t;
                enroll(state, id, 1, t)?;
            }
            (_, Some((i, tc, id))) => {
                if let (Some(ta), Some(g)) = (arrival, gap_left.as_mut()) {
                    *g = ta - tc;
                }
                t = tc;
                pending.swap_remove(i);
                let dose = state.cohorts[id as usize].dose;
                let (p, q) = (scenario.p_true(&dose), scenario.q_true(&dose));
                let lat = &cohorts[id as usize].latents;
                let y = lat.iter().filter(|l| l.0 < p).count() as u32;
                let z = lat.iter().filter(|l| l.1 < q).count() as u32;
                let step = complete_cohort(state, id, y, z, t)?;
                if let Some(f) = step.fit {
                    *last_fit = Some(f);
                }
            }
            (None, None) => return Err(SimError::Stalled(t)),
            (Some(_), None) => unreachable!("arrival arm covers this"),
        }
        cohorts.resize_with(state.cohorts.len(), CohortClock::default);
        for c in &state.cohorts {
            let cc = &mut cohorts[c.id as usize];
            if !c.completed && !c.is_enrolling() && !cc.scheduled {
                cc.scheduled = true;
                pending.push((cc.last_enrolled + time.follow_up_days, c.id));
            }
        }
    }
    Ok(t)
}

fn summarize(
    scenario: &ScenarioSpec,
    state: Option<TrialState>,
    fit: Option<ModelFit>,
    seed: u64,
    acd: bool,
    duration: f64,
    error: Option<SimError>,
) -> TrialRecord {
    let mut rec = TrialRecord {
        seed,
        acd,
        allocation: Vec::new(),
        selection: None,
        selection_raw: None,
        selection_level: None,
        inserted: Vec::new(),
        divisions: 0,
        final_model: None,
        posterior_means: None,
        final_bodc: None,
        n_treated: 0,
        n1: 0,
        duration_days: duration,
        early_termination: false,
        error: error.map(|e| e.to_string()),
        events: Vec::new(),
    };
    let Some(state) = state else { return rec };
    let base = scenario.grid().ok();
    let level_in_base = |d: &DosePair| base.as_ref().and_then(|g| g.level_of(d));
    rec.allocation = state
        .assigned
        .iter()
        .map(|&(dose, n)| Allocation {
            dose,
            raw: state.grid.to_raw(&dose),
            level: level_in_base(&dose),
            n,
        })
        .collect();
    rec.selection = state.selection;
    rec.selection_raw = state.selection.map(|d| state.grid.to_raw(&d));
    rec.selection_level = state.selection.as_ref().and_then(level_in_base);
    rec.inserted = state.grid.inserted.clone();
    rec.divisions = state
        .events
        .iter()
        .filter(|e| {
            matches!(&e.payload, EventPayload::DecisionIssued { decision, .. } if decision.kind == DecisionKind::DivideCohorts)
        })
        .count() as u32;
    rec.n_treated = state.total_assigned();
    rec.n1 = state.n1;
    rec.early_termination = state.terminated_early;
    if let Some(fit) = fit {
        let chain = fit.selected_chain();
        rec.final_model = Some(fit.selected);
        let mut means = [0.0; N_PARAMS];
        for (i, m) in means.iter_mut().enumerate() {
            *m = chain.posterior_mean(i);
        }
        rec.posterior_means = Some(means);
        let (lo, hi) = state.grid.search_region();
        let sample = estimate_bodc(&chain.draws, &state.settings.utility, &SearchRegion::new(lo, hi));
        rec.final_bodc = Some(sample.mean);
    }
    rec.events = state.events;
    rec
}
