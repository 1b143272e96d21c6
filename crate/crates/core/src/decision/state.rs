//! Event-sourced trial state. Every change goes through [`TrialState::append`];
//! folding the log with [`TrialState::replay`] rebuilds the same state.

use serde::{Deserialize, Serialize};

use super::config::DesignConfig;
use super::engine::DoseView;
use super::DecisionError;
use crate::bayes::{DoseDataTable, IMomHyperparams, McmcConfig};
use crate::{DoseGrid, DosePair, Level, ModelId, UtilityParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything fixed at trial creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialSettings {
    pub design: DesignConfig,
    pub raw_a: Vec<f64>,
    pub raw_b: Vec<f64>,
    pub utility: UtilityParams,
    pub imom: IMomHyperparams,
    /// Sampler lengths; `seed` is the trial's root seed.
    pub mcmc: McmcConfig,
    /// Adaptive cohort division.
    pub acd: bool,
}

impl TrialSettings {
    pub fn validate(&self) -> Result<DoseGrid, DecisionError> {
        self.design.validate()?;
        self.utility.validate()?;
        self.imom.validate()?;
        self.mcmc.validate()?;
        if self.utility.p_t != self.design.p_t {
            return Err(DecisionError::Validation {
                field: "pT",
                message: "utility and design toxicity ceilings differ".into(),
            });
        }
        Ok(DoseGrid::standardize(&self.raw_a, &self.raw_b)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Stage {
    /// Diagonal run-in.
    RunIn,
    Adaptive,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DecisionKind {
    Escalate,
    Treat,
    DivideCohorts,
    InsertDose,
    TerminateCohort,
    TerminateTrial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Decision {
    pub kind: DecisionKind,
    /// Doses the next cohort(s) receive.
    pub doses: Vec<DosePair>,
    /// Rules that fired, in order.
    pub rationale: Vec<String>,
}

/// Posterior quantities recorded with a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitSummary {
    pub model_posteriors: [f64; 4],
    pub p3: f64,
    pub p4: f64,
    pub selected: ModelId,
    pub bodc_mean: Option<DosePair>,
    pub r_hat: Option<f64>,
    /// Radius of the credible disc around `bodc_mean`.
    pub disc_radius: Option<f64>,
    pub insert: Option<bool>,
    /// Every dose still on offer after the decision.
    #[serde(default)]
    pub per_dose: Vec<DoseView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum EventPayload {
    TrialCreated { settings: TrialSettings },
    CohortOpened { cohort: u32, dose: DosePair, capacity: u32 },
    PatientsEnrolled { cohort: u32, count: u32 },
    /// Stops further enrollment; the cohort still awaits outcomes.
    CohortClosed { cohort: u32 },
    OutcomesRecorded { cohort: u32, dose: DosePair, y: u32, z: u32, n: u32 },
    DecisionIssued { decision: Decision, summary: Option<FitSummary>, seed: u64 },
    DoseExcluded { dose: DosePair },
    DoseInserted { dose: DosePair },
    StageChanged { stage: Stage },
    TrialClosed { selection: Option<DosePair>, early: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEvent {
    pub seq: u64,
    pub time: f64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Cohort {
    pub id: u32,
    pub dose: DosePair,
    pub capacity: u32,
    pub enrolled: u32,
    pub completed: bool,
}

impl Cohort {
    pub fn is_enrolling(&self) -> bool {
        !self.completed && self.enrolled < self.capacity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialState {
    pub settings: TrialSettings,
    pub grid: DoseGrid,
    /// Outcomes of completed patients.
    pub data: DoseDataTable,
    /// Patients assigned per dose, including those still in follow-up.
    pub assigned: Vec<(DosePair, u32)>,
    pub stage: Stage,
    pub n1: u32,
    pub n2: u32,
    pub cohorts: Vec<Cohort>,
    pub decisions: u32,
    pub last_decision: Option<Decision>,
    pub selection: Option<DosePair>,
    pub terminated_early: bool,
    pub events: Vec<TrialEvent>,
}

impl TrialState {
    /// Starts a trial: logs creation and the first cohort at the lowest combination.
    pub fn create(settings: TrialSettings, time: f64) -> Result<Self, DecisionError> {
        let grid = settings.validate()?;
        let mut s = Self::empty(settings.clone(), grid);
        s.append(time, EventPayload::TrialCreated { settings })?;
        let dose = s.grid.point(Level::new(0, 0));
        s.open_cohort(time, dose)?;
        Ok(s)
    }

    fn empty(settings: TrialSettings, grid: DoseGrid) -> Self {
        Self {
            settings,
            grid,
            data: DoseDataTable::new(),
            assigned: Vec::new(),
            stage: Stage::RunIn,
            n1: 0,
            n2: 0,
            cohorts: Vec::new(),
            decisions: 0,
            last_decision: None,
            selection: None,
            terminated_early: false,
            events: Vec::new(),
        }
    }

    /// Rebuilds a state by folding an event log.
    pub fn replay(events: &[TrialEvent]) -> Result<Self, DecisionError> {
        let first = events.first().ok_or_else(|| DecisionError::Replay("empty event log".into()))?;
        let EventPayload::TrialCreated { settings } = &first.payload else {
            return Err(DecisionError::Replay("log must start with TrialCreated".into()));
        };
        let grid = settings.validate()?;
        let mut s = Self::empty(settings.clone(), grid);
        for (i, e) in events.iter().enumerate() {
            if e.seq != i as u64 + 1 {
                return Err(DecisionError::Replay(format!("event {} has seq {}", i + 1, e.seq)));
            }
            s.append(e.time, e.payload.clone())?;
        }
        Ok(s)
    }

    /// Applies one event and records it.
    pub fn append(&mut self, time: f64, payload: EventPayload) -> Result<(), DecisionError> {
        self.apply(&payload)?;
        let seq = self.events.len() as u64 + 1;
        self.events.push(TrialEvent { seq, time, payload });
        Ok(())
    }

    fn apply(&mut self, payload: &EventPayload) -> Result<(), DecisionError> {
        if self.stage == Stage::Closed {
            return Err(DecisionError::Closed);
        }
        let created = !self.events.is_empty();
        match payload {
            EventPayload::TrialCreated { .. } if created => {
                return Err(DecisionError::Replay("duplicate TrialCreated".into()))
            }
            EventPayload::TrialCreated { .. } => {}
            _ if !created => return Err(DecisionError::Replay("log must start with TrialCreated".into())),
            EventPayload::CohortOpened { cohort, dose, capacity } => {
                if *cohort as usize != self.cohorts.len() {
                    return Err(DecisionError::Replay(format!("unexpected cohort id {cohort}")));
                }
                self.level_of(dose)?;
                if *capacity == 0 || *capacity > self.remaining_capacity() {
                    return Err(DecisionError::Capacity(*capacity));
                }
                self.cohorts.push(Cohort {
                    id: *cohort,
                    dose: *dose,
                    capacity: *capacity,
                    enrolled: 0,
                    completed: false,
                });
            }
            EventPayload::PatientsEnrolled { cohort, count } => {
                let stage = self.stage;
                let c = self.cohort_mut(*cohort)?;
                if !c.is_enrolling() || c.enrolled + count > c.capacity {
                    return Err(DecisionError::Capacity(*count));
                }
                c.enrolled += count;
                let dose = c.dose;
                match self.assigned.iter_mut().find(|(d, _)| *d == dose) {
                    Some((_, n)) => *n += count,
                    None => self.assigned.push((dose, *count)),
                }
                if stage == Stage::RunIn {
                    self.n1 += count;
                } else {
                    self.n2 += count;
                }
            }
            EventPayload::CohortClosed { cohort } => {
                let c = self.cohort_mut(*cohort)?;
                c.capacity = c.enrolled;
                // nobody to follow up
                c.completed |= c.enrolled == 0;
            }
            EventPayload::OutcomesRecorded { cohort, dose, y, z, n } => {
                let c = self.cohort_mut(*cohort)?;
                if c.completed || c.dose != *dose || c.enrolled != *n || *n == 0 {
                    return Err(DecisionError::Replay(format!(
                        "outcomes for cohort {cohort} do not match its enrollment"
                    )));
                }
                self.data.record(*dose, *y, *z, *n)?;
                self.cohorts[*cohort as usize].completed = true;
            }
            EventPayload::DecisionIssued { decision, .. } => {
                self.decisions += 1;
                self.last_decision = Some(decision.clone());
            }
            EventPayload::DoseExcluded { dose } => {
                let l = self.level_of(dose)?;
                self.grid.exclude_from(l);
            }
            EventPayload::DoseInserted { dose } => {
                self.grid = self.grid.expand(*dose)?;
            }
            EventPayload::StageChanged { stage } => self.stage = *stage,
            EventPayload::TrialClosed { selection, early } => {
                self.stage = Stage::Closed;
                self.selection = *selection;
                self.terminated_early = *early;
            }
        }
        Ok(())
    }

    fn cohort_mut(&mut self, id: u32) -> Result<&mut Cohort, DecisionError> {
        self.cohorts.get_mut(id as usize).ok_or(DecisionError::UnknownCohort(id))
    }

    pub fn level_of(&self, dose: &DosePair) -> Result<Level, DecisionError> {
        self.grid
            .level_of(dose)
            .ok_or_else(|| DecisionError::Replay(format!("dose ({}, {}) is not on the grid", dose.a, dose.b)))
    }

    /// Patients assigned to `dose` so far (enrolled, completed or not).
    pub fn assigned_at(&self, dose: &DosePair) -> u32 {
        self.assigned.iter().find(|(d, _)| d == dose).map_or(0, |(_, n)| *n)
    }

    pub fn is_tried(&self, dose: &DosePair) -> bool {
        self.assigned_at(dose) > 0
    }

    pub fn total_assigned(&self) -> u32 {
        self.n1 + self.n2
    }

    /// Slots not yet promised to any cohort.
    pub fn remaining_capacity(&self) -> u32 {
        let promised: u32 = self.cohorts.iter().map(|c| c.capacity).sum();
        self.settings.design.max_n.saturating_sub(promised)
    }

    pub fn open_cohorts(&self) -> impl Iterator<Item = &Cohort> {
        self.cohorts.iter().filter(|c| !c.completed)
    }

    pub fn enrolling_cohorts(&self) -> impl Iterator<Item = &Cohort> {
        self.cohorts.iter().filter(|c| c.is_enrolling())
    }

    pub fn last_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }

    /// Opens a cohort at `dose` sized to the design, capped by remaining
    /// capacity. Returns `None` when capacity is exhausted or a cohort is
    /// already enrolling at that dose.
    pub fn open_cohort(&mut self, time: f64, dose: DosePair) -> Result<Option<u32>, DecisionError> {
        if self.enrolling_cohorts().any(|c| c.dose == dose) {
            return Ok(None);
        }
        let capacity = self.settings.design.cohort_size.min(self.remaining_capacity());
        if capacity == 0 {
            return Ok(None);
        }
        let id = self.cohorts.len() as u32;
        self.append(time, EventPayload::CohortOpened { cohort: id, dose, capacity })?;
        Ok(Some(id))
    }
}
