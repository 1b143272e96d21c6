use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tokio::sync::{Mutex, RwLock};

use aaa_core::decision::{complete_cohort, enroll, Stage, TrialSettings, TrialState, SCHEMA_VERSION};
use aaa_core::dose::calibrate_eta;
use aaa_core::sim::McmcProfile;
use aaa_core::{CalibrationSpec, DoseGrid};

use crate::store::Store;
use crate::view::{CreateTrial, CreatedTrial, OutcomeRequest, RecommendationView, StateSnapshot, TrialView};
use crate::ApiError;

type Trial = Arc<Mutex<TrialState>>;

/// Shared service state. Each trial has its own lock, so writes to one trial
/// are serialized while other trials proceed.
pub struct AppState {
    store: Store,
    profile: McmcProfile,
    trials: RwLock<HashMap<String, Trial>>,
    keys: Mutex<HashMap<String, String>>,
}

impl AppState {
    /// Loads every trial found in `store`.
    pub fn load(store: Store, profile: McmcProfile) -> Result<Self, ApiError> {
        let mut trials = HashMap::new();
        for (id, events) in store.load_trials()? {
            let state = TrialState::replay(&events).map_err(|e| ApiError::Corrupt(format!("{id}: {e}")))?;
            trials.insert(id, Arc::new(Mutex::new(state)));
        }
        let keys = store.load_keys()?;
        Ok(Self {
            store,
            profile,
            trials: RwLock::new(trials),
            keys: Mutex::new(keys),
        })
    }

    async fn trial(&self, id: &str) -> Result<Trial, ApiError> {
        self.trials
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::TrialNotFound(id.into()))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/trials", post(create_trial))
        .route("/trials/{id}", get(get_trial))
        .route("/trials/{id}/recommendation", get(get_recommendation))
        .route("/trials/{id}/outcomes", post(record_outcomes))
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadJson(e.to_string()))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "schemaVersion": SCHEMA_VERSION }))
}

/// Enrolls every open cohort that still has free slots; cohorts are treated
/// as soon as they are opened.
fn fill_cohorts(state: &mut TrialState, time: f64) -> Result<(), ApiError> {
    let gaps: Vec<(u32, u32)> = state.enrolling_cohorts().map(|c| (c.id, c.capacity - c.enrolled)).collect();
    for (id, count) in gaps {
        enroll(state, id, count, time)?;
    }
    Ok(())
}

pub fn settings_of(req: &CreateTrial, profile: McmcProfile) -> Result<TrialSettings, ApiError> {
    req.design.validate()?;
    DoseGrid::standardize(&req.raw_a, &req.raw_b).map_err(aaa_core::decision::DecisionError::from)?;
    let utility = calibrate_eta(&CalibrationSpec {
        p_t: req.design.p_t,
        q1_star: req.calibration.q1,
        q2_star: req.calibration.q2,
        u_star: req.calibration.u,
    })
    .map_err(|e| ApiError::Validation {
        field: Some(e.field().map_or("calibration".into(), |f| format!("calibration.{f}"))),
        message: e.to_string(),
    })?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let settings = TrialSettings {
        design: req.design,
        raw_a: req.raw_a.clone(),
        raw_b: req.raw_b.clone(),
        utility,
        imom: req.imom.unwrap_or_default(),
        mcmc: req.mcmc.unwrap_or(profile).config(seed),
        acd: req.acd,
    };
    settings.validate()?;
    Ok(settings)
}

async fn create_trial(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<CreatedTrial>), ApiError> {
    let req: CreateTrial = parse(&body)?;
    let key = headers
        .get("idempotency-key")
        .and_then(|v| v.to_str().ok())
        .map(str::to_string);
    // holding the key table across creation makes a repeated key wait for the first
    let mut keys = app.keys.lock().await;
    if let Some(id) = key.as_ref().and_then(|k| keys.get(k)) {
        let trial = app.trial(id).await?;
        let view = RecommendationView::of(id, &*trial.lock().await);
        return Ok((
            StatusCode::OK,
            Json(CreatedTrial {
                schema_version: SCHEMA_VERSION,
                id: id.clone(),
                recommendation: view,
            }),
        ));
    }
    let settings = settings_of(&req, app.profile)?;
    let mut state = TrialState::create(settings, 0.0)?;
    fill_cohorts(&mut state, 0.0)?;
    let id = format!("t{:016x}", rand::random::<u64>());
    app.store.append(&id, &state.events)?;
    if let Some(k) = key {
        app.store.record_key(&k, &id)?;
        keys.insert(k, id.clone());
    }
    let view = RecommendationView::of(&id, &state);
    app.trials.write().await.insert(id.clone(), Arc::new(Mutex::new(state)));
    Ok((
        StatusCode::CREATED,
        Json(CreatedTrial {
            schema_version: SCHEMA_VERSION,
            id,
            recommendation: view,
        }),
    ))
}

async fn get_trial(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<TrialView>, ApiError> {
    let trial = app.trial(&id).await?;
    let state = trial.lock().await;
    Ok(Json(TrialView {
        schema_version: SCHEMA_VERSION,
        state: StateSnapshot::from(&*state),
        events: state.events.clone(),
        id,
    }))
}

async fn get_recommendation(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<RecommendationView>, ApiError> {
    let trial = app.trial(&id).await?;
    let view = RecommendationView::of(&id, &*trial.lock().await);
    Ok(Json(view))
}

/// Finds the open cohort an outcome report refers to.
fn target_cohort(state: &TrialState, req: &OutcomeRequest) -> Result<u32, ApiError> {
    if let Some(id) = req.cohort {
        return match state.cohorts.get(id as usize) {
            Some(c) if !c.completed => Ok(id),
            Some(_) => Err(ApiError::NoOpenCohort(format!("cohort {id} already has outcomes"))),
            None => Err(ApiError::NoOpenCohort(format!("no cohort {id}"))),
        };
    }
    let Some(raw) = req.dose else {
        return Err(ApiError::Validation {
            field: Some("cohort".into()),
            message: "name the cohort by id or by its raw dose".into(),
        });
    };
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
    state
        .open_cohorts()
        .find(|c| {
            let r = state.grid.to_raw(&c.dose);
            close(r.a, raw.a) && close(r.b, raw.b)
        })
        .map(|c| c.id)
        .ok_or_else(|| ApiError::NoOpenCohort(format!("no open cohort at dose ({}, {})", raw.a, raw.b)))
}

async fn record_outcomes(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<RecommendationView>, ApiError> {
    let req: OutcomeRequest = parse(&body)?;
    let trial = app.trial(&id).await?;
    let mut guard = trial.lock().await;
    if guard.stage == Stage::Closed {
        return Err(ApiError::TrialClosed);
    }
    let cohort = target_cohort(&guard, &req)?;
    let enrolled = guard.cohorts[cohort as usize].enrolled;
    if let Some(n) = req.n {
        if n != enrolled {
            return Err(ApiError::CohortSizeMismatch { enrolled, n });
        }
    }
    for (field, value) in [("y", req.y), ("z", req.z)] {
        if value > enrolled {
            return Err(ApiError::CountExceedsN { field, value, n: enrolled });
        }
    }
    let last = guard.last_time();
    let time = req.time.unwrap_or(last);
    if !time.is_finite() || time < last {
        return Err(ApiError::TimeGoesBackwards { time, last });
    }

    // fit on a copy so a failure leaves the trial untouched
    let mut next = guard.clone();
    let next = tokio::task::spawn_blocking(move || -> Result<TrialState, ApiError> {
        complete_cohort(&mut next, cohort, req.y, req.z, time)?;
        if next.stage != Stage::Closed {
            fill_cohorts(&mut next, time)?;
        }
        Ok(next)
    })
    .await
    .map_err(|e| ApiError::Inference(e.to_string()))??;
    app.store.append(&id, &next.events[guard.events.len()..])?;
    *guard = next;
    Ok(Json(RecommendationView::of(&id, &guard)))
}
