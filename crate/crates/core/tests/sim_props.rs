//! Whole-trial behaviour of the simulator on short designs.

use aaa_core::bayes::McmcConfig;
use aaa_core::decision::{verify_log, DecisionKind, EventPayload, TrialSettings, TrialState};
use aaa_core::sim::{duration_comparison, replicate_seed, run_replicates, run_trial, DesignSpec, ScenarioSpec, TimeModel, TrueEfficacy};
use aaa_core::{DosePair, ToxicityParams};
use proptest::prelude::*;

fn scenario(tox: (f64, f64, f64), beta: [f64; 5]) -> ScenarioSpec {
    ScenarioSpec {
        label: "test".into(),
        description: String::new(),
        raw_a: vec![1.0, 2.0, 3.0, 4.0],
        raw_b: vec![1.0, 2.0, 3.0, 4.0],
        true_tox: ToxicityParams {
            alpha0: tox.0,
            alpha1: tox.1,
            alpha2: tox.2,
        },
        true_eff: TrueEfficacy { beta, beta5: 0.0 },
        true_bodc: None,
    }
}

fn short(scn: &ScenarioSpec, n: u32, acd: bool) -> (TrialSettings, TimeModel) {
    let mut d = DesignSpec::default();
    d.design.max_n = n;
    let mut s = d.settings(scn, acd, 0).unwrap();
    s.mcmc = McmcConfig::with_length(1_500, 500, 0);
    (s, d.time)
}

#[test]
fn replicates_do_not_depend_on_thread_count() {
    let scn = scenario((-2.0, 1.0, 1.0), [0.0, 1.5, 1.5, 0.0, 0.0]);
    let (s, t) = short(&scn, 18, true);
    let (oc1, r1) = run_replicates(&scn, &s, &t, 3, 11, 1).unwrap();
    let (oc3, r3) = run_replicates(&scn, &s, &t, 3, 11, 3).unwrap();
    assert_eq!(r1, r3);
    assert_eq!(serde_json::to_string(&oc1).unwrap(), serde_json::to_string(&oc3).unwrap());
}

#[test]
fn single_replicate_is_the_plain_trial() {
    let scn = scenario((-2.0, 1.0, 1.0), [0.0, 1.5, 1.5, 0.0, 0.0]);
    let (s, t) = short(&scn, 12, true);
    let (_, recs) = run_replicates(&scn, &s, &t, 1, 5, 1).unwrap();
    assert_eq!(recs, vec![run_trial(&scn, &s, &t, replicate_seed(5, 0))]);
}

#[test]
fn without_toxicity_division_changes_nothing() {
    let scn = scenario((-30.0, 0.1, 0.1), [0.0, 1.0, 1.0, 0.0, 0.0]);
    let (s, t) = short(&scn, 18, true);
    let cmp = duration_comparison(&scn, &s, &t, 3, 21, 1).unwrap();
    assert_eq!(cmp.failed, 0);
    for p in &cmp.pairs {
        assert_eq!(p.divisions, 0);
        assert_eq!(p.with_acd, p.without_acd, "seed {}", p.seed);
    }
}

#[test]
fn run_in_walks_the_diagonal_when_everything_is_safe() {
    let scn = scenario((-30.0, 0.1, 0.1), [-1.0, 2.0, 2.0, 0.0, 0.0]);
    let (s, t) = short(&scn, 15, true);
    let rec = run_trial(&scn, &s, &t, 3);
    assert!(rec.error.is_none(), "{:?}", rec.error);
    let grid = scn.grid().unwrap();
    let opened: Vec<DosePair> = rec
        .events
        .iter()
        .filter_map(|e| match e.payload {
            EventPayload::CohortOpened { dose, .. } => Some(dose),
            _ => None,
        })
        .collect();
    let diag: Vec<DosePair> = (0..4).map(|i| grid.point(aaa_core::Level::new(i, i))).collect();
    assert_eq!(&opened[..4], &diag[..]);
}

#[test]
fn event_log_replays_and_detects_tampering() {
    let scn = scenario((-1.2, 1.2, 1.2), [0.0, 1.5, 1.5, 0.0, 0.0]);
    let (s, t) = short(&scn, 18, true);
    let rec = run_trial(&scn, &s, &t, 9);
    assert!(rec.error.is_none(), "{:?}", rec.error);
    let state = TrialState::replay(&rec.events).unwrap();
    assert_eq!(state.events, rec.events);
    assert_eq!(state.selection, rec.selection);
    assert_eq!(TrialState::replay(&state.events).unwrap(), state);
    assert!(verify_log(&rec.events).unwrap().is_empty());

    let mut forged = rec.events.clone();
    let i = forged
        .iter()
        .position(|e| matches!(e.payload, EventPayload::DecisionIssued { .. }))
        .unwrap();
    if let EventPayload::DecisionIssued { seed, .. } = &mut forged[i].payload {
        *seed ^= 1;
    }
    assert!(!verify_log(&forged).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn trials_respect_budget_and_exclusions(
        a0 in -3.0f64..0.5,
        slope in 0.3f64..2.5,
        b1 in -1.0f64..2.5,
        seed in 0u64..1_000,
        acd in any::<bool>(),
    ) {
        let scn = scenario((a0, slope, slope), [0.5, b1, 1.0, 0.0, 0.0]);
        let (s, t) = short(&scn, 24, acd);
        let rec = run_trial(&scn, &s, &t, seed);
        prop_assert!(rec.error.is_none(), "{:?}", rec.error);
        let total: u32 = rec.allocation.iter().map(|a| a.n).sum();
        prop_assert_eq!(total, rec.n_treated);
        prop_assert!(rec.n_treated <= 24);
        if !acd {
            prop_assert_eq!(rec.divisions, 0);
        }
        let mut excluded: Vec<DosePair> = Vec::new();
        for e in &rec.events {
            match &e.payload {
                EventPayload::DoseExcluded { dose } => excluded.push(*dose),
                EventPayload::CohortOpened { dose, .. } => {
                    prop_assert!(!excluded.iter().any(|x| x.dominated_by(dose)), "cohort at {:?} above {:?}", dose, excluded);
                }
                EventPayload::DecisionIssued { decision, .. } if decision.kind == DecisionKind::TerminateTrial => {
                    prop_assert!(rec.early_termination);
                }
                _ => {}
            }
        }
        if let Some(sel) = rec.selection {
            prop_assert!(!excluded.iter().any(|x| x.dominated_by(&sel)));
        }
    }
}
