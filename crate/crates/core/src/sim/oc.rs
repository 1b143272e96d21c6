//! Replicate runs and their operating characteristics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trial::{run_trial, TrialRecord};
use super::{ScenarioSpec, SimError, TimeModel};
use crate::bayes::{N_PARAMS, PARAM_NAMES};
use crate::decision::TrialSettings;
use crate::seed::derive_seed;
use crate::{DosePair, Level, ModelId};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Sample mean and (n-1) standard deviation; NaN when empty.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoseOc {
    pub level: Level,
    pub raw: DosePair,
    pub selection_pct: f64,
    pub allocation_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperatingCharacteristics {
    pub scenario: String,
    pub acd: bool,
    pub replicates: usize,
    /// Replicates that ended in an engine error; excluded from everything below.
    pub failed: usize,
    pub doses: Vec<DoseOc>,
    pub inserted_selection_pct: f64,
    pub inserted_allocation_pct: f64,
    pub none_selection_pct: f64,
    pub insertion_rate_pct: f64,
    pub model_selection_pct: [f64; 4],
    pub posterior_means: [MeanSd; N_PARAMS],
    pub mean_selected_dose: Option<DosePair>,
    pub mean_selected_dose_raw: Option<DosePair>,
    pub mean_final_bodc: Option<DosePair>,
    pub mean_inserted_dose_raw: Option<DosePair>,
    pub duration_days: MeanSd,
    pub early_termination_pct: f64,
    pub mean_patients: f64,
}

fn mean_pair(xs: &[DosePair]) -> Option<DosePair> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    Some(DosePair::new(
        xs.iter().map(|p| p.a).sum::<f64>() / n,
        xs.iter().map(|p| p.b).sum::<f64>() / n,
    ))
}

/// Summarizes records in the order given.
pub fn aggregate(scenario: &ScenarioSpec, acd: bool, records: &[TrialRecord]) -> Result<OperatingCharacteristics, SimError> {
    let grid = scenario.grid()?;
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let reps = ok.len() as f64;
    let pct = |k: usize| if ok.is_empty() { f64::NAN } else { 100.0 * k as f64 / reps };
    let total_patients: u32 = ok.iter().map(|r| r.n_treated).sum();
    let alloc_pct = |n: u32| {
        if total_patients == 0 {
            0.0
        } else {
            100.0 * n as f64 / total_patients as f64
        }
    };
    let doses = grid
        .levels()
        .map(|l| {
            let selected = ok.iter().filter(|r| r.selection_level == Some(l)).count();
            let allocated: u32 = ok
                .iter()
                .flat_map(|r| &r.allocation)
                .filter(|a| a.level == Some(l))
                .map(|a| a.n)
                .sum();
            DoseOc {
                level: l,
                raw: grid.raw_point(l),
                selection_pct: pct(selected),
                allocation_pct: alloc_pct(allocated),
            }
        })
        .collect();
    let inserted_alloc: u32 = ok
        .iter()
        .flat_map(|r| &r.allocation)
        .filter(|a| a.level.is_none())
        .map(|a| a.n)
        .sum();
    let mut model_counts = [0usize; 4];
    for r in &ok {
        if let Some(m) = r.final_model {
            model_counts[m.index()] += 1;
        }
    }
    let mut posterior_means = [MeanSd::default(); N_PARAMS];
    for (i, slot) in posterior_means.iter_mut().enumerate() {
        let xs: Vec<f64> = ok.iter().filter_map(|r| r.posterior_means.map(|m| m[i])).collect();
        *slot = MeanSd::of(&xs);
    }
    let selected: Vec<DosePair> = ok.iter().filter_map(|r| r.selection).collect();
    let selected_raw: Vec<DosePair> = ok.iter().filter_map(|r| r.selection_raw).collect();
    let bodc: Vec<DosePair> = ok.iter().filter_map(|r| r.final_bodc).collect();
    let inserted_raw: Vec<DosePair> = ok
        .iter()
        .flat_map(|r| r.inserted.iter().map(|d| grid.to_raw(d)))
        .collect();
    let durations: Vec<f64> = ok.iter().map(|r| r.duration_days).collect();
    Ok(OperatingCharacteristics {
        scenario: scenario.label.clone(),
        acd,
        replicates: records.len(),
        failed: records.len() - ok.len(),
        doses,
        inserted_selection_pct: pct(ok.iter().filter(|r| r.selected_inserted()).count()),
        inserted_allocation_pct: alloc_pct(inserted_alloc),
        none_selection_pct: pct(ok.iter().filter(|r| r.selection.is_none()).count()),
        insertion_rate_pct: pct(ok.iter().filter(|r| !r.inserted.is_empty()).count()),
        model_selection_pct: model_counts.map(pct),
        posterior_means,
        mean_selected_dose: mean_pair(&selected),
        mean_selected_dose_raw: mean_pair(&selected_raw),
        mean_final_bodc: mean_pair(&bodc),
        mean_inserted_dose_raw: mean_pair(&inserted_raw),
        duration_days: MeanSd::of(&durations),
        early_termination_pct: pct(ok.iter().filter(|r| r.early_termination).count()),
        mean_patients: if ok.is_empty() { f64::NAN } else { total_patients as f64 / reps },
    })
}

/// Seed of replicate `rep`.
pub fn replicate_seed(root: u64, rep: usize) -> u64 {
    derive_seed(root, rep as u64)
}

fn in_pool<T: Send>(parallelism: usize, f: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| SimError::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs `n_reps` trials on `parallelism` threads. Records come back in
/// replicate order, so the summary does not depend on scheduling.
pub fn run_replicates(
    scenario: &ScenarioSpec,
    settings: &TrialSettings,
    time: &TimeModel,
    n_reps: usize,
    root_seed: u64,
    parallelism: usize,
) -> Result<(OperatingCharacteristics, Vec<TrialRecord>), SimError> {
    if n_reps == 0 {
        return Err(SimError::Config("need at least one replicate".into()));
    }
    let records: Vec<TrialRecord> = in_pool(parallelism, || {
        (0..n_reps)
            .into_par_iter()
            .map(|rep| run_trial(scenario, settings, time, replicate_seed(root_seed, rep)))
            .collect()
    })?;
    let oc = aggregate(scenario, settings.acd, &records)?;
    Ok((oc, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DurationPair {
    pub seed: u64,
    pub with_acd: f64,
    pub without_acd: f64,
    pub early_with_acd: bool,
    pub early_without_acd: bool,
    pub divisions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DurationComparison {
    pub pairs: Vec<DurationPair>,
    pub mean_with_acd: f64,
    pub mean_without_acd: f64,
    /// Mean of `without - with` over pairs.
    pub mean_saving: f64,
    pub acd_never_longer: bool,
    pub failed: usize,
}

/// Paired runs on shared seeds with and without cohort division.
pub fn duration_comparison(
    scenario: &ScenarioSpec,
    settings: &TrialSettings,
    time: &TimeModel,
    n_reps: usize,
    root_seed: u64,
    parallelism: usize,
) -> Result<DurationComparison, SimError> {
    let with = TrialSettings { acd: true, ..settings.clone() };
    let without = TrialSettings { acd: false, ..settings.clone() };
    let runs: Vec<(TrialRecord, TrialRecord)> = in_pool(parallelism, || {
        (0..n_reps)
            .into_par_iter()
            .map(|rep| {
                let seed = replicate_seed(root_seed, rep);
                (run_trial(scenario, &with, time, seed), run_trial(scenario, &without, time, seed))
            })
            .collect()
    })?;
    let failed = runs.iter().filter(|(a, b)| a.error.is_some() || b.error.is_some()).count();
    let pairs: Vec<DurationPair> = runs
        .iter()
        .filter(|(a, b)| a.error.is_none() && b.error.is_none())
        .map(|(a, b)| DurationPair {
            seed: a.seed,
            with_acd: a.duration_days,
            without_acd: b.duration_days,
            early_with_acd: a.early_termination,
            early_without_acd: b.early_termination,
            divisions: a.divisions,
        })
        .collect();
    let n = pairs.len() as f64;
    let mean = |f: &dyn Fn(&DurationPair) -> f64| pairs.iter().map(f).sum::<f64>() / n;
    Ok(DurationComparison {
        mean_with_acd: mean(&|p| p.with_acd),
        mean_without_acd: mean(&|p| p.without_acd),
        mean_saving: mean(&|p| p.without_acd - p.with_acd),
        acd_never_longer: pairs.iter().all(|p| p.with_acd <= p.without_acd),
        failed,
        pairs,
    })
}

fn fmt_pair(p: Option<DosePair>) -> String {
    p.map_or("-".into(), |p| format!("({:.3}, {:.3})", p.a, p.b))
}

/// Plain-text table: selection, allocation, insertion, model choice,
/// parameter estimates, optimal dose and duration.
pub fn render_table(oc: &OperatingCharacteristics) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let nj = oc.doses.iter().map(|d| d.level.j + 1).max().unwrap_or(0);
    let nk = oc.doses.iter().map(|d| d.level.k + 1).max().unwrap_or(0);
    let _ = writeln!(
        s,
        "Scenario: {}   replicates: {} (failed {})   ACD: {}",
        oc.scenario,
        oc.replicates,
        oc.failed,
        if oc.acd { "on" } else { "off" }
    );
    let matrix = |s: &mut String, title: &str, f: &dyn Fn(&DoseOc) -> f64| {
        let _ = writeln!(s, "\n{title}");
        let _ = write!(s, "{:>8}", "B \\ A");
        for j in 0..nj {
            let _ = write!(s, "{:>9}", j + 1);
        }
        let _ = writeln!(s);
        for k in (0..nk).rev() {
            let _ = write!(s, "{:>8}", k + 1);
            for j in 0..nj {
                let v = oc.doses.iter().find(|d| d.level == Level::new(j, k)).map_or(f64::NAN, f);
                let _ = write!(s, "{v:>9.1}");
            }
            let _ = writeln!(s);
        }
    };
    matrix(&mut s, "1. Selection (%)", &|d| d.selection_pct);
    let _ = writeln!(
        s,
        "   inserted {:.1}   none {:.1}",
        oc.inserted_selection_pct, oc.none_selection_pct
    );
    matrix(&mut s, "2. Allocation (%)", &|d| d.allocation_pct);
    let _ = writeln!(s, "   inserted {:.1}   mean patients {:.1}", oc.inserted_allocation_pct, oc.mean_patients);
    let _ = writeln!(s, "\n3. Dose insertion");
    let _ = writeln!(
        s,
        "   trials inserting {:.1}%   selecting an inserted dose {:.1}%   mean inserted dose (raw) {}",
        oc.insertion_rate_pct,
        oc.inserted_selection_pct,
        fmt_pair(oc.mean_inserted_dose_raw)
    );
    let _ = writeln!(s, "\n4. Model selection (%)");
    let _ = writeln!(
        s,
        "   {}",
        ModelId::ALL
            .iter()
            .map(|m| format!("{m} {:.1}", oc.model_selection_pct[m.index()]))
            .collect::<Vec<_>>()
            .join("   ")
    );
    let _ = writeln!(s, "\n5. Posterior means, mean (SD) across trials");
    for (name, ms) in PARAM_NAMES.iter().zip(&oc.posterior_means) {
        let _ = writeln!(s, "   {name:<7} {:>8.3} ({:.3})", ms.mean, ms.sd);
    }
    let _ = writeln!(s, "\n6. Optimal dose");
    let _ = writeln!(
        s,
        "   mean selected dose {} (raw {})   mean final estimate {}",
        fmt_pair(oc.mean_selected_dose),
        fmt_pair(oc.mean_selected_dose_raw),
        fmt_pair(oc.mean_final_bodc)
    );
    let _ = writeln!(s, "\n7. Duration and safety");
    let _ = writeln!(
        s,
        "   duration {:.1} days (SD {:.1})   early termination {:.1}%",
        oc.duration_days.mean, oc.duration_days.sd, oc.early_termination_pct
    );
    s
}
