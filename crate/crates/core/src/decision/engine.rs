//! Escalation rules: the diagonal run-in, the adaptive stage and the final pick.

use serde::{Deserialize, Serialize};

use super::bodc::{estimate_bodc, SearchRegion};
use super::config::DesignConfig;
use super::insertion::{clip_insertion, in_excluded_region, insertion_indicator, skips_untried};
use super::state::{Decision, DecisionKind, EventPayload, FitSummary, Stage, TrialState};
use super::DecisionError;
use crate::bayes::{Draw, ModelFit};
use crate::seed::derive_seed;
use crate::{DoseGrid, DosePair, Level, UtilityParams};

const COIN_STREAM: u64 = 0xC01F;

/// Posterior summaries of a single dose combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoseSummary {
    pub mean_utility: f64,
    pub mean_toxicity: f64,
    /// `Pr{p(x) > pT | data}`.
    pub prob_over_limit: f64,
    /// `Pr{U(x) > U0 | data}`.
    pub prob_acceptable: f64,
}

/// [`DoseSummary`] at one available grid dose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoseView {
    pub level: Level,
    pub dose: DosePair,
    pub raw: DosePair,
    #[serde(flatten)]
    pub summary: DoseSummary,
}

pub fn summarize_dose(draws: &[Draw], u: &UtilityParams, design: &DesignConfig, x: &DosePair) -> DoseSummary {
    let (mut su, mut sp, mut over, mut acc) = (0.0, 0.0, 0usize, 0usize);
    for d in draws {
        let p = d.tox.prob(x);
        let util = u.combine(p, d.eff.prob(x));
        su += util;
        sp += p;
        over += (p > design.p_t) as usize;
        acc += (util > design.u0) as usize;
    }
    let n = draws.len() as f64;
    DoseSummary {
        mean_utility: su / n,
        mean_toxicity: sp / n,
        prob_over_limit: over as f64 / n,
        prob_acceptable: acc as f64 / n,
    }
}

/// Toxic when `Pr{p(x) > pT | data} > xi`.
pub fn is_dose_toxic(draws: &[Draw], x: &DosePair, p_t: f64, xi: f64) -> bool {
    let over = draws.iter().filter(|d| d.tox.prob(x) > p_t).count();
    over as f64 / draws.len() as f64 > xi
}

/// Next run-in dose after `current` was found safe: up the diagonal, then
/// along agent A once agent B is at its top level. `None` ends the run-in.
pub fn stage1_next(grid: &DoseGrid, current: Level, toxic: bool) -> Option<Level> {
    let (nj, nk) = grid.dims();
    if toxic || current.j + 1 >= nj {
        return None;
    }
    let next = if current.k + 1 < nk && current.j == current.k {
        Level::new(current.j + 1, current.k + 1)
    } else {
        Level::new(current.j + 1, current.k)
    };
    grid.contains(next).then_some(next)
}

/// Threshold a tried dose's `Pr{U > U0}` must beat before it is reused while
/// untried neighbours remain.
pub fn reuse_threshold(design: &DesignConfig, n1: u32, n2: u32) -> f64 {
    let big_n2 = design.max_n.saturating_sub(n1);
    if big_n2 == 0 {
        return 0.0;
    }
    let left = big_n2.saturating_sub(n2) as f64 / big_n2 as f64;
    left.powf(design.omega)
}

/// A decision plus the state changes it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub decision: Decision,
    /// Events to log right after the decision (exclusions, stage change, insertion).
    pub effects: Vec<EventPayload>,
    pub summary: FitSummary,
}

struct Ctx<'a> {
    state: &'a TrialState,
    draws: &'a [Draw],
    grid: DoseGrid,
    rationale: Vec<String>,
    effects: Vec<EventPayload>,
}

impl Ctx<'_> {
    fn design(&self) -> &DesignConfig {
        &self.state.settings.design
    }

    fn toxic(&self, x: &DosePair) -> bool {
        is_dose_toxic(self.draws, x, self.design().p_t, self.design().xi)
    }

    fn summary(&self, x: &DosePair) -> DoseSummary {
        summarize_dose(self.draws, &self.state.settings.utility, self.design(), x)
    }

    fn tried(&self, l: Level) -> bool {
        self.state.is_tried(&self.grid.point(l))
    }

    fn finish(self, kind: DecisionKind, levels: &[Level], summary: FitSummary) -> Outcome {
        let doses = levels.iter().map(|&l| self.grid.point(l)).collect();
        self.finish_doses(kind, doses, summary)
    }

    fn finish_doses(self, kind: DecisionKind, doses: Vec<DosePair>, mut summary: FitSummary) -> Outcome {
        summary.per_dose = self
            .grid
            .available_levels()
            .map(|level| {
                let dose = self.grid.point(level);
                DoseView {
                    level,
                    dose,
                    raw: self.grid.to_raw(&dose),
                    summary: self.summary(&dose),
                }
            })
            .collect();
        Outcome {
            decision: Decision {
                kind,
                doses,
                rationale: self.rationale,
            },
            effects: self.effects,
            summary,
        }
    }
}

/// Highest posterior-mean utility; ties go to lower mean toxicity, then the
/// lower level sum, then the lower agent-A level.
fn best_level(ctx: &Ctx<'_>, levels: &[Level]) -> Option<(Level, DoseSummary)> {
    let mut best: Option<(Level, DoseSummary)> = None;
    for &l in levels {
        let s = ctx.summary(&ctx.grid.point(l));
        let better = match &best {
            None => true,
            Some((bl, bs)) => {
                s.mean_utility
                    .total_cmp(&bs.mean_utility)
                    .then(bs.mean_toxicity.total_cmp(&s.mean_toxicity))
                    .then(bl.sum().cmp(&l.sum()))
                    .then(bl.j.cmp(&l.j))
                    .is_gt()
            }
        };
        if better {
            best = Some((l, s));
        }
    }
    best
}

/// Decides what happens after the cohort at `completed` finished follow-up.
pub fn decide(state: &TrialState, fit: &ModelFit, completed: &DosePair, seed: u64) -> Result<Outcome, DecisionError> {
    if state.stage == Stage::Closed {
        return Err(DecisionError::Closed);
    }
    let current = state.level_of(completed)?;
    let mut summary = FitSummary {
        model_posteriors: fit.model_posteriors,
        p3: fit.p3,
        p4: fit.p4,
        selected: fit.selected,
        bodc_mean: None,
        r_hat: None,
        disc_radius: None,
        insert: None,
        per_dose: Vec::new(),
    };
    let mut ctx = Ctx {
        state,
        draws: &fit.selected_chain().draws,
        grid: state.grid.clone(),
        rationale: Vec::new(),
        effects: Vec::new(),
    };
    let toxic_current = ctx.toxic(completed);

    if state.stage == Stage::RunIn {
        if let Some(next) = stage1_next(&ctx.grid, current, toxic_current) {
            ctx.rationale.push(format!("run-in: {current} safe, escalate to {next}"));
            return Ok(ctx.finish(DecisionKind::Escalate, &[next], summary));
        }
        ctx.rationale.push(format!(
            "run-in complete at {current}{}",
            if toxic_current { " (toxic)" } else { "" }
        ));
        ctx.effects.push(EventPayload::StageChanged { stage: Stage::Adaptive });
    }

    if toxic_current && !ctx.grid.is_excluded(current) {
        ctx.grid.exclude_from(current);
        ctx.effects.push(EventPayload::DoseExcluded { dose: *completed });
        ctx.rationale.push(format!("{current} toxic: excluded with every dose above it"));
    }

    // insertion
    let (lo, hi) = ctx.grid.search_region();
    let sample = estimate_bodc(ctx.draws, &state.settings.utility, &SearchRegion::new(lo, hi));
    let assess = insertion_indicator(&sample, &ctx.grid, ctx.design().credible_c);
    summary.bodc_mean = Some(sample.mean);
    summary.r_hat = Some(assess.r_hat);
    summary.disc_radius = Some(assess.disc_radius);
    summary.insert = Some(assess.insert);
    if assess.insert {
        let cand = clip_insertion(&sample.mean, &ctx.grid);
        let raw = ctx.grid.to_raw(&cand);
        let blocked = if ctx.grid.level_of(&cand).is_some() {
            Some("already on the grid")
        } else if in_excluded_region(&cand, &ctx.grid) {
            Some("inside the excluded region")
        } else if ctx.toxic(&cand) {
            Some("deemed toxic")
        } else if skips_untried(&cand, &ctx.grid, |p| state.is_tried(p)) {
            Some("paused: an untried lower prespecified dose remains")
        } else {
            None
        };
        match blocked {
            Some(why) => ctx
                .rationale
                .push(format!("insertion at ({:.3}, {:.3}) skipped: {why}", raw.a, raw.b)),
            None => {
                ctx.rationale.push(format!(
                    "optimum confidently off-grid (r = {:.3}): insert ({:.3}, {:.3})",
                    assess.r_hat, raw.a, raw.b
                ));
                ctx.effects.push(EventPayload::DoseInserted { dose: cand });
                for c in state.enrolling_cohorts() {
                    ctx.effects.push(EventPayload::CohortClosed { cohort: c.id });
                }
                return Ok(ctx.finish_doses(DecisionKind::InsertDose, vec![cand], summary));
            }
        }
    }

    if !toxic_current {
        let (nj, nk) = ctx.grid.dims();
        let mut admissible: Vec<Level> = Vec::new();
        for j in current.j.saturating_sub(1)..=(current.j + 1).min(nj - 1) {
            for k in current.k.saturating_sub(1)..=(current.k + 1).min(nk - 1) {
                let l = Level::new(j, k);
                if j + k <= current.sum() + 1 && !ctx.grid.is_excluded(l) && !ctx.toxic(&ctx.grid.point(l)) {
                    admissible.push(l);
                }
            }
        }
        let threshold = reuse_threshold(ctx.design(), state.n1, state.n2);
        while let Some((l, s)) = best_level(&ctx, &admissible) {
            let untried_left = admissible.iter().any(|&a| !ctx.tried(a));
            if ctx.tried(l) && untried_left && s.prob_acceptable <= threshold {
                ctx.rationale.push(format!(
                    "{l} tried and Pr(U > U0) = {:.3} <= {threshold:.3}: set aside",
                    s.prob_acceptable
                ));
                admissible.retain(|&a| a != l);
                continue;
            }
            ctx.rationale
                .push(format!("{l} maximizes posterior mean utility ({:.3}) among safe neighbours", s.mean_utility));
            return Ok(ctx.finish(DecisionKind::Treat, &[l], summary));
        }
        ctx.rationale.push("no admissible neighbour".into());
    } else {
        let lower: Vec<Level> = [
            (current.j > 0).then(|| Level::new(current.j - 1, current.k)),
            (current.k > 0).then(|| Level::new(current.j, current.k - 1)),
        ]
        .into_iter()
        .flatten()
        .filter(|&l| !ctx.grid.is_excluded(l) && !ctx.tried(l) && !ctx.toxic(&ctx.grid.point(l)))
        .collect();
        match lower.len() {
            2 if !ctx.grid.is_prespecified(current) => {
                let (l, _) = best_level(&ctx, &lower).expect("two candidates");
                ctx.rationale.push(format!("inserted dose: de-escalate to the better of {} and {}", lower[0], lower[1]));
                return Ok(ctx.finish(DecisionKind::Treat, &[l], summary));
            }
            2 if state.settings.acd => {
                ctx.rationale.push(format!("divide cohort between {} and {}", lower[0], lower[1]));
                return Ok(ctx.finish(DecisionKind::DivideCohorts, &lower, summary));
            }
            2 => {
                let l = lower[(derive_seed(seed, COIN_STREAM) & 1) as usize];
                ctx.rationale.push(format!("de-escalate to {l} (random choice)"));
                return Ok(ctx.finish(DecisionKind::Treat, &[l], summary));
            }
            1 => {
                ctx.rationale.push(format!("de-escalate to {}", lower[0]));
                return Ok(ctx.finish(DecisionKind::Treat, &lower, summary));
            }
            _ => {}
        }
        if state.open_cohorts().next().is_some() {
            ctx.rationale.push("no untried lower dose: this cohort ends, others continue".into());
            return Ok(ctx.finish(DecisionKind::TerminateCohort, &[], summary));
        }
    }

    let safe: Vec<Level> = ctx
        .grid
        .available_levels()
        .filter(|&l| !ctx.toxic(&ctx.grid.point(l)))
        .collect();
    let tried: Vec<Level> = safe.iter().copied().filter(|&l| ctx.tried(l)).collect();
    let pool = if tried.is_empty() { &safe } else { &tried };
    match best_level(&ctx, pool) {
        Some((l, _)) => {
            ctx.rationale.push(format!("fall back to best safe dose {l}"));
            Ok(ctx.finish(DecisionKind::Treat, &[l], summary))
        }
        None => {
            ctx.rationale.push("no safe dose remains".into());
            Ok(ctx.finish(DecisionKind::TerminateTrial, &[], summary))
        }
    }
}

/// Final recommendation: the tried, non-excluded, safe dose with the highest
/// posterior mean utility (ties to lower mean toxicity).
pub fn select_final(state: &TrialState, fit: &ModelFit) -> Option<DosePair> {
    let draws = &fit.selected_chain().draws;
    let design = &state.settings.design;
    let mut best: Option<(DosePair, DoseSummary)> = None;
    for l in state.grid.available_levels() {
        let x = state.grid.point(l);
        if state.data.n_at(&x) == 0 || is_dose_toxic(draws, &x, design.p_t, design.xi) {
            continue;
        }
        let s = summarize_dose(draws, &state.settings.utility, design, &x);
        let better = best.as_ref().is_none_or(|(_, b)| {
            s.mean_utility
                .total_cmp(&b.mean_utility)
                .then(b.mean_toxicity.total_cmp(&s.mean_toxicity))
                .is_gt()
        });
        if better {
            best = Some((x, s));
        }
    }
    best.map(|(x, _)| x)
}
