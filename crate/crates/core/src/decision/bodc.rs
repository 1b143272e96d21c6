//! Posterior sample of the utility-maximizing dose combination.
//!
//! Each draw is maximized over the search rectangle by a 51 x 51 scan followed
//! by Nelder-Mead refinement from the best cell. A draw whose utility is zero
//! over the whole scan maps to the rectangle's lower-left corner.

use serde::{Deserialize, Serialize};

use crate::bayes::Draw;
use crate::{DosePair, UtilityParams};

pub const COARSE_POINTS: usize = 51;

/// Simplex diameter, in standardized units, at which refinement stops.
const X_TOL: f64 = 1e-7;

/// Axis-aligned rectangle in standardized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub lo: DosePair,
    pub hi: DosePair,
}

impl SearchRegion {
    pub fn new(lo: DosePair, hi: DosePair) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, x: DosePair) -> DosePair {
        DosePair::new(x.a.clamp(self.lo.a, self.hi.a), x.b.clamp(self.lo.b, self.hi.b))
    }

    /// `n` evenly spaced coordinates per axis, endpoints included.
    pub fn axis(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let lin = |lo: f64, hi: f64| -> Vec<f64> {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        (lin(self.lo.a, self.hi.a), lin(self.lo.b, self.hi.b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawOptimum {
    pub dose: DosePair,
    pub utility: f64,
    /// Utility was zero everywhere on the scan.
    pub degenerate: bool,
}

/// Utility of one draw at `x`.
pub fn draw_utility(draw: &Draw, u: &UtilityParams, x: &DosePair) -> f64 {
    u.overall(x, &draw.tox, &draw.eff)
}

fn coarse_scan(draw: &Draw, u: &UtilityParams, region: &SearchRegion) -> (usize, usize, f64) {
    let (xa, xb) = region.axis(COARSE_POINTS);
    let t = &draw.tox;
    let b = &draw.eff.beta;
    // logistic(s + t) = 1 / (1 + e^-s e^-t): one exponential per axis point
    let ta: Vec<f64> = xa.iter().map(|x| (-(t.alpha0 + t.alpha1 * x)).exp()).collect();
    let tb: Vec<f64> = xb.iter().map(|x| (-(t.alpha2 * x)).exp()).collect();
    let ea: Vec<f64> = xa.iter().map(|x| (-(b[0] + b[1] * x + b[3] * x * x)).exp()).collect();
    let eb: Vec<f64> = xb.iter().map(|x| (-(b[2] * x + b[4] * x * x)).exp()).collect();
    let mut best = (0, 0, 0.0);
    for (i, (&ti, &ei)) in ta.iter().zip(&ea).enumerate() {
        for (j, (&tj, &ej)) in tb.iter().zip(&eb).enumerate() {
            let p = 1.0 / (1.0 + ti * tj);
            if p > u.p_t {
                // toxicity rises with both coordinates
                break;
            }
            let v = u.combine(p, 1.0 / (1.0 + ei * ej));
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Maximizes `f` over `region` with a box-projected Nelder-Mead simplex.
fn nelder_mead<F: Fn(&DosePair) -> f64>(f: F, start: DosePair, step: (f64, f64), region: &SearchRegion) -> (DosePair, f64) {
    let eval = |x: DosePair| {
        let x = region.clamp(x);
        (x, -f(&x))
    };
    let mut simplex = [
        eval(start),
        eval(DosePair::new(start.a + step.0, start.b)),
        eval(DosePair::new(start.a, start.b + step.1)),
    ];
    // some vertices may have been clamped onto `start`; push them inward instead
    for v in 1..3 {
        if simplex[v].0 == simplex[0].0 {
            let d = if v == 1 {
                DosePair::new(start.a - step.0, start.b)
            } else {
                DosePair::new(start.a, start.b - step.1)
            };
            simplex[v] = eval(d);
        }
    }
    for _ in 0..400 {
        simplex.sort_by(|x, y| x.1.total_cmp(&y.1));
        let size = simplex[1..]
            .iter()
            .map(|v| v.0.dist(&simplex[0].0))
            .fold(0.0, f64::max);
        if size < X_TOL {
            break;
        }
        let c = DosePair::new(
            0.5 * (simplex[0].0.a + simplex[1].0.a),
            0.5 * (simplex[0].0.b + simplex[1].0.b),
        );
        let worst = simplex[2];
        let along = |t: f64| DosePair::new(c.a + t * (c.a - worst.0.a), c.b + t * (c.b - worst.0.b));
        let r = eval(along(1.0));
        if r.1 < simplex[0].1 {
            let e = eval(along(2.0));
            simplex[2] = if e.1 < r.1 { e } else { r };
        } else if r.1 < simplex[1].1 {
            simplex[2] = r;
        } else {
            let k = if r.1 < worst.1 { eval(along(0.5)) } else { eval(along(-0.5)) };
            if k.1 < worst.1.min(r.1) {
                simplex[2] = k;
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    *v = eval(DosePair::new(0.5 * (best.a + v.0.a), 0.5 * (best.b + v.0.b)));
                }
            }
        }
    }
    simplex.sort_by(|x, y| x.1.total_cmp(&y.1));
    (simplex[0].0, -simplex[0].1)
}

/// Utility-maximizing dose for a single posterior draw.
pub fn draw_argmax(draw: &Draw, u: &UtilityParams, region: &SearchRegion) -> DrawOptimum {
    let (i, j, v) = coarse_scan(draw, u, region);
    if v <= 0.0 {
        return DrawOptimum {
            dose: region.lo,
            utility: 0.0,
            degenerate: true,
        };
    }
    let (xa, xb) = region.axis(COARSE_POINTS);
    let start = DosePair::new(xa[i], xb[j]);
    let step = (
        (region.hi.a - region.lo.a) / (COARSE_POINTS - 1) as f64,
        (region.hi.b - region.lo.b) / (COARSE_POINTS - 1) as f64,
    );
    let f = |x: &DosePair| draw_utility(draw, u, x);
    let (mut x, mut fx) = nelder_mead(f, start, step, region);
    // restart once with a smaller simplex; collapsed simplices stall on the box edge
    let (x2, f2) = nelder_mead(f, x, (step.0 * 0.1, step.1 * 0.1), region);
    if f2 > fx {
        x = x2;
        fx = f2;
    }
    if fx < v {
        x = start;
        fx = v;
    }
    DrawOptimum {
        dose: x,
        utility: fx,
        degenerate: false,
    }
}

/// Per-draw optima and their coordinatewise mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BodcSample {
    pub per_draw: Vec<DosePair>,
    pub mean: DosePair,
    pub degenerate_draws: usize,
}

pub fn estimate_bodc(draws: &[Draw], u: &UtilityParams, region: &SearchRegion) -> BodcSample {
    assert!(!draws.is_empty(), "optimal-dose estimate needs at least one draw");
    let mut per_draw = Vec::with_capacity(draws.len());
    let mut degenerate = 0;
    let (mut sa, mut sb) = (0.0, 0.0);
    for d in draws {
        let o = draw_argmax(d, u, region);
        degenerate += o.degenerate as usize;
        sa += o.dose.a;
        sb += o.dose.b;
        per_draw.push(o.dose);
    }
    let n = draws.len() as f64;
    BodcSample {
        per_draw,
        mean: DosePair::new(sa / n, sb / n),
        degenerate_draws: degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{EfficacyParams, ModelId, ToxicityParams};

    fn eta() -> UtilityParams {
        crate::dose::calibrate_eta(&crate::CalibrationSpec {
            p_t: 0.3,
            q1_star: 0.45,
            q2_star: 0.85,
            u_star: 0.3,
        })
        .unwrap()
    }

    fn region() -> SearchRegion {
        SearchRegion::new(DosePair::new(-0.9, -0.9), DosePair::new(2.0, 2.0))
    }

    #[test]
    fn concave_efficacy_with_negligible_toxicity_hits_vertex() {
        // alpha chosen so p stays near 0.01 over the region
        let draw = Draw {
            tox: ToxicityParams {
                alpha0: -4.6,
                alpha1: 1e-9,
                alpha2: 1e-9,
            },
            eff: EfficacyParams::new(ModelId::M4, [0.5, 1.2, 0.9, -2.0, -1.5]).unwrap(),
            log_lik: 0.0,
        };
        let o = draw_argmax(&draw, &eta(), &region());
        assert!((o.dose.a - 0.3).abs() < 1e-3, "{o:?}");
        assert!((o.dose.b - 0.3).abs() < 1e-3, "{o:?}");
    }

    #[test]
    fn all_toxic_draw_maps_to_lower_left() {
        let draw = Draw {
            tox: ToxicityParams {
                alpha0: 5.0,
                alpha1: 1.0,
                alpha2: 1.0,
            },
            eff: EfficacyParams::new(ModelId::M1, [0.0, 1.0, 1.0, 0.0, 0.0]).unwrap(),
            log_lik: 0.0,
        };
        let o = draw_argmax(&draw, &eta(), &region());
        assert!(o.degenerate);
        assert_eq!(o.dose, region().lo);
    }

    #[test]
    fn mean_is_coordinatewise_average() {
        let mk = |b1: f64| Draw {
            tox: ToxicityParams {
                alpha0: -4.6,
                alpha1: 1e-9,
                alpha2: 1e-9,
            },
            eff: EfficacyParams::new(ModelId::M4, [0.0, b1, 0.0, -2.0, -2.0]).unwrap(),
            log_lik: 0.0,
        };
        let s = estimate_bodc(&[mk(0.8), mk(1.6)], &eta(), &region());
        assert!((s.mean.a - 0.3).abs() < 1e-3);
        assert!(s.mean.b.abs() < 1e-3);
    }
}
