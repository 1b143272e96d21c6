//! Whether to add a new dose level at the estimated optimum, and where.

use serde::{Deserialize, Serialize};

use super::bodc::BodcSample;
use crate::{DoseGrid, DosePair};

/// Radii below this count as sitting on a grid point.
const R_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InsertionAssessment {
    /// Distance from the posterior-mean optimum to the nearest available grid point.
    pub r_hat: f64,
    /// Posterior mass of the optimum inside the disc of radius `r_hat`.
    pub mass_inside: f64,
    /// Smallest radius around the mean holding more than `credible_c` of the draws.
    pub disc_radius: f64,
    pub insert: bool,
}

/// Flags insertion when the optimum's credible mass within `r_hat` of its
/// posterior mean exceeds `credible_c`, i.e. the optimum is confidently
/// closer to the mean than to any dose still on offer.
pub fn insertion_indicator(sample: &BodcSample, grid: &DoseGrid, credible_c: f64) -> InsertionAssessment {
    let mut d2: Vec<f64> = sample.per_draw.iter().map(|x| x.dist2(&sample.mean)).collect();
    d2.sort_by(f64::total_cmp);
    let at = ((credible_c * d2.len() as f64).floor() as usize).min(d2.len().saturating_sub(1));
    let disc_radius = d2.get(at).map_or(0.0, |v| v.sqrt());
    let r2 = grid
        .available_levels()
        .map(|l| grid.point(l).dist2(&sample.mean))
        .fold(f64::INFINITY, f64::min);
    if !r2.is_finite() {
        return InsertionAssessment {
            r_hat: f64::INFINITY,
            mass_inside: 1.0,
            disc_radius,
            insert: false,
        };
    }
    let inside = d2.partition_point(|&v| v <= r2);
    let mass = inside as f64 / d2.len() as f64;
    InsertionAssessment {
        r_hat: r2.sqrt(),
        mass_inside: mass,
        disc_radius,
        insert: r2 > R_EPS * R_EPS && mass > credible_c,
    }
}

/// Clamps a proposed insertion to `[0.5 * lowest, 2 * highest]` of the current
/// raw levels of each agent.
pub fn clip_insertion(dose: &DosePair, grid: &DoseGrid) -> DosePair {
    let raw = grid.to_raw(dose);
    let clamp = |v: f64, levels: &[f64]| v.clamp(0.5 * levels[0], 2.0 * levels[levels.len() - 1]);
    let clipped = DosePair::new(clamp(raw.a, &grid.raw_a), clamp(raw.b, &grid.raw_b));
    if clipped == raw {
        *dose
    } else {
        grid.to_std(&clipped)
    }
}

/// Escalation may not skip an untried prespecified dose: returns true when some
/// untried, non-excluded prespecified combination lies componentwise at or
/// below `dose`.
pub fn skips_untried<F: Fn(&DosePair) -> bool>(dose: &DosePair, grid: &DoseGrid, tried: F) -> bool {
    grid.available_levels()
        .filter(|&l| grid.is_prespecified(l))
        .map(|l| grid.point(l))
        .any(|p| p.dominated_by(dose) && !tried(&p))
}

/// True when `dose` sits at or above an excluded grid point.
pub fn in_excluded_region(dose: &DosePair, grid: &DoseGrid) -> bool {
    grid.excluded.iter().any(|&l| grid.point(l).dominated_by(dose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Level;

    fn grid() -> DoseGrid {
        DoseGrid::standardize(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    fn sample(points: &[(f64, f64)]) -> BodcSample {
        let per_draw: Vec<DosePair> = points.iter().map(|&(a, b)| DosePair::new(a, b)).collect();
        let n = per_draw.len() as f64;
        let mean = DosePair::new(
            per_draw.iter().map(|p| p.a).sum::<f64>() / n,
            per_draw.iter().map(|p| p.b).sum::<f64>() / n,
        );
        BodcSample {
            per_draw,
            mean,
            degenerate_draws: 0,
        }
    }

    #[test]
    fn tight_cloud_between_levels_triggers_insertion() {
        let g = grid();
        let pts: Vec<(f64, f64)> = (0..100).map(|i| (0.447 + 1e-4 * (i % 7) as f64, 0.447)).collect();
        let a = insertion_indicator(&sample(&pts), &g, 0.9);
        assert!(a.insert);
        assert!((a.r_hat - 0.2236f64.hypot(0.2236)).abs() < 1e-3, "{a:?}");
    }

    #[test]
    fn diffuse_cloud_does_not_insert() {
        let g = grid();
        let pts: Vec<(f64, f64)> = (0..100)
            .map(|i| (-0.8 + 1.6 * (i % 10) as f64 / 9.0, -0.8 + 1.6 * (i / 10) as f64 / 9.0))
            .collect();
        assert!(!insertion_indicator(&sample(&pts), &g, 0.9).insert);
    }

    #[test]
    fn mean_on_grid_point_never_inserts() {
        let g = grid();
        let p = g.point(Level::new(2, 2));
        let a = insertion_indicator(&sample(&[(p.a, p.b); 8]), &g, 0.5);
        assert_eq!(a.r_hat, 0.0);
        assert!(!a.insert);
    }

    #[test]
    fn excluded_points_do_not_count_for_radius() {
        let mut g = grid();
        g.exclude_from(Level::new(2, 2));
        let p = g.point(Level::new(2, 2));
        let a = insertion_indicator(&sample(&[(p.a, p.b); 8]), &g, 0.5);
        assert!(a.r_hat > 0.4 && a.insert);
    }

    #[test]
    fn insertion_agrees_with_disc_radius() {
        let g = grid();
        for spread in [1e-3, 0.05, 0.1, 0.2, 0.3, 0.6] {
            for c in [0.5, 0.8, 0.9, 0.95] {
                let pts: Vec<(f64, f64)> = (0..97)
                    .map(|i| {
                        let t = i as f64 * 2.399;
                        let r = spread * (i as f64 / 96.0).sqrt();
                        (0.0 + r * t.cos(), 0.1 + r * t.sin())
                    })
                    .collect();
                let a = insertion_indicator(&sample(&pts), &g, c);
                assert_eq!(a.insert, a.disc_radius <= a.r_hat, "spread {spread} c {c}: {a:?}");
            }
        }
    }

    #[test]
    fn clipping_uses_raw_bounds() {
        let g = grid();
        let far = g.to_std(&DosePair::new(20.0, 0.1));
        let c = g.to_raw(&clip_insertion(&far, &g));
        assert!((c.a - 8.0).abs() < 1e-12 && (c.b - 0.5).abs() < 1e-12, "{c:?}");
        let inside = g.to_std(&DosePair::new(2.5, 2.5));
        assert_eq!(clip_insertion(&inside, &g), inside);
    }

    #[test]
    fn skip_rule_sees_untried_lower_doses() {
        let g = grid();
        let new = g.to_std(&DosePair::new(2.5, 2.5));
        let tried_low = |p: &DosePair| p.a < 0.0 && p.b < 0.0;
        assert!(!skips_untried(&new, &g, tried_low));
        let only_11 = |p: &DosePair| *p == g.point(Level::new(0, 0));
        assert!(skips_untried(&new, &g, only_11));
    }
}
