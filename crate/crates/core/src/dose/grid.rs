//! Dose levels of the two agents and the combination matrix they span.
//!
//! Raw doses are mapped to a standardized coordinate per agent with the affine
//! map `x = (d - mean) / sd * 0.5`, where mean and population sd are taken over
//! the prespecified levels. The map is frozen at construction: inserted levels
//! reuse it, so existing coordinates never move.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DoseError;
use crate::scalar::Scalar;

/// A dose combination in standardized coordinates (`a` = agent A, `b` = agent B).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DosePair<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> DosePair<T> {
    pub fn new(a: T, b: T) -> Self {
        Self { a, b }
    }

    pub fn dist2(&self, other: &Self) -> T {
        let da = self.a - other.a;
        let db = self.b - other.b;
        da * da + db * db
    }

    pub fn dist(&self, other: &Self) -> T {
        self.dist2(other).sqrt()
    }

    /// Componentwise `self <= other`.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.a <= other.a && self.b <= other.b
    }
}

/// Zero-based level indices `(j, k)` into a [`DoseGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Level {
    pub j: usize,
    pub k: usize,
}

impl Level {
    pub const fn new(j: usize, k: usize) -> Self {
        Self { j, k }
    }

    pub fn sum(&self) -> usize {
        self.j + self.k
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // one-based, as dose levels are usually written
        write!(f, "({},{})", self.j + 1, self.k + 1)
    }
}

/// Affine raw-to-standardized map for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentScale<T> {
    pub center: T,
    /// Standardized units per raw unit.
    pub slope: T,
}

impl<T: Scalar> AgentScale<T> {
    fn fit(raw: &[T]) -> Self {
        let n = T::from_usize(raw.len()).unwrap();
        let mean = raw.iter().fold(T::zero(), |s, &x| s + x) / n;
        let var = raw
            .iter()
            .fold(T::zero(), |s, &x| s + (x - mean) * (x - mean))
            / n;
        Self {
            center: mean,
            slope: T::lit(0.5) / var.sqrt(),
        }
    }

    pub fn to_std(&self, raw: T) -> T {
        (raw - self.center) * self.slope
    }

    pub fn to_raw(&self, std: T) -> T {
        std / self.slope + self.center
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoseGrid<T> {
    pub raw_a: Vec<T>,
    pub raw_b: Vec<T>,
    pub std_a: Vec<T>,
    pub std_b: Vec<T>,
    /// Whether each agent-A level was part of the original design.
    pub prespecified_a: Vec<bool>,
    pub prespecified_b: Vec<bool>,
    /// Centers of cross-insertions, in insertion order.
    pub inserted: Vec<DosePair<T>>,
    pub excluded: BTreeSet<Level>,
    pub scale_a: AgentScale<T>,
    pub scale_b: AgentScale<T>,
}

fn validate_levels<T: Scalar>(raw: &[T], agent: &'static str) -> Result<(), DoseError> {
    if raw.len() < 2 {
        return Err(DoseError::Validation {
            field: agent,
            message: format!("need at least 2 dose levels, got {}", raw.len()),
        });
    }
    for (i, &d) in raw.iter().enumerate() {
        if !(d > T::zero()) || !d.is_finite() {
            return Err(DoseError::Validation {
                field: agent,
                message: format!("dose level {} is not a positive finite number ({d})", i + 1),
            });
        }
        if i > 0 && !(d > raw[i - 1]) {
            return Err(DoseError::Validation {
                field: agent,
                message: format!("dose levels must be strictly increasing (level {} = {d})", i + 1),
            });
        }
    }
    Ok(())
}

impl<T: Scalar> DoseGrid<T> {
    /// Builds the grid from raw dose levels, standardizing each agent.
    ///
    /// Agent A must have at least as many levels as agent B.
    pub fn standardize(raw_a: &[T], raw_b: &[T]) -> Result<Self, DoseError> {
        validate_levels(raw_a, "rawA")?;
        validate_levels(raw_b, "rawB")?;
        if raw_a.len() < raw_b.len() {
            return Err(DoseError::Validation {
                field: "rawA",
                message: format!(
                    "agent A must have at least as many levels as agent B ({} < {}); swap the agents",
                    raw_a.len(),
                    raw_b.len()
                ),
            });
        }
        let scale_a = AgentScale::fit(raw_a);
        let scale_b = AgentScale::fit(raw_b);
        Ok(Self {
            raw_a: raw_a.to_vec(),
            raw_b: raw_b.to_vec(),
            std_a: raw_a.iter().map(|&d| scale_a.to_std(d)).collect(),
            std_b: raw_b.iter().map(|&d| scale_b.to_std(d)).collect(),
            prespecified_a: vec![true; raw_a.len()],
            prespecified_b: vec![true; raw_b.len()],
            inserted: Vec::new(),
            excluded: BTreeSet::new(),
            scale_a,
            scale_b,
        })
    }

    /// `(J, K)`: number of levels of agent A and agent B.
    pub fn dims(&self) -> (usize, usize) {
        (self.std_a.len(), self.std_b.len())
    }

    pub fn len(&self) -> usize {
        self.std_a.len() * self.std_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, level: Level) -> bool {
        level.j < self.std_a.len() && level.k < self.std_b.len()
    }

    pub fn point(&self, level: Level) -> DosePair<T> {
        DosePair::new(self.std_a[level.j], self.std_b[level.k])
    }

    pub fn raw_point(&self, level: Level) -> DosePair<T> {
        DosePair::new(self.raw_a[level.j], self.raw_b[level.k])
    }

    /// Level of a dose pair that lies exactly on the grid.
    pub fn level_of(&self, dose: &DosePair<T>) -> Option<Level> {
        let j = self.std_a.iter().position(|&x| x == dose.a)?;
        let k = self.std_b.iter().position(|&x| x == dose.b)?;
        Some(Level::new(j, k))
    }

    pub fn levels(&self) -> impl Iterator<Item = Level> + '_ {
        let (nj, nk) = self.dims();
        (0..nj).flat_map(move |j| (0..nk).map(move |k| Level::new(j, k)))
    }

    pub fn available_levels(&self) -> impl Iterator<Item = Level> + '_ {
        self.levels().filter(move |l| !self.is_excluded(*l))
    }

    pub fn is_excluded(&self, level: Level) -> bool {
        self.excluded.contains(&level)
    }

    pub fn is_prespecified(&self, level: Level) -> bool {
        self.prespecified_a[level.j] && self.prespecified_b[level.k]
    }

    /// Excludes `level` and every level at or above it in both agents.
    pub fn exclude_from(&mut self, level: Level) {
        let (nj, nk) = self.dims();
        for j in level.j..nj {
            for k in level.k..nk {
                self.excluded.insert(Level::new(j, k));
            }
        }
    }

    fn close_exclusions(&mut self) {
        let seeds: Vec<Level> = self.excluded.iter().copied().collect();
        for s in seeds {
            self.exclude_from(s);
        }
    }

    pub fn to_raw(&self, dose: &DosePair<T>) -> DosePair<T> {
        DosePair::new(self.scale_a.to_raw(dose.a), self.scale_b.to_raw(dose.b))
    }

    pub fn to_std(&self, raw: &DosePair<T>) -> DosePair<T> {
        DosePair::new(self.scale_a.to_std(raw.a), self.scale_b.to_std(raw.b))
    }

    /// Rectangle `[0.5 * lowest, 2 * highest]` of the prespecified raw levels,
    /// in standardized coordinates: `(lower-left, upper-right)`.
    pub fn search_region(&self) -> (DosePair<T>, DosePair<T>) {
        let pre = |raw: &[T], flags: &[bool]| {
            let v: Vec<T> = raw
                .iter()
                .zip(flags)
                .filter(|(_, &f)| f)
                .map(|(&d, _)| d)
                .collect();
            (v[0], v[v.len() - 1])
        };
        let (lo_a, hi_a) = pre(&self.raw_a, &self.prespecified_a);
        let (lo_b, hi_b) = pre(&self.raw_b, &self.prespecified_b);
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        (
            self.to_std(&DosePair::new(lo_a * half, lo_b * half)),
            self.to_std(&DosePair::new(hi_a * two, hi_b * two)),
        )
    }

    /// Adds a cross-insertion centered at `dose`: a new agent-B level (a row
    /// across every agent-A level) and a new agent-A level (a column), unless
    /// the coordinate already exists for that agent.
    pub fn expand(&self, dose: DosePair<T>) -> Result<Self, DoseError> {
        if self.level_of(&dose).is_some() {
            return Err(DoseError::DuplicateDose {
                a: dose.a.to_f64().unwrap_or(f64::NAN),
                b: dose.b.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !dose.a.is_finite() || !dose.b.is_finite() {
            return Err(DoseError::Validation {
                field: "dose",
                message: "inserted dose must be finite".into(),
            });
        }
        let mut out = self.clone();
        let map_a = insert_level(&mut out.std_a, &mut out.raw_a, &mut out.prespecified_a, dose.a, &self.scale_a);
        let map_b = insert_level(&mut out.std_b, &mut out.raw_b, &mut out.prespecified_b, dose.b, &self.scale_b);
        out.excluded = self
            .excluded
            .iter()
            .map(|l| Level::new(map_a[l.j], map_b[l.k]))
            .collect();
        out.close_exclusions();
        out.inserted.push(dose);
        Ok(out)
    }
}

/// Inserts `value` into a sorted level list if absent; returns the old-to-new index map.
fn insert_level<T: Scalar>(
    std: &mut Vec<T>,
    raw: &mut Vec<T>,
    pre: &mut Vec<bool>,
    value: T,
    scale: &AgentScale<T>,
) -> Vec<usize> {
    let n = std.len();
    if std.contains(&value) {
        return (0..n).collect();
    }
    let pos = std.iter().position(|&x| x > value).unwrap_or(n);
    std.insert(pos, value);
    raw.insert(pos, scale.to_raw(value));
    pre.insert(pos, false);
    (0..n).map(|i| if i < pos { i } else { i + 1 }).collect()
}
