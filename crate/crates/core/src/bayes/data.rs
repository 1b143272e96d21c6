use serde::{Deserialize, Serialize};

use super::BayesError;
use crate::DosePair;

/// Completed outcomes at one dose combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseRow {
    pub dose: DosePair,
    /// Toxicity events.
    pub y: u32,
    /// Efficacy events.
    pub z: u32,
    pub n: u32,
}

/// Outcome counts keyed by dose pair; one row per tried dose.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DoseDataTable {
    rows: Vec<DoseRow>,
}

impl DoseDataTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: impl IntoIterator<Item = DoseRow>) -> Result<Self, BayesError> {
        let mut t = Self::new();
        for r in rows {
            t.record(r.dose, r.y, r.z, r.n)?;
        }
        Ok(t)
    }

    /// Adds outcomes to the row for `dose`, creating it if needed.
    pub fn record(&mut self, dose: DosePair, y: u32, z: u32, n: u32) -> Result<(), BayesError> {
        if y > n || z > n {
            return Err(BayesError::InvalidData(format!("counts y={y}, z={z} exceed n={n}")));
        }
        if !dose.a.is_finite() || !dose.b.is_finite() {
            return Err(BayesError::InvalidData("dose coordinates must be finite".into()));
        }
        match self.rows.iter_mut().find(|r| r.dose == dose) {
            Some(r) => {
                r.y += y;
                r.z += z;
                r.n += n;
            }
            None => self.rows.push(DoseRow { dose, y, z, n }),
        }
        Ok(())
    }

    pub fn rows(&self) -> &[DoseRow] {
        &self.rows
    }

    pub fn get(&self, dose: &DosePair) -> Option<&DoseRow> {
        self.rows.iter().find(|r| r.dose == *dose)
    }

    pub fn n_at(&self, dose: &DosePair) -> u32 {
        self.get(dose).map_or(0, |r| r.n)
    }

    pub fn total_n(&self) -> u32 {
        self.rows.iter().map(|r| r.n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.n == 0)
    }
}
