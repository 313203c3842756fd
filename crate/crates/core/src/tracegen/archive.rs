use serde::{Deserialize, Serialize};

use super::FairnessRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    MinimizeAod,
    MaximizeAod,
}

/// Mutually non-dominated (AOD, accuracy) points. Accuracy is always
/// maximized; AOD is minimized or maximized per `direction`.
#[derive(Debug, Clone)]
pub struct Archive {
    direction: Direction,
    members: Vec<usize>,
    points: Vec<(f64, f64)>,
}

impl Archive {
    pub fn new(direction: Direction) -> Self {
        Archive {
            direction,
            members: Vec::new(),
            points: Vec::new(),
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Record indices in the archive.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Oriented so larger is better on both axes.
    fn key(&self, aod: f64, accuracy: f64) -> (f64, f64) {
        match self.direction {
            Direction::MinimizeAod => (-aod, accuracy),
            Direction::MaximizeAod => (aod, accuracy),
        }
    }

    fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
        a.0 >= b.0 && a.1 >= b.1 && (a.0 > b.0 || a.1 > b.1)
    }

    /// Inserts the record unless an existing member dominates or equals it;
    /// evicts members it dominates. Returns whether it was inserted.
    pub fn offer(&mut self, index: usize, record: &FairnessRecord) -> bool {
        let k = self.key(record.aod, record.accuracy);
        if self
            .points
            .iter()
            .any(|&(a, c)| {
                let m = self.key(a, c);
                Self::dominates(m, k) || m == k
            })
        {
            return false;
        }
        let mut keep = Vec::with_capacity(self.members.len());
        for (i, &(a, c)) in self.points.iter().enumerate() {
            if !Self::dominates(k, self.key(a, c)) {
                keep.push(i);
            }
        }
        self.members = keep.iter().map(|&i| self.members[i]).collect();
        self.points = keep.iter().map(|&i| self.points[i]).collect();
        self.members.push(index);
        self.points.push((record.aod, record.accuracy));
        true
    }

    /// Verifies that no member dominates another.
    pub fn check(&self) -> Result<()> {
        for (i, &(a, c)) in self.points.iter().enumerate() {
            for (j, &(b, d)) in self.points.iter().enumerate() {
                if i != j && Self::dominates(self.key(a, c), self.key(b, d)) {
                    return Err(Error::Trace(format!(
                        "archive member {} dominates {}",
                        self.members[i], self.members[j]
                    )));
                }
            }
        }
        Ok(())
    }
}
