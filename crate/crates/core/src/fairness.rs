//! Group confusion rates and the fairness metrics built on them.
//!
//! Protected groups are 0 and 1, and label 1 is the favorable outcome.
//! `EOD = |TPR₀ − TPR₁|`, `AOD = (|TPR₀ − TPR₁| + |FPR₀ − FPR₁|) / 2`;
//! higher means less fair.

use serde::{Deserialize, Serialize};

use crate::datasets::TabularDataset;
use crate::error::{Error, Result};
use crate::trainers::TrainedModel;

/// Denominator used for the per-group rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatesDenominator {
    /// True/false positives over the group's actual positives/negatives.
    #[default]
    Conditioned,
    /// True/false positives over the whole group size.
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub tpr0: f64,
    pub fpr0: f64,
    pub tpr1: f64,
    pub fpr1: f64,
    pub n0: usize,
    pub n1: usize,
    pub pos0: usize,
    pub pos1: usize,
    pub neg0: usize,
    pub neg1: usize,
    /// Set when a rate had an empty denominator and was fixed to 0.
    pub degenerate: bool,
}

impl GroupRates {
    /// Rates from per-row predictions, labels, and group membership.
    pub fn from_predictions(
        predictions: &[u8],
        labels: &[u8],
        protected: &[u8],
        denominator: RatesDenominator,
    ) -> Result<Self> {
        if predictions.len() != labels.len() || labels.len() != protected.len() {
            return Err(Error::Argument("prediction, label, and group lengths differ".into()));
        }
        // [group][label] totals and predicted-favorable hits
        let mut total = [[0usize; 2]; 2];
        let mut hits = [[0usize; 2]; 2];
        for ((&p, &y), &g) in predictions.iter().zip(labels).zip(protected) {
            total[g as usize][y as usize] += 1;
            if p == 1 {
                hits[g as usize][y as usize] += 1;
            }
        }
        let n = [total[0][0] + total[0][1], total[1][0] + total[1][1]];
        if let Some(g) = (0..2).find(|&g| n[g] == 0) {
            return Err(Error::Argument(format!("protected group {g} is absent")));
        }
        let mut degenerate = false;
        let mut rate = |num: usize, den: usize| {
            if den == 0 {
                degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let den = |g: usize, y: usize| match denominator {
            RatesDenominator::Conditioned => total[g][y],
            RatesDenominator::Group => n[g],
        };
        let tpr0 = rate(hits[0][1], den(0, 1));
        let fpr0 = rate(hits[0][0], den(0, 0));
        let tpr1 = rate(hits[1][1], den(1, 1));
        let fpr1 = rate(hits[1][0], den(1, 0));
        Ok(GroupRates {
            tpr0,
            fpr0,
            tpr1,
            fpr1,
            n0: n[0],
            n1: n[1],
            pos0: total[0][1],
            pos1: total[1][1],
            neg0: total[0][0],
            neg1: total[1][0],
            degenerate,
        })
    }

    /// The same rates with the group indices exchanged.
    pub fn swapped(&self) -> Self {
        GroupRates {
            tpr0: self.tpr1,
            fpr0: self.fpr1,
            tpr1: self.tpr0,
            fpr1: self.fpr0,
            n0: self.n1,
            n1: self.n0,
            pos0: self.pos1,
            pos1: self.pos0,
            neg0: self.neg1,
            neg1: self.neg0,
            degenerate: self.degenerate,
        }
    }
}

pub fn group_rates(model: &TrainedModel, val: &TabularDataset) -> Result<GroupRates> {
    group_rates_with(model, val, RatesDenominator::Conditioned)
}

pub fn group_rates_with(
    model: &TrainedModel,
    val: &TabularDataset,
    denominator: RatesDenominator,
) -> Result<GroupRates> {
    let predictions = model.predict(val.rows())?;
    GroupRates::from_predictions(&predictions, val.labels(), val.protected(), denominator)
}

pub fn eod(r: &GroupRates) -> f64 {
    (r.tpr0 - r.tpr1).abs()
}

pub fn aod(r: &GroupRates) -> f64 {
    ((r.tpr0 - r.tpr1).abs() + (r.fpr0 - r.fpr1).abs()) / 2.0
}

/// Fraction of rows where the prediction equals the label.
pub fn accuracy_of(predictions: &[u8], labels: &[u8]) -> f64 {
    let correct = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    correct as f64 / labels.len().max(1) as f64
}

pub fn accuracy(model: &TrainedModel, val: &TabularDataset) -> Result<f64> {
    Ok(accuracy_of(&model.predict(val.rows())?, val.labels()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: RatesDenominator = RatesDenominator::Conditioned;

    #[test]
    fn perfect_classifier() {
        let y = [1, 0, 1, 0, 1, 0];
        let g = [0, 0, 0, 1, 1, 1];
        let r = GroupRates::from_predictions(&y, &y, &g, C).unwrap();
        assert_eq!((r.tpr0, r.fpr0, r.tpr1, r.fpr1), (1.0, 0.0, 1.0, 0.0));
        assert!(!r.degenerate);
        assert_eq!(aod(&r), 0.0);
        assert_eq!(eod(&r), 0.0);
    }

    #[test]
    fn hand_confusion_matrix() {
        // group 0: two positives both predicted 1; two negatives, one predicted 1
        let pred = [1, 1, 1, 0, 1, 0];
        let y = [1, 1, 0, 0, 1, 0];
        let g = [0, 0, 0, 0, 1, 1];
        let r = GroupRates::from_predictions(&pred, &y, &g, C).unwrap();
        assert_eq!(r.tpr0, 1.0);
        assert_eq!(r.fpr0, 0.5);
        assert_eq!((r.pos0, r.neg0, r.n0), (2, 2, 4));
    }

    #[test]
    fn constant_favorable_predictor() {
        let y = [1, 0, 1, 0];
        let g = [0, 0, 1, 1];
        let r = GroupRates::from_predictions(&[1, 1, 1, 1], &y, &g, C).unwrap();
        assert_eq!((r.tpr0, r.fpr0, r.tpr1, r.fpr1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn missing_group_is_an_error_and_empty_class_is_degenerate() {
        assert!(GroupRates::from_predictions(&[1, 0], &[1, 0], &[0, 0], C).is_err());
        let r = GroupRates::from_predictions(&[1, 0, 1], &[1, 0, 1], &[0, 0, 1], C).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.fpr1, 0.0);
    }

    #[test]
    fn group_denominator_variant() {
        let pred = [1, 1, 1, 0, 1, 0];
        let y = [1, 1, 0, 0, 1, 0];
        let g = [0, 0, 0, 0, 1, 1];
        let r = GroupRates::from_predictions(&pred, &y, &g, RatesDenominator::Group).unwrap();
        assert_eq!(r.tpr0, 0.5);
        assert_eq!(r.fpr0, 0.25);
    }

    fn rates(tpr0: f64, fpr0: f64, tpr1: f64, fpr1: f64) -> GroupRates {
        GroupRates { tpr0, fpr0, tpr1, fpr1, n0: 1, n1: 1, pos0: 1, pos1: 1, neg0: 1, neg1: 1, degenerate: false }
    }

    #[test]
    fn metric_formulas() {
        assert_eq!(eod(&rates(1.0, 0.0, 0.5, 0.0)), 0.5);
        assert_eq!(eod(&rates(0.0, 0.0, 1.0, 0.0)), 1.0);
        assert_eq!(aod(&rates(1.0, 0.5, 0.5, 1.0)), 0.5);
        assert_eq!(aod(&rates(1.0, 0.3, 0.0, 0.3)), 0.5);
        assert_eq!(accuracy_of(&[1, 0, 1, 1], &[1, 0, 0, 1]), 0.75);
        assert_eq!(accuracy_of(&[1, 1], &[0, 0]), 0.0);
    }

    proptest! {
        #[test]
        fn metric_bounds_and_symmetry(t0 in 0.0f64..=1.0, f0 in 0.0f64..=1.0, t1 in 0.0f64..=1.0, f1 in 0.0f64..=1.0) {
            let r = rates(t0, f0, t1, f1);
            let (a, e) = (aod(&r), eod(&r));
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((0.0..=1.0).contains(&e));
            prop_assert!(a >= e / 2.0 - 1e-15);
            prop_assert!(a <= (e + 1.0) / 2.0 + 1e-15);
            prop_assert_eq!(aod(&r.swapped()), a);
            prop_assert_eq!(eod(&r.swapped()), e);
        }
    }
}
