//! Fairness traces: every configuration an evolutionary search evaluated,
//! with its AOD, EOD, and accuracy.
//!
//! The search is black-box. It starts from the algorithm's default config,
//! seeds the rest of the population uniformly, then alternates generations
//! between driving AOD down and driving it up, subject to accuracy staying
//! above `(1 − acc_degrade)` times the default config's accuracy. Parents are
//! picked by tournament from the current population plus the archive for the
//! generation's direction; children are produced by [`mutate`] only.

mod archive;
mod io;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{self, TabularDataset};
use crate::error::{Error, Result};
use crate::fairness::{self, GroupRates, RatesDenominator};
use crate::seed::{self, Rng};
use crate::trainers::{self, default_config, hp_space, Algorithm, DimKind, HpConfig, HpSpace, HpValue, Scale};

pub use archive::{Archive, Direction};
pub use io::{read_trace, write_trace, write_trace_csv, TRACE_FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessRecord {
    pub config: HpConfig,
    pub aod: f64,
    pub eod: f64,
    pub accuracy: f64,
    pub degenerate: bool,
    pub eval_seed: u64,
}

/// A configuration whose training failed; it still used up budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEval {
    pub evaluation: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub population: usize,
    pub tournament: usize,
    pub strength_start: f64,
    pub strength_end: f64,
    /// Fraction of the dataset used to train each classifier; the rest
    /// scores it.
    pub classifier_train_fraction: f64,
    pub rates_denominator: RatesDenominator,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            population: 20,
            tournament: 3,
            strength_start: 0.3,
            strength_end: 0.1,
            classifier_train_fraction: 0.7,
            rates_denominator: RatesDenominator::Conditioned,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub budget: usize,
    pub seed: u64,
    pub acc_degrade: f64,
    pub default_accuracy: f64,
    pub accuracy_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<SearchSettings>,
    #[serde(default)]
    pub dataset_fingerprint: String,
    #[serde(default)]
    pub skipped: Vec<SkippedEval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessTrace {
    pub dataset_id: String,
    pub release: String,
    pub algorithm: Algorithm,
    pub protected: String,
    pub space: HpSpace,
    pub records: Vec<FairnessRecord>,
    pub meta: TraceMeta,
}

impl FairnessTrace {
    /// Checks that the trace is non-empty and every record is valid.
    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Trace("trace has no records".into()));
        }
        if self.space.algorithm != self.algorithm {
            return Err(Error::Trace(format!(
                "space belongs to {} but trace is for {}",
                self.space.algorithm, self.algorithm
            )));
        }
        for (i, r) in self.records.iter().enumerate() {
            self.space
                .validate_config(&r.config)
                .map_err(|e| Error::Trace(format!("record {i}: {e}")))?;
            for (name, v) in [("aod", r.aod), ("eod", r.eod), ("accuracy", r.accuracy)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Trace(format!("record {i}: {name} = {v} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Archives and the last population, kept for inspection after a run.
#[derive(Debug, Clone)]
pub struct SearchState {
    pub fair: Archive,
    pub unfair: Archive,
    /// Record indices of the final population.
    pub population: Vec<usize>,
}

/// Perturbs each dimension with probability `strength`: numeric dimensions
/// by Gaussian noise with σ = `strength·(hi − lo)` (in log space for log
/// dimensions), clamped and rounded where needed; categorical dimensions are
/// redrawn uniformly.
pub fn mutate(config: &HpConfig, space: &HpSpace, strength: f64, rng: &mut Rng) -> HpConfig {
    let strength = strength.clamp(0.0, 1.0);
    let values = space
        .dims
        .iter()
        .zip(&config.values)
        .map(|(dim, &value)| {
            if !rng.random_bool(strength) {
                return value;
            }
            match (&dim.kind, value) {
                (
                    DimKind::Numeric {
                        lo,
                        hi,
                        scale,
                        integer,
                    },
                    HpValue::Num(x),
                ) => {
                    let (a, b, v) = match scale {
                        Scale::Linear => (*lo, *hi, x),
                        Scale::Log => (lo.ln(), hi.ln(), x.ln()),
                    };
                    let noise = Normal::new(0.0, strength * (b - a)).expect("positive sigma").sample(rng);
                    let moved = (v + noise).clamp(a, b);
                    let mut out = match scale {
                        Scale::Linear => moved,
                        Scale::Log => moved.exp(),
                    }
                    .clamp(*lo, *hi);
                    if *integer {
                        out = out.round().clamp(*lo, *hi);
                    }
                    HpValue::Num(out)
                }
                (DimKind::Categorical { levels }, HpValue::Cat(_)) => HpValue::Cat(rng.random_range(0..levels.len())),
                _ => value,
            }
        })
        .collect();
    HpConfig { values }
}

struct Evaluator<'a> {
    algorithm: Algorithm,
    train: &'a TabularDataset,
    val: &'a TabularDataset,
    seed: u64,
    denominator: RatesDenominator,
}

impl Evaluator<'_> {
    /// Every configuration trains with the same seed, so a record's metrics
    /// depend only on its configuration.
    fn evaluate(&self, config: &HpConfig) -> Result<FairnessRecord> {
        let eval_seed = seed::derive(self.seed, "train", 0);
        let model = trainers::train(self.algorithm, config, self.train, eval_seed)?;
        let predictions = model.predict(self.val.rows())?;
        let rates = GroupRates::from_predictions(
            &predictions,
            self.val.labels(),
            self.val.protected(),
            self.denominator,
        )?;
        Ok(FairnessRecord {
            config: config.clone(),
            aod: fairness::aod(&rates),
            eod: fairness::eod(&rates),
            accuracy: fairness::accuracy_of(&predictions, self.val.labels()),
            degenerate: rates.degenerate,
            eval_seed,
        })
    }
}

/// Tournament winner under `direction`: feasible beats infeasible, feasible
/// records compare by AOD, infeasible ones by accuracy.
fn tournament(
    pool: &[usize],
    records: &[FairnessRecord],
    direction: Direction,
    threshold: f64,
    size: usize,
    rng: &mut Rng,
) -> usize {
    let better = |a: &FairnessRecord, b: &FairnessRecord| -> bool {
        match (a.accuracy >= threshold, b.accuracy >= threshold) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => match direction {
                Direction::MinimizeAod => a.aod < b.aod,
                Direction::MaximizeAod => a.aod > b.aod,
            },
            (false, false) => a.accuracy > b.accuracy,
        }
    };
    let mut winner = pool[rng.random_range(0..pool.len())];
    for _ in 1..size.max(1) {
        let challenger = pool[rng.random_range(0..pool.len())];
        if better(&records[challenger], &records[winner]) {
            winner = challenger;
        }
    }
    winner
}

pub fn generate_trace(
    algorithm: Algorithm,
    dataset: &TabularDataset,
    budget: usize,
    acc_degrade: f64,
    seed: u64,
) -> Result<FairnessTrace> {
    run_search(algorithm, dataset, budget, acc_degrade, seed, &SearchSettings::default()).map(|(t, _)| t)
}

/// Runs the search and returns the trace together with the final state.
pub fn run_search(
    algorithm: Algorithm,
    dataset: &TabularDataset,
    budget: usize,
    acc_degrade: f64,
    seed: u64,
    settings: &SearchSettings,
) -> Result<(FairnessTrace, SearchState)> {
    if settings.population == 0 || budget < settings.population {
        return Err(Error::Argument(format!(
            "budget {budget} is smaller than the population size {}",
            settings.population
        )));
    }
    if !(0.0..=1.0).contains(&acc_degrade) {
        return Err(Error::Argument(format!("acc_degrade must lie in [0, 1], got {acc_degrade}")));
    }
    if !dataset.has_both_groups() || !dataset.has_both_labels() {
        return Err(Error::Argument(format!(
            "dataset `{}` needs both protected groups and both labels",
            dataset.name()
        )));
    }
    let (train, val) = datasets::split(
        dataset,
        settings.classifier_train_fraction,
        seed::derive(seed, "classifier-split", 0),
    )?;
    if !train.has_both_labels() || !val.has_both_groups() {
        return Err(Error::Argument(
            "classifier split left a class or group missing; use more rows".into(),
        ));
    }

    let space = hp_space(algorithm);
    let evaluator = Evaluator {
        algorithm,
        train: &train,
        val: &val,
        seed,
        denominator: settings.rates_denominator,
    };
    let mut rng = seed::derived_rng(seed, "search", 0);

    let first = evaluator.evaluate(&default_config(&space))?;
    let default_accuracy = first.accuracy;
    let threshold = (1.0 - acc_degrade) * default_accuracy;
    let mut records = vec![first];
    let mut skipped = Vec::new();
    let mut fair = Archive::new(Direction::MinimizeAod);
    let mut unfair = Archive::new(Direction::MaximizeAod);
    let mut consumed = 1;

    let mut evaluate_batch = |configs: Vec<HpConfig>,
                              consumed: &mut usize,
                              records: &mut Vec<FairnessRecord>,
                              fair: &mut Archive,
                              unfair: &mut Archive|
     -> Vec<usize> {
        let start = *consumed;
        let results: Vec<Result<FairnessRecord>> = configs.par_iter().map(|c| evaluator.evaluate(c)).collect();
        *consumed += configs.len();
        let mut added = Vec::new();
        for (k, r) in results.into_iter().enumerate() {
            match r {
                Ok(rec) => {
                    let idx = records.len();
                    if rec.accuracy >= threshold {
                        fair.offer(idx, &rec);
                        unfair.offer(idx, &rec);
                    }
                    records.push(rec);
                    added.push(idx);
                }
                Err(e) => skipped.push(SkippedEval {
                    evaluation: start + k,
                    message: e.to_string(),
                }),
            }
        }
        added
    };

    if records[0].accuracy >= threshold {
        fair.offer(0, &records[0]);
        unfair.offer(0, &records[0]);
    }
    let initial: Vec<HpConfig> = (1..settings.population).map(|_| space.sample_uniform(&mut rng)).collect();
    let mut population = vec![0];
    population.extend(evaluate_batch(initial, &mut consumed, &mut records, &mut fair, &mut unfair));

    let mut generation = 0usize;
    while consumed < budget {
        let direction = if generation.is_multiple_of(2) {
            Direction::MinimizeAod
        } else {
            Direction::MaximizeAod
        };
        let archive = match direction {
            Direction::MinimizeAod => &fair,
            Direction::MaximizeAod => &unfair,
        };
        let mut pool = population.clone();
        pool.extend(archive.members().iter().copied().filter(|m| !population.contains(m)));
        let progress = consumed as f64 / budget as f64;
        let strength = settings.strength_start + (settings.strength_end - settings.strength_start) * progress;
        let k = settings.population.min(budget - consumed);
        let children: Vec<HpConfig> = (0..k)
            .map(|_| {
                let parent = tournament(&pool, &records, direction, threshold, settings.tournament, &mut rng);
                mutate(&records[parent].config, &space, strength, &mut rng)
            })
            .collect();
        let added = evaluate_batch(children, &mut consumed, &mut records, &mut fair, &mut unfair);
        if !added.is_empty() {
            population = added;
        }
        generation += 1;
    }

    let trace = FairnessTrace {
        dataset_id: dataset.name().to_string(),
        release: dataset.release().to_string(),
        algorithm,
        protected: dataset.protected_attribute().to_string(),
        space,
        records,
        meta: TraceMeta {
            budget,
            seed,
            acc_degrade,
            default_accuracy,
            accuracy_threshold: threshold,
            settings: Some(settings.clone()),
            dataset_fingerprint: dataset.fingerprint(),
            skipped,
        },
    };
    Ok((
        trace,
        SearchState {
            fair,
            unfair,
            population,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{synth_generate, SynthSpec};

    #[test]
    fn zero_strength_is_identity() {
        let space = hp_space(Algorithm::LogisticRegression);
        let c = space.sample_uniform(&mut seed::rng(1));
        let mut rng = seed::rng(2);
        assert_eq!(mutate(&c, &space, 0.0, &mut rng), c);
    }

    #[test]
    fn mutations_stay_valid() {
        let mut rng = seed::rng(3);
        for a in Algorithm::ALL {
            let space = hp_space(a);
            let mut c = default_config(&space);
            for i in 0..2000 {
                c = mutate(&c, &space, 0.05 + (i % 20) as f64 * 0.05, &mut rng);
                space.validate_config(&c).unwrap();
            }
        }
    }

    #[test]
    fn upper_bound_is_sticky_under_clamping() {
        let space = hp_space(Algorithm::DecisionTree);
        let mut c = default_config(&space);
        c.values[0] = HpValue::Num(64.0);
        let mut rng = seed::rng(5);
        for _ in 0..200 {
            let m = mutate(&c, &space, 1.0, &mut rng);
            let HpValue::Num(v) = m.values[0] else { panic!() };
            assert!((1.0..=64.0).contains(&v));
        }
    }

    #[test]
    fn small_search_accounts_for_its_budget() {
        let ds = synth_generate(&SynthSpec {
            n_rows: 300,
            seed: 4,
            ..SynthSpec::default()
        })
        .unwrap();
        let (trace, state) = run_search(Algorithm::DecisionTree, &ds, 50, 0.05, 9, &SearchSettings::default()).unwrap();
        assert_eq!(trace.records.len() + trace.meta.skipped.len(), 50);
        assert_eq!(trace.records[0].config, default_config(&trace.space));
        trace.validate().unwrap();
        state.fair.check().unwrap();
        state.unfair.check().unwrap();
    }

    #[test]
    fn budget_below_population_is_rejected() {
        let ds = synth_generate(&SynthSpec { n_rows: 100, ..SynthSpec::default() }).unwrap();
        assert!(generate_trace(Algorithm::DecisionTree, &ds, 10, 0.05, 1).is_err());
    }
}
