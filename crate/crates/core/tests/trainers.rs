mod common;

use common::{set_cat, set_num, small_dataset};
use hpfair_core::seed::rng;
use hpfair_core::trainers::{default_config, hp_space, train, Learned};
use hpfair_core::Algorithm;

#[test]
fn tree_constraints_hold_on_fuzzed_configs() {
    let ds = small_dataset(300, 1);
    let space = hp_space(Algorithm::DecisionTree);
    let mut r = rng(2);
    for i in 0..1000 {
        let c = space.sample_uniform(&mut r);
        let v = space.view(&c);
        let m = train(Algorithm::DecisionTree, &c, &ds, i).unwrap();
        let Learned::Tree(t) = &m.learned else { panic!() };
        assert!(t.depth() <= v.int("max_depth"), "config {i}");
        let weight_leaf = (v.num("min_weight_fraction_leaf") * ds.len() as f64 - 1e-9).ceil() as usize;
        let min_leaf = v.int("min_samples_leaf").max(weight_leaf);
        assert!(t.leaf_sizes().iter().all(|&s| s >= min_leaf), "config {i}: {:?} < {min_leaf}", t.leaf_sizes());
        assert_eq!(t.leaf_sizes().iter().sum::<usize>(), ds.len());
    }
}

#[test]
fn single_tree_forest_on_all_rows_equals_the_decision_tree() {
    let ds = small_dataset(400, 3);
    let dt_space = hp_space(Algorithm::DecisionTree);
    let rf_space = hp_space(Algorithm::RandomForest);
    let mut r = rng(4);
    for k in 0..20 {
        let mut dt = dt_space.sample_uniform(&mut r);
        set_cat(&dt_space, &mut dt, "splitter", "best");
        let v = dt_space.view(&dt);
        let mut rf = default_config(&rf_space);
        for name in ["max_depth", "min_samples_split", "min_samples_leaf", "min_weight_fraction_leaf"] {
            set_num(&rf_space, &mut rf, name, v.num(name));
        }
        set_cat(&rf_space, &mut rf, "criterion", v.cat("criterion"));
        set_cat(&rf_space, &mut rf, "max_features", v.cat("max_features"));
        set_num(&rf_space, &mut rf, "n_estimators", 1.0);
        set_num(&rf_space, &mut rf, "max_samples", 1.0);
        let a = train(Algorithm::DecisionTree, &dt, &ds, 10 + k).unwrap();
        let b = train(Algorithm::RandomForest, &rf, &ds, 10 + k).unwrap();
        assert_eq!(a.predict(ds.rows()).unwrap(), b.predict(ds.rows()).unwrap());
        let (Learned::Tree(t), Learned::Forest(f)) = (&a.learned, &b.learned) else { panic!() };
        assert_eq!(&f.trees()[0], t);
    }
}

#[test]
fn every_trainer_survives_uniform_configs() {
    let ds = small_dataset(200, 5);
    for alg in Algorithm::ALL {
        let space = hp_space(alg);
        let mut r = rng(6);
        for i in 0..200 {
            let c = space.sample_uniform(&mut r);
            let m = train(alg, &c, &ds, i).unwrap_or_else(|e| panic!("{alg} config {i}: {e}"));
            let p = m.predict(ds.rows()).unwrap();
            assert_eq!(p.len(), ds.len());
            assert!(p.iter().all(|&y| y <= 1));
        }
    }
}

#[test]
fn strong_regularization_predicts_the_majority_class() {
    let ds = small_dataset(500, 7);
    let space = hp_space(Algorithm::LogisticRegression);
    let mut c = default_config(&space);
    set_num(&space, &mut c, "C", 1e-4);
    let m = train(Algorithm::LogisticRegression, &c, &ds, 0).unwrap();
    let ones = ds.labels().iter().filter(|&&y| y == 1).count();
    let majority = u8::from(2 * ones > ds.len());
    assert!(m.predict(ds.rows()).unwrap().iter().all(|&p| p == majority));
}

#[test]
fn training_is_deterministic() {
    let ds = small_dataset(300, 8);
    for alg in Algorithm::ALL {
        let space = hp_space(alg);
        let c = space.sample_uniform(&mut rng(9));
        assert_eq!(train(alg, &c, &ds, 3).unwrap(), train(alg, &c, &ds, 3).unwrap(), "{alg}");
    }
}
