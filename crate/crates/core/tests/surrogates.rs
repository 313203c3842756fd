use hpfair_core::seed::rng;
use hpfair_core::surrogates::forest::{fit_forest, ForestParams};
use hpfair_core::surrogates::gbt::{fit_gbt, GbtParams};
use hpfair_core::surrogates::mlp::Network;
use hpfair_core::surrogates::regtree::{RegTreeParams, RegressionTree};
use hpfair_core::surrogates::svr::{self, SvrParams};
use hpfair_core::surrogates::{encode, fit, EncodedConfig, SurrogateKind};
use hpfair_core::trainers::{hp_space, Algorithm};
use rand::Rng;

fn points(n: usize, width: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..width).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
    let y = x
        .iter()
        .map(|v| (0.5 + 0.2 * v[0].sin() + 0.1 * v[width - 1] * v[0]).clamp(0.0, 1.0))
        .collect();
    (x, y)
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let (x, y) = points(5, 4, 1);
    let mut net = Network::new(&[4, 32, 32, 32, 32, 1], &mut rng(7));
    let (_, analytic) = net.mse_and_gradient(&x, &y);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..analytic.len() {
        let orig = net.params()[k];
        net.params_mut()[k] = orig + h;
        let plus = net.mse(&x, &y);
        net.params_mut()[k] = orig - h;
        let minus = net.mse(&x, &y);
        net.params_mut()[k] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let scale = analytic[k].abs().max(numeric.abs());
        if scale > 1e-8 {
            worst = worst.max((analytic[k] - numeric).abs() / scale);
        }
    }
    assert!(worst <= 1e-4, "max relative error {worst}");
}

#[test]
fn forest_prediction_is_the_mean_of_its_trees() {
    let (x, y) = points(80, 3, 2);
    let f = fit_forest(&x, &y, &ForestParams { n_trees: 25, ..ForestParams::default() }, 5);
    let (probe, _) = points(30, 3, 3);
    for row in &probe {
        let per_tree = f.tree_predictions(row);
        let mean = per_tree.iter().sum::<f64>() / per_tree.len() as f64;
        assert_eq!(f.predict_raw(row), mean);
    }
}

#[test]
fn one_round_of_boosting_equals_a_residual_tree() {
    let (x, y) = points(20, 3, 4);
    let p = GbtParams {
        rounds: 1,
        learning_rate: 1.0,
        max_depth: usize::MAX,
        min_samples_leaf: 1,
    };
    let g = fit_gbt(&x, &y, &p);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let residual: Vec<f64> = y.iter().map(|t| t - mean).collect();
    let tree = RegressionTree::fit(
        &x,
        &residual,
        &(0..20).collect::<Vec<_>>(),
        &RegTreeParams {
            max_depth: usize::MAX,
            min_samples_leaf: 1,
            max_features: None,
        },
        None,
    );
    let worst = x
        .iter()
        .map(|r| (g.predict_raw(r) - (tree.predict(r) + mean)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn boosting_training_error_never_increases() {
    let (x, y) = points(150, 4, 5);
    let g = fit_gbt(&x, &y, &GbtParams { max_depth: 3, rounds: 60, ..GbtParams::default() });
    for w in g.train_mse.windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn svr_dual_solution_satisfies_kkt_within_tolerance() {
    for seed in 0..4 {
        let (x, y) = points(120, 3, 10 + seed);
        let params = SvrParams::default();
        let gamma = svr::auto_gamma(&x);
        let k = svr::rbf_kernel(&x, gamma);
        let sol = svr::solve_dual(&k, &y, &params);
        let l = y.len();
        let mut g = svr::dual_linear_term(&y, params.epsilon);
        for t in 0..2 * l {
            let yt = if t < l { 1.0 } else { -1.0 };
            for s in 0..2 * l {
                let ys = if s < l { 1.0 } else { -1.0 };
                g[t] += yt * ys * k[(t % l) * l + s % l] * sol.alpha[s];
            }
        }
        let balance: f64 = (0..l).map(|i| sol.alpha[i] - sol.alpha[i + l]).sum();
        assert!(balance.abs() < 1e-9);
        assert!(sol.alpha.iter().all(|a| (0.0..=params.c).contains(a)));
        let v = svr::violation(&sol.alpha, &g, params.c);
        assert!(v <= params.tol || sol.hit_iteration_cap, "violation {v}");
    }
}

#[test]
fn baseline_beats_every_other_constant_on_its_training_set() {
    let space = hp_space(Algorithm::DecisionTree);
    let mut r = rng(6);
    let train: Vec<(EncodedConfig, f64)> = (0..50)
        .map(|_| (encode(&space.sample_uniform(&mut r), &space).unwrap(), r.random_range(0.0..0.6)))
        .collect();
    let s = fit(SurrogateKind::Baseline, &space, &train, 0).unwrap();
    let enc: Vec<EncodedConfig> = train.iter().map(|t| t.0.clone()).collect();
    let pred = s.predict(&space, &enc).unwrap();
    let mse = |c: &dyn Fn(usize) -> f64| train.iter().enumerate().map(|(i, t)| (c(i) - t.1).powi(2)).sum::<f64>();
    let own = mse(&|i| pred[i]);
    for step in 0..=1000 {
        let c = step as f64 / 1000.0;
        assert!(own <= mse(&|_| c) + 1e-12, "constant {c} beats the baseline");
    }
}

#[test]
fn fitting_is_deterministic_for_every_kind() {
    let space = hp_space(Algorithm::RandomForest);
    let mut r = rng(8);
    let train: Vec<(EncodedConfig, f64)> = (0..120)
        .map(|_| {
            let e = encode(&space.sample_uniform(&mut r), &space).unwrap();
            let t = (e.0[0] / 64.0).clamp(0.0, 1.0);
            (e, t)
        })
        .collect();
    let probe: Vec<EncodedConfig> = (0..20).map(|_| encode(&space.sample_uniform(&mut r), &space).unwrap()).collect();
    for kind in SurrogateKind::ALL {
        let a = fit(kind, &space, &train, 42).unwrap().predict(&space, &probe).unwrap();
        let b = fit(kind, &space, &train, 42).unwrap().predict(&space, &probe).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}
