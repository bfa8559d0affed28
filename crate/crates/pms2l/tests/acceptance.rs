//! Acceptance suite: one test per release criterion, each ending in a single
//! PASS line with the measured quantities.

use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use pms2l::bounds::{
    closed_form_rademacher, corollary4_bound, exact_rademacher_linear, mc_rademacher_linear,
    theorem3_bound, BoundParams, RademacherEstimates,
};
use pms2l::clustering::{minimal_matching_distance_brute, minimal_matching_distance_ids};
use pms2l::data::Sample;
use pms2l::eval::{run_experiment, DatasetSpec, ExperimentConfig, Method};
use pms2l::objective::{
    margin, penalized_risk, phi_rho, subgradient, unlabeled_margin, ClusterContext,
};
use pms2l::seed;
use pms2l::trainer::LinearModel;

fn random_partition(rng: &mut impl Rng, n: usize, g: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..g)).collect()
}

#[test]
fn criterion_01_metric_axioms() {
    let start = Instant::now();
    let mut rng = seed::rng(1001);
    for trial in 0..1000 {
        let g = rng.gen_range(2..=6);
        let n = 50;
        let a = random_partition(&mut rng, n, g);
        let b = random_partition(&mut rng, n, g);
        let c = random_partition(&mut rng, n, g);
        let dab = minimal_matching_distance_ids(&a, &b, g).unwrap();
        let dba = minimal_matching_distance_ids(&b, &a, g).unwrap();
        let dac = minimal_matching_distance_ids(&a, &c, g).unwrap();
        let dbc = minimal_matching_distance_ids(&b, &c, g).unwrap();
        assert!(dab >= 0.0, "triple {trial}: negativity");
        assert_eq!(dab, dba, "triple {trial}: symmetry");
        assert_eq!(
            minimal_matching_distance_ids(&a, &a, g).unwrap(),
            0.0,
            "triple {trial}: identity"
        );
        assert!(dac <= dab + dbc + 1e-12, "triple {trial}: triangle inequality");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "metric suite took {elapsed:?}");
    println!("PASS metric axioms: 1000 triples, 0 violations, {elapsed:?}");
}

#[test]
fn criterion_02_assignment_oracle() {
    let start = Instant::now();
    let mut rng = seed::rng(1002);
    for pair in 0..500 {
        let g = rng.gen_range(2..=6);
        let n = rng.gen_range(2..60);
        let a = random_partition(&mut rng, n, g);
        let b = random_partition(&mut rng, n, g);
        let fast = minimal_matching_distance_ids(&a, &b, g).unwrap();
        let brute = minimal_matching_distance_brute(&a, &b, g).unwrap();
        assert_eq!(fast, brute, "pair {pair}: hungarian {fast} vs brute force {brute}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "assignment oracle took {elapsed:?}");
    println!("PASS assignment oracle: 500 pairs exact, {elapsed:?}");
}

#[test]
fn criterion_03_loss_margin_hand_values() {
    assert_eq!(margin(&[2.0, 0.5, -1.0], 0).unwrap(), 1.5);
    assert_eq!(margin(&[2.0, 0.5, -1.0], 1).unwrap(), -1.5);
    assert_eq!(margin(&[0.4, 0.4, 0.4], 2).unwrap(), 0.0);
    assert_eq!(unlabeled_margin(&[2.0, 0.5, -1.0], &[0, 1]).unwrap(), 3.0);
    assert_eq!(unlabeled_margin(&[0.0, 0.0, 0.0], &[1]).unwrap(), 0.0);
    assert_eq!(unlabeled_margin(&[1.0, 5.0, 2.0], &[0]).unwrap(), -4.0);
    assert_eq!(phi_rho(-0.5, 1.0).unwrap(), 1.0);
    assert_eq!(phi_rho(0.25, 1.0).unwrap(), 0.75);
    assert_eq!(phi_rho(1.5, 1.0).unwrap(), 0.0);
    println!("PASS loss/margin hand values: 9 exact");
}

#[test]
fn criterion_04_subgradient_finite_differences() {
    let mut rng = seed::rng(1004);
    let k = 3;
    let d = 2;
    let rho = 1.0;
    let partition = pms2l::clustering::Partition {
        num_clusters: 2,
        assign: vec![],
        centers: Some(vec![vec![-5.0, 0.0], vec![5.0, 0.0]]),
    };
    let confident = pms2l::confident::ConfidentClusterSet {
        clusters: vec![pms2l::confident::ConfidentCluster {
            cluster_id: 0,
            predominant: vec![1],
            labeled_count: 0,
            unlabeled_count: 0,
            violation_mass: 0.0,
        }],
        kappa: 1,
        eta: 1.0,
        num_clusters: 2,
        n_eta: 0,
        u_eta: 0,
    };
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 100 {
        let labeled: Vec<Sample> = (0..5)
            .map(|_| {
                Sample::new(
                    vec![(0, rng.gen_range(-8.0..8.0)), (1, rng.gen_range(-2.0..2.0))],
                    Some(rng.gen_range(0..k)),
                )
            })
            .collect();
        let unlabeled: Vec<Sample> = (0..4)
            .map(|_| {
                Sample::new(
                    vec![(0, rng.gen_range(-8.0..8.0)), (1, rng.gen_range(-2.0..2.0))],
                    None,
                )
            })
            .collect();
        let ctx = ClusterContext::new(&partition, &confident, &labeled, &unlabeled, k).unwrap();
        let w: Vec<f64> = (0..k * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut model = LinearModel::zeros(k, d, 1e6, rho);
        model.weights = w.clone();

        let near_kink = labeled
            .iter()
            .map(|s| margin(&model.scores(s), s.label.unwrap()).unwrap())
            .chain(unlabeled.iter().map(|s| unlabeled_margin(&model.scores(s), &[1]).unwrap()))
            .any(|m| m.abs() < 1e-3 || (m - rho).abs() < 1e-3);
        if near_kink {
            continue;
        }

        let g = subgradient(&model, &labeled, &unlabeled, &ctx, rho).unwrap();
        let h = 1e-6;
        let scale = g.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for i in 0..k * d {
            let eval = |wi: f64| {
                let mut m2 = model.clone();
                m2.weights[i] = wi;
                penalized_risk(&m2, &labeled, &unlabeled, &ctx, rho).unwrap().total
            };
            let fd = (eval(w[i] + h) - eval(w[i] - h)) / (2.0 * h);
            let rel = (g[i] - fd).abs() / scale;
            worst = worst.max(rel);
            assert!(rel < 1e-4, "instance {checked} entry {i}: rel err {rel}");
        }
        checked += 1;
    }
    println!("PASS subgradient finite differences: 100 instances, worst rel err {worst:.2e}");
}

#[test]
fn criterion_05_rademacher_exactness() {
    let mut rng = seed::rng(1005);
    for instance in 0..100 {
        let m = rng.gen_range(1..=12);
        let samples: Vec<Sample> = (0..m)
            .map(|_| {
                Sample::new(
                    vec![(0, rng.gen_range(-1.0..1.0)), (1, rng.gen_range(-1.0..1.0))],
                    None,
                )
            })
            .collect();
        let b = rng.gen_range(0.5..2.0);
        let exact = exact_rademacher_linear(&samples, m, b).unwrap();

        // Exact value never exceeds the closed-form proof bound.
        let radius = samples.iter().map(Sample::norm).fold(0.0, f64::max);
        let cf = closed_form_rademacher(1, m, m, radius, b);
        assert!(exact <= cf + 1e-12, "instance {instance}: exact {exact} > bound {cf}");

        // MC estimate within 3 standard errors of the exact expectation.
        let draws = 1000;
        let est = mc_rademacher_linear(&samples, m, b, draws, 9000 + instance).unwrap();
        let mut mean = 0.0;
        let mut sq = 0.0;
        for d in 0..draws as u64 {
            let one =
                mc_rademacher_linear(&samples, m, b, 1, seed::derive(9000 + instance, d)).unwrap();
            mean += one;
            sq += one * one;
        }
        mean /= draws as f64;
        let var = (sq / draws as f64 - mean * mean).max(0.0);
        let se = (var / draws as f64).sqrt();
        assert!(
            (est - exact).abs() <= 3.0 * se + 1e-9,
            "instance {instance}: est {est} exact {exact} se {se}"
        );
    }
    println!("PASS rademacher exactness: 100 instances within tolerance");
}

#[test]
fn criterion_06_bound_term_arithmetic() {
    let params = BoundParams {
        n: 100,
        u: 1000,
        num_clusters: 10,
        num_classes: 5,
        kappa: 2,
        rho: 1.0,
        delta: 0.05,
        l_hat: 1.0,
        n_eta: 90,
        u_eta: 900,
        feature_radius: 1.0,
        norm_budget: 1.0,
    };
    let rad = RademacherEstimates {
        r_star_n: 0.0,
        r_star_u: 0.0,
        r_n: 0.0,
        mc_draws: 0,
        closed_form_r_star_n: 0.0,
        closed_form_r_star_u: 0.0,
        closed_form_r_n: 0.0,
    };
    let risk = pms2l::objective::RiskBreakdown {
        labeled_term: 0.0,
        penalty_term: 0.0,
        total: 0.0,
        per_cluster: Default::default(),
    };
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);

    let t3 = theorem3_bound(&risk, &rad, &params).unwrap();
    assert!(rel(t3.inv_s_star, 0.212030212030212));
    assert!(rel(t3.inv_t_star, 0.011));
    assert!(rel(t3.inv_v_star, 0.1015));
    assert!(rel(t3.s_term, 39.269142261784));
    assert!(rel(t3.t_term, 0.248963221450));
    assert!(rel(t3.v_term, 8.859408550326));

    let c4 = corollary4_bound(&risk, &params).unwrap();
    assert!(rel(c4.corollary_q.unwrap(), 0.61));
    assert!(rel(c4.rademacher_term, 2.705549851694));
    assert!(rel(c4.v_term, 8.524969852319));
    println!("PASS bound-term arithmetic: 9 hand values to 1e-9 relative");
}

fn synthetic_config() -> ExperimentConfig {
    // K=4, separation 8, noise 1, 400 unlabeled and 5 labels per class per
    // trial, fixed 400-point test set.
    ExperimentConfig {
        dataset: DatasetSpec::Synthetic {
            num_classes: 4,
            per_class: 105,
            separation: 8.0,
            noise: 1.0,
            test_per_class: 100,
        },
        labeled_fraction: 20.0 / 420.0,
        per_class_minimum: 5,
        trials: 10,
        num_clusters: None,
        kappa: 2,
        eta: 1e-3,
        rho: 1.0,
        norm_budget: 10.0,
        step_scale: 1.0,
        iterations: 500,
        normalize: false,
        master_seed: 5,
        methods: vec![Method::Sup, Method::Pms2l],
        compute_bounds: false,
        delta: 0.05,
        mc_draws: 200,
        stability_trials: 10,
    }
}

#[test]
fn criterion_07_synthetic_cluster_assumption() {
    let start = Instant::now();
    let (summary, _) = run_experiment(&synthetic_config()).unwrap();
    let sup = summary.per_method["SUP"].mean_accuracy;
    let pms2l = summary.per_method["PMS2L"].mean_accuracy;
    let gap = pms2l - sup;
    let elapsed = start.elapsed();
    assert!(gap >= 0.03, "gap {gap:.4} below 0.03 (SUP {sup:.4}, PMS2L {pms2l:.4})");
    assert!(summary.p_value < 0.05, "p {:.4} not significant", summary.p_value);
    assert!(elapsed.as_secs_f64() < 120.0, "synthetic experiment took {elapsed:?}");
    println!(
        "PASS synthetic experiment: SUP {sup:.4} PMS2L {pms2l:.4} gap {gap:.4} p {:.5} {elapsed:?}",
        summary.p_value
    );
}

#[test]
fn criterion_08_usps_regression() {
    let start = Instant::now();
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Files {
            train: format!("{root}/data/usps").into(),
            test: format!("{root}/data/usps.t").into(),
        },
        labeled_fraction: 0.02,
        per_class_minimum: 1,
        trials: 10,
        num_clusters: None, // 4K = 40
        kappa: 2,
        eta: 1e-3,
        rho: 1.0,
        norm_budget: 10.0,
        step_scale: 10.0,
        iterations: 500,
        normalize: true,
        master_seed: 0,
        methods: vec![Method::Sup, Method::Pms2l],
        compute_bounds: false,
        delta: 0.05,
        mc_draws: 200,
        stability_trials: 10,
    };
    let (summary, _) = run_experiment(&cfg).unwrap();
    let sup = summary.per_method["SUP"].mean_accuracy;
    let pms2l = summary.per_method["PMS2L"].mean_accuracy;
    let elapsed = start.elapsed();
    assert!(
        pms2l >= sup + 0.01,
        "PMS2L {pms2l:.4} does not beat SUP {sup:.4} by 0.01"
    );
    assert!((sup - 0.790).abs() <= 0.08, "SUP {sup:.4} outside 0.790 +/- 0.08");
    assert!((pms2l - 0.821).abs() <= 0.08, "PMS2L {pms2l:.4} outside 0.821 +/- 0.08");
    assert!(elapsed.as_secs_f64() < 900.0, "USPS run took {elapsed:?}");
    println!("PASS usps regression: SUP {sup:.4} PMS2L {pms2l:.4} {elapsed:?}");
}

#[test]
fn criterion_09_bound_sanity() {
    let mut cfg = synthetic_config();
    cfg.trials = 50;
    cfg.methods = vec![Method::Pms2l];
    cfg.compute_bounds = true;
    let (summary, _) = run_experiment(&cfg).unwrap();
    let rate = summary.bound_violation_rate.unwrap();
    assert!(rate <= 0.15, "violation rate {rate:.3} above 0.15");
    println!(
        "PASS bound sanity: violation rate {rate:.3} over 50 trials (L_hat {:.2})",
        summary.l_hat.unwrap()
    );
}

#[test]
fn criterion_10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let pool = pms2l::data::make_synthetic_blobs(3, 40, 8.0, 1.0, 4).unwrap();
    pms2l::data::write_libsvm(&dir.path().join("pool.svm"), &pool).unwrap();

    let run = |out: &str| {
        let base = dir.path().join(out);
        fs::create_dir_all(&base).unwrap();
        let p = |name: &str| base.join(name).to_string_lossy().into_owned();
        let pool = dir.path().join("pool.svm").to_string_lossy().into_owned();
        let steps: Vec<Vec<String>> = vec![
            vec![
                "split".into(), "--pool".into(), pool.clone(),
                "--fraction".into(), "0.2".into(), "--seed".into(), "3".into(),
                "--out-dir".into(), p(""),
            ],
            vec![
                "cluster".into(), "--unlabeled".into(), p("unlabeled.svm"),
                "--clusters".into(), "6".into(), "--seed".into(), "3".into(),
                "--out".into(), p("partition.json"),
            ],
            vec![
                "confident".into(), "--partition".into(), p("partition.json"),
                "--labeled".into(), p("labeled.svm"),
                "--unlabeled".into(), p("unlabeled.svm"),
                "--out".into(), p("confident.json"),
            ],
            vec![
                "train".into(), "--labeled".into(), p("labeled.svm"),
                "--unlabeled".into(), p("unlabeled.svm"),
                "--partition".into(), p("partition.json"),
                "--confident".into(), p("confident.json"),
                "--iterations".into(), "100".into(), "--seed".into(), "3".into(),
                "--out".into(), p("model.json"),
            ],
            vec![
                "bound".into(), "--model".into(), p("model.json"),
                "--labeled".into(), p("labeled.svm"),
                "--unlabeled".into(), p("unlabeled.svm"),
                "--partition".into(), p("partition.json"),
                "--confident".into(), p("confident.json"),
                "--l-hat".into(), "1.0".into(), "--seed".into(), "3".into(),
                "--out".into(), p("bound.json"),
            ],
            vec![
                "stability".into(), "--pool".into(), pool.clone(),
                "--clusters".into(), "3".into(), "--trials".into(), "5".into(),
                "--seed".into(), "3".into(), "--out".into(), p("stability.json"),
            ],
        ];
        for args in steps {
            let out = Command::new(env!("CARGO_BIN_EXE_pms2l"))
                .args(&args)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
    };
    run("a");
    run("b");
    let artifacts = [
        "labeled.svm",
        "unlabeled.svm",
        "manifest.json",
        "partition.json",
        "confident.json",
        "model.json",
        "bound.json",
        "stability.json",
    ];
    for f in artifacts {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "artifact {f} differs between identical runs");
    }
    println!("PASS cli determinism: {} artifacts byte-identical", artifacts.len());
}
