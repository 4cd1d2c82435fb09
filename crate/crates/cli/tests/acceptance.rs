//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p perpred-cli --test acceptance -- --nocapture`.
//! Criterion 7 needs the benchmark CSVs described in `data/README.md` and
//! prints SKIP when they are absent.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use perpred_cli::commands;
use perpred_cli::config::{
    DataSource, EvaluateSettings, ExperimentConfig, ListSettings, PredictSettings,
    RefClassSettings, SyntheticSettings,
};
use perpred_core::data::CsvSchema;
use perpred_core::listlearn::{sparse_list, ListLearnConfig};
use perpred_core::perpredict::{personalized_predict, PredictConfig};
use perpred_core::refclass::{learn_reference_class, RefClassConfig};
use perpred_core::seeding::derive_seed;
use perpred_core::synth::{
    brute_force_refclass_2d, draw, draw_features, wedge_probability_mc, Marginal, SyntheticSpec,
};
use perpred_core::*;

fn gaussian() -> Marginal {
    Marginal::Gaussian { sigma: 1.0 }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let coords: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let v = Vector::new(coords).unwrap();
        if let Ok(u) = normalize(&v) {
            return u;
        }
    }
}

/// Unit vector orthogonal to everything in `basis`, drawn at random.
fn random_orthogonal_unit(dim: usize, basis: &[&Vector], rng: &mut ChaCha8Rng) -> Option<Vector> {
    for _ in 0..64 {
        let mut v = random_unit(dim, rng);
        for b in basis {
            v = project_orthogonal(&v, b).ok()?;
        }
        if let Ok(u) = normalize(&v) {
            return Some(u);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// 1. Projection back into the query halfspace never increases the angle to
//    the optimum.
// ---------------------------------------------------------------------------
#[test]
fn acceptance_1_contractive_projection() {
    let cases_per_dim = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for dim in [2usize, 3, 5, 10] {
        let mut done = 0;
        while done < cases_per_dim {
            let x = random_unit(dim, &mut rng);
            let mut v = random_unit(dim, &mut rng);
            if x.dot(&v).unwrap() < 0.0 {
                v = v.scale(-1.0);
            }
            let mut w = random_unit(dim, &mut rng);
            if w.dot(&x).unwrap() >= 0.0 {
                w = w.scale(-1.0);
            }
            if w.dot(&x).unwrap() >= 0.0 || w.dot(&v).unwrap() < 0.0 {
                continue;
            }
            let projected = match project_orthogonal(&w, &x).and_then(|p| normalize(&p)) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let before = angle(&w, &v).unwrap();
            let after = angle(&projected, &v).unwrap();
            assert!(
                after <= before + 1e-9,
                "dim {dim}: projection increased the angle: {after} > {before}"
            );
            done += 1;
        }
    }
    println!("acceptance 1 (contractive projection, 10000 cases x dims 2/3/5/10): PASS");
}

// ---------------------------------------------------------------------------
// 2. A gradient step with a guaranteed component toward the optimum
//    contracts the angle by at least kappa^2 phi / 64.
// ---------------------------------------------------------------------------
#[test]
fn acceptance_2_angle_contraction() {
    let cases_per_dim = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for dim in [2usize, 3, 5, 10] {
        let mut done = 0;
        while done < cases_per_dim {
            let v = random_unit(dim, &mut rng);
            let phi = rng.gen_range(1e-4..=std::f64::consts::FRAC_PI_2);
            let kappa = rng.gen_range(1e-4..=1.0);
            let theta = rng.gen_range(phi..=std::f64::consts::FRAC_PI_2);

            let Some(r) = random_orthogonal_unit(dim, &[&v], &mut rng) else {
                continue;
            };
            let w = v.scale(theta.cos()).add(&r.scale(theta.sin())).unwrap();
            let v_perp = match project_orthogonal(&v, &w).and_then(|p| normalize(&p)) {
                Ok(p) => p,
                Err(_) => continue,
            };
            // u with <v_perp, u> = kappa, <w, u> = 0, ||u|| <= 1.
            let u = if dim >= 3 {
                match random_orthogonal_unit(dim, &[&w, &v_perp], &mut rng) {
                    Some(z) => {
                        let t: f64 = rng.gen_range(0.0..=1.0);
                        v_perp
                            .scale(kappa)
                            .add(&z.scale((1.0 - kappa * kappa).sqrt() * t))
                            .unwrap()
                    }
                    None => continue,
                }
            } else {
                let c: f64 = rng.gen_range(kappa..=1.0);
                v_perp.scale(c)
            };
            debug_assert!(u.norm() <= 1.0 + 1e-12);

            let lambda = kappa * phi / 4.0;
            let w_next = normalize(&w.add(&u.scale(lambda)).unwrap()).unwrap();
            let before = angle(&w, &v).unwrap();
            let after = angle(&w_next, &v).unwrap();
            assert!(
                after <= before - kappa * kappa * phi / 64.0 + 1e-9,
                "dim {dim}: contraction failed: theta {before} -> {after}, kappa {kappa}, phi {phi}"
            );
            done += 1;
        }
    }
    println!("acceptance 2 (gradient step angle contraction, 10000 cases x dims 2/3/5/10): PASS");
}

// ---------------------------------------------------------------------------
// 3. Wedge mass between two halfspaces is at most U * angle, and equals
//    angle / 2 pi under the rotationally symmetric 2-d Gaussian.
// ---------------------------------------------------------------------------
#[test]
fn acceptance_3_wedge_mass_bound() {
    let n = 100_000usize;
    let params = gaussian().well_behaved(2).unwrap();
    let slack = 3.0 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..20u64 {
        let w = random_unit(2, &mut rng);
        let v = random_unit(2, &mut rng);
        let theta = angle(&w, &v).unwrap();
        let estimate =
            wedge_probability_mc(&w, &v, &gaussian(), n, derive_seed(303, case)).unwrap();
        assert!(
            estimate <= params.u * theta + slack,
            "case {case}: wedge {estimate} above U*theta = {}",
            params.u * theta
        );
        let exact = theta / (2.0 * std::f64::consts::PI);
        assert!(
            (estimate - exact).abs() <= 0.01,
            "case {case}: wedge {estimate} vs rotational value {exact}"
        );
    }
    println!("acceptance 3 (wedge mass bound, 20 Monte Carlo pairs at n=100000): PASS");
}

// ---------------------------------------------------------------------------
// 4. The learned reference class tracks the exact 2-d oracle.
// ---------------------------------------------------------------------------
#[test]
fn acceptance_4_reference_class_vs_oracle() {
    let params = gaussian().well_behaved(2).unwrap();
    let cfg = RefClassConfig::from_formulas(0.05, 0.1, params, 1.0).unwrap();
    let mut contained = 0usize;
    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(404, trial));
        let v = random_unit(2, &mut rng);
        let noise = 0.1 * (trial as f64 / 49.0);
        let spec =
            SyntheticSpec::reference_class(2, gaussian(), v.clone(), noise, derive_seed(405, trial))
                .unwrap();
        let sample = draw(&spec, 200).unwrap();
        let query = (0..sample.len())
            .map(|i| sample.point(i))
            .find(|x| x.dot(&v).unwrap() > 0.2 && !x.is_zero())
            .expect("an inside point exists at m=200");

        let train = sample.select(&(0..133).collect::<Vec<_>>());
        let validation = sample.select(&(133..200).collect::<Vec<_>>());
        let h = learn_reference_class(&train, &validation, &query, &cfg).unwrap();
        if h.contains_within(&query, 1e-10).unwrap() {
            contained += 1;
        }

        let learned = empirical_conditional_error(&sample, Rule::Constant(1), &h)
            .unwrap()
            .value()
            .expect("training sample has support");
        let (_, oracle) = brute_force_refclass_2d(&sample, &query).unwrap();
        assert!(
            learned <= oracle + 0.10,
            "trial {trial}: learned {learned} vs oracle optimum {oracle}"
        );
    }
    assert_eq!(contained, 50, "query containment must hold in 50/50 runs");
    println!("acceptance 4 (reference class within 0.10 of the exact 2-d oracle, 50 instances): PASS");
}

// ---------------------------------------------------------------------------
// 5. The enumerated list contains a classifier consistent with the plant.
// ---------------------------------------------------------------------------

/// Gaussian features kept only when the planted score clears a margin band,
/// labeled by the plant (noiseless).
fn banded_sample(
    dim: usize,
    cstar: &SparseLinearClassifier,
    band: f64,
    n: usize,
    seed: u64,
) -> LabeledSample {
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    let mut got = 0usize;
    let mut stream = 0u64;
    while got < n {
        let rows = draw_features(&gaussian(), dim, 2 * n, derive_seed(seed, stream));
        for r in rows.chunks_exact(dim) {
            if (cstar.score_slice(r) - 1.0).abs() >= band {
                feats.extend_from_slice(r);
                labels.push(cstar.predict_slice(r));
                got += 1;
                if got == n {
                    break;
                }
            }
        }
        stream += 1;
    }
    LabeledSample::from_parts(dim, feats, labels).unwrap()
}

#[test]
fn acceptance_5_list_consistency() {
    let dim = 10usize;
    let cstar = SparseLinearClassifier::new(vec![(2, 1.5), (7, -0.15)], 2).unwrap();
    let band = 0.35; // every point carries a margin far above nu = 2^-18
    let mut passing = 0usize;
    let mut worst: f64 = 1.0;
    for seed in 0..10u64 {
        let train = banded_sample(dim, &cstar, band, 2000, derive_seed(500, seed));
        let cfg = ListLearnConfig::new(2, 8, 64, seed).unwrap();
        let list = sparse_list(&train, &cfg).unwrap();
        let fresh = banded_sample(dim, &cstar, band, 10_000, derive_seed(501, seed));
        let mut best = 0.0f64;
        for c in &list.classifiers {
            let agree = fresh
                .iter()
                .filter(|(x, y)| c.predict_slice(x) == *y)
                .count();
            best = best.max(agree as f64 / fresh.len() as f64);
        }
        if best >= 0.99 {
            passing += 1;
        }
        worst = worst.min(best);
    }
    assert!(
        passing >= 9,
        "only {passing}/10 seeds reached 99% fresh-inlier agreement (worst {worst:.4})"
    );
    println!(
        "acceptance 5 (list consistency, d=10 sub-sample 64): PASS — {passing}/10 seeds >= 99% (worst {worst:.4})"
    );
}

// ---------------------------------------------------------------------------
// 6. End-to-end error scales with the planted noise level.
// ---------------------------------------------------------------------------
#[test]
fn acceptance_6_error_scaling_in_opt() {
    let dim = 10usize;
    let opts = [0.0001f64, 0.0016, 0.0256];
    let seeds = 5u64;
    let cstar = SparseLinearClassifier::new(vec![(0, 1.3), (4, -0.7)], 2).unwrap();
    let v = normalize(
        &Vector::new(vec![0.0, 1.0, 0.3, 0.0, 0.0, -0.2, 0.0, 0.4, 0.0, 0.0]).unwrap(),
    )
    .unwrap();
    let query = v.scale(1.5);

    let mut medians = Vec::new();
    for &opt in &opts {
        let mut errs = Vec::new();
        for seed in 0..seeds {
            // The same feature draw per seed across noise levels: flips are
            // boundary-first, so noise sets are nested in OPT.
            let spec = SyntheticSpec::new(
                dim,
                gaussian(),
                v.clone(),
                cstar.clone(),
                opt,
                derive_seed(606, seed),
            )
            .unwrap();
            let train = draw(&spec, 4000).unwrap();
            let cfg = PredictConfig {
                list: ListLearnConfig::new(2, 8, 24, derive_seed(607, seed)).unwrap(),
                epsilon: 0.3,
                delta: 0.1,
                opt,
                params: gaussian().well_behaved(dim).unwrap(),
                sample_multiplier: 1.0,
                selection_size: 0,
                max_candidates: 256,
                seed: derive_seed(608, seed),
            };
            let result = personalized_predict(&train, &query, &cfg).unwrap();

            let mut fresh_spec = spec.clone();
            fresh_spec.seed = derive_seed(609, seed);
            let fresh = draw(&fresh_spec, 200_000).unwrap();
            let err = empirical_conditional_error(
                &fresh,
                Rule::Sparse(&result.pair.classifier),
                &result.pair.halfspace,
            )
            .unwrap()
            .value()
            .expect("fresh sample supports the halfspace");
            errs.push(err);
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(errs[errs.len() / 2]);
    }

    for step in 1..medians.len() {
        assert!(
            medians[step] + 1e-12 >= medians[step - 1],
            "median error decreased with noise: {medians:?}"
        );
        assert!(
            medians[step] <= 6.0 * medians[step - 1] + 1e-12,
            "median error grew more than 6x per step: {medians:?}"
        );
    }
    println!(
        "acceptance 6 (error scaling over OPT {:?}): PASS — medians {:?}",
        opts, medians
    );
}

// ---------------------------------------------------------------------------
// 7. Proximity to the published benchmark error rates (data-dependent).
// ---------------------------------------------------------------------------

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("data")
}

fn benchmark_config(
    csv: PathBuf,
    schema: CsvSchema,
    subsample: usize,
    opt: f64,
    out: PathBuf,
) -> ExperimentConfig {
    ExperimentConfig {
        task: None,
        data: DataSource::Csv {
            path: csv,
            schema,
            standardize: true,
        },
        list: ListSettings {
            sparsity: 2,
            bit_budget: 8,
            subsample_size: subsample,
            dedup_tolerance: 1e-9,
        },
        refclass: RefClassSettings::default(),
        predict: PredictSettings {
            opt,
            epsilon: 0.3,
            delta: 0.1,
            selection_size: 0,
            max_candidates: 256,
        },
        evaluate: EvaluateSettings {
            train_fraction: 2.0 / 3.0,
            seeds: (1..=10).collect(),
            n: None,
        },
        query: None,
        out: Some(out),
        seed: 7,
    }
}

#[test]
fn acceptance_7_benchmark_error_proximity() {
    let dir = data_dir();
    let haberman = dir.join("haberman.csv");
    let pima = dir.join("pima.csv");
    if !haberman.exists() || !pima.exists() {
        println!(
            "acceptance 7 (benchmark proximity): SKIP — place haberman.csv and pima.csv under data/ (see data/README.md)"
        );
        return;
    }
    let tmp = tempfile::tempdir().unwrap();

    let cfg = benchmark_config(
        haberman,
        CsvSchema {
            label_column: "status".into(),
            positive_label: "2".into(),
            categorical_columns: vec![],
        },
        204,
        0.1,
        tmp.path().join("haberman_report.json"),
    );
    let report = commands::cmd_evaluate(&cfg).unwrap();
    let habe = report.summary.pers_error_median.expect("trials succeeded");
    assert!(
        (habe - 0.2745).abs() <= 0.08,
        "haberman median personalized error {habe} outside 0.2745 +/- 0.08"
    );

    let cfg = benchmark_config(
        pima,
        CsvSchema {
            label_column: "outcome".into(),
            positive_label: "1".into(),
            categorical_columns: vec![],
        },
        192,
        0.1,
        tmp.path().join("pima_report.json"),
    );
    let report = commands::cmd_evaluate(&cfg).unwrap();
    let pima_err = report.summary.pers_error_median.expect("trials succeeded");
    assert!(
        (pima_err - 0.2461).abs() <= 0.08,
        "pima median personalized error {pima_err} outside 0.2461 +/- 0.08"
    );
    println!(
        "acceptance 7 (benchmark proximity): PASS — haberman {habe:.4} (target .2745 +/- .08), pima {pima_err:.4} (target .2461 +/- .08)"
    );
}

// ---------------------------------------------------------------------------
// 8. Evaluation runs are byte-identical outside the metadata block.
// ---------------------------------------------------------------------------
#[test]
fn acceptance_8_evaluate_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let out_path = tmp.path().join("report.json");
    let run = || -> Vec<u8> {
        let out = out_path.clone();
        let cfg = ExperimentConfig {
            task: None,
            data: DataSource::Synthetic {
                spec: SyntheticSettings {
                    dim: 5,
                    marginal: gaussian(),
                    planted_normal: vec![0.0, 1.0, 0.0, 0.4, 0.0],
                    planted_terms: vec![(0, 1.2), (3, -0.6)],
                    sparsity: 2,
                    noise_rate: 0.05,
                    noise_region: Default::default(),
                    noise_placement: Default::default(),
                    label_rule: Default::default(),
                },
                n: 2000,
            },
            list: ListSettings {
                sparsity: 2,
                bit_budget: 8,
                subsample_size: 20,
                dedup_tolerance: 1e-9,
            },
            refclass: RefClassSettings::default(),
            predict: PredictSettings {
                opt: 0.05,
                epsilon: 0.3,
                delta: 0.1,
                selection_size: 0,
                max_candidates: 64,
            },
            evaluate: EvaluateSettings {
                train_fraction: 2.0 / 3.0,
                seeds: vec![],
                n: None,
            },
            query: None,
            out: Some(out.clone()),
            seed: 4242,
        };
        commands::cmd_evaluate(&cfg).unwrap();
        // Strip the metadata block, keep everything else byte-exact.
        let mut json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        json.as_object_mut().unwrap().remove("metadata");
        serde_json::to_vec(&json).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "reports differ outside the metadata block");
    println!("acceptance 8 (evaluation determinism, synthetic d=5 n=2000): PASS");
}
