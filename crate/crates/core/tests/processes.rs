use rayon::prelude::*;
use serde_json::json;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use mvseq::acov::autocov;
use mvseq::experiments::{run_replications, TruthSpec};
use mvseq::samplers::ar1::{self, LagConvention};
use mvseq::samplers::{stream, Ar1Params, Ar1Truth, Model, ModelKind};
use mvseq::{Chain, ExperimentConfig, Method, RegionKind};

#[test]
fn empirical_autocovariances_track_closed_form() {
    let params = Ar1Params::hadamard_fixture(4).unwrap();
    let truth = Ar1Truth::new(&params).unwrap();
    let batches = 50;
    let len = 20_000;
    let chain = ar1::simulate(&params, batches * len, &mut stream(3, 0)).unwrap();
    for t in 0..4 {
        let whole = autocov(&chain, t).unwrap();
        let per_batch: Vec<_> = (0..batches)
            .map(|b| {
                let part = Chain::new(
                    chain.values()[b * len * 4..(b + 1) * len * 4].to_vec(),
                    len,
                    4,
                )
                .unwrap();
                autocov(&part, t).unwrap()
            })
            .collect();
        let g = truth.gamma(t);
        for i in 0..4 {
            for j in 0..4 {
                let xs: Vec<f64> = per_batch.iter().map(|m| m[(i, j)]).collect();
                let m = xs.iter().sum::<f64>() / batches as f64;
                let sd =
                    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64).sqrt();
                let se = sd / (batches as f64).sqrt();
                assert!(
                    (whole[(i, j)] - g[(i, j)]).abs() <= 5.0 * se,
                    "lag {t} entry ({i},{j}): {} vs {} (se {se})",
                    whole[(i, j)],
                    g[(i, j)]
                );
            }
        }
    }
}

#[test]
fn scalar_long_run_variance_rules_out_printed_lag_formula() {
    let params = Ar1Params::scalar(0.5, 1.0, 0.0).unwrap();
    let right = Ar1Truth::new(&params).unwrap().sigma.get(0, 0);
    let printed = Ar1Truth::with_convention(&params, LagConvention::PrintedEvenPower)
        .unwrap()
        .sigma
        .get(0, 0);
    let n = 1_000_000;
    let r = 200;
    let means: Vec<f64> = (0..r as u64)
        .into_par_iter()
        .map(|k| {
            ar1::simulate(&params, n, &mut stream(41, k))
                .unwrap()
                .mean()[0]
        })
        .collect();
    let m = means.iter().sum::<f64>() / r as f64;
    let ss: f64 = means.iter().map(|x| (x - m).powi(2)).sum();
    // (R-1) s² / σ² is χ²_{R-1}; invert at a 1e-4 two-sided level.
    let chi = ChiSquared::new((r - 1) as f64).unwrap();
    let lo = n as f64 * ss / chi.inverse_cdf(1.0 - 5e-5);
    let hi = n as f64 * ss / chi.inverse_cdf(5e-5);
    assert!(lo <= right && right <= hi, "[{lo}, {hi}] misses {right}");
    assert!(printed < lo, "[{lo}, {hi}] does not exclude {printed}");
}

fn small(model: ModelKind, params: serde_json::Value) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(model, params);
    c.n = 2_000;
    c.replications = 6;
    c.master_seed = 5;
    c
}

#[test]
fn single_replication_has_no_standard_errors() {
    let mut c = small(ModelKind::Ar1, json!({"kind": "hadamard", "p": 2}));
    c.replications = 1;
    let report = run_replications(&c).unwrap();
    let names: Vec<_> = report.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(names, ["mk", "mis", "misadj", "uis", "uis-bonferroni"]);
    for row in &report.rows {
        assert!(row.ess_mean.is_some());
        assert_eq!(row.ess_se, None);
    }
}

#[test]
fn experiment_is_reproducible_and_thread_count_free() {
    let c = small(ModelKind::Ar1, json!({"kind": "hadamard", "p": 4}));
    let a = run_replications(&c).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_replications(&c).unwrap());
    assert_eq!(a, b);
    let mut other = c.clone();
    other.master_seed += 1;
    assert_ne!(a.rows, run_replications(&other).unwrap().rows);
}

#[test]
fn method_and_region_selection_shapes_the_table() {
    let mut c = small(ModelKind::Ar1, json!({"kind": "scalar", "a": 0.3}));
    c.methods = vec![Method::Uis, Method::Mis];
    c.regions = vec![RegionKind::Cube];
    let report = run_replications(&c).unwrap();
    let names: Vec<_> = report.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(names, ["mis", "uis"]);
    assert_eq!(report.row("mis").unwrap().coverage, None);
    assert!(report.row("uis").unwrap().coverage.is_some());
}

#[test]
fn long_run_truth_for_mcmc_models() {
    for (kind, params) in [
        (ModelKind::Logistic, json!({"burn_in": 1000})),
        (ModelKind::Ranef, json!({"k": 2, "burn_in": 1000})),
    ] {
        let mut c = small(kind, params);
        c.truth = Some(TruthSpec::LongRun { n_truth: 50_000 });
        let report = run_replications(&c).unwrap();
        assert_eq!(report.truth.source, "long_run");
        assert_eq!(report.truth.vector.len(), report.p);
        let se = report.truth.se.unwrap();
        assert!(se > 0.0 && se.is_finite());
        assert_eq!(
            report.rows.iter().map(|r| r.fail_count).sum::<usize>(),
            0,
            "{kind}"
        );
    }
}

#[test]
fn analytic_truth_is_refused_off_ar1() {
    let mut c = small(ModelKind::Ranef, json!({}));
    c.truth = Some(TruthSpec::Analytic);
    assert!(run_replications(&c).is_err());
}

#[test]
fn random_effects_runs_agree_across_seeds() {
    let model = Model::from_params(ModelKind::Ranef, &json!({"k": 2})).unwrap();
    let n = 200_000;
    let a = model.simulate(n, &mut stream(12, 0)).unwrap();
    let b = model.simulate(n, &mut stream(12, 1)).unwrap();
    let sa = mvseq::estimators::mis(&a).unwrap().sigma;
    let sb = mvseq::estimators::mis(&b).unwrap().sigma;
    let (ma, mb) = (a.mean(), b.mean());
    for j in 0..a.p() {
        let se = ((sa.get(j, j) + sb.get(j, j)) / n as f64).sqrt();
        assert!(
            (ma[j] - mb[j]).abs() <= 5.0 * se,
            "component {j}: {} vs {} (se {se})",
            ma[j],
            mb[j]
        );
    }
}
