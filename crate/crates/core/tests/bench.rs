use std::process::Command;

use jes::acquisition::{AcquisitionContext, EstimateKind};
use jes::bench::{optimize_acquisition, recommend, run_experiment, ExperimentConfig, Problem, RunOptions};
use jes::evolver::EvolverConfig;
use jes::gp::{Dataset, GpPosterior, KernelParams};
use jes::pareto;
use jes::paths::{self, nadir_reference};
use jes::qmc::ScrambledHalton;
use jes::rng;

fn quick_config(problem: &str, acquisition: &str, n_iter: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(problem, acquisition, n_iter, seed);
    cfg.num_samples = 3;
    cfg.features = 200;
    cfg.candidate_pool = Some(300);
    cfg.recommendation_size = 10;
    cfg.evolver = EvolverConfig { population: 30, generations: 40, ..EvolverConfig::default() };
    cfg
}

#[test]
fn injected_noise_has_configured_scale() {
    let p = Problem::parse("zdt2:6", false).unwrap();
    let x = [0.3, 0.1, 0.5, 0.2, 0.9, 0.4];
    let truth = p.evaluate(&x);
    let mut r = rng::seeded(1);
    let n = 10_000;
    let mut sq = [0.0; 2];
    for _ in 0..n {
        let y = p.observe(&x, &mut r);
        for k in 0..2 {
            sq[k] += (y[k] - truth[k]).powi(2);
        }
    }
    for k in 0..2 {
        let sd = (sq[k] / n as f64).sqrt();
        assert!((sd / p.noise_sd[k] - 1.0).abs() < 0.03, "objective {k}: {sd} vs {}", p.noise_sd[k]);
    }
}

#[test]
fn zero_iterations_record_only_the_initial_design() {
    let cfg = quick_config("zdt2:3", "JES-LB2", 0, 3);
    let rec = run_experiment(&cfg, &RunOptions::default(), None).unwrap();
    assert_eq!(rec.rows.len(), 1);
    assert_eq!(rec.rows[0].iter, 0);
    assert_eq!(rec.rows[0].inputs.len(), cfg.n_init_for(3));
    assert!(rec.final_log_hv_disc().is_finite());
}

#[test]
fn runs_are_deterministic_and_stay_in_bounds() {
    for method in ["JES-LB", "MES-0", "random", "tsemo", "parego"] {
        let mut cfg = quick_config("zdt2:3", method, 2, 11);
        cfg.q = 2;
        let a = run_experiment(&cfg, &RunOptions::default(), None).unwrap();
        let b = run_experiment(&cfg, &RunOptions::default(), None).unwrap();
        assert_eq!(a.rows, b.rows, "{method}");
        assert_eq!(a.rows.len(), 3);
        for (i, row) in a.rows.iter().enumerate() {
            assert_eq!(row.iter, i);
            assert!(row.phase_ms.iter().all(|&t| t == 0.0));
            for x in &row.inputs {
                assert!(x.iter().all(|v| (0.0..=1.0).contains(v)), "{method}: {x:?}");
            }
        }
        assert_eq!(a.rows[1].inputs.len(), 2);
    }
}

#[test]
fn timing_option_records_phases() {
    let cfg = quick_config("zdt2:2", "JES-LB2", 1, 2);
    let rec = run_experiment(&cfg, &RunOptions { timing: true, ..RunOptions::default() }, None).unwrap();
    assert!(rec.rows[1].phase_ms[1] > 0.0 && rec.rows[1].phase_ms[2] > 0.0);
}

#[test]
fn csv_output_has_one_row_per_record_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config("gp:2:2:4", "JES-LB2", 2, 5);
    let rec = run_experiment(&cfg, &RunOptions::default(), Some(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iter,x_1,x_2,y_1,y_2,phase_ms_init,phase_ms_sample,phase_ms_opt,log_hv_disc"
    );
    assert_eq!(lines.count(), rec.rows.len());
    let saved = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(saved, cfg);
    assert!(dir.path().join("recommendation.csv").exists());
}

fn sharp_mode_model() -> (GpPosterior, f64) {
    // a narrow peak bracketed by observations on both sides
    let xs: Vec<Vec<f64>> = (0..=10).map(|i| i as f64 / 10.0).chain([0.56, 0.66]).map(|v| vec![v]).collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![3.0 * (-((x[0] - 0.62) / 0.08).powi(2)).exp() - 1.0]).collect();
    let params = vec![KernelParams::isotropic(1, 0.08, 2.0, 1e-4)];
    let model = GpPosterior::from_model_space(params, Dataset::new(xs, ys).unwrap()).unwrap();
    let mode = (0..=10_000)
        .map(|i| i as f64 / 10_000.0)
        .max_by(|a, b| model.mean(&[*a])[0].total_cmp(&model.mean(&[*b])[0]))
        .unwrap();
    (model, mode)
}

#[test]
fn jes_queries_near_a_sharp_mode() {
    let (model, mode) = sharp_mode_model();
    let cfg = EvolverConfig { population: 40, generations: 100, ..EvolverConfig::default() };
    let kind: EstimateKind = "JES-LB2".parse().unwrap();
    let mut near = 0;
    for seed in 0..10u64 {
        let samples = (0..10)
            .map(|s| paths::sample_pareto(&model, 1, 500, &cfg, None, rng::derive_seed(seed, &[s])).unwrap())
            .collect();
        let ctx = AcquisitionContext::new(model.clone(), samples, kind, 128, seed).unwrap();
        let x = optimize_acquisition(&ctx, 1000, 1, seed).unwrap();
        if (x[0][0] - mode).abs() < 0.05 {
            near += 1;
        }
    }
    assert!(near >= 9, "only {near}/10 selections near the mode at {mode}");
}

#[test]
fn refinement_never_regresses_below_the_pool() {
    let (model, _) = sharp_mode_model();
    let cfg = EvolverConfig { population: 30, generations: 50, ..EvolverConfig::default() };
    let samples = (0..4).map(|s| paths::sample_pareto(&model, 1, 300, &cfg, None, s).unwrap()).collect();
    let ctx = AcquisitionContext::new(model, samples, "JES-LB2".parse().unwrap(), 128, 0).unwrap();
    let pool = ScrambledHalton::new(1, 7).points(200);
    let best_pool = pool.iter().map(|x| ctx.value(x)).fold(f64::NEG_INFINITY, f64::max);
    let x = optimize_acquisition(&ctx, 200, 1, 7).unwrap();
    assert!(ctx.value(&x[0]) >= best_pool);
}

#[test]
fn recommendation_hypervolume_never_drops() {
    let p = Problem::parse("zdt2-noiseless:2", false).unwrap();
    let xs = ScrambledHalton::new(2, 3).points(12);
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| p.evaluate(x)).collect();
    let params = vec![KernelParams::isotropic(2, 0.3, 1.0, 1e-3), KernelParams::isotropic(2, 0.3, 30.0, 1e-3)];
    let mut model = GpPosterior::from_model_space(params.clone(), Dataset::new(xs.clone(), ys.clone()).unwrap()).unwrap();
    let cfg = EvolverConfig { population: 40, generations: 60, ..EvolverConfig::default() };
    let first = recommend(&model, &cfg, 50, &[]).unwrap();
    assert!(first.len() <= 50 && !first.is_empty());
    let mut prev = recommend(&model, &cfg, 5, &[]).unwrap();
    let (mut all_x, mut all_y) = (xs, ys);
    for step in 0..4u64 {
        let reference = nadir_reference(model.outputs()).unwrap();
        let hv_before = pareto::hypervolume(&prev.iter().map(|x| model.mean(x)).collect::<Vec<_>>(), &reference);
        let next = recommend(&model, &cfg.with_seed(step), 5, &prev).unwrap();
        let hv_after = pareto::hypervolume(&next.iter().map(|x| model.mean(x)).collect::<Vec<_>>(), &reference);
        assert!(hv_after >= hv_before - 1e-12);
        prev = next;
        let x = vec![0.1 + 0.2 * step as f64, 0.05];
        all_y.push(p.evaluate(&x));
        all_x.push(x);
        model = GpPosterior::from_model_space(params.clone(), Dataset::new(all_x.clone(), all_y.clone()).unwrap()).unwrap();
    }
}

#[test]
fn noiseless_zdt2_recommendation_improves_on_initial_design() {
    let mut improved = 0;
    for seed in 0..10u64 {
        // 6 initial points plus 34 acquisitions
        let mut cfg = ExperimentConfig::new("zdt2-noiseless:2", "JES-LB2", 34, seed);
        cfg.evolver = EvolverConfig { population: 50, generations: 150, ..EvolverConfig::default() };
        let rec = run_experiment(&cfg, &RunOptions::default(), None).unwrap();
        if rec.final_log_hv_disc() < rec.rows[0].log_hv_disc {
            improved += 1;
        }
    }
    assert!(improved >= 9, "improved in only {improved}/10 seeds");
}

fn jes(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_jes")).args(args).output().unwrap();
    (out.status.success(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn cli_geometry_commands() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "f1,f2\n1,0\n0,1\n0.5,0.5\n").unwrap();
    let p = pts.to_str().unwrap();

    let (ok, out, _) = jes(&["hv", "--points", p, "--ref", "-1,-1"]);
    assert!(ok);
    let hv: f64 = out.trim().parse().unwrap();
    assert!((hv - pareto::hypervolume(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]], &[-1.0, -1.0])).abs() < 1e-12);

    let (ok, out, _) = jes(&["ghv", "--points", p, "--ref", "-1,-1", "--n", "20000", "--seed", "3"]);
    assert!(ok);
    let ghv: f64 = out.trim().parse().unwrap();
    assert!((ghv - hv).abs() < 0.1);

    let (ok, out, _) = jes(&["decompose", "--points", p]);
    assert!(ok);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("l1,l2,u1,u2"));
    assert_eq!(lines.count(), 3);
    assert!(out.contains("-inf"));

    let (ok, out, _) = jes(&["front", "--problem", "zdt2", "--d", "6"]);
    assert!(ok);
    assert_eq!(out.lines().count(), 1001);

    let (ok, _, err) = jes(&["hv", "--points", p, "--ref", "0,0,0"]);
    assert!(!ok && err.contains("error"));
}

#[test]
fn cli_run_writes_outputs_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, quick_config("zdt2:2", "random", 2, 1).to_toml()).unwrap();
    let out_dir = dir.path().join("out");
    let (ok, out, _) = jes(&["run", "--config", good.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(ok);
    assert!(out.trim().parse::<f64>().unwrap().is_finite());
    assert_eq!(std::fs::read_to_string(out_dir.join("run.csv")).unwrap().lines().count(), 4);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "problem = \"zdt2:2\"\nacquisition = \"JES-XY\"\nn_iter = 1\n").unwrap();
    let (ok, _, err) = jes(&["run", "--config", bad.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(!ok && err.starts_with("error"));
}
