use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use jes::evolver::EvolverConfig;
use jes::gp::{self, Dataset, GpPosterior, KernelParams, Standardizer};
use jes::paths;
use jes::rng;

fn draw_gp_data(params: &KernelParams, xs: &[Vec<f64>], r: &mut rng::Rng) -> Vec<f64> {
    let n = xs.len();
    let k = DMatrix::from_fn(n, n, |i, j| params.kernel(&xs[i], &xs[j]) + if i == j { params.noise_variance } else { 0.0 });
    let l = k.cholesky().expect("kernel matrix is positive definite").l();
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(r));
    (l * z).iter().copied().collect()
}

#[test]
fn lengthscale_recovered_from_simulated_data() {
    let truth = KernelParams::isotropic(1, 0.2, 1.0, 1e-3);
    let mut good = 0;
    for seed in 0..10u64 {
        let mut r = rng::seeded(1000 + seed);
        let xs: Vec<Vec<f64>> = (0..30).map(|_| vec![r.gen::<f64>()]).collect();
        let ys: Vec<Vec<f64>> = draw_gp_data(&truth, &xs, &mut r).into_iter().map(|v| vec![v]).collect();
        let std = Standardizer::fit(&[(0.0, 1.0)], &ys);
        let data = std.to_model(&Dataset::new(xs, ys).unwrap());
        let model = gp::fit_hyperparameters(&data, std, gp::DEFAULT_RESTARTS, seed).unwrap();
        let l = model.params(0).lengthscales[0];
        if l > 0.1 && l < 0.4 {
            good += 1;
        }
    }
    assert!(good >= 8, "lengthscale within a factor of 2 in only {good}/10 seeds");
}

fn noisy_model() -> GpPosterior {
    let params = vec![KernelParams::isotropic(2, 0.35, 1.5, 0.05), KernelParams::isotropic(2, 0.6, 0.7, 0.02)];
    let mut r = rng::seeded(17);
    let xs: Vec<Vec<f64>> = (0..6).map(|_| vec![r.gen::<f64>(), r.gen::<f64>()]).collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![(5.0 * x[0]).sin(), x[0] * x[1] - 0.3]).collect();
    GpPosterior::from_model_space(params, Dataset::new(xs, ys).unwrap()).unwrap()
}

fn check_path_moments(model: &GpPosterior, seed: u64) {
    let mut r = rng::seeded(seed);
    let probes: Vec<Vec<f64>> = (0..10).map(|_| vec![r.gen::<f64>(), r.gen::<f64>()]).collect();
    let n = 2000;
    let m = model.num_objectives();
    let mut sum = vec![vec![0.0; m]; probes.len()];
    let mut sq = vec![vec![0.0; m]; probes.len()];
    for s in 0..n {
        let path = paths::draw_path(model, 500, rng::derive_seed(seed, &[s])).unwrap();
        for (i, x) in probes.iter().enumerate() {
            for (k, v) in path.evaluate_one(x).into_iter().enumerate() {
                sum[i][k] += v;
                sq[i][k] += v * v;
            }
        }
    }
    let nf = n as f64;
    for (i, x) in probes.iter().enumerate() {
        let (mean, var) = model.mean_var(x);
        for k in 0..m {
            let emp_mean = sum[i][k] / nf;
            let emp_var = (sq[i][k] - nf * emp_mean * emp_mean) / (nf - 1.0);
            let se_mean = (var[k] / nf).sqrt();
            // standard error of a sample variance under normality
            let se_var = var[k] * (2.0 / (nf - 1.0)).sqrt();
            assert!((emp_mean - mean[k]).abs() <= 3.0 * se_mean, "mean at {x:?}: {emp_mean} vs {}", mean[k]);
            assert!((emp_var - var[k]).abs() <= 3.0 * se_var, "variance at {x:?}: {emp_var} vs {}", var[k]);
        }
    }
}

#[test]
fn path_moments_match_posterior() {
    check_path_moments(&noisy_model(), 5);
}

#[test]
fn path_moments_match_prior_without_data() {
    let params = vec![KernelParams::isotropic(2, 0.4, 2.0, 0.01)];
    let empty = Dataset::new(Vec::new(), Vec::new()).unwrap();
    let prior = GpPosterior::from_model_space(params, empty).unwrap();
    check_path_moments(&prior, 6);
}

#[test]
fn sampled_maximum_is_plausible_under_the_posterior() {
    let params = vec![KernelParams::isotropic(1, 0.15, 1.0, 1e-4)];
    let xs: Vec<Vec<f64>> = [0.05, 0.3, 0.45, 0.7, 0.95].iter().map(|&v| vec![v]).collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![(7.0 * x[0]).sin()]).collect();
    let model = GpPosterior::from_model_space(params, Dataset::new(xs, ys).unwrap()).unwrap();
    let grid: Vec<Vec<f64>> = (0..=400).map(|i| vec![i as f64 / 400.0]).collect();
    let best_mean = grid.iter().map(|x| model.mean(x)[0]).fold(f64::NEG_INFINITY, f64::max);
    let cfg = EvolverConfig { population: 40, generations: 100, ..EvolverConfig::default() };
    let mut ok = 0;
    for seed in 0..100u64 {
        let sample = paths::sample_pareto(&model, 1, 500, &cfg, Some(&[-3.0]), seed).unwrap();
        let (_, var) = model.mean_var(&sample.inputs[0]);
        if sample.outputs[0][0] >= best_mean - 3.0 * var[0].sqrt() {
            ok += 1;
        }
    }
    assert!(ok >= 95, "only {ok}/100 sampled maxima were plausible");
}

#[test]
fn pareto_sample_outputs_lie_on_the_sampled_path() {
    let model = noisy_model();
    let cfg = EvolverConfig { population: 30, generations: 40, ..EvolverConfig::default() };
    let a = paths::sample_pareto(&model, 5, 300, &cfg, None, 11).unwrap();
    let b = paths::sample_pareto(&model, 5, 300, &cfg, None, 11).unwrap();
    assert_eq!(a.outputs, b.outputs);
    assert!(a.inputs.len() <= 5 && !a.inputs.is_empty());
    assert_eq!(jes::pareto::non_dominated_indices(&a.outputs).len(), a.outputs.len());
    // the conditioned model interpolates the pseudo-observations up to noise
    for (x, y) in a.inputs.iter().zip(&a.outputs) {
        let (mean, _) = a.conditioned_model.mean_var(x);
        for k in 0..2 {
            assert!((mean[k] - y[k]).abs() < 0.5);
        }
    }
}
