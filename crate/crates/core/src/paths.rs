//! Approximate posterior sample paths (random Fourier features plus a
//! pathwise Matheron update) and the Pareto-sample pipeline built on them.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::evolver::{nsga2_minimize, EvolverConfig};
use crate::gp::{matern52_unit, Dataset, GpPosterior, KernelParams};
use crate::pareto::{self, BoxDecomposition};
use crate::rng;

pub const DEFAULT_FEATURES: usize = 500;
pub const DEFAULT_PARETO_POINTS: usize = 10;

/// Random Fourier feature basis for one objective. Frequencies are already
/// divided by the lengthscales.
#[derive(Debug, Clone)]
pub struct FeatureBasis {
    pub frequencies: Vec<Vec<f64>>,
    pub phases: Vec<f64>,
    pub weights: Vec<f64>,
    amplitude: f64,
    /// Frequencies stored dimension-major for vectorized evaluation.
    columns: Vec<f64>,
}

impl FeatureBasis {
    /// Draws `count` features for the Matérn-5/2 kernel with `params`.
    pub fn draw(params: &KernelParams, count: usize, rng: &mut rng::Rng) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("at least one feature is required".into()));
        }
        let chi = ChiSquared::new(5.0).expect("valid degrees of freedom");
        let mut frequencies = Vec::with_capacity(count);
        let mut phases = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let u: f64 = chi.sample(rng) / 5.0;
            let scale = 1.0 / u.sqrt();
            frequencies.push(
                params
                    .lengthscales
                    .iter()
                    .map(|l| {
                        let z: f64 = StandardNormal.sample(rng);
                        z * scale / l
                    })
                    .collect(),
            );
            phases.push(rng.gen::<f64>() * 2.0 * PI);
            weights.push(StandardNormal.sample(rng));
        }
        let amplitude = (2.0 * params.signal_variance / count as f64).sqrt();
        let dim = params.lengthscales.len();
        let columns = (0..dim).flat_map(|d| frequencies.iter().map(move |t: &Vec<f64>| t[d])).collect();
        Ok(Self { frequencies, phases, weights, amplitude, columns })
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    /// Prior path value without the constant mean.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let l = self.phases.len();
        let mut args = self.phases.clone();
        for (col, xd) in self.columns.chunks_exact(l).zip(x) {
            for (a, t) in args.iter_mut().zip(col) {
                *a += t * xd;
            }
        }
        if args.iter().all(|a| a.abs() < FAST_COS_LIMIT) {
            // separate pass so the cosine kernel vectorizes
            args.iter_mut().for_each(|a| *a = fast_cos(*a));
        } else {
            args.iter_mut().for_each(|a| *a = a.cos());
        }
        self.amplitude * args.iter().zip(&self.weights).map(|(c, w)| w * c).sum::<f64>()
    }
}

const FAST_COS_LIMIT: f64 = 1e6;

/// Branch-free cosine: Cody–Waite reduction by π/2 and the fdlibm minimax
/// kernels, written so the feature loop vectorizes. Accurate to a few ulp
/// for |x| < [`FAST_COS_LIMIT`]; callers handle larger arguments.
#[inline(always)]
fn fast_cos(x: f64) -> f64 {
    const INV_PIO2: f64 = std::f64::consts::FRAC_2_PI;
    const PIO2_1: f64 = 1.570_796_326_734_125_6;
    const PIO2_1T: f64 = 6.077_100_506_506_192e-11;
    const MAGIC: f64 = 6_755_399_441_055_744.0;
    const C: [f64; 6] = [
        4.166_666_666_666_660_2e-2,
        -1.388_888_888_887_411e-3,
        2.480_158_728_947_673e-5,
        -2.755_731_435_139_066_3e-7,
        2.087_572_321_298_175e-9,
        -1.135_964_755_778_819_5e-11,
    ];
    const S: [f64; 6] = [
        -1.666_666_666_666_663_2e-1,
        8.333_333_333_322_49e-3,
        -1.984_126_982_985_795e-4,
        2.755_731_370_707_006_8e-6,
        -2.505_076_025_340_686_3e-8,
        1.589_690_995_211_55e-10,
    ];
    let shifted = x * INV_PIO2 + MAGIC;
    let q = shifted.to_bits();
    let n = shifted - MAGIC;
    let r = (x - n * PIO2_1) - n * PIO2_1T;
    let z = r * r;
    let rc = z * (C[0] + z * (C[1] + z * (C[2] + z * (C[3] + z * (C[4] + z * C[5])))));
    let hz = 0.5 * z;
    let w = 1.0 - hz;
    let cos_r = w + (((1.0 - w) - hz) + z * rc);
    let sin_r = r + z * r * (S[0] + z * (S[1] + z * (S[2] + z * (S[3] + z * (S[4] + z * S[5])))));
    // quadrants 0..3 give cos, -sin, -cos, sin
    let odd = (q & 1) as f64;
    let sign = 1.0 - 2.0 * (((q + 1) >> 1) & 1) as f64;
    sign * (cos_r + odd * (sin_r - cos_r))
}

/// One approximate posterior draw of every objective.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub bases: Vec<FeatureBasis>,
    /// Matheron coefficients, one vector per objective.
    pub matheron_coeffs: Vec<Vec<f64>>,
    params: Vec<KernelParams>,
    train_inputs: Vec<Vec<f64>>,
}

impl PathSample {
    pub fn num_objectives(&self) -> usize {
        self.bases.len()
    }

    /// Model-space value of every objective at `x`.
    pub fn evaluate_one(&self, x: &[f64]) -> Vec<f64> {
        self.bases
            .iter()
            .zip(&self.params)
            .zip(&self.matheron_coeffs)
            .map(|((b, p), kappa)| {
                let inv_ls: Vec<f64> = p.lengthscales.iter().map(|l| 1.0 / l).collect();
                let update: f64 = kappa
                    .iter()
                    .zip(&self.train_inputs)
                    .map(|(k, t)| {
                        let r2: f64 = x.iter().zip(t).zip(&inv_ls).map(|((a, b), il)| ((a - b) * il).powi(2)).sum();
                        k * p.signal_variance * matern52_unit(r2.sqrt())
                    })
                    .sum();
                p.constant_mean + b.evaluate(x) + update
            })
            .collect()
    }

    pub fn evaluate(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| self.evaluate_one(x)).collect()
    }
}

/// Draws a path from `model` with `features` random features per objective.
pub fn draw_path(model: &GpPosterior, features: usize, seed: u64) -> Result<PathSample> {
    let m = model.num_objectives();
    let mut bases = Vec::with_capacity(m);
    let mut coeffs = Vec::with_capacity(m);
    let mut params = Vec::with_capacity(m);
    for k in 0..m {
        let p = model.params(k).clone();
        let mut rng = rng::stream(seed, &[k as u64]);
        let basis = FeatureBasis::draw(&p, features, &mut rng)?;
        // residual of the prior draw at the data, including a noise draw so
        // that the update reproduces the noisy-observation posterior
        let residual: Vec<f64> = model
            .inputs()
            .iter()
            .zip(model.outputs())
            .map(|(x, y)| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                y[k] - p.constant_mean - basis.evaluate(x) - eps * p.noise_variance.sqrt()
            })
            .collect();
        coeffs.push(if residual.is_empty() { Vec::new() } else { model.solve(k, &residual) });
        bases.push(basis);
        params.push(p);
    }
    Ok(PathSample { bases, matheron_coeffs: coeffs, params, train_inputs: model.inputs().to_vec() })
}

/// A sampled Pareto set and front with the cached quantities that every
/// acquisition evaluation reuses.
#[derive(Debug, Clone)]
pub struct ParetoSample {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub decomposition: BoxDecomposition,
    pub conditioned_model: GpPosterior,
}

/// Reference point below the observed nadir: r̂ − 0.1|r̂|, with an absolute
/// margin of 0.1 for zero coordinates.
pub fn nadir_reference(outputs: &[Vec<f64>]) -> Option<Vec<f64>> {
    let first = outputs.first()?;
    let mut nadir = first.clone();
    for y in outputs {
        for (n, v) in nadir.iter_mut().zip(y) {
            *n = n.min(*v);
        }
    }
    Some(nadir.into_iter().map(|r| if r == 0.0 { -0.1 } else { r - 0.1 * r.abs() }).collect())
}

fn pareto_from_path(
    model: &GpPosterior,
    path: &PathSample,
    points: usize,
    cfg: &EvolverConfig,
    reference: &[f64],
) -> Result<Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> {
    let m = model.num_objectives();
    let front = nsga2_minimize(|x| path.evaluate_one(x).into_iter().map(|v| -v).collect(), model.dim(), m, cfg)?;
    if front.inputs.is_empty() {
        return Ok(None);
    }
    let outputs = path.evaluate(&front.inputs);
    let keep = pareto::non_dominated_indices(&outputs);
    let inputs: Vec<Vec<f64>> = keep.iter().map(|&i| front.inputs[i].clone()).collect();
    let outputs: Vec<Vec<f64>> = keep.iter().map(|&i| outputs[i].clone()).collect();
    let chosen = pareto::greedy_hv_truncate(&outputs, points, reference);
    Ok(Some((
        chosen.iter().map(|&i| inputs[i].clone()).collect(),
        chosen.iter().map(|&i| outputs[i].clone()).collect(),
    )))
}

/// Samples a path, optimizes it, truncates the front to `points` by greedy
/// hypervolume contribution, decomposes the dominated region and conditions
/// the model on the sampled set.
pub fn sample_pareto(
    model: &GpPosterior,
    points: usize,
    features: usize,
    evolver: &EvolverConfig,
    reference_hint: Option<&[f64]>,
    seed: u64,
) -> Result<ParetoSample> {
    if points == 0 {
        return Err(Error::InvalidArgument("at least one Pareto point is required".into()));
    }
    let reference = match reference_hint {
        Some(r) => r.to_vec(),
        None => nadir_reference(model.outputs())
            .ok_or_else(|| Error::InvalidArgument("a reference point is needed when there is no data".into()))?,
    };
    for attempt in 0..2u64 {
        let path = draw_path(model, features, rng::derive_seed(seed, &[attempt, 0]))?;
        let cfg = evolver.with_seed(rng::derive_seed(seed, &[attempt, 1]));
        if let Some((inputs, outputs)) = pareto_from_path(model, &path, points, &cfg, &reference)? {
            let decomposition = pareto::box_decompose(&outputs)?;
            let conditioned_model = model.condition_on(&Dataset::new(inputs.clone(), outputs.clone())?)?;
            return Ok(ParetoSample { inputs, outputs, decomposition, conditioned_model });
        }
        log::warn!("solver returned no points for path attempt {attempt}");
    }
    Err(Error::EmptySolverFront)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(dim: usize, m: usize) -> GpPosterior {
        let mut r = rng::seeded(11);
        let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..dim).map(|_| r.gen::<f64>()).collect()).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| (0..m).map(|k| (3.0 * x[0] + k as f64).sin()).collect()).collect();
        let params = (0..m).map(|_| KernelParams::isotropic(dim, 0.3, 1.0, 1e-3)).collect();
        GpPosterior::from_model_space(params, Dataset::new(xs, ys).unwrap()).unwrap()
    }

    fn small_evolver() -> EvolverConfig {
        EvolverConfig { population: 30, generations: 40, ..EvolverConfig::default() }
    }

    #[test]
    fn spectral_variance_matches_student_t() {
        let p = KernelParams::isotropic(1, 1.0, 1.0, 0.0);
        let basis = FeatureBasis::draw(&p, 100_000, &mut rng::seeded(3)).unwrap();
        let n = basis.feature_count() as f64;
        let mean = basis.frequencies.iter().map(|t| t[0]).sum::<f64>() / n;
        let var = basis.frequencies.iter().map(|t| (t[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / (5.0 / 3.0) - 1.0).abs() < 0.05, "variance {var}");
        assert!(basis.phases.iter().all(|t| (0.0..2.0 * PI).contains(t)));
    }

    #[test]
    fn fast_cosine_matches_std() {
        let mut r = rng::seeded(5);
        for _ in 0..200_000 {
            let x: f64 = r.gen_range(-2e3..2e3);
            assert!((fast_cos(x) - x.cos()).abs() < 1e-14, "{x}");
        }
        for x in [0.0, -0.0, 1e-300, std::f64::consts::FRAC_PI_4, -3.0 * std::f64::consts::FRAC_PI_2, 1e7] {
            assert!((fast_cos(x) - x.cos()).abs() < 1e-15, "{x}");
        }
        assert!(fast_cos(f64::NAN).is_nan());
    }

    #[test]
    fn zero_features_rejected() {
        assert!(draw_path(&model(1, 1), 0, 0).is_err());
    }

    #[test]
    fn evaluation_matches_direct_formula_and_is_deterministic() {
        let gp = model(2, 2);
        let a = draw_path(&gp, 50, 9).unwrap();
        let b = draw_path(&gp, 50, 9).unwrap();
        let x = vec![0.3, 0.8];
        assert_eq!(a.evaluate_one(&x), b.evaluate_one(&x));
        assert!(a.evaluate(&[]).is_empty());
        for k in 0..2 {
            let basis = &a.bases[k];
            let p = gp.params(k);
            let mut direct = p.constant_mean;
            for i in 0..basis.feature_count() {
                let arg = basis.frequencies[i][0] * x[0] + basis.frequencies[i][1] * x[1] + basis.phases[i];
                direct += (2.0 * p.signal_variance / 50.0).sqrt() * basis.weights[i] * arg.cos();
            }
            for (t, kappa) in gp.inputs().iter().zip(&a.matheron_coeffs[k]) {
                direct += kappa * p.kernel(&x, t);
            }
            assert!((direct - a.evaluate_one(&x)[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn pipeline_is_consistent_and_deterministic() {
        let gp = model(2, 2);
        let s = sample_pareto(&gp, 5, 100, &small_evolver(), None, 4).unwrap();
        let t = sample_pareto(&gp, 5, 100, &small_evolver(), None, 4).unwrap();
        assert_eq!(s.inputs, t.inputs);
        assert_eq!(s.outputs, t.outputs);
        assert!(s.inputs.len() <= 5 && !s.inputs.is_empty());
        assert_eq!(pareto::non_dominated_indices(&s.outputs).len(), s.outputs.len());
        assert_eq!(s.conditioned_model.num_data(), gp.num_data() + s.inputs.len());
        let path = draw_path(&gp, 100, rng::derive_seed(4, &[0, 0])).unwrap();
        assert_eq!(path.evaluate(&s.inputs), s.outputs);
    }

    #[test]
    fn nadir_reference_offsets() {
        let r = nadir_reference(&[vec![1.0, -2.0, 0.0], vec![3.0, 5.0, 0.0]]).unwrap();
        assert_eq!(r, vec![0.9, -2.2, -0.1]);
        assert!(nadir_reference(&[]).is_none());
    }
}
