//! Independent per-objective Gaussian processes with a constant mean and a
//! Matérn-5/2 ARD kernel.
//!
//! A [`GpPosterior`] lives in *model space*: inputs normalized to the unit
//! hypercube and outputs standardized per objective. The attached
//! [`Standardizer`] maps to and from the raw problem units.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{self, LbfgsOptions};
use crate::rng;

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 10.0);
pub const SIGNAL_BOUNDS: (f64, f64) = (1e-4, 100.0);
pub const NOISE_BOUNDS: (f64, f64) = (1e-6, 1.0);
pub const DEFAULT_RESTARTS: usize = 5;

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub constant_mean: f64,
}

impl KernelParams {
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Self {
        Self { lengthscales: vec![lengthscale; dim], signal_variance, noise_variance, constant_mean: 0.0 }
    }

    /// Prior covariance between two inputs.
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| ((x - y) / l).powi(2))
            .sum();
        self.signal_variance * matern52_unit(r2.sqrt())
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lengthscales.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: self.lengthscales.len() });
        }
        if self.lengthscales.iter().any(|l| !(*l > 0.0)) || !(self.signal_variance > 0.0) || !(self.noise_variance >= 0.0) {
            return Err(Error::InvalidArgument("kernel hyperparameters must be positive".into()));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn matern52_unit(r: f64) -> f64 {
    let sr = SQRT5 * r;
    (1.0 + sr + sr * sr / 3.0) * (-sr).exp()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), got: outputs.len() });
        }
        Ok(Self { inputs, outputs })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn extend(&mut self, other: &Dataset) {
        self.inputs.extend_from_slice(&other.inputs);
        self.outputs.extend_from_slice(&other.outputs);
    }
}

/// Input bound mapping and per-objective output shift/scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize, m: usize) -> Self {
        Self { lower: vec![0.0; dim], upper: vec![1.0; dim], shift: vec![0.0; m], scale: vec![1.0; m] }
    }

    /// Uses the sample mean and standard deviation of `outputs`; an
    /// objective with (numerically) constant observations keeps scale 1.
    pub fn fit(bounds: &[(f64, f64)], outputs: &[Vec<f64>]) -> Self {
        let m = outputs.first().map_or(0, |o| o.len());
        let n = outputs.len() as f64;
        let mut shift = vec![0.0; m];
        let mut scale = vec![1.0; m];
        for k in 0..m {
            let mean = outputs.iter().map(|o| o[k]).sum::<f64>() / n;
            let var = outputs.iter().map(|o| (o[k] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            shift[k] = mean;
            if var.sqrt() > 1e-12 * mean.abs().max(1.0) {
                scale[k] = var.sqrt();
            }
        }
        Self {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            shift,
            scale,
        }
    }

    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.lower.iter().zip(&self.upper)).map(|(v, (l, u))| (v - l) / (u - l)).collect()
    }

    pub fn denormalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.lower.iter().zip(&self.upper)).map(|(v, (l, u))| l + v * (u - l)).collect()
    }

    pub fn standardize(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(self.shift.iter().zip(&self.scale)).map(|(v, (s, c))| (v - s) / c).collect()
    }

    pub fn destandardize(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(self.shift.iter().zip(&self.scale)).map(|(v, (s, c))| s + v * c).collect()
    }

    /// Maps a raw dataset into model space.
    pub fn to_model(&self, raw: &Dataset) -> Dataset {
        Dataset {
            inputs: raw.inputs.iter().map(|x| self.normalize_input(x)).collect(),
            outputs: raw.outputs.iter().map(|y| self.standardize(y)).collect(),
        }
    }
}

/// Lower Cholesky factor stored row-major.
#[derive(Debug, Clone)]
struct Factor {
    n: usize,
    data: Vec<f64>,
}

impl Factor {
    fn from_nalgebra(l: &DMatrix<f64>) -> Self {
        let n = l.nrows();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                data[i * n + j] = l[(i, j)];
            }
        }
        Self { n, data }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.data[i * self.n..i * self.n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, v)| l * v).sum();
            b[i] = (b[i] - s) / self.at(i, i);
        }
    }

    fn backward(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for j in i + 1..self.n {
                s -= self.at(j, i) * b[j];
            }
            b[i] = s / self.at(i, i);
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut v = rhs.to_vec();
        self.forward(&mut v);
        self.backward(&mut v);
        v
    }
}

#[derive(Debug, Clone)]
struct ObjectiveModel {
    params: KernelParams,
    inv_ls: Vec<f64>,
    factor: Factor,
    jitter: f64,
    alpha: Vec<f64>,
    degenerate: bool,
}

impl ObjectiveModel {
    #[inline]
    fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for ((x, y), il) in a.iter().zip(b).zip(&self.inv_ls) {
            let d = (x - y) * il;
            r2 += d * d;
        }
        self.params.signal_variance * matern52_unit(r2.sqrt())
    }

    fn build(params: KernelParams, inputs: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = inputs.len();
        let inv_ls: Vec<f64> = params.lengthscales.iter().map(|l| 1.0 / l).collect();
        let mut model = Self {
            params,
            inv_ls,
            factor: Factor { n: 0, data: Vec::new() },
            jitter: 0.0,
            alpha: Vec::new(),
            degenerate: false,
        };
        if n == 0 {
            return Ok(model);
        }
        let mut kmat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = model.k(&inputs[i], &inputs[j]);
                kmat[(i, j)] = v;
                kmat[(j, i)] = v;
            }
            kmat[(i, i)] += model.params.noise_variance;
        }
        let (chol, jitter) = linalg::jittered_cholesky(&kmat)?;
        model.factor = Factor::from_nalgebra(&chol.l());
        model.jitter = jitter;
        let centered: Vec<f64> = y.iter().map(|v| v - model.params.constant_mean).collect();
        model.alpha = model.factor.solve(&centered);
        Ok(model)
    }
}

/// Kernel vectors and their whitened forms at one input, per objective.
#[derive(Debug, Clone)]
pub struct Prefix {
    k: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Exact GP posterior for every objective over a shared set of inputs.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    dim: usize,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
    objectives: Vec<ObjectiveModel>,
    standardizer: Standardizer,
}

impl GpPosterior {
    /// Builds the posterior from model-space `data` and one parameter set per objective.
    pub fn new(params: Vec<KernelParams>, data: Dataset, standardizer: Standardizer) -> Result<Self> {
        let dim = standardizer.lower.len();
        let m = params.len();
        if m == 0 {
            return Err(Error::InvalidArgument("at least one objective is required".into()));
        }
        if standardizer.shift.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: standardizer.shift.len() });
        }
        for p in &params {
            p.validate(dim)?;
        }
        for (x, y) in data.inputs.iter().zip(&data.outputs) {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
            }
            if y.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: y.len() });
            }
        }
        let objectives = params
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                let y: Vec<f64> = data.outputs.iter().map(|o| o[k]).collect();
                ObjectiveModel::build(p, &data.inputs, &y)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, inputs: data.inputs, outputs: data.outputs, objectives, standardizer })
    }

    /// Posterior whose model space coincides with the raw space.
    pub fn from_model_space(params: Vec<KernelParams>, data: Dataset) -> Result<Self> {
        let dim = params.first().map_or(0, |p| p.lengthscales.len());
        let m = params.len();
        Self::new(params, data, Standardizer::identity(dim, m))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn num_data(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Model-space observations, one row per input.
    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn params(&self, objective: usize) -> &KernelParams {
        &self.objectives[objective].params
    }

    pub fn noise_variances(&self) -> Vec<f64> {
        self.objectives.iter().map(|o| o.params.noise_variance).collect()
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn is_degenerate(&self, objective: usize) -> bool {
        self.objectives[objective].degenerate
    }

    /// Jitter that was needed to factor each objective's training covariance.
    pub fn jitter(&self, objective: usize) -> f64 {
        self.objectives[objective].jitter
    }

    /// Predictive quantities at `x` that a model conditioned on extra data
    /// can extend instead of recomputing.
    pub fn prefix(&self, x: &[f64]) -> Prefix {
        let mut k = Vec::with_capacity(self.objectives.len());
        let mut v = Vec::with_capacity(self.objectives.len());
        let mut mean = Vec::with_capacity(self.objectives.len());
        let mut var = Vec::with_capacity(self.objectives.len());
        for o in &self.objectives {
            let kx: Vec<f64> = self.inputs.iter().map(|t| o.k(x, t)).collect();
            mean.push(o.params.constant_mean + kx.iter().zip(&o.alpha).map(|(a, b)| a * b).sum::<f64>());
            let mut vx = kx.clone();
            o.factor.forward(&mut vx);
            var.push((o.params.signal_variance - vx.iter().map(|a| a * a).sum::<f64>()).max(0.0));
            k.push(kx);
            v.push(vx);
        }
        Prefix { k, v, mean, var }
    }

    /// Same as [`mean_var`](Self::mean_var) for a model obtained from the
    /// prefix's model by [`condition_on`](Self::condition_on), reusing the
    /// shared leading block of the factor.
    pub fn mean_var_from_prefix(&self, x: &[f64], prefix: &Prefix) -> (Vec<f64>, Vec<f64>) {
        let n0 = prefix.k.first().map_or(0, |k| k.len());
        debug_assert!(n0 <= self.inputs.len());
        let total = self.inputs.len();
        let mut mean = Vec::with_capacity(self.objectives.len());
        let mut var = Vec::with_capacity(self.objectives.len());
        for (idx, o) in self.objectives.iter().enumerate() {
            let mut kx = prefix.k[idx].clone();
            kx.extend(self.inputs[n0..].iter().map(|t| o.k(x, t)));
            mean.push(o.params.constant_mean + kx.iter().zip(&o.alpha).map(|(a, b)| a * b).sum::<f64>());
            let mut reduction: f64 = prefix.v[idx].iter().map(|a| a * a).sum();
            let mut vx = prefix.v[idx].clone();
            for i in n0..total {
                let row = &o.factor.data[i * total..i * total + i];
                let s: f64 = row.iter().zip(&vx).map(|(l, v)| l * v).sum();
                let vi = (kx[i] - s) / o.factor.at(i, i);
                reduction += vi * vi;
                vx.push(vi);
            }
            var.push((o.params.signal_variance - reduction).max(0.0));
        }
        (mean, var)
    }

    /// (K + σI)⁻¹ rhs for one objective.
    pub(crate) fn solve(&self, objective: usize, rhs: &[f64]) -> Vec<f64> {
        self.objectives[objective].factor.solve(rhs)
    }

    /// Posterior mean of every objective at `x`.
    pub fn mean(&self, x: &[f64]) -> Vec<f64> {
        self.objectives
            .iter()
            .map(|o| {
                o.params.constant_mean + self.inputs.iter().zip(&o.alpha).map(|(t, a)| a * o.k(x, t)).sum::<f64>()
            })
            .collect()
    }

    /// Posterior mean and latent variance (noise excluded) of every objective at `x`.
    pub fn mean_var(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.objectives.len();
        let mut mean = Vec::with_capacity(m);
        let mut var = Vec::with_capacity(m);
        let mut kx = vec![0.0; self.inputs.len()];
        for o in &self.objectives {
            for (v, t) in kx.iter_mut().zip(&self.inputs) {
                *v = o.k(x, t);
            }
            mean.push(o.params.constant_mean + kx.iter().zip(&o.alpha).map(|(k, a)| k * a).sum::<f64>());
            o.factor.forward(&mut kx);
            let reduction: f64 = kx.iter().map(|v| v * v).sum();
            var.push((o.params.signal_variance - reduction).max(0.0));
        }
        (mean, var)
    }

    /// Posterior means (`k × M`) and per-objective latent covariance
    /// matrices (`M` matrices of `k × k`) at the query points.
    pub fn posterior_mean_cov(&self, xs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<DMatrix<f64>>) {
        let k = xs.len();
        let mut means = vec![vec![0.0; self.objectives.len()]; k];
        let mut covs = Vec::with_capacity(self.objectives.len());
        for (m, o) in self.objectives.iter().enumerate() {
            let vs: Vec<Vec<f64>> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let mut kx: Vec<f64> = self.inputs.iter().map(|t| o.k(x, t)).collect();
                    means[i][m] = o.params.constant_mean + kx.iter().zip(&o.alpha).map(|(a, b)| a * b).sum::<f64>();
                    o.factor.forward(&mut kx);
                    kx
                })
                .collect();
            let mut cov = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..=i {
                    let reduction: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
                    let v = o.k(&xs[i], &xs[j]) - reduction;
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
                cov[(i, i)] = cov[(i, i)].max(0.0);
            }
            covs.push(cov);
        }
        (means, covs)
    }

    /// Posterior given the current data plus `pseudo` (model space), with the
    /// pseudo outputs treated as noisy observations. Hyperparameters are kept.
    pub fn condition_on(&self, pseudo: &Dataset) -> Result<Self> {
        if pseudo.is_empty() {
            return Ok(self.clone());
        }
        let m = self.objectives.len();
        for (x, y) in pseudo.inputs.iter().zip(&pseudo.outputs) {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
            }
            if y.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: y.len() });
            }
        }
        let n = self.inputs.len();
        let p = pseudo.len();
        let total = n + p;
        let mut inputs = self.inputs.clone();
        inputs.extend_from_slice(&pseudo.inputs);
        let mut outputs = self.outputs.clone();
        outputs.extend_from_slice(&pseudo.outputs);

        let mut objectives = Vec::with_capacity(m);
        for (k, o) in self.objectives.iter().enumerate() {
            // W = L⁻¹ K(X, P); Schur complement C − WᵀW
            let w: Vec<Vec<f64>> = pseudo
                .inputs
                .iter()
                .map(|xp| {
                    let mut col: Vec<f64> = self.inputs.iter().map(|t| o.k(xp, t)).collect();
                    o.factor.forward(&mut col);
                    col
                })
                .collect();
            let mut schur = DMatrix::zeros(p, p);
            for a in 0..p {
                for b in 0..=a {
                    let mut v = o.k(&pseudo.inputs[a], &pseudo.inputs[b])
                        - w[a].iter().zip(&w[b]).map(|(x, y)| x * y).sum::<f64>();
                    if a == b {
                        v += o.params.noise_variance + o.jitter;
                    }
                    schur[(a, b)] = v;
                    schur[(b, a)] = v;
                }
            }
            let (lc, extra) = linalg::jittered_cholesky(&schur)?;
            let lc = lc.l();
            let mut data = vec![0.0; total * total];
            for i in 0..n {
                data[i * total..i * total + i + 1].copy_from_slice(&o.factor.data[i * n..i * n + i + 1]);
            }
            for a in 0..p {
                let row = n + a;
                data[row * total..row * total + n].copy_from_slice(&w[a]);
                for b in 0..=a {
                    data[row * total + n + b] = lc[(a, b)];
                }
            }
            let factor = Factor { n: total, data };
            let centered: Vec<f64> = outputs.iter().map(|y| y[k] - o.params.constant_mean).collect();
            let alpha = factor.solve(&centered);
            objectives.push(ObjectiveModel {
                params: o.params.clone(),
                inv_ls: o.inv_ls.clone(),
                factor,
                jitter: o.jitter.max(extra),
                alpha,
                degenerate: o.degenerate,
            });
        }
        Ok(Self { dim: self.dim, inputs, outputs, objectives, standardizer: self.standardizer.clone() })
    }
}

/// Log marginal likelihood of one objective's observations `y`.
pub fn log_marginal_likelihood(params: &KernelParams, inputs: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    let model = ObjectiveModel::build(params.clone(), inputs, y)?;
    let centered: Vec<f64> = y.iter().map(|v| v - params.constant_mean).collect();
    Ok(lml_from_model(&model, &centered))
}

fn lml_from_model(model: &ObjectiveModel, centered: &[f64]) -> f64 {
    let n = centered.len();
    let fit: f64 = centered.iter().zip(&model.alpha).map(|(a, b)| a * b).sum();
    let log_det: f64 = (0..n).map(|i| model.factor.at(i, i).ln()).sum();
    -0.5 * fit - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Outcome of hyperparameter fitting for one objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveFit {
    /// Log marginal likelihood at the starting point of the winning restart.
    pub start_lml: f64,
    pub final_lml: f64,
    pub degenerate: bool,
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn new(dim: usize) -> Self {
        let mut lo = vec![LENGTHSCALE_BOUNDS.0.ln(); dim];
        let mut hi = vec![LENGTHSCALE_BOUNDS.1.ln(); dim];
        lo.push(SIGNAL_BOUNDS.0.ln());
        hi.push(SIGNAL_BOUNDS.1.ln());
        lo.push(NOISE_BOUNDS.0.ln());
        hi.push(NOISE_BOUNDS.1.ln());
        Self { lo, hi }
    }

    fn to_log(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, v)| self.lo[i] + (self.hi[i] - self.lo[i]) * sigmoid(*v))
            .collect()
    }

    fn from_log(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .enumerate()
            .map(|(i, v)| {
                let s = ((v - self.lo[i]) / (self.hi[i] - self.lo[i])).clamp(1e-9, 1.0 - 1e-9);
                (s / (1.0 - s)).ln()
            })
            .collect()
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn params_from_log(t: &[f64], dim: usize) -> KernelParams {
    KernelParams {
        lengthscales: t[..dim].iter().map(|v| v.exp()).collect(),
        signal_variance: t[dim].exp(),
        noise_variance: t[dim + 1].exp(),
        constant_mean: 0.0,
    }
}

/// Negative log marginal likelihood and its gradient in log-parameter space.
fn neg_lml_and_grad(t: &[f64], inputs: &[Vec<f64>], y: &[f64]) -> Option<(f64, Vec<f64>)> {
    let dim = inputs[0].len();
    let n = inputs.len();
    let params = params_from_log(t, dim);
    let model = ObjectiveModel::build(params, inputs, y).ok()?;
    let lml = lml_from_model(&model, y);

    // K⁻¹ from the factor, column by column
    let mut kinv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = model.factor.solve(&e);
        for i in 0..n {
            kinv[i * n + j] = col[i];
        }
    }
    let s2 = model.params.signal_variance;
    let mut grad = vec![0.0; dim + 2];
    for i in 0..n {
        for j in 0..n {
            let a = model.alpha[i] * model.alpha[j] - kinv[i * n + j];
            let mut r2 = 0.0;
            let mut scaled = [0.0f64; 64];
            for d in 0..dim {
                let v = ((inputs[i][d] - inputs[j][d]) * model.inv_ls[d]).powi(2);
                if d < 64 {
                    scaled[d] = v;
                }
                r2 += v;
            }
            let r = r2.sqrt();
            let e5 = (-SQRT5 * r).exp();
            let kf = s2 * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * e5;
            let common = s2 * (5.0 / 3.0) * (1.0 + SQRT5 * r) * e5;
            for d in 0..dim {
                let v = if d < 64 {
                    scaled[d]
                } else {
                    ((inputs[i][d] - inputs[j][d]) * model.inv_ls[d]).powi(2)
                };
                grad[d] += a * common * v;
            }
            grad[dim] += a * kf;
            if i == j {
                grad[dim + 1] += a * model.params.noise_variance;
            }
        }
    }
    Some((-lml, grad.iter().map(|g| -0.5 * g).collect()))
}

fn fit_objective(inputs: &[Vec<f64>], y: &[f64], restarts: usize, seed: u64) -> (KernelParams, ObjectiveFit) {
    let dim = inputs[0].len();
    let bounds = Bounds::new(dim);
    let mut rng = rng::stream(seed, &[0x4650]);
    let default_start: Vec<f64> = {
        let mut t = vec![0.5f64.ln(); dim];
        t.push(0.0);
        t.push(1e-2f64.ln());
        t
    };
    let objective = |u: &[f64]| -> (f64, Vec<f64>) {
        let t = bounds.to_log(u);
        match neg_lml_and_grad(&t, inputs, y) {
            Some((f, g)) => {
                let gu = g
                    .iter()
                    .zip(u)
                    .enumerate()
                    .map(|(i, (gi, ui))| {
                        let s = sigmoid(*ui);
                        gi * (bounds.hi[i] - bounds.lo[i]) * s * (1.0 - s)
                    })
                    .collect();
                (f, gu)
            }
            None => (f64::INFINITY, vec![0.0; u.len()]),
        }
    };
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for r in 0..restarts.max(1) {
        let start = if r == 0 {
            default_start.clone()
        } else {
            let mut t: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05f64.ln()..2.0f64.ln())).collect();
            t.push(rng.gen_range(0.1f64.ln()..10.0f64.ln()));
            t.push(rng.gen_range(1e-4f64.ln()..0.3f64.ln()));
            t
        };
        let u0 = bounds.from_log(&start);
        let (f0, _) = objective(&u0);
        let (u, fu) = optim::minimize(objective, &u0, &LbfgsOptions::default());
        if !fu.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |(_, b, _)| fu < *b) {
            best = Some((u, fu, f0));
        }
    }
    match best {
        Some((u, fu, f0)) => (
            params_from_log(&bounds.to_log(&u), dim),
            ObjectiveFit { start_lml: -f0, final_lml: -fu, degenerate: false },
        ),
        None => {
            let params = params_from_log(&default_start, dim);
            let lml = log_marginal_likelihood(&params, inputs, y).unwrap_or(f64::NEG_INFINITY);
            (params, ObjectiveFit { start_lml: lml, final_lml: lml, degenerate: false })
        }
    }
}

/// Fits every objective by multi-start maximization of the log marginal
/// likelihood on model-space data, returning the posterior and a per-objective report.
pub fn fit_with_report(
    data: &Dataset,
    standardizer: Standardizer,
    restarts: usize,
    seed: u64,
) -> Result<(GpPosterior, Vec<ObjectiveFit>)> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument("hyperparameter fitting needs at least two observations".into()));
    }
    let m = data.outputs[0].len();
    let dim = data.inputs[0].len();
    let mut params = Vec::with_capacity(m);
    let mut report = Vec::with_capacity(m);
    for k in 0..m {
        let y: Vec<f64> = data.outputs.iter().map(|o| o[k]).collect();
        let first = y[0];
        if y.iter().all(|v| (v - first).abs() <= 1e-12) {
            log::warn!("objective {k} has constant observations; signal variance pinned to its lower bound");
            let p = KernelParams {
                lengthscales: vec![0.5; dim],
                signal_variance: SIGNAL_BOUNDS.0,
                noise_variance: NOISE_BOUNDS.0,
                constant_mean: 0.0,
            };
            let lml = log_marginal_likelihood(&p, &data.inputs, &y)?;
            params.push(p);
            report.push(ObjectiveFit { start_lml: lml, final_lml: lml, degenerate: true });
            continue;
        }
        let (p, fit) = fit_objective(&data.inputs, &y, restarts, rng::derive_seed(seed, &[k as u64]));
        params.push(p);
        report.push(fit);
    }
    let mut posterior = GpPosterior::new(params, data.clone(), standardizer)?;
    for (o, r) in posterior.objectives.iter_mut().zip(&report) {
        o.degenerate = r.degenerate;
    }
    Ok((posterior, report))
}

/// Fits hyperparameters on model-space data (see [`fit_with_report`]).
pub fn fit_hyperparameters(data: &Dataset, standardizer: Standardizer, restarts: usize, seed: u64) -> Result<GpPosterior> {
    fit_with_report(data, standardizer, restarts, seed).map(|(p, _)| p)
}
