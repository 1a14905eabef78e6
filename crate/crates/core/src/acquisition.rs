//! Joint and max-value entropy search acquisition functions and the
//! random-scalarization / Thompson-sampling baselines.
//!
//! All quantities are in model space and maximization is assumed.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::gp::{GpPosterior, Prefix};
use crate::linalg;
use crate::normal::{self, LOG_2PI_E};
use crate::pareto::{self, BoxDecomposition};
use crate::paths::{self, ParetoSample};
use crate::qmc;
use crate::rng;

pub const W_FLOOR: f64 = 1e-10;
pub const VAR_FLOOR: f64 = 1e-12;
pub const DEFAULT_SAMPLES: usize = 10;
pub const DEFAULT_MC_SAMPLES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Jes,
    Mes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimate {
    /// Closed-form noiseless entropy with a noise correction.
    Noiseless,
    /// Moment-matched Gaussian with the full covariance.
    LowerBound,
    /// Moment-matched Gaussian, diagonal only.
    LowerBoundDiagonal,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EstimateKind {
    pub family: Family,
    pub estimate: Estimate,
}

impl EstimateKind {
    pub const fn new(family: Family, estimate: Estimate) -> Self {
        Self { family, estimate }
    }

    pub fn all() -> Vec<Self> {
        let mut out = Vec::new();
        for family in [Family::Jes, Family::Mes] {
            for estimate in [Estimate::Noiseless, Estimate::LowerBound, Estimate::LowerBoundDiagonal, Estimate::MonteCarlo] {
                out.push(Self { family, estimate });
            }
        }
        out
    }
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.family {
            Family::Jes => "JES",
            Family::Mes => "MES",
        };
        let estimate = match self.estimate {
            Estimate::Noiseless => "0",
            Estimate::LowerBound => "LB",
            Estimate::LowerBoundDiagonal => "LB2",
            Estimate::MonteCarlo => "MC",
        };
        write!(f, "{family}-{estimate}")
    }
}

impl FromStr for EstimateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        let (family, estimate) = upper
            .split_once('-')
            .ok_or_else(|| Error::Config(format!("unknown acquisition `{s}`")))?;
        let family = match family {
            "JES" => Family::Jes,
            "MES" => Family::Mes,
            _ => return Err(Error::Config(format!("unknown acquisition family in `{s}`"))),
        };
        let estimate = match estimate {
            "0" => Estimate::Noiseless,
            "LB" => Estimate::LowerBound,
            "LB2" => Estimate::LowerBoundDiagonal,
            "MC" => Estimate::MonteCarlo,
            _ => return Err(Error::Config(format!("unknown entropy estimate in `{s}`"))),
        };
        Ok(Self { family, estimate })
    }
}

/// Standardized box bounds and the CDF/PDF differences built from them for
/// one input location.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationStats {
    pub mean: Vec<f64>,
    /// Latent variance, floored at [`VAR_FLOOR`].
    pub var: Vec<f64>,
    pub noise: Vec<f64>,
    pub gamma_lower: Vec<Vec<f64>>,
    pub gamma_upper: Vec<Vec<f64>>,
    pub w_jm: Vec<Vec<f64>>,
    pub w_j: Vec<f64>,
    pub w: f64,
    pub g_jm: Vec<Vec<f64>>,
    pub v_jm: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
}

impl TruncationStats {
    /// Builds the statistics from a Gaussian N(mean, diag(var)) on the
    /// latent objectives and observation noise variances.
    pub fn from_moments(mean: &[f64], var: &[f64], noise: &[f64], decomposition: &BoxDecomposition) -> Self {
        let m = mean.len();
        let var: Vec<f64> = var.iter().map(|v| v.max(VAR_FLOOR)).collect();
        let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let j = decomposition.len();
        let mut stats = Self {
            mean: mean.to_vec(),
            var: var.clone(),
            noise: noise.to_vec(),
            gamma_lower: Vec::with_capacity(j),
            gamma_upper: Vec::with_capacity(j),
            w_jm: Vec::with_capacity(j),
            w_j: Vec::with_capacity(j),
            w: 0.0,
            g_jm: Vec::with_capacity(j),
            v_jm: Vec::with_capacity(j),
            rho: var.iter().zip(noise).map(|(v, s)| (v / (v + s)).sqrt()).collect(),
        };
        for b in decomposition.boxes() {
            let gl: Vec<f64> = (0..m).map(|k| (b.lower[k] - mean[k]) / sd[k]).collect();
            let gu: Vec<f64> = (0..m).map(|k| (b.upper[k] - mean[k]) / sd[k]).collect();
            let w: Vec<f64> = (0..m).map(|k| normal::cdf_diff(gl[k], gu[k])).collect();
            let g: Vec<f64> = (0..m).map(|k| normal::pdf(gu[k]) - normal::pdf(gl[k])).collect();
            let v: Vec<f64> = (0..m).map(|k| normal::x_pdf(gu[k]) - normal::x_pdf(gl[k])).collect();
            let wj: f64 = w.iter().product();
            stats.w += wj;
            stats.w_j.push(wj);
            stats.gamma_lower.push(gl);
            stats.gamma_upper.push(gu);
            stats.w_jm.push(w);
            stats.g_jm.push(g);
            stats.v_jm.push(v);
        }
        stats.w = stats.w.min(1.0);
        stats
    }

    pub fn num_objectives(&self) -> usize {
        self.mean.len()
    }

    /// True when the truncated mass is below [`W_FLOOR`].
    pub fn is_degenerate(&self) -> bool {
        self.w <= W_FLOOR
    }

    /// Π over objectives other than those in `skip` of W_jm, for box `j`.
    fn partial_product(&self, j: usize, skip: &[usize]) -> f64 {
        self.w_jm[j]
            .iter()
            .enumerate()
            .filter(|(k, _)| !skip.contains(k))
            .map(|(_, v)| v)
            .product()
    }

    /// Σⱼ Wⱼ G_jm / W_jm and Σⱼ Wⱼ V_jm / W_jm, computed without division.
    fn weighted_sums(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.num_objectives();
        let mut sg = vec![0.0; m];
        let mut sv = vec![0.0; m];
        for j in 0..self.w_j.len() {
            for k in 0..m {
                let rest = self.partial_product(j, &[k]);
                sg[k] += rest * self.g_jm[j][k];
                sv[k] += rest * self.v_jm[j][k];
            }
        }
        (sg, sv)
    }

    /// Untruncated Gaussian entropy of the noisy observation.
    pub fn gaussian_entropy(&self) -> f64 {
        self.var
            .iter()
            .zip(&self.noise)
            .map(|(v, s)| 0.5 * LOG_2PI_E + 0.5 * (v + s).ln())
            .sum()
    }

    /// Mean and covariance of the truncated-latent-plus-noise observation.
    pub fn matched_moments(&self) -> (Vec<f64>, DMatrix<f64>) {
        let m = self.num_objectives();
        let w = self.w;
        let sd: Vec<f64> = self.var.iter().map(|v| v.sqrt()).collect();
        let (sg, sv) = self.weighted_sums();
        let mean: Vec<f64> = (0..m).map(|k| self.mean[k] - sd[k] * sg[k] / w).collect();
        let mut cov = DMatrix::zeros(m, m);
        for a in 0..m {
            cov[(a, a)] = (self.var[a] * (1.0 - (sv[a] + sg[a] * sg[a] / w) / w)).max(VAR_FLOOR) + self.noise[a];
            for b in 0..a {
                let cross: f64 = (0..self.w_j.len())
                    .map(|j| self.partial_product(j, &[a, b]) * self.g_jm[j][a] * self.g_jm[j][b])
                    .sum();
                let v = sd[a] * sd[b] / w * (cross - sg[a] * sg[b] / w);
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        (mean, cov)
    }
}

/// Probability that N(mean, diag(var)) falls in the dominated region.
pub fn cdf_dominated(mean: &[f64], var: &[f64], decomposition: &BoxDecomposition) -> f64 {
    let noise = vec![0.0; mean.len()];
    TruncationStats::from_moments(mean, var, &noise, decomposition).w.clamp(0.0, 1.0)
}

/// Statistics for the predictive distribution of `model` at `x`.
pub fn truncation_stats(model: &GpPosterior, x: &[f64], decomposition: &BoxDecomposition) -> TruncationStats {
    let (mean, var) = model.mean_var(x);
    TruncationStats::from_moments(&mean, &var, &model.noise_variances(), decomposition)
}

/// Entropy of the noisy observation at `xs` before conditioning on any sample.
pub fn initial_entropy(model: &GpPosterior, xs: &[Vec<f64>]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument("at least one input is required".into()));
    }
    let noise = model.noise_variances();
    let m = model.num_objectives();
    if xs.len() == 1 {
        let (_, var) = model.mean_var(&xs[0]);
        return Ok(var.iter().zip(&noise).map(|(v, s)| 0.5 * LOG_2PI_E + 0.5 * (v + s).ln()).sum());
    }
    let q = xs.len();
    let (_, covs) = model.posterior_mean_cov(xs);
    let mut h = 0.5 * (m * q) as f64 * LOG_2PI_E;
    for (mut c, s) in covs.into_iter().zip(&noise) {
        for i in 0..q {
            c[(i, i)] += s;
        }
        h += 0.5 * linalg::log_det_spd(&c)?;
    }
    Ok(h)
}

/// Closed-form entropy of the truncated latent with a noise correction.
pub fn h_noiseless(stats: &TruncationStats) -> f64 {
    if stats.is_degenerate() {
        return stats.gaussian_entropy();
    }
    let (_, sv) = stats.weighted_sums();
    stats.gaussian_entropy() + stats.w.ln() - sv.iter().sum::<f64>() / (2.0 * stats.w)
}

/// Entropy of the moment-matched Gaussian; `full_covariance` selects the
/// log-determinant over the diagonal-only sum.
pub fn h_lower_bound(stats: &TruncationStats, full_covariance: bool) -> f64 {
    if stats.is_degenerate() {
        return stats.gaussian_entropy();
    }
    let m = stats.num_objectives();
    let (_, cov) = stats.matched_moments();
    let diagonal = || cov.diagonal().iter().map(|v| 0.5 * LOG_2PI_E + 0.5 * v.ln()).sum::<f64>();
    if !full_covariance || m == 1 {
        return diagonal();
    }
    match linalg::log_det_spd(&cov) {
        Ok(ld) => 0.5 * m as f64 * LOG_2PI_E + 0.5 * ld,
        Err(_) => {
            log::warn!("matched covariance is not positive definite; using its diagonal");
            diagonal()
        }
    }
}

/// Mass of the dominated region under the latent distribution conditioned
/// on the standardized noisy observation `z`.
fn conditional_mass(stats: &TruncationStats, z: &[f64]) -> f64 {
    let m = stats.num_objectives();
    let mut total = 0.0;
    for j in 0..stats.w_j.len() {
        let mut prod = 1.0;
        for k in 0..m {
            let rho = stats.rho[k];
            let resid_var = stats.noise[k] / (stats.var[k] + stats.noise[k]);
            let factor = if resid_var <= 0.0 {
                // noiseless: the latent equals the observation
                let y = rho * z[k];
                if y > stats.gamma_lower[j][k] && y <= stats.gamma_upper[j][k] {
                    1.0
                } else {
                    0.0
                }
            } else {
                let s = resid_var.sqrt();
                normal::cdf_diff((stats.gamma_lower[j][k] - rho * z[k]) / s, (stats.gamma_upper[j][k] - rho * z[k]) / s)
            };
            prod *= factor;
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
    }
    total.min(1.0)
}

/// Monte Carlo entropy estimate from fixed standard-normal base samples.
pub fn h_monte_carlo(stats: &TruncationStats, base_samples: &[Vec<f64>]) -> f64 {
    if stats.is_degenerate() || base_samples.is_empty() {
        return stats.gaussian_entropy();
    }
    let m = stats.num_objectives();
    // The average runs over the standardized observation; its log-Jacobian is
    // added exactly so that rescaling an objective shifts h by a constant.
    let log_norm = -0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln();
    let log_jacobian: f64 = (0..m).map(|k| 0.5 * (stats.var[k] + stats.noise[k]).ln()).sum();
    let mut acc = 0.0;
    for z in base_samples {
        let wp = conditional_mass(stats, z);
        if wp > 0.0 {
            let log_p = log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>();
            acc += wp * (wp.ln() + log_p);
        }
    }
    -acc / (stats.w * base_samples.len() as f64) + stats.w.ln() + log_jacobian
}

/// Conditional entropy estimate of one kind at one set of statistics.
pub fn conditional_entropy(stats: &TruncationStats, estimate: Estimate, base_samples: &[Vec<f64>]) -> f64 {
    match estimate {
        Estimate::Noiseless => h_noiseless(stats),
        Estimate::LowerBound => h_lower_bound(stats, true),
        Estimate::LowerBoundDiagonal => h_lower_bound(stats, false),
        Estimate::MonteCarlo => h_monte_carlo(stats, base_samples),
    }
}

/// Everything needed to evaluate an entropy-search acquisition function.
#[derive(Debug, Clone)]
pub struct AcquisitionContext {
    pub base_model: GpPosterior,
    pub samples: Vec<ParetoSample>,
    pub kind: EstimateKind,
    pub mc_base_samples: Vec<Vec<f64>>,
}

impl AcquisitionContext {
    pub fn new(base_model: GpPosterior, samples: Vec<ParetoSample>, kind: EstimateKind, mc_samples: usize, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("at least one Pareto sample is required".into()));
        }
        let m = base_model.num_objectives();
        let mc_base_samples = if kind.estimate == Estimate::MonteCarlo {
            qmc::normal_base_samples(mc_samples.max(1), m, seed)
        } else {
            Vec::new()
        };
        Ok(Self { base_model, samples, kind, mc_base_samples })
    }

    /// Average conditional entropy over the Pareto samples at one input.
    pub fn mean_conditional_entropy(&self, x: &[f64]) -> f64 {
        self.conditional_entropy_with(x, &self.base_model.prefix(x))
    }

    fn conditional_entropy_with(&self, x: &[f64], prefix: &Prefix) -> f64 {
        let noise = self.base_model.noise_variances();
        let total: f64 = self
            .samples
            .iter()
            .map(|s| {
                let stats = match self.kind.family {
                    Family::Jes => {
                        let (mean, var) = s.conditioned_model.mean_var_from_prefix(x, prefix);
                        TruncationStats::from_moments(&mean, &var, &noise, &s.decomposition)
                    }
                    Family::Mes => TruncationStats::from_moments(&prefix.mean, &prefix.var, &noise, &s.decomposition),
                };
                conditional_entropy(&stats, self.kind.estimate, &self.mc_base_samples)
            })
            .sum();
        total / self.samples.len() as f64
    }

    /// Acquisition value of one input.
    pub fn value(&self, x: &[f64]) -> f64 {
        let prefix = self.base_model.prefix(x);
        let init: f64 = prefix
            .var
            .iter()
            .zip(self.base_model.noise_variances())
            .map(|(v, s)| 0.5 * LOG_2PI_E + 0.5 * (v + s).ln())
            .sum();
        init - self.conditional_entropy_with(x, &prefix)
    }

    /// Batch lower bound: joint initial entropy minus the summed per-point
    /// conditional entropies.
    pub fn batch_value(&self, xs: &[Vec<f64>]) -> Result<f64> {
        let init = initial_entropy(&self.base_model, xs)?;
        Ok(init - xs.iter().map(|x| self.mean_conditional_entropy(x)).sum::<f64>())
    }
}

/// Greedy batch selection from `candidates`. Returns the chosen indices and
/// the batch acquisition value after each addition.
pub fn greedy_batch_select(ctx: &AcquisitionContext, candidates: &[Vec<f64>], q: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if q > candidates.len() {
        return Err(Error::InvalidArgument(format!("batch size {q} exceeds {} candidates", candidates.len())));
    }
    let cond: Vec<f64> = candidates.iter().map(|x| ctx.mean_conditional_entropy(x)).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(q);
    let mut values = Vec::with_capacity(q);
    let mut batch: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut cond_sum = 0.0;
    while chosen.len() < q {
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in candidates.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            batch.push(x.clone());
            let v = initial_entropy(&ctx.base_model, &batch)? - cond_sum - cond[i];
            batch.pop();
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let (i, v) = best.expect("q never exceeds the candidate count");
        chosen.push(i);
        batch.push(candidates[i].clone());
        cond_sum += cond[i];
        values.push(v);
    }
    Ok((chosen, values))
}

/// Thompson-sampling hypervolume baseline: draws one path and picks the
/// candidate whose path value most improves the path's front at the data.
pub fn baseline_tsemo(model: &GpPosterior, candidates: &[Vec<f64>], features: usize, seed: u64, reference: &[f64]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates".into()));
    }
    let path = paths::draw_path(model, features, seed)?;
    let front = pareto::pareto_filter(&path.evaluate(model.inputs())).into_points();
    let base = pareto::hypervolume(&front, reference);
    let mut best = (0, f64::NEG_INFINITY);
    let mut pts = front;
    for (i, x) in candidates.iter().enumerate() {
        pts.push(path.evaluate_one(x));
        let gain = pareto::hypervolume(&pts, reference) - base;
        pts.pop();
        if gain > best.1 {
            best = (i, gain);
        }
    }
    Ok(best.0)
}

/// Augmented Chebyshev scalarization of normalized objectives.
pub fn chebyshev(weights: &[f64], normalized: &[f64]) -> f64 {
    let min = weights.iter().zip(normalized).map(|(w, f)| w * f).fold(f64::INFINITY, f64::min);
    min + 0.01 * weights.iter().zip(normalized).map(|(w, f)| w * f).sum::<f64>()
}

/// Random-scalarization baseline with Monte Carlo expected improvement.
pub fn baseline_parego(model: &GpPosterior, candidates: &[Vec<f64>], mc_samples: usize, seed: u64) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates".into()));
    }
    let ys = model.outputs();
    if ys.is_empty() {
        return Err(Error::InvalidArgument("random scalarization needs observations".into()));
    }
    let m = model.num_objectives();
    let mut rng = rng::stream(seed, &[0x5041]);
    let raw: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let lo: Vec<f64> = (0..m).map(|k| ys.iter().map(|y| y[k]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..m).map(|k| ys.iter().map(|y| y[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let normalize = |y: &[f64]| -> Vec<f64> {
        (0..m).map(|k| (y[k] - lo[k]) / (hi[k] - lo[k]).max(1e-12)).collect()
    };
    let incumbent = ys.iter().map(|y| chebyshev(&weights, &normalize(y))).fold(f64::NEG_INFINITY, f64::max);
    let base = qmc::normal_base_samples(mc_samples.max(1), m, rng.gen());
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in candidates.iter().enumerate() {
        let (mean, var) = model.mean_var(x);
        let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let ei = base
            .iter()
            .map(|z| {
                let y: Vec<f64> = (0..m).map(|k| mean[k] + sd[k] * z[k]).collect();
                (chebyshev(&weights, &normalize(&y)) - incumbent).max(0.0)
            })
            .sum::<f64>()
            / base.len() as f64;
        if ei > best.1 {
            best = (i, ei);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::box_decompose;

    fn decomposition(points: &[Vec<f64>]) -> BoxDecomposition {
        box_decompose(points).unwrap()
    }

    #[test]
    fn kinds_round_trip_through_strings() {
        for kind in EstimateKind::all() {
            assert_eq!(kind.to_string().parse::<EstimateKind>().unwrap(), kind);
        }
        assert!("JES-XX".parse::<EstimateKind>().is_err());
        assert_eq!("mes-lb2".parse::<EstimateKind>().unwrap().to_string(), "MES-LB2");
    }

    #[test]
    fn single_box_statistics() {
        let d = decomposition(&[vec![0.0]]);
        let s = TruncationStats::from_moments(&[0.0], &[1.0], &[0.0], &d);
        assert!((s.w - 0.5).abs() < 1e-15);
        assert!((s.g_jm[0][0] - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(s.v_jm[0][0], 0.0);
    }

    #[test]
    fn cdf_examples() {
        assert!((cdf_dominated(&[0.0], &[1.0], &decomposition(&[vec![0.0]])) - 0.5).abs() < 1e-15);
        assert!((cdf_dominated(&[0.0, 0.0], &[1.0, 1.0], &decomposition(&[vec![0.0, 0.0]])) - 0.25).abs() < 1e-15);
        let p = cdf_dominated(&[0.0, 0.0], &[1.0, 1.0], &decomposition(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        let phi1 = normal::cdf(1.0);
        assert!((p - (0.5 * phi1 + (phi1 - 0.5) * 0.5)).abs() < 1e-14);
    }

    #[test]
    fn far_tail_box_is_finite() {
        let d = decomposition(&[vec![-10.0]]);
        let s = TruncationStats::from_moments(&[0.0], &[1.0], &[0.0], &d);
        assert!(s.w < 1e-20 && s.w.is_finite());
        assert!(h_noiseless(&s).is_finite() && h_lower_bound(&s, true).is_finite());
    }

    #[test]
    fn one_dimensional_truncated_normal_values() {
        let d = decomposition(&[vec![0.0]]);
        let s = TruncationStats::from_moments(&[0.0], &[1.0], &[0.0], &d);
        let (mean, cov) = s.matched_moments();
        assert!((mean[0] + 0.797_884_560_802_865_4).abs() < 1e-12);
        assert!((cov[(0, 0)] - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
        assert!((h_noiseless(&s) - (0.5 * LOG_2PI_E + 0.5f64.ln())).abs() < 1e-12);
        let noisy = TruncationStats::from_moments(&[0.0], &[1.0], &[1.0], &d);
        assert!((noisy.matched_moments().1[(0, 0)] - (2.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
        let lb = h_lower_bound(&s, true);
        assert!((lb - (0.5 * LOG_2PI_E + 0.5 * (1.0 - 2.0 / std::f64::consts::PI).ln())).abs() < 1e-12);
        assert!(lb >= h_noiseless(&s));
    }

    #[test]
    fn unbounded_front_gives_gaussian_entropy() {
        let d = decomposition(&[vec![1e300, 1e300]]);
        let s = TruncationStats::from_moments(&[0.3, -0.2], &[0.5, 2.0], &[0.1, 0.1], &d);
        let g = s.gaussian_entropy();
        assert!((s.w - 1.0).abs() < 1e-12);
        assert!((h_noiseless(&s) - g).abs() < 1e-10);
        let z = qmc::normal_base_samples(512, 2, 0);
        assert!((h_monte_carlo(&s, &z) - g).abs() < 0.05);
    }

    #[test]
    fn g_is_derivative_of_w() {
        let d = decomposition(&[vec![0.5, -0.3], vec![-0.2, 0.9]]);
        let (mean, var) = (vec![0.1, 0.2], vec![0.7, 1.4]);
        let s = TruncationStats::from_moments(&mean, &var, &[0.0, 0.0], &d);
        let h = 1e-5;
        for k in 0..2 {
            let mut up = mean.clone();
            up[k] += h;
            let mut dn = mean.clone();
            dn[k] -= h;
            let su = TruncationStats::from_moments(&up, &var, &[0.0, 0.0], &d);
            let sd = TruncationStats::from_moments(&dn, &var, &[0.0, 0.0], &d);
            for j in 0..d.len() {
                let fd = (su.w_jm[j][k] - sd.w_jm[j][k]) / (2.0 * h);
                assert!((fd + s.g_jm[j][k] / var[k].sqrt()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hadamard_ordering() {
        let d = decomposition(&[vec![0.5, -0.3], vec![-0.2, 0.9], vec![0.1, 0.2]]);
        let s = TruncationStats::from_moments(&[0.1, 0.2], &[0.7, 1.4], &[0.01, 0.02], &d);
        assert!(h_lower_bound(&s, true) <= h_lower_bound(&s, false) + 1e-12);
    }

    #[test]
    fn scalarization_examples() {
        assert!((chebyshev(&[1.0, 0.0], &[0.5, 0.2]) - 0.005).abs() < 1e-15);
        assert!((chebyshev(&[0.5, 0.5], &[0.4, 0.8]) - 0.206).abs() < 1e-15);
    }
}
