//! Benchmark problems, all exposed in the maximization convention.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::evolver::{nsga2_minimize, EvolverConfig};
use crate::gp::{Dataset, GpPosterior, KernelParams};
use crate::pareto;
use crate::paths::{self, PathSample};
use crate::qmc::ScrambledHalton;
use crate::rng;

const ZDT2_FRONT_POINTS: usize = 1000;

#[derive(Debug, Clone)]
enum Kind {
    Zdt2 { paper_sign: bool },
    GpSample(Box<PathSample>),
}

#[derive(Debug)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    pub num_objectives: usize,
    pub bounds: Vec<(f64, f64)>,
    pub noise_sd: Vec<f64>,
    pub reference: Vec<f64>,
    kind: Kind,
    front: OnceLock<Vec<Vec<f64>>>,
}

/// ZDT2 in its usual minimization form. `paper_sign` flips the sign inside g.
pub fn zdt2(x: &[f64], paper_sign: bool) -> Vec<f64> {
    let d = x.len();
    let f1 = x[0];
    let tail: f64 = if d > 1 { 9.0 / (d - 1) as f64 * x[1..].iter().sum::<f64>() } else { 0.0 };
    let g = if paper_sign { 1.0 - tail } else { 1.0 + tail };
    vec![f1, g * (1.0 - (f1 / g).powi(2))]
}

impl Problem {
    /// Standard ZDT2 with the noise levels (0.1, 0.8) and reference (−11, −11).
    pub fn zdt2(dim: usize, noisy: bool, paper_sign: bool) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("ZDT2 needs at least two inputs".into()));
        }
        Ok(Self {
            name: format!("zdt2{}:{dim}", if paper_sign { "-paper" } else { "" }),
            dim,
            num_objectives: 2,
            bounds: vec![(0.0, 1.0); dim],
            noise_sd: if noisy { vec![0.1, 0.8] } else { vec![0.0, 0.0] },
            reference: vec![-11.0, -11.0],
            kind: Kind::Zdt2 { paper_sign },
            front: OnceLock::new(),
        })
    }

    /// A smooth noiseless function drawn from a Matérn-5/2 GP prior.
    pub fn gp_sample(dim: usize, m: usize, seed: u64) -> Result<Self> {
        if dim == 0 || m == 0 {
            return Err(Error::InvalidArgument("dimension and objective count must be positive".into()));
        }
        let params = (0..m).map(|_| KernelParams::isotropic(dim, 0.25, 1.0, 1e-6)).collect();
        let prior = GpPosterior::from_model_space(params, Dataset::default())?;
        let path = paths::draw_path(&prior, paths::DEFAULT_FEATURES, seed)?;
        let probe = ScrambledHalton::new(dim, seed).points(1000);
        let values = path.evaluate(&probe);
        let reference = (0..m)
            .map(|k| values.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
            .collect();
        Ok(Self {
            name: format!("gp:{dim}:{m}:{seed}"),
            dim,
            num_objectives: m,
            bounds: vec![(0.0, 1.0); dim],
            noise_sd: vec![0.0; m],
            reference,
            kind: Kind::GpSample(Box::new(path)),
            front: OnceLock::new(),
        })
    }

    /// Parses `zdt2`, `zdt2:<D>`, `zdt2-noiseless:<D>`, `zdt2-paper:<D>` or
    /// `gp:<D>:<M>:<seed>`. `paper_sign` forces the literal ZDT2 variant.
    pub fn parse(id: &str, paper_sign: bool) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        let num = |s: &str| -> Result<u64> { s.parse().map_err(|_| Error::Config(format!("bad number `{s}` in problem `{id}`"))) };
        match parts.as_slice() {
            ["zdt2"] => Self::zdt2(6, true, paper_sign),
            ["zdt2", d] => Self::zdt2(num(d)? as usize, true, paper_sign),
            ["zdt2-noiseless", d] => Self::zdt2(num(d)? as usize, false, paper_sign),
            ["zdt2-paper", d] => Self::zdt2(num(d)? as usize, true, true),
            ["gp", d, m, s] => Self::gp_sample(num(d)? as usize, num(m)? as usize, num(s)?),
            _ => Err(Error::Config(format!("unknown problem `{id}`"))),
        }
    }

    /// Noiseless objective values (to be maximized).
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Zdt2 { paper_sign } => zdt2(x, *paper_sign).into_iter().map(|v| -v).collect(),
            Kind::GpSample(path) => path.evaluate_one(x),
        }
    }

    /// Noisy observation using standard-normal draws from `rng`.
    pub fn observe(&self, x: &[f64], rng: &mut rng::Rng) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        self.evaluate(x)
            .into_iter()
            .zip(&self.noise_sd)
            .map(|(v, s)| {
                let z: f64 = StandardNormal.sample(rng);
                v + s * z
            })
            .collect()
    }

    /// True Pareto front (maximization convention). Analytic for standard
    /// ZDT2, otherwise obtained once by a long evolutionary run.
    pub fn true_front(&self) -> &[Vec<f64>] {
        self.front.get_or_init(|| match self.kind {
            Kind::Zdt2 { paper_sign: false } => (0..ZDT2_FRONT_POINTS)
                .map(|i| {
                    let t = i as f64 / (ZDT2_FRONT_POINTS - 1) as f64;
                    vec![-t, -(1.0 - t * t)]
                })
                .collect(),
            _ => {
                let cfg = EvolverConfig { population: 200, generations: 2000, offspring: 20, seed: 7, ..EvolverConfig::default() };
                let front = nsga2_minimize(
                    |x| {
                        let raw: Vec<f64> = x.iter().zip(&self.bounds).map(|(v, (l, u))| l + v * (u - l)).collect();
                        self.evaluate(&raw).into_iter().map(|v| -v).collect()
                    },
                    self.dim,
                    self.num_objectives,
                    &cfg,
                )
                .expect("fixed solver settings are valid");
                let outputs: Vec<Vec<f64>> = front.outputs.into_iter().map(|o| o.into_iter().map(|v| -v).collect()).collect();
                pareto::pareto_filter(&outputs).into_points()
            }
        })
    }

    /// Hypervolume of the true front with respect to the problem reference.
    pub fn true_hypervolume(&self) -> f64 {
        match self.kind {
            // area under 1 − t² removed from the 11 × 11 square
            Kind::Zdt2 { paper_sign: false } => 121.0 - 2.0 / 3.0,
            _ => pareto::hypervolume(self.true_front(), &self.reference),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zdt2_examples() {
        assert_eq!(zdt2(&[0.0; 6], false), vec![0.0, 1.0]);
        assert_eq!(zdt2(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], false), vec![1.0, 0.0]);
        let f = zdt2(&[0.5, 1.0, 1.0, 1.0, 1.0, 1.0], false);
        assert!((f[1] - 9.975).abs() < 1e-12);
    }

    #[test]
    fn analytic_front_hypervolume_matches_dense_front() {
        let p = Problem::zdt2(6, true, false).unwrap();
        let hv = pareto::hypervolume(p.true_front(), &p.reference);
        assert!(hv < p.true_hypervolume() && p.true_hypervolume() - hv < 1e-3);
    }

    #[test]
    fn parse_identifiers() {
        assert_eq!(Problem::parse("zdt2", false).unwrap().dim, 6);
        assert_eq!(Problem::parse("zdt2-noiseless:2", false).unwrap().noise_sd, vec![0.0, 0.0]);
        let g = Problem::parse("gp:2:1:3", false).unwrap();
        assert_eq!((g.dim, g.num_objectives), (2, 1));
        assert!(Problem::parse("dtlz2:3", false).is_err());
    }

    #[test]
    fn gp_problem_is_deterministic_with_non_dominated_front() {
        let a = Problem::gp_sample(2, 2, 5).unwrap();
        let b = Problem::gp_sample(2, 2, 5).unwrap();
        assert_eq!(a.evaluate(&[0.3, 0.6]), b.evaluate(&[0.3, 0.6]));
        let front = a.true_front();
        assert_eq!(pareto::non_dominated_indices(front).len(), front.len());
    }
}
