//! Hypervolume discrepancy and the generalized hypervolume (GHV).
//!
//! The GHV integrates the scalarization `s_λ(a) = minₘ max(0, (aₘ − rₘ)/λₘ)^M`
//! over directions λ on the non-negative part of the unit sphere. With
//! directions uniform on the sphere it equals the ordinary hypervolume.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pareto;
use crate::rng;

pub const HV_DISCREPANCY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSample {
    pub cube_point: Vec<f64>,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightDistribution {
    /// Directions uniform on the sphere orthant.
    Uniform,
    /// Independent Beta(aᵢ, bᵢ) cube coordinates.
    Beta { a: Vec<f64>, b: Vec<f64> },
    /// Cube coordinates uniform on `[lo, hi]`.
    UniformSubbox { lo: Vec<f64>, hi: Vec<f64> },
}

impl WeightDistribution {
    /// Checks the parameters for `m` objectives; scalar parameter vectors are broadcast.
    pub fn resolve(&self, m: usize) -> Result<Self> {
        let dim = m.saturating_sub(1);
        let broadcast = |v: &[f64], name: &str| -> Result<Vec<f64>> {
            match v.len() {
                1 => Ok(vec![v[0]; dim]),
                n if n == dim => Ok(v.to_vec()),
                n => Err(Error::InvalidArgument(format!("{name} has {n} entries, expected 1 or {dim}"))),
            }
        };
        match self {
            Self::Uniform => Ok(Self::Uniform),
            Self::Beta { a, b } => {
                let (a, b) = (broadcast(a, "beta a")?, broadcast(b, "beta b")?);
                if a.iter().chain(&b).any(|v| !(*v > 0.0)) {
                    return Err(Error::InvalidArgument("beta parameters must be positive".into()));
                }
                Ok(Self::Beta { a, b })
            }
            Self::UniformSubbox { lo, hi } => {
                let (lo, hi) = (broadcast(lo, "box lo")?, broadcast(hi, "box hi")?);
                if lo.iter().zip(&hi).any(|(l, h)| !(0.0 <= *l && l <= h && *h <= 1.0)) {
                    return Err(Error::InvalidArgument("sub-box must satisfy 0 <= lo <= hi <= 1".into()));
                }
                Ok(Self::UniformSubbox { lo, hi })
            }
        }
    }

    pub fn sample(&self, m: usize, rng: &mut rng::Rng) -> WeightSample {
        match self {
            Self::Uniform => {
                let mut z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).map(|v: f64| v.abs()).collect();
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                z.iter_mut().for_each(|v| *v /= norm);
                WeightSample { cube_point: sphere_to_cube(&z), direction: z }
            }
            Self::Beta { a, b } => {
                let w: Vec<f64> = a
                    .iter()
                    .zip(b)
                    .map(|(a, b)| Beta::new(*a, *b).expect("validated parameters").sample(rng))
                    .collect();
                WeightSample { direction: map_to_sphere(&w), cube_point: w }
            }
            Self::UniformSubbox { lo, hi } => {
                let w: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| l + (h - l) * rng.gen::<f64>()).collect();
                WeightSample { direction: map_to_sphere(&w), cube_point: w }
            }
        }
    }
}

impl fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("/");
        match self {
            Self::Uniform => write!(f, "uniform"),
            Self::Beta { a, b } => write!(f, "beta:{},{}", join(a), join(b)),
            Self::UniformSubbox { lo, hi } => write!(f, "box:{},{}", join(lo), join(hi)),
        }
    }
}

/// Parses `uniform`, `beta:a,b` or `box:lo,hi`. Per-coordinate values may be
/// given as `/`-separated lists, e.g. `beta:2/3,5/5`.
impl FromStr for WeightDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(Self::Uniform);
        }
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("unknown weight distribution `{s}`")))?;
        let (x, y) = args
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("expected two parameters in `{s}`")))?;
        let list = |t: &str| -> Result<Vec<f64>> {
            t.split('/')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number `{v}`"))))
                .collect()
        };
        match kind {
            "beta" => Ok(Self::Beta { a: list(x)?, b: list(y)? }),
            "box" => Ok(Self::UniformSubbox { lo: list(x)?, hi: list(y)? }),
            _ => Err(Error::InvalidArgument(format!("unknown weight distribution `{s}`"))),
        }
    }
}

/// Maps cube coordinates to a unit direction via polar angles (π/2)wᵢ.
pub fn map_to_sphere(w: &[f64]) -> Vec<f64> {
    let m = w.len() + 1;
    let mut out = Vec::with_capacity(m);
    let mut sin_prod = 1.0;
    for wi in w {
        let angle = FRAC_PI_2 * wi;
        out.push(sin_prod * angle.cos());
        sin_prod *= angle.sin();
    }
    out.push(sin_prod);
    out
}

/// Inverse of [`map_to_sphere`] for non-negative unit directions.
pub fn sphere_to_cube(lambda: &[f64]) -> Vec<f64> {
    let m = lambda.len();
    (0..m.saturating_sub(1))
        .map(|i| {
            let rest = lambda[i + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            rest.atan2(lambda[i]) / FRAC_PI_2
        })
        .collect()
}

/// `minₘ max(0, (aₘ − rₘ)/λₘ)^M`; a zero weight never binds unless aₘ ≤ rₘ.
pub fn scalarize(a: &[f64], lambda: &[f64], r: &[f64]) -> f64 {
    let m = a.len() as i32;
    let mut best = f64::INFINITY;
    for ((ai, li), ri) in a.iter().zip(lambda).zip(r) {
        let diff = ai - ri;
        let q = if diff <= 0.0 {
            0.0
        } else if *li == 0.0 {
            f64::INFINITY
        } else {
            diff / li
        };
        best = best.min(q);
    }
    if best.is_infinite() {
        // only possible with an all-zero direction
        return 0.0;
    }
    best.powi(m)
}

/// Volume of the unit ball restricted to the non-negative orthant.
pub fn orthant_ball_volume(m: usize) -> f64 {
    let mf = m as f64;
    std::f64::consts::PI.powf(mf / 2.0) / (2f64.powf(mf) * libm::tgamma(mf / 2.0 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhvEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo generalized hypervolume of `front` with respect to `reference`.
pub fn generalized_hypervolume(
    front: &[Vec<f64>],
    reference: &[f64],
    dist: &WeightDistribution,
    n_mc: usize,
    seed: u64,
) -> Result<GhvEstimate> {
    if n_mc == 0 {
        return Err(Error::InvalidArgument("at least one Monte Carlo draw is required".into()));
    }
    let m = reference.len();
    if front.is_empty() {
        return Ok(GhvEstimate { value: 0.0, std_error: 0.0 });
    }
    for p in front {
        if p.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: p.len() });
        }
    }
    let dist = dist.resolve(m)?;
    let mut rng = rng::stream(seed, &[0x4748_56]);
    let c = orthant_ball_volume(m);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_mc {
        let w = dist.sample(m, &mut rng);
        let best = front.iter().map(|a| scalarize(a, &w.direction, reference)).fold(0.0, f64::max);
        sum += best;
        sum_sq += best * best;
    }
    let n = n_mc as f64;
    let mean = sum / n;
    let var = if n_mc > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(GhvEstimate { value: c * mean, std_error: c * (var / n).sqrt() })
}

/// log |HV(true) − HV(approx)| with the difference floored at [`HV_DISCREPANCY_FLOOR`].
pub fn log_hv_discrepancy(approx: &[Vec<f64>], truth: &[Vec<f64>], reference: &[f64]) -> f64 {
    let diff = (pareto::hypervolume(truth, reference) - pareto::hypervolume(approx, reference)).abs();
    diff.max(HV_DISCREPANCY_FLOOR).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_map_examples() {
        assert_eq!(map_to_sphere(&[0.0]), vec![1.0, 0.0]);
        let one = map_to_sphere(&[1.0]);
        assert!(one[0].abs() < 1e-15 && (one[1] - 1.0).abs() < 1e-15);
        let half = map_to_sphere(&[0.5]);
        assert!((half[0] - 0.5f64.sqrt()).abs() < 1e-15 && (half[1] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sphere_map_is_unit_and_invertible() {
        let mut r = rng::seeded(1);
        for m in 2..6 {
            for _ in 0..100 {
                let w: Vec<f64> = (0..m - 1).map(|_| r.gen_range(0.001..0.999)).collect();
                let l = map_to_sphere(&w);
                assert!((l.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(l.iter().all(|v| *v >= 0.0));
                for (a, b) in sphere_to_cube(&l).iter().zip(&w) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn scalarization_examples() {
        let s = 0.5f64.sqrt();
        assert_eq!(scalarize(&[-1.0, 2.0], &[s, s], &[0.0, 0.0]), 0.0);
        assert!((scalarize(&[1.0, 1.0], &[s, s], &[0.0, 0.0]) - 2.0).abs() < 1e-12);
        assert_eq!(scalarize(&[2.0, 1.0], &[1.0, 0.0], &[0.0, 0.0]), 4.0);
    }

    #[test]
    fn orthant_volume_constant() {
        assert!((orthant_ball_volume(2) - std::f64::consts::PI / 4.0).abs() < 1e-14);
        assert!((orthant_ball_volume(3) - std::f64::consts::PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn ghv_edge_cases() {
        let d = WeightDistribution::Uniform;
        assert_eq!(generalized_hypervolume(&[], &[0.0, 0.0], &d, 10, 0).unwrap().value, 0.0);
        assert_eq!(generalized_hypervolume(&[vec![-1.0, -1.0]], &[0.0, 0.0], &d, 100, 0).unwrap().value, 0.0);
        assert!(generalized_hypervolume(&[vec![1.0, 1.0]], &[0.0, 0.0], &d, 0, 0).is_err());
    }

    #[test]
    fn discrepancy_examples() {
        let r = [0.0, 0.0];
        let a = vec![vec![1.0, 1.0]];
        assert_eq!(log_hv_discrepancy(&a, &a, &r), HV_DISCREPANCY_FLOOR.ln());
        assert!((log_hv_discrepancy(&a, &[vec![3.0, 1.0]], &r) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn distributions_parse_and_validate() {
        assert_eq!("uniform".parse::<WeightDistribution>().unwrap(), WeightDistribution::Uniform);
        let b: WeightDistribution = "beta:2,5".parse().unwrap();
        assert_eq!(b.resolve(3).unwrap(), WeightDistribution::Beta { a: vec![2.0, 2.0], b: vec![5.0, 5.0] });
        assert!("box:0.6,0.2".parse::<WeightDistribution>().unwrap().resolve(2).is_err());
        assert!("beta:0,1".parse::<WeightDistribution>().unwrap().resolve(2).is_err());
        assert!("gauss:1,2".parse::<WeightDistribution>().is_err());
    }
}
