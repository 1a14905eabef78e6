//! NSGA-II over the unit hypercube.
//!
//! Steady-state variant: every generation breeds `offspring` children by
//! binary tournament, simulated binary crossover and polynomial mutation,
//! then keeps the best `population` of parents plus children by
//! non-dominated rank and crowding distance.

use std::cmp::Ordering;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const CROSSOVER_PROB: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolverConfig {
    pub population: usize,
    pub generations: usize,
    pub offspring: usize,
    pub crossover_eta: f64,
    pub mutation_eta: f64,
    /// Per-variable mutation probability; `None` means 1/D.
    pub mutation_prob: Option<f64>,
    pub seed: u64,
}

impl Default for EvolverConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 500,
            offspring: 10,
            crossover_eta: 15.0,
            mutation_eta: 20.0,
            mutation_prob: None,
            seed: 0,
        }
    }
}

impl EvolverConfig {
    /// Settings used when optimizing the posterior mean for recommendations.
    pub fn recommendation() -> Self {
        Self { population: 500, ..Self::default() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidArgument("population must be at least 2".into()));
        }
        if self.offspring < 1 || self.generations < 1 {
            return Err(Error::InvalidArgument("offspring and generations must be positive".into()));
        }
        if !(self.crossover_eta > 0.0 && self.mutation_eta > 0.0) {
            return Err(Error::InvalidArgument("distribution indices must be positive".into()));
        }
        if let Some(p) = self.mutation_prob {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidArgument("mutation probability must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Non-dominated inputs and their objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverFront {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

/// Minimizes an `m`-objective function over `[0,1]^dim`.
///
/// Candidates with non-finite outputs are ranked last and never returned.
pub fn nsga2_minimize<F>(mut objective: F, dim: usize, m: usize, cfg: &EvolverConfig) -> Result<SolverFront>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    if dim == 0 || m == 0 {
        return Err(Error::InvalidArgument("dimension and objective count must be positive".into()));
    }
    let mut rng = rng::stream(cfg.seed, &[0x4E53_4741]);
    let mutation_prob = cfg.mutation_prob.unwrap_or(1.0 / dim as f64);

    let mut eval = |x: &[f64]| -> Vec<f64> {
        let f = objective(x);
        assert_eq!(f.len(), m, "objective returned the wrong number of values");
        if f.iter().all(|v| v.is_finite()) {
            f
        } else {
            vec![f64::INFINITY; m]
        }
    };

    let mut xs: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut fs: Vec<Vec<f64>> = xs.iter().map(|x| eval(x)).collect();
    let (mut rank, mut crowd) = rank_and_crowding(&fs);

    for _ in 1..cfg.generations {
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(cfg.offspring + 1);
        while children.len() < cfg.offspring {
            let a = tournament(&mut rng, &rank, &crowd);
            let b = tournament(&mut rng, &rank, &crowd);
            let (mut c1, mut c2) = sbx(&mut rng, &xs[a], &xs[b], cfg.crossover_eta);
            polynomial_mutation(&mut rng, &mut c1, cfg.mutation_eta, mutation_prob);
            polynomial_mutation(&mut rng, &mut c2, cfg.mutation_eta, mutation_prob);
            children.push(c1);
            children.push(c2);
        }
        children.truncate(cfg.offspring);
        for c in children {
            fs.push(eval(&c));
            xs.push(c);
        }
        let survivors = survival(&fs, cfg.population);
        xs = survivors.iter().map(|&i| std::mem::take(&mut xs[i])).collect();
        fs = survivors.iter().map(|&i| std::mem::take(&mut fs[i])).collect();
        let rc = rank_and_crowding(&fs);
        rank = rc.0;
        crowd = rc.1;
    }

    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    for i in 0..xs.len() {
        if rank[i] != 0 || fs[i].iter().any(|v| !v.is_finite()) {
            continue;
        }
        if outputs.iter().any(|o| o == &fs[i]) {
            continue;
        }
        inputs.push(xs[i].clone());
        outputs.push(fs[i].clone());
    }
    Ok(SolverFront { inputs, outputs })
}

fn tournament(rng: &mut Rng, rank: &[usize], crowd: &[f64]) -> usize {
    let a = rng.gen_range(0..rank.len());
    let b = rng.gen_range(0..rank.len());
    let better = match rank[a].cmp(&rank[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => match crowd[a].partial_cmp(&crowd[b]) {
            Some(Ordering::Greater) => a,
            Some(Ordering::Less) => b,
            _ => a.min(b),
        },
    };
    better
}

fn sbx(rng: &mut Rng, p1: &[f64], p2: &[f64], eta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    // draws are consumed unconditionally so the stream does not depend on values
    let do_cross = rng.gen::<f64>() < CROSSOVER_PROB;
    for j in 0..p1.len() {
        let swap_var = rng.gen::<f64>() <= 0.5;
        let u = rng.gen::<f64>();
        let swap_children = rng.gen::<f64>() < 0.5;
        if !do_cross || !swap_var || (p1[j] - p2[j]).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if p1[j] < p2[j] { (p1[j], p2[j]) } else { (p2[j], p1[j]) };
        let spread = y2 - y1;
        let betaq = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let b1 = betaq(1.0 + 2.0 * y1 / spread);
        let b2 = betaq(1.0 + 2.0 * (1.0 - y2) / spread);
        let mut v1 = (0.5 * ((y1 + y2) - b1 * spread)).clamp(0.0, 1.0);
        let mut v2 = (0.5 * ((y1 + y2) + b2 * spread)).clamp(0.0, 1.0);
        if swap_children {
            std::mem::swap(&mut v1, &mut v2);
        }
        c1[j] = v1;
        c2[j] = v2;
    }
    (c1, c2)
}

fn polynomial_mutation(rng: &mut Rng, x: &mut [f64], eta: f64, prob: f64) {
    let pow = 1.0 / (eta + 1.0);
    for v in x.iter_mut() {
        let mutate = rng.gen::<f64>() < prob;
        let u = rng.gen::<f64>();
        if !mutate {
            continue;
        }
        let y = *v;
        let deltaq = if u < 0.5 {
            let xy = 1.0 - y;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let xy = y;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (y + deltaq).clamp(0.0, 1.0);
    }
}

fn weakly_dominates_min(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Fronts of a minimization problem by efficient non-dominated sorting with
/// binary search over fronts. Exact duplicates land in successive fronts.
pub fn non_dominated_fronts(fs: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..fs.len()).collect();
    order.sort_by(|&a, &b| {
        for (x, y) in fs[a].iter().zip(&fs[b]) {
            match x.partial_cmp(y) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        a.cmp(&b)
    });
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    for &n in &order {
        let dominated_in = |front: &Vec<usize>| front.iter().rev().any(|&i| weakly_dominates_min(&fs[i], &fs[n]));
        // first front with no member dominating n
        let (mut lo, mut hi) = (0usize, fronts.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if dominated_in(&fronts[mid]) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == fronts.len() {
            fronts.push(vec![n]);
        } else {
            fronts[lo].push(n);
        }
    }
    fronts
}

fn crowding_distance(fs: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; front.len()];
    if front.len() <= 2 {
        return vec![f64::INFINITY; front.len()];
    }
    let m = fs[front[0]].len();
    let mut idx: Vec<usize> = (0..front.len()).collect();
    for k in 0..m {
        idx.sort_by(|&a, &b| {
            fs[front[a]][k]
                .partial_cmp(&fs[front[b]][k])
                .unwrap_or(Ordering::Equal)
                .then(front[a].cmp(&front[b]))
        });
        let lo = fs[front[idx[0]]][k];
        let hi = fs[front[idx[idx.len() - 1]]][k];
        dist[idx[0]] = f64::INFINITY;
        dist[idx[idx.len() - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0) || !range.is_finite() {
            continue;
        }
        for w in 1..idx.len() - 1 {
            dist[idx[w]] += (fs[front[idx[w + 1]]][k] - fs[front[idx[w - 1]]][k]) / range;
        }
    }
    dist
}

fn rank_and_crowding(fs: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; fs.len()];
    let mut crowd = vec![0.0; fs.len()];
    for (r, front) in non_dominated_fronts(fs).iter().enumerate() {
        let d = crowding_distance(fs, front);
        for (k, &i) in front.iter().enumerate() {
            rank[i] = r;
            crowd[i] = d[k];
        }
    }
    (rank, crowd)
}

fn survival(fs: &[Vec<f64>], size: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(size);
    for front in non_dominated_fronts(fs) {
        if chosen.len() + front.len() <= size {
            chosen.extend_from_slice(&front);
            if chosen.len() == size {
                break;
            }
            continue;
        }
        let d = crowding_distance(fs, &front);
        let mut idx: Vec<usize> = (0..front.len()).collect();
        idx.sort_by(|&a, &b| {
            d[b].partial_cmp(&d[a]).unwrap_or(Ordering::Equal).then(front[a].cmp(&front[b]))
        });
        for &k in idx.iter().take(size - chosen.len()) {
            chosen.push(front[k]);
        }
        break;
    }
    chosen.sort_unstable();
    chosen
}
