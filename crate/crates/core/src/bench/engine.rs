//! The Bayesian optimization loop and its persistence.

use std::fs::File;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;

use super::config::{ExperimentConfig, Method};
use super::problems::Problem;
use crate::acquisition::{self, AcquisitionContext};
use crate::error::{Error, Result};
use crate::evolver::{nsga2_minimize, EvolverConfig};
use crate::gp::{self, Dataset, GpPosterior, Standardizer};
use crate::metrics;
use crate::pareto;
use crate::paths;
use crate::qmc::ScrambledHalton;
use crate::rng;

const REFINE_TOP: usize = 10;
const REFINE_STEPS: usize = 50;
const REFINE_START: f64 = 0.1;
const REFINE_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Record wall-clock phase timings; off by default so output is reproducible.
    pub timing: bool,
    pub zdt2_paper_sign: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub iter: usize,
    pub inputs: Vec<Vec<f64>>,
    pub observations: Vec<Vec<f64>>,
    pub phase_ms: [f64; 3],
    pub log_hv_disc: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dim: usize,
    pub num_objectives: usize,
    /// Row 0 holds the initial design; row `t` the `t`-th acquisition.
    pub rows: Vec<IterationRow>,
    /// Final recommended inputs in problem units.
    pub recommendation: Vec<Vec<f64>>,
}

impl RunRecord {
    pub fn final_log_hv_disc(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.log_hv_disc)
    }
}

pub fn csv_header(dim: usize, m: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string()];
    h.extend((1..=dim).map(|d| format!("x_{d}")));
    h.extend((1..=m).map(|k| format!("y_{k}")));
    h.extend(["phase_ms_init", "phase_ms_sample", "phase_ms_opt", "log_hv_disc"].map(String::from));
    h
}

fn csv_row(row: &IterationRow, dim: usize, m: usize) -> Vec<String> {
    let join = |pts: &[Vec<f64>], k: usize| pts.iter().map(|p| p[k].to_string()).collect::<Vec<_>>().join(";");
    let mut out = vec![row.iter.to_string()];
    out.extend((0..dim).map(|d| join(&row.inputs, d)));
    out.extend((0..m).map(|k| join(&row.observations, k)));
    out.extend(row.phase_ms.iter().map(|v| v.to_string()));
    out.push(row.log_hv_disc.to_string());
    out
}

/// Compass search inside the unit cube: tries ±step along each coordinate,
/// moves to the best improvement and halves the step when nothing improves.
pub fn pattern_search<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], f0: f64) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut step = REFINE_START;
    for _ in 0..REFINE_STEPS {
        if step < REFINE_MIN {
            break;
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + sign * step).clamp(0.0, 1.0);
                if y[d] == x[d] {
                    continue;
                }
                let fy = f(&y);
                if fy > best.as_ref().map_or(fx, |b| b.1) {
                    best = Some((y, fy));
                }
            }
        }
        match best {
            Some((y, fy)) => {
                x = y;
                fx = fy;
            }
            None => step *= 0.5,
        }
    }
    (x, fx)
}

/// Maximizes the acquisition over a scrambled Halton pool, refines the best
/// pool points by pattern search and, for `q > 1`, selects the batch greedily.
pub fn optimize_acquisition(ctx: &AcquisitionContext, pool_size: usize, q: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let dim = ctx.base_model.dim();
    let pool = ScrambledHalton::new(dim, seed).points(pool_size.max(q));
    let values: Vec<f64> = pool.iter().map(|x| ctx.value(x)).collect();
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let refined: Vec<(Vec<f64>, f64)> = order
        .iter()
        .take(REFINE_TOP)
        .map(|&i| pattern_search(|x| ctx.value(x), &pool[i], values[i]))
        .collect();
    if q == 1 {
        let best = refined
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.1.total_cmp(&b.1).then(j.cmp(i)))
            .map(|(_, r)| r.0.clone())
            .expect("pool is non-empty");
        return Ok(vec![best]);
    }
    let mut candidates: Vec<Vec<f64>> = refined.into_iter().map(|r| r.0).collect();
    candidates.extend(order.iter().take(pool_size.min(10 * q + 100)).map(|&i| pool[i].clone()));
    let (chosen, _) = acquisition::greedy_batch_select(ctx, &candidates, q)?;
    Ok(chosen.into_iter().map(|i| candidates[i].clone()).collect())
}

/// Recommended inputs (model space): NSGA-II on the posterior mean, merged
/// with the previous recommendation and greedily truncated by hypervolume.
/// The previous set is kept if the new one would have a smaller
/// posterior-mean hypervolume.
pub fn recommend(model: &GpPosterior, evolver: &EvolverConfig, size: usize, previous: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let reference = paths::nadir_reference(model.outputs())
        .ok_or_else(|| Error::InvalidArgument("recommendation needs observations".into()))?;
    let front = nsga2_minimize(
        |x| model.mean(x).into_iter().map(|v| -v).collect(),
        model.dim(),
        model.num_objectives(),
        evolver,
    )?;
    let mut inputs = front.inputs;
    inputs.extend_from_slice(previous);
    let means: Vec<Vec<f64>> = inputs.iter().map(|x| model.mean(x)).collect();
    let keep = pareto::non_dominated_indices(&means);
    let inputs: Vec<Vec<f64>> = keep.iter().map(|&i| inputs[i].clone()).collect();
    let means: Vec<Vec<f64>> = keep.iter().map(|&i| means[i].clone()).collect();
    let chosen = pareto::greedy_hv_truncate(&means, size, &reference);
    let new: Vec<Vec<f64>> = chosen.iter().map(|&i| inputs[i].clone()).collect();
    if !previous.is_empty() {
        let hv = |xs: &[Vec<f64>]| pareto::hypervolume(&xs.iter().map(|x| model.mean(x)).collect::<Vec<_>>(), &reference);
        if hv(&new) < hv(previous) {
            return Ok(previous.to_vec());
        }
    }
    Ok(new)
}

fn elapsed_ms(start: Instant, timing: bool) -> f64 {
    if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

struct Sink {
    writer: csv::Writer<File>,
    dim: usize,
    m: usize,
}

impl Sink {
    fn write(&mut self, row: &IterationRow) -> Result<()> {
        self.writer.write_record(csv_row(row, self.dim, self.m))?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Runs one experiment. With `out_dir`, writes `run.csv` (flushed after every
/// row), `recommendation.csv` and a copy of the resolved config.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions, out_dir: Option<&Path>) -> Result<RunRecord> {
    cfg.validate()?;
    let method = cfg.method()?;
    let problem = Problem::parse(&cfg.problem, opts.zdt2_paper_sign)?;
    let dim = problem.dim;
    let m = problem.num_objectives;
    let true_hv = problem.true_hypervolume();

    let mut sink = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
            let mut writer = csv::Writer::from_path(dir.join("run.csv"))?;
            writer.write_record(csv_header(dim, m))?;
            writer.flush()?;
            Some(Sink { writer, dim, m })
        }
        None => None,
    };

    let to_raw = |x: &[f64]| -> Vec<f64> { x.iter().zip(&problem.bounds).map(|(v, (l, u))| l + v * (u - l)).collect() };
    let rec_evolver = EvolverConfig { population: 500, ..cfg.evolver.clone() };
    let score = |rec: &[Vec<f64>]| -> f64 {
        let values: Vec<Vec<f64>> = rec.iter().map(|x| problem.evaluate(x)).collect();
        (true_hv - pareto::hypervolume(&values, &problem.reference)).abs().max(metrics::HV_DISCREPANCY_FLOOR).ln()
    };

    // initial design
    let n_init = cfg.n_init_for(dim);
    let mut inputs: Vec<Vec<f64>> = ScrambledHalton::new(dim, rng::derive_seed(cfg.seed, &[0x1D]))
        .points(n_init)
        .iter()
        .map(|x| to_raw(x))
        .collect();
    let mut noise_rng = rng::stream(cfg.seed, &[0x4E]);
    let mut observations: Vec<Vec<f64>> = inputs.iter().map(|x| problem.observe(x, &mut noise_rng)).collect();

    let fit = |inputs: &[Vec<f64>], observations: &[Vec<f64>], iter: usize| -> Result<GpPosterior> {
        let std = Standardizer::fit(&problem.bounds, observations);
        let data = std.to_model(&Dataset::new(inputs.to_vec(), observations.to_vec())?);
        gp::fit_hyperparameters(&data, std, gp::DEFAULT_RESTARTS, rng::derive_seed(cfg.seed, &[0xF1, iter as u64]))
    };
    // posterior under fixed hyperparameters after new data arrives
    let refresh = |model: &GpPosterior, inputs: &[Vec<f64>], observations: &[Vec<f64>]| -> Result<GpPosterior> {
        let std = Standardizer::fit(&problem.bounds, observations);
        let data = std.to_model(&Dataset::new(inputs.to_vec(), observations.to_vec())?);
        let params = (0..m).map(|k| model.params(k).clone()).collect();
        GpPosterior::new(params, data, std)
    };
    let recommend_raw = |model: &GpPosterior, previous: &[Vec<f64>], iter: usize| -> Result<Vec<Vec<f64>>> {
        let std = model.standardizer();
        let prev: Vec<Vec<f64>> = previous.iter().map(|x| std.normalize_input(x)).collect();
        let cfg_iter = rec_evolver.with_seed(rng::derive_seed(cfg.seed, &[0x5EC, iter as u64]));
        Ok(recommend(model, &cfg_iter, cfg.recommendation_size, &prev)?
            .iter()
            .map(|x| std.denormalize_input(x))
            .collect())
    };

    let start = Instant::now();
    let mut model = fit(&inputs, &observations, 0)?;
    let mut rec = recommend_raw(&model, &[], 0)?;
    let row = IterationRow {
        iter: 0,
        inputs: inputs.clone(),
        observations: observations.clone(),
        phase_ms: [elapsed_ms(start, opts.timing), 0.0, 0.0],
        log_hv_disc: score(&rec),
    };
    if let Some(s) = sink.as_mut() {
        s.write(&row)?;
    }
    let mut rows = vec![row];

    for iter in 1..=cfg.n_iter {
        let t_init = Instant::now();
        if iter > 1 {
            model = fit(&inputs, &observations, iter)?;
        }
        let init_ms = elapsed_ms(t_init, opts.timing);
        let iter_seed = rng::derive_seed(cfg.seed, &[0xB0, iter as u64]);
        let pool_size = cfg.pool_for(dim);

        let t_sample = Instant::now();
        let ctx = match method {
            Method::Entropy(kind) => {
                let samples = (0..cfg.num_samples)
                    .map(|s| {
                        paths::sample_pareto(
                            &model,
                            cfg.pareto_points,
                            cfg.features,
                            &cfg.evolver,
                            None,
                            rng::derive_seed(iter_seed, &[1, s as u64]),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(AcquisitionContext::new(model.clone(), samples, kind, cfg.mc_samples, rng::derive_seed(iter_seed, &[2]))?)
            }
            _ => None,
        };
        let sample_ms = elapsed_ms(t_sample, opts.timing);

        let t_opt = Instant::now();
        let chosen: Vec<Vec<f64>> = match (&ctx, method) {
            (Some(ctx), _) => optimize_acquisition(ctx, pool_size, cfg.q, rng::derive_seed(iter_seed, &[3]))?,
            (None, Method::Random) => {
                let mut r = rng::stream(iter_seed, &[4]);
                (0..cfg.q).map(|_| (0..dim).map(|_| r.gen::<f64>()).collect()).collect()
            }
            (None, Method::Tsemo) | (None, Method::Parego) => {
                let pool = ScrambledHalton::new(dim, rng::derive_seed(iter_seed, &[3])).points(pool_size.max(cfg.q));
                let mut picked = Vec::with_capacity(cfg.q);
                for b in 0..cfg.q {
                    let seed = rng::derive_seed(iter_seed, &[5, b as u64]);
                    let i = if method == Method::Tsemo {
                        let reference = paths::nadir_reference(model.outputs()).expect("data is non-empty");
                        acquisition::baseline_tsemo(&model, &pool, cfg.features, seed, &reference)?
                    } else {
                        acquisition::baseline_parego(&model, &pool, cfg.mc_samples, seed)?
                    };
                    picked.push(pool[i].clone());
                }
                picked
            }
            (None, Method::Entropy(_)) => unreachable!("entropy methods always build a context"),
        };
        let opt_ms = elapsed_ms(t_opt, opts.timing);

        let new_inputs: Vec<Vec<f64>> = chosen.iter().map(|x| to_raw(x)).collect();
        let new_obs: Vec<Vec<f64>> = new_inputs.iter().map(|x| problem.observe(x, &mut noise_rng)).collect();
        inputs.extend_from_slice(&new_inputs);
        observations.extend_from_slice(&new_obs);

        let updated = refresh(&model, &inputs, &observations)?;
        rec = recommend_raw(&updated, &rec, iter)?;
        let row = IterationRow {
            iter,
            inputs: new_inputs,
            observations: new_obs,
            phase_ms: [init_ms, sample_ms, opt_ms],
            log_hv_disc: score(&rec),
        };
        if let Some(s) = sink.as_mut() {
            s.write(&row)?;
        }
        log::info!("iteration {iter}: log HV discrepancy {:.4}", row.log_hv_disc);
        rows.push(row);
    }

    if let Some(dir) = out_dir {
        let mut w = csv::Writer::from_path(dir.join("recommendation.csv"))?;
        let mut header: Vec<String> = (1..=dim).map(|d| format!("x_{d}")).collect();
        header.extend((1..=m).map(|k| format!("f{k}")));
        w.write_record(&header)?;
        for x in &rec {
            let f = problem.evaluate(x);
            w.write_record(x.iter().chain(&f).map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    Ok(RunRecord { dim, num_objectives: m, rows, recommendation: rec })
}
