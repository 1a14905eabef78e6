//! Browser bindings for three interactive views: the box decomposition of a
//! clicked front, entropy-search acquisition curves of a 1-D GP, and the
//! generalized hypervolume under different weight distributions.
//!
//! Flat `f64` arrays cross the boundary; the plain functions are usable (and
//! tested) natively, the `#[wasm_bindgen]` wrappers only convert errors.

use wasm_bindgen::prelude::*;

use jes::acquisition::{AcquisitionContext, EstimateKind};
use jes::evolver::EvolverConfig;
use jes::gp::{Dataset, GpPosterior, KernelParams};
use jes::metrics::{self, WeightDistribution};
use jes::{pareto, paths, rng, Error, Result};

fn pairs(flat: &[f64]) -> Result<Vec<Vec<f64>>> {
    if flat.len() % 2 != 0 {
        return Err(Error::InvalidArgument("expected an even number of coordinates".into()));
    }
    Ok(flat.chunks(2).map(|c| c.to_vec()).collect())
}

/// Boxes of the region dominated by a 2-D front as `[l1, l2, u1, u2]*`, with
/// unbounded lower sides clipped to `reference`.
pub fn decompose(points: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    let pts = pairs(points)?;
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let dec = pareto::pareto_filter(&pts).decompose()?;
    let mut out = Vec::with_capacity(4 * dec.len());
    for b in dec.boxes() {
        out.extend([b.lower[0].max(reference[0]), b.lower[1].max(reference[1]), b.upper[0], b.upper[1]]);
    }
    Ok(out)
}

pub fn hypervolume(points: &[f64], reference: &[f64]) -> Result<f64> {
    Ok(pareto::hypervolume(&pairs(points)?, reference))
}

/// Posterior and acquisition curves of a single-objective GP on `[0, 1]`.
/// Returns `[mean; grid] ++ [sd; grid] ++ [jes; grid] ++ [mes; grid]`.
pub fn acquisition_curves(xs: &[f64], ys: &[f64], lengthscale: f64, noise: f64, grid: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let mut params = KernelParams::isotropic(1, lengthscale, 1.0, noise);
    params.constant_mean = if ys.is_empty() { 0.0 } else { ys.iter().sum::<f64>() / ys.len() as f64 };
    let data = Dataset::new(xs.iter().map(|&x| vec![x]).collect(), ys.iter().map(|&y| vec![y]).collect())?;
    let model = GpPosterior::from_model_space(vec![params], data)?;
    let evolver = EvolverConfig { population: 30, generations: 60, ..EvolverConfig::default() };
    let draws = (0..samples.max(1))
        .map(|s| paths::sample_pareto(&model, 1, 300, &evolver, Some(&[-1e6]), rng::derive_seed(seed, &[s as u64])))
        .collect::<Result<Vec<_>>>()?;
    let grid_x: Vec<Vec<f64>> = (0..grid).map(|i| vec![i as f64 / (grid.max(2) - 1) as f64]).collect();
    let mut out = Vec::with_capacity(4 * grid);
    let moments: Vec<(Vec<f64>, Vec<f64>)> = grid_x.iter().map(|x| model.mean_var(x)).collect();
    out.extend(moments.iter().map(|(m, _)| m[0]));
    out.extend(moments.iter().map(|(_, v)| v[0].sqrt()));
    for name in ["JES-LB2", "MES-LB2"] {
        let kind: EstimateKind = name.parse()?;
        let ctx = AcquisitionContext::new(model.clone(), draws.clone(), kind, 128, seed)?;
        out.extend(grid_x.iter().map(|x| ctx.value(x)));
    }
    Ok(out)
}

/// `[ghv, standard error, exact hv]` of a 2-D front.
pub fn generalized_hypervolume(points: &[f64], reference: &[f64], dist: &str, n: usize, seed: u64) -> Result<Vec<f64>> {
    let pts = pairs(points)?;
    let dist: WeightDistribution = dist.parse()?;
    let est = metrics::generalized_hypervolume(&pts, reference, &dist, n, seed)?;
    Ok(vec![est.value, est.std_error, pareto::hypervolume(&pts, reference)])
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = decompose)]
pub fn decompose_js(points: &[f64], reference: &[f64]) -> std::result::Result<Vec<f64>, JsError> {
    decompose(points, reference).map_err(js)
}

#[wasm_bindgen(js_name = hypervolume)]
pub fn hypervolume_js(points: &[f64], reference: &[f64]) -> std::result::Result<f64, JsError> {
    hypervolume(points, reference).map_err(js)
}

#[wasm_bindgen(js_name = acquisitionCurves)]
pub fn acquisition_curves_js(
    xs: &[f64],
    ys: &[f64],
    lengthscale: f64,
    noise: f64,
    grid: usize,
    samples: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    acquisition_curves(xs, ys, lengthscale, noise, grid, samples, u64::from(seed)).map_err(js)
}

#[wasm_bindgen(js_name = generalizedHypervolume)]
pub fn generalized_hypervolume_js(points: &[f64], reference: &[f64], dist: &str, n: usize, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    generalized_hypervolume(points, reference, dist, n, u64::from(seed)).map_err(js)
}
