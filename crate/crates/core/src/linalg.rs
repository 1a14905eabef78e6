//! Dense SPD helpers shared by the GP and entropy code.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Jitter schedule tried after a plain factorization fails.
pub const JITTER_SCHEDULE: [f64; 5] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Cholesky factor of `a`, adding diagonal jitter from [`JITTER_SCHEDULE`]
/// when needed. Returns the factor together with the jitter that was used.
pub fn jittered_cholesky(a: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = a.clone().cholesky() {
        return Ok((c, 0.0));
    }
    for &jitter in JITTER_SCHEDULE.iter() {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(c) = m.cholesky() {
            return Ok((c, jitter));
        }
    }
    Err(Error::NotPositiveDefinite {
        jitter: JITTER_SCHEDULE[JITTER_SCHEDULE.len() - 1],
    })
}

pub fn cholesky_log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// log det of a symmetric positive definite matrix, symmetrized and jittered.
pub fn log_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let (c, _) = jittered_cholesky(&sym)?;
    Ok(cholesky_log_det(&c))
}

/// Solves L x = b in place for lower-triangular `l` given as a dense matrix.
pub fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}
