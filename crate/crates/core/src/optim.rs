//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! Only used for marginal-likelihood fitting, where the objective is
//! smooth and the parameter count is D + 2.

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub history: usize,
    pub grad_tol: f64,
    pub rel_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { max_iters: 100, history: 8, grad_tol: 1e-6, rel_tol: 1e-10 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the value and gradient. The returned value
/// never exceeds `f(x0)`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return (x, fx);
    }
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();

    for _ in 0..opts.max_iters {
        if dot(&g, &g).sqrt() < opts.grad_tol {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alphas[i] = rho * dot(&s_hist[i], &q);
            for j in 0..n {
                q[j] -= alphas[i] * y_hist[i][j];
            }
        }
        if k > 0 {
            let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / dot(&g, &g).sqrt().max(1.0);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &q);
            for j in 0..n {
                q[j] += s_hist[i][j] * (alphas[i] - beta);
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let improvement = fx - fn_;
        x = xn;
        g = gn;
        let prev = fx;
        fx = fn_;
        if dot(&s, &y) > 1e-12 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opts.history {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        if improvement <= opts.rel_tol * prev.abs().max(1.0) {
            break;
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (f, g)
        };
        let opts = LbfgsOptions { max_iters: 500, rel_tol: 0.0, grad_tol: 1e-10, ..Default::default() };
        let (x, fx) = minimize(rosen, &[-1.2, 1.0], &opts);
        assert!(fx < 1e-10, "f = {fx}");
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| ((x[0] - 3.0).powi(4), vec![4.0 * (x[0] - 3.0).powi(3)]);
        let (_, fx) = minimize(f, &[0.0], &LbfgsOptions::default());
        assert!(fx <= 81.0);
    }
}
