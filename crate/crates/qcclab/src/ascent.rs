//! Multistart projected gradient ascent on the complex unit sphere.
//!
//! Used wherever a supremum over pure states has to be estimated from
//! below: the reported value is the best found, never a claimed maximum.
//! Each restart draws its start from an independent RNG stream of
//! `(seed, restart_index)`, so results are deterministic for a fixed
//! option set regardless of evaluation order.

use crate::haar;
use crate::linalg::{cr, CVec};

#[derive(Debug, Clone)]
pub(crate) struct AscentOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop a restart when the objective improves by less than this.
    pub f_tol: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            restarts: 32,
            max_iters: 300,
            f_tol: 1e-12,
            seed: 0,
        }
    }
}

pub(crate) struct AscentOutcome {
    pub value: f64,
    pub argmax: CVec,
}

/// Maximize `f` over unit vectors of `C^dim`.
///
/// `grad` returns the Euclidean ascent direction (the Wirtinger gradient
/// with respect to the conjugate variable); it is projected onto the
/// tangent space at the iterate and followed with a backtracking line
/// search, so `grad` only needs to be an ascent direction, not exact.
/// `extra_starts` are tried in addition to the random restarts.
pub(crate) fn maximize_over_sphere<F, G>(
    dim: usize,
    f: F,
    grad: G,
    extra_starts: &[CVec],
    opts: &AscentOptions,
) -> AscentOutcome
where
    F: Fn(&CVec) -> f64,
    G: Fn(&CVec) -> CVec,
{
    let mut best_value = f64::NEG_INFINITY;
    let mut best_arg = CVec::zeros(dim);

    let mut run = |start: CVec| {
        let mut psi = normalize(start);
        let mut fval = f(&psi);
        let mut step = 0.5;
        for _ in 0..opts.max_iters {
            let g = grad(&psi);
            let overlap = psi.dotc(&g);
            let tangent = &g - &psi * overlap;
            let tnorm = tangent.norm();
            if tnorm < 1e-14 {
                break;
            }
            // backtracking line search along the projected direction
            let mut eta = step;
            let mut accepted = false;
            while eta > 1e-14 {
                let cand = normalize(&psi + &tangent * cr(eta));
                let fcand = f(&cand);
                if fcand > fval + 1e-4 * eta * tnorm * tnorm {
                    let gain = fcand - fval;
                    psi = cand;
                    fval = fcand;
                    step = (eta * 1.5).min(4.0);
                    accepted = true;
                    if gain < opts.f_tol {
                        // converged to line-search resolution
                        eta = 0.0;
                    }
                    break;
                }
                eta *= 0.5;
            }
            if !accepted || eta == 0.0 {
                break;
            }
        }
        if fval > best_value {
            best_value = fval;
            best_arg = psi;
        }
    };

    for start in extra_starts {
        run(start.clone());
    }
    for r in 0..opts.restarts.max(1) {
        let mut rng = haar::stream(opts.seed, r as u64);
        run(haar::state(dim, &mut rng));
    }

    AscentOutcome {
        value: best_value,
        argmax: best_arg,
    }
}

fn normalize(v: CVec) -> CVec {
    let n = v.norm();
    if n > 0.0 {
        v / cr(n)
    } else {
        v
    }
}
