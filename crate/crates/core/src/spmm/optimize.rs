//! One-dimensional maximization of a variance ratio.

use crate::error::{Error, Result};

pub(crate) const LOG_LAMBDA_MIN: f64 = -8.0;
pub(crate) const LOG_LAMBDA_MAX: f64 = 8.0;
const GRID_STEP: f64 = 0.1;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Optimum {
    pub x: f64,
    pub value: f64,
}

/// Brent's bounded minimizer (golden section with parabolic steps) on
/// `[a, b]`.
pub(crate) fn brent_min(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<Optimum> {
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let (mut a, mut b) = (a, b);
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..MAX_ITER {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(Optimum { x, value: fx });
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= m { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::NonConvergence {
        what: "Brent line search",
        iterations: MAX_ITER,
        best_objective: -fx,
        best_params: vec![x],
    })
}

/// Maximize `f(lambda)` over `lambda in {0} U [e^-8, e^8]`.
///
/// A grid on `ln(lambda)` with step 0.1 brackets the best point, which Brent's
/// method then refines: on the log scale in the interior, on the linear scale
/// between 0 and the first grid point.
pub(crate) fn maximize_ratio(f: impl Fn(f64) -> Result<f64>) -> Result<Optimum> {
    let steps = ((LOG_LAMBDA_MAX - LOG_LAMBDA_MIN) / GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| LOG_LAMBDA_MIN + i as f64 * GRID_STEP)
        .collect();
    let at_zero = f(0.0)?;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let v = f(t.exp())?;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut candidates = vec![
        Optimum { x: 0.0, value: at_zero },
        Optimum {
            x: grid[best_i].exp(),
            value: best,
        },
    ];
    if best_i == 0 {
        let hi = grid[1].exp();
        let o = brent_min(|l| f(l).map(|v| -v), 0.0, hi, 1e-12)?;
        candidates.push(Optimum { x: o.x, value: -o.value });
    } else {
        let lo = grid[best_i - 1];
        let hi = grid[(best_i + 1).min(steps)];
        let o = brent_min(|t| f(t.exp()).map(|v| -v), lo, hi, 1e-12)?;
        candidates.push(Optimum {
            x: o.x.exp(),
            value: -o.value,
        });
    }
    let mut out = candidates[0];
    for c in candidates {
        if c.value > out.value {
            out = c;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_vertex() {
        let o = brent_min(|x| Ok((x - 1.3).powi(2)), -5.0, 5.0, 1e-12).unwrap();
        assert!((o.x - 1.3).abs() < 1e-8);
    }

    #[test]
    fn ratio_interior_and_boundary() {
        let o = maximize_ratio(|l| Ok(-(l - 2.5).powi(2))).unwrap();
        assert!((o.x - 2.5).abs() < 1e-8);
        let o = maximize_ratio(|l| Ok(-l)).unwrap();
        assert_eq!(o.x, 0.0);
        let o = maximize_ratio(|l| Ok(-(l - 1e-4).powi(2))).unwrap();
        assert!((o.x - 1e-4).abs() < 1e-9);
    }
}
