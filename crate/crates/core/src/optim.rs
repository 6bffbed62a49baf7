//! Unconstrained minimization for extended-real objectives.
//!
//! [`minimize`] is a limited-memory BFGS descent with a backtracking line
//! search. A trial point whose energy is not finite is treated like a failed
//! Armijo test and the step is halved, so the solver never leaves the domain
//! of the Lennard-Jones energies. [`golden_section`] is the scalar bracketed
//! search used for one-dimensional oracles.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};

/// A differentiable objective on `R^dim` with values in `(-inf, +inf]`.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns the energy at `x` and writes the gradient into `grad`. The
    /// gradient is only meaningful where the energy is finite.
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Adapts a closure `(x, grad) -> energy` into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.f)(x, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    /// Stop once the max-norm of the gradient falls below this value.
    pub gtol: f64,
    pub max_iter: usize,
    /// Number of stored secant pairs.
    pub memory: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Step reduction factor on rejection.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Length (max-norm) of the very first steepest-descent step.
    pub initial_step: f64,
    /// Absolute round-off level of the objective. Once the predicted decrease
    /// drops below it, a step is accepted on slope information alone as long
    /// as the energy does not rise above this level.
    pub noise_abs: f64,
    /// Relative round-off level, scaled by `|f|`.
    pub noise_rel: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            gtol: 1e-8,
            max_iter: 10_000,
            memory: 10,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            initial_step: 1e-2,
            noise_abs: 0.0,
            noise_rel: 1e-14,
        }
    }
}

impl LbfgsConfig {
    pub fn with_gtol(gtol: f64) -> Self {
        Self { gtol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// Max-norm of the gradient at `x_star`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after each accepted iteration, starting with the initial value.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

struct SecantPair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: writes `-H g` into `dir`.
fn lbfgs_direction(history: &VecDeque<SecantPair>, grad: &[f64], dir: &mut [f64]) {
    dir.copy_from_slice(grad);
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, dir);
        for (d, y) in dir.iter_mut().zip(&pair.y) {
            *d -= a * y;
        }
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let scale = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        dir.iter_mut().for_each(|d| *d *= scale);
    }
    for (pair, a) in history.iter().zip(alphas.iter().rev()) {
        let b = pair.rho * dot(&pair.y, dir);
        for (d, s) in dir.iter_mut().zip(&pair.s) {
            *d += (a - b) * s;
        }
    }
    dir.iter_mut().for_each(|d| *d = -*d);
}

/// Minimizes `obj` from `x0` with limited-memory BFGS.
///
/// Returns an input error when `x0` has non-finite energy or the
/// configuration is invalid. Hitting `max_iter` is not an error; the report
/// has `converged == false` and the caller decides.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], cfg: &LbfgsConfig) -> Result<SolveReport> {
    let n = obj.dim();
    if x0.len() != n {
        return Err(Error::Input(format!("start has length {}, objective dimension is {n}", x0.len())));
    }
    if !(cfg.gtol > 0.0) {
        return Err(Error::Input(format!("gtol must be positive, got {}", cfg.gtol)));
    }
    if cfg.memory == 0 || !(cfg.backtrack > 0.0 && cfg.backtrack < 1.0) {
        return Err(Error::Input("invalid line-search configuration".into()));
    }

    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&x, &mut g);
    if !f.is_finite() {
        return Err(Error::Input("objective is not finite at the starting point".into()));
    }

    let mut history = VecDeque::with_capacity(cfg.memory);
    let mut trace = vec![f];
    let mut dir = vec![0.0; n];
    let mut x_trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        if max_norm(&g) <= cfg.gtol {
            break;
        }

        let mut steepest = history.is_empty();
        let mut accepted = false;
        let mut f_new = f;
        // At most two passes: the quasi-Newton direction, then plain descent
        // with a cleared memory.
        for _ in 0..2 {
            let mut step;
            if steepest {
                dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
                step = (cfg.initial_step / max_norm(&g)).min(1.0);
            } else {
                lbfgs_direction(&history, &g, &mut dir);
                step = 1.0;
            }
            let mut slope = dot(&g, &dir);
            if !(slope < 0.0) {
                dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
                slope = dot(&g, &dir);
                step = (cfg.initial_step / max_norm(&g)).min(1.0);
            }

            let noise = cfg.noise_abs + cfg.noise_rel * f.abs();
            for _ in 0..cfg.max_backtracks {
                for ((xt, xi), d) in x_trial.iter_mut().zip(&x).zip(&dir) {
                    *xt = xi + step * d;
                }
                let f_trial = obj.eval(&x_trial, &mut g_trial);
                if f_trial.is_finite() {
                    let armijo_ok = f_trial <= f + cfg.armijo * step * slope;
                    // Below the round-off floor the Armijo test is blind; fall
                    // back on the slope at the trial point.
                    let approx_ok = (step * slope).abs() <= noise
                        && f_trial <= f + noise
                        && dot(&g_trial, &dir) <= 0.8 * slope.abs();
                    if armijo_ok || approx_ok {
                        f_new = f_trial;
                        accepted = true;
                        break;
                    }
                }
                step *= cfg.backtrack;
            }
            if accepted {
                break;
            }
            if steepest {
                break;
            }
            history.clear();
            steepest = true;
        }
        if !accepted {
            break;
        }

        let s: Vec<f64> = x_trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back(SecantPair { s, y, rho: 1.0 / sy });
        }
        std::mem::swap(&mut x, &mut x_trial);
        std::mem::swap(&mut g, &mut g_trial);
        f = f_new;
        trace.push(f);
        iterations += 1;
    }

    let grad_norm = max_norm(&g);
    Ok(SolveReport { x_star: x, f_star: f, grad_norm, iterations, converged: grad_norm <= cfg.gtol, history: trace })
}

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(x_star, f(x_star))` with `x_star` within `xtol` of the true
/// minimizer when `f` is unimodal on the bracket. Only comparisons of `f`
/// values are used, so `f` may return an extended-precision type when the
/// bracket must shrink below the `f64` resolution of the minimum.
pub fn golden_section<T, F>(f: F, lo: f64, hi: f64, xtol: f64) -> Result<(f64, T)>
where
    T: PartialOrd + Copy,
    F: Fn(f64) -> T,
{
    if !(lo < hi) {
        return Err(Error::Input(format!("empty bracket [{lo}, {hi}]")));
    }
    if !(xtol > 0.0) {
        return Err(Error::Input(format!("xtol must be positive, got {xtol}")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > xtol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        // The interior points stop separating once the bracket reaches the
        // spacing of representable floats around the minimizer.
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let best = [(x, fx), (c, fc), (d, fd)].into_iter().fold((x, fx), |acc, p| if p.1 < acc.1 { p } else { acc });
    Ok(best)
}

/// Scans `[lo, hi]` on `samples` uniform points and refines the best cell by
/// golden section. Suited to objectives that are unimodal only locally.
pub fn scan_then_refine<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize, xtol: f64) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(Error::Input(format!("empty bracket [{lo}, {hi}]")));
    }
    let samples = samples.max(3);
    let h = (hi - lo) / (samples - 1) as f64;
    let mut best_k = 0;
    let mut best_f = f64::INFINITY;
    for k in 0..samples {
        let v = f(lo + k as f64 * h);
        if v < best_f {
            best_f = v;
            best_k = k;
        }
    }
    if !best_f.is_finite() {
        return Err(Error::Bracket("objective is infinite on the whole scan".into()));
    }
    let a = lo + best_k.saturating_sub(1) as f64 * h;
    let b = lo + (best_k + 1).min(samples - 1) as f64 * h;
    let (x, fx) = golden_section(&f, a, b, xtol)?;
    if fx <= best_f {
        Ok((x, fx))
    } else {
        Ok((lo + best_k as f64 * h, best_f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialFamily;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_converges_quickly() {
        let a = [1.0, -2.0, 3.5, 0.25, -7.0];
        let obj = FnObjective::new(5, |x: &[f64], g: &mut [f64]| {
            let mut e = 0.0;
            for i in 0..5 {
                let d = x[i] - a[i];
                g[i] = d;
                e += 0.5 * d * d;
            }
            e
        });
        let rep = minimize(&obj, &[0.0; 5], &LbfgsConfig::with_gtol(1e-10)).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 50, "took {} iterations", rep.iterations);
        for (x, target) in rep.x_star.iter().zip(&a) {
            assert_abs_diff_eq!(x, target, epsilon = 1e-9);
        }
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let obj = FnObjective::new(2, |x: &[f64], g: &mut [f64]| {
            let (a, b) = (1.0, 100.0);
            g[0] = -2.0 * (a - x[0]) - 4.0 * b * x[0] * (x[1] - x[0] * x[0]);
            g[1] = 2.0 * b * (x[1] - x[0] * x[0]);
            (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2)
        });
        let rep = minimize(&obj, &[-1.2, 1.0], &LbfgsConfig::with_gtol(1e-10)).unwrap();
        assert!(rep.converged);
        assert_abs_diff_eq!(rep.x_star[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(rep.x_star[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn lj_shifted_minimizer_with_domain_guard() {
        let fam = PotentialFamily::new(1.0, 1.0, 2).unwrap();
        let gamma = 1.1196108663112256;
        let obj = FnObjective::new(1, |x: &[f64], g: &mut [f64]| {
            let z = gamma + x[0];
            if z <= 0.0 {
                return f64::INFINITY;
            }
            g[0] = fam.d1(1, z);
            fam.eval(1, z)
        });
        let cfg = LbfgsConfig { initial_step: 10.0, ..LbfgsConfig::with_gtol(1e-12) };
        let rep = minimize(&obj, &[0.3], &cfg).unwrap();
        assert!(rep.converged);
        assert_abs_diff_eq!(rep.x_star[0], fam.delta1() - gamma, epsilon = 1e-8);
        assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let obj = FnObjective::new(1, |x: &[f64], _g: &mut [f64]| if x[0] <= 0.0 { f64::INFINITY } else { x[0] });
        assert!(matches!(minimize(&obj, &[-1.0], &LbfgsConfig::default()), Err(Error::Input(_))));
        assert!(matches!(minimize(&obj, &[1.0], &LbfgsConfig::with_gtol(0.0)), Err(Error::Input(_))));
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let obj = FnObjective::new(2, |x: &[f64], g: &mut [f64]| {
            g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            g[1] = 200.0 * (x[1] - x[0] * x[0]);
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        });
        let cfg = LbfgsConfig { max_iter: 3, ..LbfgsConfig::with_gtol(1e-12) };
        let rep = minimize(&obj, &[-1.2, 1.0], &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn golden_section_examples() {
        let (x, _) = golden_section(|x| (x - 2.0) * (x - 2.0), 0.0, 5.0, 1e-10).unwrap();
        assert_abs_diff_eq!(x, 2.0, epsilon = 1e-9);
        let fam = PotentialFamily::new(1.0, 1.0, 2).unwrap();
        let d1 = fam.delta1();
        let (x, _) = golden_section(|z| fam.eval(1, z), d1 / 4.0, 2.0 * d1, 1e-12).unwrap();
        assert_abs_diff_eq!(x, d1, epsilon = 1e-7);
        assert!(golden_section(|x| x, 1.0, 1.0, 1e-3).is_err());
        assert!(golden_section(|x| x, 2.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn scan_then_refine_finds_global_of_double_well() {
        let f = |x: f64| (x * x - 1.0).powi(2) + 0.1 * x;
        let (x, _) = scan_then_refine(f, -2.0, 2.0, 401, 1e-12).unwrap();
        assert!(x < 0.0);
        let h = 1e-6;
        assert!(((f(x + h) - f(x - h)) / (2.0 * h)).abs() < 1e-5);
    }
}
