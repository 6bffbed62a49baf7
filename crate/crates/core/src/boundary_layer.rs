//! Surface boundary layer of a half-infinite chain.
//!
//! A profile is given by its bond strains `b^1, ..., b^N`; every bond beyond
//! `N` sits at the ground strain `gamma`. Two functionals are minimized over
//! such profiles: the split energy `B`, which distributes the nearest
//! neighbour interaction over the longer bonds with the weights `c_j`, and
//! the plain energy `B~`, which does not. Both lead to the same fracture
//! toughness `beta`. For `K = 2` the minimizer is further checked against
//! the equilibrium equations and a geometric decay certificate.

use serde::Serialize;

use crate::effective_density::EffectiveModel;
use crate::error::{Error, Result};
use crate::optim::{minimize, FnObjective, LbfgsConfig};

/// Which layer functional to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LayerKind {
    /// `B`, with the nearest neighbour energy split by the `c_j`.
    Split,
    /// `B~`, the excess Cauchy-Born energy of the half chain.
    Plain,
}

/// Truncated boundary-layer minimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerProfile {
    pub kind: LayerKind,
    /// Truncation index: `r^i = 0` for `i > n`.
    pub n: usize,
    /// Offsets `r^i = b^i - gamma`, `i = 1..=n`.
    pub r: Vec<f64>,
    pub value: f64,
    /// Gradient of the truncated functional at `r`.
    pub residuals: Vec<f64>,
}

impl LayerProfile {
    pub fn bonds(&self, gamma: f64) -> Vec<f64> {
        self.r.iter().map(|r| gamma + r).collect()
    }
}

/// Result of the doubling schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSolution {
    pub value: f64,
    pub profile: LayerProfile,
    /// `(N, B_N)` for each truncation visited.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
}

fn bond(bonds: &[f64], gamma: f64, s: usize) -> f64 {
    // bonds are 1-based in the formulas
    if s <= bonds.len() {
        bonds[s - 1]
    } else {
        gamma
    }
}

/// Split layer energy `B` of the bonds `b^1..b^N` and its gradient.
///
/// Evaluates the surface prefix `sum_j c_j sum_{s<=j} (j-s)/j J_1(b^s)` plus
/// the windows `J_j(mean b) + c_j/j sum J_1(b) - psi_j(gamma)` starting at
/// every `i < N`. Windows lying wholly in the tail vanish and are skipped.
pub fn layer_energy(model: &EffectiveModel, bonds: &[f64], grad: &mut [f64]) -> f64 {
    let fam = &model.family;
    let range = model.range();
    let n = bonds.len();
    let gamma = model.gamma;
    grad.iter_mut().for_each(|g| *g = 0.0);
    if bonds.iter().any(|&b| !(b > 0.0)) {
        return f64::INFINITY;
    }

    let mut energy = 0.0;
    for j in 2..=range {
        let cj = model.c(j);
        let jf = j as f64;
        for s in 1..=j {
            let w = cj * (j - s) as f64 / jf;
            let b = bond(bonds, gamma, s);
            energy += w * fam.eval(1, b);
            if s <= n {
                grad[s - 1] += w * fam.d1(1, b);
            }
        }
        for i in 0..n {
            let mut mean = 0.0;
            let mut nn = 0.0;
            for s in i + 1..=i + j {
                let b = bond(bonds, gamma, s);
                mean += b;
                nn += fam.eval(1, b);
            }
            mean /= jf;
            energy += fam.eval(j, mean) + cj / jf * nn - model.psi_at_gamma[j - 2];
            let dj = fam.d1(j, mean) / jf;
            for s in i + 1..=(i + j).min(n) {
                grad[s - 1] += dj + cj / jf * fam.d1(1, bonds[s - 1]);
            }
        }
    }
    energy
}

/// Plain layer energy `B~`: `sum_{i<N} (sum_j J_j(mean b^{i+1..i+j}) - J_CB(gamma))`.
pub fn layer_energy_plain(model: &EffectiveModel, bonds: &[f64], grad: &mut [f64]) -> f64 {
    let fam = &model.family;
    let range = model.range();
    let n = bonds.len();
    let gamma = model.gamma;
    grad.iter_mut().for_each(|g| *g = 0.0);
    if bonds.iter().any(|&b| !(b > 0.0)) {
        return f64::INFINITY;
    }

    let mut energy = 0.0;
    for i in 0..n {
        let mut cell = 0.0;
        for j in 1..=range {
            let jf = j as f64;
            let mean = (i + 1..=i + j).map(|s| bond(bonds, gamma, s)).sum::<f64>() / jf;
            cell += fam.eval(j, mean);
            let dj = fam.d1(j, mean) / jf;
            for s in i + 1..=(i + j).min(n) {
                grad[s - 1] += dj;
            }
        }
        energy += cell - model.jcb_at_gamma;
    }
    energy
}

fn energy_of(kind: LayerKind) -> fn(&EffectiveModel, &[f64], &mut [f64]) -> f64 {
    match kind {
        LayerKind::Split => layer_energy,
        LayerKind::Plain => layer_energy_plain,
    }
}

/// Energy density `F(a, b)` of one interior pair of offsets for `K = 2`.
pub fn pair_density(model: &EffectiveModel, a: f64, b: f64) -> f64 {
    let fam = &model.family;
    let g = model.gamma;
    fam.eval(2, g + 0.5 * (a + b)) + 0.5 * fam.eval(1, g + a) + 0.5 * fam.eval(1, g + b) - model.jcb_at_gamma
}

/// `B_gamma(r) = J_1(gamma + r^1)/2 + sum_i F(r^i, r^{i+1})` for `K = 2`,
/// with `r^{N+1} = 0`.
pub fn layer_energy_pairs(model: &EffectiveModel, r: &[f64]) -> f64 {
    let Some(&first) = r.first() else {
        return 0.5 * model.family.eval(1, model.gamma);
    };
    let mut e = 0.5 * model.family.eval(1, model.gamma + first);
    for i in 0..r.len() {
        let next = r.get(i + 1).copied().unwrap_or(0.0);
        e += pair_density(model, r[i], next);
    }
    e
}

fn layer_config(model: &EffectiveModel) -> LbfgsConfig {
    let scale = model.family.energy_scale() / model.family.delta1();
    LbfgsConfig { max_iter: 50_000, ..LbfgsConfig::with_gtol(1e-11 * scale) }
}

/// Minimizes the chosen functional at a fixed truncation `n` from each of
/// the given starts (bond strains, padded with `gamma` up to `n`).
pub fn solve_layer_at(model: &EffectiveModel, kind: LayerKind, n: usize, starts: &[Vec<f64>]) -> Result<LayerProfile> {
    let range = model.range();
    if range < 2 {
        return Err(Error::Unsupported("boundary layer needs K >= 2".into()));
    }
    if n < range {
        return Err(Error::Input(format!("truncation {n} is below the range {range}")));
    }
    let gamma = model.gamma;
    let energy = energy_of(kind);
    let obj = FnObjective::new(n, |x: &[f64], g: &mut [f64]| energy(model, x, g));
    let cfg = layer_config(model);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut x0 = vec![gamma; n];
        for (x, s) in x0.iter_mut().zip(start) {
            *x = *s;
        }
        let report = minimize(&obj, &x0, &cfg)?;
        if best.as_ref().is_none_or(|b| report.f_star < b.0) {
            best = Some((report.f_star, report.x_star));
        }
    }
    let (value, bonds) = best.ok_or_else(|| Error::Input("no starting profile given".into()))?;
    let mut residuals = vec![0.0; n];
    energy(model, &bonds, &mut residuals);
    Ok(LayerProfile { kind, n, r: bonds.iter().map(|b| b - gamma).collect(), value, residuals })
}

/// Runs the truncation schedule `N = 2K, 4K, ...` up to `n_max`, stopping
/// once two successive values differ by less than `tol`.
///
/// Each level starts from the uniform profile, from a profile with the
/// surface bond opened to `delta_1`, and from the previous level's minimizer.
pub fn solve_layer(model: &EffectiveModel, kind: LayerKind, n_max: usize, tol: f64) -> Result<LayerSolution> {
    let range = model.range();
    if range < 2 {
        return Err(Error::Unsupported("boundary layer needs K >= 2".into()));
    }
    if n_max < 4 * range {
        return Err(Error::Input(format!("n_max = {n_max} must be at least 4K = {}", 4 * range)));
    }
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
    }
    let gamma = model.gamma;
    let mut history = Vec::new();
    let mut previous: Option<LayerProfile> = None;
    let mut n = 2 * range;
    while n <= n_max {
        let mut starts = vec![vec![gamma], vec![model.family.delta1()]];
        if let Some(p) = &previous {
            starts.push(p.bonds(gamma));
        }
        let profile = solve_layer_at(model, kind, n, &starts)?;
        history.push((n, profile.value));
        let done = previous.as_ref().is_some_and(|p| (p.value - profile.value).abs() < tol);
        previous = Some(profile);
        if done {
            break;
        }
        n *= 2;
    }
    let profile = previous.expect("schedule visits at least one truncation");
    let converged = history.len() >= 2 && {
        let k = history.len();
        (history[k - 1].1 - history[k - 2].1).abs() < tol
    };
    Ok(LayerSolution { value: profile.value, profile, history, converged })
}

/// `B(gamma)` by the truncation schedule.
pub fn solve_b(model: &EffectiveModel, n_max: usize, tol: f64) -> Result<LayerSolution> {
    solve_layer(model, LayerKind::Split, n_max, tol)
}

/// `B~(gamma)` by the truncation schedule.
pub fn solve_b_tilde(model: &EffectiveModel, n_max: usize, tol: f64) -> Result<LayerSolution> {
    solve_layer(model, LayerKind::Plain, n_max, tol)
}

/// Fracture toughness from both layer functionals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    /// `2 B - sum_{j>=2} j psi_j(gamma)`.
    pub beta: f64,
    /// `2 B~ - sum_{j>=1} j J_j(gamma)`.
    pub beta_plain: f64,
    pub discrepancy: f64,
    pub b: f64,
    pub b_tilde: f64,
    /// Truncation at which both values were taken.
    pub n: usize,
    pub converged: bool,
    pub split: LayerSolution,
    pub plain: LayerProfile,
}

/// Largest route disagreement accepted by [`beta`].
pub const BETA_ROUTE_TOL: f64 = 1e-6;

/// `beta` via the split functional, cross-checked by the plain functional
/// minimized at the same truncation.
pub fn beta(model: &EffectiveModel, n_max: usize, tol: f64) -> Result<BetaReport> {
    let split = solve_b(model, n_max, tol)?;
    let n = split.profile.n;
    let gamma = model.gamma;
    let starts = [vec![gamma], vec![model.family.delta1()]];
    let plain = solve_layer_at(model, LayerKind::Plain, n, &starts)?;

    let fam = &model.family;
    let psi_sum: f64 = (2..=model.range()).map(|j| j as f64 * model.psi_at_gamma[j - 2]).sum();
    let bulk_sum: f64 = (1..=model.range()).map(|j| j as f64 * fam.eval(j, gamma)).sum();
    let beta = 2.0 * split.value - psi_sum;
    let beta_plain = 2.0 * plain.value - bulk_sum;
    let discrepancy = (beta - beta_plain).abs();
    if discrepancy > BETA_ROUTE_TOL * fam.energy_scale() {
        return Err(Error::Consistency {
            what: "beta".into(),
            first: beta,
            second: beta_plain,
            diff: discrepancy,
            tol: BETA_ROUTE_TOL * fam.energy_scale(),
        });
    }
    Ok(BetaReport {
        beta,
        beta_plain,
        discrepancy,
        b: split.value,
        b_tilde: plain.value,
        n,
        converged: split.converged,
        split,
        plain,
    })
}

/// Residuals of the `K = 2` equilibrium equations at the offsets `r`
/// (`r^{N+1} = 0`).
pub fn equilibrium_residuals(model: &EffectiveModel, r: &[f64]) -> Result<Vec<f64>> {
    if model.range() != 2 {
        return Err(Error::Unsupported(format!(
            "equilibrium equations are stated for K = 2, got K = {}",
            model.range()
        )));
    }
    let fam = &model.family;
    let g = model.gamma;
    let at = |i: usize| if i >= 1 && i <= r.len() { r[i - 1] } else { 0.0 };
    let half_d2 = |a: f64, b: f64| 0.5 * fam.d1(2, g + 0.5 * (a + b));
    Ok((1..=r.len())
        .map(|i| {
            let own = fam.d1(1, g + at(i)) + half_d2(at(i), at(i + 1));
            if i == 1 {
                own
            } else {
                own + half_d2(at(i - 1), at(i))
            }
        })
        .collect())
}

/// Decay certificate for a `K = 2` layer profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// `C / (alpha_lb + C)`.
    pub lambda: f64,
    /// `max -J_2''` over the visited window `[gamma, gamma + r^1]`.
    pub c_const: f64,
    /// `min J_CB''` over the same window.
    pub alpha_lb: f64,
    /// Indices `i` (1-based) with `r^i > lambda^{i-1} r^1`.
    pub violations: Vec<usize>,
    /// First index breaking `r^i >= r^{i+1} >= 0`, if any.
    pub monotone_witness: Option<usize>,
    /// First index with `gamma + r^i` outside `(z_c^2, z_c^3)`, if any.
    pub window_witness: Option<usize>,
}

impl DecayReport {
    pub fn certified(&self) -> bool {
        self.violations.is_empty() && self.monotone_witness.is_none() && self.window_witness.is_none()
    }
}

/// Slack on the monotonicity and geometric-decay comparisons, absorbing the
/// round-off of a converged profile.
pub const DECAY_SLACK: f64 = 1e-12;

/// Checks monotonicity, the strain window and the geometric bound
/// `r^i <= lambda^{i-1} r^1` with constants taken on `[gamma, gamma + r^1]`.
pub fn certify_decay(model: &EffectiveModel, r: &[f64]) -> Result<DecayReport> {
    if model.range() != 2 {
        return Err(Error::Unsupported(format!("decay certificate is stated for K = 2, got K = {}", model.range())));
    }
    let fam = &model.family;
    let g = model.gamma;
    let lm = fam.landmarks();
    let zc2 = lm.zc2.expect("K = 2 has a second inflection point");

    let r1 = r.first().copied().unwrap_or(0.0).max(0.0);
    let samples = 10_000;
    let (mut c_const, mut alpha_lb) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..=samples {
        let z = g + r1 * k as f64 / samples as f64;
        c_const = c_const.max(-fam.d2(2, z));
        alpha_lb = alpha_lb.min(fam.cauchy_born_d2(z));
    }
    let lambda = c_const / (alpha_lb + c_const);

    let mut violations = Vec::new();
    let mut bound = r1;
    for (i, &ri) in r.iter().enumerate() {
        if ri > bound + DECAY_SLACK {
            violations.push(i + 1);
        }
        bound *= lambda;
    }
    let monotone_witness = (0..r.len()).find(|&i| {
        let next = r.get(i + 1).copied().unwrap_or(0.0);
        r[i] - next < -DECAY_SLACK || r[i] < -DECAY_SLACK
    });
    let window_witness = r.iter().position(|&ri| !(g + ri > zc2 && g + ri < lm.zc3));
    Ok(DecayReport {
        lambda,
        c_const,
        alpha_lb,
        violations,
        monotone_witness: monotone_witness.map(|i| i + 1),
        window_witness: window_witness.map(|i| i + 1),
    })
}
