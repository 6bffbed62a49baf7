//! Homogenization cell problem.
//!
//! `phi_N(z)` is the least energy per site of an `N`-cell whose first and
//! last `K + 1` nodes are pinned to the affine map `u^i = z i`. As `N` grows
//! it converges to the convexified Cauchy-Born density `J_CB**`; the
//! sandwich bounds below make that convergence checkable at every finite `N`.

use rayon::prelude::*;
use serde::Serialize;

use crate::effective_density::EffectiveModel;
use crate::error::{Error, Result};
use crate::optim::{minimize, FnObjective, LbfgsConfig};

/// Largest cell accepted by [`solve_phi`].
pub const MAX_CELL: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StartKind {
    Affine,
    Cracked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSolution {
    pub n: usize,
    pub z: f64,
    /// `phi_N(z)`.
    pub value: f64,
    /// `u^0, ..., u^N`.
    pub profile: Vec<f64>,
    pub start_kind: StartKind,
    pub converged: bool,
}

/// Per-site energy `(1/N) sum_j sum_{i <= N-j} J_j((u^{i+j} - u^i)/j)`.
pub fn cell_energy(model: &EffectiveModel, u: &[f64]) -> f64 {
    let fam = &model.family;
    let n = u.len() - 1;
    let mut e = 0.0;
    for j in 1..=model.range() {
        let jf = j as f64;
        for i in 0..=n - j {
            e += fam.eval(j, (u[i + j] - u[i]) / jf);
        }
    }
    e / n as f64
}

/// Energy of the free nodes `u^{K+1}, ..., u^{N-K-1}` written into `u`,
/// without the `1/N` factor, and its gradient.
fn free_energy(model: &EffectiveModel, u: &mut [f64], free: &[f64], grad: &mut [f64]) -> f64 {
    let fam = &model.family;
    let k = model.range();
    let n = u.len() - 1;
    u[k + 1..n - k].copy_from_slice(free);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut e = 0.0;
    for j in 1..=k {
        let jf = j as f64;
        for i in 0..=n - j {
            let z = (u[i + j] - u[i]) / jf;
            if !(z > 0.0) {
                return f64::INFINITY;
            }
            e += fam.eval(j, z);
            let d = fam.d1(j, z) / jf;
            if i + j > k && i + j < n - k {
                grad[i + j - k - 1] += d;
            }
            if i > k && i < n - k {
                grad[i - k - 1] -= d;
            }
        }
    }
    e
}

/// Uniform profile `u^i = z i`.
pub fn affine_profile(n: usize, z: f64) -> Vec<f64> {
    (0..=n).map(|i| z * i as f64).collect()
}

/// Profile at the ground strain between the pinned ends, with the excess
/// stretch collected in the bond that meets the right boundary:
/// `u^i = K z + gamma (i - K)` for `K <= i <= N - K - 1`.
pub fn cracked_profile(model: &EffectiveModel, n: usize, z: f64) -> Vec<f64> {
    let k = model.range();
    let kf = k as f64;
    (0..=n).map(|i| if i <= k || i >= n - k { z * i as f64 } else { kf * z + model.gamma * (i as f64 - kf) }).collect()
}

fn cell_config(model: &EffectiveModel) -> LbfgsConfig {
    let scale = model.family.energy_scale() / model.family.delta1();
    LbfgsConfig { max_iter: 50_000, ..LbfgsConfig::with_gtol(1e-9 * scale) }
}

fn relax(model: &EffectiveModel, start: Vec<f64>) -> Result<(Vec<f64>, f64, bool)> {
    let k = model.range();
    let n = start.len() - 1;
    let dim = n - 2 * k - 1;
    let template = std::cell::RefCell::new(start.clone());
    let obj = FnObjective::new(dim, |x: &[f64], g: &mut [f64]| free_energy(model, &mut template.borrow_mut(), x, g));
    let report = minimize(&obj, &start[k + 1..n - k], &cell_config(model))?;
    let mut u = start;
    u[k + 1..n - k].copy_from_slice(&report.x_star);
    Ok((u, report.f_star / n as f64, report.converged))
}

/// `phi_N(z)`: the lower of the relaxed affine start and, for `z > gamma`,
/// the relaxed cracked start.
pub fn solve_phi(model: &EffectiveModel, n: usize, z: f64) -> Result<CellSolution> {
    let k = model.range();
    if n < 2 * k + 2 || n > MAX_CELL {
        return Err(Error::Input(format!(
            "cell size {n} must lie in [2K + 2, {MAX_CELL}] = [{}, {MAX_CELL}]",
            2 * k + 2
        )));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Input(format!("boundary strain must be positive, got {z}")));
    }
    let mut starts = vec![(StartKind::Affine, affine_profile(n, z))];
    if z > model.gamma {
        starts.push((StartKind::Cracked, cracked_profile(model, n, z)));
    }
    let mut best: Option<CellSolution> = None;
    for (kind, start) in starts {
        let (profile, value, converged) = match relax(model, start) {
            Ok(r) => r,
            Err(Error::Input(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(CellSolution { n, z, value, profile, start_kind: kind, converged });
        }
    }
    best.ok_or_else(|| Error::Input(format!("no start has finite energy at z = {z}")))
}

/// Upper bound `J_CB(z) - (1/N) sum_j (j - 1) J_j(z)` from the affine
/// profile; meaningful for `z <= gamma`.
pub fn affine_upper_bound(model: &EffectiveModel, n: usize, z: f64) -> f64 {
    let fam = &model.family;
    let boundary: f64 = (1..=model.range()).map(|j| (j - 1) as f64 * fam.eval(j, z)).sum();
    model.jcb(z) - boundary / n as f64
}

/// Lower bound `sum_j (1 - (j-1)/N) psi_j**(z) + C/N` with
/// `C = sum_j c_j (j - 1) J_1(delta_1)`.
pub fn envelope_lower_bound(model: &EffectiveModel, n: usize, z: f64) -> f64 {
    let nf = n as f64;
    let fam = &model.family;
    let mut bound = 0.0;
    let mut c = 0.0;
    for j in 2..=model.range() {
        let w = (j - 1) as f64;
        bound += (1.0 - w / nf) * model.psi_envelope(j, z);
        c += model.c(j) * w * fam.eval(1, fam.delta1());
    }
    bound + c / nf
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub z: f64,
    pub phi: f64,
    pub jcb_star_star: f64,
    pub abs_error: f64,
}

/// `phi_N(z)` and its distance to `J_CB**(z)` for each `N`, solved in parallel.
pub fn phi_convergence(model: &EffectiveModel, z: f64, n_list: &[usize]) -> Result<Vec<ConvergenceRow>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("cell sizes must be strictly increasing".into()));
    }
    let target = model.jcb_star_star(z);
    n_list
        .par_iter()
        .map(|&n| {
            let s = solve_phi(model, n, z)?;
            Ok(ConvergenceRow { n, z, phi: s.value, jcb_star_star: target, abs_error: (s.value - target).abs() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialFamily;
    use approx::assert_abs_diff_eq;

    fn model(range: usize) -> EffectiveModel {
        EffectiveModel::build(&PotentialFamily::new(1.0, 1.0, range).unwrap())
    }

    #[test]
    fn affine_energy_is_the_upper_bound() {
        let m = model(3);
        for z in [0.9, 1.0, m.gamma] {
            let u = affine_profile(40, z);
            assert_abs_diff_eq!(cell_energy(&m, &u), affine_upper_bound(&m, 40, z), epsilon = 1e-13);
        }
    }

    #[test]
    fn ground_strain_profile_is_stationary() {
        let m = model(2);
        let n = 32;
        let mut u = affine_profile(n, m.gamma);
        let free = u[3..n - 2].to_vec();
        let mut g = vec![0.0; free.len()];
        free_energy(&m, &mut u, &free, &mut g);
        assert!(g.iter().all(|x| x.abs() <= 1e-8));
    }

    #[test]
    fn boundary_conditions_hold() {
        let m = model(2);
        let s = solve_phi(&m, 32, 1.5 * m.gamma).unwrap();
        for i in (0..=2).chain(30..=32) {
            assert_eq!(s.profile[i], 1.5 * m.gamma * i as f64);
        }
        assert!(s.profile.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sandwich_at_ground_strain() {
        let m = model(2);
        let s = solve_phi(&m, 64, m.gamma).unwrap();
        assert!(s.value <= affine_upper_bound(&m, 64, m.gamma) + 1e-12);
        assert!(s.value >= envelope_lower_bound(&m, 64, m.gamma));
        assert!((s.value - m.jcb_at_gamma).abs() <= 1.0 / 64.0);
    }

    #[test]
    fn cracked_start_wins_far_out() {
        let m = model(2);
        let z = 3.0 * m.gamma;
        let s = solve_phi(&m, 64, z).unwrap();
        assert_eq!(s.start_kind, StartKind::Cracked);
        assert!(s.value <= cell_energy(&m, &cracked_profile(&m, 64, z)) + 1e-14);
        assert!((s.value - m.jcb_at_gamma).abs() <= 2.0 / 64.0);
    }

    #[test]
    fn rejects_bad_input() {
        let m = model(2);
        assert!(solve_phi(&m, 5, 1.0).is_err());
        assert!(solve_phi(&m, MAX_CELL + 1, 1.0).is_err());
        assert!(solve_phi(&m, 32, 0.0).is_err());
        assert!(phi_convergence(&m, 1.0, &[32, 16]).is_err());
    }
}
