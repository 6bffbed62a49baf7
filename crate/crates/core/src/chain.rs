//! Periodic chain under an imposed stretch.
//!
//! A state holds the scaled displacements `v^0 = 0, v^1, ..., v^{n-1}` of an
//! `n`-atom chain whose displacement grows by `ell` per period
//! (`v^{i+n} = v^i + ell`). Its rescaled energy measures the excess over the
//! ground state in units where a single crack costs `O(1)`; minimizing it
//! over states reproduces the limit law `min(alpha ell^2, beta)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::effective_density::EffectiveModel;
use crate::error::{Error, Result};
use crate::optim::{minimize, FnObjective, LbfgsConfig};
use crate::potentials::PotentialFamily;

/// Largest chain length accepted by the solvers.
pub const MAX_SITES: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainState {
    pub n: usize,
    pub ell: f64,
    /// `v^0, ..., v^{n-1}` with `v^0 = 0`.
    pub v: Vec<f64>,
}

impl ChainState {
    pub fn new(n: usize, ell: f64, v: Vec<f64>) -> Result<Self> {
        if v.len() != n {
            return Err(Error::Input(format!("expected {n} displacements, got {}", v.len())));
        }
        if v[0] != 0.0 {
            return Err(Error::Input(format!("v^0 must be 0, got {}", v[0])));
        }
        if !ell.is_finite() {
            return Err(Error::Input(format!("stretch must be finite, got {ell}")));
        }
        Ok(Self { n, ell, v })
    }

    /// Uniform stretch `v^i = ell i / n`.
    pub fn affine(n: usize, ell: f64) -> Self {
        let v = (0..n).map(|i| ell * i as f64 / n as f64).collect();
        Self { n, ell, v }
    }

    /// All of the stretch carried by the bond between sites `m` and `m + 1`.
    pub fn cracked(n: usize, ell: f64, m: usize) -> Self {
        let v = (0..n).map(|i| if i <= m { 0.0 } else { ell }).collect();
        Self { n, ell, v }
    }

    /// `v^k` for any `k >= 0`, using the periodic extension.
    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        let wraps = k / self.n;
        self.v[k % self.n] + wraps as f64 * self.ell
    }

    /// Largest single-bond jump `v^{i+1} - v^i`, wrap bond included.
    pub fn max_gap(&self) -> f64 {
        (0..self.n).map(|i| self.at(i + 1) - self.at(i)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bulk energy `H_n` of the deformation `u^0, ..., u^n`, extended by
/// `u^{i+n} = u^i + (u^n - u^0)`.
pub fn energy_bulk(fam: &PotentialFamily, u: &[f64]) -> Result<f64> {
    if u.len() < 2 {
        return Err(Error::Input("deformation needs at least two nodes".into()));
    }
    let n = u.len() - 1;
    let lambda = 1.0 / n as f64;
    let period = u[n] - u[0];
    let at = |k: usize| u[k % n] + (k / n) as f64 * period;
    let mut h = 0.0;
    for j in 1..=fam.range() {
        for i in 0..n {
            h += lambda * fam.eval(j, (at(i + j) - at(i)) / (j as f64 * lambda));
        }
    }
    Ok(h)
}

fn rescaled(model: &EffectiveModel, state: &ChainState, grad: Option<&mut [f64]>) -> f64 {
    let fam = &model.family;
    let n = state.n;
    let sq = (n as f64).sqrt();
    let mut energy = 0.0;
    let mut scratch;
    let grad = match grad {
        Some(g) => g,
        None => {
            scratch = vec![0.0; n];
            &mut scratch[..]
        }
    };
    grad.iter_mut().for_each(|g| *g = 0.0);
    for j in 1..=model.range() {
        let jf = j as f64;
        let base = fam.eval(j, model.gamma);
        for i in 0..n {
            let z = model.gamma + (state.at(i + j) - state.v[i]) * sq / jf;
            if !(z > 0.0) {
                return f64::INFINITY;
            }
            energy += fam.eval(j, z) - base;
            let d = fam.d1(j, z) * sq / jf;
            grad[(i + j) % n] += d;
            grad[i] -= d;
        }
    }
    energy
}

/// Rescaled energy `E_n^ell` and its gradient with respect to
/// `v^1, ..., v^{n-1}`.
pub fn energy_rescaled(model: &EffectiveModel, state: &ChainState) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; state.n];
    let e = rescaled(model, state, Some(&mut g));
    g.remove(0);
    (e, g)
}

/// The same energy summed as `sum_{j>=2} sum_i zeta_j^i`, where each
/// `zeta_j^i` collects the range-`j` bond starting at site `i` and its share
/// `c_j / j` of the nearest neighbour bonds underneath it.
pub fn energy_by_zeta(model: &EffectiveModel, state: &ChainState) -> f64 {
    let fam = &model.family;
    let n = state.n;
    let sq = (n as f64).sqrt();
    let nn: Vec<f64> = (0..n).map(|s| fam.eval(1, model.gamma + (state.at(s + 1) - state.at(s)) * sq)).collect();
    let mut total = 0.0;
    for j in 2..=model.range() {
        let jf = j as f64;
        let cj = model.c(j);
        for i in 0..n {
            let z = model.gamma + (state.at(i + j) - state.v[i]) * sq / jf;
            let shared: f64 = (i..i + j).map(|s| nn[s % n]).sum();
            total += fam.eval(j, z) + cj / jf * shared - model.psi_at_gamma[j - 2];
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Elastic,
    Fractured,
}

/// Starting states for [`minimize_chain`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Starts {
    pub affine: bool,
    /// Bonds at which a cracked start places the whole stretch.
    pub crack_sites: Vec<usize>,
    /// Further starting displacements `v^0, ..., v^{n-1}` supplied by the caller.
    pub extra: Vec<Vec<f64>>,
}

impl Starts {
    /// The affine start and cracks at a quarter, half and three quarters of
    /// the chain.
    pub fn standard(n: usize) -> Self {
        Self { affine: true, crack_sites: vec![n / 4, n / 2, 3 * n / 4], extra: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSolveResult {
    pub state: ChainState,
    pub energy: f64,
    pub classification: Classification,
    pub max_gap: f64,
    /// `min(alpha ell^2, beta)`.
    pub predicted_limit: f64,
    /// Final energy of each start, affine first when present.
    pub start_energies: Vec<f64>,
    /// Set when a cracked start wins although `alpha ell^2 < beta`.
    pub cracked_in_elastic_regime: bool,
    pub converged: bool,
}

fn chain_config(model: &EffectiveModel, n: usize) -> LbfgsConfig {
    let scale = model.family.energy_scale() / model.family.delta1();
    LbfgsConfig { max_iter: 20_000, ..LbfgsConfig::with_gtol(1e-9 * scale * (n as f64).sqrt()) }
}

fn relax(model: &EffectiveModel, start: ChainState) -> Result<(ChainState, f64, bool)> {
    let n = start.n;
    let ell = start.ell;
    let obj = FnObjective::new(n - 1, |x: &[f64], g: &mut [f64]| {
        let mut v = Vec::with_capacity(n);
        v.push(0.0);
        v.extend_from_slice(x);
        let state = ChainState { n, ell, v };
        let mut full = vec![0.0; n];
        let e = rescaled(model, &state, Some(&mut full));
        g.copy_from_slice(&full[1..]);
        e
    });
    let report = minimize(&obj, &start.v[1..], &chain_config(model, n))?;
    let mut v = vec![0.0];
    v.extend(report.x_star);
    Ok((ChainState { n, ell, v }, report.f_star, report.converged))
}

/// Minimizes `E_n^ell` from several starts and keeps the lowest energy.
pub fn minimize_chain(
    model: &EffectiveModel,
    beta: f64,
    n: usize,
    ell: f64,
    starts: &Starts,
) -> Result<ChainSolveResult> {
    let range = model.range();
    if n < 8 * range || n > MAX_SITES {
        return Err(Error::Input(format!("n = {n} must lie in [8K, 2^14] = [{}, {MAX_SITES}]", 8 * range)));
    }
    if !(ell >= 0.0) || !ell.is_finite() {
        return Err(Error::Input(format!("stretch must be a finite non-negative number, got {ell}")));
    }
    let mut candidates = Vec::new();
    if starts.affine {
        candidates.push(ChainState::affine(n, ell));
    }
    for &m in &starts.crack_sites {
        if m >= n {
            return Err(Error::Input(format!("crack site {m} is outside the chain of {n} sites")));
        }
        candidates.push(ChainState::cracked(n, ell, m));
    }
    for v in &starts.extra {
        candidates.push(ChainState::new(n, ell, v.clone())?);
    }

    let mut best: Option<(ChainState, f64, bool, usize)> = None;
    let mut start_energies = Vec::with_capacity(candidates.len());
    for (k, start) in candidates.into_iter().enumerate() {
        let (state, energy, converged) = match relax(model, start) {
            Ok(r) => r,
            Err(Error::Input(_)) => {
                start_energies.push(f64::INFINITY);
                continue;
            }
            Err(e) => return Err(e),
        };
        start_energies.push(energy);
        if best.as_ref().is_none_or(|b| energy < b.1) {
            best = Some((state, energy, converged, k));
        }
    }
    let (state, energy, converged, winner) =
        best.ok_or_else(|| Error::Input("every start has infinite energy".into()))?;

    let elastic = model.alpha * ell * ell;
    let predicted_limit = elastic.min(beta);
    let max_gap = state.max_gap();
    let classification = if max_gap > ell / 2.0 { Classification::Fractured } else { Classification::Elastic };
    let first_crack = usize::from(starts.affine);
    let from_crack = (first_crack..first_crack + starts.crack_sites.len()).contains(&winner);
    let margin = 1e-9 * model.family.energy_scale();
    let cracked_in_elastic_regime =
        from_crack && elastic < beta && starts.affine && energy < start_energies[0] - margin;
    Ok(ChainSolveResult {
        state,
        energy,
        classification,
        max_gap,
        predicted_limit,
        start_energies,
        cracked_in_elastic_regime,
        converged,
    })
}

/// One cell of a fracture sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub ell: f64,
    pub energy: f64,
    pub classification: Classification,
    pub predicted: f64,
    /// `|energy - predicted| / max(predicted, 1e-3)`.
    pub relative_gap: f64,
    pub max_gap: f64,
    pub cracked_in_elastic_regime: bool,
    pub converged: bool,
}

/// Floor of the denominator in [`SweepRow::relative_gap`].
pub const GAP_FLOOR: f64 = 1e-3;

/// Solves every `(n, ell)` pair in parallel; rows are sorted by `n`, then `ell`.
pub fn sweep(model: &EffectiveModel, beta: f64, n_list: &[usize], ell_grid: &[f64]) -> Result<Vec<SweepRow>> {
    sweep_with(model, beta, n_list, ell_grid, |n, _| Starts::standard(n))
}

/// [`sweep`] with the start set of each `(n, ell)` cell chosen by `starts`.
pub fn sweep_with<S>(
    model: &EffectiveModel,
    beta: f64,
    n_list: &[usize],
    ell_grid: &[f64],
    starts: S,
) -> Result<Vec<SweepRow>>
where
    S: Fn(usize, f64) -> Starts + Sync,
{
    if n_list.is_empty() || ell_grid.is_empty() {
        return Err(Error::Input("sweep grids must be non-empty".into()));
    }
    let cells: Vec<(usize, f64)> = n_list.iter().flat_map(|&n| ell_grid.iter().map(move |&l| (n, l))).collect();
    let mut rows = cells
        .par_iter()
        .map(|&(n, ell)| {
            let r = minimize_chain(model, beta, n, ell, &starts(n, ell))?;
            Ok(SweepRow {
                n,
                ell,
                energy: r.energy,
                classification: r.classification,
                predicted: r.predicted_limit,
                relative_gap: (r.energy - r.predicted_limit).abs() / r.predicted_limit.max(GAP_FLOOR),
                max_gap: r.max_gap,
                cracked_in_elastic_regime: r.cracked_in_elastic_regime,
                converged: r.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(a.ell.total_cmp(&b.ell)));
    Ok(rows)
}
