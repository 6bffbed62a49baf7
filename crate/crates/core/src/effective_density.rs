//! Effective densities derived from the potential family: the ground strain
//! `gamma`, the splitting coefficients `c_j`, the densities `psi_j`, the
//! inner infimum defining `J_{0,j}`, and the closed-form convex envelopes.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::optim::{golden_section, scan_then_refine};
use crate::potentials::PotentialFamily;

/// Constants of the effective (continuum) model of a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveModel {
    pub family: PotentialFamily,
    /// Unique minimizer of `J_CB`.
    pub gamma: f64,
    /// `c_2, ..., c_K`; empty for `K = 1`.
    pub c: Vec<f64>,
    /// Elastic modulus `J_CB''(gamma) / 2`.
    pub alpha: f64,
    pub jcb_at_gamma: f64,
    /// `psi_j(gamma)` for `j = 2..=K`.
    pub psi_at_gamma: Vec<f64>,
}

impl EffectiveModel {
    /// Builds the model from the closed forms for the Lennard-Jones family.
    pub fn build(family: &PotentialFamily) -> Self {
        let range = family.range();
        let (s12, s6) = (1..=range).fold((0.0, 0.0), |(a, b), j| {
            let jf = j as f64;
            (a + jf.powi(-12), b + jf.powi(-6))
        });
        let gamma = family.delta1() * (s12 / s6).powf(1.0 / 6.0);
        let j1_slope = family.d1(1, gamma);
        let c: Vec<f64> = (2..=range).map(|j| -family.d1(j, gamma) / j1_slope).collect();
        let psi_at_gamma = (2..=range).map(|j| family.eval(j, gamma) + c[j - 2] * family.eval(1, gamma)).collect();
        Self {
            family: *family,
            gamma,
            alpha: 0.5 * family.cauchy_born_d2(gamma),
            jcb_at_gamma: family.cauchy_born(gamma),
            c,
            psi_at_gamma,
        }
    }

    pub fn range(&self) -> usize {
        self.family.range()
    }

    /// Splitting coefficient `c_j` for `j = 2..=K`.
    pub fn c(&self, j: usize) -> f64 {
        assert!((2..=self.range()).contains(&j), "c_j is defined for 2 <= j <= K");
        self.c[j - 2]
    }

    pub fn jcb(&self, z: f64) -> f64 {
        self.family.cauchy_born(z)
    }

    /// `psi_j(z) = J_j(z) + c_j J_1(z)`.
    pub fn psi(&self, j: usize, z: f64) -> f64 {
        if z <= 0.0 {
            return f64::INFINITY;
        }
        self.family.eval(j, z) + self.c(j) * self.family.eval(1, z)
    }

    pub fn psi_d1(&self, j: usize, z: f64) -> f64 {
        self.family.d1(j, z) + self.c(j) * self.family.d1(1, z)
    }

    pub fn psi_d2(&self, j: usize, z: f64) -> f64 {
        self.family.d2(j, z) + self.c(j) * self.family.d2(1, z)
    }

    /// Closed-form convex envelope of `psi_j`: `psi_j` left of `gamma`, flat
    /// at `psi_j(gamma)` to the right.
    pub fn psi_envelope(&self, j: usize, z: f64) -> f64 {
        if z <= 0.0 {
            f64::INFINITY
        } else if z <= self.gamma {
            self.psi(j, z)
        } else {
            self.psi_at_gamma[j - 2]
        }
    }

    /// Closed-form convex envelope `J_CB**`.
    pub fn jcb_star_star(&self, z: f64) -> f64 {
        if z <= 0.0 {
            f64::INFINITY
        } else if z <= self.gamma {
            self.jcb(z)
        } else {
            self.jcb_at_gamma
        }
    }
}

fn jcb_extended(family: &PotentialFamily, z: f64) -> TwoFloat {
    if z <= 0.0 {
        return TwoFloat::from(f64::INFINITY);
    }
    let z = TwoFloat::from(z);
    let mut total = TwoFloat::from(0.0);
    for j in 1..=family.range() {
        let inv6 = (z * j as f64).powi(-6);
        total += inv6 * (inv6 * family.k1() - family.k2());
    }
    total
}

/// Argmin of `J_CB` by golden-section search on `[delta_1/4, 2 delta_1]`.
///
/// Serves as an oracle for the closed-form `gamma`. The energy is compared in
/// double-double arithmetic: in plain `f64` the values of `J_CB` stop
/// separating about `1e-9` away from the minimizer.
pub fn gamma_numeric(family: &PotentialFamily) -> Result<f64> {
    let d1 = family.delta1();
    let (lo, hi) = (d1 / 4.0, 2.0 * d1);
    let (x, _) = golden_section(|z| jcb_extended(family, z), lo, hi, 1e-12)?;
    if x - lo < 1e-6 * d1 || hi - x < 1e-6 * d1 {
        return Err(Error::Bracket(format!("minimizer {x} sits on the bracket edge")));
    }
    Ok(x)
}

/// Value and minimizing tuple of `inf { sum_s J_1(z_s) : sum_s z_s = j z }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerInfimum {
    pub value: f64,
    pub argmin: Vec<f64>,
}

/// Inner infimum in the definition of `J_{0,j}`.
///
/// For `z <= delta_1` the constant tuple is the unique minimizer. Beyond
/// `delta_1` a minimizer takes at most two distinct values (all `z_s` share
/// the same `J_1'`), so each split `m` large / `j - m` small bonds is solved
/// as a one-dimensional problem and the best split is kept.
pub fn inner_infimum(model: &EffectiveModel, j: usize, z: f64) -> InnerInfimum {
    assert!(j >= 1, "bond order must be positive");
    let fam = &model.family;
    if z <= 0.0 {
        return InnerInfimum { value: f64::INFINITY, argmin: Vec::new() };
    }
    let jf = j as f64;
    let constant = InnerInfimum { value: jf * fam.eval(1, z), argmin: vec![z; j] };
    if z <= fam.delta1() || j == 1 {
        return constant;
    }

    let mut best = constant;
    let total = jf * z;
    for m in 1..j {
        let (mf, rest) = (m as f64, (j - m) as f64);
        let large = |b: f64| (total - rest * b) / mf;
        let split_energy = |b: f64| {
            let a = large(b);
            if a <= 0.0 || b <= 0.0 {
                return f64::INFINITY;
            }
            mf * fam.eval(1, a) + rest * fam.eval(1, b)
        };
        let hi = total / rest;
        let lo = hi * 1e-9;
        if let Ok((b, value)) = scan_then_refine(split_energy, lo, hi * (1.0 - 1e-12), 4000, 1e-13) {
            if value < best.value {
                let a = large(b);
                let mut argmin = vec![a; m];
                argmin.extend(std::iter::repeat_n(b, j - m));
                best = InnerInfimum { value, argmin };
            }
        }
    }
    best
}

/// `J_{0,j}(z) = J_j(z) + (c_j / j) * inner_infimum(j, z)`.
pub fn j0j(model: &EffectiveModel, j: usize, z: f64) -> f64 {
    if z <= 0.0 {
        return f64::INFINITY;
    }
    model.family.eval(j, z) + model.c(j) / j as f64 * inner_infimum(model, j, z).value
}
