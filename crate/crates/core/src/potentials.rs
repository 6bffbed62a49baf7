//! Lennard-Jones family `J_j(z) = J(jz)` with `J(z) = k1/z^12 - k2/z^6`.
//!
//! Energies live on the extended reals: any strain `z <= 0` evaluates to
//! `f64::INFINITY`, which every minimizer downstream treats as an infeasible
//! point. Derivatives are closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest interaction range accepted by [`PotentialFamily::new`].
pub const MAX_RANGE: usize = 8;

/// Parameters `(k1, k2, K)` of a Lennard-Jones chain with range-`K`
/// interactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialFamily {
    k1: f64,
    k2: f64,
    range: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

/// Closed-form landmarks of the family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landmarks {
    /// Minimizers `delta_j = delta_1 / j`, `j = 1..=K`.
    pub delta: Vec<f64>,
    /// Inflection point of `J_1`.
    pub zc1: f64,
    /// Inflection point of `J_2`; only present when `K >= 2`.
    pub zc2: Option<f64>,
    /// Right end of the window on which `J_CB` is uniformly convex.
    pub zc3: f64,
}

impl PotentialFamily {
    pub fn new(k1: f64, k2: f64, range: usize) -> Result<Self> {
        if !(k1.is_finite() && k1 > 0.0) {
            return Err(Error::InvalidFamily(format!("k1 must be positive, got {k1}")));
        }
        if !(k2.is_finite() && k2 > 0.0) {
            return Err(Error::InvalidFamily(format!("k2 must be positive, got {k2}")));
        }
        if range == 0 || range > MAX_RANGE {
            return Err(Error::InvalidFamily(format!("range K must be in 1..={MAX_RANGE}, got {range}")));
        }
        Ok(Self { k1, k2, range })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Interaction range `K`.
    pub fn range(&self) -> usize {
        self.range
    }

    /// The base potential `J(x)`.
    #[inline]
    pub fn base(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        let inv6 = (x * x * x).powi(-2);
        inv6 * (self.k1 * inv6 - self.k2)
    }

    #[inline]
    fn base_d1(&self, x: f64) -> f64 {
        let inv6 = (x * x * x).powi(-2);
        inv6 * (6.0 * self.k2 - 12.0 * self.k1 * inv6) / x
    }

    #[inline]
    fn base_d2(&self, x: f64) -> f64 {
        let inv6 = (x * x * x).powi(-2);
        inv6 * (156.0 * self.k1 * inv6 - 42.0 * self.k2) / (x * x)
    }

    /// `J_j(z)`; `+inf` for `z <= 0`.
    #[inline]
    pub fn eval(&self, j: usize, z: f64) -> f64 {
        debug_assert!((1..=self.range).contains(&j), "bond order {j} out of range");
        self.base(j as f64 * z)
    }

    /// First or second derivative of `J_j` at `z > 0`.
    pub fn deriv(&self, j: usize, z: f64, order: DerivOrder) -> Result<f64> {
        if z <= 0.0 || z.is_nan() {
            return Err(Error::Domain { z });
        }
        Ok(match order {
            DerivOrder::First => self.d1(j, z),
            DerivOrder::Second => self.d2(j, z),
        })
    }

    /// `J_j'(z)` without the domain check. Callers guarantee `z > 0`.
    #[inline]
    pub fn d1(&self, j: usize, z: f64) -> f64 {
        let jf = j as f64;
        jf * self.base_d1(jf * z)
    }

    /// `J_j''(z)` without the domain check. Callers guarantee `z > 0`.
    #[inline]
    pub fn d2(&self, j: usize, z: f64) -> f64 {
        let jf = j as f64;
        jf * jf * self.base_d2(jf * z)
    }

    /// Cauchy-Born density `J_CB(z) = sum_j J_j(z)`.
    pub fn cauchy_born(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return f64::INFINITY;
        }
        (1..=self.range).map(|j| self.eval(j, z)).sum()
    }

    pub fn cauchy_born_d1(&self, z: f64) -> f64 {
        (1..=self.range).map(|j| self.d1(j, z)).sum()
    }

    pub fn cauchy_born_d2(&self, z: f64) -> f64 {
        (1..=self.range).map(|j| self.d2(j, z)).sum()
    }

    /// `delta_1 = (2 k1 / k2)^(1/6)`.
    pub fn delta1(&self) -> f64 {
        (2.0 * self.k1 / self.k2).powf(1.0 / 6.0)
    }

    /// Depth of the well, `|J_1(delta_1)| = k2^2 / (4 k1)`. Used as the energy
    /// unit for scale-free tolerances.
    pub fn energy_scale(&self) -> f64 {
        self.k2 * self.k2 / (4.0 * self.k1)
    }

    pub fn landmarks(&self) -> Landmarks {
        let d1 = self.delta1();
        let zc1 = (13.0f64 / 7.0).powf(1.0 / 6.0) * d1;
        Landmarks {
            delta: (1..=self.range).map(|j| d1 / j as f64).collect(),
            zc1,
            zc2: (self.range >= 2).then_some(zc1 / 2.0),
            zc3: d1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(range: usize) -> PotentialFamily {
        PotentialFamily::new(1.0, 1.0, range).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PotentialFamily::new(0.0, 1.0, 2).is_err());
        assert!(PotentialFamily::new(1.0, -1.0, 2).is_err());
        assert!(PotentialFamily::new(1.0, 1.0, 0).is_err());
        assert!(PotentialFamily::new(1.0, 1.0, 9).is_err());
        assert!(PotentialFamily::new(f64::NAN, 1.0, 2).is_err());
    }

    #[test]
    fn eval_examples() {
        let fam = unit(2);
        assert_eq!(fam.eval(1, 1.0), 0.0);
        assert_abs_diff_eq!(fam.eval(1, 2f64.powf(1.0 / 6.0)), -0.25, epsilon = 1e-15);
        assert_eq!(fam.eval(2, -1.0), f64::INFINITY);
        assert_eq!(fam.eval(1, 0.0), f64::INFINITY);
    }

    #[test]
    fn derivative_examples() {
        let fam = unit(1);
        let d = fam.deriv(1, 2f64.powf(1.0 / 6.0), DerivOrder::First).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-14);
        let zc1 = (26.0f64 / 7.0).powf(1.0 / 6.0);
        let d2 = fam.deriv(1, zc1, DerivOrder::Second).unwrap();
        assert_abs_diff_eq!(d2, 0.0, epsilon = 1e-12);
        assert_eq!(fam.deriv(1, 0.0, DerivOrder::First), Err(Error::Domain { z: 0.0 }));
        assert!(fam.deriv(1, -2.0, DerivOrder::Second).is_err());
    }

    #[test]
    fn derivative_matches_central_difference_at_one() {
        let fam = unit(1);
        let h = 1e-6;
        let fd = (fam.eval(1, 1.0 + h) - fam.eval(1, 1.0 - h)) / (2.0 * h);
        assert!((fam.d1(1, 1.0) - fd).abs() <= 1e-5);
    }

    #[test]
    fn landmark_values() {
        let lm = unit(2).landmarks();
        assert_abs_diff_eq!(lm.delta[0], 1.122462048309373, epsilon = 1e-12);
        assert_abs_diff_eq!(lm.delta[1], 0.5612310241546865, epsilon = 1e-12);
        assert_abs_diff_eq!(lm.zc1, (13.0f64 / 7.0).powf(1.0 / 6.0) * lm.delta[0], epsilon = 1e-15);
        assert_abs_diff_eq!(lm.zc2.unwrap(), lm.zc1 / 2.0, epsilon = 1e-15);
        assert_eq!(lm.zc3, lm.delta[0]);
        assert!(unit(1).landmarks().zc2.is_none());
    }

    #[test]
    fn delta_j_minimizes_j_j() {
        let fam = PotentialFamily::new(2.0, 3.0, 4).unwrap();
        let lm = fam.landmarks();
        for j in 1..=4 {
            let dj = lm.delta[j - 1];
            assert!(fam.d1(j, dj).abs() < 1e-10);
            assert!(fam.d2(j, dj) > 0.0);
        }
    }

    #[test]
    fn second_derivative_flips_sign_once() {
        let fam = unit(1);
        let lm = fam.landmarks();
        let d1 = lm.delta[0];
        let n = 20_000;
        let h = 4.0 * d1 / n as f64;
        let mut flips = Vec::new();
        let mut prev = fam.d2(1, h);
        for k in 2..=n {
            let z = k as f64 * h;
            let cur = fam.d2(1, z);
            if prev.signum() != cur.signum() {
                flips.push(z);
            }
            prev = cur;
        }
        assert_eq!(flips.len(), 1);
        assert!((flips[0] - lm.zc1).abs() <= h);
    }

    #[test]
    fn energy_scale_is_well_depth() {
        let fam = PotentialFamily::new(2.0, 3.0, 1).unwrap();
        assert_abs_diff_eq!(fam.energy_scale(), -fam.eval(1, fam.delta1()), epsilon = 1e-14);
    }
}
