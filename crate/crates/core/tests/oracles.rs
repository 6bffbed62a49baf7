//! Frozen reference values and brute-force oracles for the unit family
//! `k1 = k2 = 1`.

use approx::assert_relative_eq;
use ljchain::boundary_layer::{beta, solve_b};
use ljchain::cell_formula::phi_convergence;
use ljchain::{EffectiveModel, PotentialFamily};

fn unit(range: usize) -> EffectiveModel {
    EffectiveModel::build(&PotentialFamily::new(1.0, 1.0, range).unwrap())
}

#[test]
fn ground_strain_closed_forms() {
    let d1 = 2f64.powf(1.0 / 6.0);
    assert_relative_eq!(unit(1).gamma, d1, max_relative = 1e-15);
    let k2 = d1 * ((1.0 + 2f64.powi(-12)) / (1.0 + 2f64.powi(-6))).powf(1.0 / 6.0);
    assert_relative_eq!(unit(2).gamma, k2, max_relative = 1e-15);
}

#[test]
fn ground_strain_beats_a_fine_grid() {
    for range in 1..=4 {
        let m = unit(range);
        let hi = 10.0 * m.family.delta1();
        let points = 1_000_000;
        let best = (1..=points).map(|k| m.jcb(hi * k as f64 / points as f64)).fold(f64::INFINITY, f64::min);
        assert!(m.jcb_at_gamma <= best + 1e-15);
        assert!(best - m.jcb_at_gamma <= 1e-6);
    }
}

#[test]
fn frozen_fracture_constants() {
    // values recorded from converged runs, kept to five digits
    for (range, expected) in [(2, 0.26565), (3, 0.26774), (4, 0.26824)] {
        let m = unit(range);
        let rep = beta(&m, 1024, 1e-10).unwrap();
        assert!(rep.converged);
        assert!((rep.beta - expected).abs() < 5e-6, "K = {range}: {}", rep.beta);
        if range == 2 {
            let l_star = (rep.beta / m.alpha).sqrt();
            assert!((l_star - 0.18942).abs() < 5e-6, "{l_star}");
        }
    }
}

#[test]
fn layer_energies_do_not_increase_with_truncation() {
    let m = unit(2);
    let sol = solve_b(&m, 512, 1e-12).unwrap();
    for w in sol.history.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-14, "{:?}", sol.history);
    }
}

#[test]
fn cell_values_decrease_towards_the_envelope() {
    let m = unit(2);
    let z = 1.5 * m.gamma;
    let rows = phi_convergence(&m, z, &[16, 32, 64]).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].abs_error <= w[0].abs_error);
    }
    assert!(rows.iter().all(|r| r.phi >= r.jcb_star_star - 1e-12));
}
