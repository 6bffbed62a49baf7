use ljchain::chain::{energy_by_zeta, energy_rescaled, ChainState};
use ljchain::effective_density::{inner_infimum, j0j};
use ljchain::envelope::convex_envelope;
use ljchain::optim::{minimize, FnObjective, LbfgsConfig};
use ljchain::{EffectiveModel, PotentialFamily};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = PotentialFamily> {
    (0.5f64..2.0, 0.5f64..2.0, 1usize..=4).prop_map(|(k1, k2, r)| PotentialFamily::new(k1, k2, r).unwrap())
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bond_potentials_are_rescaled_copies(fam in family(), t in 0.5f64..6.0, j in 1usize..=4) {
        let j = j.min(fam.range());
        let z = t * fam.delta1();
        prop_assert!(close(fam.eval(j, z), fam.eval(1, j as f64 * z), 1e-15, 0.0));
    }

    #[test]
    fn derivatives_match_central_differences(fam in family(), t in 0.7f64..4.0, j in 1usize..=4) {
        let j = j.min(fam.range());
        let z = t * fam.delta1() / j as f64;
        let h = 1e-5 * z;
        let fd1 = (fam.eval(j, z + h) - fam.eval(j, z - h)) / (2.0 * h);
        let fd2 = (fam.d1(j, z + h) - fam.d1(j, z - h)) / (2.0 * h);
        // absolute floor for points where a derivative crosses zero
        let floor = 1e-8 * fam.energy_scale() / z.powi(2);
        prop_assert!(close(fam.d1(j, z), fd1, 1e-6, floor * z), "d1 {} vs {}", fam.d1(j, z), fd1);
        prop_assert!(close(fam.d2(j, z), fd2, 1e-6, floor), "d2 {} vs {}", fam.d2(j, z), fd2);
    }

    #[test]
    fn potentials_are_infinite_off_the_domain(fam in family(), z in -5.0f64..=0.0, j in 1usize..=4) {
        let j = j.min(fam.range());
        prop_assert_eq!(fam.eval(j, z), f64::INFINITY);
    }

    #[test]
    fn splitting_coefficients_sum_to_one(fam in family()) {
        let m = EffectiveModel::build(&fam);
        if fam.range() >= 2 {
            let s: f64 = m.c.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12, "sum {s}");
            prop_assert!(m.c.iter().all(|&c| c > 0.0));
        }
    }

    #[test]
    fn envelopes_lie_below_their_densities(fam in family(), t in 0.3f64..20.0) {
        let m = EffectiveModel::build(&fam);
        let z = t * m.gamma;
        let slack = 1e-13 * fam.energy_scale();
        prop_assert!(m.jcb_star_star(z) <= m.jcb(z) + slack);
        for j in 2..=fam.range() {
            prop_assert!(m.psi_envelope(j, z) <= m.psi(j, z) + slack);
        }
    }

    #[test]
    fn envelope_is_convex_and_below_samples(ys in prop::collection::vec(-5.0f64..5.0, 3..60)) {
        let samples: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, &y)| (k as f64 * 0.1, y)).collect();
        let env = convex_envelope(&samples).unwrap();
        for (e, (_, y)) in env.values.iter().zip(&samples) {
            prop_assert!(*e <= y + 1e-12);
        }
        for w in env.values.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-10);
        }
    }

    #[test]
    fn two_point_infimum_never_beats_the_split_optimum(fam in family(), t in 0.6f64..3.0, j in 2usize..=3) {
        let m = EffectiveModel::build(&fam);
        let z = t * fam.delta1();
        let inf = inner_infimum(&m, j, z);
        prop_assert!(inf.value <= j as f64 * fam.eval(1, z) + 1e-14 * fam.energy_scale());
        let mean: f64 = inf.argmin.iter().sum::<f64>() / j as f64;
        prop_assert!(close(mean, z, 1e-10, 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ground_strain_minimizes_the_effective_bonds(k1 in 0.5f64..2.0, k2 in 0.5f64..2.0, r in 2usize..=3, t in 0.5f64..4.0) {
        let fam = PotentialFamily::new(k1, k2, r).unwrap();
        let m = EffectiveModel::build(&fam);
        let z = t * m.gamma;
        for j in 2..=r {
            let slack = 1e-12 * fam.energy_scale();
            prop_assert!(j0j(&m, j, z) >= m.psi_at_gamma[j - 2] - slack);
        }
    }

    #[test]
    fn chain_energy_ignores_cyclic_relabelling(seed in any::<u64>(), shift in 1usize..32, ell in 0.0f64..0.5) {
        use rand::{Rng, SeedableRng};
        let m = EffectiveModel::build(&PotentialFamily::new(1.0, 1.0, 2).unwrap());
        let n = 32;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = ChainState::affine(n, ell).v;
        for x in &mut v[1..] {
            *x += 0.01 * rng.gen_range(-1.0..1.0);
        }
        let a = ChainState::new(n, ell, v).unwrap();
        let w = (0..n).map(|i| a.at(i + shift) - a.at(shift)).collect();
        let b = ChainState::new(n, ell, w).unwrap();
        let (ea, _) = energy_rescaled(&m, &a);
        let (eb, _) = energy_rescaled(&m, &b);
        prop_assert!(close(ea, eb, 1e-10, 1e-12));
        prop_assert!(close(ea, energy_by_zeta(&m, &a), 1e-10, 1e-12));
    }

    #[test]
    fn lbfgs_descends_on_random_quadratics(diag in prop::collection::vec(0.1f64..50.0, 2..12), x0 in prop::collection::vec(-10.0f64..10.0, 12)) {
        let dim = diag.len();
        let obj = FnObjective::new(dim, |x: &[f64], g: &mut [f64]| {
            let mut f = 0.0;
            for k in 0..dim {
                let d = x[k] - 1.0;
                g[k] = diag[k] * d;
                f += 0.5 * diag[k] * d * d;
            }
            f
        });
        let rep = minimize(&obj, &x0[..dim], &LbfgsConfig::default()).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(rep.x_star.iter().all(|x| (x - 1.0).abs() < 1e-6));
    }
}
