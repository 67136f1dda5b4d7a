use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trc_exponent::classical::{
    critical_rates, expurgated_ex, expurgated_exponent, gallager_e0, mutual_information,
    random_coding_exponent, sphere_packing_exponent, RhoCap,
};
use trc_exponent::dual::{optimize_dual, DualConfig};
use trc_exponent::identities::random_channel;
use trc_exponent::measures::{collective_factor_log, kl_divergence, tilted_min};
use trc_exponent::primal::{alpha_objective, gamma, GridSpec, JointXXPrime};
use trc_exponent::simulate::{gld_posterior_all, Codebook};
use trc_exponent::{ChannelModel, DecoderSpec};

fn channel(seed: u64, nx: usize, ny: usize) -> ChannelModel {
    random_channel(&mut ChaCha8Rng::seed_from_u64(seed), nx, ny)
}

fn distribution(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|a| a / s).collect()
    })
}

fn midpoint_convex(f: impl Fn(f64) -> f64, grid: &[f64], slack: f64) -> Result<(), TestCaseError> {
    for w in grid.windows(3) {
        let (a, b) = (w[0], w[2]);
        let mid = f(0.5 * (a + b));
        prop_assert!(mid <= 0.5 * (f(a) + f(b)) + slack, "at {a}, {b}: {mid}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kl_is_nonnegative(q in distribution(4), p in distribution(4)) {
        prop_assert!(kl_divergence(&q, &p).unwrap() >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn tilted_min_is_a_lower_envelope(
        p in distribution(3),
        f in prop::collection::vec(-3.0f64..3.0, 3),
        qs in prop::collection::vec(distribution(3), 100),
    ) {
        let t = tilted_min(&p, &f).unwrap();
        for q in qs {
            let e: f64 = q.iter().zip(&f).map(|(a, b)| a * b).sum();
            prop_assert!(t <= e + kl_divergence(&q, &p).unwrap() + 1e-12);
        }
    }

    #[test]
    fn collective_factor_is_sandwiched_and_convex(seed in any::<u64>(), nx in 2usize..5, ny in 2usize..5) {
        let m = channel(seed, nx, ny);
        let grid: Vec<f64> = (0..=120).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0)).collect();
        for y in 0..ny {
            let mean: f64 = (0..nx).map(|x| m.p[x] * m.w[x][y].ln()).sum();
            let max = (0..nx).map(|x| m.w[x][y].ln()).fold(f64::NEG_INFINITY, f64::max);
            let f = |l: f64| collective_factor_log(&m, &m.w, y, l).unwrap();
            for &l in &grid {
                let v = f(l);
                prop_assert!(mean - 1e-12 <= v && v <= max + 1e-12);
            }
            midpoint_convex(f, &grid, 1e-9)?;
            let lin: Vec<f64> = (0..=100).map(|i| 0.05 * i as f64 + 0.01).collect();
            midpoint_convex(f, &lin, 1e-9)?;
        }
    }

    #[test]
    fn e0_is_concave_nondecreasing(seed in any::<u64>(), nx in 2usize..5, ny in 2usize..5) {
        let m = channel(seed, nx, ny);
        prop_assert_eq!(gallager_e0(&m, 0.0), 0.0);
        let grid: Vec<f64> = (0..=80).map(|i| 0.05 * i as f64).collect();
        for w in grid.windows(2) {
            prop_assert!(gallager_e0(&m, w[1]) >= gallager_e0(&m, w[0]) - 1e-12);
        }
        midpoint_convex(|r| -gallager_e0(&m, r), &grid, 1e-12)?;
    }

    #[test]
    fn ex_at_one_equals_e0_at_one(seed in any::<u64>(), nx in 2usize..5, ny in 2usize..5) {
        let m = channel(seed, nx, ny);
        prop_assert!((expurgated_ex(&m, 1.0) - gallager_e0(&m, 1.0)).abs() <= 1e-10);
    }

    #[test]
    fn alpha_objective_is_convex(seed in any::<u64>(), q_y in distribution(3), beta in 0.2f64..5.0, r in 0.0f64..0.7) {
        let m = channel(seed, 2, 3);
        let d = DecoderSpec::matched(&m, beta);
        let grid: Vec<f64> = (0..=100).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 100.0)).collect();
        midpoint_convex(|l| alpha_objective(&m, &d, &q_y, r, l), &grid, 1e-9)?;
    }

    #[test]
    fn posterior_sums_to_one(seed in any::<u64>(), beta in 0.01f64..100.0, y in prop::collection::vec(0usize..3, 4)) {
        let m = channel(seed, 3, 3);
        let code = Codebook::new(4, vec![vec![0, 1, 2, 0], vec![1, 1, 1, 1], vec![2, 0, 1, 2]]).unwrap();
        let (post, _) = gld_posterior_all(&code, &DecoderSpec::matched(&m, beta), &y).unwrap();
        prop_assert!((post.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exponent_curves_are_convex_and_agree_above_critical_rate(seed in any::<u64>(), nx in 2usize..4, ny in 2usize..4) {
        let m = channel(seed, nx, ny);
        let c = mutual_information(&m);
        let rc = critical_rates(&m);
        let rates: Vec<f64> = (0..=24).map(|i| c * i as f64 / 24.0).collect();
        let cap = RhoCap::default();
        for w in rates.windows(2) {
            prop_assert!(random_coding_exponent(&m, w[1]).value <= random_coding_exponent(&m, w[0]).value + 1e-12);
        }
        midpoint_convex(|r| random_coding_exponent(&m, r).value, &rates, 1e-9)?;
        let upper: Vec<f64> = rates.iter().copied().filter(|&r| r > 0.1 * c).collect();
        midpoint_convex(|r| sphere_packing_exponent(&m, r, cap).value, &upper, 1e-9)?;
        let ex_rates: Vec<f64> = rates.iter().copied().filter(|&r| r > 0.05 * c).collect();
        midpoint_convex(|r| expurgated_exponent(&m, r, cap).value, &ex_rates, 1e-9)?;
        for &r in rates.iter().filter(|&&r| r >= rc.r_c2) {
            let (er, esp) = (random_coding_exponent(&m, r).value, sphere_packing_exponent(&m, r, cap).value);
            prop_assert!((er - esp).abs() <= 1e-8, "{} vs {} at {}", er, esp, r);
        }
    }

    #[test]
    fn rho_suprema_survive_grid_doubling(seed in any::<u64>(), frac in 0.1f64..0.9) {
        let m = channel(seed, 2, 3);
        let r = frac * mutual_information(&m);
        let coarse = RhoCap::default();
        let fine = RhoCap { grid_points_per_decade: 2 * coarse.grid_points_per_decade, ..coarse };
        let a = sphere_packing_exponent(&m, r, coarse).value;
        let b = sphere_packing_exponent(&m, r, fine).value;
        prop_assert!((a - b).abs() <= 1e-9 || (a.is_infinite() && b.is_infinite()));
        let a = expurgated_exponent(&m, r, coarse).value;
        let b = expurgated_exponent(&m, r, fine).value;
        prop_assert!((a - b).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dual_stays_under_sphere_packing(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let m = channel(seed, 2, 2);
        let r = frac * mutual_information(&m);
        let d = optimize_dual(&m, &DecoderSpec::ml(&m), r, &DualConfig::default()).unwrap();
        let esp = sphere_packing_exponent(&m, r, RhoCap::default()).value;
        prop_assert!(d.value <= esp + 1e-6, "{} > {}", d.value, esp);
        // Self-consistency: the value is no larger than the achiever's λ profile.
        for &(_, g) in &d.diagnostics.lambda_profile {
            prop_assert!(d.value <= g + 1e-9);
        }
    }

    #[test]
    fn dual_is_monotone_in_beta_and_saturates(seed in any::<u64>(), frac in 0.05f64..0.9) {
        let m = channel(seed, 2, 2);
        let r = frac * mutual_information(&m);
        let cfg = DualConfig::default();
        let at = |beta: f64| optimize_dual(&m, &DecoderSpec::matched(&m, beta), r, &cfg).unwrap();
        let vals: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0, f64::INFINITY].iter().map(|&b| at(b).value).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-6, "{:?}", vals);
        }
        let top = at(f64::INFINITY);
        let b0 = top.params.sigma + top.params.tau;
        if b0 > 0.0 && b0.is_finite() {
            prop_assert!((at(b0).value - top.value).abs() <= 1e-6);
        }
    }

    #[test]
    fn gamma_components_are_nonnegative(seed in any::<u64>(), r in 0.0f64..0.5) {
        let m = channel(seed, 2, 2);
        let q = JointXXPrime::product(&[0.5, 0.5]);
        let g = gamma(&m, &DecoderSpec::matched(&m, 1.0), &q, r, GridSpec::default()).unwrap();
        prop_assert!(g >= 0.0);
    }
}
