//! Random test channels and the algebraic identity checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::ChannelModel;
use crate::classical::{expurgated_ex, gallager_e0};
use crate::dual::e1;

/// Random channel with strictly positive entries and a random input
/// distribution.
pub fn random_channel<R: Rng>(rng: &mut R, nx: usize, ny: usize) -> ChannelModel {
    let row = |rng: &mut R, k: usize| {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|a| a / s).collect::<Vec<_>>()
    };
    let w = (0..nx).map(|_| row(rng, ny)).collect();
    let p = row(rng, nx);
    ChannelModel::new(w, p).expect("random rows are stochastic")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub passed: bool,
    /// Largest absolute deviation observed.
    pub worst: f64,
    pub tolerance: f64,
}

fn check(name: &str, deviations: impl IntoIterator<Item = f64>, tolerance: f64) -> IdentityCheck {
    let worst = deviations.into_iter().fold(0.0f64, |a, d| a.max(d));
    IdentityCheck {
        name: name.into(),
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

/// `E_x(1) = E₀(1)` on 20 random channels, `E₁(ϱ,1+ϱ) = E₀(ϱ)` on BSC(0.1)
/// and a random 3×3 channel, and `E₀(0) = 0`.
pub fn identity_suite(seed: u64) -> Vec<IdentityCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels: Vec<ChannelModel> = (0..20)
        .map(|_| {
            let nx = rng.gen_range(2..=4);
            let ny = rng.gen_range(2..=4);
            random_channel(&mut rng, nx, ny)
        })
        .collect();
    let ex_e0 = check(
        "E_x(1) = E0(1) on 20 random channels",
        channels
            .iter()
            .map(|m| (expurgated_ex(m, 1.0) - gallager_e0(m, 1.0)).abs()),
        1e-10,
    );

    let three = random_channel(&mut rng, 3, 3);
    let rhos: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let e1_e0 = check(
        "E1(rho, 1+rho) = E0(rho) on BSC(0.1) and a random 3x3 channel",
        [ChannelModel::bsc(0.1), three].iter().flat_map(|m| {
            rhos.iter()
                .map(move |&r| (e1(m, r, 1.0 + r) - gallager_e0(m, r)).abs())
        }),
        1e-12,
    );

    let zero = check(
        "E0(0) = 0",
        channels
            .iter()
            .chain([ChannelModel::bsc(0.1)].iter())
            .map(|m| gallager_e0(m, 0.0).abs()),
        0.0,
    );
    vec![ex_e0, e1_e0, zero]
}
