//! Classical exponents against brute-force linear-domain evaluations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trc_exponent::classical::{
    critical_rates, expurgated_ex, expurgated_exponent, gallager_e0, mutual_information,
    random_coding_exponent, sphere_packing_exponent, RhoCap,
};
use trc_exponent::identities::random_channel;
use trc_exponent::ChannelModel;

fn close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}

fn naive_e0(m: &ChannelModel, rho: f64) -> f64 {
    let s: f64 = (0..m.num_outputs())
        .map(|y| {
            let inner: f64 = (0..m.num_inputs())
                .map(|x| m.p[x] * m.w[x][y].powf(1.0 / (1.0 + rho)))
                .sum();
            inner.powf(1.0 + rho)
        })
        .sum();
    -s.ln()
}

fn naive_ex(m: &ChannelModel, rho: f64) -> f64 {
    let mut s = 0.0;
    for x in 0..m.num_inputs() {
        for xp in 0..m.num_inputs() {
            let b: f64 = (0..m.num_outputs()).map(|y| (m.w[x][y] * m.w[xp][y]).sqrt()).sum();
            s += m.p[x] * m.p[xp] * b.powf(1.0 / rho);
        }
    }
    -rho * s.ln()
}

fn naive_mi(m: &ChannelModel) -> f64 {
    let mut i = 0.0;
    for y in 0..m.num_outputs() {
        let q: f64 = (0..m.num_inputs()).map(|x| m.p[x] * m.w[x][y]).sum();
        for x in 0..m.num_inputs() {
            let j = m.p[x] * m.w[x][y];
            if j > 0.0 {
                i += j * (m.w[x][y] / q).ln();
            }
        }
    }
    i
}

fn scan_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    (0..=n)
        .map(|i| f(lo + (hi - lo) * i as f64 / n as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn channels() -> Vec<ChannelModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut v = vec![ChannelModel::bsc(0.1), ChannelModel::bsc(0.02)];
    for (nx, ny) in [(2, 3), (3, 2), (3, 3), (4, 4)] {
        v.push(random_channel(&mut rng, nx, ny));
    }
    v
}

#[test]
fn bsc_e0_at_one_matches_bhattacharyya_closed_form() {
    let bsc = ChannelModel::bsc(0.1);
    // Σ_y (Σ_x ½√W(y|x))² = (1 + 2√(pq)) / 2 = 0.8.
    let closed = -((1.0 + 2.0 * (0.1f64 * 0.9).sqrt()) / 2.0).ln();
    close(gallager_e0(&bsc, 1.0), closed, 1e-12, "closed form");
    close(gallager_e0(&bsc, 1.0), 0.2231436, 1e-7, "rounded value");
}

#[test]
fn identity_channel_slope_at_one_is_ln2() {
    let id = ChannelModel::noiseless(2);
    let h = 1e-5;
    let slope = (gallager_e0(&id, 1.0 + h) - gallager_e0(&id, 1.0 - h)) / (2.0 * h);
    close(slope, 2f64.ln(), 1e-6, "slope");
    close(critical_rates(&id).r_c2, 2f64.ln(), 1e-6, "r_c2");
}

#[test]
fn e0_and_ex_match_naive_sums() {
    for m in channels() {
        for rho in [0.0, 0.05, 0.3, 1.0, 2.5, 10.0] {
            close(gallager_e0(&m, rho), naive_e0(&m, rho), 1e-12, "E0");
        }
        for rho in [1.0, 1.5, 4.0, 30.0] {
            close(expurgated_ex(&m, rho), naive_ex(&m, rho), 1e-12, "Ex");
        }
        close(mutual_information(&m), naive_mi(&m), 1e-12, "I");
    }
}

#[test]
fn exponent_curves_match_dense_rho_scans() {
    for m in channels() {
        let c = naive_mi(&m);
        for k in 0..=8 {
            let r = c * k as f64 / 8.0;
            let er = scan_max(|rho| naive_e0(&m, rho) - rho * r, 0.0, 1.0, 20_000);
            close(random_coding_exponent(&m, r).value, er, 1e-8, "E_r");
            if r > 0.05 * c {
                let esp = scan_max(|rho| naive_e0(&m, rho) - rho * r, 0.0, 60.0, 200_000);
                let got = sphere_packing_exponent(&m, r, RhoCap::default());
                if !got.truncated {
                    close(got.value, esp, 1e-7, "E_sp");
                }
            }
            if r > 0.02 {
                let eex = scan_max(|rho| naive_ex(&m, rho) - rho * r, 1.0, 60.0, 200_000);
                let got = expurgated_exponent(&m, r, RhoCap::default());
                if got.rho < 50.0 {
                    close(got.value, eex, 1e-7, "E_ex");
                }
            }
        }
    }
}

#[test]
fn bsc_critical_rates() {
    let bsc = ChannelModel::bsc(0.1);
    let rc = critical_rates(&bsc);
    // Ė₀(1) by a naive central difference and Ė_x(1)/2 likewise.
    let h = 1e-5;
    let e0d = (naive_e0(&bsc, 1.0 + h) - naive_e0(&bsc, 1.0 - h)) / (2.0 * h);
    let exd = (naive_ex(&bsc, 1.0 + h) - naive_ex(&bsc, 1.0)) / h;
    close(rc.r_c2, e0d, 1e-8, "r_c2");
    close(rc.r_c1, 0.5 * exd, 1e-5, "r_c1");
    close(rc.r_c2, 0.130812, 1e-6, "r_c2 value");
    close(rc.r_c1, 0.01579, 1e-5, "r_c1 value");
    close(rc.r_c1, rc.r_c1_check, 1e-6, "r_c1 check");
    close(rc.r_c2, rc.r_c2_check, 1e-6, "r_c2 check");
}

#[test]
fn zero_rate_limits() {
    let bsc = ChannelModel::bsc(0.1);
    // ρ → ∞: E_x(ρ) → -Σ PP' ln B and E₀(ρ) → -ln Σ_y Π_x W^{P(x)}.
    let b = 2.0 * (0.1f64 * 0.9).sqrt();
    close(expurgated_exponent(&bsc, 0.0, RhoCap::default()).value, -0.5 * b.ln(), 1e-12, "E_ex(0)");
    close(sphere_packing_exponent(&bsc, 0.0, RhoCap::default()).value, -(b.ln()), 1e-12, "E_sp(0)");
    close(random_coding_exponent(&bsc, 0.0).value, naive_e0(&bsc, 1.0), 1e-12, "E_r(0)");
}
