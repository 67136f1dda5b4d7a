use crate::channel::{ChannelModel, DecoderSpec};
use crate::logdomain::{lse, scale};
use crate::measures::LogTables;
use crate::search::golden_max;

use super::DualParams;

/// Running log-sum-exp accumulator.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    fn new() -> Self {
        Lse {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, t: f64) {
        if t == f64::NEG_INFINITY {
            return;
        }
        if t > self.max {
            self.sum = self.sum * (self.max - t).exp() + 1.0;
            self.max = t;
        } else {
            self.sum += (t - self.max).exp();
        }
    }

    fn value(self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            self.max
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Precomputed tables for one `(model, decoder, R)` triple.
pub(crate) struct Evaluator {
    tables: LogTables,
    pub rate: f64,
    /// `ln P(x)` over the support.
    ln_p: Vec<f64>,
    /// Support inputs.
    support: Vec<usize>,
    /// For each support input, `(y, ln W(y|x))` with `W(y|x) > 0`.
    rows: Vec<Vec<(usize, f64)>>,
}

/// Inner log-sums `L(x,x')` over the support, row-major, and whether some
/// entry hit a zero denominator (`+∞`).
pub(crate) struct InnerLogs {
    pub l: Vec<f64>,
    pub blown: bool,
}

impl Evaluator {
    pub fn new(model: &ChannelModel, decoder: &DecoderSpec, rate: f64) -> Self {
        let tables = LogTables::new(model, &decoder.w_tilde);
        let support = tables.support.clone();
        let ln_p = support.iter().map(|&x| tables.ln_p[x]).collect();
        let rows = (0..tables.nx)
            .map(|x| {
                (0..tables.ny)
                    .filter(|&y| tables.ln_w(x, y) > f64::NEG_INFINITY)
                    .map(|y| (y, tables.ln_w(x, y)))
                    .collect()
            })
            .collect();
        Evaluator {
            tables,
            rate,
            ln_p,
            support,
            rows,
        }
    }

    pub fn num_outputs(&self) -> usize {
        self.tables.ny
    }

    /// `ln C(y, λ)` for every output.
    pub fn ln_c(&self, lambda: f64) -> Vec<f64> {
        (0..self.tables.ny)
            .map(|y| self.tables.collective(y, lambda))
            .collect()
    }

    /// `ln Σ_y W(y|x) [W̃(y|x')/W̃(y|x)]^σ [W̃(y|x')/C(y)]^τ` for arbitrary
    /// inputs (not restricted to the support).
    pub fn inner_pair(&self, x: usize, xp: usize, sigma: f64, tau: f64, ln_c: &[f64]) -> f64 {
        let st = sigma + tau;
        let mut acc = Lse::new();
        for &(y, lw) in &self.rows[x] {
            let num = scale(st, self.tables.ln_m(xp, y));
            if num == f64::NEG_INFINITY {
                continue;
            }
            let den = scale(sigma, self.tables.ln_m(x, y)) + scale(tau, ln_c[y]);
            if den == f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            acc.push(lw + num - den);
        }
        acc.value()
    }

    /// Growth rate `M` of `-ln C(y,λ)/λ` over the outputs that reach the
    /// objective. As `λ → ∞` the objective behaves like `λτ(R - M)`.
    pub fn infinity_slope(&self, sigma: f64, tau: f64) -> f64 {
        let st = sigma + tau;
        let mut m = 0.0f64;
        for y in 0..self.tables.ny {
            let reached = self.support.iter().any(|&x| {
                self.rows[x].iter().any(|&(yy, _)| yy == y)
                    && scale(sigma, self.tables.ln_m(x, y)) > f64::NEG_INFINITY
                    && self
                        .support
                        .iter()
                        .any(|&xp| scale(st, self.tables.ln_m(xp, y)) > f64::NEG_INFINITY)
            });
            if !reached {
                continue;
            }
            let q: f64 = self
                .support
                .iter()
                .filter(|&&x| self.tables.ln_m(x, y) > f64::NEG_INFINITY)
                .map(|&x| self.tables.p[x])
                .sum();
            m = m.max(-q.ln());
        }
        m
    }

    pub fn inner(&self, sigma: f64, tau: f64, ln_c: &[f64]) -> InnerLogs {
        let n = self.support.len();
        let mut l = Vec::with_capacity(n * n);
        let mut blown = false;
        for &x in &self.support {
            for &xp in &self.support {
                let v = self.inner_pair(x, xp, sigma, tau, ln_c);
                blown |= v == f64::INFINITY;
                l.push(v);
            }
        }
        InnerLogs { l, blown }
    }

    /// `λτR`, with `0·∞ = 0` when `τR = 0`.
    pub fn lambda_term(&self, lambda: f64, tau: f64) -> f64 {
        if tau == 0.0 || self.rate == 0.0 {
            0.0
        } else {
            lambda * tau * self.rate
        }
    }

    /// `V_x = (1+θ) ln Σ_x' P(x') e^{L(x,x')/(1+θ)}`, or the `θ → ∞` limit
    /// `Σ_x' P(x') L(x,x')`.
    fn v_values(&self, l: &[f64], theta: f64) -> Vec<f64> {
        let n = self.support.len();
        (0..n)
            .map(|i| {
                let row = &l[i * n..(i + 1) * n];
                if theta == f64::INFINITY {
                    let mut s = 0.0;
                    for (j, &lij) in row.iter().enumerate() {
                        if lij == f64::NEG_INFINITY {
                            return f64::NEG_INFINITY;
                        }
                        s += self.ln_p[j].exp() * lij;
                    }
                    s
                } else {
                    let k = 1.0 + theta;
                    let mut acc = Lse::new();
                    for (j, &lij) in row.iter().enumerate() {
                        acc.push(self.ln_p[j] + lij / k);
                    }
                    k * acc.value()
                }
            })
            .collect()
    }

    /// `ψ(s) = ln Σ_x P(x) e^{s V_x}` with its first two derivatives.
    fn psi(&self, v: &[f64], s: f64) -> (f64, f64, f64) {
        let a: Vec<f64> = self
            .ln_p
            .iter()
            .zip(v)
            .map(|(&lp, &vx)| lp + scale(s, vx))
            .collect();
        let psi = lse(a.iter().copied());
        if !psi.is_finite() {
            return (psi, 0.0, 0.0);
        }
        let (mut d1, mut d2) = (0.0, 0.0);
        for (&ai, &vx) in a.iter().zip(v) {
            if ai == f64::NEG_INFINITY {
                continue;
            }
            let w = (ai - psi).exp();
            d1 += w * vx;
            d2 += w * vx * vx;
        }
        (psi, d1, (d2 - d1 * d1).max(0.0))
    }

    /// Objective without the `λτR` term at explicit `(θ, ζ)`, either of which
    /// may be infinite.
    pub fn objective_at(&self, l: &[f64], theta: f64, zeta: f64) -> f64 {
        if l.contains(&f64::INFINITY) {
            return f64::NEG_INFINITY;
        }
        let r = self.rate;
        let v = self.v_values(l, theta);
        let penalty = |c: f64| if r == 0.0 { 0.0 } else { c * r };
        if zeta == f64::INFINITY {
            // -ζ ψ(1/ζ) → -ψ'(0) = -Σ P(x) V_x.
            let mut mean = 0.0;
            for (&lp, &vx) in self.ln_p.iter().zip(&v) {
                if vx == f64::NEG_INFINITY {
                    return f64::INFINITY;
                }
                mean += lp.exp() * vx;
            }
            return -mean - penalty(zeta + theta);
        }
        let (psi, _, _) = self.psi(&v, 1.0 / zeta);
        -zeta * psi - penalty(zeta + theta)
    }

    /// `sup_{ζ ∈ [1+θ, cap]}` for fixed `V`, returning `(value, ζ)` where the
    /// value excludes `-θR` and `λτR`.
    ///
    /// With `s = 1/ζ` the derivative in `ζ` is `K(s) - R`, `K(s) = sψ'(s) - ψ(s)`,
    /// and `K` is nondecreasing in `s`.
    fn zeta_stage(&self, v: &[f64], theta: f64, zeta_cap: f64) -> (f64, f64) {
        let r = self.rate;
        let s0 = 1.0 / (1.0 + theta);
        let smin = (1.0 / zeta_cap).min(s0);
        let k_of = |s: f64| {
            let (psi, d1, d2) = self.psi(v, s);
            (psi, s * d1 - psi, s * d2)
        };
        let value = |s: f64, psi: f64| -(psi + r) / s;
        let (psi0, k0, _) = k_of(s0);
        if psi0 == f64::NEG_INFINITY {
            return (f64::INFINITY, 1.0 + theta);
        }
        if k0 <= r || smin == s0 {
            return (value(s0, psi0), 1.0 + theta);
        }
        let (psim, km, _) = k_of(smin);
        if km >= r {
            return (value(smin, psim), zeta_cap);
        }
        // Safeguarded Newton on K(s) = R over [smin, s0].
        let (mut lo, mut hi) = (smin, s0);
        let mut s = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (_, k, dk) = k_of(s);
            if k < r {
                lo = s;
            } else {
                hi = s;
            }
            if (k - r).abs() <= 1e-15 * r.max(1.0) || hi - lo <= 1e-15 * hi {
                break;
            }
            let newton = if dk > 0.0 { s - (k - r) / dk } else { f64::NAN };
            s = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let (psi, _, _) = k_of(s);
        (value(s, psi), 1.0 / s)
    }

    fn h_theta(&self, l: &[f64], theta: f64, zeta_cap: f64) -> (f64, f64) {
        let v = self.v_values(l, theta);
        let (val, zeta) = self.zeta_stage(&v, theta, zeta_cap);
        let pen = if self.rate == 0.0 { 0.0 } else { theta * self.rate };
        (val - pen, zeta)
    }

    /// `sup_{θ ∈ [0, cap]} sup_{ζ ∈ [1+θ, ζ_cap]}` of the objective without
    /// the `λτR` term. Returns `(value, θ, ζ)`.
    ///
    /// The objective is jointly concave in `(θ, ζ)`, so the partial maximum
    /// over `ζ` is concave in `θ`; the search runs on `u = ln(1+θ)`.
    pub fn sup_theta_zeta(&self, inner: &InnerLogs, theta_cap: f64, zeta_cap: f64) -> (f64, f64, f64) {
        if inner.blown {
            return (f64::NEG_INFINITY, 0.0, 1.0);
        }
        let l = &inner.l;
        let (h0, z0) = self.h_theta(l, 0.0, zeta_cap);
        if theta_cap <= 0.0 || !h0.is_finite() {
            return (h0, 0.0, z0);
        }
        const EPS_U: f64 = 1e-7;
        let u_cap = theta_cap.ln_1p();
        let theta_of = |u: f64| u.exp_m1();
        let (he, _) = self.h_theta(l, theta_of(EPS_U), zeta_cap);
        if he <= h0 {
            return (h0, 0.0, z0);
        }
        let (hc, zc) = self.h_theta(l, theta_cap, zeta_cap);
        let (hb, _) = self.h_theta(l, theta_of(u_cap - EPS_U), zeta_cap);
        if hc >= hb {
            return (hc, theta_cap, zc);
        }
        let (u, hu) = golden_max(|u| self.h_theta(l, theta_of(u), zeta_cap).0, 0.0, u_cap, 1e-9);
        let mut best = (h0, 0.0, z0);
        if hu > best.0 {
            let th = theta_of(u);
            let (val, z) = self.h_theta(l, th, zeta_cap);
            best = (val, th, z);
        }
        if hc > best.0 {
            best = (hc, theta_cap, zc);
        }
        best
    }
}

/// `a + b` where `a = -∞` absorbs `b = +∞` (a zero-metric blow-up keeps the
/// bound trivially valid).
pub(crate) fn add_lambda_term(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        a
    } else {
        a + b
    }
}

/// Log of the inner sum over `y` for the input pair `(x, x')`.
pub fn inner_sum_log(
    model: &ChannelModel,
    decoder: &DecoderSpec,
    x: usize,
    xp: usize,
    params: &DualParams,
) -> f64 {
    let ev = Evaluator::new(model, decoder, 0.0);
    let ln_c = if params.tau == 0.0 {
        vec![0.0; ev.num_outputs()]
    } else {
        ev.ln_c(params.lambda)
    };
    ev.inner_pair(x, xp, params.sigma, params.tau, &ln_c)
}

/// The dual objective at explicit parameters. `θ = ∞` and `ζ = ∞` are taken
/// as limits.
pub fn dual_objective(model: &ChannelModel, decoder: &DecoderSpec, params: &DualParams, rate: f64) -> f64 {
    let ev = Evaluator::new(model, decoder, rate);
    let ln_c = if params.tau == 0.0 {
        vec![0.0; ev.num_outputs()]
    } else {
        ev.ln_c(params.lambda)
    };
    let inner = ev.inner(params.sigma, params.tau, &ln_c);
    let base = ev.objective_at(&inner.l, params.theta, params.zeta);
    add_lambda_term(base, ev.lambda_term(params.lambda, params.tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn inner_sum_examples() {
        let bsc = ChannelModel::bsc(0.1);
        let dec = DecoderSpec::ml(&bsc);
        let zero = DualParams::new(0.0, 0.0, 1.0, 0.0, 1.0);
        for x in 0..2 {
            for xp in 0..2 {
                close(inner_sum_log(&bsc, &dec, x, xp, &zero), 0.0, 1e-15);
            }
        }
        let half = DualParams::new(0.5, 0.0, 1.0, 0.0, 1.0);
        close(inner_sum_log(&bsc, &dec, 0, 1, &half), 0.6f64.ln(), 1e-14);
        let any = DualParams::new(1.7, 0.0, 1.0, 0.0, 1.0);
        close(inner_sum_log(&bsc, &dec, 1, 1, &any), 0.0, 1e-15);
    }

    #[test]
    fn objective_examples() {
        let bsc = ChannelModel::bsc(0.1);
        let dec = DecoderSpec::ml(&bsc);
        let p = DualParams::new(0.5, 0.0, 0.0, 0.0, 1.0);
        close(dual_objective(&bsc, &dec, &p, 0.0), -(0.8f64.ln()), 1e-12);
        let z = DualParams::new(0.0, 0.0, 3.0, 0.0, 1.0);
        for r in [0.0, 0.1, 0.4] {
            close(dual_objective(&bsc, &dec, &z, r), -r, 1e-15);
        }
        // Third-regime assignment at ϱ = 1 has τ = 0.
        let p3 = DualParams::new(0.5, 0.0, 2.0, 0.0, 1.0);
        close(dual_objective(&bsc, &dec, &p3, 0.05), -(0.8f64.ln()) - 0.05, 1e-12);
    }

    #[test]
    fn infinite_theta_zeta_limit_is_expurgated_limit() {
        let bsc = ChannelModel::bsc(0.1);
        let dec = DecoderSpec::ml(&bsc);
        let p = DualParams::new(0.5, 0.0, 0.0, f64::INFINITY, f64::INFINITY);
        close(dual_objective(&bsc, &dec, &p, 0.0), -0.5 * 0.6f64.ln(), 1e-12);
    }

    #[test]
    fn zeta_stage_matches_scan() {
        let bsc = ChannelModel::bsc(0.1);
        let dec = DecoderSpec::ml(&bsc);
        for rate in [0.0, 0.01, 0.05, 0.2] {
            let ev = Evaluator::new(&bsc, &dec, rate);
            let ln_c = ev.ln_c(1.3);
            let inner = ev.inner(0.4, 0.2, &ln_c);
            let theta = 2.5;
            let v = ev.v_values(&inner.l, theta);
            let (val, zeta) = ev.zeta_stage(&v, theta, 64.0);
            let mut scan = f64::NEG_INFINITY;
            for i in 0..=20_000 {
                let z = 3.5 + (64.0 - 3.5) * i as f64 / 20_000.0;
                scan = scan.max(ev.objective_at(&inner.l, theta, z) + theta * rate);
            }
            assert!(val >= scan - 1e-9, "rate {rate}: {val} < {scan}");
            close(val, ev.objective_at(&inner.l, theta, zeta) + theta * rate, 1e-12);
        }
    }

    #[test]
    fn theta_zeta_sup_matches_scan() {
        let z = ChannelModel::z_channel(0.3);
        let dec = DecoderSpec::ml(&z);
        for rate in [0.0, 0.03, 0.1] {
            let ev = Evaluator::new(&z, &dec, rate);
            let ln_c = ev.ln_c(0.8);
            let inner = ev.inner(0.6, 0.1, &ln_c);
            let (val, th, ze) = ev.sup_theta_zeta(&inner, 32.0, 64.0);
            close(val, ev.objective_at(&inner.l, th, ze), 1e-12);
            let mut scan = f64::NEG_INFINITY;
            for i in 0..=200 {
                let theta = 32.0 * (i as f64 / 200.0).powi(2);
                for j in 0..=200 {
                    let zeta = 1.0 + theta + (63.0 - theta) * (j as f64 / 200.0).powi(2);
                    scan = scan.max(ev.objective_at(&inner.l, theta, zeta));
                }
            }
            assert!(val >= scan - 1e-9, "rate {rate}: {val} < {scan}");
        }
    }
}
