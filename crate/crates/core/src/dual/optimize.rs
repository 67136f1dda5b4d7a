use std::cmp::Ordering;

use crate::channel::{validate_channel, ChannelModel, DecoderSpec};
use crate::classical::critical_rates;
use crate::error::{Error, Result};
use crate::search::{golden_min, log_space};

use super::objective::{add_lambda_term, dual_objective, Evaluator};
use super::{DualConfig, DualDiagnostics, DualParams, DualResult, Regime};

/// `λ` values in increasing order (`0` and `∞` at the ends when enabled) with
/// `ln C(·, λ)` cached.
struct LambdaTable {
    values: Vec<f64>,
    ln_c: Vec<Vec<f64>>,
    /// Indices of the finite positive grid points.
    log_range: std::ops::Range<usize>,
    /// Visit order: log points by distance from `λ = 1.5`, then endpoints.
    order: Vec<usize>,
}

impl LambdaTable {
    fn new(ev: &Evaluator, cfg: &DualConfig) -> Self {
        let g = &cfg.lambda_grid;
        let mut values = Vec::new();
        if g.include_zero {
            values.push(0.0);
        }
        let start = values.len();
        values.extend(log_space(g.lo, g.hi, g.points.max(2)));
        let end = values.len();
        if g.include_infinity {
            values.push(f64::INFINITY);
        }
        let ln_c = values.iter().map(|&l| ev.ln_c(l)).collect();
        let mut order: Vec<usize> = (start..end).collect();
        let dist = |i: usize| (values[i] / 1.5).ln().abs();
        order.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
        order.extend((0..start).chain(end..values.len()));
        LambdaTable {
            values,
            ln_c,
            log_range: start..end,
            order,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    phi: f64,
    params: DualParams,
}

fn lex_less(a: &[f64; 5], b: &[f64; 5]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

fn better(c: &Candidate, incumbent: &Option<Candidate>) -> bool {
    match incumbent {
        None => true,
        Some(b) => c.phi > b.phi || (c.phi == b.phi && lex_less(&c.params.key(), &b.params.key())),
    }
}

struct Search<'a> {
    ev: Evaluator,
    lam: LambdaTable,
    cfg: &'a DualConfig,
    beta: f64,
    best: Option<Candidate>,
    best_ln_c: Vec<f64>,
    blown: bool,
    pairs: usize,
}

/// Local minima of `g` over the log grid (plateaus collapsed), as grid indices.
fn local_minima(gs: &[f64], range: std::ops::Range<usize>) -> Vec<usize> {
    let idx: Vec<usize> = range.collect();
    let mut out = Vec::new();
    let n = idx.len();
    let tol = |v: f64| 1e-12 * (1.0 + v.abs());
    for k in 0..n {
        let v = gs[idx[k]];
        // Walk past equal neighbours so a flat bottom counts once.
        let mut l = k;
        while l > 0 && (gs[idx[l - 1]] - v).abs() <= tol(v) {
            l -= 1;
        }
        if l != k {
            continue;
        }
        let mut r = k;
        while r + 1 < n && (gs[idx[r + 1]] - v).abs() <= tol(v) {
            r += 1;
        }
        let left_ok = l == 0 || gs[idx[l - 1]] > v;
        let right_ok = r + 1 == n || gs[idx[r + 1]] > v;
        if left_ok && right_ok {
            out.push(idx[k]);
        }
    }
    out
}

impl<'a> Search<'a> {
    /// `g(λ) = sup_{θ,ζ}` at one `λ`, returning `(g, θ, ζ)`.
    fn g(&mut self, sigma: f64, tau: f64, lambda: f64, ln_c: &[f64]) -> (f64, f64, f64) {
        let inner = self.ev.inner(sigma, tau, ln_c);
        if inner.blown && lambda == f64::INFINITY {
            // C(y,∞) = 0 somewhere; the limit follows the sign of R - M.
            if self.ev.rate < self.ev.infinity_slope(sigma, tau) {
                self.blown = true;
                return (f64::NEG_INFINITY, 0.0, 1.0);
            }
            return (f64::INFINITY, 0.0, 1.0);
        }
        self.blown |= inner.blown;
        let (v, th, ze) = self.ev.sup_theta_zeta(&inner, self.cfg.theta_cap, self.cfg.zeta_cap);
        (add_lambda_term(v, self.ev.lambda_term(lambda, tau)), th, ze)
    }

    /// `φ(σ,τ) = inf_λ g(λ)`. With `prune`, gives up (returns `None`) as soon
    /// as some `g(λ)` falls below the incumbent.
    fn phi(&mut self, sigma: f64, tau: f64, prune: bool) -> Option<(Candidate, Vec<f64>)> {
        self.pairs += 1;
        let bound = if prune {
            self.best.map(|b| b.phi)
        } else {
            None
        };
        let below = |g: f64| bound.is_some_and(|b| g < b);
        if tau == 0.0 {
            let zeros = vec![0.0; self.ev.num_outputs()];
            let (g, th, ze) = self.g(sigma, 0.0, 0.0, &zeros);
            if below(g) {
                return None;
            }
            let c = Candidate {
                phi: g,
                params: DualParams::new(sigma, 0.0, 0.0, th, ze),
            };
            return Some((c, Vec::new()));
        }

        let mut arg = (f64::INFINITY, 0.0, 0.0, 1.0);
        let consider = |g: f64, l: f64, th: f64, ze: f64, arg: &mut (f64, f64, f64, f64)| {
            if g < arg.0 || (g == arg.0 && l < arg.1) {
                *arg = (g, l, th, ze);
            }
        };

        if prune {
            if let Some(b) = self.best {
                if b.params.tau > 0.0 {
                    let ln_c = std::mem::take(&mut self.best_ln_c);
                    let (g, th, ze) = self.g(sigma, tau, b.params.lambda, &ln_c);
                    self.best_ln_c = ln_c;
                    if below(g) {
                        return None;
                    }
                    consider(g, b.params.lambda, th, ze, &mut arg);
                }
            }
        }

        let mut gs = vec![f64::NAN; self.lam.values.len()];
        let order = self.lam.order.clone();
        for i in order {
            let ln_c = std::mem::take(&mut self.lam.ln_c[i]);
            let l = self.lam.values[i];
            let (g, th, ze) = self.g(sigma, tau, l, &ln_c);
            self.lam.ln_c[i] = ln_c;
            gs[i] = g;
            if below(g) {
                return None;
            }
            consider(g, l, th, ze, &mut arg);
        }

        // Golden refinement in ln λ around the grid's local minima, best first.
        let range = self.lam.log_range.clone();
        let mut minima = local_minima(&gs, range.clone());
        minima.sort_by(|&a, &b| gs[a].total_cmp(&gs[b]));
        minima.truncate(4);
        for i in minima {
            let vals = &self.lam.values;
            let lo = if i == range.start {
                vals[i].ln() - std::f64::consts::LN_10
            } else {
                vals[i - 1].ln()
            };
            let hi = if i + 1 == range.end {
                vals[i].ln() + std::f64::consts::LN_10
            } else {
                vals[i + 1].ln()
            };
            let mut local = (f64::INFINITY, 0.0, 0.0, 1.0);
            let _ = golden_min(
                |u| {
                    let l = u.exp();
                    let ln_c = self.ev.ln_c(l);
                    let (g, th, ze) = self.g(sigma, tau, l, &ln_c);
                    if g < local.0 {
                        local = (g, l, th, ze);
                    }
                    g
                },
                lo,
                hi,
                1e-10,
            );
            if below(local.0) {
                return None;
            }
            consider(local.0, local.1, local.2, local.3, &mut arg);
        }

        let c = Candidate {
            phi: arg.0,
            params: DualParams::new(sigma, tau, arg.1, arg.2, arg.3),
        };
        Some((c, gs))
    }

    fn visit(&mut self, sigma: f64, tau: f64) {
        let (sigma, tau) = self.clip(sigma, tau);
        if let Some(b) = self.best {
            if b.params.sigma == sigma && b.params.tau == tau {
                return;
            }
        }
        if let Some((c, _)) = self.phi(sigma, tau, true) {
            if better(&c, &self.best) {
                if c.params.tau > 0.0 {
                    self.best_ln_c = self.ev.ln_c(c.params.lambda);
                }
                self.best = Some(c);
            }
        }
    }

    fn sigma_max(&self) -> f64 {
        self.beta.min(self.cfg.sigma_tau_grid.cap)
    }

    fn clip(&self, sigma: f64, tau: f64) -> (f64, f64) {
        let s = sigma.clamp(0.0, self.sigma_max());
        let t_max = (self.beta - s).min(self.cfg.sigma_tau_grid.cap).max(0.0);
        (s, tau.clamp(0.0, t_max))
    }

    /// Grid spacing at `v` on the `σ/τ` grid.
    fn spacing(&self, v: f64) -> f64 {
        let g = &self.cfg.sigma_tau_grid;
        if v < g.linear_max || g.points_per_octave == 0 {
            g.linear_step
        } else {
            v * (2f64.powf(1.0 / g.points_per_octave as f64) - 1.0)
        }
    }
}

/// Maximizes the dual bound over `(σ, τ)` with the inner order
/// `inf_λ sup_θ sup_ζ` kept intact for every candidate.
pub fn optimize_dual(
    model: &ChannelModel,
    decoder: &DecoderSpec,
    rate: f64,
    config: &DualConfig,
) -> Result<DualResult> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let violations = validate_channel(model);
    if !violations.is_empty() {
        return Err(Error::InvalidChannel(violations.iter().map(|v| v.to_string()).collect()));
    }
    let mut warnings = decoder.check(model)?;
    if config.theta_cap < 0.0 || !(config.zeta_cap >= 1.0) || config.lambda_grid.points == 0 {
        return Err(Error::Domain("invalid dual search configuration".into()));
    }

    let ev = Evaluator::new(model, decoder, rate);
    let lam = LambdaTable::new(&ev, config);
    let mut s = Search {
        ev,
        lam,
        cfg: config,
        beta: decoder.beta,
        best: None,
        best_ln_c: Vec::new(),
        blown: false,
        pairs: 0,
    };

    for &(sg, tg) in &config.seeds {
        s.visit(sg, tg);
    }
    s.visit(0.5, 0.0);
    let sigmas = config.sigma_tau_grid.points(s.sigma_max());
    for &sg in &sigmas {
        s.visit(sg, 0.0);
    }
    for &sg in &sigmas {
        let t_max = (s.beta - sg).max(0.0);
        for tg in config.sigma_tau_grid.points(t_max) {
            if tg > 0.0 {
                s.visit(sg, tg);
            }
        }
    }

    // Zoom grids around the incumbent.
    let b0 = s.best.expect("at least one candidate").params;
    let mut hs = s.spacing(b0.sigma);
    let mut ht = s.spacing(b0.tau);
    for _ in 0..config.refine_rounds {
        let c = s.best.unwrap().params;
        for i in -2..=2 {
            for j in -2..=2 {
                s.visit(c.sigma + 0.5 * i as f64 * hs, c.tau + 0.5 * j as f64 * ht);
            }
        }
        hs /= 4.0;
        ht /= 4.0;
    }

    // Compass polish.
    let mut step = 0.5 * hs.max(ht);
    let mut iters = 0;
    while step >= config.polish_tol && iters < 400 {
        iters += 1;
        let c = s.best.unwrap().params;
        for (ds, dt) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            s.visit(c.sigma + ds, c.tau + dt);
        }
        let n = s.best.unwrap().params;
        if n.sigma == c.sigma && n.tau == c.tau {
            step /= 2.0;
        }
    }

    let best = s.best.unwrap();
    let p = best.params;

    let mut lambda_profile = Vec::new();
    let mut unimodal = true;
    if config.unimodality_check && p.tau > 0.0 {
        if let Some((_, gs)) = s.phi(p.sigma, p.tau, false) {
            let range = s.lam.log_range.clone();
            unimodal = local_minima(&gs, range).len() <= 1;
            lambda_profile = s.lam.values.iter().copied().zip(gs).collect();
        }
    }
    if !unimodal {
        warnings.push("lambda profile has several local minima; value is the best refined minimum".into());
    }
    if s.blown {
        warnings.push("zero metric entries under a positive exponent gave -inf objective terms".into());
    }
    if p.theta >= config.theta_cap {
        warnings.push(format!("theta at its cap {}", config.theta_cap));
    }
    if p.zeta >= config.zeta_cap {
        warnings.push(format!("zeta at its cap {}", config.zeta_cap));
    }

    let value = dual_objective(model, decoder, &p, rate);
    if (value - best.phi).abs() > 1e-10 * (1.0 + value.abs()) {
        warnings.push(format!(
            "achiever recomputation differs: search {} vs direct {}",
            best.phi, value
        ));
    }

    let regime_hint = if decoder.is_matched_ml(model) {
        let rc = critical_rates(model);
        if rate <= rc.r_c1 {
            Regime::Low
        } else if rate <= rc.r_c2 {
            Regime::Moderate
        } else {
            Regime::High
        }
    } else {
        Regime::Unknown
    };

    Ok(DualResult {
        value,
        params: p,
        regime_hint,
        diagnostics: DualDiagnostics {
            lambda_profile,
            unimodal,
            warnings,
            pairs_evaluated: s.pairs,
        },
    })
}
