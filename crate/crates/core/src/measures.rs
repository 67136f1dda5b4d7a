//! Information measures and the tilted power-mean kernels.
//!
//! Zero conventions: `0 · ln(0/·) = 0`; a term with positive mass against a
//! zero reference makes a divergence `+∞`; metric entries equal to zero
//! contribute nothing to `Σ_x P(x) W̃(y|x)^{1/r}`.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::logdomain::{ln_prob, lse};

fn same_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}

/// `D(q‖p) = Σ q ln(q/p)`.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> Result<f64> {
    same_len("divergence arguments", q.len(), p.len())?;
    let mut d = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi <= 0.0 {
            continue;
        }
        if pi <= 0.0 {
            return Ok(f64::INFINITY);
        }
        d += qi * (qi / pi).ln();
    }
    // Rounding can leave a tiny negative value for q ≈ p.
    Ok(d.max(0.0))
}

/// `D(Q_{Y|X} ‖ W | Q_X) = Σ_x Q_X(x) D(Q(·|x) ‖ W(·|x))`.
pub fn weighted_conditional_divergence(
    q_y_given_x: &[Vec<f64>],
    w: &[Vec<f64>],
    q_x: &[f64],
) -> Result<f64> {
    same_len("conditional rows", w.len(), q_y_given_x.len())?;
    same_len("conditioning distribution", w.len(), q_x.len())?;
    let mut total = 0.0;
    for ((qr, wr), &weight) in q_y_given_x.iter().zip(w).zip(q_x) {
        let d = kl_divergence(qr, wr)?;
        if weight > 0.0 {
            total += weight * d;
        }
    }
    Ok(total)
}

/// Marginals `(Q_X, Q_X')` of a joint distribution `q[x][x']`.
pub fn marginals(q_joint: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = q_joint.first().map_or(0, Vec::len);
    let mut qx = vec![0.0; q_joint.len()];
    let mut qxp = vec![0.0; n];
    for (x, row) in q_joint.iter().enumerate() {
        for (xp, &v) in row.iter().enumerate() {
            qx[x] += v;
            qxp[xp] += v;
        }
    }
    (qx, qxp)
}

/// `J_Q(X;X') = E_Q ln[Q_{X'|X}(X'|X)/P(X')] = I_Q(X;X') + D(Q_{X'}‖P)`.
pub fn j_divergence(q_joint: &[Vec<f64>], p: &[f64]) -> Result<f64> {
    let (qx, _) = marginals(q_joint);
    let mut j = 0.0;
    for (x, row) in q_joint.iter().enumerate() {
        same_len("joint distribution columns", p.len(), row.len())?;
        for (xp, &v) in row.iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            if p[xp] <= 0.0 {
                return Ok(f64::INFINITY);
            }
            j += v * (v / (qx[x] * p[xp])).ln();
        }
    }
    Ok(j)
}

/// Mutual information `I_Q(X;X')` of a joint distribution.
pub fn joint_mutual_information(q_joint: &[Vec<f64>]) -> f64 {
    let (qx, qxp) = marginals(q_joint);
    let mut i = 0.0;
    for (x, row) in q_joint.iter().enumerate() {
        for (xp, &v) in row.iter().enumerate() {
            if v > 0.0 {
                i += v * (v / (qx[x] * qxp[xp])).ln();
            }
        }
    }
    i.max(0.0)
}

/// `min_Q [D(Q‖P) + E_Q f] = -ln Σ_x P(x) e^{-f(x)}`.
pub fn tilted_min(p: &[f64], f: &[f64]) -> Result<f64> {
    same_len("tilt vector", p.len(), f.len())?;
    let terms: Vec<f64> = p
        .iter()
        .zip(f)
        .filter(|(&px, _)| px > 0.0)
        .map(|(&px, &fx)| px.ln() - fx)
        .collect();
    Ok(-lse(terms.iter().copied()))
}

/// Log tables of a channel, its metric, and the input distribution, laid out
/// for the hot loops.
#[derive(Debug, Clone)]
pub struct LogTables {
    pub nx: usize,
    pub ny: usize,
    /// Inputs with `P(x) > 0`.
    pub support: Vec<usize>,
    pub p: Vec<f64>,
    pub ln_p: Vec<f64>,
    /// `ln W(y|x)` at `x * ny + y`.
    pub ln_w: Vec<f64>,
    /// `ln W̃(y|x)` at `x * ny + y`.
    pub ln_m: Vec<f64>,
}

impl LogTables {
    pub fn new(model: &ChannelModel, metric: &[Vec<f64>]) -> Self {
        let nx = model.num_inputs();
        let ny = model.num_outputs();
        let flat = |m: &[Vec<f64>]| -> Vec<f64> {
            m.iter().flat_map(|r| r.iter().map(|&v| ln_prob(v))).collect()
        };
        LogTables {
            nx,
            ny,
            support: (0..nx).filter(|&x| model.p[x] > 0.0).collect(),
            p: model.p.clone(),
            ln_p: model.p.iter().map(|&v| ln_prob(v)).collect(),
            ln_w: flat(&model.w),
            ln_m: flat(metric),
        }
    }

    #[inline]
    pub fn ln_w(&self, x: usize, y: usize) -> f64 {
        self.ln_w[x * self.ny + y]
    }

    #[inline]
    pub fn ln_m(&self, x: usize, y: usize) -> f64 {
        self.ln_m[x * self.ny + y]
    }

    /// `A(y, r) = ln Σ_x P(x) W̃(y|x)^{1/r}` over the metric table.
    pub fn a_value(&self, y: usize, r: f64) -> f64 {
        debug_assert!(r > 0.0);
        ln_mean_exp(
            self.support.iter().map(|&x| (self.p[x], self.ln_m(x, y))),
            1.0 / r,
        )
    }

    /// `ln [Σ_x P(x) W̃(y|x)^{1/λ}]^λ` with the analytic limits at `λ = 0`
    /// (largest metric entry on the support of `P`) and `λ = ∞`
    /// (`Σ_x P(x) ln W̃(y|x)`).
    pub fn collective(&self, y: usize, lambda: f64) -> f64 {
        if lambda == 0.0 {
            self.support
                .iter()
                .map(|&x| self.ln_m(x, y))
                .fold(f64::NEG_INFINITY, f64::max)
        } else if lambda == f64::INFINITY {
            let mut s = 0.0;
            for &x in &self.support {
                let l = self.ln_m(x, y);
                if l == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                s += self.p[x] * l;
            }
            s
        } else {
            let a = self.a_value(y, lambda);
            if a == f64::NEG_INFINITY {
                a
            } else {
                lambda * a
            }
        }
    }
}

/// `ln Σ_i w_i e^{s·l_i}` over pairs `(w_i, l_i)` with `w_i > 0`.
///
/// When every `l_i` is finite and `|s·l_i|` is small the sum is formed as
/// `ln_1p((Σw - 1) + Σ w (e^{s l} - 1))`, which keeps relative precision for
/// results near zero (large `r` in `A(y, r)`).
pub fn ln_mean_exp<I>(pairs: I, s: f64) -> f64
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let mut small = true;
    for (_, l) in pairs.clone() {
        if !l.is_finite() || (s * l).abs() >= 0.5 {
            small = false;
            break;
        }
    }
    if small {
        let mut acc = -1.0;
        let mut tilt = 0.0;
        for (w, l) in pairs {
            acc += w;
            tilt += w * (s * l).exp_m1();
        }
        return (acc + tilt).ln_1p();
    }
    lse(pairs.map(|(w, l)| w.ln() + crate::logdomain::scale(s, l)))
}

/// `A(y, r) = ln Σ_x P(x) metric(y|x)^{1/r}`.
pub fn a_value(model: &ChannelModel, metric: &[Vec<f64>], y: usize, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("A(y, r) needs r > 0, got {r}")));
    }
    check_metric(model, metric, y)?;
    Ok(LogTables::new(model, metric).a_value(y, r))
}

/// Log of the collective-competition factor `[Σ_x P(x) metric(y|x)^{1/λ}]^λ`
/// for `λ ∈ [0, ∞]`.
pub fn collective_factor_log(
    model: &ChannelModel,
    metric: &[Vec<f64>],
    y: usize,
    lambda: f64,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda must be in [0, ∞], got {lambda}")));
    }
    check_metric(model, metric, y)?;
    Ok(LogTables::new(model, metric).collective(y, lambda))
}

fn check_metric(model: &ChannelModel, metric: &[Vec<f64>], y: usize) -> Result<()> {
    same_len("metric rows", model.num_inputs(), metric.len())?;
    for row in metric {
        same_len("metric columns", model.num_outputs(), row.len())?;
    }
    if y >= model.num_outputs() {
        return Err(Error::Domain(format!("output symbol {y} out of range")));
    }
    Ok(())
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}
