//! Brute-force primal oracle for the i.i.d. ensemble on small alphabets.
//!
//! The oracle minimizes, over joint types `Q_{XX'}` on a `δ`-lattice with
//! `F_Q ≤ 2R`,
//!
//! ```text
//! Γ(Q_{XX'}, R) + J_Q(X;X') + D(Q_X‖P) - R
//! ```
//!
//! where `Γ` is itself a minimum over conditionals `Q_{Y|XX'}` on the same
//! lattice. Both grids are subsets of the true feasible sets, so the result
//! over-approximates the exact primal value.
//!
//! The metric terms are handled in units of `β`: with `s = E_Q ln W̃` and
//! `α = β·α̃`, the clipped bracket is `β [max{s_X, α̃} - s_X']₊`, which for
//! `β = ∞` becomes the hard constraint `s_X' ≥ max{s_X, α̃}`.

use std::collections::HashMap;

use serde::Serialize;

use crate::channel::{ChannelModel, DecoderSpec};
use crate::error::{Error, Result};
use crate::logdomain::ln_prob;
use crate::measures::{j_divergence, kl_divergence, marginals, LogTables};
use crate::search::{golden_min, log_space};
use crate::tolerance::VALIDATION;

/// A joint distribution over `X × X'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointXXPrime {
    pub q: Vec<Vec<f64>>,
}

impl JointXXPrime {
    pub fn new(q: Vec<Vec<f64>>) -> Result<Self> {
        let n = q.len();
        if n == 0 || q.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("joint distribution must be square and nonempty".into()));
        }
        if q.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("joint distribution has a negative or non-finite entry".into()));
        }
        let sum: f64 = q.iter().flatten().sum();
        if (sum - 1.0).abs() > VALIDATION {
            return Err(Error::Domain(format!("joint distribution sums to {sum}")));
        }
        Ok(JointXXPrime { q })
    }

    /// `P ⊗ P`.
    pub fn product(p: &[f64]) -> Self {
        JointXXPrime {
            q: p.iter().map(|&a| p.iter().map(|&b| a * b).collect()).collect(),
        }
    }

    /// Mass `P(x)` on `(x, x)`.
    pub fn diagonal(p: &[f64]) -> Self {
        let n = p.len();
        JointXXPrime {
            q: (0..n)
                .map(|i| (0..n).map(|j| if i == j { p[i] } else { 0.0 }).collect())
                .collect(),
        }
    }
}

/// Lattice resolution and alphabet cap for the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub delta: f64,
    pub max_alphabet: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            delta: 0.05,
            max_alphabet: 3,
        }
    }
}

impl GridSpec {
    /// `1/δ`, which must be an integer.
    pub fn steps(&self) -> Result<u32> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        let n = (1.0 / self.delta).round();
        if (n * self.delta - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("1/delta must be an integer, got {}", 1.0 / self.delta)));
        }
        Ok(n as u32)
    }

    fn check(&self, model: &ChannelModel) -> Result<u32> {
        let (nx, ny) = (model.num_inputs(), model.num_outputs());
        if nx > self.max_alphabet || ny > self.max_alphabet {
            return Err(Error::AlphabetTooLarge {
                inputs: nx,
                outputs: ny,
                cap: self.max_alphabet,
            });
        }
        self.steps()
    }
}

/// All `k`-part compositions of `n`, in lexicographic order.
pub fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(n: u32, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=n {
            prefix.push(i);
            rec(n - i, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// The `α` dual at one output distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaDual {
    /// `α(R, Q_Y) = β·α̃`, with `0·∞ = 0` when `β = ∞`.
    pub value: f64,
    /// `α̃ = inf_{λ>0} λ [Σ_y Q_Y(y) A(y, λ) + R]`, independent of `β`.
    pub normalized: f64,
    /// Minimizer of the normalized problem (`0` or `∞` for endpoint limits).
    pub lambda: f64,
}

/// `λ [Σ_y Q_Y(y) A(y, λ/β) + R]` at one `λ > 0`.
pub fn alpha_objective(
    model: &ChannelModel,
    decoder: &DecoderSpec,
    q_y: &[f64],
    rate: f64,
    lambda: f64,
) -> f64 {
    let t = LogTables::new(model, &decoder.w_tilde);
    if decoder.beta == f64::INFINITY {
        // A(y, 0) is the λ → 0 limit scaled by λ; only λ·ΣQ_Y·max + λR survives.
        let l0 = normalized_objective(&t, q_y, rate, 0.0);
        return scale_inf(lambda, l0);
    }
    decoder.beta * normalized_objective(&t, q_y, rate, lambda / decoder.beta)
}

fn scale_inf(c: f64, v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        c * v * f64::INFINITY
    }
}

/// `f(λ) = Σ_y Q_Y(y) ln C(y, λ) + λR`, with the `λ ∈ {0, ∞}` limits of `ln C`.
fn normalized_objective(t: &LogTables, q_y: &[f64], rate: f64, lambda: f64) -> f64 {
    let mut s = 0.0;
    for (y, &qy) in q_y.iter().enumerate() {
        if qy <= 0.0 {
            continue;
        }
        let c = t.collective(y, lambda);
        if c == f64::NEG_INFINITY {
            return c;
        }
        s += qy * c;
    }
    if lambda == 0.0 || rate == 0.0 {
        s
    } else {
        s + lambda * rate
    }
}

fn normalized_alpha(t: &LogTables, q_y: &[f64], rate: f64) -> (f64, f64) {
    let at_zero = normalized_objective(t, q_y, rate, 0.0);
    if at_zero == f64::NEG_INFINITY {
        return (at_zero, 0.0);
    }
    // Slope of f as λ → ∞: Σ Q_Y ln P(x: W̃(y|x) > 0) + R.
    let mut slope = rate;
    let mut full = true;
    for (y, &qy) in q_y.iter().enumerate() {
        if qy <= 0.0 {
            continue;
        }
        let mass: f64 = t
            .support
            .iter()
            .filter(|&&x| t.ln_m(x, y) > f64::NEG_INFINITY)
            .map(|&x| t.p[x])
            .sum();
        full &= mass >= 1.0 - 1e-15;
        slope += qy * ln_prob(mass);
    }
    if slope < -1e-15 {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }

    let f = |l: f64| normalized_objective(t, q_y, rate, l);
    let grid = log_space(1e-4, 1e4, 161);
    let vals: Vec<f64> = grid.iter().map(|&l| f(l)).collect();
    let mut i = 0;
    for k in 1..vals.len() {
        if vals[k] < vals[i] {
            i = k;
        }
    }
    let ln10 = std::f64::consts::LN_10;
    let lo = if i == 0 { grid[0].ln() - 2.0 * ln10 } else { grid[i - 1].ln() };
    let hi = if i + 1 == grid.len() {
        grid[i].ln() + 2.0 * ln10
    } else {
        grid[i + 1].ln()
    };
    let (u, fu) = golden_min(|u| f(u.exp()), lo, hi, 1e-12);
    let mut best = if fu < vals[i] { (fu, u.exp()) } else { (vals[i], grid[i]) };
    if at_zero < best.0 {
        best = (at_zero, 0.0);
    }
    if slope.abs() <= 1e-15 {
        let at_inf = if full {
            normalized_objective(t, q_y, rate, f64::INFINITY)
        } else {
            f(1e8)
        };
        if at_inf < best.0 {
            best = (at_inf, f64::INFINITY);
        }
    }
    best
}

/// `α(R, Q_Y) = inf_{λ>0} λ [Σ_y Q_Y(y) A(y, λ/β) + R]` with `A` built on
/// the decoding metric.
///
/// Substituting `λ = βλ'` gives `α = β·α̃` with a `β`-free convex problem in
/// `λ'`; that is what is solved, by a log grid on `[1e-4, 1e4]`, golden
/// refinement, and the analytic `λ' → 0` and `λ' → ∞` limits.
pub fn alpha_dual(model: &ChannelModel, decoder: &DecoderSpec, q_y: &[f64], rate: f64) -> Result<AlphaDual> {
    if q_y.len() != model.num_outputs() {
        return Err(Error::DimensionMismatch {
            what: "output distribution",
            expected: model.num_outputs(),
            got: q_y.len(),
        });
    }
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("rate must be nonnegative, got {rate}")));
    }
    let t = LogTables::new(model, &decoder.w_tilde);
    let (normalized, lambda) = normalized_alpha(&t, q_y, rate);
    let value = if decoder.beta == f64::INFINITY {
        scale_inf(1.0, normalized)
    } else {
        decoder.beta * normalized
    };
    Ok(AlphaDual {
        value,
        normalized,
        lambda: lambda * decoder.beta,
    })
}

/// `F_Q(X,X') = D(Q_X‖P) + max{D(Q_X‖P), J_Q(X;X')}`.
pub fn f_q(q: &JointXXPrime, p: &[f64]) -> Result<f64> {
    let (qx, _) = marginals(&q.q);
    let d = kl_divergence(&qx, p)?;
    let j = j_divergence(&q.q, p)?;
    Ok(d + d.max(j))
}

/// `β [max{s_X, α̃} - s_X']₊` with `-∞` conventions.
fn bracket(beta: f64, s1: f64, alpha: f64, s2: f64) -> f64 {
    let m = s1.max(alpha);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    if s2 == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let gap = m - s2;
    if beta == f64::INFINITY {
        if gap > 1e-12 * (1.0 + m.abs()) {
            f64::INFINITY
        } else {
            0.0
        }
    } else if gap > 0.0 {
        beta * gap
    } else {
        0.0
    }
}

type CellEntry = (Vec<u32>, f64, Vec<f64>);

/// Lattice points for `Q(·|x,x')` with `D(Q‖W(·|x)) < ∞`, precomputed per `x`.
struct CellTables {
    /// Per `x`: `(counts over y, D(Q‖W_x), Σ_y Q ln W̃(y|x') for each x')`.
    per_x: Vec<Vec<CellEntry>>,
}

impl CellTables {
    fn new(model: &ChannelModel, decoder: &DecoderSpec, n: u32) -> Result<Self> {
        let (nx, ny) = (model.num_inputs(), model.num_outputs());
        let comps = compositions(n, ny);
        let ln_m: Vec<Vec<f64>> = decoder
            .w_tilde
            .iter()
            .map(|r| r.iter().map(|&v| ln_prob(v)).collect())
            .collect();
        let mut per_x = Vec::with_capacity(nx);
        for x in 0..nx {
            let mut v = Vec::new();
            for c in &comps {
                let q: Vec<f64> = c.iter().map(|&k| k as f64 / n as f64).collect();
                let d = kl_divergence(&q, &model.w[x])?;
                if !d.is_finite() {
                    continue;
                }
                let scores = (0..nx)
                    .map(|xp| {
                        let mut s = 0.0;
                        for y in 0..ny {
                            if q[y] > 0.0 {
                                s += q[y] * ln_m[xp][y];
                            }
                        }
                        s
                    })
                    .collect();
                v.push((c.clone(), d, scores));
            }
            per_x.push(v);
        }
        Ok(CellTables { per_x })
    }
}

struct Cell {
    /// Candidates sorted by weighted divergence: `(counts·weight, q·D, q·s_X, q·s_X')`.
    cands: Vec<(Vec<u32>, f64, f64, f64)>,
}

/// `s_X - s_X'` with `-∞` scores: a vanishing `s_X` gives `-∞`, a
/// vanishing `s_X'` alone gives `+∞`.
fn partial_gap(s1: f64, s2: f64) -> f64 {
    if s1 == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if s2 == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        s1 - s2
    }
}

/// Suffix lower bounds for the remaining cells of the search.
struct Bounds<'a> {
    div: &'a [f64],
    gap: &'a [f64],
}

struct GammaSolver<'a> {
    tables: LogTables,
    rate: f64,
    beta: f64,
    cells: &'a CellTables,
    alpha_cache: HashMap<Vec<u32>, f64>,
    /// `N²`, the denominator of the induced `Q_Y` counts.
    denom: f64,
}

impl<'a> GammaSolver<'a> {
    fn alpha(&mut self, key: &[u32]) -> f64 {
        if let Some(&a) = self.alpha_cache.get(key) {
            return a;
        }
        let q_y: Vec<f64> = key.iter().map(|&k| k as f64 / self.denom).collect();
        let a = normalized_alpha(&self.tables, &q_y, self.rate).0;
        self.alpha_cache.insert(key.to_vec(), a);
        a
    }

    /// `Γ` for a lattice joint given as counts `k[x][x']` out of `N`; any
    /// value at or above `budget` may be reported as `budget`.
    fn gamma(&mut self, counts: &[Vec<u32>], n: u32, budget: f64) -> f64 {
        let ny = self.tables.ny;
        let mut cells = Vec::new();
        for (x, row) in counts.iter().enumerate() {
            for (xp, &k) in row.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let q = k as f64 / n as f64;
                let mut cands: Vec<(Vec<u32>, f64, f64, f64)> = self.cells.per_x[x]
                    .iter()
                    .map(|(c, d, s)| {
                        (c.iter().map(|&ci| ci * k).collect(), q * d, q * s[x], q * s[xp])
                    })
                    .collect();
                cands.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
                cells.push(Cell { cands });
            }
        }
        let mut suffix = vec![0.0; cells.len() + 1];
        let mut gap_suffix = vec![0.0; cells.len() + 1];
        for i in (0..cells.len()).rev() {
            suffix[i] = suffix[i + 1] + cells[i].cands.first().map_or(f64::INFINITY, |c| c.1);
            let g = cells[i]
                .cands
                .iter()
                .map(|c| partial_gap(c.2, c.3))
                .fold(f64::INFINITY, f64::min);
            gap_suffix[i] = gap_suffix[i + 1] + g;
        }
        let mut best = budget;
        let mut qy = vec![0u32; ny];
        let bounds = Bounds {
            div: &suffix,
            gap: &gap_suffix,
        };
        self.dfs(&cells, &bounds, 0, 0.0, 0.0, 0.0, &mut qy, &mut best);
        best
    }

    /// Lower bound on `β[s_X - s_X']₊` given a lower bound on the gap.
    fn gap_penalty(&self, gap: f64, s1: f64) -> f64 {
        if !(gap > 1e-9 * (1.0 + s1.abs())) {
            0.0
        } else if self.beta == f64::INFINITY {
            f64::INFINITY
        } else {
            self.beta * gap
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &mut self,
        cells: &[Cell],
        bounds: &Bounds,
        k: usize,
        d: f64,
        s1: f64,
        s2: f64,
        qy: &mut Vec<u32>,
        best: &mut f64,
    ) {
        if k == cells.len() {
            let a = self.alpha(qy);
            let v = d + bracket(self.beta, s1, a, s2);
            if v < *best {
                *best = v;
            }
            return;
        }
        for (c, cd, c1, c2) in &cells[k].cands {
            let lb = d + cd + bounds.div[k + 1];
            if lb >= *best {
                break;
            }
            let (t1, t2) = (s1 + c1, s2 + c2);
            let gap = partial_gap(t1, t2) + bounds.gap[k + 1];
            if lb + self.gap_penalty(gap, t1) >= *best {
                continue;
            }
            for (t, &ci) in qy.iter_mut().zip(c) {
                *t += ci;
            }
            self.dfs(cells, bounds, k + 1, d + cd, t1, t2, qy, best);
            for (t, &ci) in qy.iter_mut().zip(c) {
                *t -= ci;
            }
        }
    }
}

fn lattice_counts(q: &JointXXPrime, n: u32) -> Result<Vec<Vec<u32>>> {
    q.q.iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    let k = (v * n as f64).round();
                    if (k - v * n as f64).abs() > 1e-9 {
                        Err(Error::Domain(format!("joint entry {v} is not on the delta lattice")))
                    } else {
                        Ok(k as u32)
                    }
                })
                .collect()
        })
        .collect()
}

/// `Γ(Q_{XX'}, R)`: minimum over lattice conditionals `Q_{Y|XX'}` of
/// `D(Q_{Y|XX'}‖W|Q_{XX'}) + β [max{s_X, α̃(Q_Y)} - s_X']₊`.
///
/// The first term is the chain-rule form of `D(Q_{Y|X}‖W|Q_X) + I_Q(X';Y|X)`.
/// The full conditional tensor is searched (branch and bound on the
/// divergence part); cells are not decoupled because `α̃` depends on the
/// induced `Q_Y`. `Q_{XX'}` must lie on the `δ`-lattice.
pub fn gamma(
    model: &ChannelModel,
    decoder: &DecoderSpec,
    q: &JointXXPrime,
    rate: f64,
    grid: GridSpec,
) -> Result<f64> {
    let n = grid.check(model)?;
    decoder.check(model)?;
    let counts = lattice_counts(q, n)?;
    let cells = CellTables::new(model, decoder, n)?;
    let mut solver = GammaSolver {
        tables: LogTables::new(model, &decoder.w_tilde),
        rate,
        beta: decoder.beta,
        cells: &cells,
        alpha_cache: HashMap::new(),
        denom: (n as f64) * (n as f64),
    };
    Ok(solver.gamma(&counts, n, f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalResult {
    /// Minimum over lattice joints with `F_Q ≤ 2R`. Every such point is
    /// feasible, so this over-approximates the continuous primal.
    pub value: f64,
    /// Minimum over the widened filter `F_Q ≤ 2R + δ ln|X|`; never above
    /// `value`.
    pub slacked: f64,
    /// Minimizing joint for `value`.
    pub argmin: Option<Vec<Vec<f64>>>,
    /// Lattice joints passing the widened filter.
    pub feasible_points: usize,
    pub warnings: Vec<String>,
}

/// Grid evaluation of the primal expression under both the exact and the
/// widened feasibility filter.
pub fn primal_bound(model: &ChannelModel, decoder: &DecoderSpec, rate: f64, grid: GridSpec) -> Result<PrimalResult> {
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("rate must be nonnegative, got {rate}")));
    }
    let n = grid.check(model)?;
    let mut warnings = decoder.check(model)?;
    let nx = model.num_inputs();
    let slack = grid.delta * (nx as f64).ln();

    struct Point {
        counts: Vec<Vec<u32>>,
        base: f64,
        strict: bool,
    }
    let mut points = Vec::new();
    for c in compositions(n, nx * nx) {
        let counts: Vec<Vec<u32>> = c.chunks(nx).map(|r| r.to_vec()).collect();
        let q = JointXXPrime {
            q: counts
                .iter()
                .map(|r| r.iter().map(|&k| k as f64 / n as f64).collect())
                .collect(),
        };
        let (qx, _) = marginals(&q.q);
        let d = kl_divergence(&qx, &model.p)?;
        let j = j_divergence(&q.q, &model.p)?;
        if !d.is_finite() || !j.is_finite() {
            continue;
        }
        let f = d + d.max(j);
        if f > 2.0 * rate + slack + 1e-12 {
            continue;
        }
        points.push(Point {
            counts,
            base: j + d - rate,
            strict: f <= 2.0 * rate + 1e-12,
        });
    }
    if points.is_empty() {
        warnings.push("no lattice point satisfies the feasibility constraint".into());
        return Ok(PrimalResult {
            value: f64::INFINITY,
            slacked: f64::INFINITY,
            argmin: None,
            feasible_points: 0,
            warnings,
        });
    }
    points.sort_by(|a, b| a.base.total_cmp(&b.base).then_with(|| a.counts.cmp(&b.counts)));

    let cells = CellTables::new(model, decoder, n)?;
    let mut solver = GammaSolver {
        tables: LogTables::new(model, &decoder.w_tilde),
        rate,
        beta: decoder.beta,
        cells: &cells,
        alpha_cache: HashMap::new(),
        denom: (n as f64) * (n as f64),
    };
    // Exact filter first; its minimum then seeds the widened search.
    let mut best = f64::INFINITY;
    let mut argmin = None;
    for pt in points.iter().filter(|p| p.strict) {
        if pt.base >= best {
            break;
        }
        let v = pt.base + solver.gamma(&pt.counts, n, best - pt.base);
        if v < best {
            best = v;
            argmin = Some(
                pt.counts
                    .iter()
                    .map(|r| r.iter().map(|&k| k as f64 / n as f64).collect())
                    .collect(),
            );
        }
    }
    let mut slacked = best;
    for pt in points.iter().filter(|p| !p.strict) {
        if pt.base >= slacked {
            break;
        }
        slacked = slacked.min(pt.base + solver.gamma(&pt.counts, n, slacked - pt.base));
    }
    if points.iter().all(|p| !p.strict) {
        warnings.push("no lattice point satisfies the constraint without slack".into());
    }
    Ok(PrimalResult {
        value: best,
        slacked,
        argmin,
        feasible_points: points.len(),
        warnings,
    })
}
