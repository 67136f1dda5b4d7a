//! Exact error probability of the generalized likelihood decoder at tiny
//! blocklengths, and a seeded Monte-Carlo estimate of `-E ln P_e / n`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelModel, DecoderSpec};
use crate::error::{Error, Result};
use crate::logdomain::{ln_prob, lse};

/// Largest allowed `n·|X|^n·|Y|^n`; admits `n = 8` for binary alphabets.
pub const ENUMERATION_CAP: f64 = 524_288.0;

/// `-ln P_e` is capped here when a code never errs.
pub const ZERO_ERROR_CAP_NATS: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Codebook {
    pub n: usize,
    pub codewords: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn new(n: usize, codewords: Vec<Vec<usize>>) -> Result<Self> {
        if codewords.len() < 2 {
            return Err(Error::Domain("a codebook needs at least two codewords".into()));
        }
        if let Some(c) = codewords.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "codeword length",
                expected: n,
                got: c.len(),
            });
        }
        Ok(Codebook { n, codewords })
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n: usize,
    pub rate_nats: f64,
    pub num_codes: usize,
    pub seed: u64,
    /// Worker threads; `0` uses the rayon default.
    pub threads: usize,
}

impl SimConfig {
    /// `M = ⌈e^{nR}⌉`, at least 2.
    pub fn messages(&self) -> usize {
        let m = ((self.n as f64 * self.rate_nats).exp() - 1e-9).ceil();
        if m.is_finite() {
            (m as usize).max(2)
        } else {
            usize::MAX
        }
    }
}

fn check_enumeration(n: usize, nx: usize, ny: usize) -> Result<()> {
    let size = n as f64 * (nx as f64).powi(n as i32) * (ny as f64).powi(n as i32);
    if size > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge(format!(
            "n·|X|^n·|Y|^n = {size} exceeds {ENUMERATION_CAP}"
        )));
    }
    Ok(())
}

/// Log-metrics of every codeword against one output sequence, computed from
/// joint type counts so that equal types give bit-equal scores.
struct Scorer {
    nx: usize,
    ny: usize,
    ln_w: Vec<f64>,
    ln_m: Vec<f64>,
}

impl Scorer {
    fn new(w: &[Vec<f64>], m: &[Vec<f64>]) -> Self {
        let flat = |a: &[Vec<f64>]| a.iter().flatten().map(|&v| ln_prob(v)).collect::<Vec<_>>();
        Scorer {
            nx: w.len(),
            ny: w[0].len(),
            ln_w: flat(w),
            ln_m: flat(m),
        }
    }

    fn counts(&self, x: &[usize], y: &[usize], buf: &mut [u32]) {
        buf.iter_mut().for_each(|c| *c = 0);
        for (&a, &b) in x.iter().zip(y) {
            buf[a * self.ny + b] += 1;
        }
    }

    fn sum(table: &[f64], counts: &[u32]) -> f64 {
        let mut s = 0.0;
        for (&c, &l) in counts.iter().zip(table) {
            if c > 0 {
                s += c as f64 * l;
            }
        }
        s
    }
}

/// Posterior of every message given `y`. Returns the posterior and whether
/// all metrics vanished (uniform fallback).
fn posterior_from_scores(scores: &[f64], beta: f64) -> (Vec<f64>, bool) {
    let m = scores.len();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return (vec![1.0 / m as f64; m], true);
    }
    if beta == f64::INFINITY {
        let ties = scores.iter().filter(|&&s| s == max).count() as f64;
        let post = scores
            .iter()
            .map(|&s| if s == max { 1.0 / ties } else { 0.0 })
            .collect();
        return (post, false);
    }
    let logits: Vec<f64> = scores
        .iter()
        .map(|&s| if s == f64::NEG_INFINITY { s } else { beta * s })
        .collect();
    let z = lse(logits.iter().copied());
    (logits.iter().map(|&l| (l - z).exp()).collect(), false)
}

fn scores_for(code: &Codebook, scorer: &Scorer, y: &[usize], buf: &mut [u32]) -> Vec<f64> {
    code.codewords
        .iter()
        .map(|x| {
            scorer.counts(x, y, buf);
            Scorer::sum(&scorer.ln_m, buf)
        })
        .collect()
}

fn check_code(code: &Codebook, decoder: &DecoderSpec, y: Option<&[usize]>) -> Result<()> {
    let nx = decoder.w_tilde.len();
    let ny = decoder.w_tilde.first().map_or(0, Vec::len);
    if code.codewords.iter().flatten().any(|&s| s >= nx) {
        return Err(Error::Domain("codeword symbol outside the input alphabet".into()));
    }
    if let Some(y) = y {
        if y.len() != code.n {
            return Err(Error::DimensionMismatch {
                what: "output sequence length",
                expected: code.n,
                got: y.len(),
            });
        }
        if y.iter().any(|&s| s >= ny) {
            return Err(Error::Domain("output symbol outside the output alphabet".into()));
        }
    }
    Ok(())
}

/// Posterior of every message given `y`, with a flag set when every metric
/// is zero and the posterior falls back to uniform. `β = ∞` is argmax with
/// uniform tie-splitting.
pub fn gld_posterior_all(code: &Codebook, decoder: &DecoderSpec, y: &[usize]) -> Result<(Vec<f64>, bool)> {
    check_code(code, decoder, Some(y))?;
    let scorer = Scorer::new(&decoder.w_tilde, &decoder.w_tilde);
    let mut buf = vec![0u32; scorer.nx * scorer.ny];
    let scores = scores_for(code, &scorer, y, &mut buf);
    Ok(posterior_from_scores(&scores, decoder.beta))
}

/// `W̃^β(y|x_m) / Σ_m' W̃^β(y|x_m')`.
pub fn gld_posterior(code: &Codebook, decoder: &DecoderSpec, y: &[usize], m: usize) -> Result<f64> {
    if m >= code.len() {
        return Err(Error::Domain(format!("message {m} out of range")));
    }
    Ok(gld_posterior_all(code, decoder, y)?.0[m])
}

/// Advances `digits` as a base-`base` counter; false after the last value.
fn next_sequence(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn error_prob(code: &Codebook, scorer_w: &Scorer, scorer_m: &Scorer, beta: f64) -> f64 {
    let m = code.len();
    let mut y = vec![0usize; code.n];
    let mut buf = vec![0u32; scorer_w.nx * scorer_w.ny];
    let mut total = 0.0;
    loop {
        let scores = scores_for(code, scorer_m, &y, &mut buf);
        let (post, _) = posterior_from_scores(&scores, beta);
        // Mass on the other messages via prefix and suffix sums.
        let mut suffix = vec![0.0; m + 1];
        for i in (0..m).rev() {
            suffix[i] = suffix[i + 1] + post[i];
        }
        let mut prefix = 0.0;
        for (i, x) in code.codewords.iter().enumerate() {
            scorer_w.counts(x, &y, &mut buf);
            let lw = Scorer::sum(&scorer_w.ln_w, &buf);
            if lw > f64::NEG_INFINITY {
                total += lw.exp() * (prefix + suffix[i + 1]);
            }
            prefix += post[i];
        }
        if !next_sequence(&mut y, scorer_w.ny) {
            break;
        }
    }
    (total / m as f64).clamp(0.0, 1.0)
}

/// `(1/M) Σ_m Σ_y W(y|x_m) Σ_{m'≠m} posterior(m'|y)`, summed over every
/// `y ∈ Y^n`.
pub fn exact_error_prob(code: &Codebook, model: &ChannelModel, decoder: &DecoderSpec) -> Result<f64> {
    decoder.check(model)?;
    check_code(code, decoder, None)?;
    check_enumeration(code.n, model.num_inputs(), model.num_outputs())?;
    let sw = Scorer::new(&model.w, &model.w);
    let sm = Scorer::new(&decoder.w_tilde, &decoder.w_tilde);
    Ok(error_prob(code, &sw, &sm, decoder.beta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrcEstimate {
    /// Mean of `-ln P_e / n` over the sampled codes.
    pub estimate: f64,
    pub stderr: f64,
    /// Codes with `P_e = 0`, which contribute the capped value.
    pub zero_error_codes: usize,
    pub num_codes: usize,
    pub messages: usize,
    pub threads: usize,
}

fn sample_code(p: &WeightedIndex<f64>, n: usize, m: usize, seed: u64, index: u64) -> Codebook {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let codewords = (0..m).map(|_| (0..n).map(|_| p.sample(&mut rng)).collect()).collect();
    Codebook { n, codewords }
}

/// Samples `num_codes` i.i.d. codebooks and averages `-ln P_e / n`.
///
/// Code `i` is drawn from its own generator stream `(seed, i)`, and results
/// are reduced in index order, so the output does not depend on the thread
/// count.
pub fn trc_estimate(model: &ChannelModel, decoder: &DecoderSpec, cfg: &SimConfig) -> Result<TrcEstimate> {
    decoder.check(model)?;
    if cfg.n == 0 || cfg.num_codes == 0 {
        return Err(Error::Domain("blocklength and number of codes must be positive".into()));
    }
    if !(cfg.rate_nats >= 0.0) {
        return Err(Error::Domain(format!("rate must be nonnegative, got {}", cfg.rate_nats)));
    }
    check_enumeration(cfg.n, model.num_inputs(), model.num_outputs())?;
    let m = cfg.messages();
    if m as f64 > (model.num_inputs() as f64).powi(cfg.n as i32) * 64.0 {
        return Err(Error::EnumerationTooLarge(format!("{m} messages at n = {}", cfg.n)));
    }
    let dist = WeightedIndex::new(&model.p)
        .map_err(|e| Error::Domain(format!("input distribution: {e}")))?;
    let sw = Scorer::new(&model.w, &model.w);
    let sm = Scorer::new(&decoder.w_tilde, &decoder.w_tilde);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    let per_code: Vec<(f64, bool)> = pool.install(|| {
        (0..cfg.num_codes)
            .into_par_iter()
            .map(|i| {
                let code = sample_code(&dist, cfg.n, m, cfg.seed, i as u64);
                let pe = error_prob(&code, &sw, &sm, decoder.beta);
                if pe > 0.0 {
                    ((-pe.ln()).min(ZERO_ERROR_CAP_NATS), false)
                } else {
                    (ZERO_ERROR_CAP_NATS, true)
                }
            })
            .collect()
    });

    let k = per_code.len() as f64;
    let n = cfg.n as f64;
    let values: Vec<f64> = per_code.iter().map(|&(v, _)| v / n).collect();
    let mean = values.iter().sum::<f64>() / k;
    let stderr = if per_code.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(TrcEstimate {
        estimate: mean,
        stderr,
        zero_error_codes: per_code.iter().filter(|&&(_, z)| z).count(),
        num_codes: per_code.len(),
        messages: m,
        threads,
    })
}
