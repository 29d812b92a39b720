//! Level-set probabilities `ν{X_n/n ∈ [a, b]}`: plain Monte Carlo,
//! exponentially tilted Monte Carlo with exact weights, the exact binomial
//! tail, and the Gärtner–Ellis differentiability check.
//!
//! Samples are drawn in fixed blocks of [`BLOCK`] words; block `i` uses the
//! ChaCha8 stream `(seed, i)`. Results depend on the seed only, never on the
//! shard count.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex::{domain_endpoints, kink_scan, legendre_conjugate, GridFunction};
use crate::error::{invalid, Error, Result};
use crate::exec::{ordered_map, ExecOptions};
use crate::grid::Grid;
use crate::io::fmt_f64;
use crate::numeric::CompensatedSum;
use crate::observables::{LocalPotential, ObservableSpec};
use crate::pressure::MgfCurve;
use crate::symbolic::{ReferenceMeasure, ShiftSpace};

/// Words per RNG block.
pub const BLOCK: u64 = 4096;

/// Slack when testing `X_n/n` against interval ends, so that ends such as
/// `0.7 = 70/100` are inclusive despite rounding.
const HIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    Plain,
    Tilted { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RateReport {
    /// `−(1/n) log p̂`.
    Estimate(f64),
    /// No hits: only `rate ≥ (1/n) log N` is supported by the data.
    LowerBound(f64),
}

impl RateReport {
    pub fn estimate(self) -> Option<f64> {
        match self {
            RateReport::Estimate(x) => Some(x),
            RateReport::LowerBound(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n: usize,
    pub interval: [f64; 2],
    pub prob_estimate: f64,
    pub log_rate: RateReport,
    /// Relative 95% half-width `1.96·se/p̂`; `None` without hits.
    pub ci_95: Option<f64>,
    pub standard_error: f64,
    pub hits: u64,
    pub sampler: SamplerKind,
    pub samples: u64,
    pub seed: u64,
}

pub const TAIL_CSV_HEADER: [&str; 14] = [
    "n",
    "a",
    "b",
    "sampler",
    "q",
    "samples",
    "seed",
    "hits",
    "prob_estimate",
    "standard_error",
    "ci_95",
    "log_rate",
    "log_rate_kind",
    "oracle",
];

impl TailEstimate {
    pub fn csv_header() -> String {
        TAIL_CSV_HEADER.join(",")
    }

    pub fn csv_row(&self, oracle: Option<f64>) -> String {
        let (sampler, q) = match self.sampler {
            SamplerKind::Plain => ("plain", String::new()),
            SamplerKind::Tilted { q } => ("tilted", fmt_f64(q)),
        };
        let (rate, kind) = match self.log_rate {
            RateReport::Estimate(x) => (x, "estimate"),
            RateReport::LowerBound(x) => (x, "lower_bound"),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            fmt_f64(self.interval[0]),
            fmt_f64(self.interval[1]),
            sampler,
            q,
            self.samples,
            self.seed,
            self.hits,
            fmt_f64(self.prob_estimate),
            fmt_f64(self.standard_error),
            self.ci_95.map(fmt_f64).unwrap_or_default(),
            fmt_f64(rate),
            kind,
            oracle.map(fmt_f64).unwrap_or_default()
        )
    }
}

/// Cumulative distribution for inverse-CDF draws; the last positive entry
/// is widened to `+inf` so every uniform lands somewhere.
fn cdf(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect();
    if let Some(last) = weights.iter().rposition(|&w| w > 0.0) {
        for c in &mut out[last..] {
            *c = f64::INFINITY;
        }
    }
    out
}

#[inline]
fn draw(cdf: &[f64], u: f64) -> u8 {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as u8
}

/// Markov chain on words of a fixed length, possibly time-inhomogeneous.
#[derive(Debug, Clone, PartialEq)]
struct WordChain {
    l: usize,
    len: usize,
    init: Vec<f64>,
    /// Cumulative rows, `l × l` per step; a single matrix means homogeneous.
    steps: Vec<Vec<f64>>,
}

impl WordChain {
    fn sample(&self, rng: &mut ChaCha8Rng, buf: &mut Vec<u8>) {
        buf.clear();
        let mut a = draw(&self.init, rng.random::<f64>());
        buf.push(a);
        for t in 1..self.len {
            let m = if self.steps.len() == 1 {
                &self.steps[0]
            } else {
                &self.steps[t - 1]
            };
            let row = &m[a as usize * self.l..(a as usize + 1) * self.l];
            a = draw(row, rng.random::<f64>());
            buf.push(a);
        }
    }

    fn plain(measure: &ReferenceMeasure, len: usize) -> WordChain {
        let l = measure.alphabet();
        let init: Vec<f64> = (0..l).map(|a| measure.initial(a as u8)).collect();
        let mut step = Vec::with_capacity(l * l);
        for a in 0..l {
            let row: Vec<f64> = (0..l).map(|b| measure.kernel(a as u8, b as u8)).collect();
            step.extend(cdf(&row));
        }
        WordChain {
            l,
            len,
            init: cdf(&init),
            steps: vec![step],
        }
    }
}

/// The tilted law `dμ_{n,q} = e^{qX_n}/Z_n(q) dν` on words of length
/// `n + k − 1`, for additive window `k ≤ 2` observables.
///
/// Built by an exact backward recursion over the horizon, so sampling and
/// the importance weights `Z_n e^{−qX_n}` carry no approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedSampler {
    pub q: f64,
    pub n: usize,
    /// `log Z_n(q)`.
    pub log_z: f64,
    chain: WordChain,
    /// Normalised transition probabilities per step (not cumulative).
    kernels: Vec<Vec<f64>>,
}

impl TiltedSampler {
    pub fn new(
        measure: &ReferenceMeasure,
        spec: &ObservableSpec,
        space: &ShiftSpace,
        n: usize,
        q: f64,
    ) -> Result<TiltedSampler> {
        let potential = tiltable_potential(spec, space, measure, n)?;
        if !q.is_finite() {
            return Err(invalid("tilt q must be finite"));
        }
        let l = measure.alphabet();
        let k = potential.window;
        let len = n + k - 1;
        let phi = |a: usize, b: usize| -> f64 {
            if k == 1 {
                potential.table[b]
            } else {
                potential.table[a * l + b]
            }
        };
        // initial factor and per-transition factor
        let init: Vec<f64> = (0..l)
            .map(|a| {
                let base = measure.initial(a as u8);
                if k == 1 {
                    base * (q * potential.table[a]).exp()
                } else {
                    base
                }
            })
            .collect();
        let factor: Vec<f64> = (0..l * l)
            .map(|ab| {
                let (a, b) = (ab / l, ab % l);
                measure.kernel(a as u8, b as u8) * (q * phi(a, b)).exp()
            })
            .collect();
        // backward pass with per-step normalisation, logging the scales
        let transitions = len - 1;
        let mut beta = vec![vec![1.0; l]; len];
        let mut log_scale = 0.0;
        for t in (0..transitions).rev() {
            let mut next = vec![0.0; l];
            for (a, slot) in next.iter_mut().enumerate() {
                *slot = (0..l).map(|b| factor[a * l + b] * beta[t + 1][b]).sum();
            }
            let s = next.iter().cloned().fold(0.0, f64::max);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Unconverged(format!(
                    "tilted recursion degenerate at step {t} (q = {q})"
                )));
            }
            next.iter_mut().for_each(|x| *x /= s);
            log_scale += s.ln();
            beta[t] = next;
        }
        let z0: f64 = (0..l).map(|a| init[a] * beta[0][a]).sum();
        let log_z = log_scale + z0.ln();

        let init_w: Vec<f64> = (0..l).map(|a| init[a] * beta[0][a]).collect();
        let mut kernels = Vec::with_capacity(transitions);
        let mut steps = Vec::with_capacity(transitions);
        for t in 0..transitions {
            let mut probs = Vec::with_capacity(l * l);
            let mut cum = Vec::with_capacity(l * l);
            for a in 0..l {
                let row: Vec<f64> = (0..l).map(|b| factor[a * l + b] * beta[t + 1][b]).collect();
                let total: f64 = row.iter().sum();
                probs.extend(
                    row.iter()
                        .map(|x| if total > 0.0 { x / total } else { 0.0 }),
                );
                cum.extend(if total > 0.0 {
                    cdf(&row)
                } else {
                    vec![f64::INFINITY; l]
                });
            }
            kernels.push(probs);
            steps.push(cum);
        }
        if steps.is_empty() {
            steps.push(vec![f64::INFINITY; l * l]);
        }
        Ok(TiltedSampler {
            q,
            n,
            log_z,
            chain: WordChain {
                l,
                len,
                init: cdf(&init_w),
                steps,
            },
            kernels,
        })
    }

    /// Transition probabilities out of `a` at step `t`.
    pub fn kernel_row(&self, t: usize, a: usize) -> &[f64] {
        let l = self.chain.l;
        &self.kernels[t][a * l..(a + 1) * l]
    }

    pub fn steps(&self) -> usize {
        self.kernels.len()
    }
}

fn tiltable_potential(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    measure: &ReferenceMeasure,
    n: usize,
) -> Result<LocalPotential> {
    if n == 0 {
        return Err(invalid("horizon n must be at least 1"));
    }
    spec.validate(space)?;
    measure.check_compatible(space)?;
    let p = spec.additive_potential().ok_or_else(|| {
        Error::Unsupported("tilted sampling needs an additive window potential".into())
    })?;
    if p.window > 2 {
        return Err(Error::Unsupported(format!(
            "tilted sampling supports window ≤ 2, got {}",
            p.window
        )));
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, Default)]
struct BlockTally {
    hits: u64,
    weight: CompensatedSum,
    weight_sq: CompensatedSum,
}

fn run_blocks<F>(samples: u64, seed: u64, opts: &ExecOptions, per_word: F) -> BlockTally
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<u8>) -> Option<f64> + Sync + Send,
{
    let blocks: Vec<u64> = (0..samples.div_ceil(BLOCK)).collect();
    let tallies = ordered_map(&blocks, opts.shards, |&b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let count = BLOCK.min(samples - b * BLOCK);
        let mut buf = Vec::new();
        let mut t = BlockTally::default();
        for _ in 0..count {
            if let Some(w) = per_word(&mut rng, &mut buf) {
                t.hits += 1;
                t.weight.add(w);
                t.weight_sq.add(w * w);
            }
        }
        t
    });
    let mut total = BlockTally::default();
    for t in &tallies {
        total.hits += t.hits;
        total.weight.merge(&t.weight);
        total.weight_sq.merge(&t.weight_sq);
    }
    total
}

fn check_interval(interval: [f64; 2], samples: u64) -> Result<()> {
    if !(interval[0] <= interval[1]) {
        return Err(invalid(format!("interval {interval:?} is empty")));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    Ok(())
}

#[inline]
fn in_interval(x: f64, n: usize, interval: [f64; 2]) -> bool {
    let r = x / n as f64;
    r >= interval[0] - HIT_SLACK && r <= interval[1] + HIT_SLACK
}

fn finish(
    tally: BlockTally,
    n: usize,
    interval: [f64; 2],
    samples: u64,
    seed: u64,
    sampler: SamplerKind,
) -> TailEstimate {
    let nf = samples as f64;
    let p = (tally.weight.value() / nf).clamp(0.0, 1.0);
    let second = tally.weight_sq.value() / nf;
    let se = ((second - p * p).max(0.0) / nf).sqrt();
    let (log_rate, ci_95) = if tally.hits == 0 || p == 0.0 {
        (RateReport::LowerBound(nf.ln() / n as f64), None)
    } else {
        (
            RateReport::Estimate(-p.ln() / n as f64),
            Some(1.96 * se / p),
        )
    };
    TailEstimate {
        n,
        interval,
        prob_estimate: p,
        log_rate,
        ci_95,
        standard_error: se,
        hits: tally.hits,
        sampler,
        samples,
        seed,
    }
}

/// Plain Monte Carlo: `N` i.i.d. words of length `n + k − 1` from `ν`.
#[allow(clippy::too_many_arguments)]
pub fn sample_plain(
    measure: &ReferenceMeasure,
    spec: &ObservableSpec,
    space: &ShiftSpace,
    n: usize,
    interval: [f64; 2],
    samples: u64,
    seed: u64,
    opts: &ExecOptions,
) -> Result<TailEstimate> {
    if n == 0 {
        return Err(invalid("horizon n must be at least 1"));
    }
    check_interval(interval, samples)?;
    spec.validate(space)?;
    measure.check_compatible(space)?;
    let chain = WordChain::plain(measure, n + spec.window() - 1);
    let tally = run_blocks(samples, seed, opts, |rng, buf| {
        chain.sample(rng, buf);
        in_interval(spec.value(buf, n), n, interval).then_some(1.0)
    });
    Ok(finish(
        tally,
        n,
        interval,
        samples,
        seed,
        SamplerKind::Plain,
    ))
}

/// Importance sampling under the tilted law with weights `Z_n(q) e^{−qX_n}`.
/// `q = 0` draws exactly what [`sample_plain`] draws for the same seed.
#[allow(clippy::too_many_arguments)]
pub fn sample_tilted(
    measure: &ReferenceMeasure,
    spec: &ObservableSpec,
    space: &ShiftSpace,
    n: usize,
    interval: [f64; 2],
    q: f64,
    samples: u64,
    seed: u64,
    opts: &ExecOptions,
) -> Result<TailEstimate> {
    check_interval(interval, samples)?;
    let sampler = TiltedSampler::new(measure, spec, space, n, q)?;
    let kind = SamplerKind::Tilted { q };
    if q == 0.0 {
        let mut est = sample_plain(measure, spec, space, n, interval, samples, seed, opts)?;
        est.sampler = kind;
        return Ok(est);
    }
    let log_z = sampler.log_z;
    let tally = run_blocks(samples, seed, opts, |rng, buf| {
        sampler.chain.sample(rng, buf);
        let x = spec.value(buf, n);
        in_interval(x, n, interval).then(|| (log_z - q * x).exp())
    });
    Ok(finish(tally, n, interval, samples, seed, kind))
}

/// `d/dq (1/n) log Z_n(q)`, the tilted mean of `X_n/n`.
pub fn tilted_mean(
    measure: &ReferenceMeasure,
    spec: &ObservableSpec,
    space: &ShiftSpace,
    n: usize,
    q: f64,
) -> Result<f64> {
    let h = 1e-5 * (1.0 + q.abs());
    let up = TiltedSampler::new(measure, spec, space, n, q + h)?.log_z;
    let down = TiltedSampler::new(measure, spec, space, n, q - h)?.log_z;
    Ok((up - down) / (2.0 * h * n as f64))
}

/// Tilt aimed at the dominating point of `[a, b]`: the point of the interval
/// closest to the untilted mean. Solved by bisection on [`tilted_mean`].
pub fn auto_tilt(
    measure: &ReferenceMeasure,
    spec: &ObservableSpec,
    space: &ShiftSpace,
    n: usize,
    interval: [f64; 2],
) -> Result<f64> {
    check_interval(interval, 1)?;
    let mean = tilted_mean(measure, spec, space, n, 0.0)?;
    let target = mean.clamp(interval[0], interval[1]);
    if target == mean {
        return Ok(0.0);
    }
    let f = |q: f64| tilted_mean(measure, spec, space, n, q).map(|m| m - target);
    let (mut lo, mut hi) = if target > mean {
        (0.0, 1.0)
    } else {
        (-1.0, 0.0)
    };
    let limit = 64.0;
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi > limit {
            return Err(invalid(format!(
                "target {target} outside endpoints: tilted mean cannot reach it"
            )));
        }
    }
    while f(lo)? > 0.0 {
        lo *= 2.0;
        if lo < -limit {
            return Err(invalid(format!(
                "target {target} outside endpoints: tilted mean cannot reach it"
            )));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// `p = m / 2^s` exactly.
fn dyadic(p: f64) -> (BigUint, u32) {
    let bits = p.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    while m != 0 && m & 1 == 0 {
        m >>= 1;
        e += 1;
    }
    debug_assert!(e <= 0, "p < 1 has a nonpositive binary exponent");
    (BigUint::from(m), (-e) as u32)
}

/// Big-integer ratio to the nearest-ish `f64` (≥ 60 significant bits kept
/// before the final rounding).
fn ratio_to_f64(num: &BigUint, den_log2: u64) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let bits = num.bits();
    let shift = bits.saturating_sub(64);
    let top = (num >> shift).to_u64().expect("64-bit window") as f64;
    ldexp(top, shift as i64 - den_log2 as i64)
}

/// `Σ_{k ≥ k_min} C(n,k) p^k (1−p)^{n−k}`, exact in rational arithmetic
/// (the double `p` is taken at its exact binary value).
pub fn binomial_tail_oracle(n: u64, k_min: u64, p: f64) -> Result<f64> {
    if k_min > n {
        return Err(invalid(format!("k_min {k_min} exceeds n {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p = {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(if k_min == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 || k_min == 0 {
        return Ok(1.0);
    }
    let (m, s) = dyadic(p);
    let one = BigUint::one() << s;
    let rest = &one - &m;
    // term_k numerators C(n,k) m^k rest^(n−k) over 2^(s·n)
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..=n {
        if k >= k_min {
            total += &binom * m.pow(k as u32) * rest.pow((n - k) as u32);
        }
        binom = binom * (n - k) / (k + 1);
    }
    Ok(ratio_to_f64(&total, s as u64 * n))
}

/// `log` of [`binomial_tail_oracle`], safe when the tail underflows.
pub fn binomial_tail_log(n: u64, k_min: u64, p: f64) -> Result<f64> {
    if k_min > n {
        return Err(invalid(format!("k_min {k_min} exceeds n {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return binomial_tail_oracle(n, k_min, p).map(f64::ln);
    }
    let (m, s) = dyadic(p);
    let rest = (BigUint::one() << s) - &m;
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..=n {
        if k >= k_min {
            total += &binom * m.pow(k as u32) * rest.pow((n - k) as u32);
        }
        binom = binom * (n - k) / (k + 1);
    }
    if total.is_zero() {
        return Ok(f64::NEG_INFINITY);
    }
    let bits = total.bits();
    let shift = bits.saturating_sub(64);
    let top = (&total >> shift).to_u64().expect("64-bit window") as f64;
    Ok(top.ln() + (shift as f64 - (s as u64 * n) as f64) * std::f64::consts::LN_2)
}

/// `P(a ≤ K/n ≤ b)` for `K ~ Bin(n, p)`, exact in the same sense as
/// [`binomial_tail_oracle`] and with the samplers' end slack.
pub fn binomial_interval_oracle(n: u64, interval: [f64; 2], p: f64) -> Result<f64> {
    check_interval(interval, 1)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p = {p} outside [0, 1]")));
    }
    let k_min = k_min_for(n, interval[0]);
    let k_max = ((interval[1] + HIT_SLACK) * n as f64).floor();
    if k_max < 0.0 || k_min > n || (k_max as u64) < k_min {
        return Ok(0.0);
    }
    let k_max = (k_max as u64).min(n);
    if p == 0.0 || p == 1.0 {
        let k = if p == 0.0 { 0 } else { n };
        return Ok(if (k_min..=k_max).contains(&k) {
            1.0
        } else {
            0.0
        });
    }
    let (m, s) = dyadic(p);
    let rest = (BigUint::one() << s) - &m;
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..=k_max {
        if k >= k_min {
            total += &binom * m.pow(k as u32) * rest.pow((n - k) as u32);
        }
        binom = binom * (n - k) / (k + 1);
    }
    Ok(ratio_to_f64(&total, s as u64 * n))
}

/// Smallest `k` with `k/n ≥ a` under the same end slack as the samplers.
pub fn k_min_for(n: u64, a: f64) -> u64 {
    let k = ((a - HIT_SLACK) * n as f64).ceil();
    k.max(0.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GartnerEllisReport {
    pub differentiable_interior: bool,
    pub kinks: Vec<f64>,
    /// `φ*` on an α-grid spanning the estimated domain endpoints.
    pub rate: GridFunction,
}

/// Scans a converged limit MGF for kinks and returns its conjugate.
pub fn gartner_ellis_check(mgf: &MgfCurve) -> Result<GartnerEllisReport> {
    if !mgf.all_converged() {
        let bad = mgf.converged.iter().filter(|c| !**c).count();
        return Err(Error::Unconverged(format!(
            "{bad} of {} grid points have unconverged limits; refine depths or use fekete mode",
            mgf.converged.len()
        )));
    }
    let phi = mgf.limit_function().ensure_convex();
    let kinks: Vec<f64> = kink_scan(&phi).into_iter().map(|(q, _)| q).collect();
    let ends = domain_endpoints(&phi)?;
    let alpha_grid = Grid::snapped(ends.lower - 0.05, ends.upper + 0.05, 0.005)?;
    let rate = legendre_conjugate(&phi, alpha_grid)?.function;
    Ok(GartnerEllisReport {
        differentiable_interior: kinks.is_empty(),
        kinks,
        rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::{log_partition, CurveKind, DepthCurve};

    fn s2() -> ShiftSpace {
        ShiftSpace::full(2).unwrap()
    }

    fn uniform() -> ReferenceMeasure {
        ReferenceMeasure::uniform(2).unwrap()
    }

    const I07: f64 = 0.08228287850505178; // log 2 − H(0.7)

    #[test]
    fn interval_oracle_agrees_with_tails() {
        let full = binomial_interval_oracle(100, [0.7, 1.0], 0.5).unwrap();
        assert_eq!(full, binomial_tail_oracle(100, 70, 0.5).unwrap());
        let mid = binomial_interval_oracle(10, [0.3, 0.5], 0.5).unwrap();
        // C(10,3) + C(10,4) + C(10,5) over 2^10
        assert_eq!(mid, (120.0 + 210.0 + 252.0) / 1024.0);
        assert_eq!(
            binomial_interval_oracle(10, [0.31, 0.39], 0.5).unwrap(),
            0.0
        );
        assert_eq!(binomial_interval_oracle(10, [0.0, 1.0], 0.3).unwrap(), 1.0);
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_tail_oracle(4, 3, 0.5).unwrap(), 0.3125);
        assert_eq!(binomial_tail_oracle(10, 10, 0.5).unwrap(), 0.0009765625);
        assert_eq!(binomial_tail_oracle(10, 0, 0.5).unwrap(), 1.0);
        assert!(binomial_tail_oracle(10, 11, 0.5).is_err());
        // n = 100, k ≥ 70: independent f64 sum of exact integer-derived terms
        let mut c = 1.0f64;
        let mut tail = 0.0;
        for k in 0..=100u32 {
            if k >= 70 {
                tail += c;
            }
            c = c * (100 - k) as f64 / (k + 1) as f64;
        }
        let expect = tail / 2f64.powi(100);
        let got = binomial_tail_oracle(100, 70, 0.5).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-12);
        assert!((binomial_tail_log(100, 70, 0.5).unwrap() - got.ln()).abs() < 1e-12);
        // non-dyadic p against a direct double sum
        let p: f64 = 0.3;
        let direct: f64 = (2..=5u32)
            .map(|k| {
                let c = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0][k as usize];
                c * p.powi(k as i32) * (1.0 - p).powi(5 - k as i32)
            })
            .sum();
        assert!((binomial_tail_oracle(5, 2, p).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn rate_law_converges_monotonically() {
        let mut prev = f64::INFINITY;
        for n in [100u64, 200, 400, 800] {
            let rate = -binomial_tail_log(n, k_min_for(n, 0.7), 0.5).unwrap() / n as f64;
            let gap = (rate - I07).abs();
            assert!(gap <= ((n + 1) as f64).ln() / n as f64, "n={n}");
            assert!(gap < prev);
            prev = gap;
        }
    }

    #[test]
    fn plain_examples() {
        let opts = ExecOptions::default();
        let coin = ObservableSpec::coin();
        let e = sample_plain(
            &uniform(),
            &coin,
            &s2(),
            100,
            [0.45, 0.55],
            10_000,
            7,
            &opts,
        )
        .unwrap();
        assert!(e.prob_estimate > 0.5);
        assert!(e.log_rate.estimate().unwrap().abs() < 0.01);
        let c = ObservableSpec::birkhoff(LocalPotential::constant(2, 0.4)).unwrap();
        let e = sample_plain(&uniform(), &c, &s2(), 33, [0.3, 0.5], 1000, 1, &opts).unwrap();
        assert_eq!(e.prob_estimate, 1.0);
        let exact = binomial_tail_oracle(100, 70, 0.5).unwrap();
        let e = sample_plain(&uniform(), &coin, &s2(), 100, [0.7, 1.0], 100_000, 3, &opts).unwrap();
        if e.hits > 0 {
            let se = (exact * (1.0 - exact) / 1e5).sqrt();
            assert!((e.prob_estimate - exact).abs() <= 3.0 * 1.96 * se.max(e.standard_error));
        } else {
            assert!(matches!(e.log_rate, RateReport::LowerBound(_)));
            assert!(e.ci_95.is_none());
        }
    }

    #[test]
    fn zero_hits_report_a_bound() {
        let e = sample_plain(
            &uniform(),
            &ObservableSpec::coin(),
            &s2(),
            200,
            [0.95, 1.0],
            1000,
            11,
            &ExecOptions::default(),
        )
        .unwrap();
        assert_eq!(e.hits, 0);
        assert_eq!(e.log_rate, RateReport::LowerBound(1000f64.ln() / 200.0));
    }

    #[test]
    fn tilted_matches_exact_tail() {
        let q = (7.0f64 / 3.0).ln();
        let exact = binomial_tail_oracle(100, 70, 0.5).unwrap();
        let e = sample_tilted(
            &uniform(),
            &ObservableSpec::coin(),
            &s2(),
            100,
            [0.7, 1.0],
            q,
            100_000,
            2024,
            &ExecOptions::default(),
        )
        .unwrap();
        assert!((e.prob_estimate / exact - 1.0).abs() < 0.1);
        assert!(e.ci_95.unwrap() < 0.1);
    }

    #[test]
    fn tilt_zero_reproduces_plain_draws() {
        let opts = ExecOptions::default();
        let coin = ObservableSpec::coin();
        let plain =
            sample_plain(&uniform(), &coin, &s2(), 50, [0.6, 1.0], 20_000, 5, &opts).unwrap();
        let tilted = sample_tilted(
            &uniform(),
            &coin,
            &s2(),
            50,
            [0.6, 1.0],
            0.0,
            20_000,
            5,
            &opts,
        )
        .unwrap();
        assert_eq!(plain.hits, tilted.hits);
        assert_eq!(plain.prob_estimate, tilted.prob_estimate);
    }

    #[test]
    fn full_range_has_probability_one() {
        // weight variance is ((1+e^q)(1+e^-q)/4)^n − 1, kept O(1) here
        for q in [-0.5, 0.6, 1.0] {
            let e = sample_tilted(
                &uniform(),
                &ObservableSpec::coin(),
                &s2(),
                10,
                [0.0, 1.0],
                q,
                20_000,
                9,
                &ExecOptions::default(),
            )
            .unwrap();
            assert!(
                (e.prob_estimate - 1.0).abs() <= 3.0 * e.standard_error.max(1e-12) + 1e-12,
                "{e:?}"
            );
        }
    }

    #[test]
    fn tilted_partition_function_matches_enumeration() {
        let opts = ExecOptions::default();
        let b = ReferenceMeasure::bernoulli(vec![0.3, 0.7]).unwrap();
        let m = ReferenceMeasure::markov(&[vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        let pair = ObservableSpec::birkhoff(LocalPotential::pair_indicator()).unwrap();
        for measure in [uniform(), b, m] {
            for spec in [ObservableSpec::coin(), pair.clone()] {
                for q in [-1.5, 0.0, 0.8] {
                    let s = TiltedSampler::new(&measure, &spec, &s2(), 10, q).unwrap();
                    let z = log_partition(&spec, &s2(), &measure, &[q], 10, &opts).unwrap()[0];
                    assert!((s.log_z - z).abs() < 1e-12, "{spec:?} q={q}");
                    for t in 0..s.steps() {
                        for a in 0..2 {
                            let sum: f64 = s.kernel_row(t, a).iter().sum();
                            assert!((sum - 1.0).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tilted_rejects_non_additive_specs() {
        let w = ObservableSpec::weighted(
            LocalPotential::first_symbol(2),
            crate::observables::WeightRule::Alternating { gamma: 1.5 },
        )
        .unwrap();
        assert!(TiltedSampler::new(&uniform(), &w, &s2(), 5, 1.0).is_err());
        let k3 =
            ObservableSpec::birkhoff(LocalPotential::new(2, 3, vec![0.0; 8]).unwrap()).unwrap();
        assert!(matches!(
            TiltedSampler::new(&uniform(), &k3, &s2(), 5, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn unbiased_at_desk_scale() {
        let coin = ObservableSpec::coin();
        let exact = binomial_tail_oracle(10, 7, 0.5).unwrap();
        for q in [0.0, 0.5, (7.0f64 / 3.0).ln()] {
            let runs: Vec<f64> = (0..200u64)
                .map(|seed| {
                    sample_tilted(
                        &uniform(),
                        &coin,
                        &s2(),
                        10,
                        [0.7, 1.0],
                        q,
                        1000,
                        seed,
                        &ExecOptions::default(),
                    )
                    .unwrap()
                    .prob_estimate
                })
                .collect();
            let mean = runs.iter().sum::<f64>() / 200.0;
            let var = runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 199.0;
            let se = (var / 200.0).sqrt();
            assert!(
                (mean - exact).abs() <= 3.0 * se,
                "q={q} mean={mean} exact={exact}"
            );
        }
    }

    #[test]
    fn tilting_reduces_variance() {
        let coin = ObservableSpec::coin();
        let opts = ExecOptions::default();
        let plain = sample_plain(
            &uniform(),
            &coin,
            &s2(),
            100,
            [0.7, 1.0],
            100_000,
            77,
            &opts,
        )
        .unwrap();
        let tilted = sample_tilted(
            &uniform(),
            &coin,
            &s2(),
            100,
            [0.7, 1.0],
            (7.0f64 / 3.0).ln(),
            100_000,
            77,
            &opts,
        )
        .unwrap();
        match plain.ci_95 {
            Some(ci) => assert!(tilted.ci_95.unwrap() * 5.0 <= ci),
            None => assert!(tilted.log_rate.estimate().is_some()),
        }
    }

    #[test]
    fn deterministic_across_shards() {
        let coin = ObservableSpec::coin();
        let run = |shards| {
            sample_tilted(
                &uniform(),
                &coin,
                &s2(),
                100,
                [0.7, 1.0],
                0.8,
                50_000,
                42,
                &ExecOptions::default().with_shards(shards),
            )
            .unwrap()
        };
        let a = run(1);
        for s in [2, 4, 8] {
            let b = run(s);
            assert_eq!(a, b);
            assert_eq!(a.prob_estimate.to_bits(), b.prob_estimate.to_bits());
        }
    }

    #[test]
    fn auto_tilt_targets_dominating_point() {
        let coin = ObservableSpec::coin();
        let q = auto_tilt(&uniform(), &coin, &s2(), 100, [0.7, 1.0]).unwrap();
        assert!((q - (7.0f64 / 3.0).ln()).abs() < 1e-6);
        assert_eq!(
            auto_tilt(&uniform(), &coin, &s2(), 100, [0.4, 0.6]).unwrap(),
            0.0
        );
        let q = auto_tilt(&uniform(), &coin, &s2(), 100, [0.0, 0.3]).unwrap();
        assert!((q - (3.0f64 / 7.0).ln()).abs() < 1e-6);
        assert!(auto_tilt(&uniform(), &coin, &s2(), 100, [2.0, 3.0]).is_err());
    }

    #[test]
    fn gartner_ellis_examples() {
        let grid = Grid::from_range(-20.0, 20.0, 0.05).unwrap();
        let coin = DepthCurve::from_limit(
            CurveKind::LogMgf,
            grid,
            grid.points()
                .map(|q| ((1.0 + q.exp()) / 2.0).ln())
                .collect(),
        )
        .unwrap();
        let r = gartner_ellis_check(&coin).unwrap();
        assert!(r.differentiable_interior && r.kinks.is_empty());
        assert!((r.rate.value_at(0.7).unwrap() - I07).abs() < 1e-3);

        let relu = DepthCurve::from_limit(
            CurveKind::LogMgf,
            grid,
            grid.points().map(|q| q.max(0.0)).collect(),
        )
        .unwrap();
        let r = gartner_ellis_check(&relu).unwrap();
        assert_eq!(r.kinks.len(), 1);
        assert!(r.kinks[0].abs() < 1e-9);

        let c = 0.3;
        let lin = DepthCurve::from_limit(
            CurveKind::LogMgf,
            grid,
            grid.points().map(|q| c * q).collect(),
        )
        .unwrap();
        let r = gartner_ellis_check(&lin).unwrap();
        assert!(r.differentiable_interior);
        for (i, v) in r.rate.values.iter().enumerate() {
            let alpha = r.rate.grid.value(i);
            if (alpha - c).abs() < 1e-9 {
                assert!(v.finite().unwrap().abs() < 1e-12);
            } else {
                assert!(!v.is_finite(), "α={alpha}");
            }
        }

        let mut unconverged = coin.clone();
        unconverged.converged[3] = false;
        assert!(matches!(
            gartner_ellis_check(&unconverged),
            Err(Error::Unconverged(_))
        ));
    }
}
