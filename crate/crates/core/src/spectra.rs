//! Entropy and dimension spectra assembled from rate functions, the
//! closed-form coin oracle, the direct covering-count estimator and the
//! ratio spectrum `J(γ) = inf_{α/β=γ} I(α, β)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::convex::{
    domain_endpoints, kink_scan, legendre_conjugate, DomainEndpoints, ExtReal, GridFunction,
    SubgradientInterval,
};
use crate::error::{invalid, Error, Result};
use crate::exec::{ordered_map, ExecOptions};
use crate::grid::Grid;
use crate::io::{fmt_f64, parse_f64, parse_flag, read_rows};
use crate::numeric::{exact_split, LogSumExp};
use crate::observables::ObservableSpec;
use crate::pressure::{extrapolate_limit, log_mgf_curve, CurveOptions, LimitEstimate, MgfCurve};
use crate::symbolic::{verify_ahlfors_bowen, AhlforsBowenReport, ReferenceMeasure, ShiftSpace};

/// `H(p) = −p log p − (1−p) log(1−p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let t = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    t(p) + t(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    /// `None` when the level set is empty.
    pub dimension: Option<f64>,
    pub rate: ExtReal,
}

/// Digit-frequency spectrum of the binary full shift:
/// dimension `H(p)/log 2`, rate `log 2 − H(p)`.
pub fn besicovitch_oracle(p: f64) -> OracleValue {
    if !(0.0..=1.0).contains(&p) {
        return OracleValue {
            dimension: None,
            rate: ExtReal::PlusInf,
        };
    }
    let h = binary_entropy(p);
    OracleValue {
        dimension: Some(h / std::f64::consts::LN_2),
        rate: ExtReal::Finite(std::f64::consts::LN_2 - h),
    }
}

/// `entropy / log l`; `None` propagates an empty level set.
pub fn hausdorff_from_entropy(entropy: Option<f64>, l: usize) -> Result<Option<f64>> {
    let Some(e) = entropy else { return Ok(None) };
    let log_l = (l as f64).ln();
    if l < 2 || !(e >= -1e-9) || e > log_l + 1e-9 {
        return Err(invalid(format!("entropy {e} outside [0, log {l}]")));
    }
    Ok(Some(e / log_l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reliability {
    Reliable,
    /// The limit log-MGF was not converged at the maximising q.
    Unconverged,
    /// α equals an estimated domain endpoint, where only the upper bound holds.
    Endpoint,
    /// α lies inside the subgradient interval of a detected kink.
    KinkShadow,
}

impl Reliability {
    pub fn as_str(self) -> &'static str {
        match self {
            Reliability::Reliable => "reliable",
            Reliability::Unconverged => "unconverged",
            Reliability::Endpoint => "endpoint",
            Reliability::KinkShadow => "kink_shadow",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "reliable" => Reliability::Reliable,
            "unconverged" => Reliability::Unconverged,
            "endpoint" => Reliability::Endpoint,
            "kink_shadow" => Reliability::KinkShadow,
            other => return Err(Error::Parse(format!("unknown reliability {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumLabel {
    /// `E(α) = h − I(α)` on the open interval.
    Equality,
    /// Only `E(α) ≤ h − I(α)` is certified.
    UpperBound,
}

impl SpectrumLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumLabel::Equality => "equality",
            SpectrumLabel::UpperBound => "upper-bound",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "equality" => Ok(SpectrumLabel::Equality),
            "upper-bound" => Ok(SpectrumLabel::UpperBound),
            other => Err(Error::Parse(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// Level α (or ratio γ for ratio spectra).
    pub alpha: f64,
    pub rate: ExtReal,
    /// `h − rate`; `None` for empty rows. Stored so that
    /// `entropy + rate == h` holds exactly.
    pub entropy: Option<f64>,
    pub dimension: Option<f64>,
    pub empty: bool,
    pub reliability: Reliability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub h_top: f64,
    pub alphabet: usize,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub endpoints_converged: bool,
    pub observable: serde_json::Value,
    pub depths: Vec<usize>,
    pub q_grid: Grid,
    pub label: SpectrumLabel,
    pub ahlfors_bowen_pass: bool,
    pub kinks: Vec<f64>,
    pub convexified: bool,
    /// The cauchy-mode error bound is a heuristic.
    pub error_bound_heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub metadata: SpectrumMetadata,
    pub rows: Vec<SpectrumRow>,
}

pub const SPECTRUM_CSV_HEADER: [&str; 7] = [
    "alpha",
    "rate",
    "entropy",
    "dimension",
    "empty_flag",
    "reliability_flag",
    "label",
];

impl SpectrumTable {
    pub fn row_at(&self, alpha: f64) -> Option<&SpectrumRow> {
        self.rows
            .iter()
            .find(|r| (r.alpha - alpha).abs() <= 1e-9 * (1.0 + alpha.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = SPECTRUM_CSV_HEADER.join(",");
        out.push('\n');
        let label = self.metadata.label.as_str();
        for r in &self.rows {
            let rate = match r.rate {
                ExtReal::Finite(x) => fmt_f64(x),
                ExtReal::PlusInf => "inf".into(),
            };
            let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_f64(r.alpha),
                rate,
                opt(r.entropy),
                opt(r.dimension),
                r.empty as u8,
                r.reliability.as_str(),
                label
            ));
        }
        out
    }

    /// Parses rows (and the common label) back from [`to_csv`](Self::to_csv).
    pub fn rows_from_csv(text: &str) -> Result<(Vec<SpectrumRow>, Option<SpectrumLabel>)> {
        let (_, rows) = read_rows(text, Some(&SPECTRUM_CSV_HEADER))?;
        let mut label = None;
        let parsed = rows
            .iter()
            .map(|r| {
                label = Some(SpectrumLabel::parse(&r[6])?);
                let opt = |s: &str| -> Result<Option<f64>> {
                    if s.is_empty() {
                        Ok(None)
                    } else {
                        parse_f64(s).map(Some)
                    }
                };
                let rate = if r[1] == "inf" {
                    ExtReal::PlusInf
                } else {
                    ExtReal::Finite(parse_f64(&r[1])?)
                };
                Ok(SpectrumRow {
                    alpha: parse_f64(&r[0])?,
                    rate,
                    entropy: opt(&r[2])?,
                    dimension: opt(&r[3])?,
                    empty: parse_flag(&r[4])?,
                    reliability: Reliability::parse(&r[5])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((parsed, label))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum tables serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub q_grid: Grid,
    /// `None` selects `[α̲ − pad, ᾱ + pad]` snapped to `alpha_step`.
    pub alpha_grid: Option<Grid>,
    pub alpha_step: f64,
    pub alpha_pad: f64,
    pub depths: Vec<usize>,
    pub curve: CurveOptions,
    pub ahlfors_bowen_depth: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            q_grid: Grid {
                min: -20.0,
                step: 0.05,
                len: 801,
            },
            alpha_grid: None,
            alpha_step: 0.005,
            alpha_pad: 0.05,
            depths: vec![4, 8, 16],
            curve: CurveOptions::default(),
            ahlfors_bowen_depth: 8,
        }
    }
}

/// Everything computed on the way to a spectrum table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub table: SpectrumTable,
    pub mgf: MgfCurve,
    /// Convexified limit `φ_X` on the q-grid.
    pub phi: GridFunction,
    /// `φ_X^*` on the α-grid.
    pub rate: GridFunction,
    pub endpoints: DomainEndpoints,
    pub ahlfors_bowen: AhlforsBowenReport,
}

fn row(
    alpha: f64,
    rate: ExtReal,
    h: f64,
    l: usize,
    inside: bool,
    reliability: Reliability,
) -> Result<SpectrumRow> {
    let (rate, entropy) = match rate {
        ExtReal::Finite(r) if inside && r <= h => {
            let (entropy, rate) = exact_split(h, r);
            (ExtReal::Finite(rate), Some(entropy))
        }
        other => (other, None),
    };
    Ok(SpectrumRow {
        alpha,
        rate,
        entropy,
        dimension: hausdorff_from_entropy(entropy, l)?,
        empty: entropy.is_none(),
        reliability,
    })
}

/// Entropy spectrum `E(α) = h_top − φ_X^*(α)` through the log-MGF route.
pub fn entropy_spectrum(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    measure: &ReferenceMeasure,
    options: &SpectrumOptions,
    opts: &ExecOptions,
) -> Result<SpectrumRun> {
    spec.validate(space)?;
    measure.check_compatible(space)?;
    let ab = verify_ahlfors_bowen(
        measure,
        space,
        options.ahlfors_bowen_depth.max(2),
        1.0,
        opts,
    )?;
    let mgf = log_mgf_curve(
        spec,
        space,
        measure,
        options.q_grid,
        &options.depths,
        &options.curve,
        opts,
    )?;
    let phi = mgf.limit_function().ensure_convex();
    let kinks: Vec<(f64, SubgradientInterval)> = kink_scan(&phi);
    let endpoints = domain_endpoints(&phi)?;
    let alpha_grid = match options.alpha_grid {
        Some(g) => g,
        None => Grid::snapped(
            endpoints.lower - options.alpha_pad,
            endpoints.upper + options.alpha_pad,
            options.alpha_step,
        )?,
    };
    let conj = legendre_conjugate(&phi, alpha_grid)?;
    let h = space.topological_entropy();
    let l = space.alphabet();

    let reliability = |alpha: f64, argmax: usize| -> Reliability {
        if kinks.iter().any(|(_, s)| s.contains(alpha)) {
            Reliability::KinkShadow
        } else if !mgf.converged[argmax] {
            Reliability::Unconverged
        } else {
            Reliability::Reliable
        }
    };
    let within = |alpha: f64| alpha >= endpoints.lower && alpha <= endpoints.upper;

    let mut rows = Vec::with_capacity(alpha_grid.len + 2);
    for (k, alpha) in alpha_grid.points().enumerate() {
        rows.push(row(
            alpha,
            conj.function.values[k],
            h,
            l,
            within(alpha),
            reliability(alpha, conj.argmax[k]),
        )?);
    }
    for end in [endpoints.lower, endpoints.upper] {
        if rows.iter().any(|r| r.alpha == end) {
            let r = rows.iter_mut().find(|r| r.alpha == end).expect("present");
            r.reliability = Reliability::Endpoint;
            continue;
        }
        let c = legendre_conjugate(&phi, Grid::single(end))?;
        rows.push(row(
            end,
            c.function.values[0],
            h,
            l,
            true,
            Reliability::Endpoint,
        )?);
    }
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    rows.dedup_by(|a, b| a.alpha == b.alpha);

    let label = if spec.supports_equality() && kinks.is_empty() && ab.pass {
        SpectrumLabel::Equality
    } else {
        SpectrumLabel::UpperBound
    };
    let metadata = SpectrumMetadata {
        h_top: h,
        alphabet: l,
        alpha_lower: endpoints.lower,
        alpha_upper: endpoints.upper,
        endpoints_converged: endpoints.lower_converged && endpoints.upper_converged,
        observable: serde_json::to_value(spec).map_err(|e| invalid(e.to_string()))?,
        depths: options.depths.clone(),
        q_grid: options.q_grid,
        label,
        ahlfors_bowen_pass: ab.pass,
        kinks: kinks.iter().map(|(q, _)| *q).collect(),
        convexified: phi.repaired,
        error_bound_heuristic: matches!(options.curve.mode, crate::pressure::LimitMode::Cauchy),
    };
    Ok(SpectrumRun {
        table: SpectrumTable { metadata, rows },
        mgf,
        rate: conj.function,
        phi,
        endpoints,
        ahlfors_bowen: ab,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringEstimate {
    pub n: usize,
    pub count: u128,
    /// `(1/n) log count`; `None` when no cylinder qualifies.
    pub raw: Option<f64>,
}

/// Counts length-`n` cylinders whose range of `X_n / n` meets
/// `(α − δ, α + δ)`.
pub fn covering_entropy_estimate(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    alpha: f64,
    delta: f64,
    n: usize,
    opts: &ExecOptions,
) -> Result<CoveringEstimate> {
    if n == 0 || !(delta > 0.0) {
        return Err(invalid("covering estimate needs n ≥ 1 and δ > 0"));
    }
    spec.validate(space)?;
    let nf = n as f64;
    if let Some(p) = spec.additive_potential().filter(|p| p.window == 1) {
        let count = histogram_count(&p.table, space, n, opts, |x| {
            x / nf > alpha - delta && x / nf < alpha + delta
        })?;
        return Ok(CoveringEstimate {
            n,
            count,
            raw: (count > 0).then(|| (count as f64).ln() / nf),
        });
    }
    opts.check_budget(space.word_count(n + spec.window() - 1))?;
    let prefixes = space.chunk_prefixes(n);
    let counts = ordered_map(&prefixes, opts.shards, |prefix| {
        let mut count = 0u128;
        space.for_each_extension(prefix, n, &mut |w| {
            let r = spec.range_on(space, w, n);
            if r.upper / nf > alpha - delta && r.lower / nf < alpha + delta {
                count += 1;
            }
        });
        count
    });
    let count: u128 = counts.iter().sum();
    Ok(CoveringEstimate {
        n,
        count,
        raw: (count > 0).then(|| (count as f64).ln() / nf),
    })
}

// Single-symbol potentials only see the symbol histogram, so words are
// counted per (last symbol, histogram) state instead of one by one.
fn histogram_count(
    table: &[f64],
    space: &ShiftSpace,
    n: usize,
    opts: &ExecOptions,
    keep: impl Fn(f64) -> bool + Sync,
) -> Result<u128> {
    let l = space.alphabet();
    let mut states: BTreeMap<(u8, Vec<u32>), u128> = BTreeMap::new();
    for a in 0..l {
        let mut h = vec![0u32; l];
        h[a] = 1;
        states.insert((a as u8, h), 1);
    }
    let overflow = || Error::Infeasible {
        needed: u128::MAX,
        budget: opts.budget,
    };
    for _ in 1..n {
        opts.check_budget(states.len() as u128 * l as u128)?;
        let mut next: BTreeMap<(u8, Vec<u32>), u128> = BTreeMap::new();
        for ((last, h), c) in &states {
            for &b in space.successors(*last) {
                let mut h2 = h.clone();
                h2[b as usize] += 1;
                let slot = next.entry((b, h2)).or_insert(0);
                *slot = slot.checked_add(*c).ok_or_else(overflow)?;
            }
        }
        states = next;
    }
    let mut by_hist: BTreeMap<Vec<u32>, u128> = BTreeMap::new();
    for ((_, h), c) in states {
        let slot = by_hist.entry(h).or_insert(0);
        *slot = slot.checked_add(c).ok_or_else(overflow)?;
    }
    let hists: Vec<(Vec<u32>, u128)> = by_hist.into_iter().collect();
    let parts = ordered_map(&hists, opts.shards, |(h, c)| {
        let x: f64 = h.iter().zip(table).map(|(&k, &v)| k as f64 * v).sum();
        if keep(x) {
            *c
        } else {
            0
        }
    });
    parts
        .into_iter()
        .try_fold(0u128, |acc, c| acc.checked_add(c))
        .ok_or_else(overflow)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioOptions {
    /// Used for both `q₁` and `q₂`.
    pub q_grid: Grid,
    pub alpha_grid: Grid,
    pub beta_grid: Grid,
    pub gamma_grid: Grid,
    pub depths: Vec<usize>,
    pub curve: CurveOptions,
    pub ahlfors_bowen_depth: usize,
}

impl RatioOptions {
    /// Grids covering the per-step ranges of both potentials, with a shared
    /// step so that `α = β` lines fall on grid points.
    pub fn for_specs(num: &ObservableSpec, den: &ObservableSpec, step: f64) -> Result<Self> {
        let (a0, a1) = per_step_range(num)?;
        let (b0, b1) = per_step_range(den)?;
        let pad = 0.05;
        let alpha_grid = Grid::snapped(a0 - pad, a1 + pad, step)?;
        let beta_grid = Grid::snapped((b0 - pad).max(b0 / 2.0), b1 + pad, step)?;
        let (blo, bhi) = (beta_grid.min, beta_grid.max());
        let cands = [
            alpha_grid.min / blo,
            alpha_grid.min / bhi,
            alpha_grid.max() / blo,
            alpha_grid.max() / bhi,
        ];
        let glo = cands.iter().cloned().fold(f64::INFINITY, f64::min);
        let ghi = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(RatioOptions {
            q_grid: Grid::from_range(-10.0, 10.0, 0.1)?,
            alpha_grid,
            beta_grid,
            gamma_grid: Grid::snapped(glo, ghi, step)?,
            depths: vec![4, 8, 16],
            curve: CurveOptions::default(),
            ahlfors_bowen_depth: 8,
        })
    }
}

fn per_step_range(spec: &ObservableSpec) -> Result<(f64, f64)> {
    let p = spec.additive_potential().ok_or_else(|| {
        Error::Unsupported("ratio spectra need additive window potentials".into())
    })?;
    let lo = p.table.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = p.table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Two-variable limit log-MGF `φ(q₁, q₂)` of `(X_n, Y_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointMgf {
    pub q_grid: Grid,
    pub depths: Vec<usize>,
    /// `limit[j][i] = φ(q₁ = q_i, q₂ = q_j)`.
    pub limit: Vec<Vec<f64>>,
    pub converged: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn joint_log_mgf(
    num: &ObservableSpec,
    den: &ObservableSpec,
    space: &ShiftSpace,
    measure: &ReferenceMeasure,
    q_grid: Grid,
    depths: &[usize],
    curve: &CurveOptions,
    opts: &ExecOptions,
) -> Result<JointMgf> {
    num.validate(space)?;
    den.validate(space)?;
    measure.check_compatible(space)?;
    if depths.is_empty() || depths.contains(&0) {
        return Err(invalid("depth schedule must be nonempty and positive"));
    }
    let k = num.window().max(den.window());
    let qs = q_grid.to_vec();
    let m = qs.len();
    let mut per_depth: Vec<Vec<f64>> = Vec::with_capacity(depths.len());
    for &n in depths {
        let len = n + k - 1;
        opts.check_budget(space.word_count(len))?;
        let prefixes = space.chunk_prefixes(len);
        // (log ν, X, Y) with exact multiplicities, merged across chunks in
        // sorted order so the result does not depend on chunking
        let chunks = ordered_map(&prefixes, opts.shards, |prefix| {
            let mut terms: Vec<(f64, f64, f64)> = Vec::new();
            space.for_each_extension(prefix, len, &mut |w| {
                let lw = measure.log_mass(w);
                if lw > f64::NEG_INFINITY {
                    terms.push((lw, num.value(w, n), den.value(w, n)));
                }
            });
            terms
        });
        let mut terms: Vec<(f64, f64, f64)> = chunks.into_iter().flatten().collect();
        terms.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(a.2.total_cmp(&b.2))
                .then(a.0.total_cmp(&b.0))
        });
        let mut merged: Vec<(f64, f64, f64, u64)> = Vec::new();
        for t in terms {
            match merged.last_mut() {
                Some(last) if (last.0, last.1, last.2) == t => last.3 += 1,
                _ => merged.push((t.0, t.1, t.2, 1)),
            }
        }
        let merged: Vec<(f64, f64, f64)> = merged
            .into_iter()
            .map(|(lw, x, y, c)| (lw + (c as f64).ln(), x, y))
            .collect();
        let rows: Vec<usize> = (0..m).collect();
        let grid_vals = ordered_map(&rows, opts.shards, |&j| {
            let q2 = qs[j];
            qs.iter()
                .map(|&q1| {
                    if q1 == 0.0 && q2 == 0.0 {
                        return 0.0;
                    }
                    let mut acc = LogSumExp::new();
                    for &(lw, x, y) in &merged {
                        acc.add(lw + q1 * x + q2 * y);
                    }
                    acc.value() / n as f64
                })
                .collect::<Vec<f64>>()
        });
        per_depth.push(grid_vals.into_iter().flatten().collect());
    }
    let mut limit = vec![vec![0.0; m]; m];
    let mut converged = true;
    for j in 0..m {
        for i in 0..m {
            let est = if depths.len() >= 3 {
                let col = depths
                    .iter()
                    .zip(&per_depth)
                    .map(|(&n, v)| (n, v[j * m + i]))
                    .collect();
                extrapolate_limit(&col, curve.mode, curve.tolerance)?
            } else {
                LimitEstimate {
                    estimate: per_depth[depths.len() - 1][j * m + i],
                    error_bound: 0.0,
                    converged: false,
                }
            };
            converged &= est.converged;
            limit[j][i] = est.estimate;
        }
    }
    Ok(JointMgf {
        q_grid,
        depths: depths.to_vec(),
        limit,
        converged,
    })
}

/// `I(α, β) = max_{q₁,q₂} (αq₁ + βq₂ − φ(q₁, q₂))` on the (α, β) grid by
/// iterated one-dimensional sweeps; `+inf` where a maximiser sits on the
/// q-grid boundary. Indexed `[β][α]`.
pub fn joint_rate(phi: &JointMgf, alpha_grid: Grid, beta_grid: Grid) -> Result<Vec<Vec<ExtReal>>> {
    let m = phi.q_grid.len;
    // inner[j]: conjugate in q₁ of φ(·, q₂_j)
    let inner = (0..m)
        .map(|j| {
            let f = GridFunction::finite(phi.q_grid, phi.limit[j].clone(), "joint mgf slice");
            legendre_conjugate(&f, alpha_grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![vec![ExtReal::PlusInf; alpha_grid.len]; beta_grid.len];
    #[allow(clippy::needless_range_loop)] // `a` indexes columns of both `inner` and `out`
    for a in 0..alpha_grid.len {
        // max_{q₂} (β q₂ + C(q₂, α)) is the conjugate of q₂ ↦ −C(q₂, α),
        // restricted to the q₂ where the inner maximiser is interior; along a
        // flat ridge this keeps ties away from the q₁ boundary
        let values: Vec<ExtReal> = inner
            .iter()
            .map(|c| {
                if c.boundary[a] {
                    ExtReal::PlusInf
                } else {
                    ExtReal::Finite(-c.raw[a])
                }
            })
            .collect();
        let Ok(g) = GridFunction::new(phi.q_grid, values, "partial conjugate") else {
            continue;
        };
        let Some((lo, hi)) = g.finite_range() else {
            continue;
        };
        if hi - lo < 2 {
            continue;
        }
        let outer = legendre_conjugate(&g, beta_grid)?;
        for (b, beta) in beta_grid.points().enumerate() {
            let j = outer.argmax[b];
            let obj = |j: usize| beta * phi.q_grid.value(j) + inner[j].raw[a];
            // a maximiser pinned to the edge of the admissible q₂ range means
            // the supremum escapes through the excluded region
            let escapes = (j == lo && obj(lo) - obj(lo + 1) > 1e-12 * (1.0 + obj(lo).abs()))
                || (j == hi && obj(hi) - obj(hi - 1) > 1e-12 * (1.0 + obj(hi).abs()));
            if !outer.boundary[b] && !escapes {
                out[b][a] = ExtReal::Finite(outer.raw[b]);
            }
        }
    }
    Ok(out)
}

/// Ratio spectrum over `γ`: `J(γ) = min_β I(γβ, β)`, entropy `h − J`.
pub fn ratio_spectrum(
    num: &ObservableSpec,
    den: &ObservableSpec,
    space: &ShiftSpace,
    measure: &ReferenceMeasure,
    options: &RatioOptions,
    opts: &ExecOptions,
) -> Result<SpectrumTable> {
    let (b0, _) = per_step_range(den)?;
    if !(b0 > 0.0) {
        return Err(invalid(
            "ratio denominator must be strictly positive per step",
        ));
    }
    if !(options.beta_grid.min > 0.0) {
        return Err(invalid("β-grid must be positive"));
    }
    let ab = verify_ahlfors_bowen(
        measure,
        space,
        options.ahlfors_bowen_depth.max(2),
        1.0,
        opts,
    )?;
    let phi = joint_log_mgf(
        num,
        den,
        space,
        measure,
        options.q_grid,
        &options.depths,
        &options.curve,
        opts,
    )?;
    let rate = joint_rate(&phi, options.alpha_grid, options.beta_grid)?;
    let ag = options.alpha_grid;
    let h = space.topological_entropy();
    let l = space.alphabet();
    let interpolate = |b: usize, alpha: f64| -> Option<f64> {
        let pos = (alpha - ag.min) / ag.step;
        if pos < -1e-9 || pos > (ag.len - 1) as f64 + 1e-9 {
            return None;
        }
        let near = pos.round();
        if (pos - near).abs() <= 1e-9 {
            return rate[b][near as usize].finite();
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        let (lo, hi) = (rate[b][i].finite()?, rate[b].get(i + 1)?.finite()?);
        Some(lo + t * (hi - lo))
    };
    let mut rows = Vec::with_capacity(options.gamma_grid.len);
    for gamma in options.gamma_grid.points() {
        let j = options
            .beta_grid
            .points()
            .enumerate()
            .filter_map(|(b, beta)| interpolate(b, gamma * beta))
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
        let value = j.map_or(ExtReal::PlusInf, ExtReal::Finite);
        let reliability = if phi.converged {
            Reliability::Reliable
        } else {
            Reliability::Unconverged
        };
        rows.push(row(gamma, value, h, l, true, reliability)?);
    }
    let label = if num.supports_equality() && den.supports_equality() && ab.pass {
        SpectrumLabel::Equality
    } else {
        SpectrumLabel::UpperBound
    };
    let nonempty: Vec<f64> = rows.iter().filter(|r| !r.empty).map(|r| r.alpha).collect();
    let metadata = SpectrumMetadata {
        h_top: h,
        alphabet: l,
        alpha_lower: nonempty.first().copied().unwrap_or(f64::NAN),
        alpha_upper: nonempty.last().copied().unwrap_or(f64::NAN),
        endpoints_converged: phi.converged,
        observable: serde_json::json!({
            "numerator": serde_json::to_value(num).map_err(|e| invalid(e.to_string()))?,
            "denominator": serde_json::to_value(den).map_err(|e| invalid(e.to_string()))?,
        }),
        depths: options.depths.clone(),
        q_grid: options.q_grid,
        label,
        ahlfors_bowen_pass: ab.pass,
        kinks: vec![],
        convexified: false,
        error_bound_heuristic: matches!(options.curve.mode, crate::pressure::LimitMode::Cauchy),
    };
    Ok(SpectrumTable { metadata, rows })
}
