//! Finite-depth topological pressure `P_n(q)`, the normalised log-moment
//! generating function `φ_n(q)`, limit extrapolation, and the
//! transfer-operator pressure used as an exact oracle for window ≤ 2
//! potentials.
//!
//! All exponential sums run through [`LogSumExp`] over a lexicographic word
//! stream split into fixed prefix chunks (see [`crate::exec`]), so serial
//! and parallel runs agree bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::convex::GridFunction;
use crate::error::{invalid, Error, Result};
use crate::exec::{ordered_map, ExecOptions};
use crate::grid::Grid;
use crate::io::{fmt_f64, grid_from_points, parse_f64, read_rows};
use crate::numeric::{log_sum_exp, perron, LogSumExp};
use crate::observables::{CylinderValue, ObservableSpec};
use crate::symbolic::{ReferenceMeasure, ShiftSpace};

/// Which end of the cylinder range of `q·X_n` enters the pressure sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// `sup_{ω∈[w]} q·X_n(ω)`, the defining choice.
    #[default]
    Sup,
    /// `inf_{ω∈[w]} q·X_n(ω)`, for bracketing the limit from below.
    Inf,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    log_weight: f64,
    range: CylinderValue,
}

impl Term {
    #[inline]
    fn exponent(&self, q: f64, endpoint: Endpoint) -> f64 {
        let qx = match endpoint {
            Endpoint::Sup => self.range.sup_scaled(q),
            Endpoint::Inf => self.range.inf_scaled(q),
        };
        self.log_weight + qx
    }
}

/// Sorts terms and merges exact duplicates into one term carrying the log
/// multiplicity. Only reorders within a chunk, so results stay independent
/// of the shard count.
fn compress(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(|a, b| {
        a.range
            .lower
            .total_cmp(&b.range.lower)
            .then(a.range.upper.total_cmp(&b.range.upper))
            .then(a.log_weight.total_cmp(&b.log_weight))
    });
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    let mut run = 0usize;
    for t in terms {
        match out.last() {
            Some(last)
                if last.range == t.range && last.log_weight.to_bits() == t.log_weight.to_bits() =>
            {
                run += 1
            }
            _ => {
                if let Some(last) = out.last_mut() {
                    last.log_weight += (run as f64).ln();
                }
                out.push(t);
                run = 1;
            }
        }
    }
    if let Some(last) = out.last_mut() {
        last.log_weight += (run as f64).ln();
    }
    out
}

/// `log Σ_w exp(log_weight(w) + q·X_n(w))` for each `q`, over all admissible
/// words of length `len`.
fn log_sums<F>(
    space: &ShiftSpace,
    len: usize,
    qs: &[f64],
    endpoint: Endpoint,
    opts: &ExecOptions,
    term: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[u8]) -> Option<(f64, CylinderValue)> + Sync + Send,
{
    opts.check_budget(space.word_count(len))?;
    let prefixes = space.chunk_prefixes(len);
    let partials: Vec<Vec<LogSumExp>> = ordered_map(&prefixes, opts.shards, |prefix| {
        let mut terms = Vec::new();
        space.for_each_extension(prefix, len, &mut |w| {
            if let Some((log_weight, range)) = term(w) {
                if log_weight > f64::NEG_INFINITY {
                    terms.push(Term { log_weight, range });
                }
            }
        });
        let terms = compress(terms);
        qs.iter()
            .map(|&q| {
                let mut acc = LogSumExp::new();
                for t in &terms {
                    acc.add(t.exponent(q, endpoint));
                }
                acc
            })
            .collect()
    });
    let mut total = vec![LogSumExp::new(); qs.len()];
    for chunk in &partials {
        for (acc, part) in total.iter_mut().zip(chunk) {
            acc.merge(part);
        }
    }
    Ok(total.iter().map(LogSumExp::value).collect())
}

fn check_depth(n: usize) -> Result<()> {
    if n == 0 {
        Err(invalid("depth n must be at least 1"))
    } else {
        Ok(())
    }
}

/// `n·P_n(q)` for each `q`: `log Σ_{|w|=n} sup_{[w]} exp(q·X_n)`.
fn pressure_sums(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    qs: &[f64],
    n: usize,
    endpoint: Endpoint,
    opts: &ExecOptions,
) -> Result<Vec<f64>> {
    check_depth(n)?;
    spec.validate(space)?;
    // cost is the number of completed words
    opts.check_budget(space.word_count(n + spec.window() - 1))?;
    log_sums(space, n, qs, endpoint, opts, |w| {
        Some((0.0, spec.range_on(space, w, n)))
    })
}

/// Finite-depth pressure
/// `P_n(q) = (1/n) log Σ_{|w|=n} sup_{ω∈[w]} exp(q·X_n(ω))`.
pub fn pressure_at(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    q: f64,
    n: usize,
    endpoint: Endpoint,
    opts: &ExecOptions,
) -> Result<f64> {
    Ok(pressure_sums(spec, space, &[q], n, endpoint, opts)?[0] / n as f64)
}

/// Finite-depth cocycle pressure `(1/n) log Σ_w sup_{[w]} ‖M_n‖^t`.
pub fn cocycle_pressure_at(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    t: f64,
    n: usize,
    opts: &ExecOptions,
) -> Result<f64> {
    if !matches!(spec, ObservableSpec::Cocycle { .. }) {
        return Err(Error::Unsupported(
            "cocycle pressure needs a matrix cocycle observable".into(),
        ));
    }
    pressure_at(spec, space, t, n, Endpoint::Sup, opts)
}

/// `log Z_n(q) = log ∫ e^{q X_n} dν` for each `q`.
pub fn log_partition(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    measure: &ReferenceMeasure,
    qs: &[f64],
    n: usize,
    opts: &ExecOptions,
) -> Result<Vec<f64>> {
    check_depth(n)?;
    spec.validate(space)?;
    measure.check_compatible(space)?;
    let len = n + spec.window() - 1;
    let mut sums = log_sums(space, len, qs, Endpoint::Sup, opts, |w| {
        Some((measure.log_mass(w), CylinderValue::exact(spec.value(w, n))))
    })?;
    // ν is a probability measure on the space, so Z_n(0) = 1 exactly
    for (s, &q) in sums.iter_mut().zip(qs) {
        if q == 0.0 {
            *s = 0.0;
        }
    }
    Ok(sums)
}

/// `φ_n(q) = (1/n) log ∫ e^{q X_n} dν`.
pub fn log_mgf_at(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    measure: &ReferenceMeasure,
    q: f64,
    n: usize,
    opts: &ExecOptions,
) -> Result<f64> {
    Ok(log_partition(spec, space, measure, &[q], n, opts)?[0] / n as f64)
}

/// Exact limit pressure `P(qφ) = log λ_max(L_q)` for a window ≤ 2 additive
/// potential, with `L_q[a,b] = 1[ab admissible]·exp(q·φ(a,b))`.
pub fn transfer_pressure(spec: &ObservableSpec, space: &ShiftSpace, q: f64) -> Result<f64> {
    let potential = spec.additive_potential().ok_or_else(|| {
        Error::Unsupported("transfer pressure needs an additive window potential".into())
    })?;
    spec.validate(space)?;
    let l = space.alphabet();
    let k = potential.window;
    if k > 2 {
        return Err(Error::Unsupported(format!(
            "transfer pressure supports window ≤ 2, got {k}; use pressure_at with extrapolate_limit"
        )));
    }
    if k == 1 && space.is_full() {
        return Ok(log_sum_exp(potential.table.iter().map(|&p| q * p)));
    }
    let exponent = |a: usize, b: usize| -> f64 {
        let phi = if k == 1 {
            potential.table[a]
        } else {
            potential.table[a * l + b]
        };
        q * phi
    };
    let shift = (0..l)
        .flat_map(|a| {
            space
                .successors(a as u8)
                .iter()
                .map(move |&b| (a, b as usize))
        })
        .map(|(a, b)| exponent(a, b))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut matrix = vec![0.0; l * l];
    for a in 0..l {
        for &b in space.successors(a as u8) {
            let b = b as usize;
            matrix[a * l + b] = (exponent(a, b) - shift).exp();
        }
    }
    let root = perron(&matrix, l, 1e-12)?;
    Ok(shift + root.value.ln())
}

/// Growth of the additive slack `Δ_n` in the subadditivity inequality
/// `a_{n+m} ≤ a_n + a_m + D + Δ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "growth", rename_all = "snake_case")]
pub enum SlackGrowth {
    #[default]
    Zero,
    Constant {
        c: f64,
    },
    /// `Δ_n = c·log(n)`
    Logarithmic {
        c: f64,
    },
}

impl SlackGrowth {
    fn at(&self, n: usize) -> f64 {
        match self {
            SlackGrowth::Zero => 0.0,
            SlackGrowth::Constant { c } => *c,
            SlackGrowth::Logarithmic { c } => c * (n as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LimitMode {
    /// Richardson extrapolation against a `c/n` correction over the two
    /// deepest depths. The error bound is its disagreement with the same
    /// step one depth shallower, a heuristic.
    #[default]
    Cauchy,
    /// Sandwich from a two-sided subadditivity defect `D + Δ_n`.
    Fekete { defect: f64, slack: SlackGrowth },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub estimate: f64,
    pub error_bound: f64,
    pub converged: bool,
}

/// Estimates `lim_n a_n` from values at several depths.
pub fn extrapolate_limit(
    values: &BTreeMap<usize, f64>,
    mode: LimitMode,
    tolerance: f64,
) -> Result<LimitEstimate> {
    if values.len() < 3 {
        return Err(invalid(format!(
            "extrapolation needs at least 3 depths, got {}",
            values.len()
        )));
    }
    if values.keys().any(|&n| n == 0) || values.values().any(|v| !v.is_finite()) {
        return Err(invalid("depths must be positive and values finite"));
    }
    let (estimate, error_bound) = match mode {
        LimitMode::Cauchy => {
            // a_n ≈ a + c/n, eliminated between consecutive depths
            let tail: Vec<(f64, f64)> = values
                .iter()
                .rev()
                .take(3)
                .rev()
                .map(|(&n, &v)| (n as f64, v))
                .collect();
            let richardson = |(n1, p1): (f64, f64), (n2, p2): (f64, f64)| {
                if p1 == p2 {
                    p2
                } else {
                    (n2 * p2 - n1 * p1) / (n2 - n1)
                }
            };
            let deep = richardson(tail[1], tail[2]);
            let shallow = richardson(tail[0], tail[1]);
            (deep, (deep - shallow).abs())
        }
        LimitMode::Fekete { defect, slack } => {
            let mut upper = f64::INFINITY;
            let mut lower = f64::NEG_INFINITY;
            for (&n, &p) in values {
                let pad = (defect + slack.at(n)) / n as f64;
                upper = upper.min(p + pad);
                lower = lower.max(p - pad);
            }
            if lower > upper + 1e-12 * upper.abs().max(1.0) {
                return Err(invalid(format!(
                    "defect {defect} inconsistent with the data: lower {lower} > upper {upper}"
                )));
            }
            let lower = lower.min(upper);
            (0.5 * (lower + upper), 0.5 * (upper - lower))
        }
    };
    Ok(LimitEstimate {
        estimate,
        error_bound,
        converged: error_bound < tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Pressure,
    LogMgf,
}

/// A family of finite-depth curves `q ↦ F_n(q)` plus their extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthCurve {
    pub kind: CurveKind,
    pub q_grid: Grid,
    pub depths: Vec<usize>,
    /// `values[d][i]` is the curve at depth `depths[d]` and grid point `i`.
    pub values: Vec<Vec<f64>>,
    pub limit: Vec<f64>,
    pub error_bound: Vec<f64>,
    pub converged: Vec<bool>,
    pub mode: LimitMode,
}

pub type PressureCurve = DepthCurve;
pub type MgfCurve = DepthCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    pub mode: LimitMode,
    pub tolerance: f64,
    pub endpoint: Endpoint,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            mode: LimitMode::Cauchy,
            tolerance: 1e-6,
            endpoint: Endpoint::Sup,
        }
    }
}

impl DepthCurve {
    fn assemble(
        kind: CurveKind,
        q_grid: Grid,
        depths: &[usize],
        values: Vec<Vec<f64>>,
        curve: &CurveOptions,
    ) -> Result<DepthCurve> {
        let mut limit = Vec::with_capacity(q_grid.len);
        let mut error_bound = Vec::with_capacity(q_grid.len);
        let mut converged = Vec::with_capacity(q_grid.len);
        for i in 0..q_grid.len {
            let column: BTreeMap<usize, f64> = depths
                .iter()
                .zip(&values)
                .map(|(&n, v)| (n, v[i]))
                .collect();
            let est = if depths.len() >= 3 {
                extrapolate_limit(&column, curve.mode, curve.tolerance)?
            } else {
                let v = values[depths.len() - 1][i];
                LimitEstimate {
                    estimate: v,
                    error_bound: 0.0,
                    converged: false,
                }
            };
            limit.push(est.estimate);
            error_bound.push(est.error_bound);
            converged.push(est.converged);
        }
        Ok(DepthCurve {
            kind,
            q_grid,
            depths: depths.to_vec(),
            values,
            limit,
            error_bound,
            converged,
            mode: curve.mode,
        })
    }

    /// Wraps a known limit curve (all points converged, one nominal depth).
    pub fn from_limit(kind: CurveKind, q_grid: Grid, limit: Vec<f64>) -> Result<DepthCurve> {
        if limit.len() != q_grid.len {
            return Err(invalid("limit length differs from grid length"));
        }
        Ok(DepthCurve {
            kind,
            q_grid,
            depths: vec![],
            values: vec![],
            error_bound: vec![0.0; limit.len()],
            converged: vec![true; limit.len()],
            limit,
            mode: LimitMode::Cauchy,
        })
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn limit_function(&self) -> GridFunction {
        let provenance = match self.kind {
            CurveKind::Pressure => "pressure limit",
            CurveKind::LogMgf => "log-mgf limit",
        };
        GridFunction::finite(self.q_grid, self.limit.clone(), provenance)
    }

    /// CSV with columns `q, n<d>…, limit, error_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q");
        for n in &self.depths {
            out.push_str(&format!(",n{n}"));
        }
        out.push_str(",limit,error_bound\n");
        for i in 0..self.q_grid.len {
            out.push_str(&fmt_f64(self.q_grid.value(i)));
            for col in &self.values {
                out.push(',');
                out.push_str(&fmt_f64(col[i]));
            }
            out.push_str(&format!(
                ",{},{}\n",
                fmt_f64(self.limit[i]),
                fmt_f64(self.error_bound[i])
            ));
        }
        out
    }

    /// Reads [`to_csv`](Self::to_csv) output; `converged` is recomputed from
    /// `tolerance`.
    pub fn from_csv(text: &str, kind: CurveKind, mode: LimitMode, tolerance: f64) -> Result<Self> {
        let (header, rows) = read_rows(text, None)?;
        let width = header.len();
        if width < 3
            || header[0] != "q"
            || header[width - 2] != "limit"
            || header[width - 1] != "error_bound"
        {
            return Err(Error::Parse(format!("unexpected curve header {header:?}")));
        }
        let depths = header[1..width - 2]
            .iter()
            .map(|h| {
                h.strip_prefix('n')
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("bad depth column {h:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let column =
            |c: usize| -> Result<Vec<f64>> { rows.iter().map(|r| parse_f64(&r[c])).collect() };
        let q = column(0)?;
        let values = (1..width - 2).map(column).collect::<Result<Vec<_>>>()?;
        let limit = column(width - 2)?;
        let error_bound = column(width - 1)?;
        Ok(DepthCurve {
            kind,
            q_grid: grid_from_points(&q)?,
            depths,
            values,
            converged: error_bound.iter().map(|&e| e < tolerance).collect(),
            limit,
            error_bound,
            mode,
        })
    }

    /// Smallest discrete second difference over every depth column.
    pub fn min_second_difference(&self) -> f64 {
        self.values
            .iter()
            .chain(std::iter::once(&self.limit))
            .flat_map(|col| col.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_depths(depths: &[usize]) -> Result<()> {
    if depths.is_empty() || depths.contains(&0) {
        return Err(invalid("depth schedule must be nonempty and positive"));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("depth schedule must be strictly increasing"));
    }
    Ok(())
}

/// `P_n` over a q-grid at each depth, with the extrapolated limit.
pub fn pressure_curve(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    q_grid: Grid,
    depths: &[usize],
    curve: &CurveOptions,
    opts: &ExecOptions,
) -> Result<PressureCurve> {
    check_depths(depths)?;
    let qs = q_grid.to_vec();
    let values = depths
        .iter()
        .map(|&n| {
            pressure_sums(spec, space, &qs, n, curve.endpoint, opts)
                .map(|v| v.into_iter().map(|x| x / n as f64).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    DepthCurve::assemble(CurveKind::Pressure, q_grid, depths, values, curve)
}

/// `φ_n` over a q-grid at each depth, with the extrapolated limit `φ_X`.
pub fn log_mgf_curve(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    measure: &ReferenceMeasure,
    q_grid: Grid,
    depths: &[usize],
    curve: &CurveOptions,
    opts: &ExecOptions,
) -> Result<MgfCurve> {
    check_depths(depths)?;
    let qs = q_grid.to_vec();
    let values = depths
        .iter()
        .map(|&n| {
            log_partition(spec, space, measure, &qs, n, opts)
                .map(|v| v.into_iter().map(|x| x / n as f64).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    DepthCurve::assemble(CurveKind::LogMgf, q_grid, depths, values, curve)
}
