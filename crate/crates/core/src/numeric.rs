//! Summation and eigenvalue kernels shared by the pressure, spectrum and
//! sampling code.

use crate::error::{Error, Result};

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.comp *= factor;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Streaming `log Σ exp(x_i)` with a running maximum and compensated
/// accumulation of the shifted terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    max: f64,
    sum: CompensatedSum,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: CompensatedSum::new(),
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            if self.max != f64::NEG_INFINITY {
                self.sum.scale((self.max - x).exp());
            }
            self.max = x;
        }
        self.sum.add((x - self.max).exp());
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        let mut rhs = other.sum;
        if other.max > self.max {
            if self.max != f64::NEG_INFINITY {
                self.sum.scale((self.max - other.max).exp());
            }
            self.max = other.max;
        } else {
            rhs.scale((other.max - self.max).exp());
        }
        self.sum.merge(&rhs);
    }

    pub fn is_empty(&self) -> bool {
        self.max == f64::NEG_INFINITY
    }

    /// `log Σ exp(x_i)`; `-inf` when nothing was added.
    pub fn value(&self) -> f64 {
        if self.is_empty() {
            return f64::NEG_INFINITY;
        }
        self.max + self.sum.value().ln()
    }
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Perron root and positive eigenvector of a nonnegative square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub value: f64,
    /// Right eigenvector normalised to max entry 1.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

const PERRON_MAX_ITER: usize = 200_000;

/// Power iteration from the all-ones vector, stopped when the Collatz–Wielandt
/// bounds `min_i (Mv)_i / v_i <= λ <= max_i (Mv)_i / v_i` agree to `rel_tol`.
///
/// `matrix` is row-major `dim × dim`. Oscillating quotients (only possible for
/// imprimitive input) are resolved by averaging two consecutive estimates
/// once the iteration cap is hit.
pub fn perron(matrix: &[f64], dim: usize, rel_tol: f64) -> Result<Perron> {
    if dim == 0 || matrix.len() != dim * dim {
        return Err(Error::InvalidArgument(format!(
            "perron: matrix of length {} is not {dim}×{dim}",
            matrix.len()
        )));
    }
    if matrix.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "perron: entries must be finite and nonnegative".into(),
        ));
    }
    let mut v = vec![1.0; dim];
    let mut w = vec![0.0; dim];
    let mut prev_estimate = f64::NAN;
    for iter in 1..=PERRON_MAX_ITER {
        for (i, wi) in w.iter_mut().enumerate() {
            let row = &matrix[i * dim..(i + 1) * dim];
            *wi = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            if *vi > 0.0 {
                let r = wi / vi;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let scale = w.iter().cloned().fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::InvalidArgument(
                "perron: iterate vanished (nilpotent matrix)".into(),
            ));
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / scale;
        }
        if hi - lo <= rel_tol * hi {
            return Ok(Perron {
                value: 0.5 * (lo + hi),
                vector: v,
                iterations: iter,
            });
        }
        if iter == PERRON_MAX_ITER {
            let estimate = if prev_estimate.is_nan() {
                scale
            } else {
                0.5 * (scale + prev_estimate)
            };
            return Ok(Perron {
                value: estimate,
                vector: v,
                iterations: iter,
            });
        }
        prev_estimate = scale;
    }
    unreachable!()
}

pub fn transpose(matrix: &[f64], dim: usize) -> Vec<f64> {
    let mut t = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            t[j * dim + i] = matrix[i * dim + j];
        }
    }
    t
}

/// Splits `total` into `(part, rest)` with `rest` within one ulp of `rest_hint`
/// and `part + rest == total` exactly in floating point.
pub fn exact_split(total: f64, rest_hint: f64) -> (f64, f64) {
    let part = total - rest_hint;
    let mut rest = total - part;
    for _ in 0..8 {
        let s = part + rest;
        if s == total {
            break;
        }
        rest = if s < total {
            rest.next_up()
        } else {
            rest.next_down()
        };
    }
    (part, rest)
}
