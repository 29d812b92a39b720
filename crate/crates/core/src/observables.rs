//! Observable sequences `{X_n}` evaluated on cylinders, and the regularity
//! diagnostics behind the spectrum results: Bowen-ball variation and the
//! almost-additivity defect.
//!
//! Observables never see points. A cylinder that is too short to pin down
//! `X_n` is evaluated on every admissible completion of its missing trailing
//! symbols, giving an interval `[lower, upper]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::ExecOptions;
use crate::numeric::{perron, transpose};
use crate::symbolic::{bowen_ball_word_length, ReferenceMeasure, ShiftSpace, Word};

/// A potential depending on the first `window` coordinates.
///
/// `table` is indexed by the window read as a base-`l` number with the first
/// symbol most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPotential {
    pub alphabet: usize,
    pub window: usize,
    pub table: Vec<f64>,
}

impl LocalPotential {
    pub fn new(alphabet: usize, window: usize, table: Vec<f64>) -> Result<LocalPotential> {
        let p = LocalPotential {
            alphabet,
            window,
            table,
        };
        p.validate()?;
        Ok(p)
    }

    /// `φ(ω) = ω_0` on `l` symbols.
    pub fn first_symbol(alphabet: usize) -> LocalPotential {
        LocalPotential {
            alphabet,
            window: 1,
            table: (0..alphabet).map(|a| a as f64).collect(),
        }
    }

    /// Indicator of the binary word `11` at the origin.
    pub fn pair_indicator() -> LocalPotential {
        LocalPotential {
            alphabet: 2,
            window: 2,
            table: vec![0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn constant(alphabet: usize, c: f64) -> LocalPotential {
        LocalPotential {
            alphabet,
            window: 1,
            table: vec![c; alphabet],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidObservable("window must be at least 1".into()));
        }
        let expected = (self.alphabet as u128).checked_pow(self.window as u32);
        if expected != Some(self.table.len() as u128) {
            return Err(Error::InvalidObservable(format!(
                "table has {} entries, expected {}^{}",
                self.table.len(),
                self.alphabet,
                self.window
            )));
        }
        if self.table.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidObservable(
                "table entries must be finite".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn index(&self, window: &[u8]) -> usize {
        window[..self.window]
            .iter()
            .fold(0usize, |acc, &s| acc * self.alphabet + s as usize)
    }

    #[inline]
    pub fn at(&self, window: &[u8]) -> f64 {
        self.table[self.index(window)]
    }

    pub fn oscillation(&self) -> f64 {
        let max = self.table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.table.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Time weights `w_0, w_1, …` for weighted ergodic sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WeightRule {
    Constant {
        value: f64,
    },
    /// `w_i = (−1)^i / (i + 1)^γ`
    Alternating {
        gamma: f64,
    },
    Periodic {
        values: Vec<f64>,
    },
    /// Explicit head followed by another rule, indexed from the end of the head.
    Table {
        values: Vec<f64>,
        tail: Box<WeightRule>,
    },
}

impl WeightRule {
    pub fn weight(&self, i: usize) -> f64 {
        match self {
            WeightRule::Constant { value } => *value,
            WeightRule::Alternating { gamma } => {
                let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
                sign / ((i + 1) as f64).powf(*gamma)
            }
            WeightRule::Periodic { values } => values[i % values.len()],
            WeightRule::Table { values, tail } => match values.get(i) {
                Some(&w) => w,
                None => tail.weight(i - values.len()),
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            WeightRule::Constant { .. } => true,
            WeightRule::Periodic { values } => values.windows(2).all(|p| p[0] == p[1]),
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightRule::Constant { value } if !value.is_finite() => Err(Error::InvalidObservable(
                "constant weight must be finite".into(),
            )),
            WeightRule::Alternating { gamma } if !gamma.is_finite() || *gamma < 0.0 => Err(
                Error::InvalidObservable("alternating exponent must be finite and ≥ 0".into()),
            ),
            WeightRule::Periodic { values } if values.is_empty() => Err(Error::InvalidObservable(
                "periodic weights need a period".into(),
            )),
            WeightRule::Periodic { values } | WeightRule::Table { values, .. }
                if values.iter().any(|w| !w.is_finite()) =>
            {
                Err(Error::InvalidObservable("weights must be finite".into()))
            }
            WeightRule::Table { tail, .. } => tail.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    /// Sum of all entries.
    #[default]
    Sum,
    /// Spectral (ℓ² operator) norm.
    Operator,
}

/// `X_n(x) = log ‖M(T^{n−1}x) ⋯ M(x)‖` for a window-`k` family of strictly
/// positive `d × d` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCocycle {
    pub alphabet: usize,
    pub window: usize,
    pub dim: usize,
    /// One row-major `d × d` matrix per window value.
    pub matrices: Vec<Vec<f64>>,
    #[serde(default)]
    pub norm: MatrixNorm,
}

impl MatrixCocycle {
    pub fn new(
        alphabet: usize,
        window: usize,
        dim: usize,
        matrices: Vec<Vec<f64>>,
        norm: MatrixNorm,
    ) -> Result<MatrixCocycle> {
        let c = MatrixCocycle {
            alphabet,
            window,
            dim,
            matrices,
            norm,
        };
        c.validate()?;
        Ok(c)
    }

    /// The same matrix at every site.
    pub fn constant(alphabet: usize, dim: usize, matrix: Vec<f64>) -> Result<MatrixCocycle> {
        MatrixCocycle::new(alphabet, 1, dim, vec![matrix; alphabet], MatrixNorm::Sum)
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 || self.dim == 0 {
            return Err(Error::InvalidObservable(
                "cocycle window and dimension must be positive".into(),
            ));
        }
        let expected = (self.alphabet as u128).checked_pow(self.window as u32);
        if expected != Some(self.matrices.len() as u128) {
            return Err(Error::InvalidObservable(format!(
                "cocycle has {} matrices, expected {}^{}",
                self.matrices.len(),
                self.alphabet,
                self.window
            )));
        }
        for (i, m) in self.matrices.iter().enumerate() {
            if m.len() != self.dim * self.dim {
                return Err(Error::InvalidObservable(format!(
                    "matrix {i} has {} entries, expected {}",
                    m.len(),
                    self.dim * self.dim
                )));
            }
            if m.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidObservable(format!(
                    "matrix {i} must have strictly positive finite entries"
                )));
            }
        }
        Ok(())
    }

    fn matrix_at(&self, window: &[u8]) -> &[f64] {
        let idx = window[..self.window]
            .iter()
            .fold(0usize, |acc, &s| acc * self.alphabet + s as usize);
        &self.matrices[idx]
    }

    /// Log-norm of the `n`-step product, accumulated in rescaled form so
    /// that long products never overflow.
    pub fn log_norm(&self, symbols: &[u8], n: usize) -> f64 {
        let d = self.dim;
        let mut prod = self.matrix_at(symbols).to_vec();
        let mut log_scale = rescale(&mut prod);
        let mut tmp = vec![0.0; d * d];
        for i in 1..n {
            let m = self.matrix_at(&symbols[i..]);
            for r in 0..d {
                for c in 0..d {
                    tmp[r * d + c] = (0..d).map(|k| m[r * d + k] * prod[k * d + c]).sum();
                }
            }
            std::mem::swap(&mut prod, &mut tmp);
            log_scale += rescale(&mut prod);
        }
        log_scale + matrix_norm(&prod, d, self.norm).ln()
    }

    pub fn entry_ratio_bound(&self) -> f64 {
        let max = self
            .matrices
            .iter()
            .flatten()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self
            .matrices
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        (self.dim as f64 * max / min).ln()
    }
}

fn rescale(m: &mut [f64]) -> f64 {
    let s = m.iter().cloned().fold(0.0, f64::max);
    m.iter_mut().for_each(|x| *x /= s);
    s.ln()
}

fn matrix_norm(m: &[f64], d: usize, norm: MatrixNorm) -> f64 {
    match norm {
        MatrixNorm::Sum => m.iter().sum(),
        MatrixNorm::Operator => {
            let t = transpose(m, d);
            let mut gram = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    gram[i * d + j] = (0..d).map(|k| t[i * d + k] * m[k * d + j]).sum();
                }
            }
            perron(&gram, d, 1e-14)
                .map(|p| p.value.sqrt())
                .unwrap_or(f64::NAN)
        }
    }
}

/// Declarative description of an observable sequence `{X_n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    /// `X_n = S_n φ`.
    Birkhoff {
        potential: LocalPotential,
    },
    /// `X_n = Σ_{i<n} w_i φ∘T^i`.
    Weighted {
        potential: LocalPotential,
        weights: WeightRule,
    },
    Cocycle {
        cocycle: MatrixCocycle,
    },
    /// `X_n(x) = −log μ([x_0 … x_{n−1}])`.
    LocalEntropy {
        measure: ReferenceMeasure,
    },
}

impl ObservableSpec {
    pub fn birkhoff(potential: LocalPotential) -> Result<ObservableSpec> {
        potential.validate()?;
        Ok(ObservableSpec::Birkhoff { potential })
    }

    /// Binary digit frequency: `X_n = #{i < n : ω_i = 1}`.
    pub fn coin() -> ObservableSpec {
        ObservableSpec::Birkhoff {
            potential: LocalPotential::first_symbol(2),
        }
    }

    pub fn weighted(potential: LocalPotential, weights: WeightRule) -> Result<ObservableSpec> {
        potential.validate()?;
        weights.validate()?;
        Ok(ObservableSpec::Weighted { potential, weights })
    }

    pub fn cocycle(cocycle: MatrixCocycle) -> Result<ObservableSpec> {
        cocycle.validate()?;
        Ok(ObservableSpec::Cocycle { cocycle })
    }

    pub fn local_entropy(measure: ReferenceMeasure) -> ObservableSpec {
        ObservableSpec::LocalEntropy { measure }
    }

    pub fn alphabet(&self) -> usize {
        match self {
            ObservableSpec::Birkhoff { potential } | ObservableSpec::Weighted { potential, .. } => {
                potential.alphabet
            }
            ObservableSpec::Cocycle { cocycle } => cocycle.alphabet,
            ObservableSpec::LocalEntropy { measure } => measure.alphabet(),
        }
    }

    /// Number of coordinates each step reads; `X_n` is determined by the
    /// first `n + window − 1` symbols.
    pub fn window(&self) -> usize {
        match self {
            ObservableSpec::Birkhoff { potential } | ObservableSpec::Weighted { potential, .. } => {
                potential.window
            }
            ObservableSpec::Cocycle { cocycle } => cocycle.window,
            ObservableSpec::LocalEntropy { .. } => 1,
        }
    }

    /// Exactly additive: `X_{n+m} = X_n + X_m∘T^n`.
    pub fn is_additive(&self) -> bool {
        match self {
            ObservableSpec::Birkhoff { .. } => true,
            ObservableSpec::Weighted { weights, .. } => weights.is_constant(),
            _ => false,
        }
    }

    /// Variants for which the equality form of the spectrum can be certified
    /// (almost additive with bounded defect).
    pub fn supports_equality(&self) -> bool {
        !matches!(self, ObservableSpec::Weighted { .. })
    }

    /// Additive window potential behind the observable, scaled by its constant
    /// weight, when the observable is exactly additive.
    pub fn additive_potential(&self) -> Option<LocalPotential> {
        match self {
            ObservableSpec::Birkhoff { potential } => Some(potential.clone()),
            ObservableSpec::Weighted { potential, weights } if weights.is_constant() => {
                let c = weights.weight(0);
                Some(LocalPotential {
                    table: potential.table.iter().map(|x| c * x).collect(),
                    ..potential.clone()
                })
            }
            _ => None,
        }
    }

    /// Checks the observable against the space it will be evaluated on.
    pub fn validate(&self, space: &ShiftSpace) -> Result<()> {
        if self.alphabet() != space.alphabet() {
            return Err(Error::InvalidObservable(format!(
                "observable alphabet {} differs from space alphabet {}",
                self.alphabet(),
                space.alphabet()
            )));
        }
        match self {
            ObservableSpec::Birkhoff { potential } => potential.validate(),
            ObservableSpec::Weighted { potential, weights } => {
                potential.validate()?;
                weights.validate()
            }
            ObservableSpec::Cocycle { cocycle } => cocycle.validate(),
            ObservableSpec::LocalEntropy { measure } => {
                measure.check_compatible(space)?;
                if !measure.has_full_support(space) {
                    return Err(Error::InvalidObservable(
                        "local-entropy measure must charge every admissible cylinder".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `X_n` on a word long enough to determine it (`len ≥ n + window − 1`).
    pub fn value(&self, symbols: &[u8], n: usize) -> f64 {
        debug_assert!(symbols.len() + 1 >= n + self.window());
        match self {
            ObservableSpec::Birkhoff { potential } => {
                let k = potential.window;
                (0..n).map(|i| potential.at(&symbols[i..i + k])).sum()
            }
            ObservableSpec::Weighted { potential, weights } => {
                let k = potential.window;
                (0..n)
                    .map(|i| weights.weight(i) * potential.at(&symbols[i..i + k]))
                    .sum()
            }
            ObservableSpec::Cocycle { cocycle } => cocycle.log_norm(symbols, n),
            ObservableSpec::LocalEntropy { measure } => -measure.log_mass(&symbols[..n]),
        }
    }

    /// Range of `X_n` over the cylinder `[w]`.
    pub fn eval_on_cylinder(
        &self,
        space: &ShiftSpace,
        w: &Word,
        n: usize,
    ) -> Result<CylinderValue> {
        if n == 0 {
            return Err(invalid("horizon n must be at least 1"));
        }
        if w.len() < n {
            return Err(invalid(format!(
                "word of length {} cannot carry horizon {n}",
                w.len()
            )));
        }
        Ok(self.range_on(space, w.symbols(), n))
    }

    /// Unchecked core of [`eval_on_cylinder`](Self::eval_on_cylinder).
    pub(crate) fn range_on(&self, space: &ShiftSpace, symbols: &[u8], n: usize) -> CylinderValue {
        let need = n + self.window() - 1;
        if symbols.len() >= need {
            return CylinderValue::exact(self.value(symbols, n));
        }
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        space.for_each_extension(symbols, need, &mut |full| {
            let v = self.value(full, n);
            lower = lower.min(v);
            upper = upper.max(v);
        });
        CylinderValue { lower, upper }
    }
}

/// Range of `X_n` over a cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderValue {
    pub lower: f64,
    pub upper: f64,
}

impl CylinderValue {
    pub fn exact(v: f64) -> CylinderValue {
        CylinderValue { lower: v, upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// `sup` of `q·X_n` over the cylinder.
    #[inline]
    pub fn sup_scaled(&self, q: f64) -> f64 {
        (q * self.lower).max(q * self.upper)
    }

    /// `inf` of `q·X_n` over the cylinder.
    #[inline]
    pub fn inf_scaled(&self, q: f64) -> f64 {
        (q * self.lower).min(q * self.upper)
    }
}

/// `v_{n,ε}(X_n)`: the largest oscillation of `X_n` inside one Bowen ball
/// `B_n(x, ε)`, computed exactly by enumerating cylinder completions.
pub fn variation(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    n: usize,
    epsilon: f64,
    opts: &ExecOptions,
) -> Result<f64> {
    if n == 0 {
        return Err(invalid("horizon n must be at least 1"));
    }
    spec.validate(space)?;
    let m = bowen_ball_word_length(n, epsilon, space.alphabet())?;
    let need = n + spec.window() - 1;
    if m >= need {
        // the ball is a cylinder that already determines X_n
        return Ok(0.0);
    }
    opts.check_budget(space.word_count(need))?;
    let mut worst: f64 = 0.0;
    space.for_each_extension(&[], m, &mut |w| {
        worst = worst.max(spec.range_on(space, w, n).width());
    });
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DefectMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

/// Largest observed `|X_{n+m}(x) − X_n(x) − X_m(T^n x)|`.
pub fn almost_additivity_defect(
    spec: &ObservableSpec,
    space: &ShiftSpace,
    n: usize,
    m: usize,
    mode: DefectMode,
    opts: &ExecOptions,
) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(invalid("n and m must be at least 1"));
    }
    spec.validate(space)?;
    let len = n + m + spec.window() - 1;
    let defect = |w: &[u8]| {
        let whole = spec.value(w, n + m);
        let head = spec.value(w, n);
        let tail = spec.value(&w[n..], m);
        (whole - head - tail).abs()
    };
    let mut worst: f64 = 0.0;
    match mode {
        DefectMode::Exhaustive => {
            opts.check_budget(space.word_count(len))?;
            space.for_each_extension(&[], len, &mut |w| worst = worst.max(defect(w)));
        }
        DefectMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut buf = Vec::with_capacity(len);
            for _ in 0..samples {
                random_admissible_word(space, len, &mut rng, &mut buf);
                worst = worst.max(defect(&buf));
            }
        }
    }
    Ok(worst)
}

fn random_admissible_word(space: &ShiftSpace, len: usize, rng: &mut ChaCha8Rng, buf: &mut Vec<u8>) {
    buf.clear();
    let l = space.alphabet();
    buf.push(rng.random_range(0..l) as u8);
    while buf.len() < len {
        let succ = space.successors(*buf.last().unwrap());
        buf.push(succ[rng.random_range(0..succ.len())]);
    }
}
