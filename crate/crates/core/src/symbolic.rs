//! Full shifts and subshifts of finite type over a finite alphabet, their
//! words (cylinders) and reference measures.
//!
//! The phase space carries the metric `d(x, y) = l^{-k}` with `k` the first
//! index where `x` and `y` differ, so every Bowen ball is a cylinder and all
//! geometry reduces to word lengths.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::ExecOptions;
use crate::numeric::{perron, transpose};

/// Largest prefix fan-out used to chunk word streams for parallel reduction.
const CHUNK_FANOUT: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSpace {
    alphabet: usize,
    /// Row-major `l × l` 0/1 matrix; `None` for the full shift.
    transition: Option<Vec<bool>>,
    #[serde(skip)]
    successors: Vec<Vec<u8>>,
}

impl ShiftSpace {
    pub fn full(alphabet: usize) -> Result<ShiftSpace> {
        check_alphabet(alphabet)?;
        let all: Vec<u8> = (0..alphabet).map(|a| a as u8).collect();
        Ok(ShiftSpace {
            alphabet,
            transition: None,
            successors: vec![all; alphabet],
        })
    }

    /// Subshift of finite type with the given 0/1 transition rows. The
    /// matrix must be primitive.
    pub fn subshift(rows: &[Vec<u8>]) -> Result<ShiftSpace> {
        let l = rows.len();
        check_alphabet(l)?;
        let mut matrix = Vec::with_capacity(l * l);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != l {
                return Err(invalid(format!(
                    "transition row {i} has {} entries, expected {l}",
                    row.len()
                )));
            }
            for &x in row {
                match x {
                    0 => matrix.push(false),
                    1 => matrix.push(true),
                    _ => return Err(invalid(format!("transition entries must be 0/1, got {x}"))),
                }
            }
        }
        if !is_primitive(&matrix, l) {
            return Err(Error::NotPrimitive);
        }
        let successors = (0..l)
            .map(|a| {
                (0..l)
                    .filter(|&b| matrix[a * l + b])
                    .map(|b| b as u8)
                    .collect()
            })
            .collect();
        Ok(ShiftSpace {
            alphabet: l,
            transition: Some(matrix),
            successors,
        })
    }

    /// Binary subshift forbidding the word `11`.
    pub fn golden_mean() -> ShiftSpace {
        ShiftSpace::subshift(&[vec![1, 1], vec![1, 0]]).expect("golden mean matrix is primitive")
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn is_full(&self) -> bool {
        self.transition.is_none()
    }

    pub fn transition_rows(&self) -> Option<Vec<Vec<u8>>> {
        self.transition.as_ref().map(|m| {
            m.chunks(self.alphabet)
                .map(|r| r.iter().map(|&b| b as u8).collect())
                .collect()
        })
    }

    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        match &self.transition {
            None => true,
            Some(m) => m[a as usize * self.alphabet + b as usize],
        }
    }

    /// Symbols that may follow `a`, in increasing order.
    #[inline]
    pub fn successors(&self, a: u8) -> &[u8] {
        &self.successors[a as usize]
    }

    pub fn is_admissible(&self, symbols: &[u8]) -> bool {
        symbols.iter().all(|&s| (s as usize) < self.alphabet)
            && symbols.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    /// Number of admissible words of length `n` (saturating).
    pub fn word_count(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let l = self.alphabet;
        if self.is_full() {
            return (l as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        }
        let mut ends = vec![1u128; l];
        for _ in 1..n {
            let mut next = vec![0u128; l];
            for (a, &count) in ends.iter().enumerate() {
                for &b in self.successors(a as u8) {
                    next[b as usize] = next[b as usize].saturating_add(count);
                }
            }
            ends = next;
        }
        ends.iter().fold(0u128, |s, &c| s.saturating_add(c))
    }

    /// `h_top(σ, Ω)`: `log l` for the full shift, log of the Perron root of
    /// the transition matrix otherwise.
    pub fn topological_entropy(&self) -> f64 {
        match &self.transition {
            None => (self.alphabet as f64).ln(),
            Some(m) => {
                let a: Vec<f64> = m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                perron(&a, self.alphabet, 1e-15)
                    .expect("primitive 0/1 matrix")
                    .value
                    .ln()
            }
        }
    }

    /// Calls `f` on every admissible word of length `len` extending `prefix`,
    /// in lexicographic order.
    pub fn for_each_extension<F: FnMut(&[u8])>(&self, prefix: &[u8], len: usize, f: &mut F) {
        let mut buf = Vec::with_capacity(len.max(prefix.len()));
        buf.extend_from_slice(prefix);
        self.extend_rec(&mut buf, len, f);
    }

    fn extend_rec<F: FnMut(&[u8])>(&self, buf: &mut Vec<u8>, len: usize, f: &mut F) {
        if buf.len() >= len {
            f(buf);
            return;
        }
        match buf.last() {
            None => {
                for c in 0..self.alphabet as u8 {
                    buf.push(c);
                    self.extend_rec(buf, len, f);
                    buf.pop();
                }
            }
            Some(&last) => {
                for &c in self.successors(last) {
                    buf.push(c);
                    self.extend_rec(buf, len, f);
                    buf.pop();
                }
            }
        }
    }

    /// Admissible prefixes partitioning the words of length `len` into
    /// lexicographically ordered chunks. The partition depends only on the
    /// space and `len`.
    pub fn chunk_prefixes(&self, len: usize) -> Vec<Vec<u8>> {
        let mut p = 1usize;
        while p < len && self.alphabet.pow(p as u32 + 1) <= CHUNK_FANOUT {
            p += 1;
        }
        let p = p.min(len);
        let mut out = Vec::new();
        self.for_each_extension(&[], p, &mut |w| out.push(w.to_vec()));
        out
    }
}

fn check_alphabet(l: usize) -> Result<()> {
    if (2..=256).contains(&l) {
        Ok(())
    } else {
        Err(Error::Alphabet(l))
    }
}

/// Primitivity test: `A^{l²-2l+2}` strictly positive (Wielandt's bound).
fn is_primitive(m: &[bool], l: usize) -> bool {
    let power = l * l - 2 * l + 2;
    let mul = |a: &[bool], b: &[bool]| -> Vec<bool> {
        let mut c = vec![false; l * l];
        for i in 0..l {
            for k in 0..l {
                if a[i * l + k] {
                    for j in 0..l {
                        c[i * l + j] |= b[k * l + j];
                    }
                }
            }
        }
        c
    };
    // square-and-multiply
    let mut result: Option<Vec<bool>> = None;
    let mut base = m.to_vec();
    let mut e = power;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => mul(&r, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = mul(&base, &base);
        }
    }
    result.map(|r| r.iter().all(|&x| x)).unwrap_or(false)
}

/// A finite admissible word, naming the cylinder `[w_0 … w_{n-1}]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    symbols: Vec<u8>,
}

impl Word {
    pub fn new(space: &ShiftSpace, symbols: Vec<u8>) -> Result<Word> {
        if symbols.is_empty() {
            return Err(invalid("words have length at least 1"));
        }
        if !space.is_admissible(&symbols) {
            return Err(Error::InadmissibleWord(format_symbols(&symbols)));
        }
        Ok(Word { symbols })
    }

    /// Parses a digit string such as `"1011"` (alphabets up to 10 symbols).
    pub fn parse(space: &ShiftSpace, digits: &str) -> Result<Word> {
        let symbols = digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Parse(format!("not a digit: {c:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Word::new(space, symbols)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_symbols(&self.symbols))
    }
}

fn format_symbols(symbols: &[u8]) -> String {
    if symbols.iter().all(|&s| s < 10) {
        symbols.iter().map(|s| char::from(b'0' + s)).collect()
    } else {
        symbols
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Lexicographic stream of all admissible words of a fixed length.
pub struct Words<'a> {
    space: &'a ShiftSpace,
    len: usize,
    buf: Vec<u8>,
    /// choice index at each position
    choice: Vec<usize>,
    started: bool,
    done: bool,
}

impl<'a> Words<'a> {
    fn choices(&self, pos: usize) -> usize {
        if pos == 0 {
            self.space.alphabet
        } else {
            self.space.successors(self.buf[pos - 1]).len()
        }
    }

    fn symbol(&self, pos: usize, idx: usize) -> u8 {
        if pos == 0 {
            idx as u8
        } else {
            self.space.successors(self.buf[pos - 1])[idx]
        }
    }

    fn fill_from(&mut self, pos: usize) {
        for p in pos..self.len {
            let s = self.symbol(p, 0);
            self.buf.push(s);
            self.choice.push(0);
        }
    }
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_from(0);
        } else {
            loop {
                let Some(pos) = self.choice.len().checked_sub(1) else {
                    self.done = true;
                    return None;
                };
                self.buf.pop();
                let idx = self.choice.pop().unwrap() + 1;
                if idx < self.choices(pos) {
                    let s = self.symbol(pos, idx);
                    self.buf.push(s);
                    self.choice.push(idx);
                    self.fill_from(pos + 1);
                    break;
                }
            }
        }
        Some(Word {
            symbols: self.buf.clone(),
        })
    }
}

/// Every admissible word of length `n`, each once, in lexicographic order.
pub fn enumerate_words(space: &ShiftSpace, n: usize) -> Result<Words<'_>> {
    if n == 0 {
        return Err(invalid("word length must be at least 1"));
    }
    Ok(Words {
        space,
        len: n,
        buf: Vec::with_capacity(n),
        choice: Vec::with_capacity(n),
        started: false,
        done: false,
    })
}

/// Reference measure `ν` on the shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceMeasure {
    Uniform {
        alphabet: usize,
    },
    Bernoulli {
        probabilities: Vec<f64>,
    },
    Markov {
        /// Row-stochastic `l × l` matrix, row-major.
        matrix: Vec<f64>,
        stationary: Vec<f64>,
    },
}

impl ReferenceMeasure {
    pub fn uniform(alphabet: usize) -> Result<ReferenceMeasure> {
        check_alphabet(alphabet)?;
        Ok(ReferenceMeasure::Uniform { alphabet })
    }

    pub fn bernoulli(probabilities: Vec<f64>) -> Result<ReferenceMeasure> {
        check_alphabet(probabilities.len())?;
        check_probability_vector(&probabilities)?;
        Ok(ReferenceMeasure::Bernoulli { probabilities })
    }

    /// Stationary Markov measure; the stationary vector is computed.
    pub fn markov(rows: &[Vec<f64>]) -> Result<ReferenceMeasure> {
        let (matrix, l) = stochastic_matrix(rows)?;
        let left = perron(&transpose(&matrix, l), l, 1e-15)
            .map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        let total: f64 = left.vector.iter().sum();
        let stationary: Vec<f64> = left.vector.iter().map(|x| x / total).collect();
        ReferenceMeasure::markov_with_stationary(rows, stationary)
    }

    /// Markov measure with a caller-supplied stationary vector, checked
    /// against `πP = π` within 1e-10.
    pub fn markov_with_stationary(
        rows: &[Vec<f64>],
        stationary: Vec<f64>,
    ) -> Result<ReferenceMeasure> {
        let (matrix, l) = stochastic_matrix(rows)?;
        if stationary.len() != l {
            return Err(Error::InvalidMeasure(format!(
                "stationary vector has length {}, expected {l}",
                stationary.len()
            )));
        }
        check_probability_vector(&stationary)?;
        for j in 0..l {
            let pj: f64 = (0..l).map(|i| stationary[i] * matrix[i * l + j]).sum();
            if (pj - stationary[j]).abs() > 1e-10 {
                return Err(Error::InvalidMeasure(format!(
                    "stationary vector violates πP = π at index {j} by {:e}",
                    (pj - stationary[j]).abs()
                )));
            }
        }
        Ok(ReferenceMeasure::Markov { matrix, stationary })
    }

    /// Parry measure (measure of maximal entropy) of a subshift; uniform
    /// for the full shift.
    pub fn parry(space: &ShiftSpace) -> Result<ReferenceMeasure> {
        let l = space.alphabet();
        let Some(rows) = space.transition_rows() else {
            return ReferenceMeasure::uniform(l);
        };
        let a: Vec<f64> = rows.iter().flatten().map(|&x| x as f64).collect();
        let right = perron(&a, l, 1e-15).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        let left = perron(&transpose(&a, l), l, 1e-15)
            .map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        let lambda = right.value;
        let v = &right.vector;
        let u = &left.vector;
        let p_rows: Vec<Vec<f64>> = (0..l)
            .map(|i| {
                let mut row: Vec<f64> = (0..l)
                    .map(|j| a[i * l + j] * v[j] / (lambda * v[i]))
                    .collect();
                // renormalise against rounding
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= s);
                row
            })
            .collect();
        let norm: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
        let pi: Vec<f64> = u.iter().zip(v).map(|(x, y)| x * y / norm).collect();
        ReferenceMeasure::markov_with_stationary(&p_rows, pi)
    }

    pub fn alphabet(&self) -> usize {
        match self {
            ReferenceMeasure::Uniform { alphabet } => *alphabet,
            ReferenceMeasure::Bernoulli { probabilities } => probabilities.len(),
            ReferenceMeasure::Markov { stationary, .. } => stationary.len(),
        }
    }

    /// Probability of the first symbol.
    pub fn initial(&self, a: u8) -> f64 {
        match self {
            ReferenceMeasure::Uniform { alphabet } => 1.0 / *alphabet as f64,
            ReferenceMeasure::Bernoulli { probabilities } => probabilities[a as usize],
            ReferenceMeasure::Markov { stationary, .. } => stationary[a as usize],
        }
    }

    /// Probability that `b` follows `a`.
    pub fn kernel(&self, a: u8, b: u8) -> f64 {
        match self {
            ReferenceMeasure::Uniform { alphabet } => 1.0 / *alphabet as f64,
            ReferenceMeasure::Bernoulli { probabilities } => probabilities[b as usize],
            ReferenceMeasure::Markov { matrix, stationary } => {
                matrix[a as usize * stationary.len() + b as usize]
            }
        }
    }

    /// `log ν([w])`, `-inf` for null cylinders. Symbols are assumed in range.
    pub fn log_mass(&self, symbols: &[u8]) -> f64 {
        match self {
            ReferenceMeasure::Uniform { alphabet } => {
                -(symbols.len() as f64) * (*alphabet as f64).ln()
            }
            ReferenceMeasure::Bernoulli { probabilities } => symbols
                .iter()
                .map(|&s| probabilities[s as usize].ln())
                .sum(),
            ReferenceMeasure::Markov { matrix, stationary } => {
                let l = stationary.len();
                let Some(&first) = symbols.first() else {
                    return 0.0;
                };
                let mut acc = stationary[first as usize].ln();
                for p in symbols.windows(2) {
                    acc += matrix[p[0] as usize * l + p[1] as usize].ln();
                }
                acc
            }
        }
    }

    /// `ν([w])`. Words that leave the alphabet or use a null transition are
    /// inadmissible for the measure.
    pub fn cylinder_measure(&self, w: &Word) -> Result<f64> {
        let l = self.alphabet();
        if w.symbols().iter().any(|&s| s as usize >= l) {
            return Err(Error::InadmissibleWord(w.to_string()));
        }
        let log = self.log_mass(w.symbols());
        if log == f64::NEG_INFINITY {
            return Err(Error::InadmissibleWord(w.to_string()));
        }
        Ok(match self {
            // exact powers for the uniform case
            ReferenceMeasure::Uniform { alphabet } => (*alphabet as f64).powi(-(w.len() as i32)),
            ReferenceMeasure::Bernoulli { probabilities } => w
                .symbols()
                .iter()
                .map(|&s| probabilities[s as usize])
                .product(),
            ReferenceMeasure::Markov { .. } => {
                let first = w.symbols()[0];
                w.symbols()
                    .windows(2)
                    .fold(self.initial(first), |acc, p| acc * self.kernel(p[0], p[1]))
            }
        })
    }

    /// Checks that `ν` lives on `space`: same alphabet, and no mass on
    /// forbidden transitions.
    pub fn check_compatible(&self, space: &ShiftSpace) -> Result<()> {
        let l = space.alphabet();
        if self.alphabet() != l {
            return Err(Error::InvalidMeasure(format!(
                "measure alphabet {} differs from space alphabet {l}",
                self.alphabet()
            )));
        }
        if space.is_full() {
            return Ok(());
        }
        for a in 0..l as u8 {
            for b in 0..l as u8 {
                if !space.allowed(a, b) && self.kernel(a, b) > 0.0 {
                    return Err(Error::InvalidMeasure(format!(
                        "measure charges forbidden transition {a}->{b}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every admissible word of `space` has positive mass.
    pub fn has_full_support(&self, space: &ShiftSpace) -> bool {
        let l = space.alphabet() as u8;
        (0..l).all(|a| self.initial(a) > 0.0)
            && (0..l).all(|a| space.successors(a).iter().all(|&b| self.kernel(a, b) > 0.0))
    }
}

fn check_probability_vector(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidMeasure(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMeasure(format!(
            "probabilities sum to {s}, not 1"
        )));
    }
    Ok(())
}

fn stochastic_matrix(rows: &[Vec<f64>]) -> Result<(Vec<f64>, usize)> {
    let l = rows.len();
    check_alphabet(l)?;
    let mut m = Vec::with_capacity(l * l);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != l {
            return Err(Error::InvalidMeasure(format!(
                "row {i} has {} entries, expected {l}",
                row.len()
            )));
        }
        check_probability_vector(row)
            .map_err(|e| Error::InvalidMeasure(format!("row {i}: {e}")))?;
        m.extend_from_slice(row);
    }
    Ok((m, l))
}

/// Length `m = n + ⌈log_l(1/ε)⌉` of the cylinder equal to the Bowen ball
/// `B_n(x, ε)`.
pub fn bowen_ball_word_length(n: usize, epsilon: f64, l: usize) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    check_alphabet(l)?;
    // smallest k >= 0 with l^{-k} <= ε, tolerant to rounding in ε
    let mut k = 0usize;
    let mut radius = 1.0f64;
    while radius > epsilon * (1.0 + 1e-12) {
        k += 1;
        radius /= l as f64;
    }
    Ok(n + k)
}

/// Outcome of the Ahlfors–Bowen comparison `ν(B_n(x, ε)) ≍ e^{-n h}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhlforsBowenReport {
    /// `h_top` of the space, the only admissible exponent.
    pub h_top: f64,
    /// Growth of the extreme cylinder masses between the two deepest levels.
    pub h_estimate: f64,
    /// Per `n = 1..=n_max`: `max_w |−log ν([w]) − n·h_top|`, i.e. `log C(ε)` needed at `n`.
    pub deviations: Vec<f64>,
    pub max_ratio_deviation: f64,
    /// Average increase of the deviation per unit of `n` over the upper half.
    pub growth_per_step: f64,
    pub pass: bool,
}

const AB_TOLERANCE: f64 = 1e-8;

/// Exhaustively checks whether `measure` is Ahlfors–Bowen on `space` for
/// Bowen balls of radius `epsilon`, `n = 1..=n_max`.
///
/// Failure is reported, not raised; errors only signal incompatible input or
/// an exhausted budget.
pub fn verify_ahlfors_bowen(
    measure: &ReferenceMeasure,
    space: &ShiftSpace,
    n_max: usize,
    epsilon: f64,
    opts: &ExecOptions,
) -> Result<AhlforsBowenReport> {
    if n_max < 2 {
        return Err(invalid("n_max must be at least 2"));
    }
    measure.check_compatible(space)?;
    let l = space.alphabet();
    let h = space.topological_entropy();
    let m_max = bowen_ball_word_length(n_max, epsilon, l)?;
    opts.check_budget(space.word_count(m_max))?;

    let mut deviations = Vec::with_capacity(n_max);
    let mut extremes = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let m = bowen_ball_word_length(n, epsilon, l)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        space.for_each_extension(&[], m, &mut |w| {
            let neg = -measure.log_mass(w);
            lo = lo.min(neg);
            hi = hi.max(neg);
        });
        let target = n as f64 * h;
        deviations.push((hi - target).abs().max((lo - target).abs()));
        extremes.push((lo, hi));
    }
    let (lo1, hi1) = extremes[n_max - 2];
    let (lo2, hi2) = extremes[n_max - 1];
    let h_estimate = 0.5 * ((hi2 - hi1) + (lo2 - lo1));

    let half = n_max.div_ceil(2);
    let early = deviations[..half].iter().cloned().fold(0.0, f64::max);
    let late = deviations[half..].iter().cloned().fold(0.0, f64::max);
    let max_dev = early.max(late);
    let span = (n_max - half).max(1) as f64;
    let growth = (deviations[n_max - 1] - deviations[half - 1]) / span;
    let pass = max_dev.is_finite() && late <= early + AB_TOLERANCE * (1.0 + early);
    Ok(AhlforsBowenReport {
        h_top: h,
        h_estimate,
        deviations,
        max_ratio_deviation: max_dev,
        growth_per_step: growth,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(space: &ShiftSpace, n: usize) -> Vec<String> {
        enumerate_words(space, n)
            .unwrap()
            .map(|w| w.to_string())
            .collect()
    }

    #[test]
    fn full_shift_counts() {
        let s2 = ShiftSpace::full(2).unwrap();
        let words = collect(&s2, 3);
        assert_eq!(
            words,
            ["000", "001", "010", "011", "100", "101", "110", "111"]
        );
        assert_eq!(collect(&ShiftSpace::full(3).unwrap(), 1), ["0", "1", "2"]);
    }

    #[test]
    fn golden_mean_words() {
        let g = ShiftSpace::golden_mean();
        assert_eq!(collect(&g, 3), ["000", "001", "010", "100", "101"]);
    }

    #[test]
    fn golden_mean_counts_follow_fibonacci() {
        let g = ShiftSpace::golden_mean();
        let (mut a, mut b) = (2u128, 3u128); // F_3, F_4
        for n in 1..=20 {
            assert_eq!(g.word_count(n), a, "n = {n}");
            let streamed = enumerate_words(&g, n).unwrap().count() as u128;
            assert_eq!(streamed, a);
            (a, b) = (b, a + b);
        }
    }

    #[test]
    fn zero_length_rejected() {
        assert!(enumerate_words(&ShiftSpace::full(2).unwrap(), 0).is_err());
    }

    #[test]
    fn alphabet_invariant() {
        assert_eq!(ShiftSpace::full(1).unwrap_err(), Error::Alphabet(1));
    }

    #[test]
    fn imprimitive_rejected() {
        // period-2 swap
        assert_eq!(
            ShiftSpace::subshift(&[vec![0, 1], vec![1, 0]]).unwrap_err(),
            Error::NotPrimitive
        );
        // reducible
        assert!(ShiftSpace::subshift(&[vec![1, 1], vec![0, 1]]).is_err());
    }

    #[test]
    fn chunks_cover_stream_in_order() {
        let g = ShiftSpace::golden_mean();
        let mut chunked = Vec::new();
        for p in g.chunk_prefixes(12) {
            g.for_each_extension(&p, 12, &mut |w| chunked.push(w.to_vec()));
        }
        let streamed: Vec<Vec<u8>> = enumerate_words(&g, 12)
            .unwrap()
            .map(|w| w.symbols().to_vec())
            .collect();
        assert_eq!(chunked, streamed);
    }

    #[test]
    fn cylinder_measure_examples() {
        let s2 = ShiftSpace::full(2).unwrap();
        let w = Word::parse(&s2, "101").unwrap();
        let u = ReferenceMeasure::uniform(2).unwrap();
        assert_eq!(u.cylinder_measure(&w).unwrap(), 0.125);
        let b = ReferenceMeasure::bernoulli(vec![0.3, 0.7]).unwrap();
        assert!((b.cylinder_measure(&w).unwrap() - 0.147).abs() < 1e-15);

        let g = ShiftSpace::golden_mean();
        let m = ReferenceMeasure::markov_with_stationary(
            &[vec![0.5, 0.5], vec![1.0, 0.0]],
            vec![2.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        let w = Word::parse(&g, "010").unwrap();
        assert!((m.cylinder_measure(&w).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let bad = Word::parse(&s2, "011").unwrap();
        assert!(matches!(
            m.cylinder_measure(&bad),
            Err(Error::InadmissibleWord(_))
        ));
    }

    #[test]
    fn markov_stationary_is_computed_and_checked() {
        let m = ReferenceMeasure::markov(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        match &m {
            ReferenceMeasure::Markov { stationary, .. } => {
                assert!((stationary[0] - 2.0 / 3.0).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
        assert!(ReferenceMeasure::markov_with_stationary(
            &[vec![0.5, 0.5], vec![1.0, 0.0]],
            vec![0.5, 0.5]
        )
        .is_err());
        assert!(ReferenceMeasure::bernoulli(vec![0.3, 0.71]).is_err());
    }

    #[test]
    fn masses_sum_to_one() {
        let s2 = ShiftSpace::full(2).unwrap();
        let g = ShiftSpace::golden_mean();
        let cases = [
            (s2.clone(), ReferenceMeasure::uniform(2).unwrap()),
            (
                s2.clone(),
                ReferenceMeasure::bernoulli(vec![0.3, 0.7]).unwrap(),
            ),
            (
                s2,
                ReferenceMeasure::markov(&[vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap(),
            ),
            (g.clone(), ReferenceMeasure::parry(&g).unwrap()),
        ];
        for (space, measure) in &cases {
            for n in 1..=16 {
                let total: crate::numeric::CompensatedSum = enumerate_words(space, n)
                    .unwrap()
                    .map(|w| measure.cylinder_measure(&w).unwrap())
                    .collect();
                assert!((total.value() - 1.0).abs() < 1e-12, "{measure:?} n={n}");
            }
        }
    }

    #[test]
    fn bowen_lengths() {
        assert_eq!(bowen_ball_word_length(5, 0.25, 2).unwrap(), 7);
        assert_eq!(bowen_ball_word_length(3, 1.0, 2).unwrap(), 3);
        assert_eq!(bowen_ball_word_length(4, 0.1, 3).unwrap(), 7);
        assert!(bowen_ball_word_length(4, 1.5, 2).is_err());
        assert!(bowen_ball_word_length(4, 0.0, 2).is_err());
        let mut prev = usize::MAX;
        for i in 1..=1000 {
            let eps = i as f64 / 1000.0;
            let m = bowen_ball_word_length(6, eps, 2).unwrap();
            assert!(m <= prev);
            prev = m;
        }
        assert_eq!(prev, 6);
    }

    #[test]
    fn ahlfors_bowen_uniform_is_exact() {
        let s2 = ShiftSpace::full(2).unwrap();
        let u = ReferenceMeasure::uniform(2).unwrap();
        let r = verify_ahlfors_bowen(&u, &s2, 16, 1.0, &ExecOptions::default()).unwrap();
        assert!(r.pass);
        assert!((r.h_estimate - 2f64.ln()).abs() < 1e-14);
        assert!(r.deviations.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn ahlfors_bowen_bernoulli_fails() {
        let s2 = ShiftSpace::full(2).unwrap();
        let b = ReferenceMeasure::bernoulli(vec![0.3, 0.7]).unwrap();
        let r = verify_ahlfors_bowen(&b, &s2, 16, 1.0, &ExecOptions::default()).unwrap();
        assert!(!r.pass);
        // extreme cylinder 0^n has mass 0.3^n
        let expect = (-(0.3f64).ln() - 2f64.ln()).max(2f64.ln() + 0.7f64.ln());
        assert!((r.growth_per_step - expect).abs() < 1e-9);
    }

    #[test]
    fn ahlfors_bowen_parry_golden_mean() {
        let g = ShiftSpace::golden_mean();
        let p = ReferenceMeasure::parry(&g).unwrap();
        let r = verify_ahlfors_bowen(&p, &g, 16, 1.0, &ExecOptions::default()).unwrap();
        assert!(r.pass, "{r:?}");
        let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((r.h_estimate - golden).abs() < 1e-12);
        assert!((r.h_top - 0.4812118250596034).abs() < 1e-12);
        let r = verify_ahlfors_bowen(&p, &g, 12, 0.25, &ExecOptions::default()).unwrap();
        assert!(r.pass);
    }
}
