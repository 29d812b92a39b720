//! Convex analysis on uniformly sampled curves: Legendre–Fenchel conjugates
//! by a linear-time monotone sweep over the lower hull, one-sided
//! subgradients, essential-domain endpoints and Fenchel–Young gaps.
//!
//! `+∞` is carried as [`ExtReal::PlusInf`], never as a float sentinel.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::io::{fmt_f64, grid_from_points, parse_f64, parse_flag, read_rows};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtReal {
    Finite(f64),
    PlusInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::PlusInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

/// Second-difference slack tolerated before a curve is convexified.
pub const CONVEXITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<ExtReal>,
    pub provenance: String,
    /// Set when the lower convex envelope replaced the input values.
    pub repaired: bool,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<ExtReal>, provenance: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len
            )));
        }
        if values
            .iter()
            .any(|v| matches!(v, ExtReal::Finite(x) if !x.is_finite()))
        {
            return Err(invalid("finite entries must be finite floats"));
        }
        let f = GridFunction {
            grid,
            values,
            provenance: provenance.into(),
            repaired: false,
        };
        if let Some((lo, hi)) = f.finite_range() {
            if f.values[lo..=hi].iter().any(|v| !v.is_finite()) {
                return Err(invalid("+inf entries must form a prefix and/or suffix"));
            }
        }
        Ok(f)
    }

    /// All-finite function. Panics on length mismatch.
    pub fn finite(grid: Grid, values: Vec<f64>, provenance: impl Into<String>) -> Self {
        assert_eq!(values.len(), grid.len, "values/grid length mismatch");
        GridFunction {
            grid,
            values: values.into_iter().map(ExtReal::Finite).collect(),
            provenance: provenance.into(),
            repaired: false,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64, provenance: impl Into<String>) -> Self {
        let values = grid.points().map(f).collect();
        GridFunction::finite(grid, values, provenance)
    }

    pub fn at(&self, i: usize) -> ExtReal {
        self.values[i]
    }

    /// Finite value at grid point `x`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        let i = self
            .grid
            .index_of(x)
            .ok_or_else(|| invalid(format!("{x} is not a grid point")))?;
        self.values[i]
            .finite()
            .ok_or_else(|| invalid(format!("value at {x} is +inf")))
    }

    /// First and last finite indices (the effective domain on the grid).
    pub fn finite_range(&self) -> Option<(usize, usize)> {
        let lo = self.values.iter().position(|v| v.is_finite())?;
        let hi = self.values.iter().rposition(|v| v.is_finite())?;
        Some((lo, hi))
    }

    pub fn is_all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn finite_slice(&self) -> Option<(usize, Vec<f64>)> {
        let (lo, hi) = self.finite_range()?;
        Some((
            lo,
            self.values[lo..=hi]
                .iter()
                .map(|v| v.finite().unwrap_or(f64::NAN))
                .collect(),
        ))
    }

    /// Smallest second difference over the finite range (`+inf` if fewer
    /// than three finite points).
    pub fn min_second_difference(&self) -> f64 {
        match self.finite_slice() {
            Some((_, ys)) => ys
                .windows(3)
                .map(|w| w[0] - 2.0 * w[1] + w[2])
                .fold(f64::INFINITY, f64::min),
            None => f64::INFINITY,
        }
    }

    /// Returns the function unchanged if convex within
    /// [`CONVEXITY_TOLERANCE`], otherwise its lower convex envelope with
    /// `repaired` set.
    pub fn ensure_convex(mut self) -> Self {
        if self.min_second_difference() >= -CONVEXITY_TOLERANCE {
            return self;
        }
        let (lo, ys) = self
            .finite_slice()
            .expect("nonconvex implies finite points");
        let xs: Vec<f64> = (0..ys.len()).map(|i| self.grid.value(lo + i)).collect();
        let hull = lower_hull(&xs, &ys);
        let mut seg = 0;
        for i in 0..ys.len() {
            while seg + 1 < hull.len() - 1 && hull[seg + 1] <= i {
                seg += 1;
            }
            let (a, b) = (hull[seg], hull[(seg + 1).min(hull.len() - 1)]);
            let y = if a == b || i == a {
                ys[a]
            } else if i == b {
                ys[b]
            } else {
                let t = (i - a) as f64 / (b - a) as f64;
                ys[a] + t * (ys[b] - ys[a])
            };
            self.values[lo + i] = ExtReal::Finite(y);
        }
        log::warn!(
            "{}: convexity violated beyond {CONVEXITY_TOLERANCE:e}; replaced by lower convex envelope",
            self.provenance
        );
        self.repaired = true;
        self
    }

    /// CSV with columns `<x_name>,value,inf_flag`.
    pub fn to_csv(&self, x_name: &str) -> String {
        let mut out = format!("{x_name},value,inf_flag\n");
        for (i, v) in self.values.iter().enumerate() {
            let x = fmt_f64(self.grid.value(i));
            match v {
                ExtReal::Finite(y) => out.push_str(&format!("{x},{},0\n", fmt_f64(*y))),
                ExtReal::PlusInf => out.push_str(&format!("{x},inf,1\n")),
            }
        }
        out
    }

    pub fn from_csv(text: &str, provenance: impl Into<String>) -> Result<Self> {
        let (header, rows) = read_rows(text, None)?;
        if header.len() != 3 || header[1] != "value" || header[2] != "inf_flag" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let xs = rows
            .iter()
            .map(|r| parse_f64(&r[0]))
            .collect::<Result<Vec<_>>>()?;
        let values = rows
            .iter()
            .map(|r| {
                if parse_flag(&r[2])? {
                    Ok(ExtReal::PlusInf)
                } else {
                    parse_f64(&r[1]).map(ExtReal::Finite)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(grid_from_points(&xs)?, values, provenance)
    }
}

/// Indices of the lower convex hull vertices of `(xs[i], ys[i])`, `xs`
/// strictly increasing. Collinear interior points are dropped.
fn lower_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b unless it lies strictly below the chord a–i
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Result of a discrete Legendre–Fenchel transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conjugate {
    /// `f*` on the α-grid; `+inf` wherever the maximiser sits on the
    /// q-grid boundary.
    pub function: GridFunction,
    /// Grid maximum `max_q (αq − f(q))`, reported even where flagged.
    pub raw: Vec<f64>,
    /// Smallest q-grid index achieving the maximum; nondecreasing in α.
    pub argmax: Vec<usize>,
    pub boundary: Vec<bool>,
}

/// `f*(α) = max_q (αq − f(q))` over the finite grid points of `f`.
pub fn legendre_conjugate(f: &GridFunction, alpha_grid: Grid) -> Result<Conjugate> {
    let (lo, ys) = f
        .finite_slice()
        .ok_or_else(|| invalid("conjugate of a function with empty domain"))?;
    if ys.len() < 3 {
        return Err(invalid("conjugate needs at least 3 finite points"));
    }
    let xs: Vec<f64> = (0..ys.len()).map(|i| f.grid.value(lo + i)).collect();
    let hull = lower_hull(&xs, &ys);
    let last = f.grid.len - 1;
    let mut raw = Vec::with_capacity(alpha_grid.len);
    let mut argmax = Vec::with_capacity(alpha_grid.len);
    let mut boundary = Vec::with_capacity(alpha_grid.len);
    let mut values = Vec::with_capacity(alpha_grid.len);
    let mut j = 0;
    for alpha in alpha_grid.points() {
        // advance while the next vertex is strictly better; ties keep the
        // smaller q
        while j + 1 < hull.len() {
            let (a, b) = (hull[j], hull[j + 1]);
            if alpha * xs[b] - ys[b] > alpha * xs[a] - ys[a] {
                j += 1;
            } else {
                break;
            }
        }
        let i = hull[j];
        let obj = alpha * xs[i] - ys[i];
        let grid_index = lo + i;
        let at_boundary = if grid_index == 0 || grid_index == last {
            let nb = if i == 0 { 1 } else { i - 1 };
            let nb_obj = alpha * xs[nb] - ys[nb];
            obj - nb_obj > 1e-12 * (1.0 + obj.abs())
        } else {
            false
        };
        raw.push(obj);
        argmax.push(grid_index);
        boundary.push(at_boundary);
        values.push(if at_boundary {
            ExtReal::PlusInf
        } else {
            ExtReal::Finite(obj)
        });
    }
    let provenance = format!("conjugate of {}", f.provenance);
    Ok(Conjugate {
        function: GridFunction {
            grid: alpha_grid,
            values,
            provenance,
            repaired: false,
        },
        raw,
        argmax,
        boundary,
    })
}

/// `f*(α)` at a single α; returns the value and the boundary flag.
pub fn conjugate_at(f: &GridFunction, alpha: f64) -> Result<(f64, bool)> {
    let c = legendre_conjugate(f, Grid::single(alpha))?;
    Ok((c.raw[0], c.boundary[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgradientInterval {
    pub left: f64,
    pub right: f64,
    /// Width exceeds `10·step·curvature-scale`.
    pub kink: bool,
}

impl SubgradientInterval {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left <= x && x <= self.right
    }
}

/// One-sided difference quotients at grid index `i`.
pub fn subgradient_at_index(f: &GridFunction, i: usize) -> Result<SubgradientInterval> {
    let fin = |j: usize| f.values.get(j).and_then(|v| v.finite());
    if i == 0 || i + 1 >= f.grid.len {
        return Err(invalid(
            "subgradient at a grid boundary; use domain_endpoints",
        ));
    }
    let (Some(a), Some(b), Some(c)) = (fin(i - 1), fin(i), fin(i + 1)) else {
        return Err(invalid(
            "subgradient at the edge of the effective domain; use domain_endpoints",
        ));
    };
    let h = f.grid.step;
    let left = (b - a) / h;
    let right = (c - b) / h;
    // curvature scale from the neighbours, so a kink at i does not inflate it
    let curvature = |j: usize| -> Option<f64> {
        let (a, b, c) = (fin(j.checked_sub(1)?)?, fin(j)?, fin(j + 1)?);
        Some(((a - 2.0 * b + c) / (h * h)).abs())
    };
    let outer = [i.checked_sub(2), Some(i + 2)]
        .into_iter()
        .flatten()
        .filter_map(curvature)
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))));
    let scale = outer
        .or_else(|| {
            [i.checked_sub(1), Some(i + 1)]
                .into_iter()
                .flatten()
                .filter_map(curvature)
                .reduce(f64::max)
        })
        .unwrap_or(0.0);
    let width = right - left;
    Ok(SubgradientInterval {
        left,
        right,
        kink: width > 10.0 * h * scale + 1e-9,
    })
}

pub fn subgradient(f: &GridFunction, q: f64) -> Result<SubgradientInterval> {
    let i = f
        .grid
        .index_of(q)
        .ok_or_else(|| invalid(format!("{q} is not a grid point")))?;
    subgradient_at_index(f, i)
}

/// Grid points in the interior of the effective domain whose subgradient
/// interval is flagged as a kink.
pub fn kink_scan(f: &GridFunction) -> Vec<(f64, SubgradientInterval)> {
    let Some((lo, hi)) = f.finite_range() else {
        return vec![];
    };
    (lo + 1..hi)
        .filter_map(|i| {
            let s = subgradient_at_index(f, i).ok()?;
            s.kink.then(|| (f.grid.value(i), s))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainEndpoints {
    pub lower: f64,
    pub upper: f64,
    pub lower_converged: bool,
    pub upper_converged: bool,
}

/// `lim_{q→∓∞} f(q)/q` estimated by the outermost slopes, cross-checked
/// against `f(q)/q` at the grid ends.
pub fn domain_endpoints(f: &GridFunction) -> Result<DomainEndpoints> {
    if !f.is_all_finite() || f.grid.len < 2 {
        return Err(invalid(
            "domain_endpoints needs a finite function on ≥ 2 points",
        ));
    }
    let y = |i: usize| f.values[i].finite().unwrap_or(f64::NAN);
    let h = f.grid.step;
    let n = f.grid.len;
    let lower = (y(1) - y(0)) / h;
    let upper = (y(n - 1) - y(n - 2)) / h;
    let agrees = |slope: f64, q: f64, v: f64| -> bool {
        if (q < 0.0 && q == f.grid.min) || (q > 0.0 && q == f.grid.max()) {
            (v / q - slope).abs() <= 10.0 * h
        } else {
            false
        }
    };
    Ok(DomainEndpoints {
        lower,
        upper,
        lower_converged: f.grid.min < 0.0 && agrees(lower, f.grid.min, y(0)),
        upper_converged: f.grid.max() > 0.0 && agrees(upper, f.grid.max(), y(n - 1)),
    })
}

/// `αq − f(q) − f*(α)`; nonpositive, zero iff `α ∈ ∂f(q)` up to the grid.
pub fn fenchel_gap(f: &GridFunction, f_star: &GridFunction, q: f64, alpha: f64) -> Result<f64> {
    let fq = f.value_at(q)?;
    let fs = f_star.value_at(alpha)?;
    Ok(alpha * q - fq - fs)
}
