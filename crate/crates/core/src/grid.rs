use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A uniform real grid `min, min + step, ..., min + (len - 1) * step`.
///
/// Points are always computed as `min + i * step`, never by accumulation, so
/// two grids built from the same triple agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    /// Grid covering `[min, max]` with the given step. The last point is
    /// `max` up to rounding when `(max - min) / step` is integral.
    pub fn from_range(min: f64, max: f64, step: f64) -> Result<Grid> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err(invalid("grid bounds must be finite"));
        }
        if step <= 0.0 {
            return Err(invalid(format!("grid step must be positive, got {step}")));
        }
        if max < min {
            return Err(invalid(format!("grid max {max} below min {min}")));
        }
        let intervals = ((max - min) / step + 1e-9).floor();
        if intervals > 1e8 {
            return Err(invalid("grid has more than 1e8 points"));
        }
        Ok(Grid {
            min,
            step,
            len: intervals as usize + 1,
        })
    }

    /// Grid whose points are integer multiples of `step`, covering `[min, max]`.
    pub fn snapped(min: f64, max: f64, step: f64) -> Result<Grid> {
        if step <= 0.0 || !step.is_finite() {
            return Err(invalid(format!("grid step must be positive, got {step}")));
        }
        let lo = (min / step - 1e-9).floor();
        let hi = (max / step + 1e-9).ceil();
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(invalid("snapped grid bounds invalid"));
        }
        if hi - lo > 1e8 {
            return Err(invalid("grid has more than 1e8 points"));
        }
        Ok(Grid {
            min: lo * step,
            step,
            len: (hi - lo) as usize + 1,
        })
    }

    /// Grid with `points` points evenly spanning `[min, max]`.
    pub fn with_points(min: f64, max: f64, points: usize) -> Result<Grid> {
        if points < 2 {
            return Err(invalid("grid needs at least two points"));
        }
        if !(max > min) {
            return Err(invalid(format!("grid max {max} must exceed min {min}")));
        }
        Ok(Grid {
            min,
            step: (max - min) / (points - 1) as f64,
            len: points,
        })
    }

    /// One-point grid. The step is nominal.
    pub fn single(x: f64) -> Grid {
        Grid {
            min: x,
            step: 1.0,
            len: 1,
        }
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn max(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.value(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.points().collect()
    }

    /// Index of the grid point within `1e-6 * step` of `x`.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let pos = (x - self.min) / self.step;
        let i = pos.round();
        if i < 0.0 || i >= self.len as f64 {
            return None;
        }
        let i = i as usize;
        if (self.value(i) - x).abs() <= 1e-6 * self.step {
            Some(i)
        } else {
            None
        }
    }

    /// Index of the grid point nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let pos = ((x - self.min) / self.step).round();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.len - 1)
        }
    }
}
