use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Symmetric uniform frequency grid of radius `radius` and step `step`,
/// carrying the dyadic sub-radius ladder used by all trend statistics.
///
/// Grid points are xi_i = (i - n_half) * step for i = 0..=2*n_half, so index
/// n_half is exactly zero and the end points are exactly +-radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    pub radius: f64,
    pub step: f64,
    /// Strictly increasing dyadic sub-radii ending at `radius`.
    pub ladder: Vec<f64>,
}

impl FrequencyWindow {
    /// Requires radius/step to be an integer >= 2^10. The ladder halves the
    /// radius down to the larger of 64 grid steps and radius/2^8.
    pub fn new(radius: f64, step: f64) -> Result<Self> {
        if !(radius > 0.0) || !(step > 0.0) {
            return Err(Error::Config(format!(
                "window radius and step must be positive, got {radius} and {step}"
            )));
        }
        let ratio = radius / step;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Config(format!(
                "radius/step must be an integer, got {radius}/{step} = {ratio}"
            )));
        }
        if n < 1024.0 {
            return Err(Error::Config(format!(
                "radius/step must be at least 2^10, got {n}"
            )));
        }
        let floor = (64.0 * step).max(radius / 256.0);
        let mut ladder = vec![radius];
        let mut r = radius / 2.0;
        while r >= floor && ladder.len() < 9 {
            ladder.push(r);
            r /= 2.0;
        }
        ladder.reverse();
        Ok(FrequencyWindow {
            radius,
            step,
            ladder,
        })
    }

    /// Index of the grid point at frequency zero.
    pub fn n_half(&self) -> usize {
        (self.radius / self.step).round() as usize
    }

    /// Total number of grid points, always odd.
    pub fn len(&self) -> usize {
        2 * self.n_half() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xi(&self, i: usize) -> f64 {
        (i as f64 - self.n_half() as f64) * self.step
    }

    /// Nearest grid index for a frequency, clamped to the window.
    pub fn index_of(&self, xi: f64) -> usize {
        let n = self.n_half() as f64;
        let i = (xi / self.step + n).round();
        i.clamp(0.0, 2.0 * n) as usize
    }

    /// Iterator over all grid frequencies in index order.
    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.xi(i))
    }

    /// Annulus index ranges matching the ladder: entry k covers
    /// ladder[k-1] < |xi| <= ladder[k], entry 0 covers 0 < |xi| <= ladder[0].
    pub fn annulus_of(&self, xi: f64) -> Option<usize> {
        let a = xi.abs();
        if a > self.radius * (1.0 + 1e-12) {
            return None;
        }
        for (k, &r) in self.ladder.iter().enumerate() {
            if a <= r {
                return Some(k);
            }
        }
        Some(self.ladder.len() - 1)
    }

    /// Per-annulus minimum of `f` over radial grid points with r >= r_min:
    /// one (outer rung, min value, argmin radius) entry per ladder gap.
    /// Annuli where `f` declines every point are dropped with their rung.
    pub(crate) fn annulus_minima(
        &self,
        r_min: f64,
        mut f: impl FnMut(f64) -> Option<f64>,
    ) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for k in 1..self.ladder.len() {
            let (lo, hi) = (self.ladder[k - 1], self.ladder[k]);
            let mut best: Option<(f64, f64)> = None;
            let i0 = (lo / self.step).ceil() as usize;
            let i1 = ((hi / self.step).floor() as usize).min(self.n_half());
            for i in i0..=i1 {
                let r = i as f64 * self.step;
                if r <= lo || r < r_min {
                    continue;
                }
                if let Some(v) = f(r) {
                    if best.map_or(true, |(bv, _)| v < bv) {
                        best = Some((v, r));
                    }
                }
            }
            if let Some((v, r)) = best {
                out.push((hi, v, r));
            }
        }
        out
    }
}

/// Trend statistics look at this many outermost annuli so that inner-window
/// transients (where additive constants still matter) do not pollute them.
pub(crate) const TREND_ANNULI: usize = 5;

pub(crate) fn trend_tail(series: &[(f64, f64, f64)]) -> &[(f64, f64, f64)] {
    let n = series.len();
    &series[n.saturating_sub(TREND_ANNULI)..]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing_roundtrip() {
        let w = FrequencyWindow::new(1024.0, 0.25).unwrap();
        assert_eq!(w.len(), 2 * 4096 + 1);
        assert_eq!(w.xi(w.n_half()), 0.0);
        assert_eq!(w.xi(0), -1024.0);
        assert_eq!(w.xi(w.len() - 1), 1024.0);
        for &xi in &[-1024.0, -3.25, 0.0, 0.25, 1000.75] {
            assert_eq!(w.xi(w.index_of(xi)), xi);
        }
    }

    #[test]
    fn ladder_is_dyadic_increasing_ending_at_radius() {
        let w = FrequencyWindow::new(4096.0, 0.125).unwrap();
        assert_eq!(*w.ladder.last().unwrap(), 4096.0);
        for k in 1..w.ladder.len() {
            assert!(w.ladder[k] > w.ladder[k - 1]);
            assert_eq!(w.ladder[k], 2.0 * w.ladder[k - 1]);
        }
    }

    #[test]
    fn rejects_non_integer_and_small_grids() {
        assert!(FrequencyWindow::new(1000.0, 0.3).is_err());
        assert!(FrequencyWindow::new(100.0, 1.0).is_err());
    }

    #[test]
    fn annulus_classification() {
        let w = FrequencyWindow::new(1024.0, 0.25).unwrap();
        let k_last = w.ladder.len() - 1;
        assert_eq!(w.annulus_of(1000.0), Some(k_last));
        assert_eq!(w.annulus_of(-1000.0), Some(k_last));
        assert_eq!(w.annulus_of(2000.0), None);
        assert_eq!(w.annulus_of(0.1), Some(0));
    }
}
