//! Shared numerical kernels: stable sinc, bisection, trapezoid quadrature,
//! the tail-cumulative integral table used by the convolution bounds, and a
//! sliding-window maximum for ball suprema.

use crate::error::{Error, Result};

/// sin(x)/x with a series fallback near zero.
pub fn sinc(x: f64) -> f64 {
    let a = x.abs();
    if a < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Bisection on [lo, hi] for a continuous f with f(lo), f(hi) of opposite
/// signs. Converges to relative tolerance `rtol` on the root position.
pub fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F, rtol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Solve(format!(
            "no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rtol * mid.abs().max(1e-300) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Plain trapezoid sum of uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// 200-point log-spaced grid in [lo, hi].
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Ordinary least squares fit y = c + m x. Returns (c, m, residual_rms).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let m = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - m * mx;
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - c - m * x;
        ss += r * r;
    }
    (c, m, (ss / n).sqrt())
}

/// Tail-cumulative table of a nonnegative even integrand sampled uniformly on
/// [0, x_max]: T(x) = integral of f over [x, infinity), with everything past
/// x_max treated as zero.
///
/// The table accumulates trapezoid cells right to left so that tiny tail
/// values are sums of positives, never differences; T is then exactly
/// nonincreasing as stored. Evaluation integrates the piecewise-linear
/// interpolant of f in closed form, which keeps T monotone between grid
/// points as well. Differences of T values therefore bound segment integrals
/// without catastrophic cancellation, which is what the sandwich and
/// pseudo-measure bounds rely on.
#[derive(Debug, Clone)]
pub struct TailTable {
    step: f64,
    /// f samples at i*step, i = 0..=n.
    f: Vec<f64>,
    /// t[i] = integral from i*step to x_max.
    t: Vec<f64>,
}

impl TailTable {
    /// Build from samples of f at 0, step, 2*step, ..; negative samples are
    /// clamped to zero (callers pass densities and transforms that are
    /// nonnegative up to rounding).
    pub fn new(samples: &[f64], step: f64) -> Self {
        let f: Vec<f64> = samples.iter().map(|&v| v.max(0.0)).collect();
        let n = f.len();
        let mut t = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n - 1).rev() {
            acc += 0.5 * step * (f[i] + f[i + 1]);
            t[i] = acc;
        }
        TailTable { step, f, t }
    }

    /// Total mass: integral of f over [0, x_max].
    pub fn head_mass(&self) -> f64 {
        self.t[0]
    }

    /// T(x) for x >= 0. Exact integral of the piecewise-linear interpolant.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.t[0];
        }
        let pos = x / self.step;
        let i = pos.floor() as usize;
        if i + 1 >= self.f.len() {
            return 0.0;
        }
        let u = (i as f64 + 1.0) * self.step - x; // distance up to the cell's right edge
        let slope = (self.f[i + 1] - self.f[i]) / self.step;
        // integral of the interpolant over [x, (i+1)*step]
        let piece = self.f[i + 1] * u - 0.5 * slope * u * u;
        self.t[i + 1] + piece.max(0.0)
    }

    /// Integral of the even extension of f over [x1, x2], x1 <= x2, split so
    /// every branch is a difference of tail values on one monotone side.
    pub fn segment(&self, x1: f64, x2: f64) -> f64 {
        debug_assert!(x1 <= x2);
        if x1 >= 0.0 {
            (self.tail(x1) - self.tail(x2)).max(0.0)
        } else if x2 <= 0.0 {
            (self.tail(-x2) - self.tail(-x1)).max(0.0)
        } else {
            let total = 2.0 * self.t[0];
            (total - self.tail(x2) - self.tail(-x1)).max(0.0)
        }
    }
}

/// Sliding maximum of `values` over index windows [lo[i], hi[i]] (inclusive).
/// Windows whose bounds both advance monotonically are served by a monotone
/// deque in O(n); a window violating monotonicity (lower bound regressing
/// below candidates already evicted, or upper bound shrinking below indices
/// already admitted) falls back to a direct scan for that window only.
pub fn sliding_max(values: &[f64], lo: &[usize], hi: &[usize]) -> Vec<f64> {
    let n = lo.len();
    assert_eq!(hi.len(), n);
    let mut out = vec![f64::NEG_INFINITY; n];
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut next_push = 0usize; // first index not yet offered to the deque
    let mut frontier_lo = 0usize; // high-water mark of lower bounds seen

    for i in 0..n {
        let (l, h) = (lo[i], hi[i]);
        debug_assert!(l <= h && h < values.len());
        if l < frontier_lo || h + 1 < next_push {
            let mut m = f64::NEG_INFINITY;
            for &v in &values[l..=h] {
                if v > m {
                    m = v;
                }
            }
            out[i] = m;
            continue;
        }
        frontier_lo = l;
        while next_push <= h {
            while let Some(&b) = deque.back() {
                if values[b] <= values[next_push] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next_push);
            next_push += 1;
        }
        while let Some(&f) = deque.front() {
            if f < l {
                deque.pop_front();
            } else {
                break;
            }
        }
        out[i] = values[*deque.front().expect("window nonempty")];
    }
    out
}
