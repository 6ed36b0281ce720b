//! FFT plumbing shared by the spectra, mollifier, and counterexample
//! pipelines: linear convolution of gridded functions, inverse transforms
//! onto oversampled physical grids, spectral derivative suprema, and the
//! forward transform of physically sampled models.
//!
//! Conventions: the transform is F(u)(xi) = integral of u(x) e^{-i xi x} dx,
//! so the inverse carries the 1/(2 pi) factor. A frequency window of step h
//! corresponds to the physical box [-pi/h, pi/h).

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

use crate::grid::FrequencyWindow;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place complex FFT, unnormalized (matching the usual DFT definition).
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let fft = if inverse {
            p.borrow_mut().plan_fft_inverse(buf.len())
        } else {
            p.borrow_mut().plan_fft_forward(buf.len())
        };
        fft.process(buf);
    });
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Linear convolution of two uniformly sampled real functions with the same
/// step: result[k] ~ step * sum_j a[j] b[k-j], approximating the continuous
/// convolution on the combined grid (length a.len() + b.len() - 1). The first
/// output sample sits at offset_a + offset_b if the inputs start at those
/// coordinates.
pub fn linear_convolve(a: &[f64], b: &[f64], step: f64) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let m = next_pow2(out_len);
    let mut fa = vec![Complex64::new(0.0, 0.0); m];
    let mut fb = vec![Complex64::new(0.0, 0.0); m];
    for (i, &v) in a.iter().enumerate() {
        fa[i].re = v;
    }
    for (i, &v) in b.iter().enumerate() {
        fb[i].re = v;
    }
    fft_in_place(&mut fa, false);
    fft_in_place(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    fft_in_place(&mut fa, true);
    let scale = step / m as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Complex-valued variant of `linear_convolve`, same layout and scaling.
pub fn linear_convolve_complex(a: &[Complex64], b: &[Complex64], step: f64) -> Vec<Complex64> {
    let out_len = a.len() + b.len() - 1;
    let m = next_pow2(out_len);
    let mut fa = vec![Complex64::new(0.0, 0.0); m];
    let mut fb = vec![Complex64::new(0.0, 0.0); m];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    fft_in_place(&mut fa, false);
    fft_in_place(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    fft_in_place(&mut fa, true);
    let scale = step / m as f64;
    fa.truncate(out_len);
    for c in &mut fa {
        *c *= scale;
    }
    fa
}

/// Inverse transform of a window-gridded spectrum onto an oversampled
/// physical grid of m points. Returns u(x_j) for x_j = j * dx with
/// dx = 2 pi / (m h), j = 0..m-1, wrapping the box (index j >= m/2
/// corresponds to x_j - 2 pi / h). m must exceed the sample count.
pub fn physical_from_spectrum(spec: &[Complex64], win: &FrequencyWindow, m: usize) -> Vec<Complex64> {
    let n = win.n_half();
    assert_eq!(spec.len(), 2 * n + 1, "spectrum length must match window");
    assert!(m > 2 * n, "physical grid must oversample the spectrum");
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    // bin k holds u_hat(k h); negative frequencies wrap to the top
    buf[..=n].copy_from_slice(&spec[n..]);
    buf[m - n..].copy_from_slice(&spec[..n]);
    fft_in_place(&mut buf, true);
    let scale = win.step / (2.0 * std::f64::consts::PI);
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Physical coordinate of index j in the layout of `physical_from_spectrum`.
pub fn physical_coordinate(j: usize, m: usize, h: f64) -> f64 {
    let dx = 2.0 * std::f64::consts::PI / (m as f64 * h);
    let x = j as f64 * dx;
    let box_len = 2.0 * std::f64::consts::PI / h;
    if x >= 0.5 * box_len {
        x - box_len
    } else {
        x
    }
}

/// sup over the physical box of |D^order u| for a real even spectrum,
/// computed spectrally: multiply by (i xi)^order, invert on a fine grid,
/// take the max modulus.
pub fn derivative_sup(spec: &[f64], win: &FrequencyWindow, order: u32, m: usize) -> f64 {
    let n = win.n_half();
    assert_eq!(spec.len(), 2 * n + 1);
    let weighted: Vec<Complex64> = (0..spec.len())
        .map(|i| {
            let xi = win.xi(i);
            Complex64::new(0.0, xi).powu(order) * spec[i]
        })
        .collect();
    let phys = physical_from_spectrum(&weighted, win, m);
    phys.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Forward transform of physical samples onto the frequency window.
/// `phys[j]` must hold f(x_j) for x_j = (j - m/2) dx, dx = 2 pi / (m h).
pub fn spectrum_from_physical(phys: &[f64], win: &FrequencyWindow) -> Vec<Complex64> {
    let m = phys.len();
    let n = win.n_half();
    assert!(m > 2 * n, "physical sampling must oversample the window");
    let dx = 2.0 * std::f64::consts::PI / (m as f64 * win.step);
    let mut buf: Vec<Complex64> = phys.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    // u_hat(k h) = dx * (-1)^k * DFT[f](k mod m), from the half-box shift
    (0..2 * n + 1)
        .map(|i| {
            let k = i as i64 - n as i64;
            let bin = k.rem_euclid(m as i64) as usize;
            let sign = if k & 1 == 0 { 1.0 } else { -1.0 };
            buf[bin] * (dx * sign)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_convolve_matches_direct_sum() {
        let a: Vec<f64> = (0..17).map(|i| (i as f64 * 0.3).cos()).collect();
        let b: Vec<f64> = (0..9).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let step = 0.5;
        let got = linear_convolve(&a, &b, step);
        assert_eq!(got.len(), a.len() + b.len() - 1);
        for k in 0..got.len() {
            let mut s = 0.0;
            for j in 0..a.len() {
                if k >= j && k - j < b.len() {
                    s += a[j] * b[k - j];
                }
            }
            assert!((got[k] - step * s).abs() < 1e-12, "index {k}");
        }
    }

    #[test]
    fn indicator_spectrum_inverts_to_indicator() {
        // u_hat(xi) = 2 sin(xi)/xi is the transform of the indicator of [-1,1]
        let win = FrequencyWindow::new(2048.0, 0.5).unwrap();
        let spec: Vec<Complex64> = win
            .frequencies()
            .map(|xi| Complex64::new(2.0 * crate::num::sinc(xi), 0.0))
            .collect();
        let m = 1 << 16;
        let phys = physical_from_spectrum(&spec, &win, m);
        for (j, c) in phys.iter().enumerate().step_by(97) {
            let x = physical_coordinate(j, m, win.step);
            let expect = if x.abs() < 0.9 {
                1.0
            } else if x.abs() > 1.1 {
                0.0
            } else {
                continue; // skip the jump neighborhood (Gibbs ringing)
            };
            assert!(
                (c.re - expect).abs() < 3e-3,
                "x={x} got {} want {expect}",
                c.re
            );
            assert!(c.im.abs() < 1e-9);
        }
    }

    #[test]
    fn forward_transform_of_gaussian_matches_closed_form() {
        let win = FrequencyWindow::new(512.0, 0.25).unwrap();
        let m = 1 << 18;
        let dx = 2.0 * std::f64::consts::PI / (m as f64 * win.step);
        let phys: Vec<f64> = (0..m)
            .map(|j| {
                let x = (j as f64 - m as f64 / 2.0) * dx;
                (-0.5 * x * x).exp()
            })
            .collect();
        let spec = spectrum_from_physical(&phys, &win);
        for (i, xi) in win.frequencies().enumerate().step_by(389) {
            let expect = (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * xi * xi).exp();
            assert!(
                (spec[i].re - expect).abs() < 1e-8,
                "xi={xi}: {} vs {expect}",
                spec[i].re
            );
            assert!(spec[i].im.abs() < 1e-8);
        }
    }

    #[test]
    fn derivative_sup_of_gaussian() {
        // u(x) = e^{-x^2/2} has sup|u'| = e^{-1/2} at x = 1
        let win = FrequencyWindow::new(512.0, 0.25).unwrap();
        let spec: Vec<f64> = win
            .frequencies()
            .map(|xi| (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * xi * xi).exp())
            .collect();
        let sup = derivative_sup(&spec, &win, 1, 1 << 16);
        assert!((sup - (-0.5f64).exp()).abs() < 1e-7, "got {sup}");
    }
}
