//! Derivative-growth sequences, the associated growth function q_L, class
//! seminorms, the quasi-analyticity trend test, and the ladder search for
//! the coercion condition relating q_L to a pair of weights.

use serde::Serialize;

use crate::grid::{trend_tail, FrequencyWindow};
use crate::spectra::GridSpectrum;
use crate::verdict::{TrendVerdict, Verdict};
use crate::weights::Weight;
use crate::{Error, Result};

/// Hard cap on the index scanned by q_L; growth beyond this means the
/// requested t is far outside any numerically sensible regime.
const K_CAP: usize = 10_000_000;

#[derive(Debug, Clone)]
pub enum DCSequence {
    /// L_0 = 1, L_k = k: the class of real-analytic growth.
    Analytic,
    /// L_0 = 1, L_k = k^sigma with sigma > 1.
    GevreyOrder { sigma: f64 },
    /// Explicit table starting at L_0 = 1.
    Table { l: Vec<f64>, name: String },
}

impl DCSequence {
    pub fn analytic() -> Self {
        DCSequence::Analytic
    }

    pub fn gevrey_order(sigma: f64) -> Result<Self> {
        if !(sigma > 1.0) || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "gevrey-order parameter must exceed 1, got {sigma}"
            )));
        }
        Ok(DCSequence::GevreyOrder { sigma })
    }

    pub fn table(l: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if l.len() < 2 {
            return Err(Error::Config("sequence table needs at least two entries".into()));
        }
        if (l[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("sequence must start at 1, got {}", l[0])));
        }
        for k in 1..l.len() {
            if l[k] < l[k - 1] - 1e-12 {
                return Err(Error::Config(format!("sequence decreases at index {k}")));
            }
            if l[k] < k as f64 - 1e-9 {
                return Err(Error::Config(format!(
                    "sequence entry {k} = {} falls below its index",
                    l[k]
                )));
            }
        }
        Ok(DCSequence::Table { l, name: name.into() })
    }

    /// CSV rows (k, L_k) with k = 0,1,2,... in order.
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("{}: line {} needs two columns", path.display(), lineno + 1)));
            };
            match (a.parse::<usize>(), b.parse::<f64>()) {
                (Ok(k), Ok(v)) => {
                    if k != entries.len() {
                        return Err(Error::Parse(format!(
                            "{}: indices must run 0,1,2,..., got {k} at line {}",
                            path.display(),
                            lineno + 1
                        )));
                    }
                    entries.push(v);
                }
                _ if entries.is_empty() => continue, // header row
                _ => {
                    return Err(Error::Parse(format!(
                        "{}: line {} is not numeric",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::table(entries, format!("table:{}", path.display()))
    }

    /// L_k; None once an explicit table is exhausted.
    pub fn l_k(&self, k: usize) -> Option<f64> {
        match self {
            DCSequence::Analytic => Some(if k == 0 { 1.0 } else { k as f64 }),
            DCSequence::GevreyOrder { sigma } => Some((k.max(1) as f64).powf(*sigma)),
            DCSequence::Table { l, .. } => l.get(k).copied(),
        }
    }

    /// Smallest constant C with C * L_{k+1} >= L_k over the testable range;
    /// 1 for every nondecreasing sequence, kept for reporting.
    pub fn regularity_constant(&self) -> f64 {
        let k_max = match self {
            DCSequence::Table { l, .. } => l.len() - 1,
            _ => 1000,
        };
        let mut c: f64 = 1.0;
        for k in 0..k_max {
            if let (Some(a), Some(b)) = (self.l_k(k), self.l_k(k + 1)) {
                c = c.max(a / b);
            }
        }
        c
    }

    pub fn name(&self) -> String {
        match self {
            DCSequence::Analytic => "analytic".into(),
            DCSequence::GevreyOrder { sigma } => format!("gevrey-order:{sigma}"),
            DCSequence::Table { name, .. } => name.clone(),
        }
    }
}

/// log sup_{k>=0} (t/L_k)^k, the growth function of the sequence. The sup is
/// scanned up to the first k with L_k >= t, beyond which terms decrease; the
/// k = 0 term pins the result at >= 0.
pub fn q_l(seq: &DCSequence, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("q_L needs t > 0, got {t}")));
    }
    let log_t = t.ln();
    let mut best = 0.0f64; // k = 0
    let mut k = 1usize;
    loop {
        let Some(lk) = seq.l_k(k) else {
            return Err(Error::Representation(format!(
                "sequence table exhausted at k = {k} before reaching t = {t}"
            )));
        };
        best = best.max(k as f64 * (log_t - lk.ln()));
        if lk >= t {
            return Ok(best);
        }
        k += 1;
        if k > K_CAP {
            return Err(Error::Precondition(format!(
                "q_L scan exceeded {K_CAP} terms for t = {t}"
            )));
        }
    }
}

/// A smooth function on an interval with derivative access of controlled
/// order: registered analytic rules, a Fourier-side model differentiated
/// spectrally, or raw samples differentiated by central differences with
/// one Richardson refinement.
#[derive(Debug, Clone)]
pub enum SmoothModel {
    Constant(f64),
    /// x -> e^{a x}
    Exp { a: f64 },
    /// physical function carried by its windowed spectrum
    Spectral(GridSpectrum),
    /// values[i] = f(x0 + i * step)
    Sampled { x0: f64, step: f64, values: Vec<f64> },
}

impl SmoothModel {
    pub fn alpha_max(&self) -> usize {
        match self {
            SmoothModel::Sampled { .. } => 8,
            _ => 40,
        }
    }

    /// sup over x in [k.0, k.1] of |D^alpha f|.
    pub fn derivative_sup(&self, alpha: usize, k: (f64, f64)) -> Result<f64> {
        if !(k.1 > k.0) {
            return Err(Error::Precondition("interval must have positive length".into()));
        }
        match self {
            SmoothModel::Constant(c) => Ok(if alpha == 0 { c.abs() } else { 0.0 }),
            SmoothModel::Exp { a } => {
                let sup_exp = (a * k.0).exp().max((a * k.1).exp());
                Ok(a.abs().powi(alpha as i32) * sup_exp)
            }
            SmoothModel::Spectral(spec) => spectral_derivative_sup(spec, alpha, k),
            SmoothModel::Sampled { x0, step, values } => {
                fd_derivative_sup(*x0, *step, values, alpha, k)
            }
        }
    }
}

fn spectral_derivative_sup(spec: &GridSpectrum, alpha: usize, k: (f64, f64)) -> Result<f64> {
    use num_complex::Complex64;
    let win = &spec.window;
    let half_box = std::f64::consts::PI / win.step;
    if k.0 < -half_box || k.1 > half_box {
        return Err(Error::Precondition(format!(
            "interval [{}, {}] leaves the physical box of half-width {half_box}",
            k.0, k.1
        )));
    }
    let weighted: Vec<Complex64> = win
        .frequencies()
        .zip(&spec.samples)
        .map(|(xi, s)| Complex64::new(0.0, xi).powu(alpha as u32) * s)
        .collect();
    if weighted.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Representation(format!(
            "spectral derivative of order {alpha} overflows on this window"
        )));
    }
    let m = (4 * win.len()).next_power_of_two().max(1 << 16);
    let phys = crate::fft::physical_from_spectrum(&weighted, win, m);
    let mut sup = 0.0f64;
    for (j, c) in phys.iter().enumerate() {
        let x = crate::fft::physical_coordinate(j, m, win.step);
        if x >= k.0 && x <= k.1 {
            sup = sup.max(c.norm());
        }
    }
    Ok(sup)
}

/// Iterated central first difference of order alpha at the given stride,
/// returning (first valid x, step, values). Error is O((stride*step)^2).
fn fd_stride(x0: f64, step: f64, values: &[f64], alpha: usize, stride: usize) -> (f64, Vec<f64>) {
    let mut cur = values.to_vec();
    let mut lead = x0;
    for _ in 0..alpha {
        if cur.len() < 2 * stride + 1 {
            return (lead, Vec::new());
        }
        let denom = 2.0 * stride as f64 * step;
        let next: Vec<f64> = (stride..cur.len() - stride)
            .map(|i| (cur[i + stride] - cur[i - stride]) / denom)
            .collect();
        lead += stride as f64 * step;
        cur = next;
    }
    (lead, cur)
}

fn fd_derivative_sup(x0: f64, step: f64, values: &[f64], alpha: usize, k: (f64, f64)) -> Result<f64> {
    if alpha == 0 {
        let mut sup = 0.0f64;
        for (i, v) in values.iter().enumerate() {
            let x = x0 + i as f64 * step;
            if x >= k.0 && x <= k.1 {
                sup = sup.max(v.abs());
            }
        }
        return Ok(sup);
    }
    if alpha > 8 {
        return Err(Error::Unsupported(format!(
            "sampled models support derivatives up to order 8, requested {alpha}"
        )));
    }
    let (xa, fine) = fd_stride(x0, step, values, alpha, 1);
    let (xb, coarse) = fd_stride(x0, step, values, alpha, 2);
    if fine.is_empty() || coarse.is_empty() {
        return Err(Error::Representation(format!(
            "too few samples for an order-{alpha} difference"
        )));
    }
    // both grids share the sample spacing; align by index offset
    let offset = ((xb - xa) / step).round() as usize;
    let mut sup = 0.0f64;
    let mut seen = false;
    for (i, c) in coarse.iter().enumerate() {
        let idx = i + offset;
        if idx >= fine.len() {
            break;
        }
        let x = xb + i as f64 * step;
        if x < k.0 || x > k.1 {
            continue;
        }
        let richardson = (4.0 * fine[idx] - c) / 3.0;
        sup = sup.max(richardson.abs());
        seen = true;
    }
    if !seen {
        return Err(Error::Precondition(
            "interval does not meet the differentiable interior of the samples".into(),
        ));
    }
    Ok(sup)
}

#[derive(Debug, Clone, Serialize)]
pub struct DcSeminorm {
    /// log of the seminorm (the accumulation runs in the log domain)
    pub log_value: f64,
    /// exp of log_value; +inf when it overflows
    pub value: f64,
    pub attained_alpha: usize,
    /// per-alpha maxima still growing at the derivative-order cap
    pub truncated: bool,
}

/// sup over alpha and x in K of (r/L_alpha)^alpha |D^alpha f(x)|, scanned to
/// the model's derivative-order cap.
pub fn dc_seminorm(f: &SmoothModel, seq: &DCSequence, r: f64, k: (f64, f64)) -> Result<DcSeminorm> {
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("radius r must be positive, got {r}")));
    }
    let mut alpha_max = f.alpha_max();
    if let DCSequence::Table { l, .. } = seq {
        alpha_max = alpha_max.min(l.len() - 1);
    }
    let log_r = r.ln();
    let mut best = f64::NEG_INFINITY;
    let mut attained = 0usize;
    let mut terms = Vec::with_capacity(alpha_max + 1);
    let mut stopped_early = false;
    for alpha in 0..=alpha_max {
        let sup = match f.derivative_sup(alpha, k) {
            Ok(s) => s,
            Err(_) if alpha > 0 => {
                stopped_early = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let l_alpha = seq.l_k(alpha).unwrap();
        let term = if sup > 0.0 {
            alpha as f64 * (log_r - l_alpha.ln()) + sup.ln()
        } else {
            f64::NEG_INFINITY
        };
        terms.push(term);
        if term > best {
            best = term;
            attained = alpha;
        }
    }
    let growing_at_cap = attained + 1 == terms.len()
        && terms.len() >= 3
        && terms[terms.len() - 1] > terms[terms.len() - 2]
        && terms[terms.len() - 2] > terms[terms.len() - 3];
    Ok(DcSeminorm {
        log_value: best,
        value: best.exp(),
        attained_alpha: attained,
        truncated: stopped_early || growing_at_cap,
    })
}

/// Dyadic-increment trend of the integral of q_L(t)/t^2: constant increments
/// per octave signal divergence (quasi-analytic), geometric decay signals
/// convergence. Near-critical sequences land in the inconclusive band.
pub fn quasianalytic_test(seq: &DCSequence, t_max: f64) -> Result<TrendVerdict> {
    if !(t_max >= 1.0e3) {
        return Err(Error::Precondition(format!("t_max must be at least 1e3, got {t_max}")));
    }
    let mut increments = Vec::new();
    let mut lo = 1.0f64;
    while 2.0 * lo <= t_max {
        let hi = 2.0 * lo;
        const STEPS: usize = 128;
        let du = (hi / lo).ln() / STEPS as f64;
        let mut acc = 0.0;
        for i in 0..=STEPS {
            let t = lo * (du * i as f64).exp();
            let v = q_l(seq, t)? / t; // substitution t = e^u folds one power of t
            let w = if i == 0 || i == STEPS { 0.5 } else { 1.0 };
            acc += w * v * du;
        }
        increments.push(acc);
        lo = hi;
    }
    if increments.len() < 5 {
        return Ok(TrendVerdict::Inconclusive);
    }
    let tail = &increments[increments.len() - 4..];
    let ratios: Vec<f64> = tail.windows(2).map(|p| p[1] / p[0]).collect();
    if ratios.iter().all(|&r| r <= 0.93) {
        Ok(TrendVerdict::Convergent)
    } else if ratios.iter().all(|&r| r >= 0.97) {
        Ok(TrendVerdict::Divergent)
    } else {
        Ok(TrendVerdict::Inconclusive)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StarReport {
    pub verdict: Verdict,
    /// certified scale: q_L(a w'(xi)) >= b w(xi) for all grid |xi| > threshold_r
    pub a: Option<f64>,
    pub threshold_r: Option<f64>,
    pub b: f64,
    pub witness: Option<f64>,
}

/// Searches a geometric ladder of scales a (and onset radii R) for the
/// smallest certificate of q_L(a w'(xi)) >= b w(xi) beyond R. A found
/// certificate is revalidated on a grid of doubled density; refutation is a
/// decreasing per-annulus margin trend at the largest ladder scale.
pub fn star_condition(
    seq: &DCSequence,
    w: &Weight,
    w_prime: &Weight,
    b: f64,
    win: &FrequencyWindow,
) -> Result<StarReport> {
    if !(b > 0.0) {
        return Err(Error::Precondition(format!("b must be positive, got {b}")));
    }
    let h = win.step;
    let n = win.n_half();
    let margin = |a: f64, r: f64| -> Result<f64> {
        Ok(q_l(seq, (a * w_prime.eval(r)).max(1e-300))? - b * w.eval(r))
    };

    let a_ladder: Vec<f64> = (-16i32..=40).map(|j| 2f64.powf(j as f64 / 4.0)).collect();
    let mut r_ladder = vec![1.0];
    while *r_ladder.last().unwrap() * 2.0 <= win.radius / 4.0 {
        let next = r_ladder.last().unwrap() * 2.0;
        r_ladder.push(next);
    }

    for &a in &a_ladder {
        // single pass: find the largest failing radius for this scale
        let mut last_fail: Option<f64> = None;
        let i0 = (1.0 / h).floor() as usize + 1;
        for i in i0..=n {
            let r = i as f64 * h;
            if margin(a, r)? < 0.0 {
                last_fail = Some(r);
            }
        }
        let threshold = match last_fail {
            None => Some(r_ladder[0]),
            Some(rf) => r_ladder.iter().copied().find(|&rr| rr >= rf),
        };
        let Some(threshold_r) = threshold else {
            continue; // fails arbitrarily far out at this scale
        };
        // revalidate at doubled density
        let n2 = 2 * n;
        let h2 = h / 2.0;
        let j0 = (threshold_r / h2).floor() as usize + 1;
        let mut ok = true;
        for j in j0..=n2 {
            if margin(a, j as f64 * h2)? < 0.0 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(StarReport {
                verdict: Verdict::VerifiedOnWindow,
                a: Some(a),
                threshold_r: Some(threshold_r),
                b,
                witness: None,
            });
        }
    }

    // no scale certified: examine the margin trend at the largest scale
    let a_max = *a_ladder.last().unwrap();
    let mut minima = Vec::new();
    for k in 1..win.ladder.len() {
        let (lo, hi) = (win.ladder[k - 1], win.ladder[k]);
        let i0 = (lo / h).ceil() as usize;
        let i1 = ((hi / h).floor() as usize).min(n);
        let mut best: Option<(f64, f64)> = None;
        for i in i0..=i1 {
            let r = i as f64 * h;
            if r <= lo || r < 1.0 {
                continue;
            }
            let v = margin(a_max, r)?;
            if best.map_or(true, |(bv, _)| v < bv) {
                best = Some((v, r));
            }
        }
        if let Some((v, r)) = best {
            minima.push((hi, v, r));
        }
    }
    let tail = trend_tail(&minima);
    // worsening = margins sink monotonically and end below zero; early annuli
    // may still be positive while the deficit opens up further out
    let worsening = tail.len() >= 3
        && tail.last().map_or(false, |&(_, v, _)| v < 0.0)
        && tail.windows(2).all(|p| p[1].1 < p[0].1);
    if worsening {
        Ok(StarReport {
            verdict: Verdict::RefutedWithWitness,
            a: None,
            threshold_r: None,
            b,
            witness: tail.last().map(|&(_, _, r)| r),
        })
    } else {
        Ok(StarReport {
            verdict: Verdict::Inconclusive,
            a: None,
            threshold_r: None,
            b,
            witness: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_function_at_unit_and_e() {
        let l = DCSequence::analytic();
        assert_eq!(q_l(&l, 1.0).unwrap(), 0.0);
        let qe = q_l(&l, std::f64::consts::E).unwrap();
        assert!((qe - 1.0).abs() < 1e-12, "q_L(e) = {qe}");
    }

    #[test]
    fn growth_function_matches_brute_force_and_linear_law() {
        let l = DCSequence::analytic();
        for (i, t) in crate::num::log_spaced(10.0, 1.0e4, 200).into_iter().enumerate() {
            let got = q_l(&l, t).unwrap();
            let mut brute = 0.0f64;
            for k in 1..=100_000usize {
                brute = brute.max(k as f64 * (t / k as f64).ln());
            }
            assert!((got - brute).abs() < 1e-9, "sample {i}: {got} vs {brute}");
            assert!(
                (got - t / std::f64::consts::E).abs() <= 1.0,
                "sample {i}: q = {got}, t/e = {}",
                t / std::f64::consts::E
            );
        }
    }

    #[test]
    fn growth_function_is_monotone_in_t() {
        let l = DCSequence::gevrey_order(2.0).unwrap();
        let mut prev = 0.0;
        for t in crate::num::log_spaced(0.5, 1.0e4, 1000) {
            let q = q_l(&l, t).unwrap();
            assert!(q >= prev - 1e-12, "q_L dips at t = {t}");
            prev = q;
        }
    }

    #[test]
    fn gevrey_order_growth_is_a_root_law() {
        let l = DCSequence::gevrey_order(2.0).unwrap();
        let t = 1.0e4;
        let q = q_l(&l, t).unwrap();
        let continuous = 2.0 / std::f64::consts::E * t.sqrt();
        assert!((q - continuous).abs() < 1.0, "q = {q}, continuous max = {continuous}");
    }

    #[test]
    fn rejects_bad_sequences_and_arguments() {
        assert!(DCSequence::gevrey_order(1.0).is_err());
        assert!(DCSequence::table(vec![2.0, 3.0], "x").is_err());
        assert!(DCSequence::table(vec![1.0, 0.5], "x").is_err());
        assert!(q_l(&DCSequence::analytic(), 0.0).is_err());
        let short = DCSequence::table(vec![1.0, 1.0, 2.0], "short").unwrap();
        assert!(q_l(&short, 100.0).is_err());
    }

    #[test]
    fn seminorm_of_constant_is_its_modulus() {
        let s = dc_seminorm(
            &SmoothModel::Constant(1.0),
            &DCSequence::analytic(),
            1.0,
            (0.0, 1.0),
        )
        .unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(s.attained_alpha, 0);
        assert!(!s.truncated);
    }

    #[test]
    fn seminorm_of_exponential_is_finite_and_monotone_in_r() {
        let f = SmoothModel::Exp { a: 1.0 };
        let l = DCSequence::analytic();
        let s1 = dc_seminorm(&f, &l, 1.0, (0.0, 1.0)).unwrap();
        assert!(
            (s1.value - std::f64::consts::E).abs() < 1e-9,
            "value = {}",
            s1.value
        );
        assert!(!s1.truncated);
        let s_half = dc_seminorm(&f, &l, 0.5, (0.0, 1.0)).unwrap();
        assert!(s_half.value <= s1.value + 1e-12);
    }

    #[test]
    fn kinked_samples_overrun_the_derivative_cap() {
        let step = 1.0 / 256.0;
        let values: Vec<f64> = (0..1025)
            .map(|i| {
                let x = -2.0 + i as f64 * step;
                let t = (x / 0.5).rem_euclid(1.0);
                1.0 - (2.0 * t - 1.0).abs()
            })
            .collect();
        let f = SmoothModel::Sampled { x0: -2.0, step, values };
        let s = dc_seminorm(&f, &DCSequence::analytic(), 1.0, (-1.0, 1.0)).unwrap();
        assert!(s.truncated, "per-order maxima should still be growing: {s:?}");
        assert_eq!(s.attained_alpha, 8);
    }

    #[test]
    fn quasianalyticity_trends() {
        assert!(matches!(
            quasianalytic_test(&DCSequence::analytic(), 1.0e4).unwrap(),
            TrendVerdict::Divergent
        ));
        assert!(matches!(
            quasianalytic_test(&DCSequence::gevrey_order(2.0).unwrap(), 1.0e4).unwrap(),
            TrendVerdict::Convergent
        ));
        let rapid: Vec<f64> = (0..40)
            .map(|k| if k == 0 { 1.0 } else { (k as f64) * (k as f64).exp() })
            .collect();
        let rapid = DCSequence::table(rapid, "rapid").unwrap();
        assert!(matches!(
            quasianalytic_test(&rapid, 1.0e4).unwrap(),
            TrendVerdict::Convergent
        ));
    }

    #[test]
    fn star_certificate_for_analytic_sequence_on_log() {
        let win = FrequencyWindow::new(1.0e4, 1.0).unwrap();
        let rep = star_condition(
            &DCSequence::analytic(),
            &Weight::Log,
            &Weight::Log,
            1.0,
            &win,
        )
        .unwrap();
        assert!(rep.verdict.is_verified(), "{rep:?}");
        let a = rep.a.unwrap();
        assert!(
            a <= std::f64::consts::E * 1.05,
            "certified scale {a} should be close to e"
        );
        assert!(a >= 2.0, "scales below 2 cannot dominate, got {a}");
    }

    #[test]
    fn star_holds_when_the_derived_weight_dominates() {
        let win = FrequencyWindow::new(1.0e4, 1.0).unwrap();
        let rep = star_condition(
            &DCSequence::analytic(),
            &Weight::Log,
            &Weight::gevrey(0.5).unwrap(),
            1.0,
            &win,
        )
        .unwrap();
        assert!(rep.verdict.is_verified(), "{rep:?}");
    }

    #[test]
    fn star_refuted_for_slow_sequence_against_itself() {
        let win = FrequencyWindow::new(1.0e4, 1.0).unwrap();
        let g = Weight::gevrey(0.5).unwrap();
        let rep = star_condition(&DCSequence::gevrey_order(2.0).unwrap(), &g, &g, 4.0, &win).unwrap();
        assert!(rep.verdict.is_refuted(), "{rep:?}");
        let witness = rep.witness.unwrap();
        assert!(witness > win.radius / 2.0, "witness {witness} should sit at the edge");
    }
}
