//! The positive direction as runnable window experiments: bounded kernel
//! families with per-scale certificates, the moving-cut tail estimate, and
//! the two sufficient conditions under which slow decrease of the localized
//! operator output upgrades to slow decrease of the data's transform.
//!
//! Everything here is a verdict on one frequency window. "Verified" never
//! claims the asymptotic statement; it reports that every tested scale,
//! rung and certificate came out clean on the window at hand.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::dcclasses::{star_condition, DCSequence};
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::FrequencyWindow;
use crate::mollifiers::{self, ehrenpreis_units, unit_norm_bound, BumpModel, UnitSequence};
use crate::num;
use crate::parallel::par_map;
use crate::report::CurveSeries;
use crate::spectra::{self, slow_decrease_check, GridSpectrum, PhysicalModel};
use crate::symbols::{
    apply_operator, bracket, kernel_of, symbol_seminorm, weight_integral, KernelData, KernelModel,
    SeminormFlavor, SeparableTerm, SymbolModel, XFactor,
};
use crate::verdict::{TrendVerdict, Verdict};
use crate::weights::{compare, CompareMode, Weight};

/// Default unit-sequence depth for the star pipeline.
pub const DEFAULT_N_MAX: usize = 12;

/// Growth scales for family certificates, tail trends and envelope caps.
const LAMBDA_LADDER: [f64; 3] = [0.25, 0.5, 1.0];
/// Cut multipliers for the tail region |eta - xi| > rho w'(xi).
const RHO_LADDER: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
/// Candidates for lambda0; the first whose weight integral has an
/// insignificant edge wins.
const LAMBDA0_LADDER: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0];
/// Scales b demanded of the class condition before a star run proceeds.
const STAR_B_LADDER: [f64; 3] = [0.5, 1.0, 2.0];
/// Growth scales for the gamma-weighted symbol seminorm, largest first.
const GAMMA_LAMBDA_LADDER: [f64; 4] = [2.0, 1.0, 0.5, 0.25];
/// Scan radii for the class seminorm of the symbol, smallest first.
const DC_R_LADDER: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// The assembled estimate scans constants 2^0 .. 2^MAIN_C_MAX_EXP.
const MAIN_C_MAX_EXP: i32 = 12;
/// Every decay trend is decided on its last TREND_RUNGS dyadic rungs.
const TREND_RUNGS: usize = 3;
/// Ladder handed to every slow-decrease scan in this module.
const SD_LADDER: [f64; 3] = [1.0, 2.0, 4.0];
/// Growth scale of the lower-bound sublemma in the star pipeline.
const STEP2_LAMBDA: f64 = 0.5;

/// Plateau cutoff whose smoothing radii sigma k^(-1/beta) are summable for
/// beta < 1, pushing the transform below a stretched-exponential envelope
/// of exponent beta while the core keeps radius
/// half - sigma * sum_k k^(-1/beta).
pub fn class_plateau(half: f64, beta: f64, sigma: f64, terms: usize) -> Result<BumpModel> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Precondition(format!(
            "class exponent must sit in (0, 1), got {beta}"
        )));
    }
    if !(half > 0.0) || !(sigma > 0.0) || terms == 0 {
        return Err(Error::Precondition(
            "plateau half-width, smoothing scale and term count must be positive".into(),
        ));
    }
    let radii: Vec<f64> = (1..=terms)
        .map(|k| sigma * (k as f64).powf(-1.0 / beta))
        .collect();
    BumpModel::plateau(half, radii)
}

/// One certificate at a growth pair (lambda, Lambda): the sup over family
/// members of the weighted kernel bound, with the member and frequency
/// attaining it. Acceptance asks the sup to sit strictly inside the window;
/// rows near the window edge always truncate their integrals, so that flag
/// is carried separately and does not decide.
#[derive(Debug, Clone, Serialize)]
pub struct BoundednessCert {
    pub lambda: f64,
    pub cap_lambda: f64,
    pub sup_bracket: f64,
    pub argmax_member: usize,
    pub argmax_xi: f64,
    /// sup attained at |xi| <= 0.9 R
    pub interior: bool,
    /// some member kept a significant row integrand at the eta edge
    pub row_edge_flag: bool,
}

/// A finite family of kernels over one window, plus whatever boundedness
/// certificates `certify` has produced for it.
#[derive(Debug, Clone)]
pub struct KernelFamily {
    pub members: Vec<KernelModel>,
    pub labels: Vec<String>,
    pub certificates: Vec<BoundednessCert>,
}

impl KernelFamily {
    pub fn new(members: Vec<KernelModel>, labels: Vec<String>) -> Result<KernelFamily> {
        if members.is_empty() {
            return Err(Error::Precondition("kernel family must be nonempty".into()));
        }
        if members.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} members but {} labels",
                members.len(),
                labels.len()
            )));
        }
        let win = &members[0].window;
        if members[1..]
            .iter()
            .any(|m| m.window.radius != win.radius || m.window.step != win.step)
        {
            return Err(Error::Shape(
                "kernel family members must share one window".into(),
            ));
        }
        Ok(KernelFamily {
            members,
            labels,
            certificates: Vec::new(),
        })
    }

    pub fn window(&self) -> &FrequencyWindow {
        &self.members[0].window
    }

    /// For each lambda walks Lambda = lambda + max(m, 0) + {0, 1, 2} and
    /// keeps the first certificate whose sup sits interior to the window.
    /// Verified means every lambda found one.
    pub fn certify(&mut self, lambda_ladder: &[f64], m: f64, w: &Weight) -> Verdict {
        self.certificates.clear();
        let mut all_interior = true;
        for &lambda in lambda_ladder {
            let mut kept: Option<BoundednessCert> = None;
            for bump in 0..3 {
                let cap = lambda + m.max(0.0) + bump as f64;
                let cert = self.sup_bracket(lambda, cap, w);
                let interior = cert.interior;
                kept = Some(cert);
                if interior {
                    break;
                }
            }
            let cert = kept.expect("cap ladder is nonempty");
            all_interior &= cert.interior;
            self.certificates.push(cert);
        }
        if all_interior {
            Verdict::VerifiedOnWindow
        } else {
            Verdict::Inconclusive
        }
    }

    fn sup_bracket(&self, lambda: f64, cap: f64, w: &Weight) -> BoundednessCert {
        let mut sup = f64::NEG_INFINITY;
        let mut argmax_member = 0;
        let mut argmax_xi = 0.0;
        let mut row_edge = false;
        for (k, a) in self.members.iter().enumerate() {
            let b = bracket(a, lambda, cap, w);
            row_edge |= b.lower_bound_only;
            if b.value > sup {
                sup = b.value;
                argmax_member = k;
                argmax_xi = b.argmax_xi;
            }
        }
        BoundednessCert {
            lambda,
            cap_lambda: cap,
            sup_bracket: sup,
            argmax_member,
            argmax_xi,
            interior: argmax_xi.abs() <= 0.9 * self.window().radius,
            row_edge_flag: row_edge,
        }
    }
}

/// A_a f on the window: trapezoid row integrals of a(xi, .) f(.) with the
/// 1 / (2 pi) front factor, the kernel analogue of `apply_operator`.
pub fn apply_kernel(a: &KernelModel, f: &GridSpectrum) -> Result<GridSpectrum> {
    let win = &a.window;
    if f.window.radius != win.radius || f.window.step != win.step {
        return Err(Error::Shape(
            "kernel and spectrum must share one window".into(),
        ));
    }
    let len = win.len();
    let n = win.n_half();
    let scale = 1.0 / (2.0 * std::f64::consts::PI);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let support = match &a.data {
        KernelData::Separable { terms } => terms
            .iter()
            .map(|t| t.diff_profile.support_radius)
            .fold(0.0f64, f64::max),
        KernelData::Dense { .. } => f.support_radius,
    };
    match &a.data {
        KernelData::Separable { terms } => {
            for t in terms {
                let mut b: Vec<Complex64> = t
                    .eta_factor
                    .iter()
                    .zip(&f.samples)
                    .map(|(g, s)| g * s)
                    .collect();
                // halved edge samples turn the convolution sum into a
                // trapezoid row integral, matching the dense route
                b[0] *= 0.5;
                b[len - 1] *= 0.5;
                let full = fft::linear_convolve_complex(&t.diff_profile.samples, &b, win.step);
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot += full[i + 2 * n] * scale;
                }
            }
        }
        KernelData::Dense { .. } => {
            let rows = par_map(len, |i| {
                let row = a.row(i);
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, (av, s)) in row.iter().zip(&f.samples).enumerate() {
                    let wgt = if j == 0 || j == len - 1 { 0.5 } else { 1.0 };
                    acc += wgt * av * s;
                }
                acc * win.step * scale
            });
            out.copy_from_slice(&rows);
        }
    }
    GridSpectrum::new(
        win.clone(),
        out,
        support,
        format!("apply({}, {})", a.provenance, f.provenance),
    )
}

/// One decay-trend reading over the dyadic rungs. `source` names what was
/// measured: inf row tails, the class envelope, or the gamma envelope.
#[derive(Debug, Clone, Serialize)]
pub struct TailTrend {
    pub source: String,
    pub lambda: f64,
    pub rho: Option<f64>,
    pub rungs: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: TrendVerdict,
}

/// Outcome of a positive-direction experiment. `conclusion` is the verdict
/// for w'-slow decrease of the target and reads verified only when the
/// family bound, the inf scan and the tail trend all passed and the direct
/// w'-scan agreed.
#[derive(Debug, Clone, Serialize)]
pub struct CoercionReport {
    pub name: String,
    pub weight: String,
    pub weight_prime: String,
    pub target: String,
    pub family: Vec<String>,
    pub params: Vec<(String, f64)>,
    pub family_bounded: Verdict,
    pub inf_slow_decrease: Verdict,
    pub tail_estimate: TrendVerdict,
    pub conclusion: Verdict,
    pub certificates: Vec<BoundednessCert>,
    pub tail_trends: Vec<TailTrend>,
    /// compact radius assumed to carry the singular region when a scenario
    /// takes one as an input rather than computing it
    pub assumed_singular_radius: Option<f64>,
    pub flags: Vec<String>,
    pub curves_csv: String,
    #[serde(skip)]
    pub curves: Vec<CurveSeries>,
}

impl CoercionReport {
    /// Gates the direct scan verdict behind the recorded steps: verified
    /// needs every step clean; a direct refutation is reported as such.
    fn conclude(&mut self, direct: Verdict, hypothesis_ok: bool) {
        let steps_ok = self.family_bounded.is_verified()
            && self.inf_slow_decrease.is_verified()
            && self.tail_estimate == TrendVerdict::Convergent
            && hypothesis_ok;
        self.conclusion = if direct.is_refuted() {
            if steps_ok {
                self.flags
                    .push("steps-passed-but-direct-scan-refuted".into());
            }
            Verdict::RefutedWithWitness
        } else if steps_ok && direct.is_verified() {
            Verdict::VerifiedOnWindow
        } else {
            if direct.is_verified() && !steps_ok {
                self.flags
                    .push("direct-scan-verified-steps-incomplete".into());
            }
            Verdict::Inconclusive
        };
    }
}

/// Dyadic rung radii 2, 4, ... capped at 0.9 R.
fn dyadic_rungs(win: &FrequencyWindow) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 2.0;
    while r <= 0.9 * win.radius {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// The factor-of-two test on the last TREND_RUNGS values: each step must at
/// least halve, with a 1e-9 slack for rounding. A tail that fails to halve
/// and ends no lower than it started is read as divergent.
fn halving_trend(values: &[f64]) -> TrendVerdict {
    if values.len() < TREND_RUNGS || values.iter().any(|v| !v.is_finite()) {
        return TrendVerdict::Inconclusive;
    }
    let tail = &values[values.len() - TREND_RUNGS..];
    if tail
        .windows(2)
        .all(|p| p[1] <= 0.5 * p[0] * (1.0 + 1e-9))
    {
        TrendVerdict::Convergent
    } else if tail[TREND_RUNGS - 1] >= tail[0] {
        TrendVerdict::Divergent
    } else {
        TrendVerdict::Inconclusive
    }
}

fn combine_trends(trends: &[TailTrend]) -> TrendVerdict {
    if trends.is_empty() || trends.iter().any(|t| t.verdict == TrendVerdict::Divergent) {
        if trends.iter().any(|t| t.verdict == TrendVerdict::Divergent) {
            TrendVerdict::Divergent
        } else {
            TrendVerdict::Inconclusive
        }
    } else if trends
        .iter()
        .all(|t| t.verdict == TrendVerdict::Convergent)
    {
        TrendVerdict::Convergent
    } else {
        TrendVerdict::Inconclusive
    }
}

fn worst(a: Verdict, b: Verdict) -> Verdict {
    use Verdict::*;
    if a == RefutedWithWitness || b == RefutedWithWitness {
        RefutedWithWitness
    } else if a == Inconclusive || b == Inconclusive {
        Inconclusive
    } else {
        VerifiedOnWindow
    }
}

/// Trapezoid of |a(xi_i, .)| e^{lambda0 w} over the cells |eta - xi_i| > cut.
/// Masking whole cells costs one grid step at the region boundary, far below
/// rung resolution. The flag marks a still-significant window-edge integrand,
/// meaning the measured tail is a lower bound for the full-line one.
fn row_tail(a: &KernelModel, i: usize, cut: f64, weight_l0: &[f64]) -> (f64, bool) {
    let win = &a.window;
    let xi = win.xi(i);
    let row = a.row(i);
    let mut integrand: Vec<f64> = row
        .iter()
        .zip(weight_l0)
        .map(|(c, e)| c.norm() * e)
        .collect();
    for (j, v) in integrand.iter_mut().enumerate() {
        if (win.xi(j) - xi).abs() <= cut {
            *v = 0.0;
        }
    }
    let val = num::trapezoid(&integrand, win.step);
    let edge = integrand[0].max(*integrand.last().unwrap());
    (val, edge > 1e-12 * val.max(1e-300))
}

/// Infimum over members of the row tail at +-r, worst of the two signs.
fn inf_tail_at(fam: &KernelFamily, r: f64, cut: f64, weight_l0: &[f64]) -> (f64, bool) {
    let win = fam.window();
    let n = win.n_half() as i64;
    let mut flag = false;
    let mut worst_side = 0.0f64;
    for sign in [1.0f64, -1.0] {
        let idx = n + ((sign * r) / win.step).round() as i64;
        if idx < 0 || idx >= win.len() as i64 {
            continue;
        }
        let mut best = f64::INFINITY;
        for a in &fam.members {
            let (v, fl) = row_tail(a, idx as usize, cut, weight_l0);
            flag |= fl;
            best = best.min(v);
        }
        worst_side = worst_side.max(best);
    }
    (worst_side, flag)
}

/// Per lambda: the first rho in the ladder whose weighted inf-tails pass the
/// halving trend, falling back to the rho with the smallest final value.
fn tail_scan(
    fam: &KernelFamily,
    w: &Weight,
    w_prime: &Weight,
    lambda0: f64,
    lambda_ladder: &[f64],
    rho_ladder: &[f64],
    flags: &mut Vec<String>,
) -> Vec<TailTrend> {
    let win = fam.window();
    let rungs = dyadic_rungs(win);
    let weight_l0: Vec<f64> = win
        .frequencies()
        .map(|eta| (lambda0 * w.eval(eta)).exp())
        .collect();
    let mut out = Vec::new();
    for &lambda in lambda_ladder {
        let mut chosen: Option<(f64, Vec<f64>, TrendVerdict)> = None;
        let mut fallback: Option<(f64, Vec<f64>, TrendVerdict)> = None;
        let mut any_edge = false;
        for &rho in rho_ladder {
            let mut vals = Vec::with_capacity(rungs.len());
            for &r in &rungs {
                let cut = rho * w_prime.eval(r);
                let (t, fl) = inf_tail_at(fam, r, cut, &weight_l0);
                any_edge |= fl;
                vals.push(t * (lambda * w.eval(r)).exp());
            }
            let verdict = halving_trend(&vals);
            let last = vals.last().copied().unwrap_or(f64::INFINITY);
            let better = match &fallback {
                None => true,
                Some((_, fv, _)) => last < fv.last().copied().unwrap_or(f64::INFINITY),
            };
            if better {
                fallback = Some((rho, vals.clone(), verdict));
            }
            if verdict == TrendVerdict::Convergent {
                chosen = Some((rho, vals, verdict));
                break;
            }
        }
        let (rho, vals, verdict) = chosen.or(fallback).expect("rho ladder is nonempty");
        if any_edge {
            flags.push(format!("tail-edge-flagged-lambda-{lambda}"));
        }
        if vals.iter().all(|v| *v == 0.0) {
            flags.push(format!("tail-vanishes-on-window-lambda-{lambda}"));
        }
        out.push(TailTrend {
            source: "row-tails".into(),
            lambda,
            rho: Some(rho),
            rungs: rungs.clone(),
            values: vals,
            verdict,
        });
    }
    out
}

/// Thinned (xi, value) curve from a dense scan.
fn margin_curve(name: &str, xs: &[f64], ys: &[f64]) -> CurveSeries {
    let mut c = CurveSeries::new(name, "xi", "log margin");
    let stride = (xs.len() / 2048).max(1);
    c.points = xs
        .iter()
        .step_by(stride)
        .copied()
        .zip(ys.iter().step_by(stride).copied())
        .collect();
    c
}

struct ScanOutcome {
    report: CoercionReport,
    inf_spec: GridSpectrum,
    direct: Verdict,
}

fn scan_core(
    fam: &KernelFamily,
    f: &GridSpectrum,
    w: &Weight,
    w_prime: &Weight,
    lambda0: f64,
    lambda_ladder: &[f64],
    rho_ladder: &[f64],
) -> Result<ScanOutcome> {
    if fam.certificates.is_empty() {
        return Err(Error::Precondition(
            "family boundedness certificates missing; run certify first".into(),
        ));
    }
    let win = fam.window();
    if f.window.radius != win.radius || f.window.step != win.step {
        return Err(Error::Shape(
            "family and spectrum must share one window".into(),
        ));
    }
    if lambda_ladder.is_empty() || rho_ladder.is_empty() {
        return Err(Error::Precondition("scan ladders must be nonempty".into()));
    }
    if lambda_ladder.iter().chain(rho_ladder).any(|v| !(*v > 0.0)) {
        return Err(Error::Precondition(
            "scan ladder entries must be positive".into(),
        ));
    }
    if !lambda0.is_finite() || lambda0 < 0.0 {
        return Err(Error::Precondition(format!(
            "lambda0 must be finite and nonnegative, got {lambda0}"
        )));
    }

    let mut flags = Vec::new();
    let mut params: Vec<(String, f64)> = vec![("lambda0".into(), lambda0)];
    let family_bounded = if fam.certificates.iter().all(|c| c.interior) {
        Verdict::VerifiedOnWindow
    } else {
        Verdict::Inconclusive
    };

    // (i) the moving-cut tail trend per growth scale
    let tail_trends = tail_scan(fam, w, w_prime, lambda0, lambda_ladder, rho_ladder, &mut flags);
    let tail_estimate = combine_trends(&tail_trends);

    // the inf spectrum over members of |A_a f|
    let applied: Vec<GridSpectrum> = fam
        .members
        .iter()
        .map(|a| apply_kernel(a, f))
        .collect::<Result<_>>()?;
    let len = win.len();
    let inf_samples: Vec<Complex64> = (0..len)
        .map(|i| {
            let m = applied
                .iter()
                .map(|g| g.samples[i].norm())
                .fold(f64::INFINITY, f64::min);
            Complex64::new(m, 0.0)
        })
        .collect();
    let support = applied
        .iter()
        .map(|g| g.support_radius)
        .fold(0.0f64, f64::max);
    let inf_spec = GridSpectrum::new(win.clone(), inf_samples, support, "inf|A_a f|")?;

    // (ii) the assembled estimate at the rungs, smallest workable constant
    let rho_star = tail_trends
        .iter()
        .filter_map(|t| t.rho)
        .fold(f64::NEG_INFINITY, f64::max);
    let rho_star = if rho_star.is_finite() {
        rho_star
    } else {
        rho_ladder[rho_ladder.len() / 2]
    };
    params.push(("rho_star".into(), rho_star));
    let rungs = dyadic_rungs(win);
    let weight_l0: Vec<f64> = win
        .frequencies()
        .map(|eta| (lambda0 * w.eval(eta)).exp())
        .collect();
    let norms: Vec<f64> = f.samples.iter().map(|c| c.norm()).collect();
    let n = win.n_half() as i64;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    let mut clipped = false;
    for &r in &rungs {
        for sign in [1.0f64, -1.0] {
            let idx = n + ((sign * r) / win.step).round() as i64;
            if idx < 0 || idx >= len as i64 {
                continue;
            }
            let i = idx as usize;
            let ball = rho_star * w_prime.eval(sign * r);
            let k = (ball / win.step).floor() as usize;
            let lo = i.saturating_sub(k);
            let hi = (i + k).min(len - 1);
            clipped |= i - lo < k || hi - i < k;
            let sup = norms[lo..=hi].iter().copied().fold(0.0f64, f64::max);
            let (tail, _) = inf_tail_at(fam, sign * r, ball, &weight_l0);
            rows.push((sign * r, inf_spec.samples[i].re, sup + tail));
        }
    }
    if clipped {
        flags.push("estimate-ball-clipped-at-window-edge".into());
    }
    let mut main_c = None;
    for e in 0..=MAIN_C_MAX_EXP {
        let c = 2f64.powi(e);
        if rows
            .iter()
            .all(|(r, lhs, base)| *lhs <= c * (c * w.eval(*r)).exp() * base * (1.0 + 1e-9))
        {
            main_c = Some(c);
            break;
        }
    }
    let mut curves = Vec::new();
    match main_c {
        Some(c) => {
            params.push(("main_estimate_c".into(), c));
            let mut est = CurveSeries::new("main-estimate", "rung", "lhs over rhs");
            est.points = rows
                .iter()
                .map(|(r, lhs, base)| {
                    let rhs = c * (c * w.eval(*r)).exp() * base;
                    (*r, if rhs > 0.0 { lhs / rhs } else { f64::INFINITY })
                })
                .collect();
            curves.push(est);
        }
        None => flags.push("main-estimate-unclosed".into()),
    }

    // (iii) slow decrease of the inf spectrum under w, then the direct
    // w'-scan of f that the lemma promises
    let inf_sd = slow_decrease_check(&inf_spec, w, &SD_LADDER)?;
    if let Some(a) = inf_sd.a_star {
        params.push(("inf_scan_a_star".into(), a));
    }
    curves.push(margin_curve(
        "inf-scan-margin",
        &inf_sd.curve_xi,
        &inf_sd.curve_margin,
    ));
    let direct = slow_decrease_check(f, w_prime, &SD_LADDER)?;
    if let Some(a) = direct.a_star {
        params.push(("direct_scan_a_star".into(), a));
    }

    let report = CoercionReport {
        name: "lemma2-scan".into(),
        weight: w.name(),
        weight_prime: w_prime.name(),
        target: f.provenance.clone(),
        family: fam.labels.clone(),
        params,
        family_bounded,
        inf_slow_decrease: inf_sd.verdict,
        tail_estimate,
        conclusion: Verdict::Inconclusive,
        certificates: fam.certificates.clone(),
        tail_trends,
        assumed_singular_radius: None,
        flags,
        curves_csv: "coercion-curves.csv".into(),
        curves,
    };
    Ok(ScanOutcome {
        report,
        inf_spec,
        direct: direct.verdict,
    })
}

/// The window scan behind the main estimate. Requires fresh certificates on
/// the family. Reads, in order: (i) the decay trend of the weighted row
/// tails beyond the moving cut rho w'(xi); (ii) the smallest dyadic constant
/// closing inf_a |A_a f| <= C e^{C w} (ball sup + tail) at the rungs;
/// (iii) the slow-decrease scan of inf_a |A_a f| under w. The conclusion is
/// the direct w'-scan of f gated behind those steps.
pub fn lemma2_scan(
    fam: &KernelFamily,
    f: &GridSpectrum,
    w: &Weight,
    w_prime: &Weight,
    lambda0: f64,
    lambda_ladder: &[f64],
    rho_ladder: &[f64],
) -> Result<CoercionReport> {
    let mut outcome = scan_core(fam, f, w, w_prime, lambda0, lambda_ladder, rho_ladder)?;
    let direct = outcome.direct;
    outcome.report.conclude(direct, true);
    Ok(outcome.report)
}

/// Which sufficient condition drives an experiment.
#[derive(Debug, Clone)]
pub enum CoercionKind {
    /// the class condition: q_L(a w'(xi)) must reach b w(xi) at some ladder
    /// scale a for every demanded b; carries the unit-sequence geometry
    Star {
        seq: DCSequence,
        plateau: BumpModel,
        mollifier: BumpModel,
        /// inner cutoff of the lower-bound sublemma; its support must sit
        /// inside the unit core
        inner: BumpModel,
        n_max: usize,
    },
    /// the composition condition: gamma's nondecreasing radial profile
    /// applied to w' must dominate w
    DoubleStar { gamma: Weight },
}

/// Transform of the summed physical data on the window.
fn spectrum_of_sum(models: &[PhysicalModel], win: &FrequencyWindow) -> Result<GridSpectrum> {
    let mut acc = vec![Complex64::new(0.0, 0.0); win.len()];
    let mut support = 0.0f64;
    let mut tags = Vec::new();
    for m in models {
        let g = spectra::fourier_of(m, win)?;
        for (a, b) in acc.iter_mut().zip(&g.samples) {
            *a += b;
        }
        support = support.max(g.support_radius);
        tags.push(g.provenance.clone());
    }
    GridSpectrum::new(win.clone(), acc, support, tags.join(" + "))
}

/// Smallest ladder value making the e^{(m - lambda0) w} integral clean.
fn choose_lambda0(m: f64, w: &Weight, win: &FrequencyWindow) -> (f64, bool) {
    for &l0 in &LAMBDA0_LADDER {
        if !weight_integral(m - l0, w, win).1 {
            return (l0, true);
        }
    }
    (*LAMBDA0_LADDER.last().unwrap(), false)
}

/// min over 0 <= N <= n_max of (L_N / t)^N; the N = 0 term caps it at 1.
fn n_infimum(seq: &DCSequence, t: f64, n_max: usize) -> f64 {
    let mut best = 1.0f64;
    if !(t > 0.0) {
        return best;
    }
    for nn in 1..=n_max {
        let Some(l) = seq.l_k(nn) else { break };
        if !(l > 0.0) {
            break;
        }
        best = best.min((nn as f64 * (l.ln() - t.ln())).exp());
    }
    best
}

/// Separable kernel of a windowed cutoff against the symbol p: per closed
/// term, the difference profile is the transform of (cutoff times the
/// x-factor). The cutoff arrives as a spectrum on the doubled window so the
/// profile covers every difference xi - eta; x-dependent factors go through
/// a physical reconstruction of the cutoff on an oversampled circle.
fn separable_cutoff_kernel(
    cutoff_spec_d: &GridSpectrum,
    outer: f64,
    cutoff_tag: &str,
    p: &SymbolModel,
    win: &FrequencyWindow,
) -> Result<KernelModel> {
    let terms = p.closed_terms()?;
    let dwin = &cutoff_spec_d.window;
    let m_phys = (4 * dwin.len()).next_power_of_two();
    let needs_physical = terms.iter().any(|(f, _)| !matches!(f, XFactor::One));
    let phys: Option<Arc<Vec<f64>>> = if needs_physical {
        let vals: Vec<f64> = fft::physical_from_spectrum(&cutoff_spec_d.samples, dwin, m_phys)
            .iter()
            .map(|c| c.re)
            .collect();
        Some(Arc::new(vals))
    } else {
        None
    };
    let mut sep = Vec::with_capacity(terms.len());
    for (f, g) in terms {
        let profile = match f {
            XFactor::One => cutoff_spec_d.clone(),
            XFactor::Profile(_) => {
                return Err(Error::Unsupported(
                    "windowed x-profiles cannot be multiplied under the transform".into(),
                ))
            }
            _ => {
                let table = phys.clone().expect("reconstructed above");
                let dx = 2.0 * std::f64::consts::PI / (m_phys as f64 * dwin.step);
                let box_len = 2.0 * std::f64::consts::PI / dwin.step;
                let f_c = f.clone();
                let m_len = table.len();
                let model = PhysicalModel::Custom {
                    support: outer,
                    tag: format!("{cutoff_tag}*{}", f.tag()),
                    eval: Arc::new(move |x| {
                        if x.abs() > outer {
                            return 0.0;
                        }
                        let shifted = if x < 0.0 { x + box_len } else { x };
                        let pos = shifted / dx;
                        let j = (pos.floor() as usize) % m_len;
                        let j1 = (j + 1) % m_len;
                        let frac = pos - pos.floor();
                        let chi = table[j] * (1.0 - frac) + table[j1] * frac;
                        chi * f_c.eval(x).unwrap_or(0.0)
                    }),
                };
                spectra::fourier_of(&model, dwin)?
            }
        };
        sep.push(SeparableTerm {
            eta_factor: win.frequencies().map(|eta| g.eval(eta)).collect(),
            diff_profile: profile,
        });
    }
    Ok(KernelModel {
        window: win.clone(),
        data: KernelData::Separable { terms: sep },
        provenance: format!("a[{cutoff_tag}, {}]", p.tag()),
    })
}

/// One separable member per unit chi_N.
fn unit_kernel_family(
    units: &UnitSequence,
    dunits: &UnitSequence,
    p: &SymbolModel,
    win: &FrequencyWindow,
) -> Result<KernelFamily> {
    let mut members = Vec::with_capacity(dunits.members.len());
    let mut labels = Vec::with_capacity(dunits.members.len());
    for (nn, dmember) in dunits.members.iter().enumerate() {
        members.push(separable_cutoff_kernel(
            dmember,
            units.outer,
            &format!("chi_{nn}"),
            p,
            win,
        )?);
        labels.push(format!("chi_{nn} {}", p.tag()));
    }
    KernelFamily::new(members, labels)
}

/// Kernel of the outer cutoff against p. Closed-form cutoffs go through
/// `kernel_of`; cutoffs without a physical rule (plateaus) are reconstructed
/// from their transform. The flag reports which route was taken.
fn localized_kernel(
    psi: &BumpModel,
    p: &SymbolModel,
    win: &FrequencyWindow,
) -> Result<(KernelModel, bool)> {
    match kernel_of(psi, p, win) {
        Ok(k) => Ok((k, false)),
        Err(Error::Unsupported(_)) => {
            let dwin = FrequencyWindow::new(2.0 * win.radius, win.step)?;
            let spec = psi.spectrum_on(&dwin)?;
            let k = separable_cutoff_kernel(&spec, psi.support_radius(), &psi.tag(), p, win)?;
            Ok((k, true))
        }
        Err(e) => Err(e),
    }
}

/// Runs one end-to-end experiment: checks the selected sufficient condition,
/// builds the kernel family, walks the three steps and the window scan, and
/// gates the conclusion behind all of them. The compact support of the outer
/// cutoff is recorded as the assumed singular region.
pub fn coercion_experiment(
    kind: &CoercionKind,
    p: &SymbolModel,
    psi: &BumpModel,
    u_physical: &[PhysicalModel],
    w: &Weight,
    w_prime: &Weight,
    win: &FrequencyWindow,
) -> Result<CoercionReport> {
    if u_physical.is_empty() {
        return Err(Error::Precondition(
            "the data u needs at least one summand".into(),
        ));
    }
    let u_hat = spectrum_of_sum(u_physical, win)?;
    let (psi_kernel, reconstructed) = localized_kernel(psi, p, win)?;
    let v_hat = if reconstructed {
        apply_kernel(&psi_kernel, &u_hat)?
    } else {
        apply_operator(p, psi, &u_hat)?
    };
    let m = p.order();
    let (lambda0, l0_clean) = choose_lambda0(m, w, win);
    match kind {
        CoercionKind::Star {
            seq,
            plateau,
            mollifier,
            inner,
            n_max,
        } => star_pipeline(
            seq, plateau, mollifier, inner, *n_max, p, psi, &psi_kernel, reconstructed, &u_hat,
            &v_hat, w, w_prime, win, m, lambda0, l0_clean,
        ),
        CoercionKind::DoubleStar { gamma } => doublestar_pipeline(
            gamma, p, psi, psi_kernel, reconstructed, &u_hat, &v_hat, w, w_prime, win, m, lambda0,
            l0_clean,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn star_pipeline(
    seq: &DCSequence,
    plateau: &BumpModel,
    mollifier: &BumpModel,
    inner: &BumpModel,
    n_max: usize,
    p: &SymbolModel,
    psi: &BumpModel,
    u_hat: &GridSpectrum,
    v_hat: &GridSpectrum,
    w: &Weight,
    w_prime: &Weight,
    win: &FrequencyWindow,
    m: f64,
    lambda0: f64,
    l0_clean: bool,
) -> Result<CoercionReport> {
    // the class condition at every demanded scale
    let mut star_a = f64::NAN;
    for &b in &STAR_B_LADDER {
        let rep = star_condition(seq, w, w_prime, b, win)?;
        if !rep.verdict.is_verified() {
            return Err(Error::Precondition(format!(
                "condition (*) fails for L = {} at b = {b}: q_L(a w') cannot reach b {} on this window",
                seq.name(),
                w.name()
            )));
        }
        if b == 1.0 {
            star_a = rep.a.unwrap_or(f64::NAN);
        }
    }

    let units = ehrenpreis_units(plateau, mollifier, n_max, win)?;
    let psi_core = psi.core_radius().ok_or_else(|| {
        Error::Unsupported(format!(
            "the outer cutoff must expose a core interval; {} does not",
            psi.tag()
        ))
    })?;
    if units.outer > psi_core + 1e-12 {
        return Err(Error::Precondition(format!(
            "outer cutoff must equal 1 on the unit supports: unit outer {} exceeds the core {psi_core}",
            units.outer
        )));
    }
    let dwin = FrequencyWindow::new(2.0 * win.radius, win.step)?;
    let dunits = ehrenpreis_units(plateau, mollifier, n_max, &dwin)?;

    let mut flags = Vec::new();
    let mut params: Vec<(String, f64)> = vec![
        ("order_m".into(), m),
        ("star_scale_a".into(), star_a),
        ("n_max".into(), n_max as f64),
        ("step2_lambda".into(), STEP2_LAMBDA),
    ];
    if !l0_clean {
        flags.push("lambda0-integral-flagged".into());
    }

    // STEP 1: the unit-localized family, its certificates, and the norm chain
    let mut fam = unit_kernel_family(&units, &dunits, p, win)?;
    let mut family_bounded = fam.certify(&LAMBDA_LADDER, m, w);
    let base_kernel = kernel_of(psi, p, win)?;
    let mut chain_rel_min = f64::INFINITY;
    let mut chain_ok = true;
    let mut curves = Vec::new();
    for cert in &fam.certificates {
        let nb = unit_norm_bound(&units, cert.lambda, w)?;
        if !nb.verdict.is_verified() {
            chain_ok = false;
            flags.push(format!(
                "unit-norm-chain-{}-at-lambda-{}",
                nb.verdict, cert.lambda
            ));
        }
        if cert.lambda == STEP2_LAMBDA {
            curves.extend(nb.curves.iter().cloned());
        }
        let phi_norm = nb.get_param("plateau_norm").unwrap_or(f64::NAN);
        let base = bracket(&base_kernel, cert.lambda, cert.cap_lambda, w);
        let bound = phi_norm * base.value;
        let rel = (bound * (1.0 + 1e-6) - cert.sup_bracket) / bound.abs().max(1e-300);
        chain_rel_min = chain_rel_min.min(rel);
        if rel < 0.0 {
            chain_ok = false;
            flags.push(format!("step1-chain-violated-at-lambda-{}", cert.lambda));
        }
    }
    params.push(("step1_chain_rel_margin_min".into(), chain_rel_min));
    if !chain_ok {
        family_bounded = worst(family_bounded, Verdict::Inconclusive);
    }

    // hypothesis: the localized operator output is w-slowly decreasing
    let hyp = slow_decrease_check(v_hat, w, &SD_LADDER)?;
    if !hyp.verdict.is_verified() {
        flags.push(format!("hypothesis-scan-{}", hyp.verdict));
    }
    if let Some(a) = hyp.a_star {
        params.push(("hypothesis_a_star".into(), a));
    }
    curves.push(margin_curve(
        "hypothesis-margin",
        &hyp.curve_xi,
        &hyp.curve_margin,
    ));

    // STEP 2: per-unit lower bounds and the product-route inf spectrum
    let inner_hat = inner.spectrum_on(win)?;
    let mut step2_fail = 0usize;
    let mut step2_verdict = Verdict::VerifiedOnWindow;
    let mut inf_prod = vec![f64::INFINITY; win.len()];
    for member in &units.members {
        let lb = mollifiers::cutoff_lower_bound_spectra(
            v_hat,
            member,
            &inner_hat,
            Some(units.core),
            STEP2_LAMBDA,
            w,
        )?;
        if !lb.verdict.is_verified() {
            step2_fail += 1;
            step2_verdict = worst(step2_verdict, lb.verdict);
        }
        let prod = spectra::product(member, v_hat)?;
        for (slot, c) in inf_prod.iter_mut().zip(&prod.samples) {
            *slot = slot.min(c.norm());
        }
    }
    if step2_fail > 0 {
        flags.push(format!(
            "step2-lower-bound-failures-{step2_fail}-of-{}",
            units.members.len()
        ));
    }
    let inf_prod_spec = GridSpectrum::new(
        win.clone(),
        inf_prod.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        units.outer,
        "inf|(chi_N v)^|",
    )?;
    let prod_sd = slow_decrease_check(&inf_prod_spec, w, &SD_LADDER)?;

    // STEP 3: class seminorm and the N-infimum envelope
    let x_dom = p.x_domain();
    let half_k = psi.support_radius().min(-x_dom.0).min(x_dom.1);
    let mut sem = None;
    for &r in &DC_R_LADDER {
        let flavor = SeminormFlavor::Dc {
            seq: seq.clone(),
            r,
            k: (-half_k, half_k),
            w: w.clone(),
        };
        let v = symbol_seminorm(p, m, &flavor, win)?;
        let clean = !v.truncated && !v.edge_flag && v.value.is_finite();
        sem = Some((r, v.value, clean));
        if clean {
            break;
        }
    }
    let (r_sem, sem_value, sem_clean) = sem.expect("radius ladder is nonempty");
    if !sem_clean {
        flags.push("class-seminorm-flagged".into());
    }
    params.push(("dc_radius".into(), r_sem));
    params.push(("dc_seminorm".into(), sem_value));
    let (w_int, _) = weight_integral(m - lambda0, w, win);
    let rungs = dyadic_rungs(win);
    let mut step3_trends = Vec::new();
    for &lambda in &LAMBDA_LADDER {
        let mut chosen: Option<(f64, Vec<f64>, TrendVerdict)> = None;
        let mut fallback: Option<(f64, Vec<f64>, TrendVerdict)> = None;
        for &rho in &RHO_LADDER {
            let vals: Vec<f64> = rungs
                .iter()
                .map(|&rg| {
                    let t = r_sem * rho * w_prime.eval(rg);
                    sem_value
                        * w_int
                        * ((lambda0 - m + lambda) * w.eval(rg)).exp()
                        * n_infimum(seq, t, n_max.max(DEFAULT_N_MAX))
                })
                .collect();
            let verdict = halving_trend(&vals);
            let last = vals.last().copied().unwrap_or(f64::INFINITY);
            let better = match &fallback {
                None => true,
                Some((_, fv, _)) => last < fv.last().copied().unwrap_or(f64::INFINITY),
            };
            if better {
                fallback = Some((rho, vals.clone(), verdict));
            }
            if verdict == TrendVerdict::Convergent {
                chosen = Some((rho, vals, verdict));
                break;
            }
        }
        let (rho, vals, verdict) = chosen.or(fallback).expect("rho ladder is nonempty");
        step3_trends.push(TailTrend {
            source: "class-envelope".into(),
            lambda,
            rho: Some(rho),
            rungs: rungs.clone(),
            values: vals,
            verdict,
        });
    }

    // the window scan, then fold the star-specific steps into the verdicts
    let mut outcome = scan_core(&fam, u_hat, w, w_prime, lambda0, &LAMBDA_LADDER, &RHO_LADDER)?;
    let peak = outcome
        .inf_spec
        .samples
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    let gap = outcome
        .inf_spec
        .samples
        .iter()
        .zip(&inf_prod)
        .map(|(a, b)| (a.norm() - b).abs())
        .fold(0.0f64, f64::max);
    let direct = outcome.direct;
    let rep = &mut outcome.report;
    rep.name = "coercion-star".into();
    rep.params.extend(params);
    rep.params
        .push(("step2_route_gap_rel".into(), gap / peak.max(1e-300)));
    if gap > 1e-6 * peak.max(1e-300) {
        rep.flags.push("step2-route-mismatch".into());
    }
    rep.flags.extend(flags);
    rep.curves.extend(curves);
    rep.tail_trends.extend(step3_trends);
    rep.tail_estimate = combine_trends(&rep.tail_trends);
    rep.family_bounded = worst(rep.family_bounded, family_bounded);
    rep.inf_slow_decrease = worst(
        worst(rep.inf_slow_decrease, prod_sd.verdict),
        step2_verdict,
    );
    rep.assumed_singular_radius = Some(psi.support_radius());
    rep.conclude(direct, hyp.verdict.is_verified());
    Ok(outcome.report)
}

#[allow(clippy::too_many_arguments)]
fn doublestar_pipeline(
    gamma: &Weight,
    p: &SymbolModel,
    psi: &BumpModel,
    u_hat: &GridSpectrum,
    v_hat: &GridSpectrum,
    w: &Weight,
    w_prime: &Weight,
    win: &FrequencyWindow,
    m: f64,
    lambda0: f64,
    l0_clean: bool,
) -> Result<CoercionReport> {
    if !gamma.monotone_radial() {
        return Err(Error::Precondition(format!(
            "condition (**) needs a nondecreasing radial profile; {} is not monotone",
            gamma.name()
        )));
    }
    let radii: Vec<f64> = (0..=win.n_half()).map(|i| i as f64 * win.step).collect();
    let values: Vec<f64> = radii
        .iter()
        .map(|r| gamma.eval(w_prime.eval(*r)))
        .collect();
    let composed = Weight::sampled(
        radii,
        values,
        format!("{}({})", gamma.name(), w_prime.name()),
    )?;
    let dom = compare(&composed, w, CompareMode::Dominates, win);
    if !dom.verdict.is_verified() {
        return Err(Error::Precondition(format!(
            "condition (**) fails: {} composed with {} does not dominate {} on this window",
            gamma.name(),
            w_prime.name(),
            w.name()
        )));
    }

    let mut flags = Vec::new();
    let mut params: Vec<(String, f64)> = vec![
        ("order_m".into(), m),
        ("domination_b".into(), dom.b),
    ];
    if !l0_clean {
        flags.push("lambda0-integral-flagged".into());
    }

    let kernel = kernel_of(psi, p, win)?;
    let mut fam = KernelFamily::new(vec![kernel], vec![format!("psi {}", p.tag())])?;
    let family_bounded = fam.certify(&LAMBDA_LADDER, m, w);

    let hyp = slow_decrease_check(v_hat, w, &SD_LADDER)?;
    if !hyp.verdict.is_verified() {
        flags.push(format!("hypothesis-scan-{}", hyp.verdict));
    }
    if let Some(a) = hyp.a_star {
        params.push(("hypothesis_a_star".into(), a));
    }
    let curves = vec![margin_curve(
        "hypothesis-margin",
        &hyp.curve_xi,
        &hyp.curve_margin,
    )];

    // the singleton family makes the inf spectrum the operator output
    // itself; the kernel route must reproduce it
    let routed = apply_kernel(&fam.members[0], u_hat)?;
    let peak = v_hat
        .samples
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    let gap = routed
        .samples
        .iter()
        .zip(&v_hat.samples)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    params.push(("apply_route_gap_rel".into(), gap / peak.max(1e-300)));
    if gap > 1e-6 * peak.max(1e-300) {
        flags.push("apply-route-mismatch".into());
    }

    // STEP 3: gamma-weighted seminorm and the monotone envelope
    let mut lam_use: Option<(f64, f64, bool)> = None;
    for &lg in &GAMMA_LAMBDA_LADDER {
        let flavor = SeminormFlavor::Beurling {
            lambda: lg,
            phi: psi.clone(),
            w1: w.clone(),
            w2: gamma.clone(),
        };
        let v = symbol_seminorm(p, m, &flavor, win)?;
        let clean = !v.edge_flag && v.value.is_finite();
        lam_use = Some((lg, v.value, clean));
        if clean {
            break;
        }
    }
    let (gamma_lambda, gamma_norm, gamma_clean) = lam_use.expect("gamma ladder is nonempty");
    if !gamma_clean {
        flags.push("gamma-seminorm-flagged".into());
    }
    params.push(("gamma_lambda".into(), gamma_lambda));
    params.push(("gamma_seminorm".into(), gamma_norm));
    let (w_int, _) = weight_integral(m - lambda0, w, win);
    let rungs = dyadic_rungs(win);
    let mut step3_trends = Vec::new();
    for &cap in &LAMBDA_LADDER {
        let vals: Vec<f64> = rungs
            .iter()
            .map(|&rg| {
                gamma_norm
                    * w_int
                    * ((lambda0 - m + cap) * w.eval(rg)
                        - gamma_lambda * gamma.eval(w_prime.eval(rg)))
                    .exp()
            })
            .collect();
        let verdict = halving_trend(&vals);
        step3_trends.push(TailTrend {
            source: "gamma-envelope".into(),
            lambda: cap,
            rho: None,
            rungs: rungs.clone(),
            values: vals,
            verdict,
        });
    }

    let mut outcome = scan_core(&fam, u_hat, w, w_prime, lambda0, &LAMBDA_LADDER, &RHO_LADDER)?;
    let direct = outcome.direct;
    let rep = &mut outcome.report;
    rep.name = "coercion-doublestar".into();
    rep.params.extend(params);
    rep.flags.extend(flags);
    rep.curves.extend(curves);
    rep.tail_trends.extend(step3_trends);
    rep.tail_estimate = combine_trends(&rep.tail_trends);
    rep.family_bounded = worst(rep.family_bounded, family_bounded);
    rep.assumed_singular_radius = Some(psi.support_radius());
    rep.conclude(direct, hyp.verdict.is_verified());
    Ok(outcome.report)
}

/// The parameter-region reading for multiplier classes: the coercive claim
/// holds when a s >= r and the counterexample construction applies when
/// a < r / s. For 0 < s < 1 the two inequalities are exact complements, so
/// `gap` (neither flag) is structurally empty; it is kept in the report so
/// sweeps can assert that emptiness rather than assume it. Both regions are
/// decided by the one product comparison a s >= r; dividing by s instead
/// would let rounding split a tie like 0.36 * 0.75 vs 0.27 into both or
/// neither region.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GevreyRelation {
    pub a: f64,
    pub r: f64,
    pub s: f64,
    pub coercive_claim: bool,
    pub counterexample_exists: bool,
    pub gap: bool,
}

pub fn gevrey_relation(a: f64, r: f64, s: f64) -> Result<GevreyRelation> {
    if !(r > 0.0 && r < 1.0) || !(s > 0.0 && s < 1.0) {
        return Err(Error::Precondition(format!(
            "weight exponents must sit in (0, 1), got r = {r}, s = {s}"
        )));
    }
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Precondition(format!(
            "class scale must sit in (0, 1], got {a}"
        )));
    }
    let coercive_claim = a * s >= r;
    let counterexample_exists = !coercive_claim;
    Ok(GevreyRelation {
        a,
        r,
        s,
        coercive_claim,
        counterexample_exists,
        gap: !coercive_claim && !counterexample_exists,
    })
}
