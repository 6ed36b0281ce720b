//! Radial weight functions and the order structure between them: membership
//! checks, domination certificates, slow variation, the fitted-constant
//! inner-regularity test along a frequency sequence, and concave majorants.
//!
//! Every asymptotic claim is read off a finite window through per-annulus
//! trend statistics, so verdicts are tri-state. A refutation always carries a
//! witness frequency; a verification carries a certificate that holds at
//! every tested grid point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::grid::{trend_tail, FrequencyWindow};
use crate::verdict::{TrendVerdict, Verdict};
use crate::{Error, Result};

const SUBADDITIVITY_PAIRS: usize = 10_000;
const SUBADDITIVITY_SEED: u64 = 0x57ab1e;

#[derive(Debug, Clone)]
pub enum Weight {
    /// log(1 + r)
    Log,
    /// r^alpha with 0 < alpha < 1
    Gevrey { alpha: f64 },
    /// b * log(1 + c r)
    AffineLog { b: f64, c: f64 },
    /// linear interpolation through (radii, values); beyond the last radius
    /// the final segment slope extrapolates, which preserves concavity for
    /// hull-shaped tables
    Sampled {
        radii: Vec<f64>,
        values: Vec<f64>,
        name: String,
    },
}

impl Weight {
    pub fn gevrey(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "gevrey exponent must lie in (0,1), got {alpha}"
            )));
        }
        Ok(Weight::Gevrey { alpha })
    }

    pub fn affine_log(b: f64, c: f64) -> Result<Self> {
        if !(b > 0.0 && c > 0.0) {
            return Err(Error::Config(format!(
                "affine-log parameters must be positive, got b={b} c={c}"
            )));
        }
        Ok(Weight::AffineLog { b, c })
    }

    pub fn sampled(radii: Vec<f64>, values: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::Config(
                "sampled weight needs at least two (radius, value) rows".into(),
            ));
        }
        if !radii.windows(2).all(|p| p[1] > p[0]) {
            return Err(Error::Config("sampled radii must be strictly increasing".into()));
        }
        if radii[0] < 0.0 {
            return Err(Error::Config("sampled radii must be nonnegative".into()));
        }
        if !radii.iter().chain(values.iter()).all(|v| v.is_finite()) {
            return Err(Error::Representation("sampled weight has non-finite entries".into()));
        }
        Ok(Weight::Sampled {
            radii,
            values,
            name: name.into(),
        })
    }

    /// Two-column CSV (radius, value); `#`-prefixed lines and an optional
    /// non-numeric header row are skipped.
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("{}: line {} needs two columns", path.display(), lineno + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(r), Ok(v)) => {
                    radii.push(r);
                    values.push(v);
                }
                _ if radii.is_empty() => continue, // header row
                _ => {
                    return Err(Error::Parse(format!(
                        "{}: line {} is not numeric",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        let name = format!("sampled:{}", path.display());
        Self::sampled(radii, values, name)
    }

    /// Radial evaluation; the profile is symmetric, so only |xi| matters.
    pub fn eval(&self, xi: f64) -> f64 {
        let r = xi.abs();
        match self {
            Weight::Log => r.ln_1p(),
            Weight::Gevrey { alpha } => r.powf(*alpha),
            Weight::AffineLog { b, c } => b * (c * r).ln_1p(),
            Weight::Sampled { radii, values, .. } => {
                if r <= radii[0] {
                    return values[0];
                }
                let k = match radii.binary_search_by(|p| p.partial_cmp(&r).unwrap()) {
                    Ok(k) => return values[k],
                    Err(k) => k,
                };
                let (i, j) = if k >= radii.len() {
                    (radii.len() - 2, radii.len() - 1)
                } else {
                    (k - 1, k)
                };
                let t = (r - radii[i]) / (radii[j] - radii[i]);
                values[i] + t * (values[j] - values[i])
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Weight::Log => "log".into(),
            Weight::Gevrey { alpha } => format!("gevrey:{alpha}"),
            Weight::AffineLog { b, c } => format!("alog:{b}:{c}"),
            Weight::Sampled { name, .. } => name.clone(),
        }
    }

    pub fn monotone_radial(&self) -> bool {
        match self {
            Weight::Sampled { values, .. } => values.windows(2).all(|p| p[1] >= p[0]),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub weight: String,
    pub vanishes_at_origin: bool,
    pub nonnegative: bool,
    pub subadditive: Verdict,
    /// offending (xi, eta) pair when subadditivity fails
    pub subadditivity_witness: Option<(f64, f64)>,
    /// fitted (a, b) with w >= a + b log(1+r) on the window, b > 0
    pub log_bound: Option<(f64, f64)>,
    pub integral_trend: TrendVerdict,
    pub verdict: Verdict,
}

/// Checks the defining properties of the weight class on a window:
/// normalization at the origin, nonnegativity, sampled subadditivity,
/// a fitted logarithmic lower bound, and geometric decay of the dyadic
/// increments of the growth integral (the finite-window reading of its
/// convergence).
pub fn check_membership(w: &Weight, win: &FrequencyWindow) -> MembershipReport {
    let vanishes_at_origin = w.eval(0.0).abs() <= 1e-9;

    let mut nonnegative = true;
    for i in 0..=win.n_half() {
        if w.eval(i as f64 * win.step) < -1e-12 {
            nonnegative = false;
            break;
        }
    }

    // subadditivity on seeded random pairs drawn from [0, Xi]^2
    let mut rng = ChaCha8Rng::seed_from_u64(SUBADDITIVITY_SEED);
    let mut subadditive = Verdict::VerifiedOnWindow;
    let mut subadditivity_witness = None;
    for _ in 0..SUBADDITIVITY_PAIRS {
        let x = rng.gen::<f64>() * win.radius;
        let y = rng.gen::<f64>() * win.radius;
        let (wx, wy, wxy) = (w.eval(x), w.eval(y), w.eval(x + y));
        if wxy > wx + wy + 1e-9 * (1.0 + wx + wy) {
            subadditive = Verdict::RefutedWithWitness;
            subadditivity_witness = Some((x, y));
            break;
        }
    }

    // least-squares fit of w against log(1+r), then shift a down so the
    // bound holds at every grid point
    let n = win.n_half();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..=n)
        .map(|i| {
            let r = i as f64 * win.step;
            (r.ln_1p(), w.eval(r))
        })
        .unzip();
    let (_, b_fit, _) = crate::num::linear_fit(&xs, &ys);
    let log_bound = if b_fit > 0.0 {
        let a = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| y - b_fit * x)
            .fold(f64::INFINITY, f64::min);
        Some((a, b_fit))
    } else {
        None
    };

    // dyadic increments of the integral of w(r)/(1+r^2)
    let increments: Vec<(f64, f64, f64)> = {
        let ladder = &win.ladder;
        (1..ladder.len())
            .map(|k| {
                let (lo, hi) = (ladder[k - 1], ladder[k]);
                let i0 = (lo / win.step).ceil() as usize;
                let i1 = ((hi / win.step).floor() as usize).min(n);
                let mut acc = 0.0;
                for i in i0..i1 {
                    let r0 = i as f64 * win.step;
                    let r1 = r0 + win.step;
                    let f0 = w.eval(r0) / (1.0 + r0 * r0);
                    let f1 = w.eval(r1) / (1.0 + r1 * r1);
                    acc += 0.5 * win.step * (f0 + f1);
                }
                (hi, acc, hi)
            })
            .collect()
    };
    let tail = trend_tail(&increments);
    let integral_trend = if tail.len() >= 3 {
        let decaying = tail.windows(2).all(|p| p[1].1 <= 0.9 * p[0].1);
        let flat = tail.windows(2).all(|p| p[1].1 >= p[0].1 * (1.0 - 1e-6));
        if decaying {
            TrendVerdict::Convergent
        } else if flat {
            TrendVerdict::Divergent
        } else {
            TrendVerdict::Inconclusive
        }
    } else {
        TrendVerdict::Inconclusive
    };

    let verdict = if !vanishes_at_origin
        || !nonnegative
        || subadditive.is_refuted()
        || matches!(integral_trend, TrendVerdict::Divergent)
    {
        Verdict::RefutedWithWitness
    } else if log_bound.is_some() && matches!(integral_trend, TrendVerdict::Convergent) {
        Verdict::VerifiedOnWindow
    } else {
        Verdict::Inconclusive
    };

    MembershipReport {
        weight: w.name(),
        vanishes_at_origin,
        nonnegative,
        subadditive,
        subadditivity_witness,
        log_bound,
        integral_trend,
        verdict,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Dominates,
    StrictlyDominates,
    Equivalent,
    Fails,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    Dominates,
    Strict,
    Equivalent,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationVerdict {
    pub relation: Relation,
    /// certificate: w2 >= a + b w1 at every grid point of the window
    pub a: f64,
    pub b: f64,
    /// per-annulus minima of w2/w1 (outer rung radius, value)
    pub annulus_ratios: Vec<(f64, f64)>,
    pub witness: Option<f64>,
    pub verdict: Verdict,
}

/// Decides whether w2 dominates w1 on the window. The certificate takes b as
/// the minimal ratio on the outermost annulus and then shifts a down to exact
/// grid feasibility (largest sustainable slope first, ties toward larger b).
/// Failure is a trend statement: per-annulus minimal ratios must decrease and
/// lose at least half their value across the trend annuli.
pub fn compare(w2: &Weight, w1: &Weight, mode: CompareMode, win: &FrequencyWindow) -> DominationVerdict {
    if mode == CompareMode::Equivalent {
        let fwd = compare(w2, w1, CompareMode::Dominates, win);
        let bwd = compare(w1, w2, CompareMode::Dominates, win);
        let verdict = if fwd.verdict.is_verified() && bwd.verdict.is_verified() {
            Verdict::VerifiedOnWindow
        } else if fwd.verdict.is_refuted() || bwd.verdict.is_refuted() {
            Verdict::RefutedWithWitness
        } else {
            Verdict::Inconclusive
        };
        let relation = if verdict.is_verified() {
            Relation::Equivalent
        } else if verdict.is_refuted() {
            Relation::Fails
        } else {
            fwd.relation
        };
        return DominationVerdict {
            relation,
            a: fwd.a,
            b: fwd.b,
            annulus_ratios: fwd.annulus_ratios,
            witness: fwd.witness.or(bwd.witness),
            verdict,
        };
    }

    let ratios = win.annulus_minima(1.0, |r| {
        let d = w1.eval(r);
        (d > 1e-300).then(|| w2.eval(r) / d)
    });
    let annulus_ratios: Vec<(f64, f64)> = ratios.iter().map(|&(hi, v, _)| (hi, v)).collect();

    let tail = trend_tail(&ratios);
    let ratio_collapsing = tail.len() >= 3
        && tail.windows(2).all(|p| p[1].1 < p[0].1)
        && tail.last().unwrap().1 <= 0.5 * tail.first().unwrap().1;
    if ratio_collapsing {
        let witness = tail.last().map(|&(_, _, r)| r);
        return DominationVerdict {
            relation: Relation::Fails,
            a: 0.0,
            b: 0.0,
            annulus_ratios,
            witness,
            verdict: Verdict::RefutedWithWitness,
        };
    }

    let b = ratios.last().map(|&(_, v, _)| v).unwrap_or(1.0);
    let mut a = f64::INFINITY;
    for i in 0..=win.n_half() {
        let r = i as f64 * win.step;
        a = a.min(w2.eval(r) - b * w1.eval(r));
    }
    if !(b > 0.0) || !a.is_finite() {
        return DominationVerdict {
            relation: Relation::Fails,
            a: 0.0,
            b: 0.0,
            annulus_ratios,
            witness: None,
            verdict: Verdict::Inconclusive,
        };
    }

    if mode == CompareMode::Dominates {
        return DominationVerdict {
            relation: Relation::Dominates,
            a,
            b,
            annulus_ratios,
            witness: None,
            verdict: Verdict::VerifiedOnWindow,
        };
    }

    // strict mode: the shifted ratio (w2 - a)/w1 must increase across the
    // trend annuli, which is the finite-window reading of an unbounded slope
    let shifted = win.annulus_minima(1.0, |r| {
        let d = w1.eval(r);
        (d > 1e-300).then(|| (w2.eval(r) - a) / d)
    });
    let tail = trend_tail(&shifted);
    let increasing = tail.len() >= 3 && tail.windows(2).all(|p| p[1].1 > p[0].1 * (1.0 + 1e-6));
    let flat_or_decreasing = tail.len() >= 3
        && tail.last().unwrap().1 <= tail.first().unwrap().1 * 1.01;
    if increasing {
        DominationVerdict {
            relation: Relation::StrictlyDominates,
            a,
            b,
            annulus_ratios,
            witness: None,
            verdict: Verdict::VerifiedOnWindow,
        }
    } else if flat_or_decreasing {
        DominationVerdict {
            relation: Relation::Dominates,
            a,
            b,
            annulus_ratios,
            witness: tail.last().map(|&(_, _, r)| r),
            verdict: Verdict::RefutedWithWitness,
        }
    } else {
        DominationVerdict {
            relation: Relation::Dominates,
            a,
            b,
            annulus_ratios,
            witness: None,
            verdict: Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlowVariationReport {
    pub verdict: Verdict,
    /// certificate: inf-curve >= a + b sup-curve on the tested radii
    pub cert: Option<(f64, f64)>,
    pub witness: Option<f64>,
    /// radii whose delta-ball left the window (excluded from the verdict)
    pub excluded_beyond: Option<f64>,
}

/// Tests slow variation of w with respect to the ball radius function delta:
/// the infimum of w over B(r, delta(r)) must dominate the supremum. delta
/// must be o(r) on the window, checked through a decreasing ratio.
pub fn is_slowly_varying(
    w: &Weight,
    delta: impl Fn(f64) -> f64,
    win: &FrequencyWindow,
) -> Result<SlowVariationReport> {
    let n = win.n_half();
    let h = win.step;
    // delta(r)/r must decrease where it matters (r >= 1)
    let mut prev: Option<f64> = None;
    let i_one = (1.0 / h).ceil() as usize;
    for i in (i_one..=n).step_by((n / 64).max(1)) {
        let r = i as f64 * h;
        let d = delta(r);
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Precondition(format!("delta({r}) = {d} is not a positive real")));
        }
        let ratio = d / r;
        if let Some(p) = prev {
            if ratio > p * (1.0 + 1e-9) {
                return Err(Error::Precondition(
                    "delta(r)/r must be non-increasing on the window".into(),
                ));
            }
        }
        prev = Some(ratio);
    }
    if let Some(p) = prev {
        let r0 = h.max(1.0);
        let first = delta(r0) / r0;
        if p > 0.9 * first {
            return Err(Error::Precondition(
                "delta is not o(r) on this window (ratio barely decreases)".into(),
            ));
        }
    }

    let values: Vec<f64> = (0..=n).map(|i| w.eval(i as f64 * h)).collect();
    let mut lo_idx = Vec::new();
    let mut hi_idx = Vec::new();
    let mut kept_radii = Vec::new();
    let mut excluded_beyond = None;
    for i in 0..=n {
        let r = i as f64 * h;
        let d = delta(r.max(h));
        if r + d > win.radius {
            excluded_beyond.get_or_insert(r);
            break;
        }
        // ball below zero reflects onto [0, r + d], so only clamp at zero
        lo_idx.push((((r - d) / h).ceil().max(0.0)) as usize);
        hi_idx.push(((r + d) / h).floor() as usize);
        kept_radii.push(r);
    }
    if kept_radii.len() < 16 {
        return Err(Error::Precondition("delta-balls leave the window almost everywhere".into()));
    }
    let sup_curve = crate::num::sliding_max(&values, &lo_idx, &hi_idx);
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    let inf_curve: Vec<f64> = crate::num::sliding_max(&neg, &lo_idx, &hi_idx)
        .into_iter()
        .map(|v| -v)
        .collect();

    // domination of the sup-curve by the inf-curve, same trend machinery
    let radius = *kept_radii.last().unwrap();
    let sub_win = FrequencyWindow::new((radius / h).floor() * h, h)?;
    let sup_w = Weight::sampled(kept_radii.clone(), sup_curve, "sup-curve")?;
    let inf_w = Weight::sampled(kept_radii, inf_curve, "inf-curve")?;
    let cmp = compare(&inf_w, &sup_w, CompareMode::Dominates, &sub_win);
    Ok(SlowVariationReport {
        verdict: cmp.verdict,
        cert: cmp.verdict.is_verified().then_some((cmp.a, cmp.b)),
        witness: cmp.witness,
        excluded_beyond,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MTildeReport {
    pub verdict: Verdict,
    /// fitted constant: min_j (inf over the j-th ball of w) / w(xi_j)
    pub c: f64,
    pub ratios: Vec<f64>,
    pub witness: Option<usize>,
}

/// Inner-regularity of w along a frequency sequence: the infimum of w over
/// the ball of radius rho_j around xi_j must stay a fixed fraction of
/// w(xi_j). The constant is fitted and reported rather than assumed to be 1.
pub fn in_m_tilde(w: &Weight, xi_seq: &[f64], rho_seq: &[f64]) -> Result<MTildeReport> {
    if xi_seq.len() != rho_seq.len() || xi_seq.is_empty() {
        return Err(Error::Shape("xi and rho sequences must have equal nonzero length".into()));
    }
    if !xi_seq.windows(2).all(|p| p[1] > p[0]) {
        return Err(Error::Precondition("xi sequence must be increasing".into()));
    }
    for j in 1..xi_seq.len() {
        let (r0, r1) = (rho_seq[j - 1] / xi_seq[j - 1], rho_seq[j] / xi_seq[j]);
        if r1 > r0 * (1.0 + 1e-9) {
            return Err(Error::Precondition("rho_j/xi_j must be non-increasing".into()));
        }
    }

    const BALL_SAMPLES: usize = 512;
    let mut ratios = Vec::with_capacity(xi_seq.len());
    let mut c = f64::INFINITY;
    let mut witness = None;
    for (j, (&xi, &rho)) in xi_seq.iter().zip(rho_seq).enumerate() {
        let denom = w.eval(xi);
        if denom <= 0.0 {
            ratios.push(f64::NAN);
            continue;
        }
        let mut m = f64::INFINITY;
        for k in 0..=BALL_SAMPLES {
            let eta = -rho + 2.0 * rho * k as f64 / BALL_SAMPLES as f64;
            m = m.min(w.eval(xi + eta));
        }
        let ratio = m / denom;
        ratios.push(ratio);
        if ratio < c {
            c = ratio;
            witness = Some(j);
        }
    }
    let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Precondition("w vanishes at every xi_j".into()));
    }
    let collapsing = finite.len() >= 3
        && finite.windows(2).all(|p| p[1] < p[0])
        && *finite.last().unwrap() <= 0.5 * finite[0];
    let verdict = if c <= 1e-12 || collapsing {
        Verdict::RefutedWithWitness
    } else {
        Verdict::VerifiedOnWindow
    };
    Ok(MTildeReport {
        verdict,
        c,
        ratios,
        witness: verdict.is_refuted().then(|| witness.unwrap_or(0)),
    })
}

/// Least concave nondecreasing majorant of the radial profile on the window,
/// returned as a sampled weight through the hull vertices. With strict=true
/// the hull is inflated by (1 + log(1+r))^{1/2} and re-hulled, which makes
/// the output strictly dominate the input while staying concave, hence
/// subadditive once normalized at the origin.
pub fn concave_majorant(w: &Weight, win: &FrequencyWindow, strict: bool) -> Result<Weight> {
    let n = win.n_half();
    let h = win.step;
    let pts: Vec<(f64, f64)> = (0..=n).map(|i| (i as f64 * h, w.eval(i as f64 * h))).collect();
    let mut hull = upper_hull(&pts);
    if strict {
        let hull_w = weight_from_vertices(&hull, "hull")?;
        let inflated: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let r = i as f64 * h;
                (r, hull_w.eval(r) * (1.0 + r.ln_1p()).sqrt())
            })
            .collect();
        hull = upper_hull(&inflated);
    }
    let tag = if strict { "majorant-strict" } else { "majorant" };
    weight_from_vertices(&hull, &format!("{tag}({})", w.name()))
}

fn weight_from_vertices(hull: &[(f64, f64)], name: &str) -> Result<Weight> {
    let radii: Vec<f64> = hull.iter().map(|p| p.0).collect();
    let values: Vec<f64> = hull.iter().map(|p| p.1).collect();
    Weight::sampled(radii, values, name)
}

/// Andrew monotone-chain upper hull of points with increasing x.
fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    fn win() -> FrequencyWindow {
        FrequencyWindow::new(1.0e4, 1.0).unwrap()
    }

    #[test]
    fn log_weight_membership() {
        let rep = check_membership(&Weight::Log, &win());
        assert!(rep.verdict.is_verified(), "{rep:?}");
        let (a, b) = rep.log_bound.unwrap();
        assert!((b - 1.0).abs() < 0.05, "b = {b}");
        assert!(a.abs() < 0.5, "a = {a}");
        assert!(matches!(rep.integral_trend, TrendVerdict::Convergent));
    }

    #[test]
    fn gevrey_membership_converges() {
        let rep = check_membership(&Weight::gevrey(0.5).unwrap(), &win());
        assert!(rep.verdict.is_verified(), "{rep:?}");
        assert!(matches!(rep.integral_trend, TrendVerdict::Convergent));
    }

    #[test]
    fn linear_growth_fails_integral_bound() {
        let radii: Vec<f64> = (0..=100).map(|i| i as f64 * 100.0).collect();
        let values = radii.clone();
        let w = Weight::sampled(radii, values, "linear").unwrap();
        let rep = check_membership(&w, &win());
        assert!(matches!(rep.integral_trend, TrendVerdict::Divergent), "{rep:?}");
        assert!(rep.verdict.is_refuted());
    }

    #[test]
    fn unnormalized_sample_refuted_at_origin() {
        let w = Weight::sampled(vec![0.0, 1.0, 10.0], vec![0.3, 0.5, 1.0], "shifted").unwrap();
        let rep = check_membership(&w, &win());
        assert!(!rep.vanishes_at_origin);
        assert!(rep.verdict.is_refuted());
    }

    #[test]
    fn reflexive_domination_is_exact() {
        for w in [Weight::Log, Weight::gevrey(0.5).unwrap()] {
            let v = compare(&w, &w, CompareMode::Dominates, &win());
            assert_eq!(v.relation, Relation::Dominates);
            assert_eq!(v.a, 0.0);
            assert_eq!(v.b, 1.0);
        }
    }

    #[test]
    fn gevrey_strictly_dominates_log() {
        let v = compare(
            &Weight::gevrey(0.5).unwrap(),
            &Weight::Log,
            CompareMode::Strict,
            &win(),
        );
        assert_eq!(v.relation, Relation::StrictlyDominates, "{v:?}");
        assert!(v.verdict.is_verified());
    }

    #[test]
    fn log_fails_to_dominate_gevrey() {
        let v = compare(
            &Weight::Log,
            &Weight::gevrey(0.5).unwrap(),
            CompareMode::Dominates,
            &win(),
        );
        assert_eq!(v.relation, Relation::Fails);
        let wr = v.witness.unwrap();
        assert!(wr > 5.0e3, "witness should sit near the window edge, got {wr}");
    }

    #[test]
    fn no_weight_strictly_dominates_itself() {
        let v = compare(&Weight::Log, &Weight::Log, CompareMode::Strict, &win());
        assert_eq!(v.relation, Relation::Dominates);
        assert!(v.verdict.is_refuted());
    }

    #[test]
    fn certificates_compose_transitively() {
        let w1 = Weight::Log;
        let w2 = Weight::gevrey(0.3).unwrap();
        let w3 = Weight::gevrey(0.6).unwrap();
        let win = win();
        let c21 = compare(&w2, &w1, CompareMode::Dominates, &win);
        let c32 = compare(&w3, &w2, CompareMode::Dominates, &win);
        assert!(c21.verdict.is_verified() && c32.verdict.is_verified());
        let (a, b) = (c32.a + c32.b * c21.a, c32.b * c21.b);
        assert!(b > 0.0);
        for i in 0..=win.n_half() {
            let r = i as f64 * win.step;
            assert!(
                w3.eval(r) >= a + b * w1.eval(r) - 1e-9,
                "composed certificate fails at r={r}"
            );
        }
    }

    #[test]
    fn monotone_weights_are_slowly_varying() {
        let w4 = FrequencyWindow::new(4096.0, 1.0).unwrap();
        for w in [
            Weight::Log,
            Weight::gevrey(0.5).unwrap(),
            Weight::affine_log(2.0, 0.5).unwrap(),
        ] {
            let rep = is_slowly_varying(&w, |r| r / (2.0 + r).ln(), &w4).unwrap();
            assert!(rep.verdict.is_verified(), "{}: {rep:?}", w.name());
            let rep = is_slowly_varying(&w, |r| r.sqrt(), &w4).unwrap();
            assert!(rep.verdict.is_verified(), "{}: {rep:?}", w.name());
        }
    }

    #[test]
    fn oscillating_weight_is_not_slowly_varying() {
        let w4 = FrequencyWindow::new(4096.0, 1.0).unwrap();
        let radii: Vec<f64> = (0..=4096).map(|i| i as f64).collect();
        let values: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let s = 0.5 + 0.5 * (2.0 * r.sqrt()).sin();
                (1.0 + r).powf(0.3 + 0.45 * s)
            })
            .collect();
        let w = Weight::sampled(radii, values, "oscillating").unwrap();
        let rep = is_slowly_varying(&w, |r| r.sqrt(), &w4).unwrap();
        assert!(rep.verdict.is_refuted(), "{rep:?}");
        assert!(rep.witness.is_some());
    }

    #[test]
    fn linear_delta_rejected() {
        let err = is_slowly_varying(&Weight::Log, |r| 0.5 * r, &win());
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn dyadic_sequence_stays_inner_regular_for_log() {
        let xi: Vec<f64> = (2..=13).map(|j| (1u64 << j) as f64).collect();
        let rho: Vec<f64> = xi.iter().map(|x| x.sqrt()).collect();
        let rep = in_m_tilde(&Weight::Log, &xi, &rho).unwrap();
        assert!(rep.verdict.is_verified(), "{rep:?}");
        assert!(rep.c > 0.6, "c = {}", rep.c);
        assert!(rep.ratios.windows(2).all(|p| p[1] >= p[0] - 1e-12));
    }

    #[test]
    fn vanishing_interval_breaks_inner_regularity() {
        let radii = vec![0.0, 100.0, 115.0, 125.0, 140.0, 1.0e4];
        let values = vec![0.0, 2.0, 0.0, 0.0, 2.2, 9.0];
        let w = Weight::sampled(radii, values, "pinched").unwrap();
        let xi: Vec<f64> = vec![16.0, 32.0, 64.0, 128.0, 256.0];
        let rho: Vec<f64> = xi.iter().map(|x| x.sqrt()).collect();
        let rep = in_m_tilde(&w, &xi, &rho).unwrap();
        assert!(rep.verdict.is_refuted());
        assert_eq!(rep.witness, Some(3));
        assert!(rep.c < 1e-9);
    }

    #[test]
    fn concave_input_is_a_fixed_point_of_the_hull() {
        let win = win();
        let w = Weight::gevrey(0.5).unwrap();
        let hull = concave_majorant(&w, &win, false).unwrap();
        for i in (0..=win.n_half()).step_by(37) {
            let r = i as f64 * win.step;
            let (a, b) = (hull.eval(r), w.eval(r));
            assert!((a - b).abs() <= 1e-9 * (1.0 + b), "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn hull_majorizes_and_is_midpoint_concave() {
        let win = win();
        let base = Weight::Log;
        let radii: Vec<f64> = (0..=10_000).map(|i| i as f64).collect();
        let values: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let jump = if r > 100.0 { 10.0 * (1.0 + r - 100.0).ln() } else { 0.0 };
                base.eval(r).max(jump)
            })
            .collect();
        let w = Weight::sampled(radii, values, "jumpy").unwrap();
        let hull = concave_majorant(&w, &win, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let x = rng.gen::<f64>() * win.radius;
            let y = rng.gen::<f64>() * win.radius;
            assert!(hull.eval(x) >= w.eval(x) - 1e-9);
            let mid = hull.eval(0.5 * (x + y));
            let avg = 0.5 * (hull.eval(x) + hull.eval(y));
            assert!(mid >= avg - 1e-9 * (1.0 + avg), "midpoint concavity at ({x},{y})");
        }
    }

    #[test]
    fn strict_majorant_strictly_dominates() {
        let win = win();
        let hull = concave_majorant(&Weight::Log, &win, true).unwrap();
        let v = compare(&hull, &Weight::Log, CompareMode::Strict, &win);
        assert_eq!(v.relation, Relation::StrictlyDominates, "{v:?}");
        let rep = check_membership(&hull, &win);
        assert!(rep.verdict.is_verified(), "{rep:?}");
    }
}
