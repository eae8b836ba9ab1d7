//! Content and dimension estimates from volume profiles, the Kneser check,
//! and budget-aware verdicts for the inequalities between contents.
//!
//! Limits at `r → 0⁺` are never extrapolated. Lower and upper estimates are
//! the min and max of the quotient over the finest dyadic octave of the
//! profile, and the per-octave envelopes are reported alongside so that
//! convergence (or oscillation) can be judged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::field::{
    distance_field, geometric_radii, volume_profile, Grid, Method, SublevelVolumes, VolumeProfile,
};
use crate::index::SiteIndex;
use crate::set::{sample_boundary, CompactSet};

/// Minimum number of radii a profile needs for content estimates.
pub const MIN_RADII: usize = 16;
/// Minimum span of a profile, in octaves.
pub const MIN_OCTAVES: f64 = 3.0;
/// Quotients above this and still growing as `r ↓` are reported as `+∞`.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Log-log slope of the quotient (over the finest two octaves) at or below
/// which it is also reported as `+∞`: the quotient grows at least like `r^{-0.2}`.
pub const DIVERGENCE_SLOPE: f64 = -0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    /// `V(r) / r^{n-s}`.
    Minkowski,
    /// `(V(r) - V(0)) / r^{n-s}`; at `s = n - 1` this is the surface Minkowski content.
    #[serde(alias = "sm")]
    OuterMinkowski,
    /// `S(r) / ((n-s) r^{n-s-1})`.
    SContent,
}

impl ContentKind {
    pub const ALL: [ContentKind; 3] = [Self::Minkowski, Self::OuterMinkowski, Self::SContent];

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "minkowski" | "m" => Ok(Self::Minkowski),
            "outer_minkowski" | "outer" | "sm" => Ok(Self::OuterMinkowski),
            "s_content" | "scontent" | "s" => Ok(Self::SContent),
            other => Err(Error::Config(format!("unknown content kind `{other}`"))),
        }
    }
}

/// Optional multiplier `ω_{n-s}^{-1}` applied to every quotient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    /// Unit-ball volume `ω_t = π^{t/2} / Γ(1 + t/2)`.
    Omega,
    /// The variant `π^{t/2} / Γ(1 + t)`.
    OmegaPrinted,
}

impl Normalization {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "none" => Ok(Self::None),
            "omega" => Ok(Self::Omega),
            "omega-printed" => Ok(Self::OmegaPrinted),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }

    /// Multiplier for codimension `t = n - s`.
    pub fn multiplier(self, t: f64) -> f64 {
        let pi = std::f64::consts::PI;
        match self {
            Self::None => 1.0,
            Self::Omega => gamma(1.0 + t / 2.0) / pi.powf(t / 2.0),
            Self::OmegaPrinted => gamma(1.0 + t) / pi.powf(t / 2.0),
        }
    }
}

/// Min and max of a quotient over one dyadic octave `[r_lo, r_hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OctaveRow {
    pub r_lo: f64,
    pub r_hi: f64,
    #[serde(with = "extended")]
    pub min: f64,
    #[serde(with = "extended")]
    pub max: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentReport {
    pub s: f64,
    pub kind: ContentKind,
    pub dimension: usize,
    #[serde(with = "extended")]
    pub lower: f64,
    #[serde(with = "extended")]
    pub upper: f64,
    /// Error budgets of the quotient at the radii attaining `lower` / `upper`.
    pub lower_budget: f64,
    pub upper_budget: f64,
    pub window: (f64, f64),
    pub divergent: bool,
    pub method: Method,
    pub normalization: Normalization,
    pub multiplier: f64,
    pub octave_table: Vec<OctaveRow>,
    pub set: String,
    pub body: String,
}

/// Options for [`content_estimate_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContentOptions {
    pub normalization: Normalization,
    /// Width of the estimation window above `r_min`, in octaves.
    pub window_octaves: f64,
}

impl Default for ContentOptions {
    fn default() -> Self {
        Self {
            normalization: Normalization::None,
            window_octaves: 1.0,
        }
    }
}

pub fn content_estimate(
    profile: &VolumeProfile,
    s: f64,
    kind: ContentKind,
) -> Result<ContentReport> {
    content_estimate_with(profile, s, kind, &ContentOptions::default())
}

/// Surface Minkowski content: the outer Minkowski content at `s = n - 1`.
pub fn surface_minkowski_content(profile: &VolumeProfile) -> Result<ContentReport> {
    content_estimate(
        profile,
        profile.dimension() as f64 - 1.0,
        ContentKind::OuterMinkowski,
    )
}

fn octave_span(profile: &VolumeProfile) -> f64 {
    match (profile.radii.first(), profile.radii.last()) {
        (Some(a), Some(b)) => (b / a).log2(),
        _ => 0.0,
    }
}

fn check_octaves(profile: &VolumeProfile, min_radii: usize) -> Result<()> {
    let span = octave_span(profile);
    if profile.len() < min_radii || span < MIN_OCTAVES - 1e-9 {
        return Err(Error::InsufficientOctaves {
            found: span,
            radii: profile.len(),
            needed: MIN_OCTAVES,
        });
    }
    Ok(())
}

/// Quotient and its budget at every radius of the profile.
fn quotients(
    profile: &VolumeProfile,
    s: f64,
    kind: ContentKind,
    mult: f64,
) -> Vec<(f64, f64, f64)> {
    let n = profile.dimension() as f64;
    let t = n - s;
    (0..profile.len())
        .map(|i| {
            let r = profile.radii[i];
            let (q, e) = match kind {
                ContentKind::Minkowski => {
                    let d = r.powf(t);
                    (profile.volume[i] / d, profile.volume_budget[i] / d)
                }
                ContentKind::OuterMinkowski => {
                    let d = r.powf(t);
                    (
                        (profile.volume[i] - profile.volume_at_zero) / d,
                        profile.volume_budget[i] / d,
                    )
                }
                ContentKind::SContent => {
                    let d = t * r.powf(t - 1.0);
                    (profile.surface[i] / d, profile.surface_budget[i] / d)
                }
            };
            (r, q * mult, e * mult)
        })
        .collect()
}

fn octave_index(r: f64, r_min: f64) -> usize {
    ((r / r_min).log2() + 1e-9).floor().max(0.0) as usize
}

fn octave_table(q: &[(f64, f64, f64)]) -> Vec<OctaveRow> {
    let r_min = q[0].0;
    let mut rows: Vec<OctaveRow> = Vec::new();
    for (i, &(r, v, _)) in q.iter().enumerate() {
        let k = octave_index(r, r_min);
        let boundary = k > 0 && ((r / r_min).log2() - k as f64).abs() < 1e-9;
        let last = i + 1 == q.len();
        while rows.len() <= k {
            let j = rows.len() as i32;
            rows.push(OctaveRow {
                r_lo: r_min * 2f64.powi(j),
                r_hi: r_min * 2f64.powi(j + 1),
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                samples: 0,
            });
        }
        // octave boundaries belong to both neighbours; the top radius opens no new octave
        let add = |row: &mut OctaveRow| {
            row.min = row.min.min(v);
            row.max = row.max.max(v);
            row.samples += 1;
        };
        if !(boundary && last) {
            add(&mut rows[k]);
        }
        if boundary {
            add(&mut rows[k - 1]);
        }
    }
    rows.retain(|r| r.samples > 0);
    rows
}

/// Least-squares slope, intercept and RMS residual of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    (slope, intercept, (rss / m).sqrt())
}

/// Whether the quotient blows up as `r → 0⁺` at the finest scales: either it
/// exceeds the threshold and increases towards `r_min` across the finest
/// octave, or it follows a power law with log-log slope at most
/// `DIVERGENCE_SLOPE` in each of the two finest octaves.
fn diverges(q: &[(f64, f64, f64)]) -> bool {
    let r_min = q[0].0;
    let octave = |k: i32| -> Vec<&(f64, f64, f64)> {
        let (lo, hi) = (
            r_min * 2f64.powi(k) * (1.0 - 1e-9),
            r_min * 2f64.powi(k + 1) * (1.0 + 1e-9),
        );
        q.iter().filter(|(r, _, _)| (lo..=hi).contains(r)).collect()
    };
    let finest = octave(0);
    let increasing = finest.windows(2).all(|w| w[0].1 >= w[1].1);
    if finest.iter().all(|(_, v, _)| *v > DIVERGENCE_THRESHOLD) && increasing {
        return true;
    }
    let steep = |pts: &[&(f64, f64, f64)]| {
        if pts.len() < 2 || pts.iter().any(|(_, v, _)| !(*v > 0.0)) {
            return false;
        }
        let x: Vec<f64> = pts.iter().map(|(r, _, _)| r.ln()).collect();
        let y: Vec<f64> = pts.iter().map(|(_, v, _)| v.ln()).collect();
        linear_fit(&x, &y).0 <= DIVERGENCE_SLOPE
    };
    let second = octave(1);
    steep(&finest) && steep(&second) && finest[0].1 >= second[second.len() - 1].1
}

pub fn content_estimate_with(
    profile: &VolumeProfile,
    s: f64,
    kind: ContentKind,
    opts: &ContentOptions,
) -> Result<ContentReport> {
    let n = profile.dimension();
    let nf = n as f64;
    if !(0.0..=nf).contains(&s) || (kind == ContentKind::SContent && s >= nf) {
        return Err(Error::SOutOfRange { s, n });
    }
    check_octaves(profile, MIN_RADII)?;
    let mult = opts.normalization.multiplier(nf - s);
    let r_min = profile.radii[0];
    let top = r_min * 2f64.powf(opts.window_octaves.max(0.0)) * (1.0 + 1e-9);
    let window = (
        r_min,
        profile
            .radii
            .iter()
            .copied()
            .filter(|&r| r <= top)
            .fold(r_min, f64::max),
    );
    let base = |lower, upper, lb, ub, divergent, table| ContentReport {
        s,
        kind,
        dimension: n,
        lower,
        upper,
        lower_budget: lb,
        upper_budget: ub,
        window,
        divergent,
        method: profile.meta.method,
        normalization: opts.normalization,
        multiplier: mult,
        octave_table: table,
        set: profile.meta.set.clone(),
        body: profile.meta.body.clone(),
    };

    if s == nf && kind == ContentKind::Minkowski {
        // Minkowski content of full dimension is the volume itself
        let v = profile.volume[0] * mult;
        let e = profile.volume_budget[0] * mult;
        return Ok(base(v, v, e, e, false, Vec::new()));
    }

    let q = quotients(profile, s, kind, mult);
    let table = octave_table(&q);
    if diverges(&q) {
        return Ok(base(f64::INFINITY, f64::INFINITY, 0.0, 0.0, true, table));
    }
    let mut lo = (f64::INFINITY, 0.0);
    let mut hi = (f64::NEG_INFINITY, 0.0);
    for &(r, v, e) in &q {
        if r > top {
            break;
        }
        if v < lo.0 {
            lo = (v, e);
        }
        if v > hi.0 {
            hi = (v, e);
        }
    }
    if profile.meta.method == Method::ClosedForm && table.len() >= 2 {
        // exact values still carry the truncation of the limit at finite radii,
        // estimated by the change of the envelope between the two finest octaves
        lo.1 += (table[0].min - table[1].min).abs();
        hi.1 += (table[0].max - table[1].max).abs();
    }
    Ok(base(lo.0, hi.0, lo.1, hi.1, false, table))
}

/// Report with given bounds, for limits known exactly.
pub fn exact_report(
    s: f64,
    kind: ContentKind,
    dimension: usize,
    lower: f64,
    upper: f64,
    set: &str,
    body: &str,
) -> ContentReport {
    ContentReport {
        s,
        kind,
        dimension,
        lower,
        upper,
        lower_budget: 0.0,
        upper_budget: 0.0,
        window: (0.0, 0.0),
        divergent: lower.is_infinite(),
        method: Method::ClosedForm,
        normalization: Normalization::None,
        multiplier: 1.0,
        octave_table: Vec::new(),
        set: set.to_string(),
        body: body.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub dimension: f64,
    pub dim_lower: f64,
    pub dim_upper: f64,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Per-octave min/max of `V(r)/r^{n-dim}`.
    pub oscillation: Vec<OctaveRow>,
    /// Dimension from the slope within each octave, finest first.
    pub octave_dimensions: Vec<f64>,
}

/// `n` minus the log-log slope of `V` over the finest two octaves.
pub fn dimension_estimate(profile: &VolumeProfile) -> Result<DimensionReport> {
    let span = octave_span(profile);
    if span < MIN_OCTAVES - 1e-9 || profile.len() < 4 {
        return Err(Error::InsufficientOctaves {
            found: span,
            radii: profile.len(),
            needed: MIN_OCTAVES,
        });
    }
    let nf = profile.dimension() as f64;
    let r_min = profile.radii[0];
    let pts: Vec<(f64, f64)> = profile
        .radii
        .iter()
        .zip(&profile.volume)
        .filter(|(_, v)| **v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    let finest: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .filter(|(lr, _)| *lr <= (4.0 * r_min).ln() + 1e-9)
        .collect();
    if finest.len() < 2 {
        return Err(Error::InsufficientOctaves {
            found: span,
            radii: profile.len(),
            needed: MIN_OCTAVES,
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = finest.into_iter().unzip();
    let (slope, intercept, residual) = linear_fit(&x, &y);
    let dimension = (nf - slope).clamp(0.0, nf);

    let mut octave_dimensions = Vec::new();
    let octaves = span.floor() as usize;
    for k in 0..octaves {
        let lo = (r_min * 2f64.powi(k as i32)).ln() - 1e-9;
        let hi = (r_min * 2f64.powi(k as i32 + 1)).ln() + 1e-9;
        let (x, y): (Vec<f64>, Vec<f64>) = pts
            .iter()
            .copied()
            .filter(|(lr, _)| *lr >= lo && *lr <= hi)
            .unzip();
        if x.len() >= 2 {
            octave_dimensions.push((nf - linear_fit(&x, &y).0).clamp(0.0, nf));
        }
    }
    let dim_lower = octave_dimensions.iter().copied().fold(dimension, f64::min);
    let dim_upper = octave_dimensions.iter().copied().fold(dimension, f64::max);
    let q = quotients(profile, dimension, ContentKind::Minkowski, 1.0);
    Ok(DimensionReport {
        dimension,
        dim_lower,
        dim_upper,
        slope,
        intercept,
        residual,
        oscillation: octave_table(&q),
        octave_dimensions,
    })
}

/// A volume function that can be evaluated at any radius in its range.
pub trait VolumeFunction {
    fn volume(&self, r: f64) -> f64;
    /// Absolute error budget of `volume(r)`.
    fn budget(&self, r: f64) -> f64;
    fn range(&self) -> (f64, f64);
}

impl VolumeFunction for SublevelVolumes {
    fn volume(&self, r: f64) -> f64 {
        self.volume_at(r)
    }

    fn budget(&self, r: f64) -> f64 {
        self.error_budget(r)
    }

    fn range(&self) -> (f64, f64) {
        (self.resolution_guard(), self.max_radius())
    }
}

/// Exact volume function given by a closure; budget is zero.
pub struct ExactVolume<F> {
    pub f: F,
    pub range: (f64, f64),
}

impl<F: Fn(f64) -> f64> VolumeFunction for ExactVolume<F> {
    fn volume(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    fn budget(&self, _r: f64) -> f64 {
        0.0
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }
}

/// Adds `height` to `V(r)` for `r ≥ at`: a negative control for the Kneser check.
pub struct StepCorrupted<V> {
    pub inner: V,
    pub at: f64,
    pub height: f64,
}

impl<V: VolumeFunction> VolumeFunction for StepCorrupted<V> {
    fn volume(&self, r: f64) -> f64 {
        self.inner.volume(r) + if r >= self.at { self.height } else { 0.0 }
    }

    fn budget(&self, r: f64) -> f64 {
        self.inner.budget(r)
    }

    fn range(&self) -> (f64, f64) {
        self.inner.range()
    }
}

pub const MIN_KNESER_TRIALS: usize = 100;
/// Tolerance of the Kneser check for exact volume functions.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KneserViolation {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    /// `V(tb) - V(ta)`.
    pub lhs: f64,
    /// `tⁿ (V(b) - V(a))`.
    pub rhs: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KneserReport {
    pub trials: usize,
    pub seed: u64,
    pub range: (f64, f64),
    pub violations: Vec<KneserViolation>,
    /// Largest `lhs - rhs` seen, whether or not it exceeded the tolerance.
    pub max_excess: f64,
}

impl KneserReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `0 < a ≤ b`, `t ≥ 1` with `[ta, tb]` inside the range (log-uniformly)
/// and records every `V(tb) - V(ta) > tⁿ (V(b) - V(a)) + tol`. The tolerance is
/// four times the linearly propagated budget, or `1e-9` when every budget is zero.
pub fn kneser_check<V: VolumeFunction + ?Sized>(
    v: &V,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<KneserReport> {
    if trials < MIN_KNESER_TRIALS {
        return Err(Error::TooFewSamples {
            min: MIN_KNESER_TRIALS,
            got: trials,
        });
    }
    let (lo, hi) = v.range();
    if !(lo > 0.0 && hi > lo * (1.0 + 1e-6)) {
        return Err(Error::RangeTooNarrow { lo, hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut violations = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    let nf = n as i32;
    for _ in 0..trials {
        let a = rng.gen_range(llo..=lhi).exp().clamp(lo, hi);
        let b = rng.gen_range(a.ln()..=lhi).exp().clamp(a, hi);
        let t = rng
            .gen_range(0.0..=(hi / b).ln().max(0.0))
            .exp()
            .clamp(1.0, hi / b);
        let (ta, tb) = ((t * a).min(hi), (t * b).min(hi));
        let tn = t.powi(nf);
        let lhs = v.volume(tb) - v.volume(ta);
        let rhs = tn * (v.volume(b) - v.volume(a));
        let budget = v.budget(tb) + v.budget(ta) + tn * (v.budget(b) + v.budget(a));
        let tolerance = if budget > 0.0 {
            4.0 * budget
        } else {
            EXACT_TOLERANCE
        };
        max_excess = max_excess.max(lhs - rhs);
        if lhs - rhs > tolerance {
            violations.push(KneserViolation {
                a,
                b,
                t,
                lhs,
                rhs,
                tolerance,
            });
        }
    }
    Ok(KneserReport {
        trials,
        seed,
        range: (lo, hi),
        violations,
        max_excess,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Largest relative increase `κ(r_j)/κ(r_i) - 1` over `r_i < r_j`.
    pub max_increase: f64,
    /// Largest `(κ(r_j) - κ(r_i) - e_i - e_j) / κ(r_i)` over `r_i < r_j`, where
    /// `e` is the budget of `κ`; positive means an increase beyond the budgets.
    pub max_excess: f64,
    /// Allowed excess: `1e-9` for exact profiles, zero otherwise.
    pub tolerance: f64,
    pub holds: bool,
}

/// `κ` non-increasing up to the budgets of the two radii compared.
pub fn kappa_monotonicity(profile: &VolumeProfile) -> MonotonicityReport {
    let n = profile.dimension() as i32;
    let tolerance = match profile.meta.method {
        Method::Grid => 0.0,
        Method::ClosedForm => EXACT_TOLERANCE,
    };
    let budget: Vec<f64> = (0..profile.len())
        .map(|i| profile.surface_budget[i] / profile.radii[i].powi(n - 1))
        .collect();
    let k = &profile.kappa;
    let mut max_increase = f64::NEG_INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    for i in 0..k.len() {
        if !(k[i] > 0.0) {
            continue;
        }
        for j in i + 1..k.len() {
            max_increase = max_increase.max(k[j] / k[i] - 1.0);
            max_excess = max_excess.max((k[j] - k[i] - budget[i] - budget[j]) / k[i]);
        }
    }
    MonotonicityReport {
        max_increase,
        max_excess,
        tolerance,
        holds: !(max_excess > tolerance),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Worst of two verdicts: violated over inconclusive over holds.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Violated, _) | (_, Violated) => Violated,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Holds,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Violated => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

/// One inequality `small ≤ large`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    #[serde(with = "extended")]
    pub small: f64,
    #[serde(with = "extended")]
    pub large: f64,
    /// `large - small`.
    #[serde(with = "extended")]
    pub slack: f64,
    pub budget: f64,
    pub verdict: Verdict,
    /// `|slack|` within the budget.
    pub equality: bool,
}

impl InequalityCheck {
    /// Exact inputs: holds unless the deficit exceeds the truncation budget or
    /// `1e-9` relative to the magnitudes. Grid inputs: holds for nonnegative
    /// slack, inconclusive when the deficit is within the budget, violated beyond it.
    pub fn new(name: &str, small: f64, large: f64, budget: f64, method: Method) -> Self {
        let slack = if small.is_infinite() && large.is_infinite() {
            0.0
        } else {
            large - small
        };
        let exact = method == Method::ClosedForm;
        let budget = if exact {
            let floor = EXACT_TOLERANCE
                * 1f64
                    .max(small.abs().min(f64::MAX))
                    .max(large.abs().min(f64::MAX));
            floor.max(budget)
        } else {
            budget
        };
        let verdict = if slack.is_nan() {
            Verdict::Inconclusive
        } else if slack >= 0.0 || (exact && slack >= -budget) {
            Verdict::Holds
        } else if slack >= -budget {
            Verdict::Inconclusive
        } else {
            Verdict::Violated
        };
        Self {
            name: name.to_string(),
            small,
            large,
            slack,
            budget,
            verdict,
            // slack and budget can coincide for limits reached linearly in r
            equality: slack.abs() <= budget * (1.0 + 1e-6),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub checks: Vec<InequalityCheck>,
    pub verdict: Verdict,
}

impl LedgerEntry {
    fn from_checks(checks: Vec<InequalityCheck>) -> Self {
        let verdict = checks
            .iter()
            .fold(Verdict::Holds, |v, c| v.combine(c.verdict));
        Self { checks, verdict }
    }

    fn skipped(reason: &str) -> Self {
        Self {
            checks: vec![InequalityCheck {
                name: reason.to_string(),
                small: f64::NAN,
                large: f64::NAN,
                slack: f64::NAN,
                budget: 0.0,
                verdict: Verdict::Inconclusive,
                equality: false,
            }],
            verdict: Verdict::Inconclusive,
        }
    }
}

/// Verdicts on the content inequalities for one `(E, C, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub s: f64,
    /// `S_* ≤ SM_* ≤ SM^* ≤ S^*` (outer contents; equal to `M` when `λ(E) = 0`).
    pub lemma36: LedgerEntry,
    /// `SM^* ≥ (n-s)/n · S^*`.
    pub lemma38: LedgerEntry,
    /// `c(C,n,s) S^t_* ≥ (M^s_*)^{(n-1)/n}` with `t = s(n-1)/n`, `c = (n-t)/(n λ(C)^{1/n})`.
    pub thm39: LedgerEntry,
    /// `S^{n-1}_* ≥ n λ(C)^{1/n} λ(E)^{(n-1)/n}`.
    pub prop41: LedgerEntry,
    pub verdict: Verdict,
}

fn find<'a>(reports: &'a [ContentReport], kind: ContentKind, s: f64) -> Option<&'a ContentReport> {
    reports
        .iter()
        .find(|r| r.kind == kind && (r.s - s).abs() < 1e-12)
}

/// Runs every inequality whose reports are present. Needs the Minkowski,
/// outer Minkowski (optional for null sets) and S-content reports at `s`; the S-contents at `s(n-1)/n` and `n-1` enable the
/// last two checks, which are otherwise inconclusive.
pub fn inequality_ledger(
    s: f64,
    reports: &[ContentReport],
    body_volume: f64,
    set_volume: f64,
) -> Result<Ledger> {
    let first = reports
        .first()
        .ok_or_else(|| Error::MismatchedReports("no reports".into()))?;
    for r in reports {
        if r.dimension != first.dimension
            || r.method != first.method
            || r.set != first.set
            || r.body != first.body
        {
            return Err(Error::MismatchedReports(format!(
                "{} / {} / {:?} vs {} / {} / {:?}",
                first.set, first.body, first.method, r.set, r.body, r.method
            )));
        }
        if r.normalization != Normalization::None {
            return Err(Error::MismatchedReports(
                "normalized reports cannot be compared".into(),
            ));
        }
    }
    let n = first.dimension;
    let nf = n as f64;
    let method = first.method;
    let m = find(reports, ContentKind::Minkowski, s)
        .ok_or_else(|| Error::MismatchedReports(format!("missing Minkowski report at s = {s}")))?;
    // the chain is stated for the outer content, which is M itself for null sets
    let sm = match find(reports, ContentKind::OuterMinkowski, s) {
        Some(r) => r,
        None if set_volume == 0.0 => m,
        None => {
            return Err(Error::MismatchedReports(format!(
                "missing outer Minkowski report at s = {s}"
            )))
        }
    };
    let sc = find(reports, ContentKind::SContent, s)
        .ok_or_else(|| Error::MismatchedReports(format!("missing S-content report at s = {s}")))?;

    let lemma36 = LedgerEntry::from_checks(vec![
        InequalityCheck::new(
            "S_lower <= SM_lower",
            sc.lower,
            sm.lower,
            sc.lower_budget + sm.lower_budget,
            method,
        ),
        InequalityCheck::new(
            "SM_lower <= SM_upper",
            sm.lower,
            sm.upper,
            sm.lower_budget + sm.upper_budget,
            method,
        ),
        InequalityCheck::new(
            "SM_upper <= S_upper",
            sm.upper,
            sc.upper,
            sm.upper_budget + sc.upper_budget,
            method,
        ),
    ]);
    let w = (nf - s) / nf;
    let lemma38 = LedgerEntry::from_checks(vec![InequalityCheck::new(
        "(n-s)/n * S_upper <= SM_upper",
        w * sc.upper,
        sm.upper,
        w * sc.upper_budget + sm.upper_budget,
        method,
    )]);

    let t = s * (nf - 1.0) / nf;
    let thm39 = match find(reports, ContentKind::SContent, t) {
        Some(st) => {
            let c = (nf - t) / (nf * body_volume.powf(1.0 / nf));
            let e = (nf - 1.0) / nf;
            let rhs = m.lower.max(0.0).powf(e);
            let rhs_budget = if m.lower > 0.0 {
                e * m.lower.powf(e - 1.0) * m.lower_budget
            } else {
                0.0
            };
            LedgerEntry::from_checks(vec![InequalityCheck::new(
                "M_lower^((n-1)/n) <= c * S^t_lower",
                rhs,
                c * st.lower,
                rhs_budget + c * st.lower_budget,
                method,
            )])
        }
        None => LedgerEntry::skipped("missing S-content report at t = s(n-1)/n"),
    };
    let prop41 = match find(reports, ContentKind::SContent, nf - 1.0) {
        Some(sp) => {
            let rhs = nf * body_volume.powf(1.0 / nf) * set_volume.powf((nf - 1.0) / nf);
            LedgerEntry::from_checks(vec![InequalityCheck::new(
                "n lambda(C)^(1/n) lambda(E)^((n-1)/n) <= S^(n-1)_lower",
                rhs,
                sp.lower,
                sp.lower_budget,
                method,
            )])
        }
        None => LedgerEntry::skipped("missing S-content report at s = n-1"),
    };
    let verdict = [&lemma36, &lemma38, &thm39, &prop41]
        .iter()
        .fold(Verdict::Holds, |v, e| v.combine(e.verdict));
    Ok(Ledger {
        s,
        lemma36,
        lemma38,
        thm39,
        prop41,
        verdict,
    })
}

/// Computes every report the ledger needs from one profile.
pub fn ledger_reports(profile: &VolumeProfile, s: f64) -> Result<Vec<ContentReport>> {
    let nf = profile.dimension() as f64;
    let mut out = vec![
        content_estimate(profile, s, ContentKind::Minkowski)?,
        content_estimate(profile, s, ContentKind::OuterMinkowski)?,
    ];
    let mut s_values = vec![s, s * (nf - 1.0) / nf, nf - 1.0];
    s_values.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for v in s_values {
        if v < nf && find(&out, ContentKind::SContent, v).is_none() {
            out.push(content_estimate(profile, v, ContentKind::SContent)?);
        }
    }
    Ok(out)
}

/// Outer Minkowski quotient at each radius against the range of the S-quotient
/// over the radii up to it; returns the largest excursion outside that range
/// net of the budgets (positive means outside).
pub fn bracketing_excess(profile: &VolumeProfile, s: f64) -> Result<f64> {
    let nf = profile.dimension() as f64;
    if !(0.0..nf).contains(&s) {
        return Err(Error::SOutOfRange {
            s,
            n: profile.dimension(),
        });
    }
    let outer = quotients(profile, s, ContentKind::OuterMinkowski, 1.0);
    let sq = quotients(profile, s, ContentKind::SContent, 1.0);
    let mut worst = f64::NEG_INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_e, mut hi_e) = (0.0, 0.0);
    for i in 0..outer.len() {
        if sq[i].1 < lo {
            lo = sq[i].1;
            lo_e = sq[i].2;
        }
        if sq[i].1 > hi {
            hi = sq[i].1;
            hi_e = sq[i].2;
        }
        let (q, e) = (outer[i].1, outer[i].2);
        worst = worst.max(lo - q - e - lo_e).max(q - hi - e - hi_e);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub union: ContentReport,
    pub parts: Vec<ContentReport>,
    pub sum_lower: f64,
    pub sum_upper: f64,
    /// `|union - Σ parts| / Σ parts` for the lower and upper envelopes.
    pub relative_gap: (f64, f64),
    pub budget: f64,
    pub verdict: Verdict,
}

/// Grid settings shared by the union and its parts; the common origin snap
/// keeps every grid in the same phase.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionGrid {
    pub cell_size: f64,
    pub padding: f64,
    pub radii: Vec<f64>,
}

/// Compares the Minkowski envelope of the union with the sum over parts.
pub fn decomposition_check<const D: usize>(
    parts: &[CompactSet<D>],
    s: f64,
    body: &ConvexBody<D>,
    grid: &DecompositionGrid,
    body_label: &str,
) -> Result<DecompositionReport> {
    if parts.is_empty() {
        return Err(Error::EmptySet);
    }
    check_separated(parts, grid.cell_size)?;
    let report = |set: &CompactSet<D>| -> Result<ContentReport> {
        let g = Grid::covering(set, grid.cell_size, grid.padding)?;
        let field = distance_field(set, body, &g)?;
        let profile = volume_profile(&field, &grid.radii, body_label)?;
        content_estimate(&profile, s, ContentKind::Minkowski)
    };
    let union_set = if parts.len() == 1 {
        parts[0].clone()
    } else {
        CompactSet::Union(parts.to_vec())
    };
    let union = report(&union_set)?;
    let parts: Vec<ContentReport> = parts.iter().map(report).collect::<Result<_>>()?;
    let sum_lower: f64 = parts.iter().map(|p| p.lower).sum();
    let sum_upper: f64 = parts.iter().map(|p| p.upper).sum();
    let budget = union.lower_budget.max(union.upper_budget)
        + parts
            .iter()
            .map(|p| p.lower_budget.max(p.upper_budget))
            .sum::<f64>();
    let gap_lo = (union.lower - sum_lower).abs();
    let gap_hi = (union.upper - sum_upper).abs();
    let verdict = if union.divergent || parts.iter().any(|p| p.divergent) {
        if union.divergent && parts.iter().any(|p| p.divergent) {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        }
    } else if gap_lo.max(gap_hi) <= budget {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(DecompositionReport {
        relative_gap: (gap_lo / sum_lower.abs(), gap_hi / sum_upper.abs()),
        union,
        parts,
        sum_lower,
        sum_upper,
        budget,
        verdict,
    })
}

/// Parts must keep a positive distance (beyond the sampling resolution).
fn check_separated<const D: usize>(parts: &[CompactSet<D>], spacing: f64) -> Result<()> {
    let sites: Vec<Vec<_>> = parts
        .iter()
        .map(|p| sample_boundary(p, spacing / 2.0))
        .collect::<Result<_>>()?;
    for i in 0..parts.len() {
        let index = SiteIndex::new(sites[i].clone());
        for j in (i + 1)..parts.len() {
            let gap = sites[j]
                .iter()
                .filter_map(|x| index.nearest_euclidean(x).map(|(d, _)| d))
                .fold(f64::INFINITY, f64::min);
            let inside = sites[j].iter().any(|x| parts[i].interior_contains(x))
                || sites[i].iter().any(|x| parts[j].interior_contains(x));
            if gap <= spacing || inside {
                return Err(Error::OverlappingParts(format!(
                    "parts {i} and {j} are {gap} apart"
                )));
            }
        }
    }
    Ok(())
}

/// Radii suited to a field: geometric with `per_octave` steps, from the
/// resolution guard (or `r_min`, if larger) to `r_max` or the padding limit.
pub fn default_radii(
    sub: &SublevelVolumes,
    r_min: Option<f64>,
    r_max: Option<f64>,
    per_octave: usize,
) -> Result<Vec<f64>> {
    let lo = r_min.unwrap_or(0.0).max(sub.resolution_guard());
    let hi = r_max.unwrap_or(f64::INFINITY).min(sub.max_radius());
    geometric_radii(lo, hi, per_octave)
}

/// JSON numbers cannot be infinite: `±∞` and NaN are written as strings.
mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad number `{other}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ProfileMeta;

    fn homogeneous(lam: f64, n: usize) -> VolumeProfile {
        let radii = geometric_radii(0.01, 0.32, 4).unwrap();
        let meta = ProfileMeta::closed_form(n, "point", "body", lam, 0.0);
        let nf = n as f64;
        VolumeProfile::from_exact(&radii, 0.0, meta, |r| {
            (lam * r.powi(n as i32), nf * lam * r.powi(n as i32 - 1))
        })
        .unwrap()
    }

    #[test]
    fn point_contents() {
        let p = homogeneous(4.0, 2);
        for kind in ContentKind::ALL {
            let rep = content_estimate(&p, 0.0, kind).unwrap();
            assert!(
                (rep.lower - 4.0).abs() < 1e-12 && (rep.upper - 4.0).abs() < 1e-12,
                "{kind:?}"
            );
            assert!(!rep.divergent);
        }
        let full = content_estimate(&p, 2.0, ContentKind::Minkowski).unwrap();
        assert!((full.lower - 4.0 * 0.0001).abs() < 1e-15);
        assert!(matches!(
            content_estimate(&p, 2.0, ContentKind::SContent),
            Err(Error::SOutOfRange { .. })
        ));
        assert!(matches!(
            content_estimate(&p, 2.5, ContentKind::Minkowski),
            Err(Error::SOutOfRange { .. })
        ));
    }

    #[test]
    fn below_dimension_diverges() {
        // a segment: V ≈ 2r, so V/r^{2-s} → ∞ for s < 1
        let radii = geometric_radii(1e-4, 0.1, 4).unwrap();
        let meta = ProfileMeta::closed_form(2, "segment", "body", 4.0, 0.0);
        let p = VolumeProfile::from_exact(&radii, 0.0, meta, |r| {
            (2.0 * r + 4.0 * r * r, 2.0 + 8.0 * r)
        })
        .unwrap();
        let rep = content_estimate(&p, 0.5, ContentKind::Minkowski).unwrap();
        assert!(rep.divergent && rep.lower.is_infinite());
        let rep = content_estimate(&p, 1.0, ContentKind::Minkowski).unwrap();
        assert!(!rep.divergent && (rep.lower - 2.0).abs() < 0.01);
        let json =
            serde_json::to_string(&content_estimate(&p, 0.5, ContentKind::SContent).unwrap())
                .unwrap();
        assert!(json.contains("\"lower\":\"inf\""));
        let back: ContentReport = serde_json::from_str(&json).unwrap();
        assert!(back.lower.is_infinite());
    }

    #[test]
    fn too_few_octaves() {
        let radii = geometric_radii(0.1, 0.4, 8).unwrap();
        let meta = ProfileMeta::closed_form(2, "p", "b", 1.0, 0.0);
        let p = VolumeProfile::from_exact(&radii, 0.0, meta, |r| (r * r, 2.0 * r)).unwrap();
        assert!(matches!(
            content_estimate(&p, 0.0, ContentKind::Minkowski),
            Err(Error::InsufficientOctaves { .. })
        ));
        assert!(dimension_estimate(&p).is_err());
    }

    #[test]
    fn octave_rows_cover_profile() {
        let p = homogeneous(1.0, 2);
        let rep = content_estimate(&p, 0.0, ContentKind::Minkowski).unwrap();
        assert_eq!(rep.octave_table.len(), 5);
        assert_eq!(rep.octave_table[0].samples, 5);
        assert!((rep.window.1 - 0.02).abs() < 1e-12);
    }

    #[test]
    fn dimension_of_homogeneous_profile() {
        let d = dimension_estimate(&homogeneous(2.0, 2)).unwrap();
        assert!(d.dimension.abs() < 1e-9 && d.residual < 1e-12);
        assert!(d.dim_lower.abs() < 1e-9 && d.dim_upper.abs() < 1e-9);
    }

    #[test]
    fn normalization_constants() {
        let pi = std::f64::consts::PI;
        assert!((Normalization::Omega.multiplier(2.0) - 1.0 / pi).abs() < 1e-14);
        assert!((Normalization::Omega.multiplier(1.0) - 0.5).abs() < 1e-14);
        assert!((Normalization::OmegaPrinted.multiplier(2.0) - 2.0 / pi).abs() < 1e-14);
        assert_eq!(Normalization::None.multiplier(1.3), 1.0);
    }

    #[test]
    fn kneser_homogeneous_and_corrupted() {
        let v = ExactVolume {
            f: |r: f64| 4.0 * r * r,
            range: (0.01, 10.0),
        };
        let rep = kneser_check(&v, 2, 2000, 1).unwrap();
        assert!(rep.holds() && rep.max_excess.abs() < 1e-12);
        let bad = StepCorrupted {
            inner: v,
            at: 1.0,
            height: 0.5,
        };
        assert!(!kneser_check(&bad, 2, 2000, 1).unwrap().holds());
        let narrow = ExactVolume {
            f: |r: f64| r,
            range: (1.0, 1.0),
        };
        assert!(matches!(
            kneser_check(&narrow, 2, 200, 0),
            Err(Error::RangeTooNarrow { .. })
        ));
        let v = ExactVolume {
            f: |r: f64| r,
            range: (1.0, 2.0),
        };
        assert!(matches!(
            kneser_check(&v, 2, 10, 0),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn verdict_rules() {
        use Method::*;
        assert_eq!(
            InequalityCheck::new("x", 1.0, 2.0, 0.1, Grid).verdict,
            Verdict::Holds
        );
        assert_eq!(
            InequalityCheck::new("x", 2.0, 1.95, 0.1, Grid).verdict,
            Verdict::Inconclusive
        );
        assert_eq!(
            InequalityCheck::new("x", 2.0, 1.0, 0.1, Grid).verdict,
            Verdict::Violated
        );
        let eq = InequalityCheck::new("x", 1.0 + 1e-13, 1.0, 0.0, ClosedForm);
        assert_eq!(eq.verdict, Verdict::Holds);
        assert!(eq.equality);
        assert_eq!(
            InequalityCheck::new("x", 1.0, f64::INFINITY, 0.0, ClosedForm).verdict,
            Verdict::Holds
        );
        assert_eq!(
            InequalityCheck::new("x", f64::INFINITY, 1.0, 0.0, Grid).verdict,
            Verdict::Violated
        );
        assert_eq!(
            Verdict::Holds.combine(Verdict::Inconclusive),
            Verdict::Inconclusive
        );
    }

    #[test]
    fn ledger_on_points() {
        let p = homogeneous(4.0, 2);
        let reports = ledger_reports(&p, 0.0).unwrap();
        let ledger = inequality_ledger(0.0, &reports, 4.0, 0.0).unwrap();
        assert_eq!(ledger.verdict, Verdict::Holds);
        assert!(ledger.lemma36.checks.iter().all(|c| c.equality));
    }

    #[test]
    fn ledger_rejects_mixed_reports() {
        let a = exact_report(1.0, ContentKind::Minkowski, 2, 1.0, 1.0, "a", "c");
        let b = exact_report(1.0, ContentKind::SContent, 2, 1.0, 1.0, "b", "c");
        assert!(matches!(
            inequality_ledger(1.0, &[a, b], 1.0, 0.0),
            Err(Error::MismatchedReports(_))
        ));
    }

    #[test]
    fn kappa_monotone_for_exact_profile() {
        let rep = kappa_monotonicity(&homogeneous(4.0, 2));
        assert!(rep.holds);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let (m, b, res) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((m - 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15 && res < 1e-15);
    }
}
