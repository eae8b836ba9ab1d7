//! Job configuration and the pipelines behind the `aniso` subcommands.
//!
//! A [`JobConfig`] fully describes one run. Every JSON artifact embeds the
//! config under `"config"`, so [`JobConfig::from_metadata`] can rebuild it.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::body::{BodySpec, ConvexBody};
use crate::closed_form::{
    alpha_sweep, body_dilation_profile, gasket_content_limits, gasket_volume_profile,
    triangle_tube, triangle_volume_profile, AlphaSweep, GasketLimits, GasketProfile,
    TriangleAnisotropy, TriangleVariant, GASKET_DIMENSION,
};
use crate::contents::{
    content_estimate_with, dimension_estimate, exact_report, inequality_ledger, kappa_monotonicity,
    kneser_check, ledger_reports, ContentKind, ContentOptions, ContentReport, DimensionReport,
    ExactVolume, KneserReport, KneserViolation, Ledger, MonotonicityReport, Normalization,
    StepCorrupted, Verdict, VolumeFunction,
};
use crate::error::{Error, Result};
use crate::field::{
    distance_field, fmt17, geometric_radii, profile_from_sublevels, Grid, Method, ProfileMeta,
    SublevelVolumes, VolumeProfile,
};
use crate::set::{CompactSet, PolygonRegion, SetSpec};

/// Environment variable consulted when no thread count is configured.
pub const THREADS_ENV: &str = "ANISO_THREADS";
/// Level and resolution of the α-sweep reported by `gasket-exact`.
pub const SWEEP_LEVEL: u32 = 40;
pub const SWEEP_POINTS: usize = 10_000;
/// Closed-form profiles span this many octaves below `r_max` by default.
const EXACT_OCTAVES: i32 = 20;
/// Violations listed verbatim in the verify output.
const LISTED_VIOLATIONS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Profile,
    Content,
    Verify,
    GasketExact,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Content => "content",
            Command::Verify => "verify",
            Command::GasketExact => "gasket-exact",
        }
    }
}

fn default_set() -> String {
    "gasket:12".into()
}

fn default_body() -> String {
    "disk64".into()
}

fn default_per_octave() -> usize {
    4
}

fn default_trials() -> usize {
    10_000
}

fn default_method() -> Method {
    Method::Grid
}

/// One run of a subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    /// Set spec: preset, inline JSON or JSON file (see [`SetSpec::parse`]);
    /// `body` means `E = C`.
    #[serde(default = "default_set")]
    pub set: String,
    /// Body spec: preset, inline JSON or JSON file (see [`BodySpec::parse`]).
    #[serde(default = "default_body")]
    pub body: String,
    #[serde(default)]
    pub grid_h: Option<f64>,
    #[serde(default)]
    pub pad: Option<f64>,
    #[serde(default)]
    pub rmin: Option<f64>,
    #[serde(default)]
    pub rmax: Option<f64>,
    #[serde(default = "default_per_octave")]
    pub per_octave: usize,
    /// Content exponents; empty means the natural dimension of the set.
    #[serde(default)]
    pub s: Vec<f64>,
    /// Restricts `content` to one kind.
    #[serde(default)]
    pub kind: Option<ContentKind>,
    /// Output directory; `None` writes to stdout.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub normalize: Normalization,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Kneser samples for `verify`.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Negative control for `verify`: adds a step of this relative height to `V`.
    #[serde(default)]
    pub inject_step: Option<f64>,
}

impl JobConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            set: default_set(),
            body: default_body(),
            grid_h: None,
            pad: None,
            rmin: None,
            rmax: None,
            per_octave: default_per_octave(),
            s: Vec::new(),
            kind: None,
            out: None,
            seed: 0,
            threads: None,
            normalize: Normalization::None,
            method: Method::Grid,
            trials: default_trials(),
            inject_step: None,
        }
    }

    /// Recovers the config embedded in an emitted JSON artifact.
    pub fn from_metadata(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Envelope {
            config: JobConfig,
        }
        Ok(serde_json::from_str::<Envelope>(json)?.config)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
            _ => Ok(()),
        };
        positive("--grid-h", self.grid_h)?;
        positive("--pad", self.pad)?;
        positive("--rmin", self.rmin)?;
        positive("--rmax", self.rmax)?;
        if let (Some(lo), Some(hi)) = (self.rmin, self.rmax) {
            if lo >= hi {
                return Err(Error::Config(format!(
                    "--rmin {lo} must be below --rmax {hi}"
                )));
            }
        }
        if self.per_octave == 0 {
            return Err(Error::Config("--per-octave must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        if let Some(h) = self.inject_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config(format!(
                    "--inject-step must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }
}

/// Grid and radii actually used, after defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub method: Method,
    pub cell_size: Option<f64>,
    pub padding: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub per_octave: usize,
    pub radii: usize,
    pub threads: usize,
}

/// Result of a run: files written, text for stdout, and the process exit code.
#[derive(Clone, Debug)]
pub struct JobOutcome {
    pub files: Vec<PathBuf>,
    pub stdout: String,
    pub verdict: Option<Verdict>,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub config: JobConfig,
    pub resolved: Resolved,
    pub profile: ProfileMeta,
    pub volume_at_zero: f64,
}

/// Ledger verdicts attached to a content report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub lemma36: Verdict,
    pub lemma38: Verdict,
    pub thm39: Verdict,
    pub prop41: Verdict,
}

impl From<&Ledger> for Verdicts {
    fn from(l: &Ledger) -> Self {
        Self {
            lemma36: l.lemma36.verdict,
            lemma38: l.lemma38.verdict,
            thm39: l.thm39.verdict,
            prop41: l.prop41.verdict,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentEntry {
    #[serde(flatten)]
    pub report: ContentReport,
    pub verdicts: Option<Verdicts>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentOutput {
    pub config: JobConfig,
    pub resolved: Resolved,
    pub reports: Vec<ContentEntry>,
    pub ledgers: Vec<Ledger>,
    pub dimension: Option<DimensionReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InjectedStep {
    pub at: f64,
    pub height: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KneserSummary {
    pub trials: usize,
    pub seed: u64,
    pub range: (f64, f64),
    pub violation_count: usize,
    pub max_excess: f64,
    pub violations: Vec<KneserViolation>,
    pub injected_step: Option<InjectedStep>,
}

impl KneserSummary {
    fn new(report: KneserReport, injected_step: Option<InjectedStep>) -> Self {
        Self {
            trials: report.trials,
            seed: report.seed,
            range: report.range,
            violation_count: report.violations.len(),
            max_excess: report.max_excess,
            violations: report
                .violations
                .into_iter()
                .take(LISTED_VIOLATIONS)
                .collect(),
            injected_step,
        }
    }
}

/// The exact gasket content limits and whether they are strictly ordered.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrictChain {
    pub s_lower: f64,
    pub m_lower: f64,
    pub m_upper: f64,
    pub s_upper: f64,
    pub strict: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub config: JobConfig,
    pub resolved: Resolved,
    pub ledgers: Vec<Ledger>,
    pub kneser: KneserSummary,
    pub kappa: MonotonicityReport,
    pub strict_chain: Option<StrictChain>,
    pub verdict: Verdict,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GasketOutput {
    pub config: JobConfig,
    pub dimension: f64,
    pub u2: f64,
    pub body_volume: f64,
    pub b: f64,
    pub c: f64,
    pub hole_radius: f64,
    pub limits: GasketLimits,
    /// `[S_lower, M_lower, M_upper, S_upper]` divided by `u₂^{2-D}`.
    pub coefficients: [f64; 4],
    pub strict: bool,
    pub sweep: AlphaSweep,
    pub r_min: f64,
    pub r_max: f64,
}

/// Runs the configured subcommand inside a pool of the configured size.
pub fn run(config: &JobConfig) -> Result<JobOutcome> {
    config.validate()?;
    let threads = thread_count(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(config, threads))
}

fn thread_count(config: &JobConfig) -> Result<usize> {
    if let Some(t) = config.threads {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        _ => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

fn dispatch(config: &JobConfig, threads: usize) -> Result<JobOutcome> {
    if config.command == Command::GasketExact {
        return gasket_exact(config);
    }
    let spec = BodySpec::parse(&config.body)?;
    match spec.dimension {
        2 => run_in::<2>(config, &spec, threads),
        3 => run_in::<3>(config, &spec, threads),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn run_in<const D: usize>(
    config: &JobConfig,
    spec: &BodySpec,
    threads: usize,
) -> Result<JobOutcome> {
    let body = spec.build::<D>()?;
    let prepared = prepare(config, &body, threads)?;
    match config.command {
        Command::Profile => emit_profile(config, &prepared),
        Command::Content => emit_content(config, &prepared),
        Command::Verify => emit_verify(config, &prepared),
        Command::GasketExact => unreachable!("handled before the dimension dispatch"),
    }
}

/// Exact volume functions for the sets with closed forms.
#[derive(Clone, Debug)]
enum ExactModel {
    Gasket(GasketProfile),
    Triangle(TriangleAnisotropy, TriangleVariant),
    Dilation { volume: f64, dimension: i32 },
}

impl ExactModel {
    fn volume(&self, r: f64) -> f64 {
        match self {
            ExactModel::Gasket(g) => g.evaluate_on(g.level(r), r).0,
            ExactModel::Triangle(t, v) => triangle_tube(t, r, *v).map(|p| p.0).unwrap_or(f64::NAN),
            ExactModel::Dilation { volume, dimension } => volume * (1.0 + r).powi(*dimension),
        }
    }
}

/// A profile plus what `verify` needs beyond it.
struct Prepared {
    profile: VolumeProfile,
    volumes: Option<SublevelVolumes>,
    exact: Option<ExactModel>,
    resolved: Resolved,
    natural_s: f64,
}

fn prepare<const D: usize>(
    config: &JobConfig,
    body: &ConvexBody<D>,
    threads: usize,
) -> Result<Prepared> {
    match config.method {
        Method::Grid => grid_prepared(config, body, threads),
        Method::ClosedForm => exact_prepared(config, body, threads),
    }
}

fn build_set<const D: usize>(config: &JobConfig, body: &ConvexBody<D>) -> Result<CompactSet<D>> {
    if config.set.trim() == "body" {
        if D != 2 {
            return Err(Error::UnsupportedSet(
                "`body` as a grid set is planar only".into(),
            ));
        }
        let ring: Vec<[f64; 2]> = body.vertices().iter().map(|v| [v[0], v[1]]).collect();
        return CompactSet::polygon(PolygonRegion::new(ring, Vec::new())?);
    }
    SetSpec::parse(&config.set)?.build::<D>()
}

/// The exponent at which the set's content is expected to be finite and
/// positive: `0` for points, `1` for segments, the similarity dimension for
/// prefractals and `n - 1` (the perimeter scale) for sets with interior.
pub fn natural_dimension<const D: usize>(set: &CompactSet<D>) -> f64 {
    match set {
        CompactSet::Points(_) => 0.0,
        CompactSet::Segments(_) => 1.0,
        CompactSet::Polygons(_) | CompactSet::Voxels(_) => D as f64 - 1.0,
        CompactSet::Prefractal { ifs, .. } => ifs.similarity_dimension(),
        CompactSet::Union(parts) => parts.iter().map(natural_dimension).fold(0.0, f64::max),
    }
}

fn grid_prepared<const D: usize>(
    config: &JobConfig,
    body: &ConvexBody<D>,
    threads: usize,
) -> Result<Prepared> {
    let set = build_set(config, body)?;
    let scale = set.bounding_diameter().max(1.0);
    let h = config
        .grid_h
        .unwrap_or(scale / if D == 2 { 1024.0 } else { 128.0 });
    let r_max = config.rmax.unwrap_or(0.25 * scale);
    let (a, b) = (body.inradius(), body.outradius());
    let pad = match config.pad {
        Some(p) if p < r_max * b => {
            return Err(Error::Config(format!(
                "padding {p} is below r_max * outradius = {}",
                r_max * b
            )))
        }
        Some(p) => p,
        // covers the right-difference step at r_max and the cell diagonal
        None => (r_max * 1.002 + h * a) * b + 2.0 * h,
    };
    let grid = Grid::covering(&set, h, pad)?;
    let field = distance_field(&set, body, &grid)?;
    let sub = field.sublevel_volumes();
    let r_min = config.rmin.unwrap_or_else(|| sub.resolution_guard());
    if r_min < sub.resolution_guard() * (1.0 - 1e-12) {
        return Err(Error::RadiusBelowResolution {
            r: r_min,
            guard: sub.resolution_guard(),
        });
    }
    let radii = geometric_radii(r_min, r_max, config.per_octave)?;
    let profile = profile_from_sublevels(&sub, &radii, field.meta(&config.body))?;
    let resolved = Resolved {
        method: Method::Grid,
        cell_size: Some(h),
        padding: Some(pad),
        r_min: radii[0],
        r_max,
        per_octave: config.per_octave,
        radii: radii.len(),
        threads,
    };
    Ok(Prepared {
        profile,
        volumes: Some(sub),
        exact: None,
        resolved,
        natural_s: natural_dimension(&set),
    })
}

fn exact_prepared<const D: usize>(
    config: &JobConfig,
    body: &ConvexBody<D>,
    threads: usize,
) -> Result<Prepared> {
    let name = config.set.trim();
    let planar = || -> Result<ConvexBody<2>> {
        let rows: Vec<Vec<f64>> = body.vertices().iter().map(|v| v.to_vec()).collect();
        if D != 2 {
            return Err(Error::UnsupportedSet(format!(
                "no closed form for `{name}` in dimension {D}"
            )));
        }
        ConvexBody::from_rows(&rows)
    };
    let default_range = |top: f64| {
        let r_max = config.rmax.unwrap_or(top);
        let r_min = config.rmin.unwrap_or(r_max * 2f64.powi(-EXACT_OCTAVES));
        (r_min, r_max)
    };
    let (model, natural_s, (r_min, r_max)) = if name == "body" {
        let model = ExactModel::Dilation {
            volume: body.volume(),
            dimension: D as i32,
        };
        (model, D as f64 - 1.0, default_range(1.0))
    } else if name == "triangle" || name == "triangle-boundary" {
        let t = TriangleAnisotropy::new(&planar()?, 1.0)?;
        let (variant, top, s) = if name == "triangle" {
            (TriangleVariant::Filled, 1.0, 1.0)
        } else {
            (TriangleVariant::Boundary, t.boundary_validity(), 1.0)
        };
        (ExactModel::Triangle(t, variant), s, default_range(top))
    } else if let Ok(SetSpec::Gasket { .. }) = SetSpec::parse(name) {
        let g = GasketProfile::new(&planar()?);
        let top = g.hole_radius();
        (ExactModel::Gasket(g), GASKET_DIMENSION, default_range(top))
    } else {
        return Err(Error::UnsupportedSet(format!(
            "no closed form for `{name}`; use gasket, triangle, triangle-boundary or body"
        )));
    };
    let radii = geometric_radii(r_min, r_max, config.per_octave)?;
    let label = &config.body;
    let profile = match &model {
        ExactModel::Gasket(g) => gasket_volume_profile(g, &radii, label)?,
        ExactModel::Triangle(t, v) => triangle_volume_profile(t, *v, &radii, label)?,
        ExactModel::Dilation { .. } => body_dilation_profile(body, &radii, label)?,
    };
    let resolved = Resolved {
        method: Method::ClosedForm,
        cell_size: None,
        padding: None,
        r_min: radii[0],
        r_max,
        per_octave: config.per_octave,
        radii: radii.len(),
        threads,
    };
    Ok(Prepared {
        profile,
        volumes: None,
        exact: Some(model),
        resolved,
        natural_s,
    })
}

fn s_values(config: &JobConfig, prepared: &Prepared) -> Result<Vec<f64>> {
    let n = prepared.profile.dimension();
    let s = if config.s.is_empty() {
        vec![prepared.natural_s]
    } else {
        config.s.clone()
    };
    for &v in &s {
        if !(0.0..=n as f64).contains(&v) {
            return Err(Error::SOutOfRange { s: v, n });
        }
    }
    Ok(s)
}

/// Ledger at `s`, using the exact gasket limits where they apply.
fn ledger_at(prepared: &Prepared, s: f64) -> Result<Option<Ledger>> {
    let profile = &prepared.profile;
    let n = profile.dimension() as f64;
    if s >= n {
        return Ok(None);
    }
    let mut reports = ledger_reports(profile, s)?;
    if let (Some(ExactModel::Gasket(g)), true) =
        (&prepared.exact, (s - GASKET_DIMENSION).abs() < 1e-12)
    {
        let l = gasket_content_limits(g);
        let exact: Vec<ContentReport> = gasket_exact_reports(&l, profile);
        reports.retain(|r| (r.s - s).abs() >= 1e-12);
        reports.extend(exact);
    }
    inequality_ledger(
        s,
        &reports,
        profile.meta.body_volume,
        profile.meta.set_volume,
    )
    .map(Some)
}

fn gasket_exact_reports(l: &GasketLimits, profile: &VolumeProfile) -> Vec<ContentReport> {
    let (set, body) = (&profile.meta.set, &profile.meta.body);
    let d = GASKET_DIMENSION;
    vec![
        exact_report(
            d,
            ContentKind::Minkowski,
            2,
            l.m_lower,
            l.m_upper,
            set,
            body,
        ),
        exact_report(
            d,
            ContentKind::OuterMinkowski,
            2,
            l.m_lower,
            l.m_upper,
            set,
            body,
        ),
        exact_report(d, ContentKind::SContent, 2, l.s_lower, l.s_upper, set, body),
    ]
}

fn emit_profile(config: &JobConfig, prepared: &Prepared) -> Result<JobOutcome> {
    let mut csv = Vec::new();
    prepared.profile.write_csv(&mut csv)?;
    let meta = ProfileMetadata {
        config: config.clone(),
        resolved: prepared.resolved.clone(),
        profile: prepared.profile.meta.clone(),
        volume_at_zero: prepared.profile.volume_at_zero,
    };
    let json = serde_json::to_string_pretty(&meta)?;
    finish(
        config,
        vec![("profile.csv", csv), ("profile.json", json.into_bytes())],
        0,
        None,
        0,
    )
}

fn emit_content(config: &JobConfig, prepared: &Prepared) -> Result<JobOutcome> {
    let profile = &prepared.profile;
    let n = profile.dimension() as f64;
    let opts = ContentOptions {
        normalization: config.normalize,
        ..ContentOptions::default()
    };
    let mut reports = Vec::new();
    let mut ledgers = Vec::new();
    for s in s_values(config, prepared)? {
        let ledger = ledger_at(prepared, s)?;
        let verdicts = ledger.as_ref().map(Verdicts::from);
        let kinds: Vec<ContentKind> = match config.kind {
            Some(k) => vec![k],
            None => ContentKind::ALL
                .into_iter()
                .filter(|&k| !(k == ContentKind::SContent && s >= n))
                .collect(),
        };
        let exact = match (&prepared.exact, (s - GASKET_DIMENSION).abs() < 1e-12) {
            (Some(ExactModel::Gasket(g)), true) => {
                Some(gasket_exact_reports(&gasket_content_limits(g), profile))
            }
            _ => None,
        };
        for kind in kinds {
            let report = match exact
                .as_ref()
                .and_then(|e| e.iter().find(|r| r.kind == kind))
            {
                Some(r) => {
                    let mult = config.normalize.multiplier(n - s);
                    ContentReport {
                        lower: r.lower * mult,
                        upper: r.upper * mult,
                        normalization: config.normalize,
                        multiplier: mult,
                        ..r.clone()
                    }
                }
                None => content_estimate_with(profile, s, kind, &opts)?,
            };
            reports.push(ContentEntry { report, verdicts });
        }
        ledgers.extend(ledger);
    }
    let output = ContentOutput {
        config: config.clone(),
        resolved: prepared.resolved.clone(),
        reports,
        ledgers,
        dimension: dimension_estimate(profile).ok(),
    };
    let json = serde_json::to_string_pretty(&output)?;
    finish(
        config,
        vec![("content.json", json.into_bytes())],
        0,
        None,
        1,
    )
}

fn emit_verify(config: &JobConfig, prepared: &Prepared) -> Result<JobOutcome> {
    let profile = &prepared.profile;
    let n = profile.dimension();
    let mut ledgers = Vec::new();
    for s in s_values(config, prepared)? {
        ledgers.extend(ledger_at(prepared, s)?);
    }

    let volume: Box<dyn VolumeFunction> = match (&prepared.volumes, &prepared.exact) {
        (Some(sub), _) => Box::new(Clamped {
            inner: sub.clone(),
            range: (prepared.resolved.r_min, prepared.resolved.r_max),
        }),
        (None, Some(model)) => {
            let model = model.clone();
            Box::new(ExactVolume {
                f: move |r| model.volume(r),
                range: (prepared.resolved.r_min, prepared.resolved.r_max),
            })
        }
        (None, None) => unreachable!("every prepared profile carries a volume function"),
    };
    let (kneser, injected) = match config.inject_step {
        Some(rel) => {
            let (lo, hi) = volume.range();
            let at = (lo * hi).sqrt();
            let height = rel * volume.volume(hi);
            let corrupted = StepCorrupted {
                inner: volume,
                at,
                height,
            };
            let report = kneser_check(&corrupted, n, config.trials, config.seed)?;
            (report, Some(InjectedStep { at, height }))
        }
        None => (
            kneser_check(volume.as_ref(), n, config.trials, config.seed)?,
            None,
        ),
    };
    let kappa = kappa_monotonicity(profile);
    let strict_chain = match &prepared.exact {
        Some(ExactModel::Gasket(g)) => {
            let l = gasket_content_limits(g);
            Some(StrictChain {
                s_lower: l.s_lower,
                m_lower: l.m_lower,
                m_upper: l.m_upper,
                s_upper: l.s_upper,
                strict: l.strictly_ordered(),
            })
        }
        _ => None,
    };

    let mut verdict = ledgers
        .iter()
        .fold(Verdict::Holds, |v, l| v.combine(l.verdict));
    if !kneser.holds() || !kappa.holds {
        verdict = verdict.combine(Verdict::Violated);
    }
    let exit_code = verdict.exit_code();
    let output = VerifyOutput {
        config: config.clone(),
        resolved: prepared.resolved.clone(),
        ledgers,
        kneser: KneserSummary::new(kneser, injected),
        kappa,
        strict_chain,
        verdict,
        exit_code,
    };
    let json = serde_json::to_string_pretty(&output)?;
    finish(
        config,
        vec![("verify.json", json.into_bytes())],
        exit_code,
        Some(verdict),
        0,
    )
}

impl VolumeFunction for Box<dyn VolumeFunction> {
    fn volume(&self, r: f64) -> f64 {
        self.as_ref().volume(r)
    }

    fn budget(&self, r: f64) -> f64 {
        self.as_ref().budget(r)
    }

    fn range(&self) -> (f64, f64) {
        self.as_ref().range()
    }
}

/// A volume function restricted to the configured radius range.
struct Clamped<V> {
    inner: V,
    range: (f64, f64),
}

impl<V: VolumeFunction> VolumeFunction for Clamped<V> {
    fn volume(&self, r: f64) -> f64 {
        self.inner.volume(r)
    }

    fn budget(&self, r: f64) -> f64 {
        self.inner.budget(r)
    }

    fn range(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.range();
        (self.range.0.max(lo), self.range.1.min(hi))
    }
}

/// Exact gasket constants, the α-sweep and `(r, V, S)` over the requested range.
pub fn gasket_exact_output(config: &JobConfig) -> Result<(GasketOutput, VolumeProfile)> {
    let spec = BodySpec::parse(&config.body)?;
    let body = spec.build::<2>()?;
    let g = GasketProfile::new(&body);
    let limits = gasket_content_limits(&g);
    let sweep = alpha_sweep(&g, SWEEP_LEVEL, SWEEP_POINTS);
    let r_max = config.rmax.unwrap_or(2.0 * g.hole_radius());
    let r_min = config.rmin.unwrap_or(g.interval(10).0);
    let radii = geometric_radii(r_min, r_max, config.per_octave)?;
    let profile = gasket_volume_profile(&g, &radii, &config.body)?;
    let output = GasketOutput {
        config: config.clone(),
        dimension: g.dimension,
        u2: g.u2,
        body_volume: g.body_volume,
        b: g.b,
        c: g.c,
        hole_radius: g.hole_radius(),
        coefficients: limits.coefficients(),
        strict: limits.strictly_ordered(),
        limits,
        sweep,
        r_min: radii[0],
        r_max,
    };
    Ok((output, profile))
}

fn gasket_exact(config: &JobConfig) -> Result<JobOutcome> {
    let (output, profile) = gasket_exact_output(config)?;
    let mut csv = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(&mut csv);
        w.write_record(["r", "V_exact", "S_exact"])?;
        for i in 0..profile.len() {
            w.write_record([
                fmt17(profile.radii[i]),
                fmt17(profile.volume[i]),
                fmt17(profile.surface[i]),
            ])?;
        }
        w.flush()?;
    }
    let json = serde_json::to_string_pretty(&output)?;
    finish(
        config,
        vec![("gasket.json", json.into_bytes()), ("gasket.csv", csv)],
        0,
        None,
        0,
    )
}

/// Writes the artifacts into the output directory, or returns the one named
/// by `stdout_index` as text when there is none.
fn finish(
    config: &JobConfig,
    artifacts: Vec<(&str, Vec<u8>)>,
    exit_code: i32,
    verdict: Option<Verdict>,
    stdout_index: usize,
) -> Result<JobOutcome> {
    let stdout_index = stdout_index.min(artifacts.len() - 1);
    match &config.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut files = Vec::new();
            for (name, bytes) in &artifacts {
                let path = dir.join(name);
                write_atomic(&path, bytes)?;
                files.push(path);
            }
            Ok(JobOutcome {
                stdout: format!(
                    "{}: wrote {}\n",
                    config.command.name(),
                    files
                        .iter()
                        .map(|p| p.display().to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
                files,
                verdict,
                exit_code,
            })
        }
        None => Ok(JobOutcome {
            files: Vec::new(),
            stdout: String::from_utf8_lossy(&artifacts[stdout_index].1).into_owned(),
            verdict,
            exit_code,
        }),
    }
}

/// Writes via a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(set: &str) -> JobConfig {
        JobConfig {
            set: set.into(),
            method: Method::ClosedForm,
            trials: 2000,
            ..JobConfig::new(Command::Verify)
        }
    }

    #[test]
    fn config_round_trips_through_metadata() {
        let mut cfg = JobConfig::new(Command::Profile);
        cfg.s = vec![GASKET_DIMENSION, 0.5];
        cfg.rmin = Some(0.01);
        cfg.kind = Some(ContentKind::SContent);
        let json = serde_json::json!({ "config": cfg, "other": 1 }).to_string();
        assert_eq!(JobConfig::from_metadata(&json).unwrap(), cfg);
    }

    #[test]
    fn gasket_closed_form_verifies() {
        let out = run(&exact("gasket:12")).unwrap();
        assert_eq!(out.exit_code, 0, "{}", out.stdout);
        let v: VerifyOutput = serde_json::from_str(&out.stdout).unwrap();
        assert!(v.strict_chain.unwrap().strict);
        assert_eq!(v.kneser.violation_count, 0);
    }

    #[test]
    fn injected_step_is_caught() {
        let mut cfg = exact("gasket:12");
        cfg.inject_step = Some(0.05);
        assert_eq!(run(&cfg).unwrap().exit_code, 1);
    }

    #[test]
    fn body_equality_cases_are_flagged() {
        let out = run(&exact("body")).unwrap();
        assert_eq!(out.exit_code, 0, "{}", out.stdout);
        let v: VerifyOutput = serde_json::from_str(&out.stdout).unwrap();
        let prop = &v.ledgers[0].prop41.checks[0];
        assert!(prop.equality, "{prop:?}");
    }

    #[test]
    fn triangle_closed_forms_verify() {
        for set in ["triangle", "triangle-boundary"] {
            let out = run(&exact(set)).unwrap();
            assert_eq!(out.exit_code, 0, "{set}: {}", out.stdout);
        }
    }

    #[test]
    fn unsupported_closed_form_is_an_error() {
        assert!(matches!(
            run(&exact("points:3")),
            Err(Error::UnsupportedSet(_))
        ));
    }

    #[test]
    fn padding_below_reach_is_rejected() {
        let cfg = JobConfig {
            set: "point".into(),
            body: "square".into(),
            rmax: Some(0.5),
            pad: Some(0.6),
            ..JobConfig::new(Command::Profile)
        };
        // square outradius is √2, so 0.6 < 0.5·√2
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn natural_dimensions() {
        assert_eq!(
            natural_dimension(&SetSpec::parse("points:3").unwrap().build::<2>().unwrap()),
            0.0
        );
        assert_eq!(
            natural_dimension(&SetSpec::parse("square").unwrap().build::<2>().unwrap()),
            1.0
        );
        let g = SetSpec::parse("gasket:3").unwrap().build::<2>().unwrap();
        assert!((natural_dimension(&g) - GASKET_DIMENSION).abs() < 1e-12);
    }
}
