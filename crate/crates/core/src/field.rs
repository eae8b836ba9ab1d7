//! Anisotropic distance fields on regular grids and the volume profiles
//! `r ↦ (V(r), S(r), κ(r))` derived from them.
//!
//! The field stores `dist_C(x, E) = min_{y∈E} gauge_C(x - y)` at every cell
//! centre. `E` is represented by sample sites (see [`sample_boundary`]) plus
//! the interior of its positive-volume parts, which is set to zero directly.
//! Sorting the field once yields `V(r) = hⁿ · #{cells : value ≤ r}` for every
//! radius, and the surface term is the right difference quotient
//! `S(r) = (V(r+δ) - V(r)) / δ`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::index::{GaugeQuery, SiteIndex};
use crate::set::{sample_boundary, CompactSet};
use crate::vector::{self, dot, Vector};

/// Regular grid of `extents` cells of side `cell_size` starting at `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<const D: usize> {
    #[serde(with = "array_serde")]
    origin: Vector<D>,
    cell_size: f64,
    #[serde(with = "array_serde")]
    extents: [usize; D],
    padding: f64,
}

impl<const D: usize> Grid<D> {
    pub fn new(
        origin: Vector<D>,
        cell_size: f64,
        extents: [usize; D],
        padding: f64,
    ) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidGrid(format!("cell size {cell_size}")));
        }
        if extents.iter().any(|&e| e < 2) {
            return Err(Error::InvalidGrid(format!(
                "extents {extents:?}; need ≥ 2 per axis"
            )));
        }
        if !(padding >= 0.0) {
            return Err(Error::InvalidGrid(format!("padding {padding}")));
        }
        Ok(Self {
            origin,
            cell_size,
            extents,
            padding,
        })
    }

    /// Grid covering the bounding box of `set` enlarged by `padding`, with the
    /// origin snapped to a multiple of the cell size.
    pub fn covering(set: &CompactSet<D>, cell_size: f64, padding: f64) -> Result<Self> {
        let (lo, hi) = set.bounding_box().ok_or(Error::EmptySet)?;
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidGrid(format!("cell size {cell_size}")));
        }
        let mut origin = [0.0; D];
        let mut extents = [0usize; D];
        for i in 0..D {
            let first = ((lo[i] - padding) / cell_size).floor();
            let last = ((hi[i] + padding) / cell_size).ceil();
            origin[i] = first * cell_size;
            extents[i] = ((last - first) as usize).max(2);
        }
        Self::new(origin, cell_size, extents, padding)
    }

    pub fn origin(&self) -> &Vector<D> {
        &self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn extents(&self) -> &[usize; D] {
        &self.extents
    }

    pub fn padding(&self) -> f64 {
        self.padding
    }

    pub fn cell_count(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.powi(D as i32)
    }

    /// Centre of the cell with linear index `l` (axis 0 varies fastest).
    pub fn center(&self, l: usize) -> Vector<D> {
        let mut rem = l;
        let mut c = [0.0; D];
        for i in 0..D {
            let k = rem % self.extents[i];
            rem /= self.extents[i];
            c[i] = self.origin[i] + (k as f64 + 0.5) * self.cell_size;
        }
        c
    }

    fn upper(&self) -> Vector<D> {
        let mut u = self.origin;
        for i in 0..D {
            u[i] += self.extents[i] as f64 * self.cell_size;
        }
        u
    }

    /// Whether the box `[lo - margin, hi + margin]` fits inside the grid.
    fn contains_box(&self, lo: &Vector<D>, hi: &Vector<D>, margin: f64) -> bool {
        let up = self.upper();
        (0..D).all(|i| lo[i] - margin >= self.origin[i] - 1e-12 && hi[i] + margin <= up[i] + 1e-12)
    }
}

/// Per-cell anisotropic distance to a compact set.
#[derive(Clone, Debug)]
pub struct DistanceField<const D: usize> {
    grid: Grid<D>,
    values: Vec<f64>,
    site_spacing: f64,
    site_count: usize,
    inradius: f64,
    outradius: f64,
    body_volume: f64,
    set_volume: f64,
    set_label: String,
    cutoff: f64,
}

impl<const D: usize> DistanceField<D> {
    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn site_spacing(&self) -> f64 {
        self.site_spacing
    }

    pub fn value_at(&self, l: usize) -> f64 {
        self.values[l]
    }

    /// Smallest admissible radius: `2h/a`, raised to the scale below which a
    /// prefractal no longer resembles its limit set.
    pub fn resolution_guard(&self) -> f64 {
        (2.0 * self.grid.cell_size / self.inradius).max(self.cutoff)
    }

    /// Largest radius whose tube is guaranteed to stay inside the grid.
    pub fn radius_limit(&self) -> f64 {
        self.grid.padding / self.outradius
    }

    /// Sorted cell values; evaluates `V` at arbitrary radii.
    pub fn sublevel_volumes(&self) -> SublevelVolumes {
        let mut sorted = self.values.clone();
        sorted.par_sort_unstable_by(|a, b| a.total_cmp(b));
        SublevelVolumes {
            sorted,
            cell_volume: self.grid.cell_volume(),
            cell_size: self.grid.cell_size,
            dimension: D,
            inradius: self.inradius,
            site_spacing: self.site_spacing,
            guard: self.resolution_guard(),
            limit: self.radius_limit(),
        }
    }

    pub fn meta(&self, body_label: &str) -> ProfileMeta {
        ProfileMeta {
            method: Method::Grid,
            dimension: D,
            cell_size: Some(self.grid.cell_size),
            cell_count: self.grid.cell_count(),
            site_count: self.site_count,
            site_spacing: self.site_spacing,
            set: self.set_label.clone(),
            body: body_label.to_string(),
            body_volume: self.body_volume,
            inradius: self.inradius,
            outradius: self.outradius,
            set_volume: self.set_volume,
        }
    }

    /// Dumps the field: magic `ANISOFLD`, `u32` dimension, origin (`f64` × D),
    /// cell size (`f64`), extents (`u64` × D), then the values in row-major
    /// order (axis 0 fastest), all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"ANISOFLD")?;
        w.write_all(&(D as u32).to_le_bytes())?;
        for o in self.grid.origin {
            w.write_all(&o.to_le_bytes())?;
        }
        w.write_all(&self.grid.cell_size.to_le_bytes())?;
        for e in self.grid.extents {
            w.write_all(&(e as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Computes the field with sites sampled at half the cell size.
pub fn distance_field<const D: usize>(
    set: &CompactSet<D>,
    body: &ConvexBody<D>,
    grid: &Grid<D>,
) -> Result<DistanceField<D>> {
    distance_field_with_spacing(set, body, grid, grid.cell_size / 2.0)
}

pub fn distance_field_with_spacing<const D: usize>(
    set: &CompactSet<D>,
    body: &ConvexBody<D>,
    grid: &Grid<D>,
    spacing: f64,
) -> Result<DistanceField<D>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let (lo, hi) = set.bounding_box().ok_or(Error::EmptySet)?;
    if !grid.contains_box(&lo, &hi, 0.0) {
        return Err(Error::GridTooSmall("grid does not contain the set".into()));
    }
    let sites = sample_boundary(set, spacing)?;
    let site_count = sites.len();
    let index = SiteIndex::new(sites);
    let query = GaugeQuery::new(body);

    let mut edges = Vec::new();
    set.polygon_edges(&mut edges);
    let masks = set.voxel_masks();

    let line = grid.extents[0];
    let mut values = vec![0.0; grid.cell_count()];
    values
        .par_chunks_mut(line)
        .enumerate()
        .for_each(|(row, out)| {
            let first = row * line;
            let y0 = grid.center(first);
            let crossings = if D == 2 && !edges.is_empty() {
                row_crossings(&edges, y0[1])
            } else {
                Vec::new()
            };
            let mut hint = None;
            for (k, slot) in out.iter_mut().enumerate() {
                let mut c = y0;
                c[0] = grid.origin[0] + (k as f64 + 0.5) * grid.cell_size;
                let inside = (!crossings.is_empty()
                    && crossings.iter().filter(|&&x| c[0] < x).count() % 2 == 1)
                    || masks.iter().any(|m| m.contains(&c));
                if inside {
                    *slot = 0.0;
                    continue;
                }
                let (g, idx) = query.nearest(&index, &c, hint);
                hint = Some(idx);
                *slot = g;
            }
        });

    Ok(DistanceField {
        grid: grid.clone(),
        values,
        site_spacing: spacing,
        site_count,
        inradius: body.inradius(),
        outradius: body.outradius(),
        body_volume: body.volume(),
        set_volume: set.volume(),
        set_label: set.to_string(),
        cutoff: prefractal_cutoff(set),
    })
}

/// `4 ρ^depth` for prefractals (largest ratio `ρ`), zero for other sets.
pub fn prefractal_cutoff<const D: usize>(set: &CompactSet<D>) -> f64 {
    match set {
        CompactSet::Prefractal { ifs, depth, .. } => {
            let rho = ifs.maps().iter().map(|m| m.ratio()).fold(0.0, f64::max);
            4.0 * rho.powi(*depth as i32)
        }
        CompactSet::Union(parts) => parts.iter().map(prefractal_cutoff).fold(0.0, f64::max),
        _ => 0.0,
    }
}

/// Sorted x-coordinates where the horizontal line at `y` crosses polygon edges,
/// using the same half-open rule as the even-odd membership test.
fn row_crossings(edges: &[([f64; 2], [f64; 2])], y: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = edges
        .iter()
        .filter(|(a, b)| (a[1] > y) != (b[1] > y))
        .map(|(a, b)| a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]))
        .collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs
}

/// Field values sorted ascending; `V(r)` for any `r` by binary search.
#[derive(Clone, Debug)]
pub struct SublevelVolumes {
    sorted: Vec<f64>,
    cell_volume: f64,
    cell_size: f64,
    dimension: usize,
    inradius: f64,
    site_spacing: f64,
    guard: f64,
    limit: f64,
}

impl SublevelVolumes {
    /// `hⁿ · #{cells : value ≤ r}`.
    pub fn volume_at(&self, r: f64) -> f64 {
        self.cell_volume * self.sorted.partition_point(|&v| v <= r) as f64
    }

    /// Step of the right difference quotient at `r`.
    pub fn step(&self, r: f64) -> f64 {
        (self.cell_size * self.inradius).max(r * 1e-3)
    }

    pub fn surface_at(&self, r: f64) -> f64 {
        let d = self.step(r);
        (self.volume_at(r + d) - self.volume_at(r)) / d
    }

    /// First-order error budget for `V(r)`: cell-centre classification over a
    /// band of half-width `h√n/2` plus the site-sampling offset, both along a
    /// boundary of Euclidean length at most `S(r)/a`.
    pub fn error_budget(&self, r: f64) -> f64 {
        let per = self.surface_at(r) / self.inradius;
        per * (self.cell_size * (self.dimension as f64).sqrt() / 2.0 + self.site_spacing / 2.0)
    }

    /// Error budget for `S(r)`, relative size `2h/(a r)`.
    pub fn surface_budget(&self, r: f64) -> f64 {
        self.surface_at(r) * 2.0 * self.cell_size / (self.inradius * r)
    }

    pub fn resolution_guard(&self) -> f64 {
        self.guard
    }

    pub fn radius_limit(&self) -> f64 {
        self.limit
    }

    /// Largest `r` whose difference quotient stays inside the padded range.
    pub fn max_radius(&self) -> f64 {
        // r + max(h a, r/1000) ≤ limit
        (self.limit - self.cell_size * self.inradius).min(self.limit / 1.001)
    }

    pub fn volume_at_zero(&self) -> f64 {
        self.volume_at(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub method: Method,
    pub dimension: usize,
    pub cell_size: Option<f64>,
    pub cell_count: usize,
    pub site_count: usize,
    pub site_spacing: f64,
    pub set: String,
    pub body: String,
    pub body_volume: f64,
    pub inradius: f64,
    pub outradius: f64,
    /// Exact Lebesgue measure of `E` when known.
    pub set_volume: f64,
}

impl ProfileMeta {
    /// Metadata for profiles evaluated from exact formulas.
    pub fn closed_form(
        dimension: usize,
        set: &str,
        body: &str,
        body_volume: f64,
        set_volume: f64,
    ) -> Self {
        Self {
            method: Method::ClosedForm,
            dimension,
            cell_size: None,
            cell_count: 0,
            site_count: 0,
            site_spacing: 0.0,
            set: set.to_string(),
            body: body.to_string(),
            body_volume,
            inradius: 0.0,
            outradius: 0.0,
            set_volume,
        }
    }
}

/// Sampled `r ↦ (V, S, κ)` table with per-radius error budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeProfile {
    pub radii: Vec<f64>,
    pub volume: Vec<f64>,
    pub surface: Vec<f64>,
    pub kappa: Vec<f64>,
    pub volume_budget: Vec<f64>,
    pub surface_budget: Vec<f64>,
    /// `V(0) = λⁿ(E)` as seen by the same method.
    pub volume_at_zero: f64,
    pub meta: ProfileMeta,
}

impl VolumeProfile {
    pub fn dimension(&self) -> usize {
        self.meta.dimension
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Profile of exact `(V, S)` evaluations; budgets are zero.
    pub fn from_exact(
        radii: &[f64],
        volume_at_zero: f64,
        meta: ProfileMeta,
        eval: impl Fn(f64) -> (f64, f64),
    ) -> Result<Self> {
        check_increasing(radii)?;
        let n = meta.dimension as i32;
        let (volume, surface): (Vec<f64>, Vec<f64>) = radii.iter().map(|&r| eval(r)).unzip();
        let kappa = radii
            .iter()
            .zip(&surface)
            .map(|(&r, &s)| s / r.powi(n - 1))
            .collect();
        Ok(Self {
            radii: radii.to_vec(),
            volume,
            surface,
            kappa,
            volume_budget: vec![0.0; radii.len()],
            surface_budget: vec![0.0; radii.len()],
            volume_at_zero,
            meta,
        })
    }

    /// Writes `r,V,S,kappa,err_budget` as RFC-4180 CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(w);
        out.write_record(["r", "V", "S", "kappa", "err_budget"])?;
        for i in 0..self.len() {
            out.write_record([
                fmt17(self.radii[i]),
                fmt17(self.volume[i]),
                fmt17(self.surface[i]),
                fmt17(self.kappa[i]),
                fmt17(self.volume_budget[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_increasing(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidRadii("no radii".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidRadii(
            "radii must be positive and finite".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidRadii(
            "radii must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Builds the profile at the given radii from one sorted pass over the field.
pub fn volume_profile<const D: usize>(
    field: &DistanceField<D>,
    radii: &[f64],
    body_label: &str,
) -> Result<VolumeProfile> {
    let sub = field.sublevel_volumes();
    profile_from_sublevels(&sub, radii, field.meta(body_label))
}

pub fn profile_from_sublevels(
    sub: &SublevelVolumes,
    radii: &[f64],
    meta: ProfileMeta,
) -> Result<VolumeProfile> {
    check_increasing(radii)?;
    let guard = sub.resolution_guard();
    let limit = sub.radius_limit();
    for &r in radii {
        if r < guard * (1.0 - 1e-12) {
            return Err(Error::RadiusBelowResolution { r, guard });
        }
        if r + sub.step(r) > limit * (1.0 + 1e-12) {
            return Err(Error::RadiusExceedsPadding { r, limit });
        }
    }
    let n = sub.dimension as i32;
    let volume: Vec<f64> = radii.iter().map(|&r| sub.volume_at(r)).collect();
    let surface: Vec<f64> = radii.iter().map(|&r| sub.surface_at(r)).collect();
    let kappa = radii
        .iter()
        .zip(&surface)
        .map(|(&r, &s)| s / r.powi(n - 1))
        .collect();
    Ok(VolumeProfile {
        radii: radii.to_vec(),
        volume,
        surface,
        kappa,
        volume_budget: radii.iter().map(|&r| sub.error_budget(r)).collect(),
        surface_budget: radii.iter().map(|&r| sub.surface_budget(r)).collect(),
        volume_at_zero: sub.volume_at_zero(),
        meta,
    })
}

/// Geometric radii `r_max · 2^{-k/per_octave}` down to `r_min`, ascending.
pub fn geometric_radii(r_min: f64, r_max: f64, per_octave: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min) || per_octave == 0 {
        return Err(Error::InvalidRadii(format!(
            "need 0 < r_min < r_max and per_octave ≥ 1 (got {r_min}, {r_max}, {per_octave})"
        )));
    }
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let r = r_max * 2f64.powf(-(k as f64) / per_octave as f64);
        if r < r_min * (1.0 - 1e-12) {
            break;
        }
        out.push(r);
        k += 1;
    }
    out.reverse();
    Ok(out)
}

/// Monte-Carlo estimate of `λⁿ(E ⊕ rC)` with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub hits: usize,
    pub box_volume: f64,
}

pub const MIN_ORACLE_SAMPLES: usize = 10_000;
const ORACLE_CHUNK: usize = 4096;

/// Rejection-sampling oracle for the tube volume.
///
/// Membership in `E ⊕ rC` is decided by brute force over every element of
/// `E`: interiors are tested directly, points by their gauge distance and
/// planar segments exactly through the halfspaces of `[p,q] ⊕ rC`. No grid
/// and no spatial index is involved. Chunks draw from independent streams
/// derived from `seed`, so the result does not depend on the thread count.
pub fn minkowski_sum_oracle<const D: usize>(
    set: &CompactSet<D>,
    body: &ConvexBody<D>,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    if samples < MIN_ORACLE_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_ORACLE_SAMPLES,
            got: samples,
        });
    }
    let tester = OracleMembership::new(set, body, r)?;
    let (mut lo, mut hi) = set.bounding_box().ok_or(Error::EmptySet)?;
    let reach = r * body.outradius();
    for i in 0..D {
        lo[i] -= reach;
        hi[i] += reach;
    }
    let box_volume: f64 = (0..D).map(|i| hi[i] - lo[i]).product();
    let chunks = samples.div_ceil(ORACLE_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = ORACLE_CHUNK.min(samples - c * ORACLE_CHUNK);
            (0..count)
                .filter(|_| {
                    let mut x = [0.0; D];
                    for i in 0..D {
                        x[i] = rng.gen_range(lo[i]..hi[i]);
                    }
                    tester.contains(&x)
                })
                .count()
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        value: box_volume * p,
        std_error: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        hits,
        box_volume,
    })
}

struct OracleMembership<'a, const D: usize> {
    set: &'a CompactSet<D>,
    body: &'a ConvexBody<D>,
    r: f64,
    reach_sq: f64,
    points: Vec<Vector<D>>,
    segments: Vec<(Vector<D>, Vector<D>, f64)>,
}

impl<'a, const D: usize> OracleMembership<'a, D> {
    fn new(set: &'a CompactSet<D>, body: &'a ConvexBody<D>, r: f64) -> Result<Self> {
        let mut points = Vec::new();
        let mut segments = Vec::new();
        gather_elements(set, r, &mut points, &mut segments);
        let mut edges = Vec::new();
        set.polygon_edges(&mut edges);
        for (a, b) in edges {
            let mut p = [0.0; D];
            let mut q = [0.0; D];
            p[..2].copy_from_slice(&a);
            q[..2].copy_from_slice(&b);
            segments.push((p, q, 0.0));
        }
        for s in segments.iter_mut() {
            s.2 = vector::dist_sq(&s.0, &s.1);
        }
        let reach = r * body.outradius();
        Ok(Self {
            set,
            body,
            r,
            reach_sq: reach * reach,
            points,
            segments,
        })
    }

    fn contains(&self, x: &Vector<D>) -> bool {
        if self.set.has_interior() && self.set.interior_contains(x) {
            return true;
        }
        for y in &self.points {
            if vector::dist_sq(x, y) <= self.reach_sq
                && self.body.gauge_dual(&vector::sub(x, y)) <= self.r
            {
                return true;
            }
        }
        for (p, q, len_sq) in &self.segments {
            let d = vector::sub(q, p);
            let w = vector::sub(x, p);
            let t = if *len_sq > 0.0 {
                (dot(&w, &d) / len_sq).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let foot = vector::lerp(p, q, t);
            if vector::dist_sq(x, &foot) > self.reach_sq {
                continue;
            }
            if self.segment_tube_contains(&w, &d) {
                return true;
            }
        }
        false
    }

    /// `w ∈ [0, d] ⊕ rC` for planar bodies: the sum is cut out by the facets
    /// of `C` with offsets `r o + max(0, ν·d)` and the two normals `±d⊥`.
    fn segment_tube_contains(&self, w: &Vector<D>, d: &Vector<D>) -> bool {
        for f in self.body.facets() {
            if dot(&f.normal, w) > self.r * f.offset + dot(&f.normal, d).max(0.0) {
                return false;
            }
        }
        let mut perp = [0.0; D];
        perp[0] = -d[1];
        perp[1] = d[0];
        let neg = vector::scaled(&perp, -1.0);
        dot(&perp, w) <= self.r * self.body.support(&perp)
            && dot(&neg, w) <= self.r * self.body.support(&neg)
    }
}

fn gather_elements<const D: usize>(
    set: &CompactSet<D>,
    r: f64,
    points: &mut Vec<Vector<D>>,
    segments: &mut Vec<(Vector<D>, Vector<D>, f64)>,
) {
    match set {
        CompactSet::Points(p) => points.extend_from_slice(p),
        CompactSet::Segments(s) => {
            if D == 2 {
                segments.extend(s.iter().map(|[a, b]| (*a, *b, 0.0)));
            } else {
                // spatial segments: the facet description of [p,q] ⊕ rC is
                // incomplete, fall back to dense sampling
                let sub = CompactSet::Segments(s.clone());
                if let Ok(sites) = sample_boundary(&sub, r * 1e-3) {
                    points.extend(sites);
                }
            }
        }
        CompactSet::Voxels(_) => {
            if let Ok(sites) = sample_boundary(set, r * 1e-3) {
                points.extend(sites);
            }
        }
        CompactSet::Polygons(_) => {}
        CompactSet::Prefractal { realization, .. } => {
            gather_elements(realization, r, points, segments)
        }
        CompactSet::Union(parts) => parts
            .iter()
            .for_each(|p| gather_elements(p, r, points, segments)),
    }
}

mod array_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, T: Serialize, const D: usize>(
        v: &[T; D],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De, T, const D: usize>(d: De) -> Result<[T; D], De::Error>
    where
        De: Deserializer<'de>,
        T: Deserialize<'de> + Copy + Default,
    {
        let v = Vec::<T>::deserialize(d)?;
        if v.len() != D {
            return Err(serde::de::Error::custom(format!(
                "expected {D} entries, got {}",
                v.len()
            )));
        }
        let mut out = [T::default(); D];
        out.copy_from_slice(&v);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::unit_triangle;

    fn point_set() -> CompactSet<2> {
        CompactSet::Points(vec![[0.0, 0.0]])
    }

    #[test]
    fn single_site_field_is_the_gauge() {
        let set = point_set();
        let grid = Grid::new([-1.0, -1.0], 0.25, [8, 8], 1.0).unwrap();
        let sq = ConvexBody::square();
        let f = distance_field(&set, &sq, &grid).unwrap();
        for l in 0..grid.cell_count() {
            let c = grid.center(l);
            assert!((f.value_at(l) - sq.gauge(&c)).abs() < 1e-15);
        }
        // the cell centred at (0.625, -0.375) has sup-norm 0.625
        let l = 6 + 8 * 2;
        assert_eq!(grid.center(l), [0.625, -0.375]);
        assert!((f.value_at(l) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn union_field_is_pointwise_minimum() {
        let grid = Grid::new([-1.0, -1.0], 0.05, [60, 40], 1.0).unwrap();
        let body = ConvexBody::triangle();
        let a = distance_field(&CompactSet::Points(vec![[0.0, 0.0]]), &body, &grid).unwrap();
        let b = distance_field(&CompactSet::Points(vec![[1.0, 0.5]]), &body, &grid).unwrap();
        let ab = distance_field(
            &CompactSet::Points(vec![[0.0, 0.0], [1.0, 0.5]]),
            &body,
            &grid,
        )
        .unwrap();
        for l in 0..grid.cell_count() {
            assert_eq!(ab.value_at(l), a.value_at(l).min(b.value_at(l)));
        }
    }

    #[test]
    fn disk_field_tracks_euclidean_distance() {
        let grid = Grid::new([-1.0, -1.0], 0.02, [100, 100], 1.0).unwrap();
        let f = distance_field(&point_set(), &ConvexBody::disk64(), &grid).unwrap();
        let chord = 1.0 / (std::f64::consts::PI / 64.0).cos() - 1.0;
        for l in 0..grid.cell_count() {
            let c = grid.center(l);
            let e = vector::norm(&c);
            assert!((f.value_at(l) - e).abs() <= e * chord + 1e-12);
        }
    }

    #[test]
    fn grid_must_contain_set() {
        let grid = Grid::new([0.5, 0.5], 0.1, [10, 10], 0.0).unwrap();
        assert!(matches!(
            distance_field(&point_set(), &ConvexBody::square(), &grid),
            Err(Error::GridTooSmall(_))
        ));
        assert!(matches!(
            distance_field(
                &CompactSet::<2>::Points(vec![]),
                &ConvexBody::square(),
                &grid
            ),
            Err(Error::EmptySet)
        ));
        assert!(Grid::<2>::new([0.0, 0.0], 0.1, [1, 5], 0.0).is_err());
        assert!(Grid::<2>::new([0.0, 0.0], -0.1, [5, 5], 0.0).is_err());
    }

    #[test]
    fn point_profile_matches_homogeneous_volume() {
        let set = point_set();
        let sq = ConvexBody::square();
        let h = 1.0 / 256.0;
        let grid = Grid::covering(&set, h, 0.8 * sq.outradius()).unwrap();
        let f = distance_field(&set, &sq, &grid).unwrap();
        let p = volume_profile(&f, &[0.25, 0.5], "square").unwrap();
        // V = 4 r², within 2h times the perimeter 8r
        for (i, r) in [0.25, 0.5].iter().enumerate() {
            assert!((p.volume[i] - 4.0 * r * r).abs() <= 2.0 * h * 8.0 * r);
            assert!(
                (p.kappa[i] - 2.0 * 4.0).abs() / 8.0 < 0.05,
                "{}",
                p.kappa[i]
            );
        }
        assert!(matches!(
            volume_profile(&f, &[h], "square"),
            Err(Error::RadiusBelowResolution { .. })
        ));
        assert!(matches!(
            volume_profile(&f, &[0.797], "square"),
            Err(Error::RadiusExceedsPadding { .. })
        ));
        assert!(volume_profile(&f, &[0.3, 0.2], "square").is_err());
    }

    #[test]
    fn polygon_interior_is_zero() {
        let tri = crate::set::PolygonRegion::new(unit_triangle().to_vec(), vec![]).unwrap();
        let set = CompactSet::polygon(tri.clone()).unwrap();
        let grid = Grid::covering(&set, 1.0 / 64.0, 0.2).unwrap();
        let f = distance_field(&set, &ConvexBody::disk64(), &grid).unwrap();
        for l in 0..grid.cell_count() {
            let c = grid.center(l);
            if tri.contains(&c) {
                assert_eq!(f.value_at(l), 0.0);
            } else {
                assert!(f.value_at(l) > 0.0);
            }
        }
    }

    #[test]
    fn geometric_radii_are_dyadic() {
        let r = geometric_radii(0.01, 0.32, 4).unwrap();
        assert_eq!(r.len(), 21);
        assert!((r[0] - 0.01).abs() < 1e-15 && (r[20] - 0.32).abs() < 1e-15);
        assert!((r[4] / r[0] - 2.0).abs() < 1e-12);
        assert!(geometric_radii(0.5, 0.1, 4).is_err());
    }

    #[test]
    fn oracle_single_point_square() {
        let est =
            minkowski_sum_oracle(&point_set(), &ConvexBody::square(), 1.0, 20_000, 3).unwrap();
        assert!(
            (est.value - 4.0).abs() <= 3.0 * est.std_error + 1e-12,
            "{est:?}"
        );
        assert!(matches!(
            minkowski_sum_oracle(&point_set(), &ConvexBody::square(), 1.0, 100, 3),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn oracle_is_thread_independent() {
        let set = CompactSet::Segments(vec![[[0.0, 0.0], [1.0, 0.0]]]);
        let body = ConvexBody::disk64();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| minkowski_sum_oracle(&set, &body, 0.1, 30_000, 9).unwrap());
        let b = four.install(|| minkowski_sum_oracle(&set, &body, 0.1, 30_000, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn binary_dump_layout() {
        let grid = Grid::new([-1.0, -1.0], 0.5, [4, 4], 1.0).unwrap();
        let f = distance_field(&point_set(), &ConvexBody::square(), &grid).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"ANISOFLD");
        assert_eq!(buf.len(), 8 + 4 + 16 + 8 + 16 + 16 * 8);
        let last = f64::from_le_bytes(buf[buf.len() - 8..].try_into().unwrap());
        assert_eq!(last, f.value_at(15));
    }
}
