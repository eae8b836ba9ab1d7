//! Compact sets: point clouds, segment skeletons, polygon regions, voxel
//! masks and prefractals of iterated function systems.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::body::polygon_area;
use crate::error::{Error, Result};
use crate::vector::{self, cross2, Vector};

/// Largest gasket depth accepted by [`sierpinski_gasket`].
pub const MAX_GASKET_DEPTH: u32 = 14;

/// Upper bound on the number of elements an IFS iteration may produce.
pub const MAX_IFS_ELEMENTS: usize = 16_000_000;

/// A similarity `x ↦ ratio · R x + translation` with `R` orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity<const D: usize> {
    ratio: f64,
    linear: [[f64; D]; D],
    translation: Vector<D>,
}

impl<const D: usize> Similarity<D> {
    pub fn new(ratio: f64, rotation: [[f64; D]; D], translation: Vector<D>) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidIfs(format!("ratio {ratio} not in (0,1)")));
        }
        for i in 0..D {
            for j in 0..D {
                let g: f64 = (0..D).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).abs() > 1e-9 {
                    return Err(Error::InvalidIfs("rotation is not orthogonal".into()));
                }
            }
        }
        let mut linear = rotation;
        for row in linear.iter_mut() {
            for v in row.iter_mut() {
                *v *= ratio;
            }
        }
        Ok(Self {
            ratio,
            linear,
            translation,
        })
    }

    /// Homothety `x ↦ ratio · x + translation`.
    pub fn homothety(ratio: f64, translation: Vector<D>) -> Result<Self> {
        let mut id = [[0.0; D]; D];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self::new(ratio, id, translation)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    #[inline]
    pub fn apply(&self, x: &Vector<D>) -> Vector<D> {
        let mut out = self.translation;
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..D {
                *o += self.linear[i][j] * x[j];
            }
        }
        out
    }
}

impl Similarity<2> {
    /// Rotation by `angle` (radians) scaled by `ratio`, then translated.
    pub fn planar(ratio: f64, angle: f64, translation: [f64; 2]) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        Self::new(ratio, [[c, -s], [s, c]], translation)
    }
}

/// A finite nonempty family of contracting similarities.
#[derive(Clone, Debug, PartialEq)]
pub struct Ifs<const D: usize> {
    maps: Vec<Similarity<D>>,
}

impl<const D: usize> Ifs<D> {
    pub fn new(maps: Vec<Similarity<D>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidIfs("no maps".into()));
        }
        Ok(Self { maps })
    }

    pub fn maps(&self) -> &[Similarity<D>] {
        &self.maps
    }

    /// The `s` solving `Σ ρᵢˢ = 1` (the similarity dimension).
    pub fn similarity_dimension(&self) -> f64 {
        let pressure = |s: f64| self.maps.iter().map(|m| m.ratio.powf(s)).sum::<f64>() - 1.0;
        let (mut lo, mut hi) = (0.0, D as f64);
        if pressure(hi) >= 0.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pressure(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl Ifs<2> {
    /// The three half-scale maps generating the gasket on the unit triangle
    /// with base `[(0,0),(1,0)]`.
    pub fn sierpinski() -> Self {
        let h = 3f64.sqrt() / 4.0;
        let maps = [[0.0, 0.0], [0.5, 0.0], [0.25, h]]
            .into_iter()
            .map(|t| Similarity::homothety(0.5, t).unwrap())
            .collect();
        Self { maps }
    }

    /// Four quarter-scale maps onto the corners of the unit square.
    pub fn cantor_dust() -> Self {
        let maps = [[0.0, 0.0], [0.75, 0.0], [0.0, 0.75], [0.75, 0.75]]
            .into_iter()
            .map(|t| Similarity::homothety(0.25, t).unwrap())
            .collect();
        Self { maps }
    }
}

/// Polygonal region with an outer ring and holes.
///
/// The outer ring is stored counterclockwise and holes clockwise, so every
/// directed edge has the region on its left and the outward normal on its right.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonRegion {
    outer: Vec<[f64; 2]>,
    holes: Vec<Vec<[f64; 2]>>,
}

impl PolygonRegion {
    pub fn new(outer: Vec<[f64; 2]>, holes: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let mut outer = outer;
        let mut holes = holes;
        for ring in std::iter::once(&outer).chain(holes.iter()) {
            if ring.len() < 3 {
                return Err(Error::InvalidPolygon(format!(
                    "ring with {} vertices",
                    ring.len()
                )));
            }
            if ring.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPolygon("non-finite coordinate".into()));
            }
            if polygon_area(ring).abs() <= 1e-15 {
                return Err(Error::InvalidPolygon("ring has zero area".into()));
            }
        }
        if polygon_area(&outer) < 0.0 {
            outer.reverse();
        }
        for h in holes.iter_mut() {
            if polygon_area(h) > 0.0 {
                h.reverse();
            }
        }
        let region = Self { outer, holes };
        if region.has_crossing_edges() {
            return Err(Error::SelfIntersecting);
        }
        for h in &region.holes {
            if !h.iter().all(|p| point_in_ring(p, &region.outer)) {
                return Err(Error::InvalidPolygon("hole not inside outer ring".into()));
            }
        }
        Ok(region)
    }

    pub fn outer(&self) -> &[[f64; 2]] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<[f64; 2]>] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[[f64; 2]]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    /// Directed boundary edges, region on the left.
    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.rings()
            .flat_map(|r| (0..r.len()).map(move |i| (r[i], r[(i + 1) % r.len()])))
    }

    pub fn area(&self) -> f64 {
        self.rings().map(polygon_area).sum()
    }

    /// Even-odd membership test.
    pub fn contains(&self, p: &[f64; 2]) -> bool {
        self.rings().filter(|r| point_in_ring(p, r)).count() % 2 == 1
    }

    fn map(&self, f: impl Fn(&[f64; 2]) -> [f64; 2]) -> Self {
        let ring = |r: &[[f64; 2]]| r.iter().map(&f).collect::<Vec<_>>();
        let mut out = Self {
            outer: ring(&self.outer),
            holes: self.holes.iter().map(|h| ring(h)).collect(),
        };
        // reflections flip orientation
        if polygon_area(&out.outer) < 0.0 {
            out.outer.reverse();
            for h in out.holes.iter_mut() {
                h.reverse();
            }
        }
        out
    }

    fn has_crossing_edges(&self) -> bool {
        let edges: Vec<_> = self.edges().collect();
        let m = edges.len();
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                let adjacent = a == d || b == c || a == c || b == d;
                if adjacent {
                    if collinear_overlap(a, b, c, d) {
                        return true;
                    }
                    continue;
                }
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    cross2(&[b[0] - a[0], b[1] - a[1]], &[c[0] - a[0], c[1] - a[1]])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Two edges sharing an endpoint overlap when they are collinear and point the same way.
fn collinear_overlap(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    if orient(a, b, c) != 0.0 || orient(a, b, d) != 0.0 {
        return false;
    }
    let (shared, p, q) = if a == c {
        (a, b, d)
    } else if a == d {
        (a, b, c)
    } else if b == c {
        (b, a, d)
    } else {
        (b, a, c)
    };
    let u = [p[0] - shared[0], p[1] - shared[1]];
    let v = [q[0] - shared[0], q[1] - shared[1]];
    u[0] * v[0] + u[1] * v[1] > 0.0
}

pub(crate) fn point_in_ring(p: &[f64; 2], ring: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let k = ring.len();
    let mut j = k - 1;
    for i in 0..k {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Union of closed grid-aligned cells.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelMask<const D: usize> {
    origin: Vector<D>,
    cell: f64,
    extents: [usize; D],
    occupied: Vec<bool>,
}

impl<const D: usize> VoxelMask<D> {
    pub fn new(
        origin: Vector<D>,
        cell: f64,
        extents: [usize; D],
        occupied: Vec<bool>,
    ) -> Result<Self> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::InvalidGrid(format!("voxel size {cell}")));
        }
        let count: usize = extents.iter().product();
        if occupied.len() != count {
            return Err(Error::InvalidGrid(format!(
                "occupancy has {} entries, extents imply {count}",
                occupied.len()
            )));
        }
        Ok(Self {
            origin,
            cell,
            extents,
            occupied,
        })
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn origin(&self) -> &Vector<D> {
        &self.origin
    }

    pub fn extents(&self) -> &[usize; D] {
        &self.extents
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    fn linear(&self, idx: &[usize; D]) -> usize {
        let mut l = 0;
        for i in (0..D).rev() {
            l = l * self.extents[i] + idx[i];
        }
        l
    }

    pub fn is_occupied(&self, idx: &[i64; D]) -> bool {
        let mut u = [0usize; D];
        for i in 0..D {
            if idx[i] < 0 || idx[i] as usize >= self.extents[i] {
                return false;
            }
            u[i] = idx[i] as usize;
        }
        self.occupied[self.linear(&u)]
    }

    /// Whether `x` lies in an occupied cell (half-open cells).
    pub fn contains(&self, x: &Vector<D>) -> bool {
        let mut idx = [0i64; D];
        for i in 0..D {
            idx[i] = ((x[i] - self.origin[i]) / self.cell).floor() as i64;
        }
        self.is_occupied(&idx)
    }

    fn for_each_index(&self, mut f: impl FnMut([usize; D])) {
        let total: usize = self.extents.iter().product();
        for l in 0..total {
            let mut rem = l;
            let mut idx = [0usize; D];
            for i in 0..D {
                idx[i] = rem % self.extents[i];
                rem /= self.extents[i];
            }
            f(idx);
        }
    }

    /// Sample points on every cell face that separates an occupied cell from an empty one.
    fn exposed_face_samples(&self, spacing: f64, out: &mut Vec<Vector<D>>) {
        let m = (self.cell / spacing).ceil().max(1.0) as usize;
        self.for_each_index(|idx| {
            if !self.occupied[self.linear(&idx)] {
                return;
            }
            let signed: [i64; D] = idx.map(|v| v as i64);
            for axis in 0..D {
                for side in [0i64, 1] {
                    let mut nb = signed;
                    nb[axis] += if side == 0 { -1 } else { 1 };
                    if self.is_occupied(&nb) {
                        continue;
                    }
                    // lattice of (m+1)^(D-1) points on the face
                    let per = m + 1;
                    let count = per.pow(D as u32 - 1);
                    for f in 0..count {
                        let mut rem = f;
                        let mut p = [0.0; D];
                        for i in 0..D {
                            let base = self.origin[i] + idx[i] as f64 * self.cell;
                            if i == axis {
                                p[i] = base + side as f64 * self.cell;
                            } else {
                                let k = rem % per;
                                rem /= per;
                                p[i] = base + self.cell * k as f64 / m as f64;
                            }
                        }
                        out.push(p);
                    }
                }
            }
        });
    }

    fn bounds(&self) -> Option<(Vector<D>, Vector<D>)> {
        let mut lo = [f64::INFINITY; D];
        let mut hi = [f64::NEG_INFINITY; D];
        let mut any = false;
        self.for_each_index(|idx| {
            if self.occupied[self.linear(&idx)] {
                any = true;
                for i in 0..D {
                    let base = self.origin[i] + idx[i] as f64 * self.cell;
                    lo[i] = lo[i].min(base);
                    hi[i] = hi[i].max(base + self.cell);
                }
            }
        });
        any.then_some((lo, hi))
    }
}

/// A compact set `E ⊂ ℝᴰ` in one of its concrete realizations.
#[derive(Clone, Debug, PartialEq)]
pub enum CompactSet<const D: usize> {
    Points(Vec<Vector<D>>),
    /// Union of closed segments (a one-dimensional skeleton).
    Segments(Vec<[Vector<D>; 2]>),
    /// Union of filled polygon regions (planar only).
    Polygons(Vec<PolygonRegion>),
    Voxels(VoxelMask<D>),
    Prefractal {
        ifs: Ifs<D>,
        depth: u32,
        realization: Box<CompactSet<D>>,
    },
    /// Finite union of sets.
    Union(Vec<CompactSet<D>>),
}

impl<const D: usize> CompactSet<D> {
    pub fn points(points: Vec<Vector<D>>) -> Self {
        Self::Points(points)
    }

    pub fn polygons(regions: Vec<PolygonRegion>) -> Result<Self> {
        if D != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: D,
            });
        }
        Ok(Self::Polygons(regions))
    }

    pub fn polygon(region: PolygonRegion) -> Result<Self> {
        Self::polygons(vec![region])
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Self::Points(p) => p.is_empty(),
            Self::Segments(s) => s.is_empty(),
            Self::Polygons(p) => p.is_empty(),
            Self::Voxels(v) => v.occupied_count() == 0,
            Self::Prefractal { realization, .. } => realization.is_empty(),
            Self::Union(parts) => parts.iter().all(|p| p.is_empty()),
        }
    }

    /// Whether the set carries interior (positive-volume) parts.
    pub fn has_interior(&self) -> bool {
        match self {
            Self::Polygons(p) => !p.is_empty(),
            Self::Voxels(v) => v.occupied_count() > 0,
            Self::Prefractal { realization, .. } => realization.has_interior(),
            Self::Union(parts) => parts.iter().any(|p| p.has_interior()),
            _ => false,
        }
    }

    /// Exact Lebesgue measure of the set.
    pub fn volume(&self) -> f64 {
        match self {
            Self::Polygons(p) => p.iter().map(|r| r.area()).sum(),
            Self::Voxels(v) => v.occupied_count() as f64 * v.cell.powi(D as i32),
            Self::Prefractal { realization, .. } => realization.volume(),
            Self::Union(parts) => parts.iter().map(|p| p.volume()).sum(),
            _ => 0.0,
        }
    }

    /// Whether `x` lies in a positive-volume part of the set.
    pub fn interior_contains(&self, x: &Vector<D>) -> bool {
        match self {
            Self::Polygons(p) => {
                let q = [x[0], x[1]];
                p.iter().any(|r| r.contains(&q))
            }
            Self::Voxels(v) => v.contains(x),
            Self::Prefractal { realization, .. } => realization.interior_contains(x),
            Self::Union(parts) => parts.iter().any(|p| p.interior_contains(x)),
            _ => false,
        }
    }

    /// Polygon edges of all planar regions in the set.
    pub(crate) fn polygon_edges(&self, out: &mut Vec<([f64; 2], [f64; 2])>) {
        match self {
            Self::Polygons(p) => {
                for r in p {
                    out.extend(r.edges());
                }
            }
            Self::Prefractal { realization, .. } => realization.polygon_edges(out),
            Self::Union(parts) => parts.iter().for_each(|p| p.polygon_edges(out)),
            _ => {}
        }
    }

    pub(crate) fn voxel_masks(&self) -> Vec<&VoxelMask<D>> {
        match self {
            Self::Voxels(v) => vec![v],
            Self::Prefractal { realization, .. } => realization.voxel_masks(),
            Self::Union(parts) => parts.iter().flat_map(|p| p.voxel_masks()).collect(),
            _ => Vec::new(),
        }
    }

    /// Axis-aligned bounding box, `None` for the empty set.
    pub fn bounding_box(&self) -> Option<(Vector<D>, Vector<D>)> {
        match self {
            Self::Points(p) => vector::bounding_box(p.iter()),
            Self::Segments(s) => vector::bounding_box(s.iter().flatten()),
            Self::Polygons(p) => {
                let pts: Vec<Vector<D>> = p
                    .iter()
                    .flat_map(|r| r.outer.iter().map(lift2::<D>))
                    .collect();
                vector::bounding_box(pts.iter())
            }
            Self::Voxels(v) => v.bounds(),
            Self::Prefractal { realization, .. } => realization.bounding_box(),
            Self::Union(parts) => {
                let corners: Vec<Vector<D>> = parts
                    .iter()
                    .filter_map(|p| p.bounding_box())
                    .flat_map(|(lo, hi)| [lo, hi])
                    .collect();
                vector::bounding_box(corners.iter())
            }
        }
    }

    /// Euclidean diameter of the bounding box (an upper bound for diam E).
    pub fn bounding_diameter(&self) -> f64 {
        self.bounding_box()
            .map(|(lo, hi)| vector::norm(&vector::sub(&hi, &lo)))
            .unwrap_or(0.0)
    }

    /// Image of the set under `x ↦ x + shift`.
    pub fn translate(&self, shift: &Vector<D>) -> Self {
        let t = |p: &Vector<D>| vector::add(p, shift);
        match self {
            Self::Points(p) => Self::Points(p.iter().map(t).collect()),
            Self::Segments(s) => Self::Segments(s.iter().map(|[a, b]| [t(a), t(b)]).collect()),
            Self::Polygons(p) => Self::Polygons(
                p.iter()
                    .map(|r| r.map(|q| [q[0] + shift[0], q[1] + shift[1]]))
                    .collect(),
            ),
            Self::Voxels(v) => Self::Voxels(VoxelMask {
                origin: t(&v.origin),
                ..v.clone()
            }),
            Self::Prefractal {
                ifs,
                depth,
                realization,
            } => Self::Prefractal {
                ifs: ifs.clone(),
                depth: *depth,
                realization: Box::new(realization.translate(shift)),
            },
            Self::Union(parts) => Self::Union(parts.iter().map(|p| p.translate(shift)).collect()),
        }
    }

    /// Number of primitive elements (points, segments, polygons, occupied voxels).
    pub fn element_count(&self) -> usize {
        match self {
            Self::Points(p) => p.len(),
            Self::Segments(s) => s.len(),
            Self::Polygons(p) => p.len(),
            Self::Voxels(v) => v.occupied_count(),
            Self::Prefractal { realization, .. } => realization.element_count(),
            Self::Union(parts) => parts.iter().map(|p| p.element_count()).sum(),
        }
    }

    /// Total length of all segments and polygon edges.
    pub fn skeleton_length(&self) -> f64 {
        match self {
            Self::Segments(s) => s.iter().map(|[a, b]| vector::dist_sq(a, b).sqrt()).sum(),
            Self::Polygons(p) => p
                .iter()
                .flat_map(|r| r.edges())
                .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
                .sum(),
            Self::Prefractal { realization, .. } => realization.skeleton_length(),
            Self::Union(parts) => parts.iter().map(|p| p.skeleton_length()).sum(),
            _ => 0.0,
        }
    }
}

impl<const D: usize> fmt::Display for CompactSet<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Points(p) => write!(f, "points[{}]", p.len()),
            Self::Segments(s) => write!(f, "segments[{}]", s.len()),
            Self::Polygons(p) => write!(f, "polygons[{}]", p.len()),
            Self::Voxels(v) => write!(f, "voxels[{}]", v.occupied_count()),
            Self::Prefractal { ifs, depth, .. } => {
                write!(f, "prefractal[maps={}, depth={depth}]", ifs.maps.len())
            }
            Self::Union(parts) => {
                write!(f, "union(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn lift2<const D: usize>(p: &[f64; 2]) -> Vector<D> {
    let mut out = [0.0; D];
    out[0] = p[0];
    out[1] = p[1];
    out
}

/// Boundary of the unit equilateral triangle with base `[(0,0),(1,0)]`.
pub fn unit_triangle() -> [[f64; 2]; 3] {
    [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]
}

fn triangle_segments(corner: [f64; 2], side: f64, out: &mut Vec<[[f64; 2]; 2]>) {
    let a = corner;
    let b = [corner[0] + side, corner[1]];
    let c = [corner[0] + side / 2.0, corner[1] + side * 3f64.sqrt() / 2.0];
    out.push([a, b]);
    out.push([b, c]);
    out.push([c, a]);
}

/// Level-`depth` prefractal of the Sierpinski gasket: the boundaries of the
/// `3^depth` triangles of side `2^-depth`, enumerated by their addresses.
pub fn sierpinski_gasket(depth: u32) -> Result<CompactSet<2>> {
    if depth > MAX_GASKET_DEPTH {
        return Err(Error::DepthTooLarge(format!(
            "gasket depth {depth} exceeds {MAX_GASKET_DEPTH}"
        )));
    }
    let ifs = Ifs::sierpinski();
    let offsets: Vec<[f64; 2]> = ifs.maps.iter().map(|m| m.translation).collect();
    let count = 3usize.pow(depth);
    let side = 0.5f64.powi(depth as i32);
    let mut segments = Vec::with_capacity(3 * count);
    for address in 0..count {
        let mut corner = [0.0, 0.0];
        let mut rem = address;
        let mut weight = 1.0;
        for _ in 0..depth {
            let digit = rem % 3;
            rem /= 3;
            corner[0] += weight * offsets[digit][0];
            corner[1] += weight * offsets[digit][1];
            weight *= 0.5;
        }
        triangle_segments(corner, side, &mut segments);
    }
    Ok(CompactSet::Prefractal {
        ifs,
        depth,
        realization: Box::new(CompactSet::Segments(segments)),
    })
}

/// Union of all `|maps|^iterations` composed images of `set`.
pub fn ifs_apply<const D: usize>(
    ifs: &Ifs<D>,
    set: &CompactSet<D>,
    iterations: u32,
) -> Result<CompactSet<D>> {
    let factor = (ifs.maps.len() as f64).powi(iterations as i32);
    if set.element_count() as f64 * factor > MAX_IFS_ELEMENTS as f64 {
        return Err(Error::DepthTooLarge(format!(
            "{} elements × {}^{iterations} images exceeds {MAX_IFS_ELEMENTS}",
            set.element_count(),
            ifs.maps.len()
        )));
    }
    let mut current = match set {
        CompactSet::Prefractal { realization, .. } => (**realization).clone(),
        other => other.clone(),
    };
    for _ in 0..iterations {
        current = match &current {
            CompactSet::Points(p) => CompactSet::Points(
                ifs.maps
                    .iter()
                    .flat_map(|m| p.iter().map(move |x| m.apply(x)))
                    .collect(),
            ),
            CompactSet::Segments(s) => CompactSet::Segments(
                ifs.maps
                    .iter()
                    .flat_map(|m| s.iter().map(move |[a, b]| [m.apply(a), m.apply(b)]))
                    .collect(),
            ),
            CompactSet::Polygons(p) => CompactSet::Polygons(
                ifs.maps
                    .iter()
                    .flat_map(|m| {
                        p.iter().map(move |r| {
                            r.map(|q| {
                                let y = m.apply(&lift2::<D>(q));
                                [y[0], y[1]]
                            })
                        })
                    })
                    .collect(),
            ),
            other => {
                return Err(Error::UnsupportedSet(format!(
                    "IFS iteration needs points, segments or polygons, got {other}"
                )))
            }
        };
    }
    if iterations == 0 {
        return Ok(set.clone());
    }
    let depth = match set {
        CompactSet::Prefractal { depth, .. } => depth + iterations,
        _ => iterations,
    };
    Ok(CompactSet::Prefractal {
        ifs: ifs.clone(),
        depth,
        realization: Box::new(current),
    })
}

/// Site set covering `set`: every point of the set is within `spacing / 2`
/// of a returned point. Polygon and voxel interiors are not sampled; the
/// distance field marks them separately.
pub fn sample_boundary<const D: usize>(
    set: &CompactSet<D>,
    spacing: f64,
) -> Result<Vec<Vector<D>>> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidSpacing(spacing));
    }
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if let CompactSet::Points(p) = set {
        return Ok(p.clone());
    }
    let mut out = Vec::new();
    collect_samples(set, spacing, &mut out);
    Ok(dedup_points(out))
}

fn collect_samples<const D: usize>(set: &CompactSet<D>, spacing: f64, out: &mut Vec<Vector<D>>) {
    let segment = |a: &Vector<D>, b: &Vector<D>, out: &mut Vec<Vector<D>>| {
        let len = vector::dist_sq(a, b).sqrt();
        let m = (len / spacing).ceil().max(1.0) as usize;
        for k in 0..=m {
            out.push(vector::lerp(a, b, k as f64 / m as f64));
        }
    };
    match set {
        CompactSet::Points(p) => out.extend_from_slice(p),
        CompactSet::Segments(s) => s.iter().for_each(|[a, b]| segment(a, b, out)),
        CompactSet::Polygons(p) => {
            for (a, b) in p.iter().flat_map(|r| r.edges()) {
                segment(&lift2(&a), &lift2(&b), out);
            }
        }
        CompactSet::Voxels(v) => v.exposed_face_samples(spacing, out),
        CompactSet::Prefractal { realization, .. } => collect_samples(realization, spacing, out),
        CompactSet::Union(parts) => parts.iter().for_each(|p| collect_samples(p, spacing, out)),
    }
}

/// Removes duplicates up to 1e-12 absolute, keeping the first occurrence.
fn dedup_points<const D: usize>(points: Vec<Vector<D>>) -> Vec<Vector<D>> {
    let mut seen: HashSet<[i128; D]> = HashSet::with_capacity(points.len());
    points
        .into_iter()
        .filter(|p| seen.insert(p.map(|c| (c * 1e12).round() as i128)))
        .collect()
}

/// JSON description of a compact set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetSpec {
    Gasket {
        depth: u32,
    },
    Points {
        points: Vec<Vec<f64>>,
    },
    Polygon {
        outer: Vec<[f64; 2]>,
        #[serde(default)]
        holes: Vec<Vec<[f64; 2]>>,
    },
    Segments {
        segments: Vec<[Vec<f64>; 2]>,
    },
    /// Several disjoint parts translated copies of which form the set.
    Union {
        parts: Vec<SetSpec>,
        #[serde(default)]
        offsets: Vec<Vec<f64>>,
    },
}

impl SetSpec {
    /// Parses `gasket:<depth>`, `point`, `points:<k>`, `segment`,
    /// `triangle`, `triangle-boundary`, `square`, inline JSON or a JSON file path.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('{') {
            return Ok(serde_json::from_str(t)?);
        }
        let s3 = 3f64.sqrt();
        let tri = vec![[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]];
        if let Some(d) = t.strip_prefix("gasket:") {
            let depth = d
                .parse()
                .map_err(|_| Error::Config(format!("bad gasket depth `{d}`")))?;
            return Ok(Self::Gasket { depth });
        }
        if let Some(k) = t.strip_prefix("points:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Config(format!("bad point count `{k}`")))?;
            return Ok(Self::Points {
                points: separated_points(k),
            });
        }
        match t {
            "point" => Ok(Self::Points {
                points: vec![vec![0.0, 0.0]],
            }),
            "segment" => Ok(Self::Segments {
                segments: vec![[vec![0.0, 0.0], vec![1.0, 0.0]]],
            }),
            "triangle" => Ok(Self::Polygon {
                outer: tri,
                holes: vec![],
            }),
            "triangle-boundary" => Ok(Self::Segments {
                segments: (0..3)
                    .map(|i| [tri[i].to_vec(), tri[(i + 1) % 3].to_vec()])
                    .collect(),
            }),
            "square" => Ok(Self::Polygon {
                outer: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
                holes: vec![],
            }),
            _ => {
                let path = t.strip_prefix('@').unwrap_or(t);
                if std::path::Path::new(path).is_file() {
                    let raw = std::fs::read_to_string(path)?;
                    return Ok(serde_json::from_str(&raw)?);
                }
                Err(Error::Config(format!("unknown set `{t}`")))
            }
        }
    }

    pub fn build<const D: usize>(&self) -> Result<CompactSet<D>> {
        match self {
            Self::Gasket { depth } => {
                if D != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: D,
                    });
                }
                let g = sierpinski_gasket(*depth)?;
                Ok(relabel(g))
            }
            Self::Points { points } => {
                let pts = points
                    .iter()
                    .map(|p| {
                        vector::from_slice::<D>(p).ok_or(Error::DimensionMismatch {
                            expected: D,
                            found: p.len(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(CompactSet::Points(pts))
            }
            Self::Polygon { outer, holes } => {
                CompactSet::polygon(PolygonRegion::new(outer.clone(), holes.clone())?)
            }
            Self::Segments { segments } => {
                let conv = |p: &Vec<f64>| {
                    vector::from_slice::<D>(p).ok_or(Error::DimensionMismatch {
                        expected: D,
                        found: p.len(),
                    })
                };
                let segs = segments
                    .iter()
                    .map(|[a, b]| Ok([conv(a)?, conv(b)?]))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CompactSet::Segments(segs))
            }
            Self::Union { parts, offsets } => {
                if !offsets.is_empty() && offsets.len() != parts.len() {
                    return Err(Error::Config("union offsets must match parts".into()));
                }
                let mut built = Vec::with_capacity(parts.len());
                for (i, p) in parts.iter().enumerate() {
                    let set = p.build::<D>()?;
                    let set = match offsets.get(i) {
                        Some(o) => set.translate(&vector::from_slice::<D>(o).ok_or(
                            Error::DimensionMismatch {
                                expected: D,
                                found: o.len(),
                            },
                        )?),
                        None => set,
                    };
                    built.push(set);
                }
                Ok(CompactSet::Union(built))
            }
        }
    }
}

/// `k` points on a unit-spaced lattice with at most four per row.
pub fn separated_points(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| vec![(i % 4) as f64, (i / 4) as f64])
        .collect()
}

/// Moves a planar set into dimension `D` (used only when `D == 2`).
fn relabel<const D: usize>(set: CompactSet<2>) -> CompactSet<D> {
    let l = |p: &[f64; 2]| lift2::<D>(p);
    match set {
        CompactSet::Points(p) => CompactSet::Points(p.iter().map(l).collect()),
        CompactSet::Segments(s) => {
            CompactSet::Segments(s.iter().map(|[a, b]| [l(a), l(b)]).collect())
        }
        CompactSet::Polygons(p) => CompactSet::Polygons(p),
        CompactSet::Prefractal {
            ifs,
            depth,
            realization,
        } => CompactSet::Prefractal {
            ifs: Ifs {
                maps: ifs
                    .maps
                    .iter()
                    .map(|m| {
                        let mut linear = [[0.0; D]; D];
                        for i in 0..D {
                            for j in 0..D {
                                linear[i][j] = if i < 2 && j < 2 {
                                    m.linear[i][j]
                                } else if i == j {
                                    m.ratio
                                } else {
                                    0.0
                                };
                            }
                        }
                        Similarity {
                            ratio: m.ratio,
                            linear,
                            translation: l(&m.translation),
                        }
                    })
                    .collect(),
            },
            depth,
            realization: Box::new(relabel(*realization)),
        },
        CompactSet::Voxels(_) | CompactSet::Union(_) => {
            unreachable!("gasket realization is segments")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg_len(s: &[[f64; 2]; 2]) -> f64 {
        (s[0][0] - s[1][0]).hypot(s[0][1] - s[1][1])
    }

    #[test]
    fn similarity_dimensions() {
        assert!((Ifs::sierpinski().similarity_dimension() - 3f64.log2()).abs() < 1e-12);
        assert!((Ifs::cantor_dust().similarity_dimension() - 1.0).abs() < 1e-12);
    }

    fn segments(set: &CompactSet<2>) -> &[[[f64; 2]; 2]] {
        match set {
            CompactSet::Prefractal { realization, .. } => match realization.as_ref() {
                CompactSet::Segments(s) => s,
                _ => panic!("expected segments"),
            },
            CompactSet::Segments(s) => s,
            _ => panic!("expected segments"),
        }
    }

    fn canonical(segs: &[[[f64; 2]; 2]]) -> Vec<[i64; 4]> {
        let q = |v: f64| (v * 1e9).round() as i64;
        let mut out: Vec<[i64; 4]> = segs
            .iter()
            .map(|[a, b]| {
                let (a, b) = if (a[0], a[1]) <= (b[0], b[1]) {
                    (a, b)
                } else {
                    (b, a)
                };
                [q(a[0]), q(a[1]), q(b[0]), q(b[1])]
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn gasket_segment_counts_and_lengths() {
        for k in 0..=6u32 {
            let g = sierpinski_gasket(k).unwrap();
            let segs = segments(&g);
            assert_eq!(segs.len(), 3 * 3usize.pow(k));
            let side = 0.5f64.powi(k as i32);
            assert!(segs.iter().all(|s| (seg_len(s) - side).abs() < 1e-12));
        }
        let g0 = sierpinski_gasket(0).unwrap();
        assert!((g0.skeleton_length() - 3.0).abs() < 1e-12);
        assert!(matches!(
            sierpinski_gasket(15),
            Err(Error::DepthTooLarge(_))
        ));
    }

    #[test]
    fn gasket_levels_agree_with_ifs_iteration() {
        let tri = unit_triangle();
        let base = CompactSet::Segments((0..3).map(|i| [tri[i], tri[(i + 1) % 3]]).collect());
        let ifs = Ifs::sierpinski();
        let once = ifs_apply(&ifs, &base, 1).unwrap();
        assert_eq!(
            canonical(segments(&once)),
            canonical(segments(&sierpinski_gasket(1).unwrap()))
        );
        for k in 0..5 {
            let next = ifs_apply(&ifs, &sierpinski_gasket(k).unwrap(), 1).unwrap();
            assert_eq!(
                canonical(segments(&next)),
                canonical(segments(&sierpinski_gasket(k + 1).unwrap()))
            );
        }
    }

    #[test]
    fn prefractal_points_stay_in_unit_triangle() {
        let tri = unit_triangle();
        let region = PolygonRegion::new(tri.to_vec(), vec![]).unwrap();
        let g = sierpinski_gasket(5).unwrap();
        for s in segments(&g) {
            for p in s {
                let inside = region.contains(p)
                    || region
                        .edges()
                        .any(|(a, b)| orient(a, b, *p).abs() < 1e-12 && on_segment(a, b, *p));
                assert!(inside, "{p:?}");
            }
        }
    }

    #[test]
    fn ifs_identity_and_cantor_counts() {
        let pt = CompactSet::Points(vec![[0.3, 0.4]]);
        assert_eq!(ifs_apply(&Ifs::cantor_dust(), &pt, 0).unwrap(), pt);
        let dust = ifs_apply(&Ifs::cantor_dust(), &pt, 3).unwrap();
        assert_eq!(dust.element_count(), 64);
        let big = CompactSet::Points(vec![[0.0, 0.0]; 10]);
        assert!(matches!(
            ifs_apply(&Ifs::cantor_dust(), &big, 12),
            Err(Error::DepthTooLarge(_))
        ));
        let vox =
            CompactSet::Voxels(VoxelMask::<2>::new([0.0, 0.0], 1.0, [1, 1], vec![true]).unwrap());
        assert!(matches!(
            ifs_apply(&Ifs::cantor_dust(), &vox, 1),
            Err(Error::UnsupportedSet(_))
        ));
    }

    #[test]
    fn ifs_validation() {
        assert!(Ifs::<2>::new(vec![]).is_err());
        assert!(Similarity::<2>::homothety(1.0, [0.0, 0.0]).is_err());
        assert!(Similarity::<2>::homothety(0.0, [0.0, 0.0]).is_err());
        assert!(Similarity::<2>::new(0.5, [[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0]).is_err());
        let rot = Similarity::planar(0.5, std::f64::consts::FRAC_PI_2, [1.0, 0.0]).unwrap();
        let y = rot.apply(&[1.0, 0.0]);
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampling_segment_and_identity() {
        let seg = CompactSet::Segments(vec![[[0.0, 0.0], [1.0, 0.0]]]);
        assert_eq!(sample_boundary(&seg, 0.1).unwrap().len(), 11);
        let pts = CompactSet::Points(vec![[0.1, 0.2], [0.3, 0.4]]);
        assert_eq!(
            sample_boundary(&pts, 0.5).unwrap(),
            vec![[0.1, 0.2], [0.3, 0.4]]
        );
        assert!(matches!(
            sample_boundary(&pts, 0.0),
            Err(Error::InvalidSpacing(_))
        ));
        assert!(matches!(
            sample_boundary(&CompactSet::<2>::Points(vec![]), 0.1),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn triangle_boundary_sampling_covers_boundary() {
        let tri = unit_triangle();
        let set = CompactSet::Segments((0..3).map(|i| [tri[i], tri[(i + 1) % 3]]).collect());
        let samples = sample_boundary(&set, 0.01).unwrap();
        assert!(samples.len() >= 300);
        // brute-force coverage check along a fine parametrization of each side
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            for k in 0..=2000 {
                let p = vector::lerp(&a, &b, k as f64 / 2000.0);
                let d = samples
                    .iter()
                    .map(|s| vector::dist_sq(s, &p))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt();
                assert!(d <= 0.005 + 1e-12, "{d}");
            }
        }
    }

    #[test]
    fn polygon_validation_and_orientation() {
        let cw = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        let r = PolygonRegion::new(cw, vec![]).unwrap();
        assert!(polygon_area(r.outer()) > 0.0);
        assert!((r.area() - 1.0).abs() < 1e-12);
        let bowtie = vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            PolygonRegion::new(bowtie, vec![]),
            Err(Error::SelfIntersecting)
        ));
        let outer = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]];
        let hole = vec![[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        let r = PolygonRegion::new(outer.clone(), vec![hole]).unwrap();
        assert!((r.area() - 12.0).abs() < 1e-12);
        assert!(r.contains(&[0.5, 0.5]) && !r.contains(&[2.0, 2.0]));
        let outside = vec![[5.0, 5.0], [6.0, 5.0], [6.0, 6.0]];
        assert!(PolygonRegion::new(outer, vec![outside]).is_err());
    }

    #[test]
    fn voxel_samples_cover_exposed_faces() {
        let mask = VoxelMask::<2>::new([0.0, 0.0], 0.5, [2, 1], vec![true, true]).unwrap();
        let set = CompactSet::Voxels(mask);
        let s = sample_boundary(&set, 0.25).unwrap();
        // perimeter of the 1 x 0.5 rectangle sampled at 0.25
        assert_eq!(s.len(), 12);
        assert!((set.volume() - 0.5).abs() < 1e-12);
        assert!(set.interior_contains(&[0.7, 0.2]));
        assert!(VoxelMask::<2>::new([0.0, 0.0], 0.0, [1, 1], vec![true]).is_err());
    }

    #[test]
    fn set_specs() {
        let g: CompactSet<2> = SetSpec::parse("gasket:3").unwrap().build().unwrap();
        assert_eq!(g.element_count(), 81);
        assert!(SetSpec::parse("gasket:3").unwrap().build::<3>().is_err());
        let pts: CompactSet<2> = SetSpec::parse("points:10").unwrap().build().unwrap();
        assert_eq!(pts.element_count(), 10);
        let json = r#"{"kind":"polygon","outer":[[0,0],[1,0],[0,1]],"holes":[]}"#;
        let tri: CompactSet<2> = SetSpec::parse(json).unwrap().build().unwrap();
        assert!((tri.volume() - 0.5).abs() < 1e-12);
        let spec = SetSpec::parse(r#"{"kind":"gasket","depth":10}"#).unwrap();
        assert_eq!(spec, SetSpec::Gasket { depth: 10 });
        let back: SetSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(SetSpec::parse("nonsense").is_err());
    }

    #[test]
    fn union_translation() {
        let spec = SetSpec::Union {
            parts: vec![SetSpec::Gasket { depth: 1 }, SetSpec::Gasket { depth: 1 }],
            offsets: vec![vec![0.0, 0.0], vec![3.0, 0.0]],
        };
        let u: CompactSet<2> = spec.build().unwrap();
        let (lo, hi) = u.bounding_box().unwrap();
        assert_eq!(lo[0], 0.0);
        assert_eq!(hi[0], 4.0);
        assert_eq!(u.element_count(), 18);
    }
}
