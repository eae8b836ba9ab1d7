//! Convex polytopes with the origin in their interior.
//!
//! A [`ConvexBody`] caches everything the tube computations need: the hull
//! vertices, the facet halfspaces `{x : ν·x ≤ o}` with unit normals, the
//! volume and the containment radii `a ≤ b` with `B(0,a) ⊆ C ⊆ B(0,b)`.
//!
//! Two evaluations are central:
//!
//! * [`ConvexBody::support`], `h_C(y) = max_{x∈C} x·y`, a maximum over vertices;
//! * [`ConvexBody::gauge`], the Minkowski functional `min{t ≥ 0 : x ∈ tC}`,
//!   obtained by casting the ray through `x` against the boundary. In the
//!   plane the hit edge is looked up in a table of angular sectors.
//!
//! [`ConvexBody::gauge_dual`] evaluates the same quantity through the facet
//! form `max_ν (x·ν)/o_ν` and serves as a cross-check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{self, cross2, cross3, dot, norm, Vector};

const COLLINEAR_TOL: f64 = 1e-12;

/// Number of vertices used when a disk is approximated by a regular polygon.
pub const DEFAULT_DISK_VERTICES: usize = 64;

/// A supporting halfspace `{x : normal·x ≤ offset}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Facet<const D: usize> {
    pub normal: Vector<D>,
    pub offset: f64,
}

#[derive(Clone, Debug)]
pub struct ConvexBody<const D: usize> {
    vertices: Vec<Vector<D>>,
    facets: Vec<Facet<D>>,
    volume: f64,
    inradius: f64,
    outradius: f64,
    /// Edge lookup by direction (planar bodies with many edges only).
    sectors: Option<SectorTable>,
}

impl<const D: usize> ConvexBody<D> {
    /// Builds a body from a vertex list, reducing it to the extreme points.
    pub fn new(vertices: &[Vector<D>]) -> Result<Self> {
        match D {
            2 => Self::from_planar_hull(vertices),
            3 => Self::from_spatial_hull(vertices),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// Same as [`ConvexBody::new`] for dynamically sized input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let mut pts = Vec::with_capacity(rows.len());
        for row in rows {
            pts.push(
                vector::from_slice::<D>(row).ok_or(Error::DimensionMismatch {
                    expected: D,
                    found: row.len(),
                })?,
            );
        }
        Self::new(&pts)
    }

    pub fn dimension(&self) -> usize {
        D
    }

    pub fn vertices(&self) -> &[Vector<D>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet<D>] {
        &self.facets
    }

    /// Lebesgue measure of the body.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Largest `a` with `B(0,a) ⊆ C`.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Smallest `b` with `C ⊆ B(0,b)`.
    pub fn outradius(&self) -> f64 {
        self.outradius
    }

    /// Support function `h_C(y) = max_{x∈C} x·y`.
    pub fn support(&self, y: &Vector<D>) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minkowski functional `min{t ≥ 0 : x ∈ tC}` by ray casting.
    #[inline]
    pub fn gauge(&self, x: &Vector<D>) -> f64 {
        match &self.sectors {
            Some(table) => table.gauge(x[0], x[1]),
            None => self.exit_plane_gauge(x),
        }
    }

    /// Gauge through the facet form `max_ν (x·ν)/o_ν`.
    pub fn gauge_dual(&self, x: &Vector<D>) -> f64 {
        self.facets
            .iter()
            .map(|f| dot(&f.normal, x) / f.offset)
            .fold(0.0, f64::max)
    }

    /// Ray exit through the nearest facet plane hit by `t ↦ t x`.
    #[inline]
    fn exit_plane_gauge(&self, x: &Vector<D>) -> f64 {
        let mut g = 0.0_f64;
        for f in &self.facets {
            let along = dot(&f.normal, x);
            if along > 0.0 {
                g = g.max(along / f.offset);
            }
        }
        g
    }

    /// Whether `x` lies in the closed body, checked against every facet.
    pub fn contains(&self, x: &Vector<D>) -> bool {
        let scale = self.outradius.max(1.0);
        self.facets
            .iter()
            .all(|f| dot(&f.normal, x) <= f.offset + 1e-12 * scale)
    }

    /// The dilate `rC`.
    pub fn scale(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveScale(r));
        }
        let vertices: Vec<Vector<D>> = self.vertices.iter().map(|v| vector::scaled(v, r)).collect();
        let facets: Vec<Facet<D>> = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: f.normal,
                offset: f.offset * r,
            })
            .collect();
        Ok(Self {
            sectors: self
                .sectors
                .as_ref()
                .map(|_| SectorTable::new(&vertices, &facets)),
            vertices,
            facets,
            volume: self.volume * r.powi(D as i32),
            inradius: self.inradius * r,
            outradius: self.outradius * r,
        })
    }

    /// Support values along every facet normal: `h_C(ν) = o_ν`.
    pub fn facet_offsets(&self) -> impl Iterator<Item = f64> + '_ {
        self.facets.iter().map(|f| f.offset)
    }

    /// The axis-aligned cube `[-1,1]^D` (the unit ball of the sup-norm).
    pub fn cube() -> Self {
        let mut verts = Vec::with_capacity(1 << D);
        for mask in 0..(1usize << D) {
            let mut v = [0.0; D];
            for (i, c) in v.iter_mut().enumerate() {
                *c = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            }
            verts.push(v);
        }
        Self::new(&verts).expect("cube is a valid body")
    }

    /// The cross-polytope `conv{±e_i}` (the unit ball of the ℓ¹ norm).
    pub fn cross_polytope() -> Self {
        let mut verts = Vec::with_capacity(2 * D);
        for i in 0..D {
            for sign in [1.0, -1.0] {
                let mut v = [0.0; D];
                v[i] = sign;
                verts.push(v);
            }
        }
        Self::new(&verts).expect("cross-polytope is a valid body")
    }

    fn from_planar_hull(points: &[Vector<D>]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateBody(format!(
                "{} vertices, need at least 3",
                points.len()
            )));
        }
        check_finite(points)?;
        let planar: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
        let hull = planar_hull(&planar);
        if hull.len() < 3 {
            return Err(Error::DegenerateBody("vertices are collinear".into()));
        }
        let area = polygon_area(&hull);
        let scale = hull.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        if area <= COLLINEAR_TOL * scale * scale {
            return Err(Error::DegenerateBody("hull has zero area".into()));
        }

        // Start the counterclockwise cycle at the smallest polar angle.
        let k = hull.len();
        let start = (0..k)
            .min_by(|&i, &j| angle(&hull[i]).total_cmp(&angle(&hull[j])))
            .unwrap();
        let ordered: Vec<[f64; 2]> = (0..k).map(|i| hull[(start + i) % k]).collect();

        let mut facets = Vec::with_capacity(k);
        for i in 0..k {
            let p = ordered[i];
            let q = ordered[(i + 1) % k];
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dy);
            let normal = [dy / len, -dx / len];
            let offset = normal[0] * p[0] + normal[1] * p[1];
            facets.push((normal, offset));
        }
        if facets.iter().any(|&(_, o)| o <= COLLINEAR_TOL * scale) {
            return Err(Error::OriginNotInterior);
        }

        let vertices: Vec<Vector<D>> = ordered.iter().map(|p| lift(&[p[0], p[1]])).collect();
        let facets: Vec<Facet<D>> = facets
            .into_iter()
            .map(|(n, o)| Facet {
                normal: lift(&n),
                offset: o,
            })
            .collect();
        let sectors = (facets.len() > 8).then(|| SectorTable::new(&vertices, &facets));
        Ok(Self::assemble(vertices, facets, area, sectors))
    }

    fn from_spatial_hull(points: &[Vector<D>]) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::DegenerateBody(format!(
                "{} vertices, need at least 4",
                points.len()
            )));
        }
        check_finite(points)?;
        let pts: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
        let scale = pts
            .iter()
            .map(norm)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let eps = COLLINEAR_TOL * scale;

        let mut planes: Vec<([f64; 3], f64)> = Vec::new();
        let m = pts.len();
        for i in 0..m {
            for j in (i + 1)..m {
                for l in (j + 1)..m {
                    let e1 = vector::sub(&pts[j], &pts[i]);
                    let e2 = vector::sub(&pts[l], &pts[i]);
                    let c = cross3(&e1, &e2);
                    let cn = norm(&c);
                    if cn <= COLLINEAR_TOL * scale * scale {
                        continue;
                    }
                    let n = vector::scaled(&c, 1.0 / cn);
                    let d = dot(&n, &pts[i]);
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for p in &pts {
                        let s = dot(&n, p) - d;
                        lo = lo.min(s);
                        hi = hi.max(s);
                    }
                    let plane = if hi <= eps {
                        (n, d)
                    } else if lo >= -eps {
                        (vector::scaled(&n, -1.0), -d)
                    } else {
                        continue;
                    };
                    let dup = planes.iter().any(|(pn, pd)| {
                        vector::dist_sq(pn, &plane.0) < 1e-18 && (pd - plane.1).abs() <= eps
                    });
                    if !dup {
                        planes.push(plane);
                    }
                }
            }
        }
        if planes.len() < 4 {
            return Err(Error::DegenerateBody("vertices are coplanar".into()));
        }

        let mut extreme = vec![false; m];
        let mut volume = 0.0;
        for (n, d) in &planes {
            let on: Vec<usize> = (0..m)
                .filter(|&i| (dot(n, &pts[i]) - d).abs() <= eps)
                .collect();
            let origin = pts[on[0]];
            let far = on
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    vector::dist_sq(&pts[a], &origin).total_cmp(&vector::dist_sq(&pts[b], &origin))
                })
                .unwrap();
            let u = {
                let e = vector::sub(&pts[far], &origin);
                vector::scaled(&e, 1.0 / norm(&e))
            };
            let w = cross3(n, &u);
            let flat: Vec<[f64; 2]> = on
                .iter()
                .map(|&i| {
                    let e = vector::sub(&pts[i], &origin);
                    [dot(&e, &u), dot(&e, &w)]
                })
                .collect();
            let hull = planar_hull(&flat);
            for h in &hull {
                if let Some(pos) = flat.iter().position(|f| f == h) {
                    extreme[on[pos]] = true;
                }
            }
            volume += d * polygon_area(&hull) / 3.0;
        }
        if volume <= COLLINEAR_TOL * scale.powi(3) {
            return Err(Error::DegenerateBody("hull has zero volume".into()));
        }
        if planes.iter().any(|&(_, d)| d <= eps) {
            return Err(Error::OriginNotInterior);
        }
        let vertices: Vec<Vector<D>> = (0..m)
            .filter(|&i| extreme[i])
            .map(|i| lift(&pts[i]))
            .collect();
        let facets = planes
            .into_iter()
            .map(|(n, d)| Facet {
                normal: lift(&n),
                offset: d,
            })
            .collect();
        Ok(Self::assemble(vertices, facets, volume, None))
    }

    fn assemble(
        vertices: Vec<Vector<D>>,
        facets: Vec<Facet<D>>,
        volume: f64,
        sectors: Option<SectorTable>,
    ) -> Self {
        let inradius = facets
            .iter()
            .map(|f| f.offset)
            .fold(f64::INFINITY, f64::min);
        let outradius = vertices.iter().map(norm).fold(0.0, f64::max);
        Self {
            vertices,
            facets,
            volume,
            inradius,
            outradius,
            sectors,
        }
    }
}

/// Monotone stand-in for the polar angle, mapping directions onto `[0, 4)`.
#[inline]
fn diamond_angle(x: f64, y: f64) -> f64 {
    if y >= 0.0 {
        if x >= 0.0 {
            y / (x + y)
        } else {
            1.0 - x / (y - x)
        }
    } else if x < 0.0 {
        2.0 - y / (-x - y)
    } else {
        3.0 + x / (x - y)
    }
}

/// Planar edge lookup: the direction range `[0, 4)` of [`diamond_angle`] is cut
/// into equal sectors, each listing the consecutive edges whose angular span
/// meets it. The gauge is the largest `(ν·x)/o` over those edges, which is
/// exact because the edge actually hit by the ray is among them.
#[derive(Clone, Debug)]
struct SectorTable {
    /// Edge normals divided by their offsets, in counterclockwise order.
    scaled: Vec<[f64; 2]>,
    /// First edge and edge count per sector.
    sectors: Vec<(u32, u32)>,
}

impl SectorTable {
    fn new<const D: usize>(vertices: &[Vector<D>], facets: &[Facet<D>]) -> Self {
        let k = vertices.len();
        let m = 4 * k;
        let dv: Vec<f64> = vertices.iter().map(|v| diamond_angle(v[0], v[1])).collect();
        // edge i runs from vertex i to vertex i+1
        let in_arc = |x: f64, a: f64, b: f64| {
            if a <= b {
                a <= x && x < b
            } else {
                x >= a || x < b
            }
        };
        let sectors = (0..m)
            .map(|j| {
                let lo = 4.0 * j as f64 / m as f64;
                let hi = 4.0 * (j + 1) as f64 / m as f64;
                let first = (0..k)
                    .find(|&e| in_arc(lo, dv[e], dv[(e + 1) % k]))
                    .unwrap_or(0);
                let inside = dv.iter().filter(|&&d| d > lo && d < hi).count();
                (first as u32, 1 + inside as u32)
            })
            .collect();
        let scaled = facets
            .iter()
            .map(|f| [f.normal[0] / f.offset, f.normal[1] / f.offset])
            .collect();
        Self { scaled, sectors }
    }

    #[inline]
    fn gauge(&self, x0: f64, x1: f64) -> f64 {
        if x0 == 0.0 && x1 == 0.0 {
            return 0.0;
        }
        let m = self.sectors.len();
        let j = ((diamond_angle(x0, x1) * (m as f64 / 4.0)) as usize).min(m - 1);
        let (first, count) = self.sectors[j];
        let k = self.scaled.len();
        let mut g = f64::NEG_INFINITY;
        for c in 0..count as usize {
            let n = &self.scaled[(first as usize + c) % k];
            g = g.max(n[0] * x0 + n[1] * x1);
        }
        g
    }
}

impl ConvexBody<2> {
    /// Regular `k`-gon inscribed in the circle of the given radius, one vertex on the positive x-axis.
    pub fn regular_polygon(k: usize, radius: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::DegenerateBody(format!(
                "regular polygon with {k} vertices"
            )));
        }
        let verts: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / k as f64;
                [radius * t.cos(), radius * t.sin()]
            })
            .collect();
        Self::new(&verts)
    }

    /// The 64-gon approximation of the unit disk.
    pub fn disk64() -> Self {
        Self::regular_polygon(DEFAULT_DISK_VERTICES, 1.0).expect("disk64 is valid")
    }

    /// The square `[-1,1]²`.
    pub fn square() -> Self {
        Self::cube()
    }

    /// Equilateral triangle with centroid at the origin and circumradius 2.
    pub fn triangle() -> Self {
        let s3 = 3f64.sqrt();
        Self::new(&[[2.0, 0.0], [-1.0, s3], [-1.0, -s3]]).expect("triangle is valid")
    }
}

fn check_finite<const D: usize>(points: &[Vector<D>]) -> Result<()> {
    if points.iter().flatten().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::DegenerateBody("non-finite vertex coordinate".into()))
    }
}

fn lift<const D: usize, const K: usize>(p: &[f64; K]) -> Vector<D> {
    let mut out = [0.0; D];
    out[..K].copy_from_slice(p);
    out
}

fn angle(p: &[f64; 2]) -> f64 {
    p[1].atan2(p[0])
}

/// Counterclockwise convex hull (Andrew's monotone chain) with collinear points removed.
pub(crate) fn planar_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = COLLINEAR_TOL * scale * scale;
    let turn = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        cross2(&[a[0] - o[0], a[1] - o[1]], &[b[0] - o[0], b[1] - o[1]])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2
                && turn(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= tol
            {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area of a counterclockwise polygon.
pub(crate) fn polygon_area(ring: &[[f64; 2]]) -> f64 {
    let k = ring.len();
    (0..k)
        .map(|i| cross2(&ring[i], &ring[(i + 1) % k]))
        .sum::<f64>()
        / 2.0
}

/// JSON description of a body: `{"dimension": 2, "vertices": [[x,y],...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub dimension: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl BodySpec {
    /// Resolves a preset name (`disk64`, `diskN`, `square`, `triangle`, `cube`,
    /// `octahedron`), an inline JSON object, or a path to a JSON file.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('{') {
            return Ok(serde_json::from_str(t)?);
        }
        if let Some(spec) = Self::preset(t) {
            return Ok(spec);
        }
        let path = t.strip_prefix('@').unwrap_or(t);
        if std::path::Path::new(path).is_file() {
            let raw = std::fs::read_to_string(path)?;
            return Ok(serde_json::from_str(&raw)?);
        }
        Err(Error::Config(format!("unknown body `{t}`")))
    }

    pub fn preset(name: &str) -> Option<Self> {
        let planar = |b: ConvexBody<2>| Self::from_body(&b);
        match name {
            "square" => Some(planar(ConvexBody::square())),
            "triangle" => Some(planar(ConvexBody::triangle())),
            "cube" => Some(Self::from_body(&ConvexBody::<3>::cube())),
            "octahedron" => Some(Self::from_body(&ConvexBody::<3>::cross_polytope())),
            _ => {
                let k: usize = name.strip_prefix("disk")?.parse().ok()?;
                ConvexBody::regular_polygon(k, 1.0).ok().map(planar)
            }
        }
    }

    pub fn from_body<const D: usize>(body: &ConvexBody<D>) -> Self {
        Self {
            dimension: D,
            vertices: body.vertices().iter().map(|v| v.to_vec()).collect(),
        }
    }

    pub fn build<const D: usize>(&self) -> Result<ConvexBody<D>> {
        if self.dimension != D {
            return Err(Error::DimensionMismatch {
                expected: D,
                found: self.dimension,
            });
        }
        ConvexBody::from_rows(&self.vertices)
    }
}
