//! Exact tube volumes: polygon anisotropic perimeter, equilateral triangles
//! (filled and boundary), dilates of the body itself, and the Sierpinski
//! gasket with its four content limits.
//!
//! Triangle and gasket formulas depend on the body only through
//! `u₂ = Σ h_C(vᵢ)`, `u₁ = Σ h_C(-vᵢ)` and `λ²(C)`, where `vᵢ` are the outward
//! unit normals of the unit triangle with base `[(0,0), (1,0)]`: pointing
//! down, at 30° and at 150°.

use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::field::{ProfileMeta, VolumeProfile};
use crate::set::PolygonRegion;

/// Minkowski dimension of the gasket, `log₂ 3`.
pub const GASKET_DIMENSION: f64 = 1.584_962_500_721_156_2;

const MAX_LEVEL: u32 = 60;
const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Outward unit normals of the unit triangle with base `[(0,0), (1,0)]`.
pub fn triangle_normals() -> [[f64; 2]; 3] {
    [[0.0, -1.0], [SQRT3 / 2.0, 0.5], [-SQRT3 / 2.0, 0.5]]
}

/// `Σ |e| h_C(ν_e)` over the edges of the region, `ν_e` the outward normal
/// (inward to the hole for hole edges).
pub fn polygon_aniso_perimeter(poly: &PolygonRegion, body: &ConvexBody<2>) -> f64 {
    // edges keep the region on their left; (dy, -dx) has length |e|
    poly.edges()
        .map(|(a, b)| body.support(&[b[1] - a[1], a[0] - b[0]]))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleVariant {
    Filled,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleAnisotropy {
    pub u1: f64,
    pub u2: f64,
    pub body_volume: f64,
    pub side: f64,
}

impl TriangleAnisotropy {
    pub fn new(body: &ConvexBody<2>, side: f64) -> Result<Self> {
        if !(side > 0.0) {
            return Err(Error::NonPositiveScale(side));
        }
        let v = triangle_normals();
        Ok(Self {
            u1: v.iter().map(|n| body.support(&[-n[0], -n[1]])).sum(),
            u2: v.iter().map(|n| body.support(n)).sum(),
            body_volume: body.volume(),
            side,
        })
    }

    /// Largest radius for which the boundary formula holds, `√3 s / (2u₁)`.
    pub fn boundary_validity(&self) -> f64 {
        SQRT3 * self.side / (2.0 * self.u1)
    }

    pub fn area(&self) -> f64 {
        SQRT3 / 4.0 * self.side * self.side
    }
}

pub fn triangle_tube_volume(
    t: &TriangleAnisotropy,
    r: f64,
    variant: TriangleVariant,
) -> Result<f64> {
    triangle_tube(t, r, variant).map(|(v, _)| v)
}

/// `(V(r), V'(r))` for the triangle tube.
pub fn triangle_tube(
    t: &TriangleAnisotropy,
    r: f64,
    variant: TriangleVariant,
) -> Result<(f64, f64)> {
    let s = t.side;
    let lam = t.body_volume;
    match variant {
        TriangleVariant::Filled => {
            if !(r >= 0.0) {
                return Err(Error::RadiusOutsideValidity {
                    r,
                    max: f64::INFINITY,
                });
            }
            Ok((
                lam * r * r + s * t.u2 * r + t.area(),
                2.0 * lam * r + s * t.u2,
            ))
        }
        TriangleVariant::Boundary => {
            let max = t.boundary_validity();
            if !(r >= 0.0 && r <= max) {
                return Err(Error::RadiusOutsideValidity { r, max });
            }
            let quad = lam - t.u1 * t.u1 / SQRT3;
            let lin = s * (t.u1 + t.u2);
            Ok((quad * r * r + lin * r, 2.0 * quad * r + lin))
        }
    }
}

/// Piecewise exact profile of the Sierpinski gasket for one body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasketProfile {
    pub u2: f64,
    pub body_volume: f64,
    pub dimension: f64,
    /// `u₂ (√3/(4u₂))^{D-1}`.
    pub b: f64,
    /// `-√3^{D-1} 4^{-D} u₂^{2-D}`, the limit of `c_n`.
    pub c: f64,
}

impl GasketProfile {
    pub fn new(body: &ConvexBody<2>) -> Self {
        let u2: f64 = triangle_normals().iter().map(|n| body.support(n)).sum();
        Self::from_constants(u2, body.volume())
    }

    pub fn from_constants(u2: f64, body_volume: f64) -> Self {
        let d = GASKET_DIMENSION;
        let k = SQRT3 / (4.0 * u2);
        Self {
            u2,
            body_volume,
            dimension: d,
            b: u2 * k.powf(d - 1.0),
            c: -SQRT3.powf(d - 1.0) * 4f64.powf(-d) * u2.powf(2.0 - d),
        }
    }

    /// `√3/(4u₂)`: left end of `I₀`, where the central hole fills in.
    pub fn hole_radius(&self) -> f64 {
        SQRT3 / (4.0 * self.u2)
    }

    /// `I_n = [2^{-n-2}√3/u₂, 2^{-n-1}√3/u₂)`; `I₀` is unbounded above.
    pub fn interval(&self, n: u32) -> (f64, f64) {
        let k = self.hole_radius();
        let lo = k * 2f64.powi(-(n as i32));
        let hi = if n == 0 { f64::INFINITY } else { 2.0 * lo };
        (lo, hi)
    }

    /// Level `n` with `r ∈ I_n`, capped at 60.
    pub fn level(&self, r: f64) -> u32 {
        let k = self.hole_radius();
        if r >= k {
            return 0;
        }
        let mut n = (k / r).log2().ceil().clamp(0.0, MAX_LEVEL as f64) as u32;
        while n < MAX_LEVEL && r < self.interval(n).0 {
            n += 1;
        }
        while n > 0 && r >= 2.0 * self.interval(n).0 {
            n -= 1;
        }
        n
    }

    /// Scale coefficient `u₂^{2-D}` of the content limits.
    pub fn content_scale(&self) -> f64 {
        self.u2.powf(2.0 - self.dimension)
    }

    /// `(V(r), S(r))`.
    pub fn evaluate(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
        Ok(self.evaluate_on(self.level(r), r))
    }

    /// Evaluates the level-`n` polynomial at `r` regardless of whether `r ∈ I_n`.
    pub fn evaluate_on(&self, n: u32, r: f64) -> (f64, f64) {
        let lam = self.body_volume;
        let u2 = self.u2;
        let p3 = 3f64.powi(n as i32);
        let quad = lam - (p3 - 1.0) * u2 * u2 / (2.0 * SQRT3);
        let lin = 1.5f64.powi(n as i32) * u2;
        let cst = SQRT3 / 4.0 * 0.75f64.powi(n as i32);
        (quad * r * r + lin * r + cst, 2.0 * quad * r + lin)
    }

    pub fn volume(&self, r: f64) -> Result<f64> {
        self.evaluate(r).map(|(v, _)| v)
    }

    pub fn surface(&self, r: f64) -> Result<f64> {
        self.evaluate(r).map(|(_, s)| s)
    }

    /// `c_n = (√3/(4u₂))^D ((2√3λ + u₂²)/(3ⁿ√3) - u₂²/√3)`.
    pub fn c_level(&self, n: u32) -> f64 {
        let u2 = self.u2;
        self.hole_radius().powf(self.dimension)
            * ((2.0 * SQRT3 * self.body_volume + u2 * u2) / (3f64.powi(n as i32) * SQRT3)
                - u2 * u2 / SQRT3)
    }

    /// Radius `t_n(α) = α √3/(4u₂) 2^{-n}` sweeping `I_n` as `α` runs over `[1, 2)`.
    pub fn t_level(&self, n: u32, alpha: f64) -> f64 {
        alpha * self.hole_radius() * 2f64.powi(-(n as i32))
    }

    /// `f(x, y) = x^D y + x^{D-1} b`: the S-quotient numerator along `t_n`.
    pub fn f(&self, x: f64, y: f64) -> f64 {
        let d = self.dimension;
        x.powf(d) * y + x.powf(d - 1.0) * self.b
    }

    /// `h(x, y) = ½ x^D y + b x^{D-1} + b x^{D-2}`: the Minkowski quotient along `t_n`.
    pub fn h(&self, x: f64, y: f64) -> f64 {
        let d = self.dimension;
        0.5 * x.powf(d) * y + self.b * x.powf(d - 1.0) + self.b * x.powf(d - 2.0)
    }

    /// Minkowski quotient `V(r)/r^{2-D}` at `r = t_n(α)`.
    pub fn minkowski_quotient(&self, n: u32, alpha: f64) -> f64 {
        self.h(alpha, self.c_level(n))
    }

    /// S-quotient `S(r)/((2-D) r^{1-D})` at `r = t_n(α)`.
    pub fn s_quotient(&self, n: u32, alpha: f64) -> f64 {
        self.f(alpha, self.c_level(n)) / (2.0 - self.dimension)
    }
}

/// The four content limits at `s = D` and the maximizers behind them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasketLimits {
    pub s_lower: f64,
    pub m_lower: f64,
    pub m_upper: f64,
    pub s_upper: f64,
    pub alpha_max: f64,
    pub beta_max: f64,
    pub beta_min: f64,
    /// `u₂^{2-D}`; every limit is a fixed multiple of it.
    pub scale: f64,
}

impl GasketLimits {
    /// Limits divided by `u₂^{2-D}`: `[S_*, M_*, M^*, S^*]`.
    pub fn coefficients(&self) -> [f64; 4] {
        [self.s_lower, self.m_lower, self.m_upper, self.s_upper].map(|v| v / self.scale)
    }

    pub fn strictly_ordered(&self) -> bool {
        self.s_lower < self.m_lower && self.m_lower < self.m_upper && self.m_upper < self.s_upper
    }
}

pub fn gasket_content_limits(g: &GasketProfile) -> GasketLimits {
    let d = g.dimension;
    let alpha_max = 4.0 * (1.0 - 1.0 / d);
    let root = (1.5 * d * d - 3.0 * d + 1.0).sqrt();
    let beta_max = 4.0 / d * (d - 1.0 + root);
    let beta_min = 4.0 / d * (d - 1.0 - root);
    for (name, v) in [
        ("alpha_max", alpha_max),
        ("beta_max", beta_max),
        ("beta_min", beta_min),
    ] {
        assert!((1.0..=2.0).contains(&v), "{name} = {v} outside [1, 2]");
    }
    GasketLimits {
        s_lower: (g.c + g.b) / (2.0 - d),
        m_lower: g.h(beta_min, g.c),
        m_upper: g.h(beta_max, g.c),
        s_upper: g.f(alpha_max, g.c) / (2.0 - d),
        alpha_max,
        beta_max,
        beta_min,
        scale: g.content_scale(),
    }
}

/// Envelope of both quotients over an evenly spaced `α` sweep of `[1, 2]` at level `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub level: u32,
    pub points: usize,
    pub s_lower: f64,
    pub s_upper: f64,
    pub m_lower: f64,
    pub m_upper: f64,
}

pub fn alpha_sweep(g: &GasketProfile, level: u32, points: usize) -> AlphaSweep {
    let points = points.max(2);
    let mut out = AlphaSweep {
        level,
        points,
        s_lower: f64::INFINITY,
        s_upper: f64::NEG_INFINITY,
        m_lower: f64::INFINITY,
        m_upper: f64::NEG_INFINITY,
    };
    for i in 0..points {
        let alpha = 1.0 + i as f64 / (points - 1) as f64;
        let s = g.s_quotient(level, alpha);
        let m = g.minkowski_quotient(level, alpha);
        out.s_lower = out.s_lower.min(s);
        out.s_upper = out.s_upper.max(s);
        out.m_lower = out.m_lower.min(m);
        out.m_upper = out.m_upper.max(m);
    }
    out
}

/// Exact gasket profile at the given radii.
pub fn gasket_volume_profile(
    g: &GasketProfile,
    radii: &[f64],
    body_label: &str,
) -> Result<VolumeProfile> {
    let meta = ProfileMeta::closed_form(2, "gasket", body_label, g.body_volume, 0.0);
    VolumeProfile::from_exact(radii, 0.0, meta, |r| g.evaluate_on(g.level(r), r))
}

/// Exact profile of an equilateral triangle (filled or boundary).
pub fn triangle_volume_profile(
    t: &TriangleAnisotropy,
    variant: TriangleVariant,
    radii: &[f64],
    body_label: &str,
) -> Result<VolumeProfile> {
    if let Some(&r) = radii.last() {
        triangle_tube(t, r, variant)?;
    }
    let (label, v0) = match variant {
        TriangleVariant::Filled => ("triangle", t.area()),
        TriangleVariant::Boundary => ("triangle-boundary", 0.0),
    };
    let meta = ProfileMeta::closed_form(2, label, body_label, t.body_volume, v0);
    VolumeProfile::from_exact(radii, v0, meta, |r| {
        triangle_tube(t, r, variant).unwrap_or((f64::NAN, f64::NAN))
    })
}

/// `E = C`: `E_{r,C} = (1+r)C`, so `V = λ(C)(1+r)ⁿ`.
pub fn body_dilation_profile<const D: usize>(
    body: &ConvexBody<D>,
    radii: &[f64],
    body_label: &str,
) -> Result<VolumeProfile> {
    let lam = body.volume();
    let n = D as i32;
    let meta = ProfileMeta::closed_form(D, "body", body_label, lam, lam);
    VolumeProfile::from_exact(radii, lam, meta, |r| {
        (
            lam * (1.0 + r).powi(n),
            D as f64 * lam * (1.0 + r).powi(n - 1),
        )
    })
}
