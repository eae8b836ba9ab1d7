//! Small fixed-size vector helpers on `[f64; D]`.

pub type Vector<const D: usize> = [f64; D];

#[inline]
pub fn dot<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn sub<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = a[i] - b[i];
    }
    out
}

#[inline]
pub fn add<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = a[i] + b[i];
    }
    out
}

#[inline]
pub fn scaled<const D: usize>(a: &Vector<D>, k: f64) -> Vector<D> {
    let mut out = *a;
    for v in out.iter_mut() {
        *v *= k;
    }
    out
}

#[inline]
pub fn norm_sq<const D: usize>(a: &Vector<D>) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm<const D: usize>(a: &Vector<D>) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Linear interpolation `a + t (b - a)`.
#[inline]
pub fn lerp<const D: usize>(a: &Vector<D>, b: &Vector<D>, t: f64) -> Vector<D> {
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = a[i] + t * (b[i] - a[i]);
    }
    out
}

#[inline]
pub fn cross2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Copies the first `D` coordinates of a slice; `None` when the length differs.
pub fn from_slice<const D: usize>(v: &[f64]) -> Option<Vector<D>> {
    if v.len() != D {
        return None;
    }
    let mut out = [0.0; D];
    out.copy_from_slice(v);
    Some(out)
}

/// Axis-aligned bounding box of a point set, `None` when empty.
pub fn bounding_box<'a, const D: usize, I>(points: I) -> Option<(Vector<D>, Vector<D>)>
where
    I: IntoIterator<Item = &'a Vector<D>>,
{
    let mut it = points.into_iter();
    let first = *it.next()?;
    let (mut lo, mut hi) = (first, first);
    for p in it {
        for i in 0..D {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    Some((lo, hi))
}
