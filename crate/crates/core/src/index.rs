//! k-d tree over sample sites with gauge-distance nearest queries.
//!
//! Node pruning uses lower bounds for `min_{y∈box} gauge(x - y)`: the
//! Euclidean box distance divided by the outradius and, for bodies with few
//! facets, the separating bound `(u·x - h_box(u)) / h_C(u)` for the
//! coordinate directions and every facet normal.

use crate::body::ConvexBody;
use crate::vector::{self, dot, Vector};

const LEAF_SIZE: usize = 8;
const FACET_BOUND_LIMIT: usize = 16;

#[derive(Clone, Debug)]
struct Node<const D: usize> {
    lo: Vector<D>,
    hi: Vector<D>,
    start: u32,
    end: u32,
    /// Child indices; `u32::MAX` marks a leaf.
    left: u32,
    right: u32,
}

#[derive(Clone, Debug)]
pub struct SiteIndex<const D: usize> {
    points: Vec<Vector<D>>,
    nodes: Vec<Node<D>>,
}

impl<const D: usize> SiteIndex<D> {
    pub fn new(mut points: Vec<Vector<D>>) -> Self {
        let mut nodes = Vec::new();
        if !points.is_empty() {
            let n = points.len();
            build(&mut points, 0, n, &mut nodes);
        }
        Self { points, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector<D>] {
        &self.points
    }

    /// Euclidean nearest site: `(distance, index)`.
    pub fn nearest_euclidean(&self, x: &Vector<D>) -> Option<(f64, usize)> {
        if self.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        let mut best_idx = 0;
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if box_dist_sq(x, &node.lo, &node.hi) >= best {
                continue;
            }
            if node.left == u32::MAX {
                for i in node.start..node.end {
                    let d = vector::dist_sq(x, &self.points[i as usize]);
                    if d < best {
                        best = d;
                        best_idx = i as usize;
                    }
                }
            } else {
                let (l, r) = (node.left, node.right);
                let dl = box_dist_sq(x, &self.nodes[l as usize].lo, &self.nodes[l as usize].hi);
                let dr = box_dist_sq(x, &self.nodes[r as usize].lo, &self.nodes[r as usize].hi);
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some((best.sqrt(), best_idx))
    }
}

/// Precomputed pruning data for one body.
#[derive(Clone, Debug)]
pub struct GaugeQuery<'a, const D: usize> {
    body: &'a ConvexBody<D>,
    outradius_sq: f64,
    axis_pos: Vector<D>,
    axis_neg: Vector<D>,
    use_facets: bool,
}

impl<'a, const D: usize> GaugeQuery<'a, D> {
    pub fn new(body: &'a ConvexBody<D>) -> Self {
        let mut axis_pos = [0.0; D];
        let mut axis_neg = [0.0; D];
        for i in 0..D {
            let mut e = [0.0; D];
            e[i] = 1.0;
            axis_pos[i] = body.support(&e);
            e[i] = -1.0;
            axis_neg[i] = body.support(&e);
        }
        let b = body.outradius();
        Self {
            body,
            outradius_sq: b * b,
            axis_pos,
            axis_neg,
            use_facets: body.facets().len() <= FACET_BOUND_LIMIT,
        }
    }

    /// Whether no site in the box can beat `best`. The Euclidean test
    /// `|x - y| ≥ b·best` comes first; separating bounds
    /// `(ν·x - h_box(ν)) / h_C(ν)` for the axes and facets follow when the
    /// body has few facets.
    #[inline]
    fn prunes(&self, x: &Vector<D>, lo: &Vector<D>, hi: &Vector<D>, best: f64) -> bool {
        if !best.is_finite() {
            return false;
        }
        if box_dist_sq(x, lo, hi) >= best * best * self.outradius_sq {
            return true;
        }
        if !self.use_facets {
            return false;
        }
        for i in 0..D {
            if x[i] - hi[i] >= best * self.axis_pos[i] || lo[i] - x[i] >= best * self.axis_neg[i] {
                return true;
            }
        }
        for f in self.body.facets() {
            let mut hbox = 0.0;
            for i in 0..D {
                hbox += (f.normal[i] * lo[i]).max(f.normal[i] * hi[i]);
            }
            if dot(&f.normal, x) - hbox >= best * f.offset {
                return true;
            }
        }
        false
    }

    /// Exact `min_y gauge(x - y)` over all sites, with the site index.
    /// `hint` seeds the search with a site expected to be close.
    pub fn nearest(
        &self,
        index: &SiteIndex<D>,
        x: &Vector<D>,
        hint: Option<usize>,
    ) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut best_idx = usize::MAX;
        if let Some(h) = hint {
            best = self.body.gauge(&vector::sub(x, &index.points[h]));
            best_idx = h;
        }
        if index.nodes.is_empty() {
            return (best, best_idx);
        }
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &index.nodes[id as usize];
            if self.prunes(x, &node.lo, &node.hi, best) {
                continue;
            }
            if node.left == u32::MAX {
                let reach_sq = best * best * self.outradius_sq;
                for i in node.start..node.end {
                    let y = &index.points[i as usize];
                    if vector::dist_sq(x, y) >= reach_sq {
                        continue;
                    }
                    let g = self.body.gauge(&vector::sub(x, y));
                    if g < best || (g == best && (i as usize) < best_idx) {
                        best = g;
                        best_idx = i as usize;
                    }
                }
                continue;
            }
            let (l, r) = (node.left as usize, node.right as usize);
            let dl = box_dist_sq(x, &index.nodes[l].lo, &index.nodes[l].hi);
            let dr = box_dist_sq(x, &index.nodes[r].lo, &index.nodes[r].hi);
            if dl <= dr {
                stack.push(r as u32);
                stack.push(l as u32);
            } else {
                stack.push(l as u32);
                stack.push(r as u32);
            }
        }
        (best, best_idx)
    }
}

fn box_dist_sq<const D: usize>(x: &Vector<D>, lo: &Vector<D>, hi: &Vector<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        let d = (lo[i] - x[i]).max(0.0).max(x[i] - hi[i]);
        s += d * d;
    }
    s
}

fn build<const D: usize>(
    points: &mut [Vector<D>],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node<D>>,
) -> u32 {
    let (lo, hi) = vector::bounding_box(points[start..end].iter()).unwrap();
    let id = nodes.len() as u32;
    nodes.push(Node {
        lo,
        hi,
        start: start as u32,
        end: end as u32,
        left: u32::MAX,
        right: u32::MAX,
    });
    if end - start <= LEAF_SIZE {
        return id;
    }
    let axis = (0..D)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap();
    let mid = (end - start) / 2;
    points[start..end].select_nth_unstable_by(mid, |p, q| p[axis].total_cmp(&q[axis]));
    let left = build(points, start, start + mid, nodes);
    let right = build(points, start + mid, end, nodes);
    nodes[id as usize].left = left;
    nodes[id as usize].right = right;
    id
}
