//! Translation surfaces presented as a polygon with edges glued by
//! translations, and their saddle connections.
//!
//! The polygon is triangulated once. Saddle connections are found by
//! developing triangles along straight rays: from every triangle corner a
//! visibility cone is pushed across edges, unfolding the neighbouring
//! triangle each time. A developed vertex strictly inside the cone is visible
//! along a segment that meets no other vertex, so it is a saddle connection;
//! the cone then splits at that vertex. Every polygon vertex counts as a
//! singularity (for L-shapes all of them are the single cone point).

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Mat2, Vec2};
use crate::pointcloud::{GapSequence, PointSystem};
use crate::scalar::{FieldScalar, GoldenNum, Scalar};
use crate::stats::{ecdf, EmpiricalDist};

/// Incidence tolerance used by float surfaces.
pub const FLOAT_INCIDENCE_TOL: f64 = 1e-9;

/// Default cap on developed triangles per enumeration.
pub const DEFAULT_NODE_BUDGET: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
struct Neighbor<T> {
    tri: usize,
    edge: usize,
    /// Added to the current offset to place the neighbour.
    shift: Vec2<T>,
}

/// A translation surface `(M, ω)` cut open along a simple polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationSurface<T> {
    vertices: Vec<Vec2<T>>,
    pairing: Vec<usize>,
    triangles: Vec<[usize; 3]>,
    adjacency: Vec<[Neighbor<T>; 3]>,
    tag: String,
    node_budget: usize,
}

/// A saddle connection together with the triangle edges it crosses.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleConnection<T> {
    pub holonomy: Vec2<T>,
    /// Index of the polygon vertex it starts from.
    pub start: usize,
    /// `(triangle, edge)` crossings in order.
    pub development: Vec<(usize, usize)>,
}

impl<T: Scalar> SaddleConnection<T> {
    pub fn length_sq(&self) -> T {
        self.holonomy.norm_sq()
    }

    pub fn angle(&self) -> f64 {
        self.holonomy.angle()
    }
}

fn tol_for<T: Scalar>() -> f64 {
    if T::EXACT {
        0.0
    } else {
        FLOAT_INCIDENCE_TOL
    }
}

/// Sign of `cross(u, w)`, with float values compared relative to `|u||w|`.
fn orient<T: Scalar>(u: &Vec2<T>, w: &Vec2<T>) -> Ordering {
    let c = u.cross(w);
    if T::EXACT {
        return c.sign_tol(0.0);
    }
    let scale = (u.to_f64().norm_sq() * w.to_f64().norm_sq()).sqrt();
    c.sign_tol(FLOAT_INCIDENCE_TOL * scale.max(1e-300))
}

fn orient3<T: Scalar>(a: &Vec2<T>, b: &Vec2<T>, c: &Vec2<T>) -> Ordering {
    orient(&(b.clone() - a.clone()), &(c.clone() - a.clone()))
}

fn point_in_closed_triangle<T: Scalar>(p: &Vec2<T>, a: &Vec2<T>, b: &Vec2<T>, c: &Vec2<T>) -> bool {
    orient3(a, b, p) != Ordering::Less
        && orient3(b, c, p) != Ordering::Less
        && orient3(c, a, p) != Ordering::Less
}

fn segments_intersect<T: Scalar>(p1: &Vec2<T>, p2: &Vec2<T>, q1: &Vec2<T>, q2: &Vec2<T>) -> bool {
    let d1 = orient3(q1, q2, p1);
    let d2 = orient3(q1, q2, p2);
    let d3 = orient3(p1, p2, q1);
    let d4 = orient3(p1, p2, q2);
    if d1 != d2 && d3 != d4 && d1 != Ordering::Equal && d2 != Ordering::Equal
        && d3 != Ordering::Equal && d4 != Ordering::Equal
    {
        return true;
    }
    let on = |a: &Vec2<T>, b: &Vec2<T>, p: &Vec2<T>| {
        orient3(a, b, p) == Ordering::Equal && {
            let (a, b, p) = (a.to_f64(), b.to_f64(), p.to_f64());
            p.x >= a.x.min(b.x) - 1e-12 && p.x <= a.x.max(b.x) + 1e-12
                && p.y >= a.y.min(b.y) - 1e-12 && p.y <= a.y.max(b.y) + 1e-12
        }
    };
    on(q1, q2, p1) || on(q1, q2, p2) || on(p1, p2, q1) || on(p1, p2, q2)
}

/// Ear-clipping triangulation of a counter-clockwise simple polygon.
/// Straight-angle vertices are kept as triangle vertices.
fn triangulate<T: Scalar>(v: &[Vec2<T>]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut out = Vec::with_capacity(v.len() - 2);
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&i| {
            let (a, b, c) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            if orient3(&v[a], &v[b], &v[c]) != Ordering::Greater {
                return false;
            }
            idx.iter()
                .filter(|&&j| j != a && j != b && j != c)
                .all(|&j| !point_in_closed_triangle(&v[j], &v[a], &v[b], &v[c]))
        });
        let i = ear.ok_or_else(|| Error::invalid("polygon cannot be triangulated"))?;
        out.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    if orient3(&v[idx[0]], &v[idx[1]], &v[idx[2]]) != Ordering::Greater {
        return Err(Error::invalid("polygon cannot be triangulated"));
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}

impl<T: FieldScalar> TranslationSurface<T> {
    /// Polygon with counter-clockwise `vertices`; edge `i` runs from vertex
    /// `i` to `i + 1` and is glued by translation to edge `pairing[i]`.
    pub fn new(vertices: Vec<Vec2<T>>, pairing: Vec<usize>, tag: impl Into<String>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 || pairing.len() != n {
            return Err(Error::invalid("need at least 3 vertices and one partner per edge"));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid("vertices must be finite"));
        }
        let edge = |i: usize| vertices[(i + 1) % n].clone() - vertices[i].clone();
        let area2 = (0..n).fold(T::zero(), |acc, i| acc + vertices[i].cross(&vertices[(i + 1) % n]));
        if !(area2 > T::zero()) {
            return Err(Error::invalid("polygon must be counter-clockwise with positive area"));
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(&vertices[i], &vertices[(i + 1) % n], &vertices[j], &vertices[(j + 1) % n]) {
                    return Err(Error::invalid("polygon is not simple"));
                }
            }
        }
        for i in 0..n {
            let j = pairing[i];
            if j >= n || j == i || pairing[j] != i {
                return Err(Error::invalid("edge pairing must be a perfect matching"));
            }
            let s = edge(i) + edge(j);
            let ok = if T::EXACT {
                s.is_zero()
            } else {
                s.to_f64().norm_sq().sqrt() <= FLOAT_INCIDENCE_TOL
            };
            if !ok {
                return Err(Error::invalid(format!("edges {i} and {j} are not opposite translates")));
            }
        }
        let triangles = triangulate(&vertices)?;
        let adjacency = build_adjacency(&vertices, &pairing, &triangles)?;
        Ok(TranslationSurface { vertices, pairing, triangles, adjacency, tag: tag.into(), node_budget: DEFAULT_NODE_BUDGET })
    }

    pub fn with_node_budget(mut self, budget: usize) -> Self {
        self.node_budget = budget;
        self
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn pairing(&self) -> &[usize] {
        &self.pairing
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Polygon area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n).map(|i| self.vertices[i].to_f64().cross(&self.vertices[(i + 1) % n].to_f64())).sum::<f64>()
    }

    /// Classes of identified vertices, each with its total cone angle.
    pub fn cone_angles(&self) -> Vec<(Vec<usize>, f64)> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for i in 0..n {
            let j = self.pairing[i];
            // Edge i = (v_i, v_{i+1}) is glued to edge j reversed.
            for (p, q) in [(i, (j + 1) % n), ((i + 1) % n, j)] {
                let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
                parent[rp] = rq;
            }
        }
        let interior = |i: usize| {
            let prev = self.vertices[(i + n - 1) % n].to_f64();
            let cur = self.vertices[i].to_f64();
            let next = self.vertices[(i + 1) % n].to_f64();
            let a = prev - cur;
            let b = next - cur;
            // Angle swept counter-clockwise from the outgoing to the incoming edge.
            let t = a.y.atan2(a.x) - b.y.atan2(b.x);
            t.rem_euclid(2.0 * PI)
        };
        let mut classes: Vec<(Vec<usize>, f64)> = Vec::new();
        let mut root_of: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            let slot = match root_of[r] {
                Some(s) => s,
                None => {
                    classes.push((Vec::new(), 0.0));
                    root_of[r] = Some(classes.len() - 1);
                    classes.len() - 1
                }
            };
            classes[slot].0.push(i);
            classes[slot].1 += interior(i);
        }
        classes
    }

    /// Cyclically relabels the polygon so that vertex `k` comes first.
    pub fn reindexed(&self, k: usize) -> Result<Self> {
        let n = self.vertices.len();
        let vertices = (0..n).map(|i| self.vertices[(i + k) % n].clone()).collect();
        let pairing = (0..n).map(|i| (self.pairing[(i + k) % n] + n - k % n) % n).collect();
        Self::new(vertices, pairing, self.tag.clone())
    }

    /// All saddle connections with `|holonomy| ≤ r`, sorted by holonomy.
    pub fn saddle_connections(&self, r: f64) -> Result<Vec<SaddleConnection<T>>> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid("radius must be positive"));
        }
        let corners: Vec<(usize, usize)> = (0..self.triangles.len())
            .flat_map(|t| (0..3).map(move |k| (t, k)))
            .collect();
        let per: Vec<Result<Vec<SaddleConnection<T>>>> =
            corners.par_iter().map(|&(t, k)| self.develop_corner(t, k, r)).collect();
        let mut out = Vec::new();
        let mut partial = Vec::new();
        let mut exhausted = false;
        for res in per {
            match res {
                Ok(v) => out.extend(v),
                Err(Error::Exhausted { partial: p, .. }) => {
                    exhausted = true;
                    partial.extend(p);
                }
                Err(e) => return Err(e),
            }
        }
        if exhausted {
            partial.extend(out.iter().map(|s| s.holonomy.to_f64().norm_sq().sqrt()));
            return Err(Error::Exhausted { requested: self.node_budget, partial });
        }
        out.sort_by(|a, b| cmp_vec(&a.holonomy, &b.holonomy).then(a.start.cmp(&b.start)).then_with(|| a.development.cmp(&b.development)));
        Ok(out)
    }

    /// Breadth-first development of the cone at corner `k` of triangle `t`.
    fn develop_corner(&self, t: usize, k: usize, r: f64) -> Result<Vec<SaddleConnection<T>>> {
        let tri = self.triangles[t];
        let start = tri[k];
        let p = self.vertices[start].clone();
        let a = self.vertices[tri[(k + 1) % 3]].clone() - p.clone();
        let b = self.vertices[tri[(k + 2) % 3]].clone() - p.clone();
        let r2 = r * r;
        let within = |w: &Vec2<T>| w.norm_sq().to_f64() <= r2 * (1.0 + 1e-12);
        let mut out = Vec::new();
        // The corner owns its clockwise edge direction.
        if within(&a) {
            out.push(SaddleConnection { holonomy: a.clone(), start, development: Vec::new() });
        }
        struct Node<T> {
            tri: usize,
            edge: usize,
            offset: Vec2<T>,
            lo: Vec2<T>,
            hi: Vec2<T>,
            parent: Option<usize>,
        }
        let mut arena: Vec<Node<T>> = vec![Node { tri: t, edge: (k + 1) % 3, offset: Vec2::zero(), lo: a, hi: b, parent: None }];
        let path = |arena: &Vec<Node<T>>, mut i: usize| {
            let mut v = Vec::new();
            loop {
                v.push((arena[i].tri, arena[i].edge));
                match arena[i].parent {
                    Some(p) => i = p,
                    None => break,
                }
            }
            v.reverse();
            v
        };
        let mut head = 0;
        while head < arena.len() {
            if arena.len() > self.node_budget {
                return Err(Error::Exhausted {
                    requested: self.node_budget,
                    partial: out.iter().map(|s: &SaddleConnection<T>| s.holonomy.to_f64().norm_sq().sqrt()).collect(),
                });
            }
            let cur = head;
            head += 1;
            let (ct, ce) = (arena[cur].tri, arena[cur].edge);
            let tri = self.triangles[ct];
            let ea = self.vertices[tri[ce]].clone() + arena[cur].offset.clone() - p.clone();
            let eb = self.vertices[tri[(ce + 1) % 3]].clone() + arena[cur].offset.clone() - p.clone();
            if segment_distance(&ea.to_f64(), &eb.to_f64()) > r * (1.0 + 1e-9) + 1e-9 {
                continue;
            }
            let nb = &self.adjacency[ct][ce];
            let offset = arena[cur].offset.clone() + nb.shift.clone();
            let far = self.triangles[nb.tri][(nb.edge + 2) % 3];
            let w = self.vertices[far].clone() + offset.clone() - p.clone();
            let (lo, hi) = (arena[cur].lo.clone(), arena[cur].hi.clone());
            let c1 = orient(&lo, &w);
            let c2 = orient(&w, &hi);
            let e_aw = (nb.edge + 1) % 3;
            let e_wb = (nb.edge + 2) % 3;
            if c1 == Ordering::Greater && c2 == Ordering::Greater {
                if within(&w) {
                    out.push(SaddleConnection { holonomy: w.clone(), start, development: path(&arena, cur) });
                }
                arena.push(Node { tri: nb.tri, edge: e_aw, offset: offset.clone(), lo, hi: w.clone(), parent: Some(cur) });
                arena.push(Node { tri: nb.tri, edge: e_wb, offset, lo: w, hi, parent: Some(cur) });
            } else if c1 != Ordering::Greater {
                arena.push(Node { tri: nb.tri, edge: e_wb, offset, lo, hi, parent: Some(cur) });
            } else {
                arena.push(Node { tri: nb.tri, edge: e_aw, offset, lo, hi, parent: Some(cur) });
            }
        }
        Ok(out)
    }

    /// Distinct holonomy vectors of saddle connections of length `≤ r`.
    pub fn holonomies(&self, r: f64) -> Result<Vec<Vec2<T>>> {
        let all = self.saddle_connections(r)?;
        let mut kept: Vec<Vec2<T>> = Vec::with_capacity(all.len());
        for s in all {
            let h = s.holonomy;
            if T::EXACT {
                if kept.last() != Some(&h) {
                    kept.push(h);
                }
                continue;
            }
            // Sorted by x: float duplicates sit within the tolerance window
            // at the tail, possibly interleaved with other vectors.
            let hx = h.x.to_f64();
            let dup = kept
                .iter()
                .rev()
                .take_while(|k| k.x.to_f64() >= hx - 2.0 * FLOAT_INCIDENCE_TOL * (1.0 + hx.abs()))
                .any(|k| same_vec(k, &h));
            if !dup {
                kept.push(h);
            }
        }
        Ok(kept)
    }

    /// Number of distinct holonomies in the ball of radius `r`.
    pub fn count(&self, r: f64) -> Result<usize> {
        Ok(self.holonomies(r)?.len())
    }
}

fn same_vec<T: Scalar>(a: &Vec2<T>, b: &Vec2<T>) -> bool {
    if T::EXACT {
        a == b
    } else {
        let d = a.to_f64() - b.to_f64();
        d.norm_sq().sqrt() <= FLOAT_INCIDENCE_TOL * (1.0 + a.to_f64().norm_sq().sqrt())
    }
}

fn cmp_vec<T: Scalar>(a: &Vec2<T>, b: &Vec2<T>) -> Ordering {
    a.x.partial_cmp(&b.x)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
}

/// Distance from the origin to the segment `[a, b]`.
fn segment_distance(a: &Vec2<f64>, b: &Vec2<f64>) -> f64 {
    let d = *b - *a;
    let len2 = d.norm_sq();
    let t = if len2 == 0.0 { 0.0 } else { (-a.dot(&d) / len2).clamp(0.0, 1.0) };
    (a.x + t * d.x).hypot(a.y + t * d.y)
}

fn build_adjacency<T: FieldScalar>(
    v: &[Vec2<T>],
    pairing: &[usize],
    tris: &[[usize; 3]],
) -> Result<Vec<[Neighbor<T>; 3]>> {
    let n = v.len();
    let find_edge = |a: usize, b: usize| -> Option<(usize, usize)> {
        tris.iter().enumerate().find_map(|(t, tri)| {
            (0..3).find(|&e| tri[e] == a && tri[(e + 1) % 3] == b).map(|e| (t, e))
        })
    };
    let mut adj = Vec::with_capacity(tris.len());
    for tri in tris {
        let mut row: Vec<Neighbor<T>> = Vec::with_capacity(3);
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            let nb = if b == (a + 1) % n {
                let j = pairing[a];
                let (t2, e2) = find_edge(j, (j + 1) % n)
                    .ok_or_else(|| Error::invalid("polygon edge missing from triangulation"))?;
                // v_{j+1} lands on v_a.
                Neighbor { tri: t2, edge: e2, shift: v[a].clone() - v[(j + 1) % n].clone() }
            } else {
                let (t2, e2) = find_edge(b, a)
                    .ok_or_else(|| Error::invalid("diagonal missing its twin"))?;
                Neighbor { tri: t2, edge: e2, shift: Vec2::zero() }
            };
            row.push(nb);
        }
        let [x, y, z]: [Neighbor<T>; 3] = row.try_into().expect("three edges");
        adj.push([x, y, z]);
    }
    Ok(adj)
}

/// The L-shaped table: unit square with an `α × 1` bottom arm and a
/// `1 × β` left column, opposite parallel sides glued.
pub fn l_shape<T: FieldScalar>(alpha: T, beta: T) -> Result<TranslationSurface<T>> {
    let one = T::one();
    if !(alpha > one) || !(beta > one) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::invalid("L-shape needs alpha > 1 and beta > 1"));
    }
    let z = T::zero();
    let p = |x: &T, y: &T| Vec2::new(x.clone(), y.clone());
    let vertices = vec![
        p(&z, &z),
        p(&one, &z),
        p(&alpha, &z),
        p(&alpha, &one),
        p(&one, &one),
        p(&one, &beta),
        p(&z, &beta),
        p(&z, &one),
    ];
    let tag = format!("l:{},{}", alpha.to_f64(), beta.to_f64());
    TranslationSurface::new(vertices, vec![5, 3, 7, 1, 6, 0, 4, 2], tag)
}

/// The golden L: both long sides of length `φ = (1 + √5)/2`, in exact
/// `Q(√5)` arithmetic.
pub fn golden_l() -> TranslationSurface<GoldenNum> {
    let mut s = l_shape(GoldenNum::phi(), GoldenNum::phi()).expect("phi > 1");
    s.tag = "golden".into();
    s
}

/// First-quadrant (`x > 0`, `y ≥ 0`) slope gaps of the holonomies in the
/// ball, unnormalized.
pub fn sc_slope_gaps<T: FieldScalar>(s: &TranslationSurface<T>, r: f64) -> Result<GapSequence<T>> {
    let mut slopes: Vec<T> = s
        .holonomies(r)?
        .into_iter()
        .filter(|h| h.x > T::zero() && h.y >= T::zero())
        .map(|h| h.y / h.x)
        .collect();
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    slopes.dedup_by(|b, a| if T::EXACT { a == b } else { (b.to_f64() - a.to_f64()).abs() <= FLOAT_INCIDENCE_TOL });
    if slopes.len() < 2 {
        return Err(Error::InvalidState("fewer than two first-quadrant directions".into()));
    }
    Ok(GapSequence::new(slopes.windows(2).map(|w| w[1].clone() - w[0].clone()).collect()))
}

/// Distinct saddle-connection directions in the ball, sorted in `[0, 2π)`.
pub fn sc_directions<T: FieldScalar>(s: &TranslationSurface<T>, r: f64) -> Result<Vec<f64>> {
    let mut h = s.holonomies(r)?;
    h.sort_by(|a, b| a.angle().total_cmp(&b.angle()));
    // Parallel holonomies share a direction; compare exactly where possible.
    h.dedup_by(|b, a| orient(a, b) == Ordering::Equal && a.dot(b) > T::zero());
    let mut angles: Vec<f64> = h.iter().map(Vec2::angle).collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Circular direction gaps normalized by `count/2π`.
pub fn sc_angle_gaps<T: FieldScalar>(s: &TranslationSurface<T>, r: f64) -> Result<EmpiricalDist> {
    let angles = sc_directions(s, r)?;
    if angles.len() < 2 {
        return Err(Error::InvalidState("fewer than two directions".into()));
    }
    let n = angles.len();
    let scale = n as f64 / (2.0 * PI);
    let mut g: Vec<f64> = angles.windows(2).map(|w| (w[1] - w[0]) * scale).collect();
    g.push((angles[0] + 2.0 * PI - angles[n - 1]) * scale);
    ecdf(g)
}

impl<T: FieldScalar> PointSystem for TranslationSurface<T> {
    type Scalar = T;

    fn points_in_box(&self, bbox: &BoundingBox<T>) -> Result<Vec<Vec2<T>>> {
        let r = bbox.max_norm() * (1.0 + 1e-9) + 1e-9;
        Ok(self.holonomies(r)?.into_iter().filter(|h| bbox.contains(h)).collect())
    }

    fn act(&self, g: &Mat2<T>) -> Result<Self> {
        let det = g.det();
        let unimodular = if T::EXACT { det == T::one() } else { (det.to_f64() - 1.0).abs() <= FLOAT_INCIDENCE_TOL };
        if !unimodular {
            return Err(Error::invalid("surfaces are acted on by SL(2,R) only"));
        }
        let vertices: Vec<Vec2<T>> = self.vertices.iter().map(|p| g.apply(p)).collect();
        let adjacency = self
            .adjacency
            .iter()
            .map(|row| row.clone().map(|nb| Neighbor { shift: g.apply(&nb.shift), ..nb }))
            .collect();
        // A linear map of positive determinant carries the triangulation along.
        Ok(TranslationSurface {
            vertices,
            pairing: self.pairing.clone(),
            triangles: self.triangles.clone(),
            adjacency,
            tag: self.tag.clone(),
            node_budget: self.node_budget,
        })
    }

    fn is_centrally_symmetric(&self) -> bool {
        true
    }

    fn incidence_tol(&self) -> f64 {
        tol_for::<T>()
    }
}
