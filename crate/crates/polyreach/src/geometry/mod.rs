//! Polytope algebra in half-space representation.
//!
//! A [`Polytope`] is `{x | Hx <= b}` with rows normalized to unit Euclidean
//! norm; degenerate and empty polytopes are legal values, and equality
//! constraints appear as inequality pairs. A [`PolyUnion`] is an ordered
//! union of same-dimension polytopes with a canonical part order so that
//! serialized outputs are byte-stable.

mod hull;

pub use hull::{convex_hull, hull_of_union};

use std::cmp::Ordering;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lp::{lp_feasible, lp_optimize, LpOutcome, Sense};
use crate::matrix::{check_finite, dot, euclid_norm, Matrix, Vector};

/// Tolerance for vertex dedup and rank decisions.
pub const GEOMETRY_TOL: f64 = 1e-8;

/// Default tolerance for point-containment queries.
pub const CONTAINMENT_TOL: f64 = 1e-7;

/// Work budget for exhaustive active-set vertex enumeration: the number of
/// row subsets examined, sized so that 24 constraints in dimension 3 fit.
const SUBSET_BUDGET: u64 = 250_000;

#[derive(Clone)]
pub struct Polytope {
    h: Matrix,
    b: Vector,
    verts: OnceLock<Vec<Vector>>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h && self.b == other.b
    }
}

impl std::fmt::Debug for Polytope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Polytope(dim={}, rows={})", self.dim(), self.num_rows())
    }
}

impl Polytope {
    /// Build from `Hx <= b`. Rows are normalized to unit Euclidean norm;
    /// trivially satisfied zero rows (`0·x <= b`, `b >= 0`) are dropped,
    /// while contradictory zero rows are kept and mark the polytope empty.
    pub fn new(h: Matrix, b: Vector) -> Result<Self> {
        if h.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "H has {} rows but b has {} entries",
                h.rows(),
                b.len()
            )));
        }
        if h.cols() == 0 {
            return Err(Error::DimensionMismatch(
                "polytope dimension must be >= 1".into(),
            ));
        }
        check_finite(&b, "polytope offsets")?;
        let mut rows: Vec<Vector> = Vec::with_capacity(h.rows());
        let mut offs: Vector = Vec::with_capacity(b.len());
        for i in 0..h.rows() {
            let norm = euclid_norm(h.row(i));
            if norm <= 1e-12 {
                if b[i] >= 0.0 {
                    continue;
                }
                rows.push(vec![0.0; h.cols()]);
                offs.push(b[i]);
            } else {
                rows.push(h.row(i).iter().map(|v| v / norm).collect());
                offs.push(b[i] / norm);
            }
        }
        Ok(Self {
            h: Matrix::from_rows(h.cols(), &rows)?,
            b: offs,
            verts: OnceLock::new(),
        })
    }

    pub fn from_rows(dim: usize, rows: &[Vector], offsets: &[f64]) -> Result<Self> {
        Polytope::new(Matrix::from_rows(dim, rows)?, offsets.to_vec())
    }

    /// Axis-aligned box `||x - center||_inf <= radius`.
    pub fn bounding_box_set(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::NonFinite("box radius must be finite and >= 0".into()));
        }
        let n = center.len();
        let mut rows = Vec::with_capacity(2 * n);
        let mut offs = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut plus = vec![0.0; n];
            plus[i] = 1.0;
            rows.push(plus);
            offs.push(center[i] + radius);
            let mut minus = vec![0.0; n];
            minus[i] = -1.0;
            rows.push(minus);
            offs.push(radius - center[i]);
        }
        Polytope::from_rows(n, &rows, &offs)
    }

    pub(crate) fn with_cached_vertices(h: Matrix, b: Vector, verts: Vec<Vector>) -> Result<Self> {
        let p = Polytope::new(h, b)?;
        let _ = p.verts.set(verts);
        Ok(p)
    }

    /// Rebuild verbatim from our own serialized output: rows are already
    /// normalized, so no construction-time rewriting may touch them.
    pub(crate) fn from_trusted_rows(
        h: Matrix,
        b: Vector,
        verts: Option<Vec<Vector>>,
    ) -> Result<Self> {
        if h.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "H has {} rows but b has {} entries",
                h.rows(),
                b.len()
            )));
        }
        let p = Polytope {
            h,
            b,
            verts: OnceLock::new(),
        };
        if let Some(v) = verts {
            let _ = p.verts.set(v);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.h.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.h.rows()
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// True iff `{x | Hx <= b}` has no point, by LP feasibility.
    pub fn is_empty(&self) -> Result<bool> {
        Ok(!lp_feasible(&self.h, &self.b)?.is_feasible())
    }

    /// A point of the polytope, when one exists.
    pub fn any_point(&self) -> Result<Option<Vector>> {
        Ok(lp_feasible(&self.h, &self.b)?.witness().cloned())
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        (0..self.num_rows()).all(|i| dot(self.h.row(i), x) <= self.b[i] + tol)
    }

    /// Constraint-row concatenation; the result may be empty.
    pub fn intersect(&self, other: &Polytope) -> Result<Polytope> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot intersect dimension {} with {}",
                self.dim(),
                other.dim()
            )));
        }
        let h = self.h.vstack(&other.h)?;
        let mut b = self.b.clone();
        b.extend_from_slice(&other.b);
        Polytope::new(h, b)
    }

    /// Drop every row whose removal provably leaves the set unchanged: row i
    /// is removable when maximizing its left-hand side under the remaining
    /// rows stays within `b_i`.
    pub fn remove_redundant(&self) -> Result<Polytope> {
        if self.is_empty()? {
            return Err(Error::EmptyPolytope);
        }
        let m = self.num_rows();
        let mut keep = vec![true; m];
        for i in 0..m {
            let others: Vec<usize> = (0..m).filter(|&j| j != i && keep[j]).collect();
            let rows: Vec<Vector> = others.iter().map(|&j| self.h.row_vec(j)).collect();
            let offs: Vector = others.iter().map(|&j| self.b[j]).collect();
            let sys = Matrix::from_rows(self.dim(), &rows)?;
            match lp_optimize(self.h.row(i), &sys, &offs, Sense::Maximize)? {
                LpOutcome::Optimal { value, .. } => {
                    if value <= self.b[i] + 1e-9 {
                        keep[i] = false;
                    }
                }
                LpOutcome::Unbounded => {}
                other => {
                    return Err(Error::Model(format!(
                        "redundancy LP returned unexpected status {other:?}"
                    )))
                }
            }
        }
        let rows: Vec<Vector> = (0..m)
            .filter(|&i| keep[i])
            .map(|i| self.h.row_vec(i))
            .collect();
        let offs: Vector = (0..m).filter(|&i| keep[i]).map(|i| self.b[i]).collect();
        Polytope::from_rows(self.dim(), &rows, &offs)
    }

    /// Componentwise extent, by 2n support LPs. Errors on unbounded or empty
    /// polytopes.
    pub fn bounds(&self) -> Result<(Vector, Vector)> {
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let mut c = vec![0.0; n];
            c[i] = 1.0;
            match lp_optimize(&c, &self.h, &self.b, Sense::Maximize)? {
                LpOutcome::Optimal { value, .. } => hi[i] = value,
                LpOutcome::Unbounded => return Err(Error::UnboundedPolytope),
                LpOutcome::Infeasible => return Err(Error::EmptyPolytope),
                _ => unreachable!(),
            }
            match lp_optimize(&c, &self.h, &self.b, Sense::Minimize)? {
                LpOutcome::Optimal { value, .. } => lo[i] = value,
                LpOutcome::Unbounded => return Err(Error::UnboundedPolytope),
                LpOutcome::Infeasible => return Err(Error::EmptyPolytope),
                _ => unreachable!(),
            }
        }
        Ok((lo, hi))
    }

    pub(crate) fn cached_vertices(&self) -> Option<&[Vector]> {
        self.verts.get().map(|v| v.as_slice())
    }

    /// Exact vertex set by exhaustive enumeration of n-row active sets on
    /// the irredundant representation. Errors on empty or unbounded input.
    pub fn vertices(&self) -> Result<&[Vector]> {
        if let Some(v) = self.verts.get() {
            return Ok(v);
        }
        let computed = self.enumerate_vertices()?;
        Ok(self.verts.get_or_init(|| computed))
    }

    pub fn vertices_owned(&self) -> Result<Vec<Vector>> {
        Ok(self.vertices()?.to_vec())
    }

    fn enumerate_vertices(&self) -> Result<Vec<Vector>> {
        if self.is_empty()? {
            return Err(Error::EmptyPolytope);
        }
        self.bounds()?; // boundedness gate
        let reduced = self.remove_redundant()?;
        let (m, n) = (reduced.num_rows(), reduced.dim());
        if m < n || binomial(m, n) > SUBSET_BUDGET {
            if m < n {
                return Err(Error::UnboundedPolytope);
            }
            return Err(Error::VertexBudget { rows: m, dim: n });
        }
        let mut verts: Vec<Vector> = Vec::new();
        let mut subset: Vec<usize> = (0..n).collect();
        loop {
            let rows: Vec<Vector> = subset.iter().map(|&i| reduced.h.row_vec(i)).collect();
            let rhs: Vector = subset.iter().map(|&i| reduced.b[i]).collect();
            let sys = Matrix::from_rows(n, &rows)?;
            if let Some(x) = crate::matrix::solve_square(&sys, &rhs, GEOMETRY_TOL) {
                if reduced.contains_point(&x, CONTAINMENT_TOL)
                    && !verts
                        .iter()
                        .any(|v| crate::matrix::inf_norm(&sub(v, &x)) <= GEOMETRY_TOL)
                {
                    verts.push(x);
                }
            }
            if !next_subset(&mut subset, m) {
                break;
            }
        }
        sort_points(&mut verts);
        Ok(verts)
    }

    /// Image `{Cx + d | x in P}`, computed as the hull of the mapped
    /// vertices. Handles rank-deficient maps (degenerate images).
    pub fn affine_image(&self, c: &Matrix, d: &[f64]) -> Result<Polytope> {
        if c.cols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "map expects dimension {}, polytope has {}",
                c.cols(),
                self.dim()
            )));
        }
        if c.rows() != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "map has {} rows but offset has {} entries",
                c.rows(),
                d.len()
            )));
        }
        let mapped: Vec<Vector> = self
            .vertices()?
            .iter()
            .map(|v| add(&c.matvec(v), d))
            .collect();
        convex_hull(&mapped)
    }
}

/// Ordered union of polytopes over one common dimension. The canonical part
/// order (lexicographic by sorted vertex list, with an H-row fallback for
/// unbounded parts) plus empty-part dropping makes serialized output stable.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyUnion {
    dim: usize,
    parts: Vec<Polytope>,
}

impl PolyUnion {
    /// Canonicalizing constructor: validates dimensions, drops empty parts,
    /// sorts the survivors.
    pub fn new(dim: usize, parts: Vec<Polytope>) -> Result<Self> {
        for p in &parts {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "union of dimension {} cannot hold a part of dimension {}",
                    dim,
                    p.dim()
                )));
            }
        }
        let mut kept = Vec::with_capacity(parts.len());
        for p in parts {
            if !p.is_empty()? {
                kept.push(p);
            }
        }
        let mut keyed: Vec<(PartKey, Polytope)> =
            kept.into_iter().map(|p| (PartKey::of(&p), p)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self {
            dim,
            parts: keyed.into_iter().map(|(_, p)| p).collect(),
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            parts: Vec::new(),
        }
    }

    /// Rebuild a union from parts already known to be non-empty and in
    /// canonical order (deserialization of our own output).
    pub(crate) fn from_parts_trusted(dim: usize, parts: Vec<Polytope>) -> Self {
        Self { dim, parts }
    }

    pub fn singleton(part: Polytope) -> Result<Self> {
        PolyUnion::new(part.dim(), vec![part])
    }

    /// Order-preserving concatenation of already-canonical unions; used for
    /// cumulative reach sets, where step order must survive.
    pub fn concat(unions: &[PolyUnion]) -> Result<Self> {
        let Some(first) = unions.first() else {
            return Err(Error::Usage("cannot concatenate zero unions".into()));
        };
        let dim = first.dim;
        let mut parts = Vec::new();
        for u in unions {
            if u.dim != dim {
                return Err(Error::DimensionMismatch(
                    "unions of different dimensions".into(),
                ));
            }
            parts.extend(u.parts.iter().cloned());
        }
        Ok(Self { dim, parts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parts(&self) -> &[Polytope] {
        &self.parts
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty_set(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        self.parts.iter().any(|p| p.contains_point(x, tol))
    }
}

/// Sort key for canonical part ordering.
struct PartKey {
    degenerate: u8,
    values: Vec<f64>,
}

impl PartKey {
    fn of(p: &Polytope) -> Self {
        match p.vertices() {
            Ok(vs) => PartKey {
                degenerate: 0,
                values: vs.iter().flatten().copied().collect(),
            },
            Err(_) => {
                let mut rows: Vec<Vector> = (0..p.num_rows())
                    .map(|i| {
                        let mut r = p.h.row_vec(i);
                        r.push(p.b[i]);
                        r
                    })
                    .collect();
                sort_points(&mut rows);
                PartKey {
                    degenerate: 1,
                    values: rows.into_iter().flatten().collect(),
                }
            }
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        self.degenerate
            .cmp(&other.degenerate)
            .then_with(|| compare_points(&self.values, &other.values))
    }
}

pub(crate) fn compare_points(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

pub(crate) fn sort_points(points: &mut [Vector]) {
    points.sort_by(|a, b| compare_points(a, b));
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Vertices of a 2D polytope in counterclockwise order, for polygon
/// clipping. Uses the cache when present and enumerates only when the row
/// count is small; returns `None` otherwise (callers fall back to LPs).
pub(crate) fn ccw_polygon_2d(p: &Polytope, max_rows_for_enum: usize) -> Option<Vec<Vector>> {
    if p.dim() != 2 {
        return None;
    }
    let verts: Vec<Vector> = match p.cached_vertices() {
        Some(v) => v.to_vec(),
        None if p.num_rows() <= max_rows_for_enum => p.vertices().ok()?.to_vec(),
        None => return None,
    };
    if verts.len() <= 2 {
        return Some(verts);
    }
    let n = verts.len() as f64;
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / n;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / n;
    let mut keyed: Vec<(f64, Vector)> = verts
        .into_iter()
        .map(|v| ((v[1] - cy).atan2(v[0] - cx), v))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| compare_points(&a.1, &b.1)));
    Some(keyed.into_iter().map(|(_, v)| v).collect())
}

/// Clip a convex polygon (counterclockwise, possibly degenerate) by the
/// half-plane `normal . x <= offset`. Points within `tol` of the boundary
/// are kept, matching closed-set semantics.
pub(crate) fn clip_polygon(
    points: &[Vector],
    normal: &[f64],
    offset: f64,
    tol: f64,
) -> Vec<Vector> {
    let dist = |p: &Vector| dot(normal, p) - offset;
    match points.len() {
        0 => Vec::new(),
        1 => {
            if dist(&points[0]) <= tol {
                points.to_vec()
            } else {
                Vec::new()
            }
        }
        2 => {
            let (d0, d1) = (dist(&points[0]), dist(&points[1]));
            let mut out = Vec::new();
            if d0 <= tol {
                out.push(points[0].clone());
            }
            if (d0 > tol) != (d1 > tol) {
                let t = d0 / (d0 - d1);
                out.push(lerp(&points[0], &points[1], t));
            }
            if d1 <= tol {
                out.push(points[1].clone());
            }
            dedup_in_order(out)
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..points.len() {
                let cur = &points[i];
                let prev = &points[(i + points.len() - 1) % points.len()];
                let (dc, dp) = (dist(cur), dist(prev));
                let cur_in = dc <= tol;
                let prev_in = dp <= tol;
                if cur_in {
                    if !prev_in {
                        out.push(lerp(prev, cur, dp / (dp - dc)));
                    }
                    out.push(cur.clone());
                } else if prev_in {
                    out.push(lerp(prev, cur, dp / (dp - dc)));
                }
            }
            dedup_in_order(out)
        }
    }
}

fn lerp(a: &Vector, b: &Vector, t: f64) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn dedup_in_order(points: Vec<Vector>) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(points.len());
    for p in points {
        if !out
            .iter()
            .any(|q| crate::matrix::inf_norm(&sub(q, &p)) <= GEOMETRY_TOL)
        {
            out.push(p);
        }
    }
    out
}

fn binomial(m: usize, n: usize) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..n.min(m - n) {
        acc = acc.saturating_mul((m - i) as u64) / (i as u64 + 1);
        if acc > 10 * SUBSET_BUDGET {
            return acc;
        }
    }
    acc
}

/// Advance `subset` to the next lexicographic n-combination of `0..m`.
fn next_subset(subset: &mut [usize], m: usize) -> bool {
    let n = subset.len();
    if n == 0 {
        return false;
    }
    let mut i = n;
    while i > 0 {
        i -= 1;
        if subset[i] < m - (n - i) {
            subset[i] += 1;
            for j in i + 1..n {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
