//! Convex hull of a finite point set, as a minimal half-space representation.
//!
//! The cloud is first reduced to its affine hull (producing inequality pairs
//! for the orthogonal complement), then facets inside the hull subspace are
//! enumerated brute force: every affinely independent point subset spans a
//! candidate hyperplane, kept when all points lie on one side. That is robust
//! and deterministic at the low dimensions this crate targets.

use crate::error::{Error, Result};
use crate::matrix::{check_finite, dot, euclid_norm, inf_norm, Matrix, Vector};

use super::{compare_points, sort_points, sub, PolyUnion, Polytope, GEOMETRY_TOL};

/// Minimal H-representation of `conv(points)`. Degenerate inputs (fewer
/// affine dimensions than the ambient space) yield inequality pairs for the
/// affine hull; a single point yields only equality pairs.
pub fn convex_hull(points: &[Vector]) -> Result<Polytope> {
    let Some(first) = points.first() else {
        return Err(Error::Usage("convex hull of zero points".into()));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("points of dimension 0".into()));
    }
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch(
                "points of mixed dimensions".into(),
            ));
        }
        check_finite(p, "hull input point")?;
    }
    let scale = 1.0 + points.iter().map(|p| inf_norm(p)).fold(0.0, f64::max);

    let origin = points[0].clone();
    let basis = affine_basis(points, &origin, GEOMETRY_TOL * scale);
    let rank = basis.len();
    let complement = orthogonal_complement(&basis, n);

    let mut rows: Vec<Vector> = Vec::new();
    let mut offs: Vector = Vec::new();

    // Equality pairs pinning the affine hull, tightened over the cloud so
    // every input point satisfies them exactly.
    for u in &complement {
        let values: Vec<f64> = points.iter().map(|p| dot(u, p)).collect();
        let (lo, hi) = min_max(&values);
        rows.push(u.clone());
        offs.push(hi);
        rows.push(u.iter().map(|v| -v).collect());
        offs.push(-lo);
    }

    if rank == 0 {
        let h = Matrix::from_rows(n, &rows)?;
        return Polytope::with_cached_vertices(h, offs, vec![origin]);
    }

    // Coordinates of the cloud inside the hull subspace.
    let coords: Vec<Vector> = points
        .iter()
        .map(|p| {
            let d = sub(p, &origin);
            basis.iter().map(|b| dot(b, &d)).collect()
        })
        .collect();

    // Segments and planar clouds have near-linear paths that tolerate
    // duplicate points; higher ranks dedup first and enumerate supporting
    // hyperplanes from point subsets.
    let (facets, extreme) = match rank {
        1 => segment_facets_and_vertices(&coords, points),
        2 => chain_facets_and_vertices(&coords, points),
        _ => {
            let keep = dedup_indices(points);
            let cloud: Vec<Vector> = keep.iter().map(|&i| points[i].clone()).collect();
            let dcoords: Vec<Vector> = keep.iter().map(|&i| coords[i].clone()).collect();
            let facets = enumerate_facets(&dcoords, rank, scale);
            let extreme = extreme_points(&cloud, &dcoords, &facets, rank, scale);
            (facets, extreme)
        }
    };

    let mut facet_rows: Vec<(Vector, f64)> = facets
        .iter()
        .map(|(u, c)| {
            let a: Vector = (0..n)
                .map(|j| basis.iter().zip(u).map(|(bk, uk)| uk * bk[j]).sum())
                .collect();
            let off = c + dot(&a, &origin);
            (a, off)
        })
        .collect();
    facet_rows.sort_by(|x, y| {
        compare_points(&x.0, &y.0).then_with(|| x.1.total_cmp(&y.1))
    });
    for (a, off) in facet_rows {
        rows.push(a);
        offs.push(off);
    }

    let mut verts = extreme;
    sort_points(&mut verts);
    let h = Matrix::from_rows(n, &rows)?;
    Polytope::with_cached_vertices(h, offs, verts)
}

/// Hull of every part of the union, via the concatenated vertex lists.
pub fn hull_of_union(u: &PolyUnion) -> Result<Polytope> {
    if u.is_empty_set() {
        return Err(Error::Usage("convex hull of an empty union".into()));
    }
    let mut points: Vec<Vector> = Vec::new();
    for part in u.parts() {
        points.extend(part.vertices()?.iter().cloned());
    }
    convex_hull(&points)
}

fn dedup_indices(points: &[Vector]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if !out
            .iter()
            .any(|&j| inf_norm(&sub(p, &points[j])) <= GEOMETRY_TOL)
        {
            out.push(i);
        }
    }
    out
}

/// Rank-1 cloud: two cap facets at the extreme coordinates.
fn segment_facets_and_vertices(
    coords: &[Vector],
    cloud: &[Vector],
) -> (Vec<(Vector, f64)>, Vec<Vector>) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, z) in coords.iter().enumerate() {
        if z[0] < coords[imin][0] {
            imin = i;
        }
        if z[0] > coords[imax][0] {
            imax = i;
        }
    }
    let facets = vec![
        (vec![-1.0], -coords[imin][0]),
        (vec![1.0], coords[imax][0]),
    ];
    (facets, vec![cloud[imin].clone(), cloud[imax].clone()])
}

/// Orthonormal basis of the affine hull directions via modified
/// Gram-Schmidt.
fn affine_basis(cloud: &[Vector], origin: &Vector, tol: f64) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for p in cloud.iter().skip(1) {
        let mut d = sub(p, origin);
        for b in &basis {
            let proj = dot(&d, b);
            for (di, bi) in d.iter_mut().zip(b) {
                *di -= proj * bi;
            }
        }
        let norm = euclid_norm(&d);
        if norm > tol {
            basis.push(d.iter().map(|v| v / norm).collect());
        }
        if basis.len() == origin.len() {
            break;
        }
    }
    basis
}

/// Extend `basis` to an orthonormal basis of R^n; returns the new
/// directions. Candidates are the standard basis vectors, taken greedily by
/// largest residual for determinism.
fn orthogonal_complement(basis: &[Vector], n: usize) -> Vec<Vector> {
    let mut full: Vec<Vector> = basis.to_vec();
    let mut out: Vec<Vector> = Vec::new();
    while full.len() < n {
        let mut best: Option<(Vector, f64)> = None;
        for j in 0..n {
            let mut d = vec![0.0; n];
            d[j] = 1.0;
            for b in &full {
                let proj = dot(&d, b);
                for (di, bi) in d.iter_mut().zip(b) {
                    *di -= proj * bi;
                }
            }
            let norm = euclid_norm(&d);
            if best.as_ref().is_none_or(|(_, bn)| norm > *bn) {
                best = Some((d, norm));
            }
        }
        let (d, norm) = best.expect("n > 0");
        let unit: Vector = d.iter().map(|v| v / norm).collect();
        full.push(unit.clone());
        out.push(unit);
    }
    out
}

/// Andrew's monotone chain for planar clouds: facets from consecutive hull
/// edges, extreme points straight from the chain.
fn chain_facets_and_vertices(
    coords: &[Vector],
    cloud: &[Vector],
) -> (Vec<(Vector, f64)>, Vec<Vector>) {
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| compare_points(&coords[a], &coords[b]));
    let cross = |o: &Vector, a: &Vector, b: &Vector| -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let build = |iter: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
        let mut chain: Vec<usize> = Vec::new();
        for idx in iter {
            while chain.len() >= 2
                && cross(
                    &coords[chain[chain.len() - 2]],
                    &coords[chain[chain.len() - 1]],
                    &coords[idx],
                ) <= 0.0
            {
                chain.pop();
            }
            chain.push(idx);
        }
        chain
    };
    let lower = build(&mut order.iter().copied());
    let upper = build(&mut order.iter().rev().copied());
    // Counterclockwise cycle; chain endpoints are shared.
    let mut cycle: Vec<usize> = lower;
    cycle.pop();
    let mut tail = upper;
    tail.pop();
    cycle.extend(tail);

    let mut facets: Vec<(Vector, f64)> = Vec::new();
    for i in 0..cycle.len() {
        let a = &coords[cycle[i]];
        let b = &coords[cycle[(i + 1) % cycle.len()]];
        let edge = [b[0] - a[0], b[1] - a[1]];
        let norm = (edge[0] * edge[0] + edge[1] * edge[1]).sqrt();
        if norm <= 1e-15 {
            continue;
        }
        // Interior lies left of a counterclockwise edge; both endpoints sit
        // on the facet, so the offset comes from them directly.
        let normal = vec![edge[1] / norm, -edge[0] / norm];
        let offset = dot(&normal, a).max(dot(&normal, b));
        push_facet(&mut facets, normal, offset);
    }
    facets.sort_by(|x, y| compare_points(&x.0, &y.0).then_with(|| x.1.total_cmp(&y.1)));
    let verts = cycle.iter().map(|&i| cloud[i].clone()).collect();
    (facets, verts)
}

/// All supporting hyperplanes spanned by `rank`-subsets of the cloud, as
/// (outward unit normal, tight offset) pairs in subspace coordinates.
fn enumerate_facets(coords: &[Vector], rank: usize, scale: f64) -> Vec<(Vector, f64)> {
    let k = coords.len();
    let side_tol = 1e-9 * scale;
    let mut facets: Vec<(Vector, f64)> = Vec::new();
    let mut subset: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(normal) = subset_normal(coords, &subset, rank, scale) {
            let values: Vec<f64> = coords.iter().map(|z| dot(&normal, z)).collect();
            let anchor = values[subset[0]];
            let (lo, hi) = min_max(&values);
            if hi <= anchor + side_tol {
                push_facet(&mut facets, normal, hi);
            } else if lo >= anchor - side_tol {
                push_facet(
                    &mut facets,
                    normal.iter().map(|v| -v).collect(),
                    -lo,
                );
            }
        }
        if !next_combination(&mut subset, k) {
            break;
        }
    }
    facets.sort_by(|x, y| compare_points(&x.0, &y.0).then_with(|| x.1.total_cmp(&y.1)));
    facets
}

/// Unit normal of the hyperplane through the subset points, or `None` when
/// they are affinely dependent.
fn subset_normal(
    coords: &[Vector],
    subset: &[usize],
    rank: usize,
    scale: f64,
) -> Option<Vector> {
    let tol = GEOMETRY_TOL * scale;
    let base = &coords[subset[0]];
    let mut m: Vec<Vector> = subset[1..]
        .iter()
        .map(|&i| sub(&coords[i], base))
        .collect();
    let rows = m.len();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..rank {
        let Some((best, mag)) = (row..rows)
            .map(|i| (i, m[i][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        if mag <= tol {
            continue;
        }
        m.swap(row, best);
        for i in 0..rows {
            if i == row {
                continue;
            }
            let f = m[i][col] / m[row][col];
            if f != 0.0 {
                for c in 0..rank {
                    let delta = f * m[row][c];
                    m[i][c] -= delta;
                }
                m[i][col] = 0.0;
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == rows {
            break;
        }
    }
    if pivots.len() < rows {
        return None;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free = (0..rank).find(|c| !pivot_cols.contains(c))?;
    let mut u = vec![0.0; rank];
    u[free] = 1.0;
    for &(r, c) in pivots.iter().rev() {
        u[c] = -m[r][free] / m[r][c];
    }
    let norm = euclid_norm(&u);
    Some(u.iter().map(|v| v / norm).collect())
}

fn push_facet(facets: &mut Vec<(Vector, f64)>, normal: Vector, offset: f64) {
    let dup = facets.iter().any(|(u, c)| {
        inf_norm(&sub(u, &normal)) <= 1e-7 && (c - offset).abs() <= 1e-7
    });
    if !dup {
        facets.push((normal, offset));
    }
}

/// Input points lying on enough independent facets to be hull vertices.
fn extreme_points(
    cloud: &[Vector],
    coords: &[Vector],
    facets: &[(Vector, f64)],
    rank: usize,
    scale: f64,
) -> Vec<Vector> {
    let active_tol = 1e-7 * scale;
    let mut out = Vec::new();
    for (p, z) in cloud.iter().zip(coords) {
        let active: Vec<Vector> = facets
            .iter()
            .filter(|(u, c)| dot(u, z) >= c - active_tol)
            .map(|(u, _)| u.clone())
            .collect();
        if normal_rank(&active, rank) == rank {
            out.push(p.clone());
        }
    }
    out
}

fn normal_rank(normals: &[Vector], rank: usize) -> usize {
    let mut basis: Vec<Vector> = Vec::new();
    for nrm in normals {
        let mut d = nrm.clone();
        for b in &basis {
            let proj = dot(&d, b);
            for (di, bi) in d.iter_mut().zip(b) {
                *di -= proj * bi;
            }
        }
        let norm = euclid_norm(&d);
        if norm > 1e-6 {
            basis.push(d.iter().map(|v| v / norm).collect());
            if basis.len() == rank {
                break;
            }
        }
    }
    basis.len()
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

fn next_combination(subset: &mut [usize], m: usize) -> bool {
    let n = subset.len();
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

#[cfg(test)]
mod tests {
    use super::*;

    fn v2(x: f64, y: f64) -> Vector {
        vec![x, y]
    }

    #[test]
    fn triangle_hull() {
        let pts = vec![v2(0.0, 0.0), v2(1.0, 0.0), v2(0.0, 1.0)];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.num_rows(), 3);
        assert!(hull.contains_point(&[0.2, 0.2], 1e-9));
        assert!(hull.contains_point(&[0.5, 0.5], 1e-9));
        assert!(!hull.contains_point(&[0.6, 0.6], 1e-9));
        assert!(!hull.contains_point(&[-0.1, 0.5], 1e-9));
        assert_eq!(hull.vertices().unwrap().len(), 3);
    }

    #[test]
    fn single_point_hull_is_equality_pairs() {
        let hull = convex_hull(&[v2(0.5, -2.0)]).unwrap();
        assert_eq!(hull.num_rows(), 4);
        assert!(hull.contains_point(&[0.5, -2.0], 1e-9));
        assert!(!hull.contains_point(&[0.5, -1.9], 1e-9));
        assert_eq!(hull.vertices().unwrap(), &[v2(0.5, -2.0)]);
    }

    #[test]
    fn collinear_points_give_segment() {
        let pts = vec![v2(0.0, 0.0), v2(1.0, 1.0), v2(2.0, 2.0), v2(0.5, 0.5)];
        let hull = convex_hull(&pts).unwrap();
        assert!(hull.contains_point(&[1.5, 1.5], 1e-9));
        assert!(!hull.contains_point(&[1.5, 1.6], 1e-7));
        assert!(!hull.contains_point(&[2.1, 2.1], 1e-9));
        let vs = hull.vertices().unwrap();
        assert_eq!(vs.len(), 2);
    }

    #[test]
    fn interior_points_are_not_vertices() {
        let pts = vec![
            v2(-1.0, -1.0),
            v2(1.0, -1.0),
            v2(1.0, 1.0),
            v2(-1.0, 1.0),
            v2(0.0, 0.0),
            v2(0.5, 0.25),
        ];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices().unwrap().len(), 4);
        assert_eq!(hull.num_rows(), 4);
    }

    #[test]
    fn duplicate_points_collapse() {
        let pts = vec![v2(1.0, 2.0), v2(1.0, 2.0), v2(1.0, 2.0 + 1e-12)];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices().unwrap().len(), 1);
    }

    #[test]
    fn three_dimensional_simplex() {
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.num_rows(), 4);
        assert!(hull.contains_point(&[0.2, 0.2, 0.2], 1e-9));
        assert!(!hull.contains_point(&[0.4, 0.4, 0.4], 1e-9));
        assert_eq!(hull.vertices().unwrap().len(), 4);
    }

    #[test]
    fn hull_of_union_of_intervals() {
        let a = Polytope::from_rows(1, &[vec![1.0], vec![-1.0]], &[1.0, 0.0]).unwrap();
        let b = Polytope::from_rows(1, &[vec![1.0], vec![-1.0]], &[3.0, -2.0]).unwrap();
        let u = PolyUnion::new(1, vec![a, b]).unwrap();
        let hull = hull_of_union(&u).unwrap();
        assert!(hull.contains_point(&[1.5], 1e-9));
        assert!(hull.contains_point(&[0.0], 1e-9));
        assert!(hull.contains_point(&[3.0], 1e-9));
        assert!(!hull.contains_point(&[3.1], 1e-9));
        assert!(!hull.contains_point(&[-0.1], 1e-9));
    }

    #[test]
    fn hull_of_single_part_union_matches_part() {
        let tri = convex_hull(&[v2(0.0, 0.0), v2(1.0, 0.0), v2(0.0, 1.0)]).unwrap();
        let u = PolyUnion::new(2, vec![tri.clone()]).unwrap();
        let hull = hull_of_union(&u).unwrap();
        for p in [[0.1, 0.1], [0.9, 0.05], [0.3, 0.65], [0.7, 0.7], [-0.2, 0.1]] {
            assert_eq!(
                tri.contains_point(&p, 1e-9),
                hull.contains_point(&p, 1e-9),
                "disagree at {p:?}"
            );
        }
    }

    #[test]
    fn hull_of_empty_union_is_an_error() {
        assert!(hull_of_union(&PolyUnion::empty(2)).is_err());
    }
}
