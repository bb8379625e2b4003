//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles here deliberately avoid the library's solver paths: linear
//! systems are solved by a local Gaussian elimination, and feasibility is
//! decided by exhaustive active-set enumeration, so they can arbitrate the
//! simplex and the geometry code.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use std::path::PathBuf;

use polyreach::geometry::{PolyUnion, Polytope};
use polyreach::matrix::{Matrix, Vector};
use polyreach::nn::{Activation, Layer, ReluNetwork};
use polyreach::sysreach::{Mode, PwlSystem};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const A1: [[f64; 2]; 2] = [[-1.0609, -1.0645], [0.6600, -0.6178]];
pub const B1: [[f64; 2]; 2] = [[-0.9759, 0.3688], [0.5874, 2.5345]];
pub const A2: [[f64; 2]; 2] = [[-0.5487, -0.0196], [0.3390, 1.2870]];
pub const B2: [[f64; 2]; 2] = [[0.5573, 1.0926], [-0.6622, 0.9284]];
pub const W1: [[f64; 2]; 4] = [
    [-0.4949, -0.4273],
    [-0.6112, -0.5277],
    [-0.4287, -0.5161],
    [0.0585, -0.3319],
];
pub const TH1: [f64; 4] = [-0.1971, -0.2435, 0.9452, 0.3945];
pub const W2: [[f64; 4]; 2] = [
    [0.5891, -0.4770, 0.0849, 0.2686],
    [0.3210, -0.2599, 0.1594, -0.0423],
];
pub const TH2: [f64; 2] = [-0.1862, -0.1339];

pub fn model_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models/paper_sec4.json")
        .canonicalize()
        .expect("bundled model present")
}

pub fn bin_path() -> &'static str {
    env!("CARGO_BIN_EXE_polyreach")
}

pub fn example_system() -> PwlSystem {
    let m = |rows: [[f64; 2]; 2]| Matrix::from_rows(2, &[rows[0].to_vec(), rows[1].to_vec()]).unwrap();
    PwlSystem::new(vec![
        Mode { a: m(A1), b: m(B1) },
        Mode { a: m(A2), b: m(B2) },
    ])
    .unwrap()
}

pub fn example_network() -> ReluNetwork {
    let w1: Vec<Vec<f64>> = W1.iter().map(|r| r.to_vec()).collect();
    let w2: Vec<Vec<f64>> = W2.iter().map(|r| r.to_vec()).collect();
    ReluNetwork::new(vec![
        Layer::new(Matrix::from_rows(2, &w1).unwrap(), TH1.to_vec(), Activation::Relu).unwrap(),
        Layer::new(Matrix::from_rows(4, &w2).unwrap(), TH2.to_vec(), Activation::Linear).unwrap(),
    ])
    .unwrap()
}

pub fn unit_box2() -> Polytope {
    Polytope::bounding_box_set(&[0.0, 0.0], 1.0).unwrap()
}

pub fn x0_union() -> PolyUnion {
    PolyUnion::singleton(unit_box2()).unwrap()
}

pub fn unsafe_box() -> Polytope {
    Polytope::bounding_box_set(&[4.0, 4.0], 1.0).unwrap()
}

/// Inclusive grid over [lo, hi]^2.
pub fn grid2(lo: f64, hi: f64, step: f64) -> Vec<Vector> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let mut pts = Vec::with_capacity(count * count);
    for i in 0..count {
        for j in 0..count {
            pts.push(vec![lo + i as f64 * step, lo + j as f64 * step]);
        }
    }
    pts
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random bounded non-empty polytope: a box plus a few cutting half-planes
/// through a known interior point.
pub fn random_polytope(rng: &mut ChaCha8Rng, dim: usize, extra_rows: usize) -> (Polytope, Vector) {
    let interior: Vector = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
    let radius: f64 = rng.random_range(0.8..2.0);
    let mut rows: Vec<Vector> = Vec::new();
    let mut offs: Vector = Vec::new();
    for i in 0..dim {
        let mut plus = vec![0.0; dim];
        plus[i] = 1.0;
        rows.push(plus);
        offs.push(interior[i] + radius);
        let mut minus = vec![0.0; dim];
        minus[i] = -1.0;
        rows.push(minus);
        offs.push(radius - interior[i]);
    }
    for _ in 0..extra_rows {
        let normal: Vector = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm: f64 = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 0.1 {
            continue;
        }
        let slack: f64 = rng.random_range(0.05..1.0);
        let dot: f64 = normal.iter().zip(&interior).map(|(a, b)| a * b).sum();
        rows.push(normal);
        offs.push(dot + slack);
    }
    (
        Polytope::from_rows(dim, &rows, &offs).unwrap(),
        interior,
    )
}

/// Rejection-sample a point of P from its bounding box.
pub fn sample_point(rng: &mut ChaCha8Rng, p: &Polytope, lo: &[f64], hi: &[f64]) -> Option<Vector> {
    for _ in 0..200 {
        let x: Vector = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| if b > a { rng.random_range(a..=b) } else { a })
            .collect();
        if p.contains_point(&x, 1e-9) {
            return Some(x);
        }
    }
    None
}

/// Independent Gaussian elimination (partial pivoting) used by the oracles.
pub fn gauss_solve(a: &[Vector], rhs: &[f64], tol: f64) -> Option<Vector> {
    let n = rhs.len();
    let mut m: Vec<Vector> = a
        .iter()
        .zip(rhs)
        .map(|(row, &r)| {
            let mut v = row.clone();
            v.push(r);
            v
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot_row][col].abs() <= tol {
            return None;
        }
        m.swap(col, pivot_row);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=n {
                    let delta = f * m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Brute-force feasibility for a bounded system `Hx <= b`: some n-subset of
/// active rows solves to a point satisfying every row. Sound when the
/// system contains a bounding box (a non-empty bounded polyhedron has a
/// vertex).
pub fn brute_force_feasible(rows: &[Vector], offs: &[f64], dim: usize, tol: f64) -> bool {
    let m = rows.len();
    if m < dim {
        return true;
    }
    let mut subset: Vec<usize> = (0..dim).collect();
    loop {
        let a: Vec<Vector> = subset.iter().map(|&i| rows[i].clone()).collect();
        let rhs: Vector = subset.iter().map(|&i| offs[i]).collect();
        if let Some(x) = gauss_solve(&a, &rhs, 1e-10) {
            let ok = rows
                .iter()
                .zip(offs)
                .all(|(row, &b)| row.iter().zip(&x).map(|(h, v)| h * v).sum::<f64>() <= b + tol);
            if ok {
                return true;
            }
        }
        // next combination
        let mut i = dim;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if subset[i] < m - (dim - i) {
                subset[i] += 1;
                for j in i + 1..dim {
                    subset[j] = subset[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            return false;
        }
    }
}

/// Is `v` a convex combination of `others`? Decided by LP feasibility over
/// the weights.
pub fn is_convex_combination(v: &[f64], others: &[Vector], tol: f64) -> bool {
    if others.is_empty() {
        return false;
    }
    let k = others.len();
    let dim = v.len();
    // Variables: weights w_1..w_k. Constraints: w >= 0, sum w = 1 (pair),
    // sum w_j * u_j = v (pairs per coordinate).
    let mut rows: Vec<Vector> = Vec::new();
    let mut offs: Vector = Vec::new();
    for j in 0..k {
        let mut r = vec![0.0; k];
        r[j] = -1.0;
        rows.push(r);
        offs.push(0.0);
    }
    rows.push(vec![1.0; k]);
    offs.push(1.0 + tol);
    rows.push(vec![-1.0; k]);
    offs.push(-(1.0 - tol));
    for c in 0..dim {
        let coeff: Vector = others.iter().map(|u| u[c]).collect();
        rows.push(coeff.clone());
        offs.push(v[c] + tol);
        rows.push(coeff.iter().map(|x| -x).collect());
        offs.push(tol - v[c]);
    }
    let h = Matrix::from_rows(k, &rows).unwrap();
    polyreach::lp::lp_feasible(&h, &offs)
        .unwrap()
        .is_feasible()
}
