//! Inter-view distance `‖V_i V_j⁻¹ − I‖` and greedy nearest-neighbour view
//! ordering.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Extrinsics;

/// Largest tolerated `|D(i,j) − D(j,i)|` when assembling a distance matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Frobenius,
    Spectral,
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" | "fro" => Ok(Norm::Frobenius),
            "spectral" | "2" => Ok(Norm::Spectral),
            other => Err(Error::InvalidParameter(format!("unknown norm {other:?}"))),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Frobenius => "frobenius",
            Norm::Spectral => "spectral",
        })
    }
}

/// `V_i V_j⁻¹ − I`, with `V_j⁻¹` in closed form.
pub fn relative_difference(vi: &Extrinsics, vj: &Extrinsics) -> Matrix4<f64> {
    vi.matrix() * vj.inverse().matrix() - Matrix4::identity()
}

/// Identical extrinsics give exactly 0; otherwise the chosen norm of
/// [`relative_difference`].
pub fn view_distance(vi: &Extrinsics, vj: &Extrinsics, norm: Norm) -> f64 {
    if vi == vj {
        return 0.0;
    }
    let diff = relative_difference(vi, vj);
    match norm {
        Norm::Frobenius => diff.norm(),
        Norm::Spectral => spectral_norm(&diff),
    }
}

/// Largest singular value by power iteration on `AᵀA`.
///
/// The start vector is taken from `(AᵀA)^(2^k)` (repeated squaring), which
/// lands in the dominant eigenspace even when eigenvalues nearly coincide;
/// plain power steps then polish it.
pub fn spectral_norm(a: &Matrix4<f64>) -> f64 {
    let gram = a.transpose() * a;
    let scale = gram.norm();
    if scale == 0.0 {
        return 0.0;
    }
    let mut s = gram / scale;
    for _ in 0..64 {
        let sq = s * s;
        let sq = sq / sq.norm();
        let done = (sq - s).norm() < POWER_TOLERANCE;
        s = sq;
        if done {
            break;
        }
    }
    let col = (0..4).max_by(|&x, &y| s.column(x).norm().total_cmp(&s.column(y).norm())).unwrap_or(0);
    let mut v: Vector4<f64> = s.column(col).into_owned();
    if v.norm() == 0.0 {
        v = Vector4::repeat(0.5);
    }
    v.normalize_mut();

    let mut lambda = v.dot(&(gram * v));
    for _ in 0..POWER_MAX_ITERATIONS {
        let w = gram * v;
        let n = w.norm();
        if n == 0.0 {
            break;
        }
        let next = w / n;
        let next_lambda = next.dot(&(gram * next));
        let converged = (next_lambda - lambda).abs() <= POWER_TOLERANCE * next_lambda.abs().max(1.0);
        v = next;
        lambda = next_lambda;
        if converged {
            break;
        }
    }
    lambda.max(0.0).sqrt()
}

/// Pairwise distances. Each entry is computed in both directions; a
/// disagreement beyond [`SYMMETRY_TOLERANCE`] is reported as an error.
pub fn distance_matrix(views: &[Extrinsics], norm: Norm) -> Result<DMatrix<f64>> {
    let n = views.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { view_distance(&views[i], &views[j], norm) }).collect())
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            d[(i, j)] = v;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (d[(i, j)] - d[(j, i)]).abs();
            if gap > SYMMETRY_TOLERANCE {
                return Err(Error::InvalidParameter(format!(
                    "distance matrix asymmetric at ({i}, {j}): |Δ| = {gap:e}"
                )));
            }
        }
    }
    Ok(d)
}

/// Nearest-neighbour chain from `start`; ties go to the smallest id.
pub fn greedy_order(d: &DMatrix<f64>, start: usize) -> Result<Vec<usize>> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::InvalidParameter(format!("distance matrix is {}x{}", n, d.ncols())));
    }
    if start >= n {
        return Err(Error::InvalidParameter(format!("start view {start} out of range for {n} views")));
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    visited[start] = true;
    order.push(start);
    let mut last = start;
    while order.len() < n {
        let mut best: Option<usize> = None;
        for cand in (0..n).filter(|&c| !visited[c]) {
            if best.is_none_or(|b| d[(last, cand)] < d[(last, b)]) {
                best = Some(cand);
            }
        }
        let next = best.expect("an unvisited view remains");
        visited[next] = true;
        order.push(next);
        last = next;
    }
    Ok(order)
}

/// Sum of consecutive distances along `order`.
pub fn path_length(d: &DMatrix<f64>, order: &[usize]) -> f64 {
    order.windows(2).map(|w| d[(w[0], w[1])]).sum()
}

/// Greedy order from every start, keeping the shortest path (first start on ties).
pub fn best_start_order(d: &DMatrix<f64>) -> Result<Vec<usize>> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in 0..d.nrows() {
        let order = greedy_order(d, start)?;
        let len = path_length(d, &order);
        if best.as_ref().is_none_or(|(l, _)| len < *l) {
            best = Some((len, order));
        }
    }
    best.map(|(_, o)| o).ok_or_else(|| Error::InvalidParameter("no views to order".into()))
}

/// Views with their pairwise distances.
#[derive(Debug, Clone)]
pub struct ViewSequence {
    pub views: Vec<usize>,
    pub extrinsics: Vec<Extrinsics>,
    pub distances: DMatrix<f64>,
}

impl ViewSequence {
    pub fn new(extrinsics: Vec<Extrinsics>, norm: Norm) -> Result<Self> {
        let distances = distance_matrix(&extrinsics, norm)?;
        Ok(Self { views: (0..extrinsics.len()).collect(), extrinsics, distances })
    }

    /// Greedy order; `start = None` tries every start.
    pub fn order(&self, start: Option<usize>) -> Result<Vec<usize>> {
        let local = match start {
            Some(s) => greedy_order(&self.distances, s)?,
            None => best_start_order(&self.distances)?,
        };
        Ok(local.into_iter().map(|k| self.views[k]).collect())
    }
}
