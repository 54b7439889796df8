//! Patch affinity graphs and Normalized-Cut bipartitioning.
//!
//! The relaxed NCut solution is the generalized eigenvector of
//! `(D - W) x = λ D x` with the second smallest eigenvalue. It is computed
//! through the symmetric matrix `S = D^{-1/2} W D^{-1/2}`, whose eigenvector
//! `y` maps back as `x = D^{-1/2} y` with `λ = 1 - eig(S)`.
//!
//! Small graphs use a dense symmetric eigendecomposition. Larger graphs use
//! Lanczos on the same dense `S` with the trivial eigenvector `D^{1/2} 1`
//! projected out, which keeps a 60x60 patch grid (3600 nodes) well under a
//! second on one core.

mod lanczos;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::io::FeatureMap;
use crate::mask::BinaryMask;

/// Weight given to patch pairs below the similarity threshold.
pub const EPSILON_WEIGHT: f64 = 1e-5;

/// Default similarity threshold for binarizing the affinity matrix.
pub const DEFAULT_TAU: f64 = 0.15;

/// Default eigen residual tolerance, relative to `‖x‖₂`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Graphs up to this many nodes are solved with a dense eigendecomposition.
pub const DENSE_MAX_NODES: usize = 400;

const SYMMETRY_TOL: f64 = 1e-12;

/// A Fiedler value this close to 1 means no cut beats the uniform one.
const NO_STRUCTURE_LAMBDA: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    weights: DMatrix<f64>,
    degrees: Vec<f64>,
}

impl AffinityGraph {
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "affinity matrix is {}x{}",
                n,
                weights.ncols()
            )));
        }
        for i in 0..n {
            if !(weights[(i, i)] > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "self-affinity W[{i},{i}] = {} must be positive",
                    weights[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (weights[(i, j)], weights[(j, i)]);
                if !(a >= 0.0) || !(b >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "negative or non-finite weight at ({i},{j})"
                    )));
                }
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "affinity not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        let degrees = row_sums(&weights);
        Ok(Self { weights, degrees })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Replaces every weight touching a covered node with [`EPSILON_WEIGHT`],
    /// which is what zeroing that node's feature does to a binarized affinity.
    pub fn suppress(&mut self, covered: &[bool]) {
        let n = self.n();
        assert_eq!(covered.len(), n, "covered flags must match node count");
        for i in 0..n {
            if !covered[i] {
                continue;
            }
            for j in 0..n {
                self.weights[(i, j)] = EPSILON_WEIGHT;
                self.weights[(j, i)] = EPSILON_WEIGHT;
            }
        }
        self.degrees = row_sums(&self.weights);
    }
}

fn row_sums(w: &DMatrix<f64>) -> Vec<f64> {
    (0..w.nrows()).map(|i| w.row(i).sum()).collect()
}

/// Cosine similarity between every pair of patch features.
pub fn cosine_similarity(fm: &FeatureMap) -> Result<DMatrix<f64>> {
    let n = fm.num_patches();
    let dim = fm.dim();
    let mut normalized = DMatrix::<f64>::zeros(n, dim);
    for i in 0..n {
        let f = fm.feature(i);
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNormFeature(i));
        }
        for (k, v) in f.iter().enumerate() {
            normalized[(i, k)] = v / norm;
        }
    }
    let mut cos = &normalized * normalized.transpose();
    // mirror the upper triangle so the result is exactly symmetric
    for j in 0..n {
        for i in (j + 1)..n {
            cos[(i, j)] = cos[(j, i)];
        }
    }
    Ok(cos)
}

/// Builds the patch affinity graph from cosine similarities.
///
/// With `tau > 0` similarities `>= tau` become 1 and the rest
/// [`EPSILON_WEIGHT`]. `tau == 0` keeps the raw cosines, floored at
/// [`EPSILON_WEIGHT`] so that all weights stay positive.
pub fn build_affinity(fm: &FeatureMap, tau: f64) -> Result<AffinityGraph> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "tau must lie in [0, 1), got {tau}"
        )));
    }
    let mut w = cosine_similarity(fm)?;
    if tau == 0.0 {
        w.apply(|v| *v = v.max(EPSILON_WEIGHT));
    } else {
        w.apply(|v| *v = if *v >= tau { 1.0 } else { EPSILON_WEIGHT });
    }
    AffinityGraph::from_weights(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiedlerResult {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Dense up to [`DENSE_MAX_NODES`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Second-smallest generalized eigenpair of `(D - W) x = λ D x`.
///
/// The eigenvector has unit D-norm and its largest-magnitude entry is positive.
/// Fails if `‖(D - W)x - λDx‖₂ > tol · ‖x‖₂`.
pub fn fiedler(graph: &AffinityGraph, tol: f64) -> Result<FiedlerResult> {
    fiedler_with(graph, tol, Solver::Auto)
}

pub fn fiedler_with(graph: &AffinityGraph, tol: f64, solver: Solver) -> Result<FiedlerResult> {
    let n = graph.n();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    let inv_sqrt_d: Vec<f64> = graph.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut s = graph.weights.clone();
    for j in 0..n {
        for i in 0..n {
            s[(i, j)] *= inv_sqrt_d[i] * inv_sqrt_d[j];
        }
    }

    let use_dense = match solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => n <= DENSE_MAX_NODES,
    };
    let y = if use_dense {
        dense_second(&s)
    } else {
        let sqrt_d = DVector::from_iterator(n, graph.degrees.iter().map(|d| d.sqrt()));
        let trivial = sqrt_d.normalize();
        let d_max = graph.degrees.iter().cloned().fold(0.0, f64::max);
        // ‖generalized residual‖ <= sqrt(d_max) ‖S y - θ y‖ and ‖x‖ >= 1/sqrt(d_max)
        let ritz_tol = 0.25 * tol / d_max.max(1.0);
        lanczos::top_eigenvector(&s, &trivial, ritz_tol)?
    };

    let mut x: Vec<f64> = y.iter().zip(&inv_sqrt_d).map(|(v, k)| v * k).collect();
    let d_norm = x
        .iter()
        .zip(&graph.degrees)
        .map(|(v, d)| v * v * d)
        .sum::<f64>()
        .sqrt();
    for v in &mut x {
        *v /= d_norm;
    }
    orient(&mut x);

    let xv = DVector::from_column_slice(&x);
    let wx = &graph.weights * &xv;
    // Rayleigh quotient; xᵀDx = 1
    let lx: Vec<f64> = (0..n).map(|i| graph.degrees[i] * x[i] - wx[i]).collect();
    let eigenvalue = lx.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    let residual = lx
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let r = v - eigenvalue * graph.degrees[i] * x[i];
            r * r
        })
        .sum::<f64>()
        .sqrt();
    let bound = tol * xv.norm();
    if residual > bound {
        return Err(Error::NoConvergence {
            residual,
            tol: bound,
        });
    }
    Ok(FiedlerResult {
        eigenvalue,
        eigenvector: x,
        residual,
    })
}

/// Eigenvector of the second largest eigenvalue of `s` (= second smallest of `I - s`).
fn dense_second(s: &DMatrix<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(s.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    eig.eigenvectors.column(order[1]).into_owned()
}

/// Flip so that the entry of largest magnitude is positive.
fn orient(x: &mut [f64]) {
    let peak = argmax_by(x.iter().map(|v| v.abs()), |_| true).unwrap_or(0);
    if x[peak] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// First index of the maximum among entries where `keep` is true.
fn argmax_by(values: impl Iterator<Item = f64>, keep: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if !keep(i) {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Foreground side of a Fiedler vector split.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Foreground patches, `rows x cols`.
    pub foreground: BinaryMask,
    /// Foreground patch with the strongest response.
    pub seed: usize,
    /// `+1` if the foreground is the `x >= mean` side, `-1` otherwise.
    pub orientation: f64,
}

/// Splits the grid at the mean of `x` and picks the foreground side.
///
/// The foreground is the side holding the entry of largest `|x|`, swapped if
/// it touches three or more grid corners.
pub fn bipartition(fr: &FiedlerResult, rows: usize, cols: usize) -> Result<BinaryMask> {
    let active = vec![true; rows * cols];
    bipartition_active(fr, rows, cols, &active).map(|p| p.foreground)
}

/// [`bipartition`] restricted to `active` patches; inactive patches are never foreground.
pub fn bipartition_active(
    fr: &FiedlerResult,
    rows: usize,
    cols: usize,
    active: &[bool],
) -> Result<Partition> {
    let x = &fr.eigenvector;
    let n = rows * cols;
    if x.len() != n || active.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "eigenvector of length {} on a {rows}x{cols} grid",
            x.len()
        )));
    }
    if fr.eigenvalue >= NO_STRUCTURE_LAMBDA {
        return Err(Error::DegeneratePartition);
    }
    let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    if idx.len() < 2 {
        return Err(Error::DegeneratePartition);
    }
    let (lo, hi, peak) = idx.iter().fold((f64::MAX, f64::MIN, 0.0f64), |(lo, hi, pk), &i| {
        (lo.min(x[i]), hi.max(x[i]), pk.max(x[i].abs()))
    });
    if hi - lo <= 1e-12 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::DegeneratePartition);
    }
    let mean = idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64;
    let upper: Vec<bool> = (0..n).map(|i| active[i] && x[i] >= mean).collect();
    let n_upper = upper.iter().filter(|&&b| b).count();
    if n_upper == 0 || n_upper == idx.len() {
        return Err(Error::DegeneratePartition);
    }

    let peak_idx = argmax_by(x.iter().map(|v| v.abs()), |i| active[i]).expect("active nodes");
    let mut fg_upper = upper[peak_idx];
    let corners = corner_indices(rows, cols);
    let fg_corners = corners
        .iter()
        .filter(|&&c| active[c] && upper[c] == fg_upper)
        .count();
    if fg_corners >= 3 {
        fg_upper = !fg_upper;
    }
    let orientation = if fg_upper { 1.0 } else { -1.0 };
    let fg: Vec<bool> = (0..n).map(|i| active[i] && upper[i] == fg_upper).collect();
    let seed = argmax_by(x.iter().map(|v| orientation * v), |i| fg[i]).expect("non-empty side");
    Ok(Partition {
        foreground: BinaryMask::from_bits(rows, cols, fg)?,
        seed,
        orientation,
    })
}

fn corner_indices(rows: usize, cols: usize) -> Vec<usize> {
    let mut c = vec![0, cols - 1, (rows - 1) * cols, rows * cols - 1];
    c.sort_unstable();
    c.dedup();
    c
}

/// `cut(A,B)/assoc(A,V) + cut(A,B)/assoc(B,V)` for the split `side` / not `side`.
pub fn ncut_value(graph: &AffinityGraph, side: &[bool]) -> Result<f64> {
    let n = graph.n();
    if side.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "partition of length {} for {n} nodes",
            side.len()
        )));
    }
    let a = side.iter().filter(|&&b| b).count();
    if a == 0 || a == n {
        return Err(Error::EmptySide);
    }
    let mut cut = 0.0;
    let (mut assoc_a, mut assoc_b) = (0.0, 0.0);
    for i in 0..n {
        if side[i] {
            assoc_a += graph.degrees[i];
            for j in 0..n {
                if !side[j] {
                    cut += graph.weights[(i, j)];
                }
            }
        } else {
            assoc_b += graph.degrees[i];
        }
    }
    Ok(cut / assoc_a + cut / assoc_b)
}

#[cfg(test)]
mod tests;
