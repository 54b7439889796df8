//! Lanczos with full reorthogonalization for the top eigenvector of a dense
//! symmetric matrix on the orthogonal complement of a known eigenvector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_STEPS: usize = 600;
const CHECK_EVERY: usize = 4;
const START_SEED: u64 = 0x5eed_f1ed;

fn project_out(w: &mut DVector<f64>, basis: &[DVector<f64>], deflate: &DVector<f64>) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        let c = deflate.dot(w);
        w.axpy(-c, deflate, 1.0);
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

/// Largest Ritz pair of the tridiagonal `(alpha, beta)`.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut best = 0;
    for i in 1..m {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

/// Unit eigenvector of the largest eigenvalue of `s` restricted to `deflate`'s complement.
///
/// Stops once the Ritz residual `‖s y - θ y‖` drops below `ritz_tol` or the
/// Krylov space becomes invariant.
pub(super) fn top_eigenvector(
    s: &DMatrix<f64>,
    deflate: &DVector<f64>,
    ritz_tol: f64,
) -> Result<DVector<f64>> {
    let n = s.nrows();
    let max_steps = MAX_STEPS.min(n - 1).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut q = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
    project_out(&mut q, &[], deflate);
    q.normalize_mut();

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;

    for step in 0..max_steps {
        let mut w = s * &q;
        let a = q.dot(&w);
        alpha.push(a);
        basis.push(q.clone());
        project_out(&mut w, &basis, deflate);
        let b = w.norm();

        let invariant = b <= 1e-13;
        let last = step + 1 == max_steps;
        if invariant || last || (step + 1) % CHECK_EVERY == 0 {
            let (_, sv) = top_ritz(&alpha, &beta);
            last_residual = if invariant { 0.0 } else { (b * sv[sv.len() - 1]).abs() };
            if last_residual <= ritz_tol || invariant {
                let mut y = DVector::zeros(n);
                for (k, qk) in basis.iter().enumerate() {
                    y.axpy(sv[k], qk, 1.0);
                }
                return Ok(y.normalize());
            }
        }
        beta.push(b);
        q = w / b;
    }
    Err(Error::NoConvergence {
        residual: last_residual,
        tol: ritz_tol,
    })
}
