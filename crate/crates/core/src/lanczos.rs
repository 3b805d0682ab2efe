//! Lanczos iteration with full reorthogonalization, used to extract the
//! second-largest eigenvalue of symmetrized kernel operators too large for a
//! dense eigensolve. The largest eigenvector (√π, eigenvalue 1) is known in
//! closed form and supplied by the caller for deflation.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetric linear operator given by its action on a vector.
pub(crate) trait SymOp {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

impl SymOp for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.nrows();
        // column-major accumulation keeps the walk cache friendly
        out.fill(0.0);
        for j in 0..n {
            let vj = v[j];
            if vj != 0.0 {
                let col = self.column(j);
                for i in 0..n {
                    out[i] += col[i] * vj;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Largest eigenvalue of `op` restricted to the orthogonal complement of
/// `deflate` (a known exact eigenvector). Deterministic: the start vector
/// comes from a fixed seed.
pub(crate) fn top_eigenvalue_deflated(op: &dyn SymOp, deflate: &[f64]) -> Result<f64> {
    let n = op.dim();
    if n < 2 || deflate.len() != n {
        return Err(Error::Construction(format!(
            "operator dim {n} and deflation vector length {} incompatible",
            deflate.len()
        )));
    }
    let mut q = deflate.to_vec();
    let qn = norm(&q);
    if !(qn.is_finite() && qn > 0.0) {
        return Err(Error::Construction("deflation vector must be nonzero".into()));
    }
    q.iter_mut().for_each(|v| *v /= qn);

    let max_iter = (n - 1).min(400);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_6e63_7a6f_7331);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    for _ in 0..2 {
        let c = dot(&q, &v);
        v.iter_mut().zip(&q).for_each(|(x, qi)| *x -= c * qi);
    }
    let vn = norm(&v);
    if vn < 1e-10 {
        return Err(Error::Numeric("start vector collapsed under deflation".into()));
    }
    v.iter_mut().for_each(|x| *x /= vn);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter);
    let mut alphas: Vec<f64> = Vec::with_capacity(max_iter);
    let mut betas: Vec<f64> = Vec::with_capacity(max_iter);
    let mut w = vec![0.0; n];
    let mut last = f64::NEG_INFINITY;

    for k in 0..max_iter {
        op.apply(&v, &mut w);
        let c = dot(&q, &w);
        w.iter_mut().zip(&q).for_each(|(x, qi)| *x -= c * qi);
        let alpha = dot(&v, &w);
        w.iter_mut().zip(&v).for_each(|(x, vi)| *x -= alpha * vi);
        if k > 0 {
            let beta_prev = betas[k - 1];
            let prev = &basis[k - 1];
            w.iter_mut().zip(prev).for_each(|(x, pi)| *x -= beta_prev * pi);
        }
        basis.push(std::mem::replace(&mut v, Vec::new()));
        // two Gram-Schmidt passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, bi)| *x -= c * bi);
            }
            let c = dot(&q, &w);
            w.iter_mut().zip(&q).for_each(|(x, qi)| *x -= c * qi);
        }
        alphas.push(alpha);
        let beta = norm(&w);
        betas.push(beta);

        let scale = alphas.iter().chain(betas.iter()).fold(1.0f64, |m, x| m.max(x.abs()));
        let exhausted = beta <= 1e-14 * scale;
        let check = exhausted || k + 1 == max_iter || (k >= 7 && (k + 1) % 4 == 0);
        if check {
            let (theta, tail) = top_ritz(&alphas, &betas);
            let resid = beta * tail.abs();
            if exhausted || resid <= 1e-10 * theta.abs().max(1.0) {
                return Ok(theta);
            }
            last = theta;
        }
        if exhausted {
            unreachable!("exhausted subspace returns above");
        }
        v = w.clone();
        v.iter_mut().for_each(|x| *x /= beta);
    }
    Err(Error::Numeric(format!(
        "eigenvalue iteration did not converge in {max_iter} steps (last estimate {last})"
    )))
}

/// Top eigenvalue of the tridiagonal matrix diag(alphas) ± betas, plus the
/// last component of its eigenvector (the residual weight).
fn top_ritz(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors[(k - 1, best)])
}
