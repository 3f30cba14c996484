use super::TrpoError;

/// Outcome of [`conjugate_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for a symmetric positive-definite `A` given only as a
/// matrix-vector product, starting from `x = 0`. Stops once the residual
/// norm is at most `tol` or after `max_iters` iterations.
pub fn conjugate_gradient<F>(mut apply: F, b: &[f64], max_iters: usize, tol: f64) -> Result<CgResult, TrpoError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, TrpoError>,
{
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < max_iters && rr.sqrt() > tol {
        let ap = apply(&p)?;
        if ap.len() != b.len() {
            return Err(TrpoError::Length(format!("operator returned {} entries for {}", ap.len(), b.len())));
        }
        let pap = dot(&p, &ap);
        let alpha = rr / pap;
        if !alpha.is_finite() || pap <= 0.0 {
            return Err(TrpoError::Solver(format!("iteration {iterations}: p'Ap = {pap}, operator not positive definite")));
        }
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(TrpoError::Solver(format!("iteration {iterations}: non-finite residual")));
        }
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    Ok(CgResult { x, iterations, residual_norm: rr.sqrt() })
}
