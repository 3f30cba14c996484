/// Central-difference step. Smaller steps drown head gradients near 1e-7
/// in round-off; larger ones start to straddle relu and max-pool kinks.
pub const FD_STEP: f64 = 1e-5;

/// Components smaller than this fraction of the largest gradient component
/// are compared on the scale of that component rather than their own.
const SCALE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(floor);
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}

/// Compares the analytic gradient returned by `f` at `params` against central
/// differences with step [`FD_STEP`].
///
/// `f` maps a parameter vector to `(loss, analytic gradient)`; it must be
/// deterministic. `indices` restricts the check to a subset of coordinates.
pub fn finite_difference_check<F>(mut f: F, params: &[f64], indices: Option<&[usize]>) -> FdReport
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(params);
    assert_eq!(analytic.len(), params.len(), "gradient length must match parameter length");
    let all: Vec<usize>;
    let idx = match indices {
        Some(i) => i,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };
    let mut theta = params.to_vec();
    let numeric: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let orig = theta[i];
            theta[i] = orig + FD_STEP;
            let up = f(&theta).0;
            theta[i] = orig - FD_STEP;
            let down = f(&theta).0;
            theta[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect();
    let scale = idx
        .iter()
        .zip(&numeric)
        .map(|(&i, n)| analytic[i].abs().max(n.abs()))
        .fold(0.0, f64::max);
    let floor = SCALE_FLOOR * scale;
    let mut report = FdReport { max_rel_error: 0.0, worst_index: 0, analytic: 0.0, numeric: 0.0, checked: idx.len() };
    for (&i, &n) in idx.iter().zip(&numeric) {
        let e = relative_error(analytic[i], n, floor);
        if e > report.max_rel_error || report.checked == 0 {
            report = FdReport { max_rel_error: e, worst_index: i, analytic: analytic[i], numeric: n, checked: idx.len() };
        }
    }
    report
}
