use super::{conjugate_gradient, fisher_vector_product, gaussian_kl, GaussianPolicy, TrpoError};

/// Trust-region settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrpoConfig {
    pub max_kl: f64,
    pub cg_iters: usize,
    pub damping: f64,
    pub backtrack_ratio: f64,
    pub max_backtracks: usize,
}

impl Default for TrpoConfig {
    fn default() -> Self {
        Self { max_kl: 0.01, cg_iters: 10, damping: 0.1, backtrack_ratio: 0.8, max_backtracks: 10 }
    }
}

/// What happened in one [`trpo_step`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrpoDiagnostics {
    pub accepted: bool,
    /// Mean KL between the old and the returned policy.
    pub kl: f64,
    pub surrogate_before: f64,
    pub surrogate_after: f64,
    pub grad_norm: f64,
    /// Line-search shrink steps taken before acceptance (or all of them).
    pub backtracks: usize,
    /// Set when the gradient or search direction was not finite.
    pub nonfinite: bool,
}

/// Samples the surrogate is evaluated on.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateBatch<'a> {
    pub states: &'a [Vec<f64>],
    pub actions: &'a [Vec<f64>],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
}

impl SurrogateBatch<'_> {
    fn validate(&self) -> Result<(), TrpoError> {
        let n = self.states.len();
        if self.actions.len() != n || self.old_log_probs.len() != n || self.advantages.len() != n {
            return Err(TrpoError::Length(format!(
                "{} states, {} actions, {} log-probs, {} advantages",
                n,
                self.actions.len(),
                self.old_log_probs.len(),
                self.advantages.len()
            )));
        }
        Ok(())
    }
}

/// `mean_i exp(log pi(a_i|s_i) - old_log_prob_i) * A_i`.
pub fn surrogate(policy: &GaussianPolicy, batch: &SurrogateBatch) -> Result<f64, TrpoError> {
    batch.validate()?;
    if batch.states.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..batch.states.len() {
        let lp = policy.log_prob(&batch.states[i], &batch.actions[i])?;
        total += (lp - batch.old_log_probs[i]).exp() * batch.advantages[i];
    }
    Ok(total / batch.states.len() as f64)
}

/// Gradient of [`surrogate`] at the sampling policy (importance ratio 1).
pub fn surrogate_grad(policy: &GaussianPolicy, batch: &SurrogateBatch) -> Result<Vec<f64>, TrpoError> {
    batch.validate()?;
    let n = batch.states.len().max(1) as f64;
    let w: Vec<f64> = batch.advantages.iter().map(|a| a / n).collect();
    Ok(policy.weighted_log_prob_grad(batch.states, batch.actions, &w)?.1)
}

/// One natural-gradient step inside the KL trust region, with backtracking.
/// On rejection the policy is left untouched.
pub fn trpo_step(
    policy: &mut GaussianPolicy,
    batch: &SurrogateBatch,
    config: &TrpoConfig,
) -> Result<TrpoDiagnostics, TrpoError> {
    let before = surrogate(policy, batch)?;
    let mut diag = TrpoDiagnostics { surrogate_before: before, surrogate_after: before, ..Default::default() };
    let g = surrogate_grad(policy, batch)?;
    diag.grad_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !diag.grad_norm.is_finite() {
        diag.nonfinite = true;
        return Ok(diag);
    }
    if diag.grad_norm == 0.0 {
        return Ok(diag);
    }
    let cg = conjugate_gradient(|v| fisher_vector_product(policy, batch.states, v, config.damping), &g, config.cg_iters, 1e-10);
    let dir = match cg {
        Ok(r) => r.x,
        Err(TrpoError::Solver(_)) => {
            diag.nonfinite = true;
            return Ok(diag);
        }
        Err(e) => return Err(e),
    };
    let fdir = fisher_vector_product(policy, batch.states, &dir, config.damping)?;
    let shs: f64 = dir.iter().zip(&fdir).map(|(a, b)| a * b).sum();
    let scale = (2.0 * config.max_kl / shs).sqrt();
    if !scale.is_finite() || shs <= 0.0 {
        diag.nonfinite = true;
        return Ok(diag);
    }
    let old = policy.clone();
    let theta = old.params();
    let mut frac = 1.0;
    for k in 0..config.max_backtracks {
        let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + frac * scale * d).collect();
        let mut trial = old.clone();
        trial.set_params(&cand)?;
        let after = surrogate(&trial, batch)?;
        let kl = gaussian_kl(&old, &trial, batch.states)?;
        diag.backtracks = k;
        if after.is_finite() && kl.is_finite() && after > before && kl <= config.max_kl {
            *policy = trial;
            diag.accepted = true;
            diag.kl = kl;
            diag.surrogate_after = after;
            return Ok(diag);
        }
        frac *= config.backtrack_ratio;
    }
    diag.backtracks = config.max_backtracks;
    Ok(diag)
}
