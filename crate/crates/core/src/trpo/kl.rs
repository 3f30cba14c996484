use super::{GaussianPolicy, TrpoError};

fn check_pair(old: &GaussianPolicy, new: &GaussianPolicy) -> Result<(), TrpoError> {
    if old.num_params() != new.num_params() || old.state_dim() != new.state_dim() {
        return Err(TrpoError::Length("policies differ in architecture".into()));
    }
    Ok(())
}

/// Per-dimension `KL(N(mu_o, s_o^2) || N(mu_n, s_n^2))`.
pub fn gaussian_kl_1d(mu_o: f64, ls_o: f64, mu_n: f64, ls_n: f64) -> f64 {
    let var_o = (2.0 * ls_o).exp();
    let var_n = (2.0 * ls_n).exp();
    ls_n - ls_o + (var_o + (mu_o - mu_n).powi(2)) / (2.0 * var_n) - 0.5
}

/// Mean over `states` of `KL(old(.|s) || new(.|s))`.
pub fn gaussian_kl(old: &GaussianPolicy, new: &GaussianPolicy, states: &[Vec<f64>]) -> Result<f64, TrpoError> {
    check_pair(old, new)?;
    if states.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in states {
        let mo = old.mean_action(s)?;
        let mn = new.mean_action(s)?;
        for d in 0..mo.len() {
            total += gaussian_kl_1d(mo[d], old.log_std[d], mn[d], new.log_std[d]);
        }
    }
    Ok(total / states.len() as f64)
}

/// Gradient of [`gaussian_kl`] with respect to the parameters of `new`.
pub fn gaussian_kl_grad(old: &GaussianPolicy, new: &GaussianPolicy, states: &[Vec<f64>]) -> Result<Vec<f64>, TrpoError> {
    check_pair(old, new)?;
    let mut net = new.mean.clone();
    net.zero_grad();
    let mut g_ls = vec![0.0; new.action_dim()];
    if states.is_empty() {
        let mut g = net.grads();
        g.extend(g_ls);
        return Ok(g);
    }
    let scale = 1.0 / states.len() as f64;
    let inv_var_n: Vec<f64> = new.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
    for s in states {
        let mo = old.mean_action(s)?;
        let (mn, cache) = net.forward_cached(s)?;
        let up: Vec<f64> = (0..mn.len()).map(|d| scale * (mn[d] - mo[d]) * inv_var_n[d]).collect();
        net.backward(&cache, &up)?;
        for d in 0..mn.len() {
            let var_o = (2.0 * old.log_std[d]).exp();
            g_ls[d] += scale * (1.0 - (var_o + (mo[d] - mn[d]).powi(2)) * inv_var_n[d]);
        }
    }
    let mut g = net.grads();
    g.extend(g_ls);
    Ok(g)
}

/// `(H + damping I) v`, where `H` is the Hessian of `KL(pi || pi')` in the
/// parameters of `pi'`, taken at `pi' = pi`. At that point the Hessian is the
/// Fisher matrix: `mean_s J_s^T diag(1/var) J_s` on the mean network
/// (`J_s` the Jacobian of the mean) and `2 I` on `log_std`, with no cross
/// terms.
pub fn fisher_vector_product(
    policy: &GaussianPolicy,
    states: &[Vec<f64>],
    v: &[f64],
    damping: f64,
) -> Result<Vec<f64>, TrpoError> {
    if v.len() != policy.num_params() {
        return Err(TrpoError::Length(format!("vector of length {} for {} parameters", v.len(), policy.num_params())));
    }
    let split = policy.mean.num_params();
    let (v_mean, v_ls) = v.split_at(split);
    let mut net = policy.mean.clone();
    net.zero_grad();
    if !states.is_empty() {
        let scale = 1.0 / states.len() as f64;
        let inv_var: Vec<f64> = policy.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
        for s in states {
            let (_, jv) = policy.mean.jvp(s, v_mean)?;
            let (_, cache) = net.forward_cached(s)?;
            let up: Vec<f64> = jv.iter().zip(&inv_var).map(|(j, iv)| scale * j * iv).collect();
            net.backward(&cache, &up)?;
        }
    }
    let mut out = net.grads();
    out.extend(v_ls.iter().map(|x| 2.0 * x));
    for (o, x) in out.iter_mut().zip(v) {
        *o += damping * x;
    }
    Ok(out)
}
