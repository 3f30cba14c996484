use super::TrpoError;

/// `sum_t gamma^t r_t`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Generalized advantage estimates and value targets for a batch of
/// concatenated episodes. `episode_lens` gives the episode boundaries; the
/// value after the last step of every episode is taken as zero.
/// Advantages are returned unnormalized.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    episode_lens: &[usize],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), TrpoError> {
    if rewards.len() != values.len() || episode_lens.iter().sum::<usize>() != rewards.len() {
        return Err(TrpoError::Length(format!(
            "{} rewards, {} values, episodes covering {}",
            rewards.len(),
            values.len(),
            episode_lens.iter().sum::<usize>()
        )));
    }
    let mut adv = vec![0.0; rewards.len()];
    let mut start = 0;
    for &len in episode_lens {
        let mut running = 0.0;
        for t in (start..start + len).rev() {
            let next = if t + 1 < start + len { values[t + 1] } else { 0.0 };
            let delta = rewards[t] + gamma * next - values[t];
            running = delta + gamma * lambda * running;
            adv[t] = running;
        }
        start += len;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, targets))
}

/// Shifts and scales to zero mean and unit variance. Batches with
/// (near-)zero spread are only centered.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 1e-8 { 1.0 / std } else { 1.0 };
    adv.iter_mut().for_each(|a| *a = (*a - mean) * scale);
}
