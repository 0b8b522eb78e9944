use crate::error::{Error, Result};

fn non_empty(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        Err(Error::domain(format!("{what} of an empty list")))
    } else {
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::domain(format!("discount {gamma} outside [0, 1]")))
    }
}

/// Discounted total reward `Σ_{t=1}^{T} γᵗ r_t`, the first reward already
/// discounted once.
pub fn total_reward(rewards: &[f64], gamma: f64) -> Result<f64> {
    non_empty(rewards, "total reward")?;
    check_gamma(gamma)?;
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in rewards {
        discount *= gamma;
        total += discount * r;
    }
    Ok(total)
}

/// Undiscounted episode return `Σ r_t`.
pub fn undiscounted_return(rewards: &[f64]) -> Result<f64> {
    non_empty(rewards, "return")?;
    Ok(rewards.iter().sum())
}

/// Average cost `(1/T) Σ c_t`.
pub fn average_cost(costs: &[f64]) -> Result<f64> {
    non_empty(costs, "average cost")?;
    Ok(costs.iter().sum::<f64>() / costs.len() as f64)
}

/// Discounted reward-to-go `Σ_{k≥t} γ^{k−t} r_k`, accumulated backwards.
pub fn rewards_to_go(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    non_empty(rewards, "reward-to-go")?;
    check_gamma(gamma)?;
    let mut out = vec![0.0; rewards.len()];
    let mut running = 0.0;
    for (slot, r) in out.iter_mut().zip(rewards).rev() {
        running = r + gamma * running;
        *slot = running;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undiscounted_sums() {
        assert_eq!(total_reward(&[1.0, 1.0, 1.0], 1.0).unwrap(), 3.0);
        assert_eq!(
            rewards_to_go(&[1.0, 1.0, 1.0], 1.0).unwrap(),
            vec![3.0, 2.0, 1.0]
        );
        assert_eq!(undiscounted_return(&[1.0, 2.0]).unwrap(), 3.0);
    }

    #[test]
    fn discount_starts_at_first_step() {
        assert_eq!(total_reward(&[1.0, 1.0], 0.5).unwrap(), 0.75);
    }

    #[test]
    fn discounted_reward_to_go() {
        let rtg = rewards_to_go(&[1.0, 2.0, 4.0], 0.5).unwrap();
        assert_eq!(
            rtg,
            vec![1.0 + 0.5 * 2.0 + 0.25 * 4.0, 2.0 + 0.5 * 4.0, 4.0]
        );
    }

    #[test]
    fn average() {
        assert_eq!(average_cost(&[2.0, 4.0]).unwrap(), 3.0);
    }

    #[test]
    fn empty_and_bad_gamma_rejected() {
        assert!(total_reward(&[], 0.9).is_err());
        assert!(average_cost(&[]).is_err());
        assert!(rewards_to_go(&[], 0.9).is_err());
        assert!(rewards_to_go(&[1.0], 1.5).is_err());
    }
}
