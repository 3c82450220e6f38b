//! Generalized advantage estimation.

/// Advantages and value targets for a sequence of transitions, possibly
/// spanning several episodes. `values[t]` is `V(s_t)`; `last_value` is the
/// bootstrap value after the final transition (ignored when it is terminal).
pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], last_value: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "trajectory lengths differ");
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        adv[t] = acc;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undiscounted_is_return_minus_value() {
        let r = [1.0, -2.0, 0.5, 3.0];
        let v = [0.2, 0.1, -0.4, 1.0];
        let (adv, tgt) = gae(&r, &v, &[false, false, false, true], 99.0, 1.0, 1.0);
        for t in 0..4 {
            let ret: f64 = r[t..].iter().sum();
            assert!((adv[t] - (ret - v[t])).abs() < 1e-12);
            assert!((tgt[t] - ret).abs() < 1e-12);
        }
    }

    #[test]
    fn one_step_episode() {
        let (adv, tgt) = gae(&[1.0], &[0.0], &[true], 0.0, 0.99, 0.95);
        assert_eq!(adv, vec![1.0]);
        assert_eq!(tgt, vec![1.0]);
    }

    #[test]
    fn two_step_hand_recursion() {
        let (adv, _) = gae(&[0.0, 1.0], &[0.5, 0.5], &[false, true], 0.0, 0.99, 0.95);
        assert!((adv[1] - 0.5).abs() < 1e-15);
        assert!((adv[0] - 0.46525).abs() < 1e-12);
    }

    #[test]
    fn episodes_do_not_leak_across_boundaries() {
        let (adv, _) = gae(&[1.0, 5.0], &[0.0, 0.0], &[true, true], 0.0, 0.9, 0.9);
        assert_eq!(adv, vec![1.0, 5.0]);
    }
}
