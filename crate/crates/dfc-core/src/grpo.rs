//! Group-relative policy optimization: within-group reward normalization in
//! place of a learned baseline, a clipped importance-ratio surrogate, and an
//! exact categorical KL penalty against a reference policy.
//!
//! Vocabularies here are small enough that both the KL term and the policy
//! gradient are computed exactly over every legal action — no sampled
//! estimators.

use alloc::string::String;
use alloc::vec::Vec;

use crate::games::{vocabulary, Featurizer};
use crate::num;
use crate::policy::PolicyParams;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrpoError {
    #[error("no rollout groups supplied")]
    EmptyGroups,
    #[error("parameter dimension {params} does not match reference dimension {reference}")]
    DimensionMismatch { params: usize, reference: usize },
    #[error("recorded action `{0}` is not in the state's vocabulary")]
    ActionNotInVocabulary(String),
    #[error("gradient contains a non-finite entry at index {0}")]
    NonFiniteGradient(usize),
}

/// GRPO hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrpoConfig {
    /// Clip ratio for the importance-weight surrogate.
    pub clip_eps: f64,
    /// KL penalty coefficient.
    pub kl_alpha: f64,
    /// Gradient-descent step size.
    pub learning_rate: f64,
    /// Added to the group standard deviation before normalizing.
    pub std_floor: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            clip_eps: 0.1,
            kl_alpha: 0.1,
            learning_rate: 0.05,
            std_floor: 1e-8,
        }
    }
}

/// One member of a rollout group: a trajectory plus its scalar reward.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMember {
    pub trajectory: Trajectory,
    pub reward: f64,
}

/// The r trajectories that share one (game, seed) rollout, with rewards. A
/// group contributes to the gradient only while it has at least two members;
/// a singleton has no within-group baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub game_id: String,
    pub seed: u64,
    pub members: Vec<GroupMember>,
}

/// Normalize rewards within a group: `(r - mean) / (pop_std + floor)`.
/// All-equal rewards come out as all-zero advantages.
pub fn group_advantages(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    assert!(!rewards.is_empty());
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|&r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let denom = num::sqrt(var) + std_floor;
    rewards.iter().map(|&r| (r - mean) / denom).collect()
}

/// The per-step clipped surrogate `min(rho * A, clip(rho) * A)`.
pub fn clipped_surrogate(rho: f64, advantage: f64, clip_eps: f64) -> f64 {
    let clipped = rho.clamp(1.0 - clip_eps, 1.0 + clip_eps);
    (rho * advantage).min(clipped * advantage)
}

/// GRPO loss and its exact analytic gradient.
///
/// `loss = -(1/N) sum_steps min(rho*A, clip(rho)*A) + alpha * KL_mean`, where
/// `rho = exp(logpi_new(a|s) - logpi_behavior(a|s))`, `A` is the trajectory's
/// group advantage broadcast to each of its steps, and `KL_mean` averages the
/// exact categorical `KL(pi_new(.|s) || pi_ref(.|s))` over the same visited
/// states. `with_distractors` must match the rollout-time vocabulary so the
/// recorded actions resolve.
pub fn grpo_objective(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    groups: &[RolloutGroup],
    cfg: &GrpoConfig,
    featurizer: &Featurizer,
    with_distractors: bool,
) -> Result<(f64, Vec<f64>), GrpoError> {
    if groups.is_empty() {
        return Err(GrpoError::EmptyGroups);
    }
    if params.dim() != ref_params.dim() {
        return Err(GrpoError::DimensionMismatch {
            params: params.dim(),
            reference: ref_params.dim(),
        });
    }
    let dim = params.dim();
    let usable: Vec<&RolloutGroup> = groups.iter().filter(|g| g.members.len() >= 2).collect();
    let n_steps: usize = usable
        .iter()
        .flat_map(|g| g.members.iter())
        .map(|m| m.trajectory.steps.len())
        .sum();
    if n_steps == 0 {
        // Every group was dropped (or empty); nothing to optimize.
        return Ok((0.0, alloc::vec![0.0; dim]));
    }
    let scale = 1.0 / n_steps as f64;

    let mut surrogate_sum = 0.0;
    let mut kl_sum = 0.0;
    let mut grad = alloc::vec![0.0; dim];

    for group in usable {
        let rewards: Vec<f64> = group.members.iter().map(|m| m.reward).collect();
        let advantages = group_advantages(&rewards, cfg.std_floor);
        for (member, &advantage) in group.members.iter().zip(&advantages) {
            for step in &member.trajectory.steps {
                let vocab = vocabulary(&step.state, with_distractors)
                    .expect("recorded states are non-terminal");
                let features: Vec<Vec<(u32, f64)>> = vocab
                    .actions
                    .iter()
                    .map(|a| featurizer.sparse(&step.state, a))
                    .collect();
                let dot = |theta: &[f64], f: &[(u32, f64)]| -> f64 {
                    f.iter().map(|&(i, s)| s * theta[i as usize]).sum()
                };
                let logits_new: Vec<f64> =
                    features.iter().map(|f| dot(&params.theta, f)).collect();
                let logits_ref: Vec<f64> =
                    features.iter().map(|f| dot(&ref_params.theta, f)).collect();
                let lse_new = num::log_sum_exp(&logits_new);
                let lse_ref = num::log_sum_exp(&logits_ref);
                let probs_new: Vec<f64> =
                    logits_new.iter().map(|&z| num::exp(z - lse_new)).collect();

                let action_index = vocab
                    .actions
                    .iter()
                    .position(|a| *a == step.raw_action)
                    .ok_or_else(|| GrpoError::ActionNotInVocabulary(step.raw_action.clone()))?;

                let logp_new = logits_new[action_index] - lse_new;
                let rho = num::exp(logp_new - step.logprob);
                surrogate_sum += clipped_surrogate(rho, advantage, cfg.clip_eps);

                // E_pi[phi] under the new policy, shared by both gradient
                // terms.
                let mut mean_phi: Vec<(u32, f64)> = Vec::new();
                // Accumulate sparsely: expected feature value per touched
                // bucket.
                let mut touch = alloc::collections::BTreeMap::new();
                for (f, &p) in features.iter().zip(&probs_new) {
                    for &(i, s) in f {
                        *touch.entry(i).or_insert(0.0) += p * s;
                    }
                }
                mean_phi.extend(touch.iter().map(|(&i, &v)| (i, v)));

                // Surrogate gradient flows only while the unclipped branch is
                // the active minimum.
                let clipped_rho = rho.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
                if rho * advantage <= clipped_rho * advantage {
                    let w = scale * advantage * rho;
                    for &(i, s) in &features[action_index] {
                        grad[i as usize] -= w * s;
                    }
                    for &(i, v) in &mean_phi {
                        grad[i as usize] += w * v;
                    }
                }

                // Exact categorical KL and its gradient.
                let mut kl = 0.0;
                for (j, &p) in probs_new.iter().enumerate() {
                    let d = (logits_new[j] - lse_new) - (logits_ref[j] - lse_ref);
                    kl += p * d;
                }
                kl_sum += kl;
                let kw = scale * cfg.kl_alpha;
                for (j, &p) in probs_new.iter().enumerate() {
                    let d = (logits_new[j] - lse_new) - (logits_ref[j] - lse_ref);
                    let coeff = kw * p * (d - kl);
                    for &(i, s) in &features[j] {
                        grad[i as usize] += coeff * s;
                    }
                }
            }
        }
    }

    let loss = -surrogate_sum * scale + cfg.kl_alpha * kl_sum * scale;
    Ok((loss, grad))
}

/// Plain gradient-descent step: `theta' = theta - lr * grad`.
pub fn apply_update(
    params: &PolicyParams,
    gradient: &[f64],
    learning_rate: f64,
) -> Result<PolicyParams, GrpoError> {
    if let Some(bad) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(GrpoError::NonFiniteGradient(bad));
    }
    let mut next = params.clone();
    for (t, g) in next.theta.iter_mut().zip(gradient) {
        *t -= learning_rate * g;
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{register_builtin_games, reset, step, vocabulary, Player};
    use crate::policy::{action_distribution, init_params};
    use crate::rng::rng_from_seed;
    use crate::trajectory::TrajStep;
    use alloc::string::ToString;
    use alloc::vec;
    use rand::Rng;

    #[test]
    fn advantages_hand_values() {
        assert_eq!(group_advantages(&[1.0, 1.0, 1.0, 1.0], 1e-8), vec![0.0; 4]);
        let a = group_advantages(&[1.0, -1.0], 1e-8);
        assert!((a[0] - 1.0).abs() < 1e-6 && (a[1] + 1.0).abs() < 1e-6);
        let a = group_advantages(&[1.0, 0.0, -1.0], 1e-8);
        assert!((a[0] - 1.224744).abs() < 1e-4);
        assert!(a[1].abs() < 1e-9);
        assert!((a[2] + 1.224744).abs() < 1e-4);
    }

    #[test]
    fn advantages_are_shift_invariant() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let rewards: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c: f64 = rng.random_range(-5.0..5.0);
            let shifted: Vec<f64> = rewards.iter().map(|&r| r + c).collect();
            let a = group_advantages(&rewards, 1e-8);
            let b = group_advantages(&shifted, 1e-8);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn surrogate_at_unit_ratio_equals_advantage() {
        // The per-step loss contribution at rho = 1, A = 1 is -1.
        assert_eq!(clipped_surrogate(1.0, 1.0, 0.1), 1.0);
        // The gain side is capped at (1+eps)|A| for any ratio; the min keeps
        // the penalty side unbounded by construction.
        for &rho in &[0.0, 0.5, 0.9, 1.0, 1.1, 2.0, 10.0] {
            for &a in &[-2.0, -1.0, 1.0, 2.0_f64] {
                assert!(clipped_surrogate(rho, a, 0.1) <= 1.1 * a.abs() + 1e-12);
            }
        }
        // Inside the trust region the surrogate is exactly rho * A, so
        // training steps (which evaluate at rho = 1) stay within
        // (1+eps)|A| in magnitude.
        for &rho in &[0.9, 1.0, 1.1] {
            for &a in &[-2.0, -1.0, 1.0, 2.0_f64] {
                assert_eq!(clipped_surrogate(rho, a, 0.1), rho * a);
                assert!(clipped_surrogate(rho, a, 0.1).abs() <= 1.1 * a.abs() + 1e-12);
            }
        }
    }

    /// Roll a short synthetic batch of kuhn/tictactoe trajectories under a
    /// behavior policy, recording true behavior logprobs.
    fn synth_groups(
        featurizer: &crate::games::Featurizer,
        behavior: &PolicyParams,
        seed: u64,
        games: &[&str],
    ) -> Vec<RolloutGroup> {
        let reg = register_builtin_games();
        let mut rng = rng_from_seed(seed);
        let mut groups = Vec::new();
        for (gi, game) in games.iter().enumerate() {
            let spec = reg.get(game).unwrap();
            let mut members = Vec::new();
            for m in 0..4u64 {
                let mut state = reset(spec, 1000 + gi as u64);
                let role = Player::from_index(m as usize);
                let mut steps = Vec::new();
                while !state.is_terminal() {
                    let vocab = vocabulary(&state, true).unwrap();
                    let (token, lp) = crate::policy::sample_action(
                        behavior, featurizer, &state, &vocab, &mut rng, 0.0,
                    )
                    .unwrap();
                    let mover = state.current_player;
                    let next = if token.is_format_error() {
                        crate::games::forfeit(&state, mover)
                    } else {
                        step(&state, &token).unwrap().0
                    };
                    if mover == role || spec.players == 1 {
                        steps.push(TrajStep {
                            state: state.clone(),
                            raw_action: token.raw.clone(),
                            logprob: lp,
                            well_formed: !token.is_format_error(),
                        });
                    }
                    state = next;
                    if steps.len() >= 4 && spec.players == 1 {
                        // Keep puzzle episodes short for test speed.
                        state = crate::games::forfeit(&state, Player::P0);
                    }
                }
                if steps.is_empty() {
                    // Opponent ended the game before the learner moved; still
                    // need a step for the group, so retry with role 0.
                    continue;
                }
                let outcome = state.outcome.terminal().unwrap();
                members.push(GroupMember {
                    trajectory: Trajectory {
                        game_id: game.to_string(),
                        seed: 1000 + gi as u64,
                        group_slot: 0,
                        learner_role: role,
                        steps,
                        outcome,
                        env_steps: state.step_count,
                    },
                    reward: rng.random_range(-1.0..1.0),
                });
            }
            groups.push(RolloutGroup {
                game_id: game.to_string(),
                seed: 1000 + gi as u64,
                members,
            });
        }
        groups
    }

    #[test]
    fn zero_conditions_give_zero_loss_and_gradient() {
        let featurizer = crate::games::Featurizer::new(32, 7);
        let params = init_params(32, 1);
        let mut groups = synth_groups(&featurizer, &params, 5, &["kuhn_poker"]);
        // Equal rewards -> zero advantages; params == ref -> zero KL.
        for m in groups[0].members.iter_mut() {
            m.reward = 0.5;
            for s in m.trajectory.steps.iter_mut() {
                // Make behavior logprobs exact under `params` so rho = 1.
                let vocab = vocabulary(&s.state, true).unwrap();
                let dist = action_distribution(&params, &featurizer, &s.state, &vocab).unwrap();
                let idx = dist.actions.iter().position(|a| *a == s.raw_action).unwrap();
                s.logprob = dist.logprobs[idx];
            }
        }
        let cfg = GrpoConfig::default();
        let (loss, grad) = grpo_objective(&params, &params, &groups, &cfg, &featurizer, true).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|&g| g.abs() < 1e-12));
    }

    #[test]
    fn singleton_groups_are_dropped() {
        let featurizer = crate::games::Featurizer::new(32, 7);
        let params = init_params(32, 1);
        let mut groups = synth_groups(&featurizer, &params, 6, &["kuhn_poker"]);
        groups[0].members.truncate(1);
        let cfg = GrpoConfig::default();
        let (loss, grad) = grpo_objective(&params, &params, &groups, &cfg, &featurizer, true).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn empty_group_set_is_an_error() {
        let featurizer = crate::games::Featurizer::new(8, 0);
        let params = init_params(8, 0);
        assert_eq!(
            grpo_objective(&params, &params, &[], &GrpoConfig::default(), &featurizer, true),
            Err(GrpoError::EmptyGroups)
        );
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        // 20 random small instances; relative error <= 1e-4 at h = 1e-5.
        let featurizer = crate::games::Featurizer::new(16, 3);
        let cfg = GrpoConfig::default();
        for instance in 0..20u64 {
            let behavior = init_params(16, 200 + instance);
            let mut params = behavior.clone();
            let mut ref_params = behavior.clone();
            let mut rng = rng_from_seed(300 + instance);
            for t in params.theta.iter_mut() {
                *t += rng.random_range(-0.05..0.05);
            }
            for t in ref_params.theta.iter_mut() {
                *t += rng.random_range(-0.05..0.05);
            }
            let games: &[&str] = match instance % 3 {
                0 => &["kuhn_poker"],
                1 => &["tictactoe", "kuhn_poker"],
                _ => &["tictactoe", "kuhn_poker", "hanoi3"],
            };
            let groups = synth_groups(&featurizer, &behavior, 400 + instance, games);
            let (_, grad) =
                grpo_objective(&params, &ref_params, &groups, &cfg, &featurizer, true).unwrap();

            let h = 1e-5;
            let mut num_grad = vec![0.0; 16];
            for i in 0..16 {
                let mut plus = params.clone();
                plus.theta[i] += h;
                let mut minus = params.clone();
                minus.theta[i] -= h;
                let (lp, _) =
                    grpo_objective(&plus, &ref_params, &groups, &cfg, &featurizer, true).unwrap();
                let (lm, _) =
                    grpo_objective(&minus, &ref_params, &groups, &cfg, &featurizer, true).unwrap();
                num_grad[i] = (lp - lm) / (2.0 * h);
            }
            let norm: f64 = crate::num::sqrt(grad.iter().map(|g| g * g).sum());
            let diff: f64 = crate::num::sqrt(
                grad.iter()
                    .zip(&num_grad)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum(),
            );
            assert!(
                diff <= 1e-4 * norm.max(1e-8),
                "instance {instance}: |analytic - numeric| = {diff:.3e}, |grad| = {norm:.3e}"
            );
        }
    }

    #[test]
    fn update_arithmetic() {
        let params = init_params(4, 0);
        let grad = vec![0.0; 4];
        assert_eq!(apply_update(&params, &grad, 0.1).unwrap().theta, params.theta);
        let grad = vec![1.0; 4];
        assert_eq!(apply_update(&params, &grad, 0.0).unwrap().theta, params.theta);
        let mut zero = params.clone();
        zero.theta.iter_mut().for_each(|t| *t = 0.0);
        let updated = apply_update(&zero, &grad, 0.1).unwrap();
        assert!(updated.theta.iter().all(|&t| (t + 0.1).abs() < 1e-15));
        let bad = vec![f64::NAN, 0.0, 0.0, 0.0];
        assert!(matches!(
            apply_update(&params, &bad, 0.1),
            Err(GrpoError::NonFiniteGradient(0))
        ));
    }
}
