//! Shared linear-softmax policy over hashed state-action features.
//!
//! A single flat parameter vector serves every game; per-game behavior comes
//! entirely from game-tagged features. The flat vector is also the unit of
//! fusion: averaging two policies elementwise is exactly the whole-model
//! parameter averaging the orchestrator relies on.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::games::{parse_action, ActionToken, Featurizer, GameState, Vocab};
use crate::num;
use crate::rng::{categorical_draw, DetRng};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("parameter dimension {params} does not match featurizer dimension {featurizer}")]
    DimensionMismatch { params: usize, featurizer: usize },
    #[error("policy parameters contain a non-finite entry")]
    NonFiniteParams,
}

/// Provenance carried alongside the raw parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamsMeta {
    pub feature_dim: usize,
    /// Short label for this parameter vector, e.g. `init(seed=0)`.
    pub note: String,
    /// Append-only history of the checkpoints this vector descends from.
    pub lineage: Vec<String>,
}

/// A flat real-valued policy parameter vector plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub theta: Vec<f64>,
    pub meta: ParamsMeta,
}

impl PolicyParams {
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Replace the label and extend the lineage with it.
    pub fn relabel(mut self, note: &str) -> Self {
        self.meta.note = note.to_string();
        self.meta.lineage.push(note.to_string());
        self
    }
}

/// Softmax distribution over a decision point's vocabulary at temperature 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    pub actions: Vec<String>,
    pub probs: Vec<f64>,
    pub logprobs: Vec<f64>,
    /// Leading entries of `actions` that are canonical legal moves.
    pub canonical_len: usize,
}

/// Draw initial parameters i.i.d. uniform in [-0.01, 0.01]. The small scale
/// keeps the starting policy near-uniform so baseline probes measure
/// effectively random play.
pub fn init_params(dim: usize, seed: u64) -> PolicyParams {
    assert!(dim >= 1, "parameter dimension must be positive");
    let mut rng = crate::rng::derive_rng(seed, "policy.init", 0);
    let theta = (0..dim).map(|_| rng.random_range(-0.01..=0.01)).collect();
    let note = format!("init(seed={seed},d={dim})");
    PolicyParams {
        theta,
        meta: ParamsMeta {
            feature_dim: dim,
            note: note.clone(),
            lineage: alloc::vec![note],
        },
    }
}

fn check_dims(params: &PolicyParams, featurizer: &Featurizer) -> Result<(), PolicyError> {
    if params.dim() != featurizer.dim {
        return Err(PolicyError::DimensionMismatch {
            params: params.dim(),
            featurizer: featurizer.dim,
        });
    }
    Ok(())
}

/// Logit of one action: theta . phi(state, action).
fn logit(params: &PolicyParams, featurizer: &Featurizer, state: &GameState, action: &str) -> f64 {
    featurizer
        .sparse(state, action)
        .iter()
        .map(|&(idx, sign)| sign * params.theta[idx as usize])
        .sum()
}

/// Softmax over dot-product logits for every vocabulary entry.
pub fn action_distribution(
    params: &PolicyParams,
    featurizer: &Featurizer,
    state: &GameState,
    vocab: &Vocab,
) -> Result<ActionDistribution, PolicyError> {
    check_dims(params, featurizer)?;
    let logits: Vec<f64> = vocab
        .actions
        .iter()
        .map(|a| logit(params, featurizer, state, a))
        .collect();
    let lse = num::log_sum_exp(&logits);
    let logprobs: Vec<f64> = logits.iter().map(|&z| z - lse).collect();
    let probs: Vec<f64> = logprobs.iter().map(|&lp| num::exp(lp)).collect();
    Ok(ActionDistribution {
        actions: vocab.actions.clone(),
        probs,
        logprobs,
        canonical_len: vocab.canonical_len,
    })
}

/// Sample an action, optionally disturbed: with probability `epsilon` the
/// emitted action is uniform over the canonical legal moves instead of the
/// policy's draw. The returned log-probability is always log pi(a|s) of the
/// emitted action under the undisturbed policy distribution — the behavior
/// record GRPO uses as pi_old.
pub fn sample_action(
    params: &PolicyParams,
    featurizer: &Featurizer,
    state: &GameState,
    vocab: &Vocab,
    rng: &mut DetRng,
    epsilon: f64,
) -> Result<(ActionToken, f64), PolicyError> {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    let dist = action_distribution(params, featurizer, state, vocab)?;
    let disturb = epsilon > 0.0 && rng.random::<f64>() < epsilon;
    let index = if disturb {
        rng.random_range(0..vocab.canonical_len)
    } else {
        categorical_draw(&dist.probs, rng)
    };
    let raw = &dist.actions[index];
    let token = parse_action(state, raw);
    Ok((token, dist.logprobs[index]))
}

/// Greedy argmax over the canonical legal actions; ties break toward the
/// earlier action. Used at evaluation time, where epsilon is pinned to 0 and
/// distractors are not offered.
pub fn greedy_action(
    params: &PolicyParams,
    featurizer: &Featurizer,
    state: &GameState,
    vocab: &Vocab,
) -> Result<ActionToken, PolicyError> {
    let dist = action_distribution(params, featurizer, state, vocab)?;
    let mut best = 0;
    for i in 1..vocab.canonical_len {
        if dist.probs[i] > dist.probs[best] {
            best = i;
        }
    }
    Ok(parse_action(state, &dist.actions[best]))
}

/// Elementwise parameter averaging; the fuse step. Lineages concatenate and
/// gain a record of the fusion itself.
pub fn fuse(a: &PolicyParams, b: &PolicyParams) -> Result<PolicyParams, PolicyError> {
    if a.dim() != b.dim() {
        return Err(PolicyError::DimensionMismatch {
            params: a.dim(),
            featurizer: b.dim(),
        });
    }
    // Fixed left-to-right elementwise order keeps fuse(a, b) and fuse(b, a)
    // bitwise identical.
    let theta: Vec<f64> = a
        .theta
        .iter()
        .zip(&b.theta)
        .map(|(&x, &y)| 0.5 * (x + y))
        .collect();
    let note = format!("fuse({}+{})", a.meta.note, b.meta.note);
    let mut lineage = a.meta.lineage.clone();
    lineage.extend(b.meta.lineage.iter().cloned());
    lineage.push(note.clone());
    Ok(PolicyParams {
        theta,
        meta: ParamsMeta {
            feature_dim: a.meta.feature_dim,
            note,
            lineage,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{register_builtin_games, reset, vocabulary};
    use crate::rng::rng_from_seed;
    use alloc::vec;

    fn fixture() -> (PolicyParams, Featurizer, GameState, Vocab) {
        let reg = register_builtin_games();
        let state = reset(reg.get("tictactoe").unwrap(), 0);
        let vocab = vocabulary(&state, false).unwrap();
        let featurizer = Featurizer::new(64, 0);
        (init_params(64, 0), featurizer, state, vocab)
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params(256, 0);
        let b = init_params(256, 0);
        assert_eq!(a.theta, b.theta);
        assert!(a.theta.iter().all(|&t| t.abs() <= 0.01));
        assert_eq!(init_params(4, 1).theta.len(), 4);
    }

    #[test]
    fn zero_params_give_uniform_distribution() {
        let (mut params, featurizer, state, vocab) = fixture();
        params.theta.iter_mut().for_each(|t| *t = 0.0);
        let dist = action_distribution(&params, &featurizer, &state, &vocab).unwrap();
        for &p in &dist.probs {
            assert!((p - 1.0 / vocab.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (params, featurizer, state, vocab) = fixture();
        let dist = action_distribution(&params, &featurizer, &state, &vocab).unwrap();
        let total: f64 = dist.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_action_softmax_matches_hand_computation() {
        // logits (1, 0) -> probs (e/(e+1), 1/(e+1)).
        let z = [1.0, 0.0];
        let lse = crate::num::log_sum_exp(&z);
        let p0 = crate::num::exp(1.0 - lse);
        let e = crate::num::exp(1.0);
        assert!((p0 - e / (e + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (params, _, state, vocab) = fixture();
        let featurizer = Featurizer::new(32, 0);
        assert!(matches!(
            action_distribution(&params, &featurizer, &state, &vocab),
            Err(PolicyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampled_logprob_matches_distribution_exactly() {
        let (params, featurizer, state, vocab) = fixture();
        let dist = action_distribution(&params, &featurizer, &state, &vocab).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..50 {
            let (token, lp) = sample_action(&params, &featurizer, &state, &vocab, &mut rng, 0.3)
                .unwrap();
            let idx = dist.actions.iter().position(|a| *a == token.raw).unwrap();
            assert_eq!(lp, dist.logprobs[idx]);
        }
    }

    #[test]
    fn fuse_averages_and_concatenates_lineage() {
        let a = init_params(8, 0);
        let b = init_params(8, 1);
        let fused = fuse(&a, &b).unwrap();
        for i in 0..8 {
            assert_eq!(fused.theta[i], 0.5 * (a.theta[i] + b.theta[i]));
        }
        assert_eq!(fuse(&a, &a).unwrap().theta, a.theta);
        let zero = PolicyParams {
            theta: vec![0.0; 8],
            meta: a.meta.clone(),
        };
        let half = fuse(&zero, &b).unwrap();
        for i in 0..8 {
            assert_eq!(half.theta[i], b.theta[i] / 2.0);
        }
        assert!(fused.meta.lineage.len() >= 3);
        assert!(fused.meta.note.starts_with("fuse("));
    }

    #[test]
    fn fuse_rejects_dimension_mismatch() {
        let a = init_params(8, 0);
        let b = init_params(16, 0);
        assert!(fuse(&a, &b).is_err());
    }

    #[test]
    fn averaging_is_not_associative_in_general() {
        let t1 = init_params(16, 1);
        let t2 = init_params(16, 2);
        let t3 = init_params(16, 3);
        let left = fuse(&fuse(&t1, &t2).unwrap(), &t3).unwrap();
        let right = fuse(&t1, &fuse(&t2, &t3).unwrap()).unwrap();
        assert_ne!(left.theta, right.theta);
    }
}
