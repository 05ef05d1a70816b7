//! Trajectory records produced by self-play rollouts.

use alloc::string::String;
use alloc::vec::Vec;

use crate::games::{GameState, Player, PlayerResult, TerminalOutcome};
use crate::reward::RewardBreakdown;

/// One learner decision: the state it saw, the raw string it emitted, the
/// behavior log-probability of that string under the undisturbed policy, and
/// whether the string parsed cleanly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajStep {
    pub state: GameState,
    pub raw_action: String,
    pub logprob: f64,
    pub well_formed: bool,
}

/// One complete self-play episode from the learner's perspective. Opponent
/// moves advance the state between steps but are not recorded here; the
/// step list holds learner decisions only, so `n_steps` counts learner
/// turns (for a single-player game, every turn).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub game_id: String,
    pub seed: u64,
    /// Index of the rollout wave that produced this episode; together with
    /// (game_id, seed) it identifies the trajectory's GRPO group even when
    /// seed randomization is disabled and seeds repeat.
    pub group_slot: u32,
    pub learner_role: Player,
    pub steps: Vec<TrajStep>,
    pub outcome: TerminalOutcome,
    /// Total environment steps taken by both seats.
    pub env_steps: u32,
}

impl Trajectory {
    /// Number of learner steps; the `n_tau` that scales winning rewards.
    pub fn n_steps(&self) -> u32 {
        self.steps.len() as u32
    }

    pub fn learner_result(&self) -> PlayerResult {
        self.outcome.for_player(self.learner_role)
    }

    /// True if any learner-emitted action failed to parse.
    pub fn has_format_violation(&self) -> bool {
        self.steps.iter().any(|s| !s.well_formed)
    }
}

/// A trajectory paired with its reward breakdown; the unit that flows
/// through filtering and group formation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrajectory {
    pub trajectory: Trajectory,
    pub reward: RewardBreakdown,
}
