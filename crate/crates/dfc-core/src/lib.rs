//! Divide-fuse-conquer self-play training over compact turn-based games.
//!
//! This crate holds the pure, deterministic half of the project: the game
//! suite, the linear-softmax policy, reward shaping, curriculum scheduling,
//! the GRPO update, the conquer training loop, and the divide/fuse/conquer
//! orchestration. Everything here is a function of explicit seeds and
//! inputs — no IO, no clocks, no global state — so the same seed always
//! reproduces the same run bit for bit. File formats, metrics logging, and
//! the CLI live in the companion `dfc-arena` crate.
//!
//! The crate is `no_std` (with `alloc`) so the algorithmic core carries no
//! platform dependencies.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod eval;
pub mod games;
pub mod grpo;
pub mod num;
pub mod orchestrate;
pub mod policy;
pub mod reward;
pub mod rng;
pub mod schedule;
pub mod train;
pub mod trajectory;

pub use eval::{
    evaluate, evaluate_with_episodes, greedy_move, minimax_move, MatchReport, MoveRecord,
    Opponent, RoleCounts, VersusEpisode,
};
pub use games::{
    legal_actions, observation_atoms, parse_action, register_builtin_games, reset, step,
    vocabulary, ActionToken, Board, Featurizer, GameError, GameRegistry, GameSpec, GameState,
    InitMode, Move, ParsedAction, Player, PlayerResult, StepOutcome, TerminalOutcome, Vocab,
};
pub use grpo::{
    apply_update, group_advantages, grpo_objective, GroupMember, GrpoConfig, GrpoError,
    RolloutGroup,
};
pub use orchestrate::{
    dfc_run, divide, probe_baseline, DfcConfig, DfcObserver, DfcPhase, DfcReport, GroupPlan,
    GroupSpec, PhaseKind,
};
pub use policy::{
    action_distribution, fuse, greedy_action, init_params, sample_action, ActionDistribution,
    ParamsMeta, PolicyError, PolicyParams,
};
pub use reward::{
    breakdown, env_reward, format_reward, step_reward, total_reward, RewardBreakdown, RewardError,
    RewardMode,
};
pub use rng::{rng_from_seed, DetRng};
pub use schedule::{
    allocate_seeds, draw_rollout_seeds, half_negative_filter, mps_weight, MpsConfig, ScheduleError,
    WinRateTable,
};
pub use train::{
    compute_gf, compute_wrc, conquer, rollout_game, ConquerConfig, ConquerObserver, ConquerOutcome,
    IterationMetrics, NullObserver, Toggles, TrainError,
};
pub use trajectory::{ScoredTrajectory, TrajStep, Trajectory};
