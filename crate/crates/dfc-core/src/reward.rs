//! Trajectory reward shaping: a format gate, the win/draw/loss environment
//! reward, and a step penalty that scales winning rewards by 1/n so faster
//! solutions earn more. One scalar per trajectory; the trainer broadcasts it
//! to the trajectory's steps.

use crate::games::{PlayerResult, StepOutcome};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewardError {
    #[error("trajectory has no recorded steps")]
    EmptyTrajectory,
    #[error("environment reward requires a terminal outcome")]
    NonTerminal,
    #[error("step reward requires n_steps >= 1, got {0}")]
    InvalidStepCount(u32),
}

/// Which scalar the trainer optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RewardMode {
    /// Step-shaped reward with the hasty-action penalty.
    StepShaped,
    /// Raw environment reward (the no-penalty ablation baseline).
    EnvOnly,
}

impl RewardMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RewardMode::StepShaped => "step_shaped",
            RewardMode::EnvOnly => "env_only",
        }
    }

    pub fn parse(s: &str) -> Option<RewardMode> {
        match s {
            "step_shaped" => Some(RewardMode::StepShaped),
            "env_only" => Some(RewardMode::EnvOnly),
            _ => None,
        }
    }
}

impl core::fmt::Display for RewardMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The (format, environment, step) reward triple of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub r_format: f64,
    pub r_env: f64,
    pub r_step: f64,
    pub n_steps: u32,
}

/// -2 if any learner-emitted action in the trajectory failed to parse,
/// else 0.
pub fn format_reward(trajectory: &Trajectory) -> Result<f64, RewardError> {
    if trajectory.steps.is_empty() {
        return Err(RewardError::EmptyTrajectory);
    }
    Ok(if trajectory.has_format_violation() {
        -2.0
    } else {
        0.0
    })
}

/// Map a terminal outcome to {Win: 1, Draw: 0, Lose: -1} for one seat.
pub fn env_reward(
    outcome: &StepOutcome,
    player: crate::games::Player,
) -> Result<f64, RewardError> {
    let terminal = outcome.terminal().ok_or(RewardError::NonTerminal)?;
    Ok(match terminal.for_player(player) {
        PlayerResult::Win => 1.0,
        PlayerResult::Draw => 0.0,
        PlayerResult::Lose => -1.0,
    })
}

/// The step-penalty reward: the format penalty dominates when present,
/// winning rewards are scaled by 1/n, and everything else passes through.
pub fn step_reward(r_format: f64, r_env: f64, n_steps: u32) -> Result<f64, RewardError> {
    if n_steps < 1 {
        return Err(RewardError::InvalidStepCount(n_steps));
    }
    Ok(if r_format < 0.0 {
        r_format
    } else if r_env > 0.0 {
        r_env / n_steps as f64
    } else {
        r_env
    })
}

/// Collapse a breakdown to the single training scalar for `mode`.
pub fn total_reward(breakdown: &RewardBreakdown, mode: RewardMode) -> f64 {
    match mode {
        RewardMode::StepShaped => breakdown.r_step,
        RewardMode::EnvOnly => {
            if breakdown.r_format < 0.0 {
                breakdown.r_format
            } else {
                breakdown.r_env
            }
        }
    }
}

/// Score a finished trajectory. With the format-reward toggle off the format
/// component is pinned to 0 and the step reward falls through to the
/// environment branch.
pub fn breakdown(trajectory: &Trajectory, format_reward_enabled: bool) -> Result<RewardBreakdown, RewardError> {
    let r_format = if format_reward_enabled {
        format_reward(trajectory)?
    } else {
        if trajectory.steps.is_empty() {
            return Err(RewardError::EmptyTrajectory);
        }
        0.0
    };
    let outcome = StepOutcome::Terminal(trajectory.outcome);
    let r_env = env_reward(&outcome, trajectory.learner_role)?;
    let n_steps = trajectory.n_steps();
    let r_step = step_reward(r_format, r_env, n_steps)?;
    Ok(RewardBreakdown {
        r_format,
        r_env,
        r_step,
        n_steps,
    })
}
