//! The conquer loop: iterated self-play rollout, reward shaping, a GRPO
//! update, and win-rate-gated retention of the best policy.
//!
//! Rollouts sample from the current best policy; in two-player games the
//! learner's seat alternates across the r episodes of a group while the
//! opponent is the same best policy without exploration noise. The updated
//! policy replaces the best one only when the iteration's average training
//! win rate reaches the best average recorded so far, so the retained-best
//! series never decreases.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::games::{
    forfeit, reset, step, vocabulary, Featurizer, GameError, GameRegistry, Player, PlayerResult,
};
use crate::grpo::{apply_update, grpo_objective, GroupMember, GrpoConfig, GrpoError, RolloutGroup};
use crate::policy::{sample_action, PolicyError, PolicyParams};
use crate::reward::{breakdown, total_reward, RewardError, RewardMode};
use crate::rng::{fnv1a, DetRng};
use crate::schedule::{allocate_seeds, draw_rollout_seeds, half_negative_filter, MpsConfig, ScheduleError, WinRateTable};
use crate::trajectory::{ScoredTrajectory, TrajStep, Trajectory};

use rand::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("training group is empty")]
    EmptyGroup,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Grpo(#[from] GrpoError),
}

/// Stabilization-technique switches. All on by default; each maps to one
/// ablation arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    /// Format-reward shaping: malformed actions score -2 instead of 0.
    pub format_reward: bool,
    /// Mixed prioritized sampling; off falls back to a uniform seed split.
    pub mps: bool,
    /// Half-negative filtering of the trajectory pool.
    pub half_negative: bool,
    /// Epsilon-greedy disturbance of learner actions.
    pub epsilon_greedy: bool,
    /// Randomized environment seeds; off pins one fixed seed per game.
    pub random_seeds: bool,
    /// Offer malformed distractor strings in the sampling vocabulary.
    pub distractors: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            format_reward: true,
            mps: true,
            half_negative: true,
            epsilon_greedy: true,
            random_seeds: true,
            distractors: true,
        }
    }
}

/// Conquer-loop configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConquerConfig {
    /// Training iterations T.
    pub iterations: u32,
    /// Trajectories per rollout seed (the GRPO group size r).
    pub rollouts_per_seed: u32,
    /// Epsilon-greedy disturbance rate during training rollouts.
    pub epsilon: f64,
    /// Episodes per game in the pre-loop probe that seeds the retention gate.
    pub probe_seeds: u32,
    pub reward_mode: RewardMode,
    pub mps: MpsConfig,
    pub grpo: GrpoConfig,
    pub toggles: Toggles,
}

impl Default for ConquerConfig {
    fn default() -> Self {
        ConquerConfig {
            iterations: 100,
            rollouts_per_seed: 8,
            epsilon: 0.05,
            probe_seeds: 20,
            reward_mode: RewardMode::StepShaped,
            mps: MpsConfig::default(),
            grpo: GrpoConfig::default(),
            toggles: Toggles::default(),
        }
    }
}

/// Per-iteration training metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: u32,
    /// Learner win rate per game over this iteration's training rollouts.
    pub wrc: BTreeMap<String, f64>,
    /// Good-format ratio per game (learner actions that parsed cleanly).
    pub gf: BTreeMap<String, f64>,
    /// Mean learner steps per trajectory, per game.
    pub mean_steps: BTreeMap<String, f64>,
    /// Mean scalar training reward per trajectory, per game.
    pub mean_reward: BTreeMap<String, f64>,
    /// Average of `wrc` across the active games.
    pub avg_wrc: f64,
    /// Best recorded average win rate after this iteration's gate.
    pub best_avg_wrc: f64,
    /// Whether the gate accepted the updated policy this iteration.
    pub best_updated: bool,
    /// Wall-clock seconds for the iteration. The core loop has no clock;
    /// logging layers that track time may fill this in.
    pub duration_secs: f64,
}

/// Observer invoked once per conquer iteration with the freshly updated
/// policy and the currently retained best.
pub trait ConquerObserver {
    fn on_iteration(
        &mut self,
        metrics: &IterationMetrics,
        updated: &PolicyParams,
        best: &PolicyParams,
    );
}

/// Observer that ignores everything.
pub struct NullObserver;

impl ConquerObserver for NullObserver {
    fn on_iteration(&mut self, _: &IterationMetrics, _: &PolicyParams, _: &PolicyParams) {}
}

/// Result of one conquer run.
#[derive(Debug, Clone)]
pub struct ConquerOutcome {
    pub best: PolicyParams,
    pub metrics: Vec<IterationMetrics>,
}

/// One complete self-play episode: both seats sample from `best`, the
/// learner seat with `epsilon` disturbance and recorded behavior log-probs,
/// the opponent seat with none.
#[allow(clippy::too_many_arguments)]
fn play_selfplay_episode(
    registry: &GameRegistry,
    best: &PolicyParams,
    featurizer: &Featurizer,
    game_id: &str,
    seed: u64,
    group_slot: u32,
    learner_role: Player,
    epsilon: f64,
    with_distractors: bool,
    rng: &mut DetRng,
) -> Result<Trajectory, TrainError> {
    let spec = registry.get(game_id)?;
    let mut state = reset(spec, seed);
    let mut steps = Vec::new();
    while !state.is_terminal() {
        let mover = state.current_player;
        let is_learner = spec.players == 1 || mover == learner_role;
        let vocab = vocabulary(&state, with_distractors)?;
        let eps = if is_learner { epsilon } else { 0.0 };
        let (token, logprob) = sample_action(best, featurizer, &state, &vocab, rng, eps)?;
        if is_learner {
            steps.push(TrajStep {
                state: state.clone(),
                raw_action: token.raw.clone(),
                logprob,
                well_formed: !token.is_format_error(),
            });
        }
        state = if token.is_format_error() {
            forfeit(&state, mover)
        } else {
            step(&state, &token)?.0
        };
    }
    Ok(Trajectory {
        game_id: game_id.to_string(),
        seed,
        group_slot,
        learner_role,
        steps,
        outcome: state.outcome.terminal().expect("loop exits on terminal"),
        env_steps: state.step_count,
    })
}

/// Roll `r` complete self-play episodes of one game from one seed. Even
/// episode indices put the learner in seat 0, odd in seat 1; the opponent
/// plays the same policy with no exploration noise. Behavior log-probs are
/// recorded for learner moves only.
#[allow(clippy::too_many_arguments)]
pub fn rollout_game(
    registry: &GameRegistry,
    best: &PolicyParams,
    featurizer: &Featurizer,
    game_id: &str,
    seed: u64,
    group_slot: u32,
    r: u32,
    epsilon: f64,
    with_distractors: bool,
    rng: &mut DetRng,
) -> Result<Vec<Trajectory>, TrainError> {
    let players = registry.get(game_id)?.players;
    (0..r)
        .map(|episode| {
            let learner_role = if players == 2 {
                Player::from_index(episode as usize)
            } else {
                Player::P0
            };
            play_selfplay_episode(
                registry,
                best,
                featurizer,
                game_id,
                seed,
                group_slot,
                learner_role,
                epsilon,
                with_distractors,
                rng,
            )
        })
        .collect()
}

/// Per-game learner win rate over a batch of trajectories.
pub fn compute_wrc(trajectories: &[Trajectory]) -> BTreeMap<String, f64> {
    let mut wins: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for t in trajectories {
        let entry = wins.entry(t.game_id.clone()).or_insert((0, 0));
        entry.1 += 1;
        if t.learner_result() == PlayerResult::Win {
            entry.0 += 1;
        }
    }
    wins.into_iter()
        .map(|(g, (w, n))| (g, w as f64 / n as f64))
        .collect()
}

/// Per-game good-format ratio: the fraction of learner-emitted actions that
/// parsed cleanly, pooled over each game's trajectories. A game with no
/// emitted actions scores 1.0 (vacuously good).
pub fn compute_gf(trajectories: &[Trajectory]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for t in trajectories {
        let entry = counts.entry(t.game_id.clone()).or_insert((0, 0));
        for s in &t.steps {
            entry.1 += 1;
            if s.well_formed {
                entry.0 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(g, (good, total))| {
            let gf = if total == 0 {
                1.0
            } else {
                good as f64 / total as f64
            };
            (g, gf)
        })
        .collect()
}

/// Fixed per-game environment seed used when seed randomization is off.
fn pinned_seed(game_id: &str) -> u64 {
    fnv1a(0x5eed_f1ae, game_id.as_bytes())
}

fn mean(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        values.sum::<f64>() / count as f64
    }
}

/// Run the conquer recipe on a group of games, starting from `init_policy`.
///
/// Each iteration allocates rollout seeds across the group (MPS-weighted by
/// the previous iteration's win rates), rolls r self-play trajectories per
/// seed with the retained best policy, scores them with the configured
/// reward, filters half of the negatives, runs one GRPO update, and retains
/// the updated policy if the iteration's average win rate reaches the best
/// recorded so far. The gate baseline comes from a pre-loop probe of the
/// initial policy.
pub fn conquer(
    registry: &GameRegistry,
    group: &[String],
    init_policy: &PolicyParams,
    featurizer: &Featurizer,
    cfg: &ConquerConfig,
    rng: &mut DetRng,
    observer: &mut dyn ConquerObserver,
) -> Result<ConquerOutcome, TrainError> {
    if group.is_empty() {
        return Err(TrainError::EmptyGroup);
    }
    let eps = if cfg.toggles.epsilon_greedy {
        cfg.epsilon
    } else {
        0.0
    };
    let distractors = cfg.toggles.distractors;

    // Pre-loop probe of the initial policy: the gate's t = 0 baseline.
    // Probe seeds roll the same r trajectories as a training seed so the
    // baseline is measured with the same protocol (and comparable variance)
    // as the iteration averages it gates.
    let mut wr_table = {
        let mut probe_trajs = Vec::new();
        for game in group {
            for i in 0..cfg.probe_seeds {
                let seed = if cfg.toggles.random_seeds {
                    rng.random()
                } else {
                    pinned_seed(game)
                };
                let mut trajs = rollout_game(
                    registry,
                    init_policy,
                    featurizer,
                    game,
                    seed,
                    i,
                    cfg.rollouts_per_seed,
                    eps,
                    distractors,
                    rng,
                )?;
                probe_trajs.append(&mut trajs);
            }
        }
        let mut table: WinRateTable = compute_wrc(&probe_trajs);
        for game in group {
            table.entry(game.clone()).or_insert(0.0);
        }
        table
    };
    // Gate state. Acceptance compares this iteration's measured average
    // against the previous iteration's (the probe average before t = 1);
    // `best_avg` tracks the best average recorded at any acceptance and
    // never decreases.
    let mut prev_avg = mean(wr_table.values().copied(), wr_table.len());
    let mut best_avg = prev_avg;
    let mut best = init_policy.clone();
    let mut metrics_log = Vec::with_capacity(cfg.iterations as usize);

    for t in 1..=cfg.iterations {
        // Seed allocation over the group.
        let counts: BTreeMap<String, u32> = if cfg.toggles.mps {
            allocate_seeds(&wr_table, &cfg.mps)?
        } else {
            group.iter().map(|g| (g.clone(), cfg.mps.s)).collect()
        };

        // Rollout wave.
        let mut slot = 0u32;
        let mut all_trajectories: Vec<Trajectory> = Vec::new();
        for game in group {
            let n_seeds = counts[game];
            let seeds = if cfg.toggles.random_seeds {
                draw_rollout_seeds(game, n_seeds, rng)
            } else {
                alloc::vec![pinned_seed(game); n_seeds as usize]
            };
            for seed in seeds {
                let trajs = rollout_game(
                    registry,
                    &best,
                    featurizer,
                    game,
                    seed,
                    slot,
                    cfg.rollouts_per_seed,
                    eps,
                    distractors,
                    rng,
                )?;
                slot += 1;
                all_trajectories.extend(trajs);
            }
        }

        // Metrics come from the full, unfiltered wave.
        let wrc = compute_wrc(&all_trajectories);
        let gf = compute_gf(&all_trajectories);
        let mut mean_steps = BTreeMap::new();
        let mut mean_reward = BTreeMap::new();

        // Score trajectories; an episode the learner never acted in (the
        // opponent forfeited first) carries no learner signal and cannot be
        // scored, so it counts for win-rate metrics only.
        let mut scored: Vec<ScoredTrajectory> = Vec::new();
        for traj in &all_trajectories {
            if traj.steps.is_empty() {
                continue;
            }
            let reward = breakdown(traj, cfg.toggles.format_reward)?;
            scored.push(ScoredTrajectory {
                trajectory: traj.clone(),
                reward,
            });
        }
        for game in group {
            let of_game: Vec<&ScoredTrajectory> =
                scored.iter().filter(|s| &s.trajectory.game_id == game).collect();
            mean_steps.insert(
                game.clone(),
                mean(
                    of_game.iter().map(|s| s.trajectory.n_steps() as f64),
                    of_game.len(),
                ),
            );
            mean_reward.insert(
                game.clone(),
                mean(
                    of_game
                        .iter()
                        .map(|s| total_reward(&s.reward, cfg.reward_mode)),
                    of_game.len(),
                ),
            );
        }

        // Half-negative filtering, then group formation over the survivors.
        let filtered = if cfg.toggles.half_negative {
            half_negative_filter(scored, rng)
        } else {
            scored
        };
        let mut groups_by_slot: BTreeMap<u32, RolloutGroup> = BTreeMap::new();
        for item in filtered {
            let key = item.trajectory.group_slot;
            let entry = groups_by_slot.entry(key).or_insert_with(|| RolloutGroup {
                game_id: item.trajectory.game_id.clone(),
                seed: item.trajectory.seed,
                members: Vec::new(),
            });
            entry.members.push(GroupMember {
                reward: total_reward(&item.reward, cfg.reward_mode),
                trajectory: item.trajectory,
            });
        }
        let groups: Vec<RolloutGroup> = groups_by_slot.into_values().collect();

        // One GRPO step from the retained best policy, which is also the KL
        // reference for the iteration.
        let updated = if groups.is_empty() {
            best.clone()
        } else {
            let (_, grad) = grpo_objective(
                &best,
                &best,
                &groups,
                &cfg.grpo,
                featurizer,
                distractors,
            )?;
            apply_update(&best, &grad, cfg.grpo.learning_rate)?
        };

        // Retention gate on the iteration's average training win rate: the
        // update is adopted when this iteration's average reaches the
        // previous iteration's.
        let avg_wrc = mean(wrc.values().copied(), wrc.len());
        let best_updated = avg_wrc >= prev_avg;
        if best_updated {
            best = updated.clone();
            best_avg = best_avg.max(avg_wrc);
        }
        prev_avg = avg_wrc;
        wr_table = wrc.clone();
        for game in group {
            wr_table.entry(game.clone()).or_insert(0.0);
        }

        let metrics = IterationMetrics {
            iteration: t,
            wrc,
            gf,
            mean_steps,
            mean_reward,
            avg_wrc,
            best_avg_wrc: best_avg,
            best_updated,
            duration_secs: 0.0,
        };
        observer.on_iteration(&metrics, &updated, &best);
        metrics_log.push(metrics);
    }

    let label = alloc::format!("conquer({})", group.join("+"));
    Ok(ConquerOutcome {
        best: best.relabel(&label),
        metrics: metrics_log,
    })
}
