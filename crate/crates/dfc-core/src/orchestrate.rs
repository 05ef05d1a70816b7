//! Divide-fuse-conquer orchestration: probe baseline winnability, partition
//! the roster into groups, train a specialist per group, then progressively
//! average specialists into a running policy and continue training it on the
//! cumulative union of games.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{play_versus_episode, random_move};
use crate::games::{vocabulary, Featurizer, GameRegistry, GameState, InitMode, Player, PlayerResult};
use crate::policy::{fuse, sample_action, PolicyParams};
use crate::rng::DetRng;
use crate::train::{conquer, ConquerConfig, ConquerObserver, IterationMetrics, TrainError};

/// One cell of the divide partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub games: Vec<String>,
    pub init_mode: InitMode,
    pub baseline_winnable: bool,
}

/// Ordered group plan; groups partition the active game set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub groups: Vec<GroupSpec>,
}

impl GroupPlan {
    pub fn all_games(&self) -> Vec<String> {
        self.groups.iter().flat_map(|g| g.games.clone()).collect()
    }
}

/// What a pipeline phase was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    /// Specialist training on a single group (1-based index).
    Specialist { group: u32 },
    /// Parameter averaging of the next specialist into the running policy.
    Fuse { upto: u32 },
    /// Continued training on the union of groups 1..=upto.
    Conquer { upto: u32 },
}

/// Record of one completed phase.
#[derive(Debug, Clone)]
pub struct DfcPhase {
    pub kind: PhaseKind,
    pub label: String,
    pub games: Vec<String>,
    /// Iteration metrics for training phases; empty for fuse phases.
    pub metrics: Vec<IterationMetrics>,
    /// Note of the parameter vector this phase produced.
    pub params_note: String,
}

/// Full result of a divide-fuse-conquer run.
#[derive(Debug, Clone)]
pub struct DfcReport {
    pub probe: BTreeMap<String, f64>,
    pub plan: GroupPlan,
    pub phases: Vec<DfcPhase>,
    pub final_params: PolicyParams,
}

/// Observer over the whole pipeline; phase labels identify which training
/// run an iteration belongs to.
pub trait DfcObserver {
    fn begin_phase(&mut self, _label: &str) {}
    fn on_iteration(
        &mut self,
        _label: &str,
        _metrics: &IterationMetrics,
        _updated: &PolicyParams,
        _best: &PolicyParams,
    ) {
    }
    fn end_phase(&mut self, _phase: &DfcPhase, _params: &PolicyParams) {}
}

impl DfcObserver for crate::train::NullObserver {}

struct PhaseForward<'a> {
    label: &'a str,
    inner: &'a mut dyn DfcObserver,
}

impl ConquerObserver for PhaseForward<'_> {
    fn on_iteration(
        &mut self,
        metrics: &IterationMetrics,
        updated: &PolicyParams,
        best: &PolicyParams,
    ) {
        self.inner.on_iteration(self.label, metrics, updated, best);
    }
}

/// Divide-fuse-conquer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DfcConfig {
    /// Baseline probe episodes per game.
    pub probe_trials: u32,
    /// Conquer configuration for the cumulative phases.
    pub conquer: ConquerConfig,
    /// Iteration budget for per-group specialist training; defaults to the
    /// cumulative budget when unset.
    pub specialist_iterations: Option<u32>,
}

impl Default for DfcConfig {
    fn default() -> Self {
        DfcConfig {
            probe_trials: 100,
            conquer: ConquerConfig::default(),
            specialist_iterations: None,
        }
    }
}

/// Fraction of wins the (untrained) policy achieves over `trials` episodes
/// with randomized seeds, sampling stochastically with no disturbance. In
/// two-player games the opponent plays uniformly random legal moves and the
/// policy's seat alternates by trial.
pub fn probe_baseline(
    registry: &GameRegistry,
    params: &PolicyParams,
    featurizer: &Featurizer,
    game_id: &str,
    trials: u32,
    with_distractors: bool,
    rng: &mut DetRng,
) -> Result<f64, TrainError> {
    let players = registry.get(game_id)?.players;
    let mut wins = 0u32;
    let mut learner = |state: &GameState, rng: &mut DetRng| -> String {
        let vocab = vocabulary(state, with_distractors).expect("non-terminal");
        let (token, _) = sample_action(params, featurizer, state, &vocab, rng, 0.0)
            .expect("probe params match the featurizer");
        token.raw
    };
    let mut opponent = random_move;
    for trial in 0..trials {
        let role = if players == 2 {
            Player::from_index(trial as usize)
        } else {
            Player::P0
        };
        let seed = rng.random();
        let episode = play_versus_episode(
            registry,
            game_id,
            seed,
            role,
            &mut learner,
            &mut opponent,
            rng,
        )?;
        if episode.outcome.for_player(role) == PlayerResult::Win {
            wins += 1;
        }
    }
    Ok(wins as f64 / trials as f64)
}

/// Partition probed games into the 2x2 grid of (init mode, baseline
/// winnability), dropping empty cells. Ordering is easiest first:
/// winnable-fixed, winnable-random, unwinnable-fixed, unwinnable-random.
pub fn divide(
    registry: &GameRegistry,
    probe_results: &BTreeMap<String, f64>,
) -> Result<GroupPlan, TrainError> {
    let mut cells: [Vec<String>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (game, &wr) in probe_results {
        let spec = registry.get(game)?;
        let winnable = wr > 0.0;
        let idx = match (winnable, spec.init_mode) {
            (true, InitMode::FixedInit) => 0,
            (true, InitMode::RandomInit) => 1,
            (false, InitMode::FixedInit) => 2,
            (false, InitMode::RandomInit) => 3,
        };
        cells[idx].push(game.clone());
    }
    let meta = [
        (InitMode::FixedInit, true),
        (InitMode::RandomInit, true),
        (InitMode::FixedInit, false),
        (InitMode::RandomInit, false),
    ];
    let groups = cells
        .into_iter()
        .zip(meta)
        .filter(|(games, _)| !games.is_empty())
        .map(|(games, (init_mode, baseline_winnable))| GroupSpec {
            games,
            init_mode,
            baseline_winnable,
        })
        .collect();
    Ok(GroupPlan { groups })
}

/// Run the full divide-fuse-conquer pipeline on `games`.
///
/// Specialists all start from the shared `init_policy`. The running policy
/// starts as specialist 1; for each later group k the specialist is averaged
/// in (`fuse(specialist_k, running)`) and the result trained on the union of
/// groups 1..=k.
pub fn dfc_run(
    registry: &GameRegistry,
    games: &[String],
    init_policy: &PolicyParams,
    featurizer: &Featurizer,
    cfg: &DfcConfig,
    rng: &mut DetRng,
    observer: &mut dyn DfcObserver,
) -> Result<DfcReport, TrainError> {
    if games.is_empty() {
        return Err(TrainError::EmptyGroup);
    }
    let mut probe = BTreeMap::new();
    for game in games {
        let wr = probe_baseline(
            registry,
            init_policy,
            featurizer,
            game,
            cfg.probe_trials,
            cfg.conquer.toggles.distractors,
            rng,
        )?;
        probe.insert(game.clone(), wr);
    }
    let plan = divide(registry, &probe)?;

    let specialist_cfg = ConquerConfig {
        iterations: cfg.specialist_iterations.unwrap_or(cfg.conquer.iterations),
        ..cfg.conquer.clone()
    };

    let mut phases: Vec<DfcPhase> = Vec::new();
    let mut specialists: Vec<PolicyParams> = Vec::new();
    for (k, group) in plan.groups.iter().enumerate() {
        let label = alloc::format!("specialist_g{}", k + 1);
        observer.begin_phase(&label);
        let mut forward = PhaseForward {
            label: &label,
            inner: observer,
        };
        let outcome = conquer(
            registry,
            &group.games,
            init_policy,
            featurizer,
            &specialist_cfg,
            rng,
            &mut forward,
        )?;
        let params = outcome
            .best
            .relabel(&alloc::format!("specialist(g{})", k + 1));
        let phase = DfcPhase {
            kind: PhaseKind::Specialist { group: k as u32 + 1 },
            label,
            games: group.games.clone(),
            metrics: outcome.metrics,
            params_note: params.meta.note.clone(),
        };
        observer.end_phase(&phase, &params);
        phases.push(phase);
        specialists.push(params);
    }

    let mut running = specialists[0].clone();
    for k in 1..plan.groups.len() {
        // Paper operand order: fuse(specialist, running best).
        let fused = fuse(&specialists[k], &running)?;
        let label = alloc::format!("fuse_upto_g{}", k + 1);
        let phase = DfcPhase {
            kind: PhaseKind::Fuse { upto: k as u32 + 1 },
            label,
            games: Vec::new(),
            metrics: Vec::new(),
            params_note: fused.meta.note.clone(),
        };
        observer.end_phase(&phase, &fused);
        phases.push(phase);

        let union: Vec<String> = plan
            .groups
            .iter()
            .take(k + 1)
            .flat_map(|g| g.games.clone())
            .collect();
        let label = alloc::format!("conquer_upto_g{}", k + 1);
        observer.begin_phase(&label);
        let mut forward = PhaseForward {
            label: &label,
            inner: observer,
        };
        let outcome = conquer(
            registry,
            &union,
            &fused,
            featurizer,
            &cfg.conquer,
            rng,
            &mut forward,
        )?;
        running = outcome.best;
        let phase = DfcPhase {
            kind: PhaseKind::Conquer { upto: k as u32 + 1 },
            label,
            games: union,
            metrics: outcome.metrics,
            params_note: running.meta.note.clone(),
        };
        observer.end_phase(&phase, &running);
        phases.push(phase);
    }

    Ok(DfcReport {
        probe,
        plan,
        phases,
        final_params: running,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::register_builtin_games;
    use crate::policy::init_params;
    use crate::rng::rng_from_seed;
    use crate::schedule::MpsConfig;
    use crate::train::NullObserver;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn probe_winnability_on_the_default_roster() {
        let reg = register_builtin_games();
        let featurizer = Featurizer::new(64, 0);
        let params = init_params(64, 0);
        let mut rng = rng_from_seed(0);
        // A near-uniform policy sometimes wins number guessing within the
        // cap, but cannot survive hanoi4's move count with distractors in
        // the vocabulary.
        let guess = probe_baseline(&reg, &params, &featurizer, "guess_number", 100, true, &mut rng)
            .unwrap();
        assert!(guess > 0.0);
        let hanoi4 = probe_baseline(&reg, &params, &featurizer, "hanoi4", 100, true, &mut rng)
            .unwrap();
        assert!(hanoi4 < 0.05);
        let single = probe_baseline(&reg, &params, &featurizer, "kuhn_poker", 1, true, &mut rng)
            .unwrap();
        assert!(single == 0.0 || single == 1.0);
    }

    #[test]
    fn divide_partitions_and_orders_cells() {
        let reg = register_builtin_games();
        let mut probe = BTreeMap::new();
        probe.insert("tictactoe".to_string(), 0.4);
        probe.insert("guess_number".to_string(), 0.2);
        probe.insert("hanoi3".to_string(), 0.0);
        probe.insert("hanoi4".to_string(), 0.0);
        probe.insert("liars_dice".to_string(), 0.5);
        let plan = divide(&reg, &probe).unwrap();
        // Cells: winnable-fixed, winnable-random, unwinnable-fixed.
        assert_eq!(plan.groups.len(), 3);
        assert_eq!(plan.groups[0].games, vec!["tictactoe"]);
        assert_eq!(plan.groups[1].games, vec!["guess_number", "liars_dice"]);
        assert_eq!(plan.groups[2].games, vec!["hanoi3", "hanoi4"]);
        assert!(plan.groups[0].baseline_winnable);
        assert!(!plan.groups[2].baseline_winnable);
        // Partition: disjoint cover.
        let mut all = plan.all_games();
        all.sort();
        let mut expected: Vec<String> = probe.keys().cloned().collect();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn single_cell_roster_degenerates_to_one_group() {
        let reg = register_builtin_games();
        let mut probe = BTreeMap::new();
        probe.insert("tictactoe".to_string(), 0.4);
        probe.insert("connect4".to_string(), 0.3);
        let plan = divide(&reg, &probe).unwrap();
        assert_eq!(plan.groups.len(), 1);
    }

    #[test]
    fn dfc_structure_on_a_two_group_roster() {
        let reg = register_builtin_games();
        let featurizer = Featurizer::new(64, 0);
        let params = init_params(64, 0);
        let cfg = DfcConfig {
            probe_trials: 6,
            conquer: ConquerConfig {
                iterations: 2,
                probe_seeds: 2,
                rollouts_per_seed: 4,
                mps: MpsConfig { s: 2, ..MpsConfig::default() },
                ..ConquerConfig::default()
            },
            specialist_iterations: Some(1),
        };
        let games = vec!["kuhn_poker".to_string(), "hanoi4".to_string()];
        let mut rng = rng_from_seed(5);
        let report = dfc_run(
            &reg,
            &games,
            &params,
            &featurizer,
            &cfg,
            &mut rng,
            &mut NullObserver,
        )
        .unwrap();
        // kuhn_poker probes winnable-random, hanoi4 unwinnable-fixed: 2
        // groups, so 2 specialists + 1 fuse + 1 cumulative conquer.
        assert_eq!(report.plan.groups.len(), 2);
        assert_eq!(report.phases.len(), 4);
        assert!(matches!(report.phases[0].kind, PhaseKind::Specialist { group: 1 }));
        assert!(matches!(report.phases[2].kind, PhaseKind::Fuse { upto: 2 }));
        assert!(matches!(report.phases[3].kind, PhaseKind::Conquer { upto: 2 }));
        // Lineage of the final params lists both specialists.
        let lineage = report.final_params.meta.lineage.join(";");
        assert!(lineage.contains("specialist(g1)"));
        assert!(lineage.contains("specialist(g2)"));
        // K = 2 means exactly one fuse event in the lineage.
        let fuse_events = report
            .final_params
            .meta
            .lineage
            .iter()
            .filter(|e| e.starts_with("fuse("))
            .count();
        assert_eq!(fuse_events, 1);
    }

    #[test]
    fn dfc_is_reproducible_for_a_fixed_master_seed() {
        let reg = register_builtin_games();
        let featurizer = Featurizer::new(32, 0);
        let params = init_params(32, 0);
        let cfg = DfcConfig {
            probe_trials: 4,
            conquer: ConquerConfig {
                iterations: 1,
                probe_seeds: 2,
                rollouts_per_seed: 2,
                mps: MpsConfig { s: 2, ..MpsConfig::default() },
                ..ConquerConfig::default()
            },
            specialist_iterations: None,
        };
        let games = vec!["kuhn_poker".to_string()];
        let mut r1 = rng_from_seed(77);
        let mut r2 = rng_from_seed(77);
        let a = dfc_run(&reg, &games, &params, &featurizer, &cfg, &mut r1, &mut NullObserver)
            .unwrap();
        let b = dfc_run(&reg, &games, &params, &featurizer, &cfg, &mut r2, &mut NullObserver)
            .unwrap();
        assert_eq!(a.final_params.theta, b.final_params.theta);
        assert_eq!(a.probe, b.probe);
    }
}
