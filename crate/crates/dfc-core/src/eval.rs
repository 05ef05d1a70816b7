//! Evaluation against scripted opponents, and the shared policy-vs-agent
//! episode driver.
//!
//! Scripted opponents give a fixed external skill reference: `Random` plays
//! uniformly over legal moves, `Greedy` takes an immediate win or the best
//! one-ply heuristic move, and `Minimax` runs depth-limited alpha-beta on
//! the perfect-information board games (falling back to the greedy rules
//! where hidden information would let search cheat). A checkpoint can also
//! be mounted as the opponent to pit a trained policy against its initial
//! version.
//!
//! The evaluated policy always acts greedily (argmax over canonical legal
//! actions, epsilon 0, no distractors).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::games::{
    forfeit, legal_actions, parse_action, reset, step, vocabulary, Board, Featurizer, GameRegistry,
    GameState, Player, PlayerResult, StepOutcome, TerminalOutcome,
};
use crate::policy::{greedy_action, PolicyParams};
use crate::rng::DetRng;
use crate::train::TrainError;

/// Opponent selector for evaluation matches.
#[derive(Debug, Clone)]
pub enum Opponent<'a> {
    /// Uniform over legal moves.
    Random,
    /// Immediate win if available, else the best one-ply heuristic move.
    Greedy,
    /// Depth-limited alpha-beta for tictactoe and connect4; greedy rules
    /// elsewhere.
    Minimax { depth: u32 },
    /// Another policy (e.g. the initial checkpoint), played greedily.
    Policy { params: &'a PolicyParams, label: &'a str },
}

impl Opponent<'_> {
    pub fn label(&self) -> String {
        match self {
            Opponent::Random => "random".to_string(),
            Opponent::Greedy => "greedy".to_string(),
            Opponent::Minimax { depth } => alloc::format!("minimax:{depth}"),
            Opponent::Policy { label, .. } => (*label).to_string(),
        }
    }
}

/// W/D/L counts for one seat assignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCounts {
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
}

impl RoleCounts {
    fn record(&mut self, result: PlayerResult) {
        match result {
            PlayerResult::Win => self.wins += 1,
            PlayerResult::Draw => self.draws += 1,
            PlayerResult::Lose => self.losses += 1,
        }
    }

    pub fn episodes(&self) -> u32 {
        self.wins + self.draws + self.losses
    }
}

/// Evaluation results for one (game, opponent) pairing. Two-player games
/// play `n_seeds` episodes in each seat; single-player games play `n_seeds`
/// episodes total and ignore the opponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchReport {
    pub game_id: String,
    pub opponent: String,
    pub n_seeds: u32,
    /// Counts with the evaluated policy in seat 0, then in seat 1.
    pub per_role: [RoleCounts; 2],
}

impl MatchReport {
    pub fn totals(&self) -> RoleCounts {
        RoleCounts {
            wins: self.per_role[0].wins + self.per_role[1].wins,
            draws: self.per_role[0].draws + self.per_role[1].draws,
            losses: self.per_role[0].losses + self.per_role[1].losses,
        }
    }

    pub fn win_rate(&self) -> f64 {
        let t = self.totals();
        if t.episodes() == 0 {
            0.0
        } else {
            t.wins as f64 / t.episodes() as f64
        }
    }
}

/// One move of a finished episode, for replay files.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveRecord {
    pub player: Player,
    pub raw: String,
    pub outcome: StepOutcome,
}

/// A finished evaluation episode: who sat where, what happened, every move.
#[derive(Debug, Clone)]
pub struct VersusEpisode {
    pub game_id: String,
    pub seed: u64,
    pub learner_role: Player,
    pub outcome: TerminalOutcome,
    pub moves: Vec<MoveRecord>,
}

/// Drive one episode between two decision closures. Each closure returns a
/// raw action string; malformed or illegal strings forfeit on the spot.
pub(crate) fn play_versus_episode(
    registry: &GameRegistry,
    game_id: &str,
    seed: u64,
    learner_role: Player,
    learner: &mut dyn FnMut(&GameState, &mut DetRng) -> String,
    opponent: &mut dyn FnMut(&GameState, &mut DetRng) -> String,
    rng: &mut DetRng,
) -> Result<VersusEpisode, TrainError> {
    let spec = registry.get(game_id)?;
    let mut state = reset(spec, seed);
    let mut moves = Vec::new();
    while !state.is_terminal() {
        let mover = state.current_player;
        let is_learner = spec.players == 1 || mover == learner_role;
        let raw = if is_learner {
            learner(&state, rng)
        } else {
            opponent(&state, rng)
        };
        let token = parse_action(&state, &raw);
        state = if token.is_format_error() {
            forfeit(&state, mover)
        } else {
            step(&state, &token)?.0
        };
        moves.push(MoveRecord {
            player: mover,
            raw,
            outcome: state.outcome,
        });
    }
    Ok(VersusEpisode {
        game_id: game_id.to_string(),
        seed,
        learner_role,
        outcome: state.outcome.terminal().expect("loop exits on terminal"),
        moves,
    })
}

/// Uniform-random legal move.
pub fn random_move(state: &GameState, rng: &mut DetRng) -> String {
    let legal = legal_actions(state).expect("driver only asks at non-terminal states");
    legal[rng.random_range(0..legal.len())].clone()
}

/// Pick a move for a scripted opponent.
fn opponent_move(
    opponent: &Opponent<'_>,
    featurizer: &Featurizer,
    state: &GameState,
    rng: &mut DetRng,
) -> String {
    match opponent {
        Opponent::Random => random_move(state, rng),
        Opponent::Greedy => greedy_move(state),
        Opponent::Minimax { depth } => minimax_move(state, *depth),
        Opponent::Policy { params, .. } => {
            let vocab = vocabulary(state, false).expect("non-terminal");
            greedy_action(params, featurizer, state, &vocab)
                .expect("dimensions were validated by evaluate")
                .raw
        }
    }
}

/// Evaluate a policy against one opponent on one game: `n_seeds` episodes
/// per seat for two-player games (seat 0 first), `n_seeds` episodes total
/// for single-player games. The policy acts greedily throughout.
pub fn evaluate(
    registry: &GameRegistry,
    params: &PolicyParams,
    featurizer: &Featurizer,
    game_id: &str,
    opponent: &Opponent<'_>,
    n_seeds: u32,
    rng: &mut DetRng,
) -> Result<MatchReport, TrainError> {
    let (report, _) = evaluate_with_episodes(
        registry, params, featurizer, game_id, opponent, n_seeds, rng, false,
    )?;
    Ok(report)
}

/// As [`evaluate`], optionally capturing every episode for replay output.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_with_episodes(
    registry: &GameRegistry,
    params: &PolicyParams,
    featurizer: &Featurizer,
    game_id: &str,
    opponent: &Opponent<'_>,
    n_seeds: u32,
    rng: &mut DetRng,
    capture: bool,
) -> Result<(MatchReport, Vec<VersusEpisode>), TrainError> {
    let spec = registry.get(game_id)?;
    let roles: &[Player] = if spec.players == 2 {
        &[Player::P0, Player::P1]
    } else {
        &[Player::P0]
    };
    let mut per_role = [RoleCounts::default(); 2];
    let mut episodes = Vec::new();
    let mut learner = |state: &GameState, _rng: &mut DetRng| -> String {
        let vocab = vocabulary(state, false).expect("non-terminal");
        greedy_action(params, featurizer, state, &vocab)
            .expect("dimensions validated below")
            .raw
    };
    // Surface dimension mismatches before playing anything.
    {
        let probe_state = reset(spec, 0);
        let vocab = vocabulary(&probe_state, false)?;
        greedy_action(params, featurizer, &probe_state, &vocab)?;
    }
    for &role in roles {
        let mut opp = |state: &GameState, rng: &mut DetRng| -> String {
            opponent_move(opponent, featurizer, state, rng)
        };
        for _ in 0..n_seeds {
            let seed = rng.random();
            let episode = play_versus_episode(
                registry, game_id, seed, role, &mut learner, &mut opp, rng,
            )?;
            per_role[role.index()].record(episode.outcome.for_player(role));
            if capture {
                episodes.push(episode);
            }
        }
    }
    Ok((
        MatchReport {
            game_id: game_id.to_string(),
            opponent: opponent.label(),
            n_seeds,
            per_role,
        },
        episodes,
    ))
}

// ---------------------------------------------------------------------------
// Scripted opponents.
// ---------------------------------------------------------------------------

/// Immediate win if one exists, otherwise the legal move with the best
/// one-ply heuristic score; ties break toward the earlier action.
pub fn greedy_move(state: &GameState) -> String {
    let mover = state.current_player;
    let legal = legal_actions(state).expect("non-terminal");
    match &state.board {
        Board::LiarsDice(_) => return liars_dice_greedy(state),
        Board::KuhnPoker(_) => return kuhn_greedy(state),
        _ => {}
    }
    let mut best: Option<(f64, &String)> = None;
    for action in &legal {
        let token = parse_action(state, action);
        let (next, outcome) = step(state, &token).expect("legal actions step cleanly");
        if let StepOutcome::Terminal(t) = outcome {
            if t.for_player(mover) == PlayerResult::Win {
                return action.clone();
            }
        }
        let score = heuristic_value(&next, mover);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, action));
        }
    }
    best.expect("legal action list is non-empty").1.clone()
}

/// Position value from `perspective`'s point of view; larger is better.
fn heuristic_value(state: &GameState, perspective: Player) -> f64 {
    if let StepOutcome::Terminal(t) = state.outcome {
        return match t.for_player(perspective) {
            PlayerResult::Win => 10_000.0 - state.step_count as f64,
            PlayerResult::Draw => 0.0,
            PlayerResult::Lose => -10_000.0 + state.step_count as f64,
        };
    }
    match &state.board {
        Board::TicTacToe(b) => tictactoe_heuristic(b, perspective),
        Board::Connect4(b) => connect4_heuristic(b, perspective),
        Board::GuessNumber(b) => -((b.hi - b.lo) as f64),
        Board::Hanoi(b) => b.towers[2].len() as f64,
        // Hidden-information games use dedicated rules instead.
        Board::LiarsDice(_) | Board::KuhnPoker(_) => 0.0,
    }
}

fn tictactoe_heuristic(b: &crate::games::TttState, perspective: Player) -> f64 {
    const LINES: [[usize; 3]; 8] = [
        [0, 1, 2],
        [3, 4, 5],
        [6, 7, 8],
        [0, 3, 6],
        [1, 4, 7],
        [2, 5, 8],
        [0, 4, 8],
        [2, 4, 6],
    ];
    let mine = perspective.index() as u8 + 1;
    let mut score = 0.0;
    for line in LINES {
        let own = line.iter().filter(|&&i| b.cells[i] == mine).count();
        let theirs = line
            .iter()
            .filter(|&&i| b.cells[i] != 0 && b.cells[i] != mine)
            .count();
        score += match (own, theirs) {
            (2, 0) => 5.0,
            (0, 2) => -6.0,
            (1, 0) => 1.0,
            (0, 1) => -1.0,
            _ => 0.0,
        };
    }
    if b.cells[4] == mine {
        score += 2.0;
    }
    score
}

fn connect4_heuristic(b: &crate::games::C4State, perspective: Player) -> f64 {
    let (rows, cols) = (crate::games::CONNECT4_ROWS, crate::games::CONNECT4_COLS);
    let mine = perspective.index() as u8 + 1;
    let mut score = 0.0;
    let cell = |r: isize, c: isize| -> u8 {
        if (0..rows as isize).contains(&r) && (0..cols as isize).contains(&c) {
            b.grid[r as usize][c as usize]
        } else {
            3 // Off-board sentinel matches nobody.
        }
    };
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
                let mut own = 0;
                let mut theirs = 0;
                let mut blocked = false;
                for k in 0..4 {
                    match cell(r + dr * k, c + dc * k) {
                        0 => {}
                        v if v == mine => own += 1,
                        3 => blocked = true,
                        _ => theirs += 1,
                    }
                }
                if blocked || (own > 0 && theirs > 0) {
                    continue;
                }
                score += match (own, theirs) {
                    (3, 0) => 50.0,
                    (2, 0) => 5.0,
                    (0, 3) => -60.0,
                    (0, 2) => -5.0,
                    _ => 0.0,
                };
            }
        }
    }
    // Mild center preference.
    for r in 0..rows {
        if b.grid[r][cols / 2] == mine {
            score += 2.0;
        }
    }
    score
}

/// Greedy liar's dice: call when the standing bid is implausible given the
/// caller's own dice, otherwise make the cheapest bid best supported by the
/// caller's hand.
fn liars_dice_greedy(state: &GameState) -> String {
    let Board::LiarsDice(b) = &state.board else {
        unreachable!("routed by board variant");
    };
    let actor = state.current_player;
    let own = &b.hands[actor.index()];
    let opp_dice = b.hands[actor.other().index()].len() as u32;
    let own_count = |face: u8| own.iter().filter(|&&d| d == face).count() as u32;
    if let Some((q, f)) = b.bid {
        let needed = (q as u32).saturating_sub(own_count(f));
        if binomial_tail(opp_dice, needed, 1.0 / 6.0) < 0.25 {
            return "[Call]".to_string();
        }
    }
    // Raise minimally on the face this hand supports best.
    let legal = legal_actions(state).expect("non-terminal");
    let mut best: Option<(f64, &String)> = None;
    for action in &legal {
        if action == "[Call]" {
            continue;
        }
        // Actions are formatted "[Bid q f]".
        let inner = action.trim_start_matches("[Bid ").trim_end_matches(']');
        let mut it = inner.split(' ');
        let q: u32 = it.next().unwrap().parse().unwrap();
        let f: u8 = it.next().unwrap().parse().unwrap();
        let needed = q.saturating_sub(own_count(f));
        let plausibility = binomial_tail(opp_dice, needed, 1.0 / 6.0);
        let score = plausibility - 0.01 * q as f64;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, action));
        }
    }
    match best {
        Some((_, action)) => action.clone(),
        None => "[Call]".to_string(),
    }
}

/// P(X >= k) for X ~ Binomial(n, p).
fn binomial_tail(n: u32, k: u32, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut total = 0.0;
    for i in k..=n {
        let mut choose = 1.0;
        for j in 0..i {
            choose *= (n - j) as f64 / (j + 1) as f64;
        }
        total += choose * libm::pow(p, i as f64) * libm::pow(1.0 - p, (n - i) as f64);
    }
    total
}

/// Greedy Kuhn poker: bet or call holding the king, check or call holding
/// the queen, check or fold holding the jack.
fn kuhn_greedy(state: &GameState) -> String {
    let Board::KuhnPoker(b) = &state.board else {
        unreachable!("routed by board variant");
    };
    let actor = state.current_player;
    let card = b.cards[actor.index()];
    let facing_bet = b.history.ends_with('b');
    let action = match (card, facing_bet) {
        (2, false) => "[Bet]",
        (2, true) => "[Call]",
        (1, false) => "[Check]",
        (1, true) => "[Call]",
        (_, false) => "[Check]",
        (_, true) => "[Fold]",
    };
    action.to_string()
}

/// Depth-limited alpha-beta over the real game engine for the two
/// perfect-information board games; hidden-information games route to the
/// greedy rules so search cannot peek at concealed state.
pub fn minimax_move(state: &GameState, depth: u32) -> String {
    match &state.board {
        Board::TicTacToe(_) | Board::Connect4(_) => {}
        _ => return greedy_move(state),
    }
    let root = state.current_player;
    let legal = legal_actions(state).expect("non-terminal");
    let mut best: Option<(f64, &String)> = None;
    for action in &legal {
        let token = parse_action(state, action);
        let (next, _) = step(state, &token).expect("legal actions step cleanly");
        let value = alphabeta(&next, depth.saturating_sub(1), f64::NEG_INFINITY, f64::INFINITY, root);
        if best.as_ref().is_none_or(|(s, _)| value > *s) {
            best = Some((value, action));
        }
    }
    best.expect("legal action list is non-empty").1.clone()
}

fn alphabeta(state: &GameState, depth: u32, mut alpha: f64, mut beta: f64, root: Player) -> f64 {
    if state.is_terminal() || depth == 0 {
        return heuristic_value(state, root);
    }
    let maximizing = state.current_player == root;
    let legal = legal_actions(state).expect("non-terminal");
    let mut value = if maximizing {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    for action in &legal {
        let token = parse_action(state, action);
        let (next, _) = step(state, &token).expect("legal actions step cleanly");
        let child = alphabeta(&next, depth - 1, alpha, beta, root);
        if maximizing {
            value = value.max(child);
            alpha = alpha.max(value);
        } else {
            value = value.min(child);
            beta = beta.min(value);
        }
        if beta <= alpha {
            break;
        }
    }
    value
}
