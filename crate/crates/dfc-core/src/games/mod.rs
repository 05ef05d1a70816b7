//! Deterministic, seedable turn-based game environments.
//!
//! Six compact games stand in for a text-game arena: a number-guessing
//! puzzle, two Tower of Hanoi sizes, tic-tac-toe, Connect Four, liar's dice,
//! and Kuhn poker. Every environment is a pure state transformer — `reset`
//! and `step` are deterministic functions of the spec, the seed, and the
//! action — so any trajectory can be replayed bit for bit.
//!
//! Actions travel as canonical bracketed strings (see `docs/grammar.md` at
//! the repository root). A string that is off-grammar *or* names an illegal
//! move parses to a format error; emitting one forfeits the episode.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

mod connect4;
mod guess_number;
mod hanoi;
mod kuhn_poker;
mod liars_dice;
mod tictactoe;

pub use connect4::{C4State, COLS as CONNECT4_COLS, ROWS as CONNECT4_ROWS};
pub use guess_number::GuessState;
pub use hanoi::HanoiState;
pub use kuhn_poker::{KuhnMove, KuhnState};
pub use liars_dice::DiceState;
pub use tictactoe::TttState;

/// Default per-trajectory step cap.
pub const DEFAULT_MAX_STEPS: u32 = 120;

/// Malformed strings mixed into the sampling vocabulary so the format-reward
/// pathway has something to learn against. Fixed, never legal in any game.
pub const DISTRACTORS: [&str; 2] = ["[??]", "just play the best move"];

/// Errors from the game suite.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("unknown game id `{0}`")]
    UnknownGame(String),
    #[error("duplicate game id `{0}`")]
    DuplicateGame(String),
    #[error("operation requires a non-terminal state")]
    TerminalState,
    #[error("cannot step with a format-error token")]
    FormatErrorToken,
}

/// One of the two seats at the table. Single-player games use `P0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Player {
    P0,
    P1,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::P0 => 0,
            Player::P1 => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::P0 => Player::P1,
            Player::P1 => Player::P0,
        }
    }

    pub fn from_index(i: usize) -> Player {
        if i % 2 == 0 {
            Player::P0
        } else {
            Player::P1
        }
    }
}

/// Terminal result from one player's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlayerResult {
    Win,
    Draw,
    Lose,
}

/// Terminal outcome for the whole episode, one result per seat.
///
/// Two-player constructors keep the zero-sum pairing (a win for one seat is
/// a loss for the other; draws are symmetric). Single-player games mirror
/// seat 0's result into seat 1 so accessors never need a special case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalOutcome {
    results: [PlayerResult; 2],
}

impl TerminalOutcome {
    pub fn win_for(winner: Player) -> Self {
        let mut results = [PlayerResult::Lose; 2];
        results[winner.index()] = PlayerResult::Win;
        TerminalOutcome { results }
    }

    pub fn draw() -> Self {
        TerminalOutcome {
            results: [PlayerResult::Draw; 2],
        }
    }

    pub fn solo(result: PlayerResult) -> Self {
        TerminalOutcome {
            results: [result; 2],
        }
    }

    pub fn for_player(&self, player: Player) -> PlayerResult {
        self.results[player.index()]
    }
}

/// Result of a step: either the game continues or it ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepOutcome {
    Ongoing,
    Terminal(TerminalOutcome),
}

impl StepOutcome {
    pub fn is_terminal(&self) -> bool {
        matches!(self, StepOutcome::Terminal(_))
    }

    pub fn terminal(&self) -> Option<TerminalOutcome> {
        match self {
            StepOutcome::Ongoing => None,
            StepOutcome::Terminal(t) => Some(*t),
        }
    }
}

/// Whether `reset` content depends on the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    FixedInit,
    RandomInit,
}

/// Static description of a registered environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub game_id: String,
    pub players: u8,
    pub init_mode: InitMode,
    pub max_steps: u32,
    pub variant: BTreeMap<String, i64>,
}

impl GameSpec {
    fn new(game_id: &str, players: u8, init_mode: InitMode, variant: &[(&str, i64)]) -> Self {
        GameSpec {
            game_id: game_id.to_string(),
            players,
            init_mode,
            max_steps: DEFAULT_MAX_STEPS,
            variant: variant
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    pub fn variant_param(&self, key: &str) -> i64 {
        *self.variant.get(key).unwrap_or(&0)
    }
}

/// Game-specific board (or hidden) data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Board {
    GuessNumber(GuessState),
    Hanoi(HanoiState),
    TicTacToe(TttState),
    Connect4(C4State),
    LiarsDice(DiceState),
    KuhnPoker(KuhnState),
}

/// A live episode: spec, seed, move counter, whose turn it is, and the
/// game-specific board.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub spec: GameSpec,
    pub seed: u64,
    pub step_count: u32,
    pub current_player: Player,
    pub outcome: StepOutcome,
    pub board: Board,
}

impl GameState {
    pub fn is_terminal(&self) -> bool {
        self.outcome.is_terminal()
    }
}

/// A parsed move. One enum covers every game so states and tokens can move
/// through generic machinery without trait objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Guess a number.
    Guess(u32),
    /// Move the top disk between towers (0 = A, 1 = B, 2 = C).
    HanoiMove { from: u8, to: u8 },
    /// Mark a tic-tac-toe cell 0..=8.
    Place(u8),
    /// Drop a disc into a Connect Four column 0..=6.
    Drop(u8),
    /// Raise the liar's-dice bid to (quantity, face).
    Bid { quantity: u8, face: u8 },
    /// Challenge the standing liar's-dice bid.
    Call,
    /// Kuhn poker betting action.
    Kuhn(KuhnMove),
}

/// Outcome of parsing a raw action string against a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedAction {
    Valid(Move),
    FormatError,
}

/// A raw action string together with its parse result.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionToken {
    pub raw: String,
    pub parsed: ParsedAction,
}

impl ActionToken {
    pub fn is_format_error(&self) -> bool {
        matches!(self.parsed, ParsedAction::FormatError)
    }
}

/// Registry of available game specs, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct GameRegistry {
    specs: BTreeMap<String, GameSpec>,
}

impl GameRegistry {
    pub fn register(&mut self, spec: GameSpec) -> Result<(), GameError> {
        if self.specs.contains_key(&spec.game_id) {
            return Err(GameError::DuplicateGame(spec.game_id));
        }
        self.specs.insert(spec.game_id.clone(), spec);
        Ok(())
    }

    pub fn get(&self, game_id: &str) -> Result<&GameSpec, GameError> {
        self.specs
            .get(game_id)
            .ok_or_else(|| GameError::UnknownGame(game_id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.specs.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}

/// Build the default six-game roster.
pub fn register_builtin_games() -> GameRegistry {
    let mut reg = GameRegistry::default();
    for spec in [
        GameSpec::new("guess_number", 1, InitMode::RandomInit, &[("min", 1), ("max", 64)]),
        GameSpec::new("hanoi3", 1, InitMode::FixedInit, &[("disks", 3)]),
        GameSpec::new("hanoi4", 1, InitMode::FixedInit, &[("disks", 4)]),
        GameSpec::new("tictactoe", 2, InitMode::FixedInit, &[("size", 3)]),
        GameSpec::new("connect4", 2, InitMode::FixedInit, &[("rows", 6), ("cols", 7)]),
        GameSpec::new("liars_dice", 2, InitMode::RandomInit, &[("dice", 2), ("faces", 6)]),
        GameSpec::new("kuhn_poker", 2, InitMode::RandomInit, &[("cards", 3)]),
    ] {
        reg.register(spec).expect("builtin ids are distinct");
    }
    reg
}

/// Start a fresh episode. Same (spec, seed) always yields an identical
/// state; fixed-init games ignore the seed for state content.
pub fn reset(spec: &GameSpec, seed: u64) -> GameState {
    let board = match spec.game_id.as_str() {
        "guess_number" => Board::GuessNumber(guess_number::reset(spec, seed)),
        "hanoi3" | "hanoi4" => Board::Hanoi(hanoi::reset(spec)),
        "tictactoe" => Board::TicTacToe(tictactoe::reset()),
        "connect4" => Board::Connect4(connect4::reset(spec)),
        "liars_dice" => Board::LiarsDice(liars_dice::reset(spec, seed)),
        "kuhn_poker" => Board::KuhnPoker(kuhn_poker::reset(seed)),
        other => panic!("unregistered game id `{other}`"),
    };
    GameState {
        spec: spec.clone(),
        seed,
        step_count: 0,
        current_player: Player::P0,
        outcome: StepOutcome::Ongoing,
        board,
    }
}

/// Ordered list of canonical action strings legal in `state`.
pub fn legal_actions(state: &GameState) -> Result<Vec<String>, GameError> {
    if state.is_terminal() {
        return Err(GameError::TerminalState);
    }
    let actions = match &state.board {
        Board::GuessNumber(b) => guess_number::legal_actions(&state.spec, b),
        Board::Hanoi(b) => hanoi::legal_actions(b),
        Board::TicTacToe(b) => tictactoe::legal_actions(b),
        Board::Connect4(b) => connect4::legal_actions(b),
        Board::LiarsDice(b) => liars_dice::legal_actions(b),
        Board::KuhnPoker(b) => kuhn_poker::legal_actions(b),
    };
    debug_assert!(!actions.is_empty());
    Ok(actions)
}

/// Parse a raw string against the grammar *and* the current position.
/// Off-grammar strings and grammatical-but-illegal moves both come back as
/// `FormatError`; this never fails.
pub fn parse_action(state: &GameState, raw: &str) -> ActionToken {
    let parsed = if state.is_terminal() {
        ParsedAction::FormatError
    } else {
        let mv = match &state.board {
            Board::GuessNumber(b) => guess_number::parse(&state.spec, b, raw),
            Board::Hanoi(b) => hanoi::parse(b, raw),
            Board::TicTacToe(b) => tictactoe::parse(b, raw),
            Board::Connect4(b) => connect4::parse(b, raw),
            Board::LiarsDice(b) => liars_dice::parse(b, raw),
            Board::KuhnPoker(b) => kuhn_poker::parse(b, raw),
        };
        match mv {
            Some(m) => ParsedAction::Valid(m),
            None => ParsedAction::FormatError,
        }
    };
    ActionToken {
        raw: raw.to_string(),
        parsed,
    }
}

/// Apply a parsed move. Increments the step counter, alternates the seat in
/// two-player games, and forces termination at the step cap (draw for
/// two-player games, loss for single-player ones).
pub fn step(state: &GameState, token: &ActionToken) -> Result<(GameState, StepOutcome), GameError> {
    if state.is_terminal() {
        return Err(GameError::TerminalState);
    }
    let mv = match token.parsed {
        ParsedAction::Valid(m) => m,
        ParsedAction::FormatError => return Err(GameError::FormatErrorToken),
    };
    let mut next = state.clone();
    let mover = next.current_player;
    let outcome = match (&mut next.board, mv) {
        (Board::GuessNumber(b), Move::Guess(n)) => guess_number::apply(b, n),
        (Board::Hanoi(b), Move::HanoiMove { from, to }) => hanoi::apply(&next.spec, b, from, to),
        (Board::TicTacToe(b), Move::Place(cell)) => tictactoe::apply(b, mover, cell),
        (Board::Connect4(b), Move::Drop(col)) => connect4::apply(b, mover, col),
        (Board::LiarsDice(b), Move::Bid { quantity, face }) => {
            liars_dice::apply_bid(b, quantity, face)
        }
        (Board::LiarsDice(b), Move::Call) => liars_dice::apply_call(&next.spec, b, next.seed, mover),
        (Board::KuhnPoker(b), Move::Kuhn(m)) => kuhn_poker::apply(b, mover, m),
        _ => return Err(GameError::FormatErrorToken),
    };
    next.step_count += 1;
    if next.spec.players == 2 {
        next.current_player = mover.other();
    }
    let outcome = if outcome.is_terminal() {
        outcome
    } else if next.step_count >= next.spec.max_steps {
        // Step cap: a stalled two-player game is a draw, a stalled puzzle a
        // failure.
        if next.spec.players == 2 {
            StepOutcome::Terminal(TerminalOutcome::draw())
        } else {
            StepOutcome::Terminal(TerminalOutcome::solo(PlayerResult::Lose))
        }
    } else {
        StepOutcome::Ongoing
    };
    next.outcome = outcome;
    Ok((next, outcome))
}

/// Terminate an episode because `mover` emitted a malformed or illegal
/// action: the mover forfeits.
pub fn forfeit(state: &GameState, mover: Player) -> GameState {
    let mut next = state.clone();
    let outcome = if next.spec.players == 2 {
        TerminalOutcome::win_for(mover.other())
    } else {
        TerminalOutcome::solo(PlayerResult::Lose)
    };
    next.outcome = StepOutcome::Terminal(outcome);
    next
}

/// Observation atoms for the acting player: short strings describing what
/// that player can see, with hidden opponent information excluded. These are
/// the units the featurizer crosses with candidate actions.
pub fn observation_atoms(state: &GameState) -> Vec<String> {
    let actor = state.current_player;
    match &state.board {
        Board::GuessNumber(b) => guess_number::atoms(b),
        Board::Hanoi(b) => hanoi::atoms(b),
        Board::TicTacToe(b) => tictactoe::atoms(b, actor),
        Board::Connect4(b) => connect4::atoms(b, actor),
        Board::LiarsDice(b) => liars_dice::atoms(b, actor),
        Board::KuhnPoker(b) => kuhn_poker::atoms(b, actor),
    }
}

/// Relational tags for a candidate action: short labels for what the action
/// does to the acting player's one-ply tactical picture (takes a win,
/// blocks a threat, ignores one, hands one over). Shared across positions,
/// so a single policy weight can express each rule. Off-grammar or illegal
/// strings carry no tags.
pub fn action_tags(state: &GameState, raw: &str) -> Vec<String> {
    let token = parse_action(state, raw);
    let mv = match token.parsed {
        ParsedAction::Valid(m) => m,
        ParsedAction::FormatError => return Vec::new(),
    };
    let actor = state.current_player;
    match (&state.board, mv) {
        (Board::TicTacToe(b), Move::Place(cell)) => tictactoe::action_tags(b, actor, cell),
        (Board::Connect4(b), Move::Drop(col)) => connect4::action_tags(b, actor, col),
        _ => Vec::new(),
    }
}

/// The sampling vocabulary at a decision point: the legal canonical actions,
/// optionally followed by the fixed distractor strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub actions: Vec<String>,
    /// Number of leading entries that are canonical legal actions.
    pub canonical_len: usize,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Build the vocabulary for a non-terminal state.
pub fn vocabulary(state: &GameState, with_distractors: bool) -> Result<Vocab, GameError> {
    let mut actions = legal_actions(state)?;
    let canonical_len = actions.len();
    if with_distractors {
        actions.extend(DISTRACTORS.iter().map(|s| s.to_string()));
    }
    Ok(Vocab {
        actions,
        canonical_len,
    })
}

/// Hashes (game id, observation atom, action) triples into a fixed-dimension
/// signed feature vector. Deterministic for a given (dim, salt) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    pub dim: usize,
    pub salt: u64,
}

impl Featurizer {
    pub fn new(dim: usize, salt: u64) -> Self {
        assert!(dim >= 1, "feature dimension must be positive");
        Featurizer { dim, salt }
    }

    /// Sparse signed buckets for one (state, action) pair: one entry per
    /// observation atom crossed with the action, a per-game and a global
    /// per-action entry, and one per relational tag (hashed without the
    /// action so the tag's weight is shared across positions).
    ///
    /// The global action token carries no game id, so identical strings
    /// share one weight across every game. That channel is what lets
    /// format-avoidance learned in one game transfer to the others, the way
    /// a shared text prior would.
    pub fn sparse(&self, state: &GameState, action: &str) -> Vec<(u32, f64)> {
        let game = state.spec.game_id.as_bytes();
        let mut out = Vec::with_capacity(observation_atoms(state).len() + 2);
        let push = |h: u64, out: &mut Vec<(u32, f64)>| {
            let bucket = (h % self.dim as u64) as u32;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            out.push((bucket, sign));
        };
        push(self.hash_token(game, b"<act>", action.as_bytes()), &mut out);
        push(self.hash_token(b"", b"<global-act>", action.as_bytes()), &mut out);
        for atom in observation_atoms(state) {
            push(
                self.hash_token(game, atom.as_bytes(), action.as_bytes()),
                &mut out,
            );
        }
        for tag in action_tags(state, action) {
            // Tactical tags get three hashed copies: one-ply tactics should
            // out-vote accumulated positional pattern weights once learned.
            for copy in [b"<tag0>", b"<tag1>", b"<tag2>"] {
                push(self.hash_token(game, copy, tag.as_bytes()), &mut out);
            }
        }
        out
    }

    /// Dense feature vector of length `dim`.
    pub fn features(&self, state: &GameState, action: &str) -> Vec<f64> {
        let mut dense = alloc::vec![0.0; self.dim];
        for (idx, sign) in self.sparse(state, action) {
            dense[idx as usize] += sign;
        }
        dense
    }

    fn hash_token(&self, game: &[u8], atom: &[u8], action: &[u8]) -> u64 {
        use core::hash::Hasher;
        let mut h = fnv::FnvHasher::with_key(0xcbf2_9ce4_8422_2325 ^ self.salt);
        h.write(game);
        h.write(&[0x1f]);
        h.write(atom);
        h.write(&[0x1f]);
        h.write(action);
        h.finish()
    }
}
