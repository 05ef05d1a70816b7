//! Number guessing: a secret in `[min, max]` is drawn from the seed, each
//! guess answers higher/lower, and the episode is won by naming the secret
//! before the step cap. Actions look like `[17]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{GameSpec, Move, PlayerResult, StepOutcome, TerminalOutcome};
use crate::rng::derive_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessState {
    secret: u32,
    /// Lowest value consistent with the feedback so far (inclusive).
    pub lo: u32,
    /// Highest value consistent with the feedback so far (inclusive).
    pub hi: u32,
}

pub(super) fn reset(spec: &GameSpec, seed: u64) -> GuessState {
    let min = spec.variant_param("min") as u32;
    let max = spec.variant_param("max") as u32;
    let mut rng = derive_rng(seed, "guess_number.secret", 0);
    GuessState {
        secret: rng.random_range(min..=max),
        lo: min,
        hi: max,
    }
}

pub(super) fn legal_actions(spec: &GameSpec, _board: &GuessState) -> Vec<String> {
    let min = spec.variant_param("min") as u32;
    let max = spec.variant_param("max") as u32;
    (min..=max).map(|n| format!("[{n}]")).collect()
}

pub(super) fn parse(spec: &GameSpec, _board: &GuessState, raw: &str) -> Option<Move> {
    let inner = raw.strip_prefix('[')?.strip_suffix(']')?;
    let n: u32 = inner.parse().ok()?;
    let min = spec.variant_param("min") as u32;
    let max = spec.variant_param("max") as u32;
    if n < min || n > max {
        return None;
    }
    Some(Move::Guess(n))
}

pub(super) fn apply(board: &mut GuessState, guess: u32) -> StepOutcome {
    if guess == board.secret {
        return StepOutcome::Terminal(TerminalOutcome::solo(PlayerResult::Win));
    }
    if guess < board.secret {
        board.lo = board.lo.max(guess + 1);
    } else {
        board.hi = board.hi.min(guess - 1);
    }
    StepOutcome::Ongoing
}

pub(super) fn atoms(board: &GuessState) -> Vec<String> {
    // The secret stays out of the observation; only the deduced bounds show.
    alloc::vec![format!("lo={}", board.lo), format!("hi={}", board.hi)]
}

#[cfg(test)]
mod tests {
    use super::super::{legal_actions, parse_action, register_builtin_games, reset, step, ParsedAction};
    use super::*;

    fn spec() -> GameSpec {
        register_builtin_games().get("guess_number").unwrap().clone()
    }

    #[test]
    fn same_seed_same_secret() {
        let s = spec();
        let a = reset(&s, 7);
        let b = reset(&s, 7);
        assert_eq!(a.board, b.board);
    }

    #[test]
    fn feedback_tightens_bounds() {
        let s = spec();
        let mut state = reset(&s, 3);
        let secret = match &state.board {
            super::super::Board::GuessNumber(g) => g.secret,
            _ => unreachable!(),
        };
        let probe = if secret > 1 { 1 } else { 64 };
        let token = parse_action(&state, &format!("[{probe}]"));
        let (next, outcome) = step(&state, &token).unwrap();
        assert_eq!(outcome, StepOutcome::Ongoing);
        state = next;
        match &state.board {
            super::super::Board::GuessNumber(g) => {
                assert!(g.lo > 1 || g.hi < 64);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn guessing_the_secret_wins() {
        let s = spec();
        let state = reset(&s, 11);
        let secret = match &state.board {
            super::super::Board::GuessNumber(g) => g.secret,
            _ => unreachable!(),
        };
        let token = parse_action(&state, &format!("[{secret}]"));
        let (_, outcome) = step(&state, &token).unwrap();
        assert_eq!(
            outcome,
            StepOutcome::Terminal(TerminalOutcome::solo(PlayerResult::Win))
        );
    }

    #[test]
    fn out_of_range_guess_is_format_error() {
        let s = spec();
        let state = reset(&s, 0);
        assert_eq!(parse_action(&state, "[0]").parsed, ParsedAction::FormatError);
        assert_eq!(parse_action(&state, "[65]").parsed, ParsedAction::FormatError);
        assert_eq!(legal_actions(&state).unwrap().len(), 64);
    }
}
