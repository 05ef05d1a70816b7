//! Kuhn poker: the three-card betting game (J, Q, K). Both players ante,
//! each receives one hidden card, and a single betting round of `[Check]`,
//! `[Bet]`, `[Call]`, and `[Fold]` decides the pot. Showdowns go to the
//! higher card, so every episode ends in a win for one seat.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{Move, Player, StepOutcome, TerminalOutcome};
use crate::rng::derive_rng;

const CARD_NAMES: [char; 3] = ['J', 'Q', 'K'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KuhnMove {
    Check,
    Bet,
    Call,
    Fold,
}

impl KuhnMove {
    fn as_action(self) -> &'static str {
        match self {
            KuhnMove::Check => "[Check]",
            KuhnMove::Bet => "[Bet]",
            KuhnMove::Call => "[Call]",
            KuhnMove::Fold => "[Fold]",
        }
    }

    fn history_char(self) -> char {
        match self {
            KuhnMove::Check => 'x',
            KuhnMove::Bet => 'b',
            KuhnMove::Call => 'c',
            KuhnMove::Fold => 'f',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KuhnState {
    /// Card per seat: 0 = J, 1 = Q, 2 = K. Hidden from the other seat.
    pub cards: [u8; 2],
    /// Betting history, e.g. "xb" for check-then-bet.
    pub history: String,
}

pub(super) fn reset(seed: u64) -> KuhnState {
    let mut deck = [0u8, 1, 2];
    let mut rng = derive_rng(seed, "kuhn_poker.deal", 0);
    deck.shuffle(&mut rng);
    KuhnState {
        cards: [deck[0], deck[1]],
        history: String::new(),
    }
}

fn facing_bet(board: &KuhnState) -> bool {
    board.history.ends_with('b')
}

pub(super) fn legal_actions(board: &KuhnState) -> Vec<String> {
    let moves: [KuhnMove; 2] = if facing_bet(board) {
        [KuhnMove::Call, KuhnMove::Fold]
    } else {
        [KuhnMove::Check, KuhnMove::Bet]
    };
    moves.iter().map(|m| m.as_action().to_string()).collect()
}

pub(super) fn parse(board: &KuhnState, raw: &str) -> Option<Move> {
    let mv = match raw {
        "[Check]" => KuhnMove::Check,
        "[Bet]" => KuhnMove::Bet,
        "[Call]" => KuhnMove::Call,
        "[Fold]" => KuhnMove::Fold,
        _ => return None,
    };
    let legal = if facing_bet(board) {
        matches!(mv, KuhnMove::Call | KuhnMove::Fold)
    } else {
        matches!(mv, KuhnMove::Check | KuhnMove::Bet)
    };
    legal.then_some(Move::Kuhn(mv))
}

fn showdown(board: &KuhnState) -> StepOutcome {
    let winner = if board.cards[0] > board.cards[1] {
        Player::P0
    } else {
        Player::P1
    };
    StepOutcome::Terminal(TerminalOutcome::win_for(winner))
}

pub(super) fn apply(board: &mut KuhnState, mover: Player, mv: KuhnMove) -> StepOutcome {
    board.history.push(mv.history_char());
    match board.history.as_str() {
        "xx" | "bc" | "xbc" => showdown(board),
        "bf" | "xbf" => StepOutcome::Terminal(TerminalOutcome::win_for(mover.other())),
        _ => StepOutcome::Ongoing,
    }
}

pub(super) fn atoms(board: &KuhnState, actor: Player) -> Vec<String> {
    let card = CARD_NAMES[board.cards[actor.index()] as usize];
    let hist = if board.history.is_empty() {
        "-".to_string()
    } else {
        board.history.clone()
    };
    alloc::vec![alloc::format!("card={card}"), alloc::format!("hist={hist}")]
}

#[cfg(test)]
mod tests {
    use super::super::{legal_actions, parse_action, register_builtin_games, reset, step, Board, ParsedAction};
    use super::*;
    use alloc::vec;

    fn initial(seed: u64) -> super::super::GameState {
        let reg = register_builtin_games();
        reset(reg.get("kuhn_poker").unwrap(), seed)
    }

    fn with_cards(p0: u8, p1: u8) -> super::super::GameState {
        // Deals are a permutation of {J, Q, K}; scan seeds for the one we need.
        for seed in 0..64 {
            let state = initial(seed);
            if let Board::KuhnPoker(b) = &state.board {
                if b.cards == [p0, p1] {
                    return state;
                }
            }
        }
        panic!("no seed below 64 deals cards [{p0}, {p1}]");
    }

    #[test]
    fn opening_actions_are_check_and_bet() {
        let state = initial(0);
        assert_eq!(legal_actions(&state).unwrap(), vec!["[Check]", "[Bet]"]);
        assert_eq!(parse_action(&state, "[Fold]").parsed, ParsedAction::FormatError);
    }

    #[test]
    fn check_check_goes_to_showdown() {
        let state = with_cards(2, 0); // P0 holds K.
        let (state, outcome) = step(&state, &parse_action(&state, "[Check]")).unwrap();
        assert_eq!(outcome, StepOutcome::Ongoing);
        let (_, outcome) = step(&state, &parse_action(&state, "[Check]")).unwrap();
        assert_eq!(
            outcome,
            StepOutcome::Terminal(TerminalOutcome::win_for(Player::P0))
        );
    }

    #[test]
    fn fold_concedes_regardless_of_cards() {
        let state = with_cards(0, 2); // P1 holds K but folds to the bet.
        let (state, _) = step(&state, &parse_action(&state, "[Bet]")).unwrap();
        assert_eq!(legal_actions(&state).unwrap(), vec!["[Call]", "[Fold]"]);
        let (_, outcome) = step(&state, &parse_action(&state, "[Fold]")).unwrap();
        assert_eq!(
            outcome,
            StepOutcome::Terminal(TerminalOutcome::win_for(Player::P0))
        );
    }

    #[test]
    fn check_bet_call_reaches_showdown_for_p1() {
        let state = with_cards(1, 2);
        let (state, _) = step(&state, &parse_action(&state, "[Check]")).unwrap();
        let (state, _) = step(&state, &parse_action(&state, "[Bet]")).unwrap();
        let (_, outcome) = step(&state, &parse_action(&state, "[Call]")).unwrap();
        assert_eq!(
            outcome,
            StepOutcome::Terminal(TerminalOutcome::win_for(Player::P1))
        );
    }

    #[test]
    fn deal_is_deterministic_per_seed() {
        assert_eq!(initial(42).board, initial(42).board);
    }
}
