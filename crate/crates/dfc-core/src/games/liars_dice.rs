//! Two-player liar's dice. Each player starts with two hidden dice. Players
//! alternate raising the bid `[Bid <quantity> <face>]` — strictly higher
//! quantity, or equal quantity and higher face — or challenging with
//! `[Call]`. A failed challenge costs the caller a die, a successful one
//! costs the bidder a die, both hands re-roll, and the first player with no
//! dice loses. Ones are not wild.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{GameSpec, Move, Player, StepOutcome, TerminalOutcome};
use crate::rng::derive_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiceState {
    /// Sorted face values per seat; hidden from the other seat.
    pub hands: [Vec<u8>; 2],
    /// Standing bid as (quantity, face), if any.
    pub bid: Option<(u8, u8)>,
    /// Completed-challenge counter; also indexes the re-roll stream.
    pub round: u32,
}

fn roll_hands(spec: &GameSpec, seed: u64, round: u32, sizes: [usize; 2]) -> [Vec<u8>; 2] {
    let faces = spec.variant_param("faces") as u8;
    let mut rng = derive_rng(seed, "liars_dice.roll", round as u64);
    let mut hands = [Vec::new(), Vec::new()];
    for (seat, hand) in hands.iter_mut().enumerate() {
        for _ in 0..sizes[seat] {
            hand.push(rng.random_range(1..=faces));
        }
        hand.sort_unstable();
    }
    hands
}

pub(super) fn reset(spec: &GameSpec, seed: u64) -> DiceState {
    let dice = spec.variant_param("dice") as usize;
    DiceState {
        hands: roll_hands(spec, seed, 0, [dice, dice]),
        bid: None,
        round: 0,
    }
}

fn total_dice(board: &DiceState) -> u8 {
    (board.hands[0].len() + board.hands[1].len()) as u8
}

fn bid_is_higher(candidate: (u8, u8), standing: Option<(u8, u8)>) -> bool {
    match standing {
        None => true,
        Some((q, f)) => candidate.0 > q || (candidate.0 == q && candidate.1 > f),
    }
}

pub(super) fn legal_actions(board: &DiceState) -> Vec<String> {
    let mut out = Vec::new();
    for quantity in 1..=total_dice(board) {
        for face in 1..=6u8 {
            if bid_is_higher((quantity, face), board.bid) {
                out.push(format!("[Bid {quantity} {face}]"));
            }
        }
    }
    if board.bid.is_some() {
        out.push(String::from("[Call]"));
    }
    out
}

pub(super) fn parse(board: &DiceState, raw: &str) -> Option<Move> {
    if raw == "[Call]" {
        return board.bid.is_some().then_some(Move::Call);
    }
    let inner = raw.strip_prefix("[Bid ")?.strip_suffix(']')?;
    let mut parts = inner.split(' ');
    let quantity: u8 = parts.next()?.parse().ok()?;
    let face: u8 = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    if quantity < 1 || quantity > total_dice(board) || !(1..=6).contains(&face) {
        return None;
    }
    if !bid_is_higher((quantity, face), board.bid) {
        return None;
    }
    Some(Move::Bid { quantity, face })
}

pub(super) fn apply_bid(board: &mut DiceState, quantity: u8, face: u8) -> StepOutcome {
    board.bid = Some((quantity, face));
    StepOutcome::Ongoing
}

pub(super) fn apply_call(
    spec: &GameSpec,
    board: &mut DiceState,
    seed: u64,
    caller: Player,
) -> StepOutcome {
    let (quantity, face) = board.bid.expect("call was validated against a standing bid");
    let count = board
        .hands
        .iter()
        .flat_map(|h| h.iter())
        .filter(|&&d| d == face)
        .count() as u8;
    // Bid stands: the challenge failed and the caller pays; otherwise the
    // bidder was lying and pays.
    let loser = if count >= quantity {
        caller
    } else {
        caller.other()
    };
    let mut sizes = [board.hands[0].len(), board.hands[1].len()];
    sizes[loser.index()] -= 1;
    if sizes[loser.index()] == 0 {
        return StepOutcome::Terminal(TerminalOutcome::win_for(loser.other()));
    }
    board.round += 1;
    board.hands = roll_hands(spec, seed, board.round, sizes);
    board.bid = None;
    StepOutcome::Ongoing
}

pub(super) fn atoms(board: &DiceState, actor: Player) -> Vec<String> {
    let own = &board.hands[actor.index()];
    let mut out = Vec::with_capacity(10);
    let mut faces = String::new();
    for d in own {
        faces.push((b'0' + d) as char);
    }
    out.push(format!("mine={faces}"));
    for face in 1..=6u8 {
        let n = own.iter().filter(|&&d| d == face).count();
        out.push(format!("f{face}={n}"));
    }
    out.push(format!("nm={}", own.len()));
    out.push(format!("no={}", board.hands[actor.other().index()].len()));
    match board.bid {
        Some((q, f)) => out.push(format!("bid={q}x{f}")),
        None => out.push(String::from("bid=none")),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{legal_actions, parse_action, register_builtin_games, reset, step, Board, ParsedAction};
    use super::*;
    use alloc::string::ToString;

    fn initial(seed: u64) -> super::super::GameState {
        let reg = register_builtin_games();
        reset(reg.get("liars_dice").unwrap(), seed)
    }

    #[test]
    fn call_without_a_bid_is_format_error() {
        let state = initial(1);
        assert_eq!(parse_action(&state, "[Call]").parsed, ParsedAction::FormatError);
        // 4 dice x 6 faces bids, no call.
        assert_eq!(legal_actions(&state).unwrap().len(), 24);
    }

    #[test]
    fn bids_must_strictly_increase() {
        let state = initial(1);
        let token = parse_action(&state, "[Bid 2 4]");
        let (state, _) = step(&state, &token).unwrap();
        assert_eq!(parse_action(&state, "[Bid 2 4]").parsed, ParsedAction::FormatError);
        assert_eq!(parse_action(&state, "[Bid 2 3]").parsed, ParsedAction::FormatError);
        assert_eq!(parse_action(&state, "[Bid 1 6]").parsed, ParsedAction::FormatError);
        assert!(!parse_action(&state, "[Bid 2 5]").is_format_error());
        assert!(!parse_action(&state, "[Bid 3 1]").is_format_error());
        assert!(legal_actions(&state).unwrap().contains(&"[Call]".to_string()));
    }

    #[test]
    fn impossible_bid_loses_a_die_when_called() {
        let state = initial(9);
        // Four dice total: a bid of five is unsatisfiable, so the caller
        // must win the challenge and the bidder loses a die.
        let token = parse_action(&state, "[Bid 4 6]");
        let hands_before = match &state.board {
            Board::LiarsDice(b) => b.hands.clone(),
            _ => unreachable!(),
        };
        let satisfied = hands_before.iter().flatten().filter(|&&d| d == 6).count() >= 4;
        assert!(!satisfied, "seed 9 does not roll four sixes");
        let (state, _) = step(&state, &token).unwrap();
        let token = parse_action(&state, "[Call]");
        let (state, outcome) = step(&state, &token).unwrap();
        assert_eq!(outcome, StepOutcome::Ongoing);
        match &state.board {
            Board::LiarsDice(b) => {
                // The bidder was seat 0.
                assert_eq!(b.hands[0].len(), 1);
                assert_eq!(b.hands[1].len(), 2);
                assert_eq!(b.bid, None);
                assert_eq!(b.round, 1);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn losing_the_last_die_ends_the_game() {
        let reg = register_builtin_games();
        let spec = reg.get("liars_dice").unwrap();
        let mut board = DiceState {
            hands: [alloc::vec![3], alloc::vec![2, 5]],
            bid: Some((4, 6)),
            round: 3,
        };
        // Seat 1 calls seat 0's impossible bid; seat 0 drops to zero dice.
        let outcome = apply_call(spec, &mut board, 0, Player::P1);
        assert_eq!(
            outcome,
            StepOutcome::Terminal(TerminalOutcome::win_for(Player::P1))
        );
    }

    #[test]
    fn different_seeds_give_different_hands_usually() {
        let mut differing = 0;
        for pair in 0..100u64 {
            let a = initial(2 * pair + 1);
            let b = initial(2 * pair + 2);
            if a.board != b.board {
                differing += 1;
            }
        }
        assert!(differing >= 90, "only {differing}/100 seed pairs differed");
    }
}
