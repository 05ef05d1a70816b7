//! 3x3 tic-tac-toe. Cells are numbered 0..=8 row-major; an action like `[4]`
//! marks the center. Win on any completed row, column, or diagonal; draw
//! when the board fills.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Move, Player, StepOutcome, TerminalOutcome};

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

/// Cell contents: 0 empty, 1 seat P0, 2 seat P1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TttState {
    pub cells: [u8; 9],
}

pub(super) fn reset() -> TttState {
    TttState { cells: [0; 9] }
}

pub(super) fn legal_actions(board: &TttState) -> Vec<String> {
    board
        .cells
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| format!("[{i}]"))
        .collect()
}

pub(super) fn parse(board: &TttState, raw: &str) -> Option<Move> {
    let inner = raw.strip_prefix('[')?.strip_suffix(']')?;
    let cell: u8 = inner.parse().ok()?;
    if cell > 8 || board.cells[cell as usize] != 0 {
        return None;
    }
    Some(Move::Place(cell))
}

pub(super) fn apply(board: &mut TttState, mover: Player, cell: u8) -> StepOutcome {
    let mark = mover.index() as u8 + 1;
    board.cells[cell as usize] = mark;
    for line in LINES {
        if line.iter().all(|&i| board.cells[i] == mark) {
            return StepOutcome::Terminal(TerminalOutcome::win_for(mover));
        }
    }
    if board.cells.iter().all(|&c| c != 0) {
        return StepOutcome::Terminal(TerminalOutcome::draw());
    }
    StepOutcome::Ongoing
}

pub(super) fn atoms(board: &TttState, actor: Player) -> Vec<String> {
    let mine = actor.index() as u8 + 1;
    let mut out = Vec::with_capacity(9);
    for (i, &c) in board.cells.iter().enumerate() {
        let tag = if c == 0 {
            'e'
        } else if c == mine {
            'm'
        } else {
            't'
        };
        out.push(format!("c{i}={tag}"));
    }
    out
}

/// Cells that complete a line for `mark` right now.
fn winning_cells(board: &TttState, mark: u8) -> Vec<u8> {
    let mut out = Vec::new();
    for line in LINES {
        let own = line.iter().filter(|&&i| board.cells[i] == mark).count();
        let empty = line.iter().filter(|&&i| board.cells[i] == 0).count();
        if own == 2 && empty == 1 {
            let cell = *line.iter().find(|&&i| board.cells[i] == 0).expect("counted one");
            if !out.contains(&(cell as u8)) {
                out.push(cell as u8);
            }
        }
    }
    out
}

/// Relational tags for placing at `cell`: does it take an available win,
/// block an opponent win, ignore one of those, or create new winning
/// squares (a single threat or an unstoppable fork).
pub(super) fn action_tags(board: &TttState, actor: Player, cell: u8) -> Vec<String> {
    let mine = actor.index() as u8 + 1;
    let wins = winning_cells(board, mine);
    // A winning move ends the game on the spot; no other tactical fact
    // about the position applies to it.
    if wins.contains(&cell) {
        return alloc::vec!["win".to_string()];
    }
    let threats = winning_cells(board, 3 - mine);
    let mut out = Vec::new();
    if !wins.is_empty() {
        out.push("miss_win".to_string());
    }
    if !threats.is_empty() {
        out.push(if threats.contains(&cell) { "block" } else { "miss_block" }.to_string());
    }
    let mut after = board.clone();
    after.cells[cell as usize] = mine;
    match winning_cells(&after, mine).len() {
        0 => {}
        1 => out.push("threaten".to_string()),
        _ => out.push("fork".to_string()),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{legal_actions, parse_action, register_builtin_games, reset, step, ParsedAction};
    use super::*;
    use alloc::string::ToString;
    

    fn initial() -> super::super::GameState {
        let reg = register_builtin_games();
        reset(reg.get("tictactoe").unwrap(), 0)
    }

    #[test]
    fn empty_board_has_nine_actions() {
        let state = initial();
        let actions = legal_actions(&state).unwrap();
        let expected: Vec<_> = (0..9).map(|i| format!("[{i}]")).collect();
        assert_eq!(actions, expected);
    }

    #[test]
    fn occupied_cell_is_format_error() {
        let state = initial();
        let token = parse_action(&state, "[4]");
        let (state, _) = step(&state, &token).unwrap();
        assert_eq!(parse_action(&state, "[4]").parsed, ParsedAction::FormatError);
        assert_eq!(state.current_player, Player::P1);
    }

    #[test]
    fn unbracketed_text_is_format_error() {
        let state = initial();
        assert_eq!(
            parse_action(&state, "I will play column 3").parsed,
            ParsedAction::FormatError
        );
    }

    #[test]
    fn row_completion_wins() {
        let mut state = initial();
        for mv in ["[0]", "[3]", "[1]", "[4]", "[2]"] {
            let token = parse_action(&state, mv);
            let (next, outcome) = step(&state, &token).unwrap();
            state = next;
            if mv == "[2]" {
                assert_eq!(
                    outcome,
                    StepOutcome::Terminal(TerminalOutcome::win_for(Player::P0))
                );
            } else {
                assert_eq!(outcome, StepOutcome::Ongoing);
            }
        }
    }

    #[test]
    fn atoms_are_role_relative() {
        let state = initial();
        let token = parse_action(&state, "[0]");
        let (state, _) = step(&state, &token).unwrap();
        // It is now P1's turn; P0's mark in cell 0 reads as "theirs".
        assert!(atoms(
            match &state.board {
                super::super::Board::TicTacToe(b) => b,
                _ => unreachable!(),
            },
            Player::P1
        )
        .contains(&"c0=t".to_string()));
    }

    // Exhaustive minimax over the full game tree: the oracle for the claim
    // that perfect play from both sides draws.
    fn minimax_value(board: &TttState, to_move: Player) -> i8 {
        let mark = to_move.index() as u8 + 1;
        let mut best = i8::MIN;
        let mut any = false;
        for cell in 0..9u8 {
            if board.cells[cell as usize] != 0 {
                continue;
            }
            any = true;
            let mut child = board.clone();
            child.cells[cell as usize] = mark;
            let won = LINES
                .iter()
                .any(|line| line.iter().all(|&i| child.cells[i] == mark));
            let value = if won {
                1
            } else if child.cells.iter().all(|&c| c != 0) {
                0
            } else {
                -minimax_value(&child, to_move.other())
            };
            best = best.max(value);
        }
        assert!(any, "minimax called on a full board");
        best
    }

    #[test]
    fn perfect_play_draws() {
        assert_eq!(minimax_value(&super::reset(), Player::P0), 0);
    }
}
