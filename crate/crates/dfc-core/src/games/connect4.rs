//! Connect Four on a 6x7 board. `[col 3]` drops a disc into column 3; discs
//! fall to the lowest free row. Four in a row horizontally, vertically, or
//! diagonally wins; a full board draws.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{GameSpec, Move, Player, StepOutcome, TerminalOutcome};

pub const ROWS: usize = 6;
pub const COLS: usize = 7;

/// `grid[row][col]`, row 0 at the bottom: 0 empty, 1 seat P0, 2 seat P1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct C4State {
    pub grid: [[u8; COLS]; ROWS],
}

impl C4State {
    pub fn column_height(&self, col: usize) -> usize {
        (0..ROWS).take_while(|&r| self.grid[r][col] != 0).count()
    }
}

pub(super) fn reset(_spec: &GameSpec) -> C4State {
    C4State {
        grid: [[0; COLS]; ROWS],
    }
}

pub(super) fn legal_actions(board: &C4State) -> Vec<String> {
    (0..COLS)
        .filter(|&c| board.column_height(c) < ROWS)
        .map(|c| format!("[col {c}]"))
        .collect()
}

pub(super) fn parse(board: &C4State, raw: &str) -> Option<Move> {
    let inner = raw.strip_prefix("[col ")?.strip_suffix(']')?;
    let col: u8 = inner.parse().ok()?;
    if col as usize >= COLS || board.column_height(col as usize) >= ROWS {
        return None;
    }
    Some(Move::Drop(col))
}

fn four_from(board: &C4State, row: isize, col: isize, dr: isize, dc: isize, mark: u8) -> bool {
    // Longest run through (row, col) along the (dr, dc) axis.
    let mut run = 1;
    for sign in [1isize, -1] {
        let (mut r, mut c) = (row + dr * sign, col + dc * sign);
        while (0..ROWS as isize).contains(&r)
            && (0..COLS as isize).contains(&c)
            && board.grid[r as usize][c as usize] == mark
        {
            run += 1;
            r += dr * sign;
            c += dc * sign;
        }
    }
    run >= 4
}

pub(super) fn apply(board: &mut C4State, mover: Player, col: u8) -> StepOutcome {
    let mark = mover.index() as u8 + 1;
    let row = board.column_height(col as usize);
    board.grid[row][col as usize] = mark;
    let (r, c) = (row as isize, col as isize);
    let won = four_from(board, r, c, 0, 1, mark)
        || four_from(board, r, c, 1, 0, mark)
        || four_from(board, r, c, 1, 1, mark)
        || four_from(board, r, c, 1, -1, mark);
    if won {
        StepOutcome::Terminal(TerminalOutcome::win_for(mover))
    } else if (0..COLS).all(|c| board.column_height(c) == ROWS) {
        StepOutcome::Terminal(TerminalOutcome::draw())
    } else {
        StepOutcome::Ongoing
    }
}

fn wins_at(board: &C4State, row: usize, col: usize, mark: u8) -> bool {
    let (r, c) = (row as isize, col as isize);
    let mut probe = board.clone();
    probe.grid[row][col] = mark;
    four_from(&probe, r, c, 0, 1, mark)
        || four_from(&probe, r, c, 1, 0, mark)
        || four_from(&probe, r, c, 1, 1, mark)
        || four_from(&probe, r, c, 1, -1, mark)
}

pub(super) fn atoms(board: &C4State, actor: Player) -> Vec<String> {
    let mine = actor.index() as u8 + 1;
    let mut out = Vec::new();
    for col in 0..COLS {
        out.push(format!("h{col}={}", board.column_height(col)));
    }
    for row in 0..ROWS {
        for col in 0..COLS {
            let c = board.grid[row][col];
            if c != 0 {
                let tag = if c == mine { 'm' } else { 't' };
                out.push(format!("c{row},{col}={tag}"));
            }
        }
    }
    out
}

/// Columns whose landing square completes four for `mark`.
fn winning_columns(board: &C4State, mark: u8) -> Vec<u8> {
    (0..COLS)
        .filter(|&c| {
            let row = board.column_height(c);
            row < ROWS && wins_at(board, row, c, mark)
        })
        .map(|c| c as u8)
        .collect()
}

/// Relational tags for dropping into `col`: takes an available win, blocks
/// an opponent win, ignores either, sets the opponent up by opening the
/// square above, or creates new winning columns (threat or fork).
pub(super) fn action_tags(board: &C4State, actor: Player, col: u8) -> Vec<String> {
    let mine = actor.index() as u8 + 1;
    let theirs = 3 - mine;
    let wins = winning_columns(board, mine);
    // A winning drop ends the game on the spot; no other tactical fact
    // about the position applies to it.
    if wins.contains(&col) {
        return alloc::vec!["win".to_string()];
    }
    let threats = winning_columns(board, theirs);
    let mut out = Vec::new();
    if !wins.is_empty() {
        out.push("miss_win".to_string());
    }
    if !threats.is_empty() {
        out.push(if threats.contains(&col) { "block" } else { "miss_block" }.to_string());
    }
    let row = board.column_height(col as usize);
    if row + 1 < ROWS && wins_at(board, row + 1, col as usize, theirs) {
        out.push("setup".to_string());
    }
    if row < ROWS {
        let mut after = board.clone();
        after.grid[row][col as usize] = mine;
        match winning_columns(&after, mine).len() {
            0 => {}
            1 => out.push("threaten".to_string()),
            _ => out.push("fork".to_string()),
        }
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
        reset(reg.get("connect4").unwrap(), 0)
    }

    #[test]
    fn drop_lands_in_lowest_free_row() {
        let state = initial();
        let token = parse_action(&state, "[col 3]");
        assert_eq!(token.parsed, ParsedAction::Valid(Move::Drop(3)));
        let (state, _) = step(&state, &token).unwrap();
        match &state.board {
            super::super::Board::Connect4(b) => {
                assert_eq!(b.grid[0][3], 1);
                assert_eq!(b.column_height(3), 1);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn full_column_leaves_the_action_list() {
        let mut state = initial();
        // Both seats alternate into column 3 until it fills.
        for _ in 0..ROWS {
            let token = parse_action(&state, "[col 3]");
            assert!(!token.is_format_error());
            state = step(&state, &token).unwrap().0;
        }
        let actions = legal_actions(&state).unwrap();
        assert!(!actions.contains(&"[col 3]".to_string()));
        assert_eq!(actions.len(), COLS - 1);
        assert_eq!(parse_action(&state, "[col 3]").parsed, ParsedAction::FormatError);
    }

    #[test]
    fn vertical_four_wins() {
        let mut state = initial();
        // P0 stacks column 2; P1 fills column 5.
        for mv in ["[col 2]", "[col 5]", "[col 2]", "[col 5]", "[col 2]", "[col 5]"] {
            let token = parse_action(&state, mv);
            state = step(&state, &token).unwrap().0;
        }
        let token = parse_action(&state, "[col 2]");
        let (_, outcome) = step(&state, &token).unwrap();
        assert_eq!(
            outcome,
            StepOutcome::Terminal(TerminalOutcome::win_for(Player::P0))
        );
    }

    #[test]
    fn diagonal_four_wins() {
        let mut state = initial();
        // Build a / diagonal for P0 at columns 0..=3.
        let moves = [
            "[col 0]", "[col 1]", "[col 1]", "[col 2]", "[col 2]", "[col 3]", "[col 2]",
            "[col 3]", "[col 3]", "[col 0]", "[col 3]",
        ];
        let mut last = StepOutcome::Ongoing;
        for mv in moves {
            let token = parse_action(&state, mv);
            assert!(!token.is_format_error());
            let (next, outcome) = step(&state, &token).unwrap();
            state = next;
            last = outcome;
        }
        assert_eq!(
            last,
            StepOutcome::Terminal(TerminalOutcome::win_for(Player::P0))
        );
    }
}
