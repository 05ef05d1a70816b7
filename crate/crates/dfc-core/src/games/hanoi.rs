//! Tower of Hanoi with a configurable disk count. Towers are labeled A, B,
//! and C; a move like `[A C]` carries the top disk of A onto C and is legal
//! only if it keeps the size ordering. The puzzle is won when every disk
//! sits on C.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{GameSpec, Move, PlayerResult, StepOutcome, TerminalOutcome};

const TOWER_NAMES: [char; 3] = ['A', 'B', 'C'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HanoiState {
    /// Bottom-to-top disk sizes per tower; disk 1 is the smallest.
    pub towers: [Vec<u8>; 3],
}

pub(super) fn reset(spec: &GameSpec) -> HanoiState {
    let disks = spec.variant_param("disks") as u8;
    let mut first = Vec::with_capacity(disks as usize);
    for d in (1..=disks).rev() {
        first.push(d);
    }
    HanoiState {
        towers: [first, Vec::new(), Vec::new()],
    }
}

fn move_is_legal(board: &HanoiState, from: usize, to: usize) -> bool {
    if from == to {
        return false;
    }
    match (board.towers[from].last(), board.towers[to].last()) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(&moving), Some(&target)) => moving < target,
    }
}

pub(super) fn legal_actions(board: &HanoiState) -> Vec<String> {
    let mut out = Vec::new();
    for from in 0..3 {
        for to in 0..3 {
            if move_is_legal(board, from, to) {
                out.push(format!("[{} {}]", TOWER_NAMES[from], TOWER_NAMES[to]));
            }
        }
    }
    out
}

fn tower_index(c: char) -> Option<u8> {
    TOWER_NAMES.iter().position(|&t| t == c).map(|i| i as u8)
}

fn parse_tower(token: &str) -> Option<u8> {
    let mut chars = token.chars();
    let c = chars.next()?;
    if chars.next().is_some() {
        return None;
    }
    tower_index(c)
}

pub(super) fn parse(board: &HanoiState, raw: &str) -> Option<Move> {
    let inner = raw.strip_prefix('[')?.strip_suffix(']')?;
    let mut parts = inner.split(' ');
    let from = parse_tower(parts.next()?)?;
    let to = parse_tower(parts.next()?)?;
    if parts.next().is_some() {
        return None;
    }
    if !move_is_legal(board, from as usize, to as usize) {
        return None;
    }
    Some(Move::HanoiMove { from, to })
}

pub(super) fn apply(spec: &GameSpec, board: &mut HanoiState, from: u8, to: u8) -> StepOutcome {
    let disk = board.towers[from as usize].pop().expect("move was validated");
    board.towers[to as usize].push(disk);
    let disks = spec.variant_param("disks") as usize;
    if board.towers[2].len() == disks {
        StepOutcome::Terminal(TerminalOutcome::solo(PlayerResult::Win))
    } else {
        StepOutcome::Ongoing
    }
}

pub(super) fn atoms(board: &HanoiState) -> Vec<String> {
    let mut out = Vec::with_capacity(3 + 4);
    for (i, tower) in board.towers.iter().enumerate() {
        let mut contents = String::new();
        for d in tower {
            contents.push((b'0' + d) as char);
        }
        out.push(format!("{}={}", TOWER_NAMES[i], contents));
    }
    // Per-disk locations; lets the policy track individual disks.
    for (i, tower) in board.towers.iter().enumerate() {
        for d in tower {
            out.push(format!("d{}@{}", d, TOWER_NAMES[i]));
        }
    }
    out
}
