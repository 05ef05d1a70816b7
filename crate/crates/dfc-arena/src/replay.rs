//! Episode replay files: JSON lines, one step per line with fields
//! {game_id, seed, player, raw_action, outcome}. The outcome field reflects
//! the state after the step ("ongoing" until the terminal line).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dfc_core::eval::VersusEpisode;
use dfc_core::games::{Player, PlayerResult, StepOutcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// One replay line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayStep {
    pub game_id: String,
    pub seed: u64,
    pub player: u8,
    pub raw_action: String,
    pub outcome: String,
}

fn outcome_tag(outcome: &StepOutcome) -> String {
    match outcome {
        StepOutcome::Ongoing => "ongoing".to_string(),
        StepOutcome::Terminal(t) => match (t.for_player(Player::P0), t.for_player(Player::P1)) {
            (PlayerResult::Draw, _) => "draw".to_string(),
            (PlayerResult::Win, _) => "win_p0".to_string(),
            (PlayerResult::Lose, PlayerResult::Win) => "win_p1".to_string(),
            // Single-player losses mirror seat 0 into seat 1.
            _ => "lose".to_string(),
        },
    }
}

/// Append every step of every episode to `path`.
pub fn write_replay(path: &Path, episodes: &[VersusEpisode]) -> Result<(), ReplayError> {
    let io = |source| ReplayError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    for episode in episodes {
        for mv in &episode.moves {
            let step = ReplayStep {
                game_id: episode.game_id.clone(),
                seed: episode.seed,
                player: mv.player.index() as u8,
                raw_action: mv.raw.clone(),
                outcome: outcome_tag(&mv.outcome),
            };
            let line = serde_json::to_string(&step).expect("replay steps always serialize");
            writeln!(out, "{line}").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Read a replay file back.
pub fn read_replay(path: &Path) -> Result<Vec<ReplayStep>, ReplayError> {
    let file = File::open(path).map_err(|source| ReplayError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ReplayError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| ReplayError::Parse {
                line: idx + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dfc_core::eval::{evaluate_with_episodes, Opponent};
    use dfc_core::games::{register_builtin_games, Featurizer};
    use dfc_core::policy::init_params;
    use dfc_core::rng::rng_from_seed;

    #[test]
    fn replay_round_trips_and_ends_terminal() {
        let reg = register_builtin_games();
        let featurizer = Featurizer::new(32, 0);
        let params = init_params(32, 0);
        let mut rng = rng_from_seed(8);
        let (_, episodes) = evaluate_with_episodes(
            &reg,
            &params,
            &featurizer,
            "tictactoe",
            &Opponent::Random,
            3,
            &mut rng,
            true,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_replay(&path, &episodes).unwrap();
        let steps = read_replay(&path).unwrap();
        let total_moves: usize = episodes.iter().map(|e| e.moves.len()).sum();
        assert_eq!(steps.len(), total_moves);
        // The last line of each episode is terminal, earlier ones ongoing.
        let mut idx = 0;
        for episode in &episodes {
            for (k, _) in episode.moves.iter().enumerate() {
                let is_last = k + 1 == episode.moves.len();
                assert_eq!(steps[idx].outcome != "ongoing", is_last);
                idx += 1;
            }
        }
    }
}
