//! Curriculum-guided seed allocation and trajectory filtering.
//!
//! Mixed prioritized sampling weights each game by
//! `a * max(eps1, 1 - WR) + b * WR * (1 - WR)`: the first term favors games
//! the policy still loses, the second games it is most uncertain about. The
//! per-iteration seed budget is split proportionally to those weights.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::num;
use crate::rng::{derive_rng, DetRng};
use crate::trajectory::ScoredTrajectory;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("win rate {0} outside [0, 1]")]
    WinRateOutOfRange(f64),
    #[error("win-rate table is empty")]
    EmptyTable,
    #[error("all sampling weights are zero")]
    ZeroWeights,
    #[error("budget {budget} cannot give each of {games} games a seed")]
    BudgetTooSmall { budget: u32, games: usize },
}

/// Per-game win rates from the previous iteration. BTreeMap keeps the
/// iteration order (and therefore the allocation tie-breaking) deterministic.
pub type WinRateTable = BTreeMap<String, f64>;

/// Mixed-prioritized-sampling constants plus the per-game seed budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpsConfig {
    /// Weight of the linear-capped priority.
    pub a: f64,
    /// Weight of the variance priority.
    pub b: f64,
    /// Cap ratio: minimum sampling proportion per game.
    pub eps1: f64,
    /// Rollout-seed budget per game; the iteration total is `s * |group|`.
    pub s: u32,
}

impl Default for MpsConfig {
    fn default() -> Self {
        MpsConfig {
            a: 0.2,
            b: 0.8,
            eps1: 0.1,
            s: 50,
        }
    }
}

/// The mixed sampling weight for one game's win rate.
pub fn mps_weight(wr: f64, cfg: &MpsConfig) -> Result<f64, ScheduleError> {
    if !(0.0..=1.0).contains(&wr) {
        return Err(ScheduleError::WinRateOutOfRange(wr));
    }
    Ok(cfg.a * (1.0 - wr).max(cfg.eps1) + cfg.b * wr * (1.0 - wr))
}

/// Split the iteration's total seed budget (`cfg.s` per game) across games
/// proportionally to their MPS weights, using largest-remainder rounding.
/// Counts sum exactly to the budget and every positive-weight game receives
/// at least one seed.
pub fn allocate_seeds(
    table: &WinRateTable,
    cfg: &MpsConfig,
) -> Result<BTreeMap<String, u32>, ScheduleError> {
    let weights: Vec<(String, f64)> = table
        .iter()
        .map(|(g, &wr)| mps_weight(wr, cfg).map(|w| (g.clone(), w)))
        .collect::<Result<_, _>>()?;
    let budget = cfg.s * table.len() as u32;
    allocate_proportional(&weights, budget)
}

/// Largest-remainder apportionment of `budget` across weighted entries.
pub fn allocate_proportional(
    weights: &[(String, f64)],
    budget: u32,
) -> Result<BTreeMap<String, u32>, ScheduleError> {
    if weights.is_empty() {
        return Err(ScheduleError::EmptyTable);
    }
    let total_weight: f64 = weights.iter().map(|(_, w)| w).sum();
    if total_weight <= 0.0 {
        return Err(ScheduleError::ZeroWeights);
    }
    let positive = weights.iter().filter(|(_, w)| *w > 0.0).count();
    if (budget as usize) < positive {
        return Err(ScheduleError::BudgetTooSmall {
            budget,
            games: positive,
        });
    }
    let shares: Vec<f64> = weights
        .iter()
        .map(|(_, w)| budget as f64 * w / total_weight)
        .collect();
    let mut counts: Vec<u32> = shares.iter().map(|&s| num::floor(s) as u32).collect();
    let assigned: u32 = counts.iter().sum();
    // Hand the leftover seeds to the largest fractional remainders; ties
    // break toward the earlier entry.
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = shares[i] - num::floor(shares[i]);
        let rj = shares[j] - num::floor(shares[j]);
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for k in 0..(budget - assigned) as usize {
        counts[order[k]] += 1;
    }
    // Floor of one seed for any positive-weight game, funded by the largest
    // allocation.
    loop {
        let Some(starved) = (0..weights.len()).find(|&i| weights[i].1 > 0.0 && counts[i] == 0)
        else {
            break;
        };
        let donor = (0..weights.len())
            .max_by(|&i, &j| counts[i].cmp(&counts[j]).then(j.cmp(&i)))
            .expect("weights is non-empty");
        debug_assert!(counts[donor] > 1);
        counts[donor] -= 1;
        counts[starved] += 1;
    }
    Ok(weights
        .iter()
        .zip(counts)
        .map(|((g, _), c)| (g.clone(), c))
        .collect())
}

/// Keep every non-negative-reward trajectory and discard exactly
/// `floor(n_neg / 2)` of the negative ones, chosen by a seeded shuffle.
/// Survivors keep their relative order.
pub fn half_negative_filter(
    items: Vec<ScoredTrajectory>,
    rng: &mut DetRng,
) -> Vec<ScoredTrajectory> {
    let negative: Vec<usize> = items
        .iter()
        .enumerate()
        .filter(|(_, it)| it.reward.r_step < 0.0)
        .map(|(i, _)| i)
        .collect();
    let discard_count = negative.len() / 2;
    let mut shuffled = negative;
    shuffled.shuffle(rng);
    let mut discard = alloc::vec![false; items.len()];
    for &i in shuffled.iter().take(discard_count) {
        discard[i] = true;
    }
    items
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !discard[*i])
        .map(|(_, it)| it)
        .collect()
}

/// Draw `count` distinct pseudo-random environment seeds for one game,
/// reproducible from the master generator.
pub fn draw_rollout_seeds(game_id: &str, count: u32, master_rng: &mut DetRng) -> Vec<u64> {
    let mut rng = derive_rng(master_rng.random::<u64>(), game_id, 0);
    let mut seen = alloc::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(count as usize);
    while out.len() < count as usize {
        let s = rng.random::<u64>();
        if seen.insert(s) {
            out.push(s);
        }
    }
    out
}
