//! Rendering: per-iteration CSV from metrics logs, and W/D/L tables from
//! saved match reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use dfc_core::eval::MatchReport;

use crate::metrics::MetricsRecord;

/// Render a metrics log as CSV, one row per iteration. Per-game columns
/// cover the union of games seen anywhere in the log, sorted by game id.
pub fn metrics_to_csv(records: &[MetricsRecord]) -> String {
    let mut games: BTreeSet<&str> = BTreeSet::new();
    for r in records {
        games.extend(r.metrics.wrc.keys().map(String::as_str));
        games.extend(r.metrics.gf.keys().map(String::as_str));
    }
    let mut out = String::new();
    out.push_str("run_id,phase,iteration,avg_wrc,best_avg_wrc,best_updated,duration_secs");
    for g in &games {
        let _ = write!(out, ",wrc_{g},gf_{g},steps_{g},reward_{g}");
    }
    out.push('\n');
    for r in records {
        let m = &r.metrics;
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.run_id, r.phase, m.iteration, m.avg_wrc, m.best_avg_wrc, m.best_updated,
            m.duration_secs
        );
        for g in &games {
            let cell = |map: &std::collections::BTreeMap<String, f64>| {
                map.get(*g).map(|v| v.to_string()).unwrap_or_default()
            };
            let _ = write!(
                out,
                ",{},{},{},{}",
                cell(&m.wrc),
                cell(&m.gf),
                cell(&m.mean_steps),
                cell(&m.mean_reward)
            );
        }
        out.push('\n');
    }
    out
}

/// Render saved match reports as an aligned W/D/L text table with joint and
/// per-seat columns.
pub fn wdl_table(reports: &[MatchReport]) -> String {
    let mut rows = vec![[
        "game".to_string(),
        "opponent".to_string(),
        "episodes".to_string(),
        "W/D/L".to_string(),
        "as P0".to_string(),
        "as P1".to_string(),
        "win rate".to_string(),
    ]];
    for r in reports {
        let t = r.totals();
        let fmt = |c: dfc_core::eval::RoleCounts| {
            if c.episodes() == 0 {
                "-".to_string()
            } else {
                format!("{}/{}/{}", c.wins, c.draws, c.losses)
            }
        };
        rows.push([
            r.game_id.clone(),
            r.opponent.clone(),
            t.episodes().to_string(),
            fmt(t),
            fmt(r.per_role[0]),
            fmt(r.per_role[1]),
            format!("{:.3}", r.win_rate()),
        ]);
    }
    let mut widths = [0usize; 7];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        for (w, cell) in widths.iter().zip(row) {
            let _ = write!(out, "{cell:<w$}  ", w = w);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        if i == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}
