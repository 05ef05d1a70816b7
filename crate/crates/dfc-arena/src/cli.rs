//! Command-line interface: probe, train-group, fuse, conquer, dfc-run,
//! eval, report, and ablate subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dfc_core::eval::{evaluate_with_episodes, MatchReport, Opponent};
use dfc_core::orchestrate::{dfc_run, divide, probe_baseline, DfcConfig, GroupPlan};
use dfc_core::policy::{fuse, init_params, PolicyParams};
use dfc_core::rng::rng_from_seed;
use dfc_core::train::conquer;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::RunConfig;
use crate::metrics::{read_metrics, RunObserver};
use crate::replay::write_replay;
use crate::report::{metrics_to_csv, wdl_table};

#[derive(Parser)]
#[command(
    name = "dfc-arena",
    about = "Divide-fuse-conquer self-play training over compact turn-based games",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration file (flat key = value lines; missing keys take
    /// defaults).
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => Ok(RunConfig::load(path)?),
            None => {
                let mut cfg = RunConfig::default();
                cfg.apply_env_override(std::env::var("DFC_ARENA_SEED").ok().as_deref())?;
                Ok(cfg)
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Probe baseline win rates of the untrained policy and emit the group
    /// plan.
    Probe {
        #[command(flatten)]
        config: ConfigArg,
        /// Override the probe trial count.
        #[arg(long)]
        trials: Option<u32>,
        /// Write the plan JSON here instead of stdout.
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Train a specialist on one group of the plan (or an explicit game
    /// list) from a fresh initial policy.
    TrainGroup {
        #[command(flatten)]
        config: ConfigArg,
        /// Plan JSON produced by `probe`.
        #[arg(long, conflicts_with = "games")]
        plan: Option<PathBuf>,
        /// 1-based group index into the plan.
        #[arg(long, requires = "plan")]
        group: Option<usize>,
        /// Comma-separated game ids (alternative to --plan/--group).
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        /// Output directory for checkpoints and metrics.
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
        /// Record wall-clock iteration durations in the metrics log.
        #[arg(long)]
        timings: bool,
    },
    /// Average two checkpoints into one.
    Fuse {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Run the conquer loop on a set of games, optionally from an existing
    /// checkpoint.
    Conquer {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated game ids; defaults to the config roster.
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        /// Starting checkpoint; defaults to a fresh initial policy.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
        #[arg(long)]
        timings: bool,
    },
    /// Full divide-fuse-conquer pipeline over the config roster.
    DfcRun {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
        #[arg(long)]
        timings: bool,
    },
    /// Evaluate a checkpoint against a scripted opponent.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        ckpt: PathBuf,
        /// Game id; defaults to every game in the config roster.
        #[arg(long)]
        game: Option<String>,
        /// random | greedy | minimax:<depth> | initial:<checkpoint>.
        #[arg(long, default_value = "random")]
        opponent: String,
        /// Episodes per seat (per game for single-player games).
        #[arg(long)]
        seeds: Option<u32>,
        /// Write full episode replays (JSON lines) here.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Write the match reports JSON here instead of stdout.
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Render a metrics log as per-iteration CSV, or saved eval reports as a
    /// W/D/L table.
    Report {
        /// Metrics JSONL file.
        metrics: Option<PathBuf>,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        /// Eval report JSON files to render as a W/D/L table.
        #[arg(long, num_args = 1.., value_name = "REPORT")]
        eval: Vec<PathBuf>,
    },
    /// Run a paired A/B comparison with one stabilization toggle flipped.
    Ablate {
        #[command(flatten)]
        config: ConfigArg,
        /// fr | mps | hn | eg | rs | hap.
        #[arg(long)]
        toggle: String,
        /// Comma-separated game ids; defaults to the config roster.
        #[arg(long, value_delimiter = ',')]
        games: Vec<String>,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
        #[arg(long)]
        timings: bool,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Probe { config, trials, out } => cmd_probe(config, trials, out),
        Command::TrainGroup {
            config,
            plan,
            group,
            games,
            out_dir,
            timings,
        } => cmd_train_group(config, plan, group, games, out_dir, timings),
        Command::Fuse { a, b, out } => cmd_fuse(&a, &b, &out),
        Command::Conquer {
            config,
            games,
            init,
            out_dir,
            timings,
        } => cmd_conquer(config, games, init, out_dir, timings),
        Command::DfcRun {
            config,
            out_dir,
            timings,
        } => cmd_dfc_run(config, out_dir, timings),
        Command::Eval {
            config,
            ckpt,
            game,
            opponent,
            seeds,
            replay,
            out,
        } => cmd_eval(config, ckpt, game, opponent, seeds, replay, out),
        Command::Report { metrics, out, eval } => cmd_report(metrics, out, eval),
        Command::Ablate {
            config,
            toggle,
            games,
            out_dir,
            timings,
        } => cmd_ablate(config, toggle, games, out_dir, timings),
    }
}

/// Probe output: baseline win rates plus the derived plan.
#[derive(serde::Serialize, serde::Deserialize)]
pub struct ProbeOutput {
    pub probe: BTreeMap<String, f64>,
    pub plan: GroupPlan,
}

fn cmd_probe(config: ConfigArg, trials: Option<u32>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = config.load()?;
    if let Some(t) = trials {
        cfg.probe_trials = t;
    }
    let registry = cfg.registry();
    let featurizer = cfg.featurizer();
    let params = init_params(cfg.feature_dim, cfg.master_seed);
    let mut rng = rng_from_seed(cfg.master_seed);
    let mut probe = BTreeMap::new();
    for game in &cfg.games {
        let wr = probe_baseline(
            &registry,
            &params,
            &featurizer,
            game,
            cfg.probe_trials,
            cfg.distractors,
            &mut rng,
        )?;
        probe.insert(game.clone(), wr);
    }
    let plan = divide(&registry, &probe)?;
    let output = ProbeOutput { probe, plan };
    let json = serde_json::to_string_pretty(&output)?;
    match out {
        Some(path) => std::fs::write(&path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_train_group(
    config: ConfigArg,
    plan: Option<PathBuf>,
    group: Option<usize>,
    games: Vec<String>,
    out_dir: PathBuf,
    timings: bool,
) -> Result<()> {
    let cfg = config.load()?;
    let group_games = if let Some(plan_path) = plan {
        let text = std::fs::read_to_string(&plan_path)
            .with_context(|| format!("reading {}", plan_path.display()))?;
        let parsed: ProbeOutput = serde_json::from_str(&text)?;
        let index = group.context("--group is required with --plan")?;
        if index == 0 || index > parsed.plan.groups.len() {
            bail!(
                "group {index} out of range; plan has {} groups",
                parsed.plan.groups.len()
            );
        }
        parsed.plan.groups[index - 1].games.clone()
    } else if !games.is_empty() {
        games
    } else {
        bail!("either --plan with --group or --games is required");
    };

    let mut train_cfg = cfg.conquer_config();
    if let Some(t) = cfg.specialist_iterations {
        train_cfg.iterations = t;
    }
    train_and_save(&cfg, &group_games, None, &train_cfg, &out_dir, "group", timings)
}

fn cmd_fuse(a: &Path, b: &Path, out: &Path) -> Result<()> {
    let (pa, _) = load_checkpoint(a, None)?;
    let (pb, _) = load_checkpoint(b, None)?;
    let fused = fuse(&pa, &pb)?;
    save_checkpoint(out, &fused, 0)?;
    println!(
        "fused {} (+{} params) -> {}",
        a.display(),
        pa.dim(),
        out.display()
    );
    Ok(())
}

fn cmd_conquer(
    config: ConfigArg,
    games: Vec<String>,
    init: Option<PathBuf>,
    out_dir: PathBuf,
    timings: bool,
) -> Result<()> {
    let cfg = config.load()?;
    let group = if games.is_empty() { cfg.games.clone() } else { games };
    let init_policy = match init {
        Some(path) => Some(load_checkpoint(&path, Some(cfg.feature_dim))?.0),
        None => None,
    };
    let train_cfg = cfg.conquer_config();
    train_and_save(&cfg, &group, init_policy, &train_cfg, &out_dir, "conquer", timings)
}

fn train_and_save(
    cfg: &RunConfig,
    group: &[String],
    init_policy: Option<PolicyParams>,
    train_cfg: &dfc_core::train::ConquerConfig,
    out_dir: &Path,
    tag: &str,
    timings: bool,
) -> Result<()> {
    let registry = cfg.registry();
    let featurizer = cfg.featurizer();
    let init_policy =
        init_policy.unwrap_or_else(|| init_params(cfg.feature_dim, cfg.master_seed));
    let mut rng = rng_from_seed(cfg.master_seed);
    let run_id = cfg.run_id();
    let metrics_path = out_dir.join(format!("{run_id}_{tag}.jsonl"));
    let mut observer = RunObserver::create(out_dir, &run_id, &metrics_path, timings)?;
    let outcome = conquer(
        &registry,
        group,
        &init_policy,
        &featurizer,
        train_cfg,
        &mut rng,
        &mut observer,
    )?;
    observer.finish().map_err(anyhow::Error::msg)?;
    let final_path = out_dir.join(format!("{run_id}_{tag}_final.ckpt"));
    save_checkpoint(&final_path, &outcome.best, train_cfg.iterations as u64)?;
    let last = outcome.metrics.last().expect("iterations >= 1");
    println!(
        "trained {} on {} for {} iterations: best avg WR {:.3}, final checkpoint {}",
        run_id,
        group.join("+"),
        train_cfg.iterations,
        last.best_avg_wrc,
        final_path.display()
    );
    println!("metrics: {}", metrics_path.display());
    Ok(())
}

/// Manifest written by `dfc-run`: plan, phases, checkpoints, config hash.
#[derive(serde::Serialize)]
struct RunManifest<'a> {
    run_id: String,
    config_hash: String,
    probe: &'a BTreeMap<String, f64>,
    plan: &'a GroupPlan,
    phases: Vec<ManifestPhase>,
    final_checkpoint: String,
}

#[derive(serde::Serialize)]
struct ManifestPhase {
    label: String,
    games: Vec<String>,
    checkpoint: String,
    params_note: String,
    iterations: usize,
}

fn cmd_dfc_run(config: ConfigArg, out_dir: PathBuf, timings: bool) -> Result<()> {
    let cfg = config.load()?;
    let registry = cfg.registry();
    let featurizer = cfg.featurizer();
    let init_policy = init_params(cfg.feature_dim, cfg.master_seed);
    let mut rng = rng_from_seed(cfg.master_seed);
    let run_id = cfg.run_id();
    let dfc_cfg: DfcConfig = cfg.dfc_config();
    let metrics_path = out_dir.join(format!("{run_id}_dfc.jsonl"));
    let mut observer = RunObserver::create(&out_dir, &run_id, &metrics_path, timings)?;
    let report = dfc_run(
        &registry,
        &cfg.games,
        &init_policy,
        &featurizer,
        &dfc_cfg,
        &mut rng,
        &mut observer,
    )?;
    observer.finish().map_err(anyhow::Error::msg)?;

    let final_path = out_dir.join(format!("{run_id}_final.ckpt"));
    save_checkpoint(&final_path, &report.final_params, 0)?;
    let manifest = RunManifest {
        run_id: run_id.clone(),
        config_hash: cfg.config_hash(),
        probe: &report.probe,
        plan: &report.plan,
        phases: report
            .phases
            .iter()
            .map(|p| ManifestPhase {
                label: p.label.clone(),
                games: p.games.clone(),
                checkpoint: format!("{run_id}_{}.ckpt", p.label),
                params_note: p.params_note.clone(),
                iterations: p.metrics.len(),
            })
            .collect(),
        final_checkpoint: final_path.display().to_string(),
    };
    let manifest_path = out_dir.join(format!("{run_id}_manifest.json"));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!(
        "dfc run {} finished: {} groups, {} phases",
        run_id,
        report.plan.groups.len(),
        report.phases.len()
    );
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

fn parse_opponent<'a>(
    text: &str,
    loaded: &'a mut Option<PolicyParams>,
    expected_dim: usize,
) -> Result<Opponent<'a>> {
    if text == "random" {
        return Ok(Opponent::Random);
    }
    if text == "greedy" {
        return Ok(Opponent::Greedy);
    }
    if let Some(depth) = text.strip_prefix("minimax:") {
        let depth: u32 = depth
            .parse()
            .with_context(|| format!("invalid minimax depth in `{text}`"))?;
        return Ok(Opponent::Minimax { depth });
    }
    if let Some(path) = text.strip_prefix("initial:") {
        let (params, _) = load_checkpoint(Path::new(path), Some(expected_dim))?;
        *loaded = Some(params);
        return Ok(Opponent::Policy {
            params: loaded.as_ref().expect("just stored"),
            label: "initial",
        });
    }
    bail!("unknown opponent `{text}`; expected random, greedy, minimax:<depth>, or initial:<ckpt>")
}

fn cmd_eval(
    config: ConfigArg,
    ckpt: PathBuf,
    game: Option<String>,
    opponent: String,
    seeds: Option<u32>,
    replay: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = config.load()?;
    let registry = cfg.registry();
    let featurizer = cfg.featurizer();
    let (params, _) = load_checkpoint(&ckpt, Some(cfg.feature_dim))?;
    let n_seeds = seeds.unwrap_or(cfg.eval_seeds);
    let games: Vec<String> = match game {
        Some(g) => vec![g],
        None => cfg.games.clone(),
    };
    let mut loaded_opponent = None;
    let opponent = parse_opponent(&opponent, &mut loaded_opponent, cfg.feature_dim)?;
    let mut rng = rng_from_seed(cfg.master_seed);
    let mut reports: Vec<MatchReport> = Vec::new();
    let mut episodes = Vec::new();
    for game in &games {
        let (report, mut eps) = evaluate_with_episodes(
            &registry,
            &params,
            &featurizer,
            game,
            &opponent,
            n_seeds,
            &mut rng,
            replay.is_some(),
        )?;
        reports.push(report);
        episodes.append(&mut eps);
    }
    if let Some(path) = &replay {
        write_replay(path, &episodes)?;
    }
    let json = serde_json::to_string_pretty(&reports)?;
    match out {
        Some(path) => {
            std::fs::write(&path, json + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => println!("{json}"),
    }
    eprint!("{}", wdl_table(&reports));
    Ok(())
}

fn cmd_report(metrics: Option<PathBuf>, out: Option<PathBuf>, eval: Vec<PathBuf>) -> Result<()> {
    if metrics.is_none() && eval.is_empty() {
        bail!("nothing to report: pass a metrics JSONL file and/or --eval reports");
    }
    if let Some(path) = metrics {
        let records = read_metrics(&path)?;
        let csv = metrics_to_csv(&records);
        match &out {
            Some(path) => std::fs::write(path, &csv)
                .with_context(|| format!("writing {}", path.display()))?,
            None => print!("{csv}"),
        }
    }
    if !eval.is_empty() {
        let mut reports = Vec::new();
        for path in &eval {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let mut batch: Vec<MatchReport> = serde_json::from_str(&text)?;
            reports.append(&mut batch);
        }
        print!("{}", wdl_table(&reports));
    }
    Ok(())
}

fn cmd_ablate(
    config: ConfigArg,
    toggle: String,
    games: Vec<String>,
    out_dir: PathBuf,
    timings: bool,
) -> Result<()> {
    let cfg = config.load()?;
    let group = if games.is_empty() { cfg.games.clone() } else { games };
    let mut flipped = cfg.clone();
    match toggle.as_str() {
        "fr" => flipped.fr = !flipped.fr,
        "mps" => flipped.mps = !flipped.mps,
        "hn" => flipped.hn = !flipped.hn,
        "eg" => flipped.eg = !flipped.eg,
        "rs" => flipped.rs = !flipped.rs,
        "hap" => {
            flipped.reward_mode = match flipped.reward_mode {
                dfc_core::reward::RewardMode::StepShaped => dfc_core::reward::RewardMode::EnvOnly,
                dfc_core::reward::RewardMode::EnvOnly => dfc_core::reward::RewardMode::StepShaped,
            }
        }
        other => bail!("unknown toggle `{other}`; expected fr, mps, hn, eg, rs, or hap"),
    }

    let run_id = cfg.run_id();
    let mut summaries = Vec::new();
    for (arm, arm_cfg) in [("a", &cfg), ("b", &flipped)] {
        let registry = arm_cfg.registry();
        let featurizer = arm_cfg.featurizer();
        let init_policy = init_params(arm_cfg.feature_dim, arm_cfg.master_seed);
        let mut rng = rng_from_seed(arm_cfg.master_seed);
        let arm_id = format!("{run_id}_{toggle}_{arm}");
        let metrics_path = out_dir.join(format!("{arm_id}.jsonl"));
        let mut observer = RunObserver::create(&out_dir, &arm_id, &metrics_path, timings)?;
        let outcome = conquer(
            &registry,
            &group,
            &init_policy,
            &featurizer,
            &arm_cfg.conquer_config(),
            &mut rng,
            &mut observer,
        )?;
        observer.finish().map_err(anyhow::Error::msg)?;
        let final_path = out_dir.join(format!("{arm_id}_final.ckpt"));
        save_checkpoint(&final_path, &outcome.best, arm_cfg.iterations as u64)?;
        let last = outcome.metrics.last().expect("iterations >= 1");
        summaries.push((arm, last.clone()));
    }
    println!("ablation `{toggle}` on {} (arm a = config, arm b = flipped):", group.join("+"));
    for (arm, last) in &summaries {
        let gf: Vec<String> = last.gf.iter().map(|(g, v)| format!("{g}={v:.3}")).collect();
        println!(
            "  arm {arm}: best avg WR {:.3}, final GF {}",
            last.best_avg_wrc,
            gf.join(" ")
        );
    }
    Ok(())
}
