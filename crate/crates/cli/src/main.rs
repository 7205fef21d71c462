use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};

use refgame::agent::checkpoint;
use refgame::analysis::{compute_metrics, read_lines, write_lines};
use refgame::arena::{
    bootstrap_seed_data, draw_game, lab_from_config, play_game, run_campaign, CampaignConfig, GameSetup, GameStreams, HUMAN,
};
use refgame::learning::{train, validation_accuracy, Example, Role, ValidationGame};
use refgame::rng::{derive_seed, label};
use refgame::strategy::{JOINT_LISTENER, LITERAL_LISTENER};

#[derive(Parser)]
#[command(name = "refgame", version, about = "Simulated reference-game deployment campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-round campaign and write its logs.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Recompute the metric table from a JSONL log.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Whitespace-separated marked words, replacing the log's set.
        #[arg(long)]
        wordset: Option<PathBuf>,
    },
    /// Partner-partner success rate under the configured noise.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        games: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validation comprehension accuracy of the seed-trained model across listener weights.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        lambdas: Vec<f64>,
    },
}

fn load_config(path: Option<&Path>) -> Result<CampaignConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(CampaignConfig::parse(&text)?)
        }
        None => Ok(CampaignConfig::default()),
    }
}

fn simulate(config: Option<&Path>, rounds: Option<usize>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(r) = rounds {
        cfg.rounds = r;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let outcome = run_campaign(&cfg)?;
    fs::create_dir_all(out.join("checkpoints"))?;
    fs::write(out.join("campaign.json"), outcome.log.to_json()?)?;
    write_lines(&outcome.log.lines(), BufWriter::new(fs::File::create(out.join("interactions.jsonl"))?))?;
    outcome.log.metrics.write_csv(fs::File::create(out.join("metrics.csv"))?)?;
    for (id, params) in &outcome.checkpoints {
        checkpoint::save(&out.join("checkpoints").join(format!("{id}.ckpt")), params, &outcome.log.schema)?;
    }
    println!("{:<6} {:<10} {:>10} {:>10}", "round", "variant", "listener", "speaker");
    for round in &outcome.log.rounds {
        for v in &round.variants {
            let acc = |role| outcome.log.metrics.value(round.round, &v.variant, Some(role), "accuracy").unwrap_or(f64::NAN);
            println!("{:<6} {:<10} {:>10.3} {:>10.3}", round.round, v.variant, acc(Role::Listener), acc(Role::Speaker));
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn analyze(log: &Path, out: &Path, wordset: Option<&Path>) -> Result<()> {
    let lines = read_lines(BufReader::new(fs::File::open(log).with_context(|| format!("opening {}", log.display()))?))?;
    let words: Option<BTreeSet<String>> = match wordset {
        Some(p) => Some(fs::read_to_string(p)?.split_whitespace().map(str::to_lowercase).collect()),
        None => None,
    };
    let table = compute_metrics(&lines, words.as_ref())?;
    table.write_csv(fs::File::create(out)?)?;
    println!("{} rows written to {}", table.rows.len(), out.display());
    Ok(())
}

fn calibrate(config: Option<&Path>, games: u64, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config)?;
    let lab = lab_from_config(&cfg)?;
    let master = seed.unwrap_or(cfg.master_seed);
    let mut successes = 0u64;
    for game in 0..games {
        let mut streams = GameStreams::new(derive_seed(&[master, label("calibrate"), game]));
        let (context, target) = draw_game(&lab.library, &mut streams.context)?;
        let setup = GameSetup {
            round: 0,
            game,
            variant: HUMAN,
            role: Role::Listener,
            context,
            target,
        };
        successes += u64::from(play_game(&lab, None, setup, &mut streams)?.success());
    }
    println!("noise {:?}", cfg.noise);
    println!("partner-partner success {:.4} over {games} games", successes as f64 / games as f64);
    Ok(())
}

fn sweep(config: Option<&Path>, lambdas: &[f64]) -> Result<()> {
    let cfg = load_config(config)?;
    let lab = lab_from_config(&cfg)?;
    let master = cfg.master_seed;
    let seed = bootstrap_seed_data(&lab, cfg.seed_games, cfg.validation_games, derive_seed(&[master, label("seed")]))?;
    let validation: Vec<ValidationGame> = seed.validation_games(&lab.library);
    let to_examples = |rs: &[refgame::learning::InteractionRecord]| -> Vec<Example> {
        rs.iter().map(|r| Example::from_record(r, &lab.library)).collect()
    };
    let initial = refgame::agent::ModelParams::init(lab.dims.clone(), derive_seed(&[master, label("init")]));
    let literal = lab.registry.listener(LITERAL_LISTENER)?;
    let (params, report) = train(
        &initial,
        &to_examples(&seed.listener),
        &to_examples(&seed.speaker),
        &validation,
        literal.as_ref(),
        &lab.hyper,
        derive_seed(&[master, label("train"), 0]),
    )?;
    println!("seed model: best epoch {} of {}", report.best_epoch, report.epochs.len());
    let joint = lab.registry.listener(JOINT_LISTENER)?;
    for &lambda in lambdas {
        let hyper = refgame::agent::Hyper {
            lambda_listener: lambda,
            ..lab.hyper.clone()
        };
        let acc = validation_accuracy(&params, &validation, joint.as_ref(), &hyper)?;
        println!("lambda_listener {lambda:.2}: validation accuracy {acc:.4}");
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Simulate { config, rounds, seed, out } => simulate(config.as_deref(), rounds, seed, &out),
        Command::Analyze { log, out, wordset } => analyze(&log, &out, wordset.as_deref()),
        Command::Calibrate { config, games, seed } => calibrate(config.as_deref(), games, seed),
        Command::Sweep { config, lambdas } => sweep(config.as_deref(), &lambdas),
    }
}
