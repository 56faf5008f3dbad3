use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use conceptpref::envs::{EnvKind, EnvSpec, Environment};
use conceptpref::humansim::find_template;
use conceptpref::oracles::PromptBundle;
use conceptpref::runner::{run_experiment, run_session, BatchConfig, SessionConfig};
use conceptpref::theory::{validate_grid, GridSpec};
use conceptpref_service::Store;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "conceptpref", version, about = "Active preference learning over named concepts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a session or batch config (JSON) and write results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Generate an environment and write its pool (and road graph) as JSON.
    GenData {
        #[arg(long)]
        env: EnvKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_nodes: Option<usize>,
        #[arg(long)]
        pool_size: Option<usize>,
    },
    /// Compare the closed-form success rates with simulation over a grid.
    ValidateTheory {
        /// `default`, or a path to a grid JSON file.
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Persist sessions to this directory and reload them on start.
        #[arg(long)]
        persist: Option<PathBuf>,
    },
    /// Print the prompts an oracle would receive, without sending anything.
    DumpPrompts {
        #[arg(long)]
        env: EnvKind,
        /// Built-in template id.
        #[arg(long, conflicts_with = "instruction")]
        instruction_id: Option<String>,
        #[arg(long)]
        instruction: Option<String>,
        /// Extra language feedback, repeatable.
        #[arg(long)]
        feedback: Vec<String>,
    },
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn run(config: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let raw: Value = serde_json::from_str(&text)?;
    std::fs::create_dir_all(out)?;
    if raw.get("methods").is_some() {
        let batch: BatchConfig = serde_json::from_value(raw).context("batch config")?;
        let res = run_experiment(&batch)?;
        write_json(&out.join("results.json"), &res)?;
        res.write_csv(std::fs::File::create(out.join("results.csv"))?)?;
        for s in res.summary.iter().filter(|s| s.metric == "test_accuracy") {
            println!("{:<13} n={:<3} test_accuracy {:.4} ± {:.4} ({} runs)", s.method, s.n_feedback, s.mean, s.se, s.n);
        }
        for m in &res.methods {
            let fmt = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.3}"));
            println!("{:<13} sessions {} aborted {} eqsr {} qsr {}", m.method, m.sessions, m.aborted, fmt(m.eqsr), fmt(m.qsr));
        }
        if !res.failures.is_empty() {
            eprintln!("{} sessions failed; see results.json", res.failures.len());
        }
    } else {
        let cfg: SessionConfig = serde_json::from_value(raw).context("session config")?;
        let res = run_session(&cfg)?;
        write_json(&out.join("session.json"), &res)?;
        println!("{} answered, {} skipped; final metrics {:?}", res.n_answered, res.n_skipped, res.final_metrics);
    }
    println!("results in {}", out.display());
    Ok(())
}

fn gen_data(spec: EnvSpec, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let env = Environment::generate(&spec)?;
    env.pool().save(out.join("pool.json"))?;
    if let Environment::Routing { graph, .. } = &env {
        graph.save(out.join("graph.json"))?;
    }
    println!("{} trajectories written to {}", env.pool().len(), out.display());
    Ok(())
}

fn validate_theory(grid: &str, trials: u64, seed: u64, out: &Path) -> Result<()> {
    let spec = match grid {
        "default" => GridSpec::default_grid(),
        path => serde_json::from_str(&std::fs::read_to_string(path)?).context("grid file")?,
    };
    let report = validate_grid(&spec, trials, seed)?;
    write_json(out, &report)?;
    println!(
        "{} cells, max z {:.2}, {:.2}% within 3 SE: {}",
        report.cells.len(),
        report.max_z,
        100.0 * report.within_3se,
        if report.passed() { "pass" } else { "FAIL" }
    );
    if !report.passed() {
        bail!("closed forms and simulation disagree; see {}", out.display());
    }
    Ok(())
}

fn dump_prompts(env: EnvKind, id: Option<String>, text: Option<String>, feedback: &[String]) -> Result<()> {
    let instruction = match (id, text) {
        (Some(id), _) => find_template(env, &id)?.text,
        (None, Some(t)) => t,
        (None, None) => bail!("give --instruction or --instruction-id"),
    };
    let e = Environment::generate(&EnvSpec::new(env, 0))?;
    let ts = e.pool().trajectories();
    let bundle = PromptBundle::for_env(env, &e.pool().catalog, &instruction, feedback)?;
    print!("{}", bundle.dump((&ts[0].render, &ts[1].render)));
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, out } => run(&config, &out),
        Command::GenData { env, seed, out, n_nodes, pool_size } => {
            gen_data(EnvSpec { kind: env, seed, n_nodes, pool_size }, &out)
        }
        Command::ValidateTheory { grid, trials, seed, out } => validate_theory(&grid, trials, seed, &out),
        Command::Serve { addr, persist } => {
            let store = match persist {
                Some(dir) => Store::persistent(dir)?,
                None => Store::in_memory(),
            };
            tokio::runtime::Runtime::new()?.block_on(conceptpref_service::serve(addr, Arc::new(store)))?;
            Ok(())
        }
        Command::DumpPrompts { env, instruction_id, instruction, feedback } => dump_prompts(env, instruction_id, instruction, &feedback),
    }
}
