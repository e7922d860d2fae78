use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sdd::OverlapTable;
use sdd_harness::{bench, heatmap, records, scenario, sweep, Config};

#[derive(Parser)]
#[command(name = "sdd-bench", version, about = "Soft duplicate detection benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the overlap table described by a config and save it.
    Precompute {
        #[arg(short, long)]
        config: PathBuf,
        /// Defaults to overlap.table from the config.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run every planner on every scenario.
    Bench {
        #[arg(short, long)]
        config: PathBuf,
        /// Defaults to output_dir from the config.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Repeat the benchmark over the [sweep] grid.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Render the expansion heatmap of one recorded run.
    Heatmap {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        records: PathBuf,
        /// Record id, e.g. `maze-000/euclidean`.
        #[arg(long)]
        run: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate scenarios and save them as JSON.
    Scenarios {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Precompute { config, out } => {
            let cfg = Config::load(&config)?;
            let path = match out {
                Some(p) => p,
                None => cfg.resolve(
                    cfg.overlap
                        .table
                        .as_ref()
                        .context("no --out given and the config names no overlap.table")?,
                ),
            };
            let params = cfg.overlap_params();
            let t0 = Instant::now();
            let table = OverlapTable::precompute(&cfg.model()?, &params)?;
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            table
                .save(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            println!(
                "{} entries, H={} r={} R={}, {:.1}s -> {}",
                table.len(),
                params.depth,
                params.overlap_radius,
                params.query_radius,
                t0.elapsed().as_secs_f64(),
                path.display()
            );
        }
        Command::Bench { config, out } => {
            let cfg = Config::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            let res = bench::run_benchmark(&cfg)?;
            bench::write_outputs(&dir, &res)?;
            for p in &res.summary.planners {
                println!(
                    "{:<16} success {:>5.1}%  time {}  cost {}  expansions {}",
                    p.planner,
                    100.0 * p.success_rate,
                    fmt(&p.wall_time),
                    fmt(&p.cost),
                    fmt(&p.expansions)
                );
            }
            println!("{} runs -> {}", res.records.len(), dir.display());
        }
        Command::Sweep { config, out } => {
            let cfg = Config::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            let res = sweep::run_sensitivity(&cfg)?;
            sweep::write_outputs(&dir, &res)?;
            for r in &res.rows {
                println!(
                    "H={} r={} c={} {:<16} time {:?}",
                    r.depth, r.overlap_radius, r.boundary, r.planner, r.time_mean
                );
            }
            println!(
                "{} runs, {} tables built -> {}",
                res.records.len(),
                res.tables_built,
                dir.display()
            );
        }
        Command::Heatmap {
            config,
            records: rec_path,
            run,
            out,
        } => {
            let cfg = Config::load(&config)?;
            let recs = records::read_jsonl(&rec_path)?;
            let Some(rec) = recs.iter().find(|r| r.id == run) else {
                bail!("no run `{run}` in {}", rec_path.display());
            };
            let Some(mc) = cfg.maps.iter().find(|m| m.name == rec.map) else {
                bail!("map `{}` is not in the config", rec.map);
            };
            let map = sdd_harness::config::load_map(mc, &cfg.base_dir)?;
            heatmap::write_heatmap(&out, rec, &map)?;
            println!("{}", out.display());
        }
        Command::Scenarios { config, out } => {
            let cfg = Config::load(&config)?;
            let work = bench::Workload::prepare(&cfg)?;
            scenario::save_scenarios(&out, &work.scenarios)?;
            println!("{} scenarios -> {}", work.scenarios.len(), out.display());
        }
    }
    Ok(())
}

fn fmt(s: &sdd_harness::Stat) -> String {
    match (s.mean, s.std_err) {
        (Some(m), Some(e)) => format!("{m:.4} ± {e:.4}"),
        (Some(m), None) => format!("{m:.4}"),
        _ => "-".into(),
    }
}
