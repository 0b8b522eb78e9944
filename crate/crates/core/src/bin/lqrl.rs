use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lqrl::envs::TabularMdp;
use lqrl::harness::{load_config, mdp_demo_table, run_experiment, write_results, ExperimentName};
use lqrl::sysid::arx_fit_batch;

#[derive(Parser)]
#[command(
    name = "lqrl",
    version,
    about = "Reinforcement learning and adaptive control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        experiment: Option<String>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in demonstrations.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Fit an ARX model to a two-column (y, u) CSV file.
    Arx {
        data: PathBuf,
        #[arg(long, default_value_t = 1)]
        na: usize,
        #[arg(long, default_value_t = 1)]
        nb: usize,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Expected rewards and row sums of the three-state example MDP.
    Mdp,
}

fn read_series(path: &PathBuf) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut y, mut u) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        if rec.len() != 2 {
            return Err(format!(
                "{}:{}: expected 2 columns, found {}",
                path.display(),
                line + 1,
                rec.len()
            ));
        }
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                y.push(v[0]);
                u.push(v[1]);
            }
            Err(_) if line == 0 => continue,
            Err(e) => return Err(format!("{}:{}: {e}", path.display(), line + 1)),
        }
    }
    Ok((y, u))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            config,
            seed,
            experiment,
            out,
        } => {
            let mut cfg = load_config(&config).map_err(|e| e.to_string())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(name) = experiment {
                cfg.experiment = name.parse::<ExperimentName>().map_err(|e| e.to_string())?;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let record = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let written = write_results(&record, &cfg.output_dir).map_err(|e| e.to_string())?;
            println!(
                "{} (seed {}): {} rows in {:.2}s",
                cfg.experiment,
                cfg.seed,
                record.rows.len(),
                record.duration_secs
            );
            println!("{}", serde_json::to_string_pretty(&record.summary).unwrap());
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Demo { which: Demo::Mdp } => {
            let mdp = TabularMdp::example_one();
            print!("{}", mdp_demo_table(&mdp).map_err(|e| e.to_string())?);
            let ok = mdp
                .row_sums()
                .iter()
                .flatten()
                .all(|v| (v - 1.0).abs() <= 1e-12);
            println!("transition rows sum to one: {ok}");
            Ok(())
        }
        Command::Arx { data, na, nb } => {
            let (y, u) = read_series(&data)?;
            let model = arx_fit_batch(&y, &u, na, nb).map_err(|e| e.to_string())?;
            for (i, a) in model.a().iter().enumerate() {
                println!("a{} = {a:.16e}", i + 1);
            }
            for (i, b) in model.b().iter().enumerate() {
                println!("b{} = {b:.16e}", i + 1);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
