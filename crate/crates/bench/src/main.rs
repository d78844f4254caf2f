use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use memsvm::data::SyntheticKind;
use memsvm_bench::commands::{
    cmd_compare, cmd_energy, cmd_gen_synthetic, cmd_regions, cmd_run, cmd_sweep_noise, load_model, GridSpec,
};
use memsvm_bench::{BenchError, ConfigArgs};

#[derive(Parser)]
#[command(name = "memsvm", version, about = "Template SVMs on a simulated memtransistor crossbar")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, program, fold and evaluate the template SVM.
    Run(ConfigArgs),
    /// Traditional RBF SVM and template SVM on identical splits.
    Compare(ConfigArgs),
    /// Accuracy over a grid of device noise levels.
    SweepNoise(ConfigArgs),
    /// Programming energy of a completed run.
    Energy {
        /// Run output directory or a single model.json.
        #[arg(long)]
        artifact: PathBuf,
        /// Directory for energy.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a grid over a 2-feature model's input plane.
    Regions {
        #[arg(long)]
        model: PathBuf,
        /// Grid size as NXxNY.
        #[arg(long, default_value = "101x101")]
        grid: GridSpec,
        /// Raw x range as LO,HI; defaults to the training range.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        x_range: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 2)]
        y_range: Option<Vec<f64>>,
        /// Output CSV with x, y, class, label columns.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic blob dataset as CSV.
    GenSynthetic {
        /// two_class_100x2, three_class_100x3 or nine_class_1000x9.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn pair(v: Option<Vec<f64>>) -> Option<(f64, f64)> {
    v.map(|v| (v[0], v[1]))
}

fn execute(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            print!("{}", cmd_run(&cfg)?.table());
        }
        Command::Compare(args) => {
            let cfg = args.resolve()?;
            print!("{}", cmd_compare(&cfg)?.table());
        }
        Command::SweepNoise(args) => {
            let cfg = args.resolve()?;
            print!("{}", cmd_sweep_noise(&cfg)?.table());
        }
        Command::Energy { artifact, out } => {
            print!("{}", cmd_energy(&artifact, out.as_deref())?.table());
        }
        Command::Regions {
            model,
            grid,
            x_range,
            y_range,
            out,
        } => {
            let model = load_model(&model)?;
            let points = cmd_regions(&model, grid, pair(x_range), pair(y_range), Some(&out))?;
            println!("wrote {} grid points to {}", points.len(), out.display());
        }
        Command::GenSynthetic { kind, seed, out } => {
            let kind: SyntheticKind = kind.parse().map_err(|e: memsvm::Error| BenchError::Config(e.to_string()))?;
            let data = cmd_gen_synthetic(kind, seed, &out)?;
            println!("wrote {} samples to {}", data.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
