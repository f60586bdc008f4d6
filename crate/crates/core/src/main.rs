use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};

use molryd::cli::{load_config, run, Mode, RunSpec, Source};
use molryd::model::ModelKind;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Full,
    Effective,
}

/// Simulate molecule-atom Rydberg CNOT gates and write CSV.
#[derive(Debug, Parser)]
#[command(version, group(ArgGroup::new("source").required(true).args(["preset", "config"])))]
struct Args {
    /// Named preset: fig2, fig4, fig5a, fig5b, fig6a or fig6b.
    #[arg(long)]
    preset: Option<String>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fidelity")]
    mode: Mode,
    /// Include Rydberg decay (density-matrix propagation).
    #[arg(long)]
    with_decay: bool,
    #[arg(long, value_enum, default_value = "full")]
    model: Model,
    /// `trigger`, `uniform`, a basis label like `11g`, or `11g:1,11e:-1i`.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Relative integration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let source = match (args.preset, args.config) {
        (Some(p), None) => Source::Preset(p),
        (None, Some(c)) => Source::Config(c),
        _ => unreachable!("clap enforces exactly one source"),
    };
    let result = if args.dump_config {
        load_config(&source).and_then(|c| c.to_json()).map(|s| s + "\n")
    } else {
        let spec = RunSpec {
            source,
            mode: args.mode,
            with_decay: args.with_decay,
            model: match args.model {
                Model::Full => ModelKind::Full,
                Model::Effective => ModelKind::Effective,
            },
            initial: args.initial,
            samples: args.samples,
            tol: args.tol,
        };
        run(&spec)
    };
    let text = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &args.output {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
