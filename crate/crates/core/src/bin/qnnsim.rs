use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qnnsim::scenario::{
    parse_number, parse_scenario, preset, preset_sweeps, run_scenario, run_sweep, serialize_scenario, RunReport,
    ScenarioConfig, SweepParam, SweepReport, SweepSpec, PRESET_NAMES,
};
use qnnsim::{Error, Result};

#[derive(Parser)]
#[command(name = "qnnsim", version, about = "Collision-model simulator for a qubit perceptron")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Outputs to write; the CSV trace is always written.
        #[arg(long, value_delimiter = ',', default_value = "csv")]
        emit: Vec<Emit>,
    },
    /// Run a built-in figure preset together with its sweeps.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "csv")]
        emit: Vec<Emit>,
    },
    /// Run one scenario per parameter value and aggregate the steady values.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// For example reservoir.1.j_su_ratio or topology.coupling_offset.0.
        #[arg(long)]
        param: String,
        /// Comma-separated numbers; `pi` and `*`, `/` are allowed.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Steady values to collect; defaults to every tracked metric.
        #[arg(long, value_delimiter = ',')]
        reduce: Vec<String>,
    },
    /// Print the preset names.
    ListPresets,
    /// Parse and validate a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let bytes = fs::read(path).map_err(|e| Error::Io {
        context: format!("reading {}", path.display()),
        source: e,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let offset = e.utf8_error().valid_up_to();
        let line = e.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::Syntax {
            line,
            msg: "file is not valid UTF-8".into(),
        }
    })?;
    parse_scenario(&text)
}

fn print_run(r: &RunReport) {
    match r.steady.steady_step {
        Some(step) if r.steady.converged => println!("{}: steady from step {step}", r.scenario),
        _ => println!("{}: no steady state within the run", r.scenario),
    }
    for (k, v) in &r.steady.steady_values {
        println!("  {k} = {v:.6}");
    }
    for (k, v) in &r.final_fidelities {
        println!("  final fidelity to {k} = {v:.6}");
    }
    for f in &r.files {
        println!("  wrote {}", f.display());
    }
}

fn print_sweep(r: &SweepReport) {
    println!("{}: sweep over {}", r.scenario, r.param);
    for row in &r.rows {
        let values: Vec<String> = row.steady_values.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
        match &row.error {
            Some(e) => println!("  {} failed: {e}", row.value),
            None => println!("  {} {}", row.value, values.join(" ")),
        }
    }
    for (k, d) in &r.chord_deviation {
        println!("  max chord deviation of {k} = {d:.6}");
    }
    for f in &r.files {
        println!("  wrote {}", f.display());
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { scenario, out, emit } => {
            let config = load(&scenario)?;
            print_run(&run_scenario(&config, &out, emit.contains(&Emit::Svg))?);
        }
        Command::Preset { name, out, emit } => {
            let config = preset(&name)?;
            let report = run_scenario(&config, &out, emit.contains(&Emit::Svg))?;
            let scenario_file = out.join(format!("{name}.qnn"));
            fs::write(&scenario_file, serialize_scenario(&config)).map_err(|e| Error::Io {
                context: format!("writing {}", scenario_file.display()),
                source: e,
            })?;
            print_run(&report);
            println!("  wrote {}", scenario_file.display());
            for (panel, sweep) in preset_sweeps(&name)? {
                let mut variant = config.clone();
                variant.name = format!("{name}-{panel}");
                print_sweep(&run_sweep(&variant, &sweep, &out)?);
            }
        }
        Command::Sweep {
            scenario,
            param,
            values,
            out,
            reduce,
        } => {
            let config = load(&scenario)?;
            let values = values
                .iter()
                .map(|v| parse_number(v).map_err(|m| Error::InvalidParameter(format!("--values: {m}"))))
                .collect::<Result<Vec<_>>>()?;
            let spec = SweepSpec::new(SweepParam::parse(&param)?, values, reduce)?;
            print_sweep(&run_sweep(&config, &spec, &out)?);
        }
        Command::ListPresets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
        }
        Command::Validate { scenario } => {
            let config = load(&scenario)?;
            println!("{}: ok", config.name);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
