use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use homeostat_cli::commands;
use homeostat_core::scenario::Mode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "homeostat",
    version,
    about = "Behavioral simulator for a homeostatic synaptic-scaling loop"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    /// Integrate the membrane and emit spikes.
    Spiking,
    /// Skip the neuron; report its closed-form rate.
    Fast,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Spiking => Mode::Spiking,
            ModeArg::Fast => Mode::Fast,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one scenario and write the trace as CSV.
    ///
    /// The source is either a scenario JSON file or a builtin name
    /// (fig4: step response; fig5: leakage-slope family, one CSV per
    /// member).
    Run {
        /// Scenario JSON file.
        #[arg(long, value_name = "PATH", conflicts_with = "builtin")]
        scenario: Option<PathBuf>,
        /// Builtin scenario name (fig4 | fig5).
        #[arg(long, value_name = "NAME")]
        builtin: Option<String>,
        /// Override the scenario's neuron mode.
        #[arg(long, value_enum, value_name = "MODE")]
        mode: Option<ModeArg>,
        /// Output CSV path (families write <stem>.s<i>.<ext>).
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Run a scenario once per parameter value, one CSV per member.
    Sweep {
        /// Scenario JSON file; needs --param and --values.
        #[arg(long, value_name = "PATH", conflicts_with = "builtin")]
        scenario: Option<PathBuf>,
        /// Builtin name; fig5 carries its own parameter and values.
        #[arg(long, value_name = "NAME")]
        builtin: Option<String>,
        /// Parameter path to vary, e.g. llc.v_g or comparator.i_ref.
        #[arg(long, value_name = "PATH")]
        param: Option<String>,
        /// Comma-separated values to apply, e.g. 0.8,0.85,0.9.
        #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Override the scenario's neuron mode.
        #[arg(long, value_enum, value_name = "MODE")]
        mode: Option<ModeArg>,
        /// Output CSV path; member i lands at <stem>.s<i>.<ext>.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Derive scenario parameters from measurements and print them as a
    /// JSON fragment.
    Calibrate {
        /// Two firing-rate points "rate@current,rate@current"
        /// (Hz @ A); prints the matching neuron block.
        #[arg(long, value_name = "F@I,F@I", conflicts_with = "slope")]
        rate_points: Option<String>,
        /// Target threshold ramp magnitude in V/s; prints the leakage
        /// gate bias that produces it.
        #[arg(long, value_name = "V_PER_S", allow_hyphen_values = true)]
        slope: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.cmd {
        Cmd::Run {
            scenario,
            builtin,
            mode,
            out,
        } => commands::cmd_run(
            scenario.as_deref(),
            builtin.as_deref(),
            mode.map(Mode::from),
            &out,
        ),
        Cmd::Sweep {
            scenario,
            builtin,
            param,
            values,
            mode,
            out,
        } => commands::cmd_sweep(
            scenario.as_deref(),
            builtin.as_deref(),
            param,
            values,
            mode.map(Mode::from),
            &out,
        ),
        Cmd::Calibrate { rate_points, slope } => {
            commands::cmd_calibrate(rate_points.as_deref(), slope).map(|s| vec![s])
        }
    };

    match result {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
