use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use iptlink::harness::{
    ber_sweep, emit_sweep_csv, emit_trace_csv, format_number, max_data_rate, run_scenario, ConfigError,
    HarnessError, ScenarioConfig, SweepVar,
};
use iptlink::usart::brg_divisor;

const EXIT_CONFIG: u8 = 1;
const EXIT_NO_RATE: u8 = 2;

#[derive(Parser)]
#[command(name = "iptlink", version, about = "Inductive-link telemetry simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a poll/reply scenario, print the report and write the trace CSV.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "trace.csv")]
        trace: PathBuf,
    },
    /// BER sweep over one variable; CSV table on stdout.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        var: SweepVar,
        /// Comma-separated values in SI units (m, V, bit/s).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        bits: usize,
    },
    /// Fastest bit rate meeting a BER ceiling.
    Maxrate {
        config: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        ber: f64,
        /// Bits per probe.
        #[arg(long, default_value_t = 10_000)]
        bits: usize,
    },
    /// Baud-rate generator divisor for a target rate.
    Brg {
        #[arg(long)]
        fosc: f64,
        #[arg(long)]
        baud: f64,
        #[arg(long)]
        brgh: bool,
        #[arg(long)]
        sync: bool,
    },
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), e.to_string()))?;
    ScenarioConfig::parse(&text)
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Run { config, trace } => {
            let cfg = load(&config)?;
            let (report, traces) = run_scenario(&cfg)?;
            fs::write(&trace, emit_trace_csv(&traces))
                .map_err(|e| ConfigError::new(trace.display().to_string(), e.to_string()))?;
            println!("cycles            {}", report.cycles);
            println!("frames sent       {}", report.frames_sent);
            println!("frames delivered  {}", report.frames_delivered);
            println!("bits sent         {}", report.bits_sent);
            println!("bit errors        {}", report.bit_errors);
            println!("ber               {}", format_number(report.ber));
            println!("fault events      {}", report.fault_events.len());
            for (t, f) in &report.fault_events {
                println!("  t={}s mask={f}", format_number(*t));
            }
            println!("display");
            for line in &report.display {
                println!("  |{line}|");
            }
            println!("trace             {}", trace.display());
        }
        Command::Sweep {
            config,
            var,
            values,
            bits,
        } => {
            let cfg = load(&config)?;
            let results = ber_sweep(&cfg, var, &values, bits)?;
            print!("{}", emit_sweep_csv(&results));
        }
        Command::Maxrate { config, ber, bits } => {
            let cfg = load(&config)?;
            let search = max_data_rate(&cfg, ber, bits)?;
            println!(
                "max rate {} bit/s (resolution {} bit/s, BER <= {ber:e}, {bits} bits/probe)",
                format_number(search.rate),
                format_number(search.resolution)
            );
            for (rate, b) in &search.probes {
                println!("  probe {} bit/s ber {}", format_number(*rate), format_number(*b));
            }
        }
        Command::Brg { fosc, baud, brgh, sync } => {
            let choice = brg_divisor(fosc, baud, sync, brgh).map_err(|e| ConfigError::new("baud", e.to_string()))?;
            println!(
                "X={} actual={:.2} error={:+.2}%",
                choice.spbrg, choice.actual, choice.error_pct
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Config(_) => ExitCode::from(EXIT_CONFIG),
                HarnessError::NoFeasibleRate { .. } => ExitCode::from(EXIT_NO_RATE),
            }
        }
    }
}
