use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcf_cli::builtin;
use dcf_cli::commands::{
    model_tables, optimize_tables, parse_queue, simulate_tables, sweep_tables, SimSettings, Sweep,
};
use dcf_cli::report::{write_csv, write_file, Provenance, Table};
use dcf_cli::reproduce::{reproduce, Target};
use dcf_cli::scenario_file::{read_scenario, write_scenario};
use dcf_cli::CliError;
use dcf_core::dcf_sim::QueueDiscipline;
use dcf_core::{Criterion, Scenario};

#[derive(Parser)]
#[command(
    name = "dcf-fair",
    version,
    about = "Multirate 802.11 DCF model, fairness optimizer and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium for a scenario.
    Model {
        #[command(flatten)]
        common: Common,
    },
    /// Compute fair contention windows for a scenario.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CriterionArg::Mlpf)]
        criterion: CriterionArg,
        /// Also simulate the rounded windows.
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run the slot-level simulator.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Regenerate the figure and table data.
    Reproduce {
        /// fig1A, fig1B, fig2, table1 or all.
        target: Target,
        /// Output directory for the CSV files.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Args)]
struct Common {
    /// `builtin:A`, `builtin:B`, `builtin:fig2` or a scenario file.
    #[arg(long, default_value = "builtin:A")]
    scenario: String,
    /// Write CSV files and the resolved scenario here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `station:field:start:stop:points[:log]`, field one of lambda,
    /// bit_rate, payload, w0, pe.
    #[arg(long)]
    sweep: Option<Sweep>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Simulated seconds per replication.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// latch, head-only or buffered.
    #[arg(long, default_value = "latch", value_parser = parse_queue)]
    queue: QueueDiscipline,
}

impl SimArgs {
    fn settings(&self) -> SimSettings {
        SimSettings {
            seed: self.seed,
            duration: self.duration,
            reps: self.reps,
            queue: self.queue,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Pf,
    Lpf,
    Mlpf,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Pf => Criterion::Pf,
            CriterionArg::Lpf => Criterion::Lpf,
            CriterionArg::Mlpf => Criterion::Mlpf,
        }
    }
}

fn load_scenario(arg: &str) -> Result<Scenario, CliError> {
    match arg.strip_prefix("builtin:") {
        Some(name) => builtin::by_name(name).ok_or_else(|| {
            CliError::Usage(format!("unknown built-in scenario {name:?} (A, B, fig2)"))
        }),
        None => Ok(read_scenario(Path::new(arg))?),
    }
}

fn emit(
    tables: &[Table],
    out: Option<&Path>,
    prov: &Provenance,
    sc: &Scenario,
) -> Result<(), CliError> {
    for t in tables {
        // The raw replication dump is for files only.
        if !t.name.starts_with("sim_raw") {
            print!("{}", t.render());
        }
    }
    if let Some(dir) = out {
        write_file(&dir.join("scenario.toml"), write_scenario(sc).as_bytes())?;
        for t in tables {
            let path = write_csv(dir, t, prov)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run_common<F>(
    common: &Common,
    command: String,
    seed: Option<u64>,
    run: F,
) -> Result<(), CliError>
where
    F: Fn(&Scenario) -> Result<Vec<Table>, CliError> + Sync,
{
    let sc = load_scenario(&common.scenario)?;
    let tables = match &common.sweep {
        Some(sweep) => sweep_tables(&sc, sweep, &run)?,
        None => run(&sc)?,
    };
    let mut prov = Provenance::new(command, seed, &[&sc]);
    if let Some(sweep) = &common.sweep {
        prov = prov.with_note(format!("sweep {sweep}"));
    }
    if sc.label == "B" {
        prov = prov.with_note(builtin::SCENARIO_B_NOTE);
    }
    emit(&tables, common.out.as_deref(), &prov, &sc)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Model { common } => {
            let cmd = format!("model --scenario {}", common.scenario);
            run_common(&common, cmd, None, model_tables)
        }
        Command::Optimize {
            common,
            criterion,
            simulate,
            sim,
        } => {
            let criterion = Criterion::from(criterion);
            let settings = sim.settings();
            let cmd = format!(
                "optimize --scenario {} --criterion {}",
                common.scenario,
                criterion.label()
            );
            let (cmd, seed) = if simulate {
                (
                    format!("{cmd} --simulate; {}", settings.describe()),
                    Some(settings.seed),
                )
            } else {
                (cmd, None)
            };
            run_common(&common, cmd, seed, |sc| {
                optimize_tables(sc, criterion, simulate.then_some(&settings))
            })
        }
        Command::Simulate { common, sim } => {
            let settings = sim.settings();
            let cmd = format!(
                "simulate --scenario {}; {}",
                common.scenario,
                settings.describe()
            );
            run_common(&common, cmd, Some(settings.seed), |sc| {
                simulate_tables(sc, &settings)
            })
        }
        Command::Reproduce { target, out, sim } => {
            for art in reproduce(target, &sim.settings())? {
                print!("{}", art.table.render());
                let path = art.write(&out)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dcf-fair: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
