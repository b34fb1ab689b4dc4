use std::path::PathBuf;
use std::process::ExitCode;

use causality_lab_cli::config::*;
use causality_lab_cli::manifest::{merge, rows_to_csv, rows_to_table};
use causality_lab_cli::{init_thread_pool, run, write_outputs, CliError};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "causality-lab", version, about = "Screening-off, Bell locality and causal-set growth checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config; subcommand parameters are then taken from the file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Check tolerance; overrides the config's.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for the manifest, residual table and artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output printed to stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file.
    Run,
    /// Stochastic Einstein locality on spacetime lattices.
    #[command(subcommand)]
    Sel(SelCmd),
    /// Common-cause extensions and screening-off.
    #[command(subcommand)]
    Pcc(PccCmd),
    /// Bell locality, CHSH and the four-cause model.
    #[command(subcommand)]
    Bell(BellCmd),
    /// Classical sequential growth of causal sets.
    #[command(subcommand)]
    Causet(CausetCmd),
    /// Merge manifests into one table.
    Report { manifests: Vec<PathBuf> },
}

#[derive(Subcommand)]
enum SelCmd {
    /// SEL conditions on an ensemble file.
    Check {
        #[arg(long)]
        ensemble: Option<PathBuf>,
        /// Local event as JSON: {"region": [[t,x]...], "accept": ["01"...]}.
        #[arg(long)]
        e: Option<String>,
        #[arg(long)]
        f: Option<String>,
        /// Surface heights, one per column.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        surface: Vec<i64>,
        #[arg(long, value_delimiter = ',', value_enum, default_value = "seld1,seld2")]
        conditions: Vec<SelConditionArg>,
    },
    /// Implication sweep over seeded random ensembles.
    Suite {
        #[arg(long, default_value_t = 1000)]
        ensembles: usize,
        #[arg(long)]
        with_bell_embedding: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SelConditionArg {
    Sels,
    Seld1,
    Seld2,
    Ratio,
}

#[derive(Subcommand)]
enum PccCmd {
    /// Extend a family of correlated pairs with common causes.
    Extend {
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Weak and strong common-cause conditions, trivial partitions.
    Check {
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BellCmd {
    /// Locality audit of a hidden-variable model file.
    Audit {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// CHSH value of the singlet.
    Chsh {
        /// a1,a2,b1,b2 in radians.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,
    },
    /// Build the four-cause model for the singlet statistics.
    Szabo {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
enum CausetCmd {
    /// Grow one causet.
    Grow {
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25")]
        q: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        steps: usize,
    },
    /// Growth identities up to a rank.
    Verify {
        #[arg(long, default_value_t = 4)]
        max_rank: usize,
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        random_laws: usize,
    },
    /// Grid search for laws obeying strong SEL.
    StrongSel {
        #[arg(long, default_value_t = 3)]
        max_rank: usize,
        #[arg(long, default_value_t = 0.01)]
        grid: f64,
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
    },
}

fn angles(v: Option<Vec<f64>>) -> Result<Angles, CliError> {
    match v {
        None => Ok(CHSH_ANGLES),
        Some(a) => <Angles>::try_from(a.as_slice())
            .map_err(|_| CliError::Usage(format!("--angles: expected a1,a2,b1,b2, got {} values", a.len()))),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required without --config")))
}

/// Percolation `q_n = 2^-n` through `q_rank`.
fn halving(rank: usize) -> Vec<f64> {
    (0..=rank).map(|n| 0.5f64.powi(n as i32)).collect()
}

fn experiment(cmd: Command) -> Result<(String, Experiment), CliError> {
    Ok(match cmd {
        Command::Sel(SelCmd::Check { ensemble, e, f, surface, conditions }) => {
            let parse = |s: String, flag: &str| {
                serde_json::from_str(&s).map_err(|err| CliError::Usage(format!("--{flag}: {err}")))
            };
            let conditions = conditions
                .into_iter()
                .map(|c| match c {
                    SelConditionArg::Sels => SelCondition::Sels,
                    SelConditionArg::Seld1 => SelCondition::Seld1,
                    SelConditionArg::Seld2 => SelCondition::Seld2,
                    SelConditionArg::Ratio => SelCondition::RatioAssumption,
                })
                .collect();
            (
                "sel-check".into(),
                Experiment::Sel(SelParams::Check {
                    ensemble: required(ensemble, "ensemble")?,
                    e: parse(required(e, "e")?, "e")?,
                    f: f.map(|s| parse(s, "f")).transpose()?,
                    surface,
                    conditions,
                }),
            )
        }
        Command::Sel(SelCmd::Suite { ensembles, with_bell_embedding }) => (
            "sel-suite".into(),
            Experiment::Sel(SelParams::ImplicationSuite { ensembles, with_bell_embedding }),
        ),
        Command::Pcc(PccCmd::Extend { pairs }) => (
            "pcc-extend".into(),
            Experiment::Pcc(PccParams::Extend { family: required(pairs, "pairs")? }),
        ),
        Command::Pcc(PccCmd::Check { pairs }) => (
            "pcc-check".into(),
            Experiment::Pcc(PccParams::Check {
                family: required(pairs, "pairs")?,
                partitions: None,
                common_partition: None,
            }),
        ),
        Command::Bell(BellCmd::Audit { model }) => (
            "bell-audit".into(),
            Experiment::Bell(BellParams::Audit { model: required(model, "model")? }),
        ),
        Command::Bell(BellCmd::Chsh { angles: a }) => {
            ("bell-chsh".into(), Experiment::Bell(BellParams::Chsh { angles: angles(a)? }))
        }
        Command::Bell(BellCmd::Szabo { angles: a }) => (
            "bell-szabo".into(),
            Experiment::Szabo(SzaboParams {
                angles: angles(a)?,
                left_priors: [0.5, 0.5],
                right_priors: [0.5, 0.5],
                solver_seed: 0,
            }),
        ),
        Command::Causet(CausetCmd::Grow { q, steps }) => {
            ("causet-grow".into(), Experiment::Causet(CausetParams::Grow { q, steps }))
        }
        Command::Causet(CausetCmd::Verify { max_rank, q, random_laws }) => {
            let q = if q.is_none() && random_laws == 0 { Some(halving(max_rank)) } else { q };
            (
                "causet-verify".into(),
                Experiment::Causet(CausetParams::Verify {
                    q,
                    random_laws,
                    exact_rank: max_rank,
                    max_rank,
                }),
            )
        }
        Command::Causet(CausetCmd::StrongSel { max_rank, grid, q }) => {
            let divisions = (1.0 / grid).round();
            if !(grid > 0.0 && grid <= 1.0) || (divisions * grid - 1.0).abs() > 1e-9 {
                return Err(CliError::Usage(format!("--grid: {grid} must divide 1")));
            }
            (
                "causet-strong-sel".into(),
                Experiment::Causet(CausetParams::StrongSel {
                    max_rank,
                    divisions: divisions as u32,
                    q,
                }),
            )
        }
        Command::Run | Command::Report { .. } => unreachable!("handled before dispatch"),
    })
}

fn expected_kind(cmd: &Command) -> Option<&'static str> {
    match cmd {
        Command::Sel(_) => Some("sel"),
        Command::Pcc(_) => Some("pcc"),
        Command::Bell(BellCmd::Szabo { .. }) => Some("szabo"),
        Command::Bell(_) => Some("bell"),
        Command::Causet(_) => Some("causet"),
        Command::Run | Command::Report { .. } => None,
    }
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    init_thread_pool()?;
    let g = cli.global;
    if let Command::Report { manifests } = &cli.command {
        if manifests.is_empty() {
            return Err(CliError::Usage("report needs at least one manifest".into()));
        }
        let rows = merge(manifests)?;
        match g.format.unwrap_or(Format::Table) {
            Format::Table => print!("{}", rows_to_table(&rows)),
            Format::Csv => print!("{}", rows_to_csv(&rows)),
            Format::Json => println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize")),
        }
        return Ok(rows.iter().all(|r| r.met));
    }
    let mut cfg = match (&g.config, &cli.command) {
        (Some(path), cmd) => {
            let cfg = ExperimentConfig::load(path)?;
            if let Some(kind) = expected_kind(cmd) {
                if cfg.experiment.kind() != kind {
                    return Err(CliError::Usage(format!(
                        "{}: kind {:?} does not match this subcommand ({kind})",
                        path.display(),
                        cfg.experiment.kind()
                    )));
                }
            }
            cfg
        }
        (None, Command::Run) => return Err(CliError::Usage("run needs --config FILE".into())),
        (None, _) => {
            let (name, experiment) = experiment(cli.command)?;
            ExperimentConfig {
                name,
                seed: 0,
                tolerance: 1e-9,
                experiment,
                expect: Default::default(),
                output: None,
            }
        }
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.tol {
        cfg.tolerance = t;
    }
    if g.out.is_some() {
        cfg.output = g.out;
    }
    let out = run(&cfg)?;
    if let Some(dir) = &cfg.output {
        write_outputs(dir, &out)?;
    }
    match g.format.unwrap_or(Format::Json) {
        Format::Json => print!("{}", out.manifest.to_json_string()),
        Format::Csv => print!("{}", rows_to_csv(&out.manifest.rows())),
        Format::Table => print!("{}", rows_to_table(&out.manifest.rows())),
    }
    let unmet = out.manifest.checks.iter().filter(|c| !c.met).count();
    eprintln!(
        "{}: {} checks, {} unmet, {} ms",
        out.manifest.run_id,
        out.manifest.checks.len(),
        unmet,
        out.timing.wall_time_ms
    );
    Ok(out.manifest.expectations_met)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
