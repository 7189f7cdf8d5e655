//! Command-line front end: model analysis, simulation dispatch, and the
//! bundled experiments. The binary in `src/bin/crnapprox.rs` is a thin
//! wrapper over [`run`]; tests drive the same code in-process.

pub mod experiments;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crnapprox::coupled::simulate_coupled;
use crnapprox::net::ReactionNetwork;
use crnapprox::trajectory::{SimConfig, Trajectory};
use crnapprox::{models, ModelError, SimError};

/// Top-level command line.
#[derive(Debug, Parser)]
#[command(name = "crnapprox", version, about = "Reaction-network simulation and approximation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report network structure: complexes, linkage classes, deficiency.
    Analyze {
        /// Model JSON file.
        model: PathBuf,
        /// Regenerate the metabolism reaction list with this exchange
        /// parameter before analyzing (metabolism model only).
        #[arg(long)]
        m: Option<u64>,
        /// Emit the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Simulate one trajectory and write it as CSV.
    Simulate {
        /// Model JSON file.
        model: PathBuf,
        /// ssa | ode | em | coupled
        #[arg(long)]
        method: String,
        /// Initial concentrations, comma separated (e.g. `1.0,1.0`).
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Container volume V.
        #[arg(long)]
        volume: f64,
        /// Time horizon T.
        #[arg(long)]
        tmax: f64,
        /// Master seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Euler step for ode/em/coupled.
        #[arg(long)]
        delta: Option<f64>,
        /// Noise grid step for coupled.
        #[arg(long = "Delta")]
        big_delta: Option<f64>,
        /// Regenerate the metabolism reaction list with this exchange
        /// parameter (metabolism model only).
        #[arg(long)]
        m: Option<u64>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a bundled experiment and write its output files.
    Experiment {
        /// metabolism | bistable-basins | kmt-demo | convergence | coupled-demo
        name: String,
        /// Parameter overrides as key=value (documented per experiment).
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

/// Errors mapped to the documented exit codes: 1 usage, 2 model, 3 runtime.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(ModelError),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Model(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Model(e) => write!(f, "model error: {e}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Load a model file, optionally regenerating the metabolism reaction list
/// for a given exchange parameter m.
pub fn load_model(path: &std::path::Path, m: Option<u64>) -> Result<ReactionNetwork, CliError> {
    let network = ReactionNetwork::from_path(path)?;
    match m {
        None => Ok(network),
        Some(m) => {
            if network.name() != "metabolism" {
                return Err(CliError::Usage(format!(
                    "--m applies only to the metabolism model, not `{}`",
                    network.name()
                )));
            }
            Ok(models::metabolism(m))
        }
    }
}

/// The text deficiency report.
pub fn analyze_text(network: &ReactionNetwork) -> String {
    let report = network.deficiency();
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", network.name());
    let _ = writeln!(out, "species: {} ({})", network.dim(), network.species().join(", "));
    let _ = writeln!(out, "reactions: {}", network.num_reactions());
    let _ = writeln!(out, "complexes: {}", report.complexes_count);
    let _ = writeln!(out, "linkage classes: {}", report.linkage_classes);
    let _ = writeln!(out, "stoichiometric dimension: {}", report.stoich_dim);
    let _ = writeln!(out, "deficiency: {}", report.deficiency);
    out
}

/// The JSON deficiency report.
pub fn analyze_json(network: &ReactionNetwork) -> String {
    let report = network.deficiency();
    serde_json::json!({
        "model": network.name(),
        "species": network.species(),
        "reactions": network.num_reactions(),
        "complexes": report.complexes_count,
        "linkage_classes": report.linkage_classes,
        "stoich_dim": report.stoich_dim,
        "deficiency": report.deficiency,
    })
    .to_string()
}

fn parse_x0(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad x0 component `{p}`")))
        })
        .collect()
}

/// Write the coupled pair as one CSV with `<species>_ctmc` and
/// `<species>_diff` columns on the shared grid.
pub fn coupled_csv(ctmc: &Trajectory, diff: &Trajectory) -> String {
    use crnapprox::trajectory::fmt_sig;
    let mut out = String::new();
    let _ = writeln!(out, "# model: {}", ctmc.model);
    let _ = writeln!(out, "# method: coupled");
    let _ = writeln!(out, "# seed: {}", ctmc.seed);
    let _ = writeln!(out, "# V: {}", fmt_sig(ctmc.volume));
    let ctmc_cols: Vec<String> = ctmc.species.iter().map(|s| format!("{s}_ctmc")).collect();
    let diff_cols: Vec<String> = diff.species.iter().map(|s| format!("{s}_diff")).collect();
    let _ = writeln!(out, "t,{},{}", ctmc_cols.join(","), diff_cols.join(","));
    for j in 0..ctmc.len() {
        let _ = write!(out, "{}", fmt_sig(ctmc.times[j]));
        for v in ctmc.state(j).iter().chain(diff.state(j)) {
            let _ = write!(out, ",{}", fmt_sig(*v));
        }
        out.push('\n');
    }
    out
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Execute a parsed command. Returns the text that `analyze` printed (used
/// by tests); simulation/experiment commands return an empty string.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { model, m, json } => {
            let network = load_model(&model, m)?;
            if json {
                println!("{}", analyze_json(&network));
            } else {
                print!("{}", analyze_text(&network));
            }
            Ok(())
        }
        Command::Simulate {
            model,
            method,
            x0,
            volume,
            tmax,
            seed,
            delta,
            big_delta,
            m,
            out,
        } => {
            let network = load_model(&model, m)?;
            let x0 = parse_x0(&x0)?;
            if x0.len() != network.dim() {
                return Err(CliError::Usage(format!(
                    "x0 has {} components, model has {} species",
                    x0.len(),
                    network.dim()
                )));
            }
            let mut config = SimConfig::new(volume, x0, tmax, seed);
            if let Some(d) = delta {
                config.em_step = d;
            }
            if let Some(d) = big_delta {
                config.kmt_step = d;
            }
            let text = match method.as_str() {
                "ssa" => crnapprox::ssa::simulate_ssa(&network, &config)?.to_csv_string(),
                "ode" => crnapprox::continuum::solve_ode(&network, &config)?.to_csv_string(),
                "em" => crnapprox::continuum::simulate_em(&network, &config)?.to_csv_string(),
                "coupled" => {
                    let run = simulate_coupled(&network, &config)?;
                    coupled_csv(&run.ctmc_path, &run.diffusion_path)
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown method `{other}` (expected ssa, ode, em, or coupled)"
                    )))
                }
            };
            emit(&text, out.as_ref())
        }
        Command::Experiment {
            name,
            overrides,
            out_dir,
        } => {
            let spec = experiments::ExperimentSpec::parse(&name, &overrides, out_dir)?;
            experiments::run_experiment(&spec)
        }
    }
}

/// Parse and execute; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, real parse errors are
            // usage errors (exit 1)
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_path(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../models")
            .join(name)
    }

    #[test]
    fn analyze_reports_match_library() {
        let net = load_model(&model_path("metabolism.json"), None).unwrap();
        let text = analyze_text(&net);
        assert!(text.contains("deficiency: 0"), "{text}");
        let net3 = load_model(&model_path("metabolism.json"), Some(3)).unwrap();
        let text3 = analyze_text(&net3);
        assert!(text3.contains("deficiency: 1"), "{text3}");
        let json: serde_json::Value = serde_json::from_str(&analyze_json(&net)).unwrap();
        assert_eq!(json["deficiency"], 0);
        assert_eq!(json["linkage_classes"], 1);
    }

    #[test]
    fn bundled_bistable_parses_to_published_rates() {
        let net = load_model(&model_path("bistable.json"), None).unwrap();
        assert_eq!(net.dim(), 2);
        assert_eq!(net.num_reactions(), 4);
        let rates: Vec<f64> = net.reactions().iter().map(|r| r.rate_constant).collect();
        assert_eq!(rates, vec![8.0, 1.0, 1.0, 1.5]);
    }

    #[test]
    fn m_flag_rejected_for_non_metabolism() {
        let err = load_model(&model_path("bistable.json"), Some(1)).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn round_trip_identity_on_bundled_models() {
        for name in ["metabolism.json", "bistable.json"] {
            let net = load_model(&model_path(name), None).unwrap();
            let back = ReactionNetwork::from_json(&net.to_json()).unwrap();
            assert_eq!(back.name(), net.name());
            assert_eq!(back.species(), net.species());
            assert_eq!(back.reaction_vectors(), net.reaction_vectors());
            assert_eq!(
                back.reactions()
                    .iter()
                    .map(|r| r.rate_constant)
                    .collect::<Vec<_>>(),
                net.reactions()
                    .iter()
                    .map(|r| r.rate_constant)
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn x0_parsing() {
        assert_eq!(parse_x0("1.0, 2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_x0("1.0,abc").is_err());
    }
}
