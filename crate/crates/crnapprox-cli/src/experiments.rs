//! Bundled experiments: trajectory comparisons on the metabolism model,
//! basin statistics on the bistable model, the worked noise-coupling
//! example, and the convergence studies. All outputs are seeded CSVs that
//! reproduce byte-identically; wall-clock timing files are the only
//! exception.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crnapprox::continuum::{classify_basin, simulate_em_final, solve_ode, simulate_em};
use crnapprox::coupled::{simulate_coupled, sup_distance_study};
use crnapprox::kmt::{assemble_paired_paths, build_dyadic_sums, kmt_transform, DyadicIncrements, TOY_NORMALS};
use crnapprox::models;
use crnapprox::ssa::{simulate_ssa, simulate_ssa_final};
use crnapprox::stats;
use crnapprox::trajectory::{fmt_sig, SimConfig};

use crate::CliError;

/// A recognized experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentName {
    Metabolism,
    BistableBasins,
    KmtDemo,
    Convergence,
    CoupledDemo,
}

impl ExperimentName {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "metabolism" => ExperimentName::Metabolism,
            "bistable-basins" => ExperimentName::BistableBasins,
            "kmt-demo" => ExperimentName::KmtDemo,
            "convergence" => ExperimentName::Convergence,
            "coupled-demo" => ExperimentName::CoupledDemo,
            _ => return None,
        })
    }

    /// Override keys each experiment documents.
    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            ExperimentName::Metabolism => &["volume", "seed", "tmax", "delta"],
            ExperimentName::BistableBasins => &["volume", "seed", "tmax", "delta", "reps"],
            ExperimentName::KmtDemo => &[],
            ExperimentName::Convergence => &["seed", "tmax", "seeds"],
            ExperimentName::CoupledDemo => &["volume", "seed"],
        }
    }
}

/// A validated experiment request.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub overrides: BTreeMap<String, f64>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn parse(name: &str, overrides: &[String], out_dir: PathBuf) -> Result<Self, CliError> {
        let name = ExperimentName::parse(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown experiment `{name}` (expected metabolism, bistable-basins, kmt-demo, convergence, or coupled-demo)"
            ))
        })?;
        let mut map = BTreeMap::new();
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override `{item}` is not key=value")))?;
            if !name.allowed_keys().contains(&k) {
                return Err(CliError::Usage(format!(
                    "unknown override `{k}` (allowed: {})",
                    name.allowed_keys().join(", ")
                )));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| CliError::Usage(format!("override `{item}` has a non-numeric value")))?;
            map.insert(k.to_string(), v);
        }
        Ok(ExperimentSpec {
            name,
            overrides: map,
            out_dir,
        })
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.overrides.get(key).copied().unwrap_or(default)
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    fs::create_dir_all(&spec.out_dir)?;
    match spec.name {
        ExperimentName::Metabolism => metabolism_experiment(spec),
        ExperimentName::BistableBasins => bistable_basins_experiment(spec),
        ExperimentName::KmtDemo => kmt_demo_experiment(spec),
        ExperimentName::Convergence => convergence_experiment(spec),
        ExperimentName::CoupledDemo => coupled_demo_experiment(spec),
    }
}

/// SSA, ODE, and EM trajectories of the metabolism model for m in {0, 3}.
fn metabolism_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    let volume = spec.get("volume", 600.0);
    let seed = spec.get("seed", 1.0) as u64;
    let tmax = spec.get("tmax", 5.0);
    let delta = spec.get("delta", 1e-3);
    let mut timings = Vec::new();
    for m in [0u64, 3] {
        let network = models::metabolism(m);
        let mut config = SimConfig::new(volume, vec![1.0, 1.0], tmax, seed);
        config.em_step = delta;
        let t0 = Instant::now();
        let ssa = simulate_ssa(&network, &config)?;
        timings.push((format!("ssa_m{m}"), t0.elapsed().as_secs_f64()));
        let ode = solve_ode(&network, &config)?;
        let t0 = Instant::now();
        let em = simulate_em(&network, &config)?;
        timings.push((format!("em_m{m}"), t0.elapsed().as_secs_f64()));
        write_file(&spec.out_dir, &format!("metabolism_m{m}_ssa.csv"), &ssa.to_csv_string())?;
        write_file(&spec.out_dir, &format!("metabolism_m{m}_ode.csv"), &ode.to_csv_string())?;
        write_file(&spec.out_dir, &format!("metabolism_m{m}_em.csv"), &em.to_csv_string())?;
    }
    write_timings(&spec.out_dir, &timings)
}

/// One row of the bistable basin table.
#[derive(Debug, Clone)]
pub struct BasinRow {
    pub x0: f64,
    pub y0: f64,
    pub ssa_fraction: f64,
    pub em_fraction: f64,
}

/// Basin fractions and wall-clock totals for the 3x3 grid of initial points.
#[derive(Debug, Clone)]
pub struct BasinStudy {
    pub rows: Vec<BasinRow>,
    pub reps: u64,
    pub ssa_seconds: f64,
    pub em_seconds: f64,
}

/// Fraction of replications attracted to the extinction state (nearest
/// steady state at time `tmax` is the origin), per initial point and
/// method. This fraction decreases in both coordinates of the initial
/// point.
pub fn bistable_basin_study(
    volume: f64,
    reps: u64,
    tmax: f64,
    delta: f64,
    seed: u64,
) -> Result<BasinStudy, CliError> {
    let network = models::bistable();
    let steady: Vec<Vec<f64>> = models::bistable_steady_states(8.0, 1.0, 1.5)
        .iter()
        .map(|s| s.to_vec())
        .collect();
    let extinct = 0usize;
    let grid_x = [1.95, 2.00, 2.05];
    let grid_y = [0.45, 0.50, 0.55];
    let mut rows = Vec::new();
    let mut ssa_seconds = 0.0;
    let mut em_seconds = 0.0;
    let mut cell = 0u64;
    for &x0 in &grid_x {
        for &y0 in &grid_y {
            let base = seed + cell * 2 * reps;
            let mut ssa_hits = 0u64;
            let t0 = Instant::now();
            for r in 0..reps {
                let config = SimConfig::new(volume, vec![x0, y0], tmax, base + r);
                let state = simulate_ssa_final(&network, &config)?;
                if classify_basin(&state, &steady) == extinct {
                    ssa_hits += 1;
                }
            }
            ssa_seconds += t0.elapsed().as_secs_f64();
            let mut em_hits = 0u64;
            let t0 = Instant::now();
            for r in 0..reps {
                let mut config = SimConfig::new(volume, vec![x0, y0], tmax, base + reps + r);
                config.em_step = delta;
                let state = simulate_em_final(&network, &config)?;
                if classify_basin(&state, &steady) == extinct {
                    em_hits += 1;
                }
            }
            em_seconds += t0.elapsed().as_secs_f64();
            rows.push(BasinRow {
                x0,
                y0,
                ssa_fraction: ssa_hits as f64 / reps as f64,
                em_fraction: em_hits as f64 / reps as f64,
            });
            cell += 1;
        }
    }
    Ok(BasinStudy {
        rows,
        reps,
        ssa_seconds,
        em_seconds,
    })
}

pub fn basin_csv(study: &BasinStudy) -> String {
    let mut out = String::from("x0,y0,ssa_fraction,em_fraction,replications\n");
    for r in &study.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(r.x0),
            fmt_sig(r.y0),
            fmt_sig(r.ssa_fraction),
            fmt_sig(r.em_fraction),
            study.reps
        );
    }
    out
}

fn bistable_basins_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    let study = bistable_basin_study(
        spec.get("volume", 100.0),
        spec.get("reps", 10_000.0) as u64,
        spec.get("tmax", 20.0),
        spec.get("delta", 5e-3),
        spec.get("seed", 1.0) as u64,
    )?;
    write_file(&spec.out_dir, "basins.csv", &basin_csv(&study))?;
    write_timings(
        &spec.out_dir,
        &[
            ("ssa".to_string(), study.ssa_seconds),
            ("em".to_string(), study.em_seconds),
        ],
    )
}

/// The worked 16-increment example: block sums, transformed count matrix,
/// and the assembled paired paths.
fn kmt_demo_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    let normals = DyadicIncrements::new(1.0, TOY_NORMALS.to_vec())
        .expect("toy input is a valid dyadic block");
    let sums = build_dyadic_sums(&normals);
    let poissons = kmt_transform(&normals)?;
    let count_sums = build_dyadic_sums(&poissons);
    let paired = assemble_paired_paths(&normals, &poissons)?;

    let matrix_csv = |matrix: Vec<Vec<f64>>, first_row: usize| {
        let mut out = String::from("row,values...\n");
        for (i, row) in matrix.into_iter().enumerate() {
            let _ = write!(out, "{}", i + first_row);
            for v in row {
                let _ = write!(out, ",{}", fmt_sig(v));
            }
            out.push('\n');
        }
        out
    };
    write_file(&spec.out_dir, "vtilde.csv", &matrix_csv(sums.vtilde_matrix(), 1))?;
    write_file(&spec.out_dir, "u_matrix.csv", &matrix_csv(count_sums.v_matrix(), 0))?;

    let mut paths = String::from("k,t,N,W\n");
    for (k, (n, w)) in paired
        .poisson_path
        .iter()
        .zip(&paired.wiener_path)
        .enumerate()
    {
        let _ = writeln!(paths, "{k},{},{},{}", fmt_sig(k as f64 * paired.delta), fmt_sig(*n), fmt_sig(*w));
    }
    write_file(&spec.out_dir, "paths.csv", &paths)
}

/// Median sup-norm distance of SSA trajectories from the fluid limit, per
/// volume.
pub fn fluid_limit_study(
    volumes: &[f64],
    n_seeds: u64,
    tmax: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>, CliError> {
    let network = models::metabolism(0);
    let mut rows = Vec::new();
    for &v in volumes {
        let config = SimConfig::new(v, vec![1.0, 1.0], tmax, seed);
        let ode = solve_ode(&network, &config)?;
        let mut sups = Vec::new();
        for s in 0..n_seeds {
            let mut c = config.clone();
            c.seed = seed + s;
            let ssa = simulate_ssa(&network, &c)?;
            sups.push(ssa.sup_distance(&ode));
        }
        rows.push((v, stats::median(&sups)));
    }
    Ok(rows)
}

fn convergence_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    let seed = spec.get("seed", 1.0) as u64;
    let n_seeds = spec.get("seeds", 20.0) as u64;

    let fluid = fluid_limit_study(&[100.0, 1000.0, 10000.0], n_seeds, spec.get("tmax", 5.0), seed)?;
    let mut csv = String::from("V,median_sup,seeds\n");
    for (v, med) in &fluid {
        let _ = writeln!(csv, "{},{},{n_seeds}", fmt_sig(*v), fmt_sig(*med));
    }
    write_file(&spec.out_dir, "fluid.csv", &csv)?;

    let network = models::metabolism(0);
    let mut template = SimConfig::new(0.0, vec![1.0, 1.0], 1.0, seed);
    template.em_step = 1e-2;
    let rows = sup_distance_study(&network, &template, &[200.0, 400.0, 800.0], n_seeds)?;
    let mut csv = String::from("V,median_sup_distance,seeds\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_sig(r.volume),
            fmt_sig(r.median_sup_distance),
            r.seeds
        );
    }
    write_file(&spec.out_dir, "coupling.csv", &csv)
}

/// Single coupled runs on both example models.
fn coupled_demo_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    let seed = spec.get("seed", 1.0) as u64;

    let network = models::metabolism(3);
    let volume = spec.get("volume", 600.0);
    let mut config = SimConfig::new(volume, vec![1.0, 1.0], 2.0, seed);
    config.em_step = 1e-3;
    let run = simulate_coupled(&network, &config)?;
    write_file(
        &spec.out_dir,
        "metabolism_coupled.csv",
        &crate::coupled_csv(&run.ctmc_path, &run.diffusion_path),
    )?;

    let network = models::bistable();
    let mut config = SimConfig::new(spec.get("volume", 100.0), vec![2.0, 0.5], 3.5, seed);
    config.em_step = 1e-3;
    config.domain_upper_bounds = Some(vec![8.0, 6.0]);
    let run = simulate_coupled(&network, &config)?;
    write_file(
        &spec.out_dir,
        "bistable_coupled.csv",
        &crate::coupled_csv(&run.ctmc_path, &run.diffusion_path),
    )
}

/// Wall-clock CSV. When both `ssa` and `em` rows are present the EM/SSA
/// ratio is appended as a comment; absolute times are hardware-dependent
/// and only the ordering is meaningful.
pub fn write_timings(dir: &Path, timings: &[(String, f64)]) -> Result<(), CliError> {
    let mut out = String::from("method,seconds\n");
    for (name, secs) in timings {
        let _ = writeln!(out, "{name},{}", fmt_sig(*secs));
    }
    let ssa = timings.iter().find(|(n, _)| n == "ssa").map(|(_, s)| *s);
    let em = timings.iter().find(|(n, _)| n == "em").map(|(_, s)| *s);
    if let (Some(ssa), Some(em)) = (ssa, em) {
        if ssa > 0.0 {
            let _ = writeln!(out, "# em/ssa ratio: {}", fmt_sig(em / ssa));
        }
    }
    write_file(dir, "timings.csv", &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing_validates_names_and_keys() {
        let ok = ExperimentSpec::parse("metabolism", &["volume=300".to_string()], "o".into());
        assert!(ok.is_ok());
        let bad_name = ExperimentSpec::parse("nope", &[], "o".into());
        assert!(matches!(bad_name, Err(CliError::Usage(_))));
        let bad_key = ExperimentSpec::parse("metabolism", &["reps=3".to_string()], "o".into());
        assert!(matches!(bad_key, Err(CliError::Usage(_))));
        let bad_value = ExperimentSpec::parse("metabolism", &["volume=x".to_string()], "o".into());
        assert!(matches!(bad_value, Err(CliError::Usage(_))));
    }

    #[test]
    fn basin_study_small_smoke() {
        let study = bistable_basin_study(50.0, 20, 5.0, 5e-3, 7).unwrap();
        assert_eq!(study.rows.len(), 9);
        for r in &study.rows {
            assert!((0.0..=1.0).contains(&r.ssa_fraction));
            assert!((0.0..=1.0).contains(&r.em_fraction));
        }
        assert!(study.ssa_seconds > 0.0 && study.em_seconds > 0.0);
    }

    #[test]
    fn timings_csv_reports_ratio() {
        let dir = std::env::temp_dir().join("crnapprox-timings-test");
        fs::create_dir_all(&dir).unwrap();
        write_timings(&dir, &[("ssa".to_string(), 2.0), ("em".to_string(), 1.0)]).unwrap();
        let text = fs::read_to_string(dir.join("timings.csv")).unwrap();
        assert!(text.contains("# em/ssa ratio: 0.5"), "{text}");
    }
}
