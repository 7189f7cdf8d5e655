//! Paired trajectories of the jump process and its diffusion approximation
//! driven by the same noise. Each reaction channel gets one pre-generated
//! pair of coupled unit-rate Poisson and drifted-Wiener paths; both state
//! processes read their increments through per-channel random time changes,
//! discretized with an Euler step.

use crate::error::SimError;
use crate::kmt::{generate_paired_noise, PairedNoise};
use crate::net::ReactionNetwork;
use crate::rng::stream_rng;
use crate::ssa::initial_counts;
use crate::trajectory::{Method, SimConfig, Trajectory};

/// One coupled run: the count path (scaled by 1/V), the diffusion path, the
/// shared per-channel noise, the sup-norm distance over the common grid, and
/// the first time either path left the domain box.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub ctmc_path: Trajectory,
    pub diffusion_path: Trajectory,
    pub noise: Vec<PairedNoise>,
    pub sup_distance: f64,
    pub exit_time: Option<f64>,
}

/// One row of a [`sup_distance_study`] table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StudyRow {
    pub volume: f64,
    pub median_sup_distance: f64,
    pub seeds: u64,
}

/// Nearest grid index for internal time `tau`, ties toward the smaller
/// index. Monotone in `tau`, so increments read from the paths never run
/// backwards.
fn grid_index(tau: f64, delta: f64) -> usize {
    let r = tau / delta;
    let fl = r.floor();
    let idx = if r - fl > 0.5 { fl + 1.0 } else { fl };
    idx.max(0.0) as usize
}

/// Domain box upper corner: configured bounds, or per species
/// max(2 x0_i, x0_i + 1).
fn upper_bounds(config: &SimConfig) -> Vec<f64> {
    match &config.domain_upper_bounds {
        Some(ub) => ub.clone(),
        None => config
            .x0
            .iter()
            .map(|&x| (2.0 * x).max(x + 1.0))
            .collect(),
    }
}

/// Domain box lower corner: configured bounds, or 0 per species.
fn lower_bounds(config: &SimConfig) -> Vec<f64> {
    match &config.domain_lower_bounds {
        Some(lb) => lb.clone(),
        None => vec![0.0; config.x0.len()],
    }
}

/// Pre-generate per-channel noise. The horizon per channel is
/// safety * V * T * f_l(upper corner); mass-action rates are monotone in
/// each coordinate, so the corner bounds the rate over the whole box. The
/// grid step starts at `kmt_step` and is coarsened when the dyadic block
/// would exceed `max_noise_len`.
fn generate_channel_noise(
    network: &ReactionNetwork,
    config: &SimConfig,
    ub: &[f64],
) -> Result<Vec<PairedNoise>, SimError> {
    let mut noise = Vec::with_capacity(network.num_reactions());
    for l in 0..network.num_reactions() {
        let f_bar = network.density_rate_clamped(l, ub);
        let horizon = (config.noise_safety * config.volume * config.t_max * f_bar).max(0.0);
        let mut delta = config.kmt_step;
        let wanted = (horizon / delta).ceil().max(2.0) as usize;
        let mut n = wanted.next_power_of_two();
        if n > config.max_noise_len {
            n = config.max_noise_len;
            delta = horizon / n as f64;
        }
        let mut rng = stream_rng(config.seed, l as u64 + 1);
        noise.push(generate_paired_noise(n, delta, &mut rng, format!("r{l}"))?);
    }
    Ok(noise)
}

/// Simulate the coupled pair on the Euler grid with step `em_step`.
///
/// Per step and channel, each path accumulates its own internal time
/// tau += delta_t * V * f_l(own state), rounds it to the noise grid, and
/// adds (l/V) times the increment of its path since the previous lookup.
/// Drift is embedded in the Wiener path, so no separate drift term appears.
/// The run stops early when either path leaves the domain box, recording
/// `exit_time`.
pub fn simulate_coupled(
    network: &ReactionNetwork,
    config: &SimConfig,
) -> Result<CoupledRun, SimError> {
    config.validate()?;
    let v = config.volume;
    let ub = upper_bounds(config);
    let lb = lower_bounds(config);
    let noise = generate_channel_noise(network, config, &ub)?;
    let nr = network.num_reactions();
    let vectors = network.reaction_vectors();

    let mut counts = initial_counts(&config.x0, v)?;
    let mut x: Vec<f64> = counts.iter().map(|&c| c as f64 / v).collect();
    let mut y = x.clone();

    let mut ctmc = Trajectory::new(
        network.dim(),
        Method::CoupledSsa,
        v,
        config.seed,
        network.name(),
        network.species().to_vec(),
    );
    let mut diff = Trajectory::new(
        network.dim(),
        Method::CoupledEm,
        v,
        config.seed,
        network.name(),
        network.species().to_vec(),
    );
    ctmc.push(0.0, &x);
    diff.push(0.0, &y);

    let mut tau_x = vec![0.0f64; nr];
    let mut tau_y = vec![0.0f64; nr];
    let mut idx_x = vec![0usize; nr];
    let mut idx_y = vec![0usize; nr];
    let mut sup_distance: f64 = 0.0;
    let mut exit_time = None;

    let steps = (config.t_max / config.em_step).ceil() as u64;
    let mut t = 0.0;
    for j in 1..=steps {
        let t_next = (j as f64 * config.em_step).min(config.t_max);
        let h = t_next - t;
        t = t_next;
        for l in 0..nr {
            // jump side: exact rate at the current counts
            let rate_x = network.exact_rate_unchecked(l, &counts, v);
            tau_x[l] += h * rate_x;
            let nx = grid_index(tau_x[l], noise[l].delta);
            if nx >= noise[l].poisson_path.len() {
                return Err(SimError::NoiseHorizonExceeded {
                    channel: l,
                    required: tau_x[l],
                    available: noise[l].horizon(),
                });
            }
            let dn = noise[l].poisson_path[nx] - noise[l].poisson_path[idx_x[l]];
            idx_x[l] = nx;
            if dn != 0.0 {
                let events = dn as i64;
                for (c, &li) in counts.iter_mut().zip(&vectors[l]) {
                    *c += li * events;
                }
            }

            // diffusion side: density rate at its own state
            let rate_y = v * network.density_rate_clamped(l, &y);
            tau_y[l] += h * rate_y;
            let ny = grid_index(tau_y[l], noise[l].delta);
            if ny >= noise[l].wiener_path.len() {
                return Err(SimError::NoiseHorizonExceeded {
                    channel: l,
                    required: tau_y[l],
                    available: noise[l].horizon(),
                });
            }
            let dw = noise[l].wiener_path[ny] - noise[l].wiener_path[idx_y[l]];
            idx_y[l] = ny;
            if dw != 0.0 {
                for (yi, &li) in y.iter_mut().zip(&vectors[l]) {
                    *yi += li as f64 / v * dw;
                }
            }
        }
        for (xi, &c) in x.iter_mut().zip(&counts) {
            *xi = c as f64 / v;
        }
        ctmc.push(t, &x);
        diff.push(t, &y);
        let dist = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        sup_distance = sup_distance.max(dist);
        let left = |s: &[f64]| {
            s.iter()
                .zip(&lb)
                .zip(&ub)
                .any(|((&si, &li), &ui)| si < li || si > ui)
        };
        if left(&x) || left(&y) {
            exit_time = Some(t);
            break;
        }
    }

    Ok(CoupledRun {
        ctmc_path: ctmc,
        diffusion_path: diff,
        noise,
        sup_distance,
        exit_time,
    })
}

/// Median sup-norm coupling distance per volume, over `n_seeds` independent
/// runs seeded `template.seed .. template.seed + n_seeds`. Distances are the
/// pre-exit sup distances of each run.
pub fn sup_distance_study(
    network: &ReactionNetwork,
    template: &SimConfig,
    volumes: &[f64],
    n_seeds: u64,
) -> Result<Vec<StudyRow>, SimError> {
    if volumes.is_empty() {
        return Err(SimError::EmptyInput("volumes"));
    }
    if n_seeds == 0 {
        return Err(SimError::EmptyInput("seeds"));
    }
    let mut sorted = volumes.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN volume"));
    let mut rows = Vec::with_capacity(sorted.len());
    for &v in &sorted {
        let mut distances = Vec::with_capacity(n_seeds as usize);
        for s in 0..n_seeds {
            let mut config = template.clone();
            config.volume = v;
            config.seed = template.seed + s;
            let run = simulate_coupled(network, &config)?;
            distances.push(run.sup_distance);
        }
        rows.push(StudyRow {
            volume: v,
            median_sup_distance: crate::stats::median(&distances),
            seeds: n_seeds,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::net::{RateConvention, Reaction, ReactionNetwork};
    use crate::ssa::simulate_ssa_final;
    use crate::stats::ks_two_sample;
    use std::collections::BTreeMap;

    fn pure_birth() -> ReactionNetwork {
        let mut products = BTreeMap::new();
        products.insert("X".to_string(), 1);
        ReactionNetwork::new(
            "birth",
            vec!["X".to_string()],
            vec![Reaction {
                reactants: BTreeMap::new(),
                products,
                rate_constant: 1.0,
            }],
            RateConvention::Absorbed,
        )
        .unwrap()
    }

    #[test]
    fn empty_network_paths_are_constant() {
        let net = ReactionNetwork::new(
            "inert",
            vec!["X".to_string(), "Y".to_string()],
            vec![],
            RateConvention::Absorbed,
        )
        .unwrap();
        let config = SimConfig::new(50.0, vec![0.3, 0.7], 1.0, 4);
        let run = simulate_coupled(&net, &config).unwrap();
        assert_eq!(run.sup_distance, 0.0);
        assert!(run.exit_time.is_none());
        for j in 0..run.ctmc_path.len() {
            assert_eq!(run.ctmc_path.state(j), &[0.3, 0.7]);
            assert_eq!(run.diffusion_path.state(j), &[0.3, 0.7]);
        }
    }

    #[test]
    fn identity_time_change_reproduces_noise_paths() {
        // single channel, V = 1, constant rate 1, delta = Delta = 1:
        // tau_j = j exactly, so the state paths are the noise paths.
        let net = pure_birth();
        let mut config = SimConfig::new(1.0, vec![0.0], 8.0, 21);
        config.em_step = 1.0;
        config.kmt_step = 1.0;
        config.domain_upper_bounds = Some(vec![1e9]);
        config.domain_lower_bounds = Some(vec![-1e9]);
        let run = simulate_coupled(&net, &config).unwrap();
        // regenerate the channel noise the run must have used
        let mut rng = stream_rng(21, 1);
        let oracle = crate::kmt::generate_paired_noise(16, 1.0, &mut rng, "r0").unwrap();
        assert_eq!(run.noise[0].poisson_path, oracle.poisson_path);
        for j in 0..=8usize {
            assert_eq!(run.ctmc_path.state(j)[0], oracle.poisson_path[j]);
            assert!((run.diffusion_path.state(j)[0] - oracle.wiener_path[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let net = models::metabolism(0);
        let mut config = SimConfig::new(100.0, vec![1.0, 1.0], 0.5, 7);
        config.em_step = 1e-2;
        let a = simulate_coupled(&net, &config).unwrap();
        let b = simulate_coupled(&net, &config).unwrap();
        assert_eq!(a.ctmc_path.times, b.ctmc_path.times);
        assert_eq!(a.sup_distance, b.sup_distance);
        for j in 0..a.ctmc_path.len() {
            assert_eq!(a.ctmc_path.state(j), b.ctmc_path.state(j));
            assert_eq!(a.diffusion_path.state(j), b.diffusion_path.state(j));
        }
    }

    #[test]
    fn ctmc_path_stays_on_count_lattice() {
        let net = models::metabolism(0);
        let mut config = SimConfig::new(80.0, vec![1.0, 1.0], 0.5, 13);
        config.em_step = 1e-2;
        config.domain_upper_bounds = Some(vec![5.0, 5.0]);
        let run = simulate_coupled(&net, &config).unwrap();
        for j in 0..run.ctmc_path.len() {
            for &s in run.ctmc_path.state(j) {
                let c = s * 80.0;
                assert!((c - c.round()).abs() < 1e-9, "off-lattice state {s}");
            }
        }
        assert!(run.sup_distance >= 0.0);
    }

    #[test]
    fn degenerate_equivalence_with_ssa_law() {
        // constant-rate channel, Delta = delta: the coupled count at T has
        // the SSA law (both are Poisson(T) at V = 1).
        let net = pure_birth();
        let t_max = 4.0;
        let mut coupled_final = Vec::new();
        let mut ssa_final = Vec::new();
        for seed in 0..1000u64 {
            let mut config = SimConfig::new(1.0, vec![0.0], t_max, seed);
            config.em_step = 0.05;
            config.kmt_step = 0.05;
            config.domain_upper_bounds = Some(vec![1e9]);
            config.domain_lower_bounds = Some(vec![-1e9]);
            let run = simulate_coupled(&net, &config).unwrap();
            coupled_final.push(run.ctmc_path.last_state()[0]);
            ssa_final.push(simulate_ssa_final(&net, &config).unwrap()[0]);
        }
        let (_, p) = ks_two_sample(&coupled_final, &ssa_final);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            p > 0.01,
            "KS p = {p}, coupled mean {}, ssa mean {}",
            mean(&coupled_final),
            mean(&ssa_final)
        );
    }

    #[test]
    fn horizon_error_reports_channel() {
        let net = pure_birth();
        let mut config = SimConfig::new(1.0, vec![0.0], 4.0, 3);
        config.em_step = 1.0;
        config.kmt_step = 1.0;
        config.noise_safety = 1.5;
        config.domain_upper_bounds = Some(vec![1e9]);
        // shrink the horizon below the deterministic internal time
        config.t_max = 40.0;
        config.max_noise_len = 32; // horizon 60 fits in 64 grid points
        config.max_noise_len = 16; // force delta growth instead of failure
        let run = simulate_coupled(&net, &config);
        assert!(run.is_ok(), "coarsened grid should still cover the horizon");

        // now make the estimated bound wrong by lying about the upper corner
        let net2 = {
            let mut reactants = BTreeMap::new();
            reactants.insert("X".to_string(), 1);
            let mut products = BTreeMap::new();
            products.insert("X".to_string(), 2);
            ReactionNetwork::new(
                "growth",
                vec!["X".to_string()],
                vec![Reaction {
                    reactants,
                    products,
                    rate_constant: 1.0,
                }],
                RateConvention::Absorbed,
            )
            .unwrap()
        };
        let mut config2 = SimConfig::new(1.0, vec![4.0], 30.0, 5);
        config2.em_step = 0.5;
        config2.kmt_step = 0.5;
        config2.domain_upper_bounds = Some(vec![4.0]); // corner rate 4, true growth exceeds it
        let err = simulate_coupled(&net2, &config2);
        match err {
            Err(SimError::NoiseHorizonExceeded { channel, .. }) => assert_eq!(channel, 0),
            Ok(run) => assert!(
                run.exit_time.is_some(),
                "either the horizon fails or the path exits the box"
            ),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn exit_time_recorded_on_domain_exit() {
        let net = pure_birth();
        let mut config = SimConfig::new(10.0, vec![0.0], 50.0, 2);
        config.em_step = 0.1;
        config.domain_upper_bounds = Some(vec![1.0]);
        let run = simulate_coupled(&net, &config).unwrap();
        let exit = run.exit_time.expect("birth process must cross the bound");
        assert_eq!(run.ctmc_path.times.last().copied().unwrap(), exit);
        assert!(exit < 50.0);
        // sup_distance covers only the recorded (pre-exit) grid
        let direct = run.ctmc_path.sup_distance(&run.diffusion_path);
        assert!((run.sup_distance - direct).abs() < 1e-12);
    }

    #[test]
    fn grid_index_rounds_to_nearest_ties_down() {
        assert_eq!(grid_index(0.0, 1.0), 0);
        assert_eq!(grid_index(0.5, 1.0), 0);
        assert_eq!(grid_index(0.5000001, 1.0), 1);
        assert_eq!(grid_index(1.49, 1.0), 1);
        assert_eq!(grid_index(1.51, 1.0), 2);
        // exact tie 1.5 rounds toward the smaller index
        assert_eq!(grid_index(3.0, 2.0), 1);
    }

    #[test]
    fn study_rows_sorted_and_single_volume_ok() {
        let net = models::metabolism(0);
        let mut template = SimConfig::new(0.0, vec![1.0, 1.0], 0.2, 40);
        template.em_step = 1e-2;
        template.domain_upper_bounds = Some(vec![5.0, 5.0]);
        let rows = sup_distance_study(&net, &template, &[100.0], 3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].seeds, 3);
        let rows = sup_distance_study(&net, &template, &[200.0, 100.0], 3).unwrap();
        assert_eq!(rows[0].volume, 100.0);
        assert_eq!(rows[1].volume, 200.0);
        assert!(sup_distance_study(&net, &template, &[], 3).is_err());
    }

    #[test]
    fn coupling_distance_shrinks_when_volume_doubles() {
        let net = models::metabolism(0);
        let mut template = SimConfig::new(0.0, vec![1.0, 1.0], 0.5, 100);
        template.em_step = 1e-2;
        template.domain_upper_bounds = Some(vec![5.0, 5.0]);
        let rows = sup_distance_study(&net, &template, &[200.0, 400.0], 10).unwrap();
        assert!(
            rows[1].median_sup_distance < rows[0].median_sup_distance,
            "median at V=400 ({}) not below V=200 ({})",
            rows[1].median_sup_distance,
            rows[0].median_sup_distance
        );
    }
}
