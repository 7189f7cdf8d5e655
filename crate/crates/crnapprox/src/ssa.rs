//! Exact stochastic simulation of the CTMC via the Gillespie direct method.
//!
//! The simulated object is the density process: counts divided by the
//! volume V. Draw order is pinned for reproducibility: waiting time first
//! (inverse-CDF exponential on one uniform), then channel selection by
//! cumulative-sum search on a second uniform.
//!
//! ```
//! use crnapprox::models;
//! use crnapprox::ssa::{simulate_ssa, simulate_ssa_final};
//! use crnapprox::trajectory::SimConfig;
//!
//! let network = models::bistable();
//! let config = SimConfig::new(100.0, vec![2.0, 0.5], 5.0, 7);
//!
//! // full path: initial point, every jump, and the final time
//! let traj = simulate_ssa(&network, &config)?;
//! traj.check_invariants().unwrap();
//! assert_eq!(traj.state(0), &[2.0, 0.5]);
//!
//! // replication harnesses usually need only the endpoint; this variant
//! // replays the identical event sequence without storing the path
//! let end = simulate_ssa_final(&network, &config)?;
//! assert_eq!(end.as_slice(), traj.last_state());
//! # Ok::<(), crnapprox::SimError>(())
//! ```

use rand::Rng;

use crate::error::SimError;
use crate::net::ReactionNetwork;
use crate::rng::trajectory_rng;
use crate::trajectory::{Method, SimConfig, Trajectory};

/// Initial counts: round(x0 * V) to nearest integer, ties away from zero.
pub fn initial_counts(x0: &[f64], volume: f64) -> Result<Vec<i64>, SimError> {
    let counts: Vec<i64> = x0.iter().map(|&x| (x * volume).round() as i64).collect();
    if let Some(i) = counts.iter().position(|&c| c < 0) {
        return Err(SimError::NegativeInitialCounts(i));
    }
    Ok(counts)
}

/// One Gillespie trajectory. Records the initial point, every jump, and the
/// final time T. Deterministic given (network, config) including the seed.
pub fn simulate_ssa(network: &ReactionNetwork, config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    let mut traj = Trajectory::new(
        network.dim(),
        Method::Ssa,
        config.volume,
        config.seed,
        network.name(),
        network.species().to_vec(),
    );
    let mut counts = initial_counts(&config.x0, config.volume)?;
    let v = config.volume;
    let mut conc = vec![0.0; network.dim()];
    let write_conc = |counts: &[i64], conc: &mut [f64]| {
        for (c, &s) in conc.iter_mut().zip(counts) {
            *c = s as f64 / v;
        }
    };
    write_conc(&counts, &mut conc);
    traj.push(0.0, &conc);
    let mut rng = trajectory_rng(config.seed);
    let mut t = 0.0;
    ssa_events(
        network,
        &mut counts,
        &mut t,
        config.t_max,
        v,
        config.event_cap,
        &mut rng,
        |t, counts| {
            write_conc(counts, &mut conc);
            traj.push(t, &conc);
        },
    )?;
    if traj.times.last().copied().unwrap_or(-1.0) < config.t_max {
        write_conc(&counts, &mut conc);
        traj.push(config.t_max, &conc);
    }
    Ok(traj)
}

/// Final concentrations only; same event sequence as [`simulate_ssa`] for
/// the same config, without path storage. Used by replication harnesses.
pub fn simulate_ssa_final(
    network: &ReactionNetwork,
    config: &SimConfig,
) -> Result<Vec<f64>, SimError> {
    config.validate()?;
    let mut counts = initial_counts(&config.x0, config.volume)?;
    let mut rng = trajectory_rng(config.seed);
    let mut t = 0.0;
    ssa_events(
        network,
        &mut counts,
        &mut t,
        config.t_max,
        config.volume,
        config.event_cap,
        &mut rng,
        |_, _| {},
    )?;
    Ok(counts.iter().map(|&c| c as f64 / config.volume).collect())
}

/// The event loop shared by the recording and final-state variants.
#[allow(clippy::too_many_arguments)]
fn ssa_events<R: Rng>(
    network: &ReactionNetwork,
    counts: &mut [i64],
    t: &mut f64,
    t_max: f64,
    volume: f64,
    event_cap: u64,
    rng: &mut R,
    mut on_jump: impl FnMut(f64, &[i64]),
) -> Result<(), SimError> {
    let k = network.num_reactions();
    let mut rates = vec![0.0; k];
    let vectors = network.reaction_vectors();
    let mut events: u64 = 0;
    loop {
        let mut total = 0.0;
        for (j, r) in rates.iter_mut().enumerate() {
            *r = network.exact_rate_unchecked(j, counts, volume);
            total += *r;
        }
        if total <= 0.0 {
            return Ok(()); // absorbing: hold until T
        }
        let u: f64 = rng.gen();
        *t += -(1.0 - u).ln() / total;
        if *t > t_max {
            return Ok(());
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = k - 1;
        for (j, &r) in rates.iter().enumerate() {
            pick -= r;
            if pick <= 0.0 {
                chosen = j;
                break;
            }
        }
        for (c, &l) in counts.iter_mut().zip(&vectors[chosen]) {
            *c += l;
        }
        events += 1;
        if events > event_cap {
            return Err(SimError::EventCapExceeded {
                cap: event_cap,
                time: *t,
            });
        }
        on_jump(*t, counts);
    }
}

/// Pointwise sample mean of trajectories on a common grid. Jump methods are
/// interpolated left-constant, continuous methods linearly.
pub fn mean_trajectory(trajectories: &[Trajectory], grid: &[f64]) -> Result<Trajectory, SimError> {
    let first = trajectories.first().ok_or(SimError::EmptyInput("trajectories"))?;
    let dim = first.dim();
    let mut mean = Trajectory::new(
        dim,
        first.method,
        first.volume,
        first.seed,
        first.model.clone(),
        first.species.clone(),
    );
    let mut acc = vec![0.0; dim];
    let mut point = vec![0.0; dim];
    for &t in grid {
        acc.fill(0.0);
        for traj in trajectories {
            traj.eval(t, &mut point);
            for (a, &p) in acc.iter_mut().zip(&point) {
                *a += p;
            }
        }
        for a in acc.iter_mut() {
            *a /= trajectories.len() as f64;
        }
        mean.push(t, &acc);
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::net::{RateConvention, Reaction, ReactionNetwork};
    use crate::stats;
    use std::collections::BTreeMap;

    fn single(reactants: &[(&str, u64)], products: &[(&str, u64)], rate: f64) -> ReactionNetwork {
        let to_map = |pairs: &[(&str, u64)]| {
            pairs
                .iter()
                .map(|&(s, c)| (s.to_string(), c))
                .collect::<BTreeMap<_, _>>()
        };
        ReactionNetwork::new(
            "test",
            vec!["X".to_string()],
            vec![Reaction {
                reactants: to_map(reactants),
                products: to_map(products),
                rate_constant: rate,
            }],
            RateConvention::Absorbed,
        )
        .unwrap()
    }

    #[test]
    fn single_decay_one_jump_exponential_law() {
        let net = single(&[("X", 1)], &[], 1.0);
        let mut holding_times = Vec::new();
        for seed in 0..1000 {
            let config = SimConfig::new(1.0, vec![1.0], 50.0, seed);
            let traj = simulate_ssa(&net, &config).unwrap();
            // 0, jump, final
            assert_eq!(traj.len(), 3);
            assert_eq!(traj.state(1), &[0.0]);
            holding_times.push(traj.times[1]);
        }
        let (_, p) = stats::ks_one_sample(&holding_times, |t| 1.0 - (-t).exp());
        assert!(p > 0.01, "exponential holding time KS p = {p}");
    }

    #[test]
    fn absorbing_state_is_flat() {
        let net = models::bistable();
        let config = SimConfig::new(100.0, vec![0.0, 0.0], 5.0, 3);
        let traj = simulate_ssa(&net, &config).unwrap();
        assert_eq!(traj.times, vec![0.0, 5.0]);
        assert_eq!(traj.state(1), &[0.0, 0.0]);
    }

    #[test]
    fn pure_birth_mean_matches_poisson() {
        let net = single(&[], &[("X", 1)], 1.0);
        let v = 100.0;
        let t_max = 10.0;
        let reps = 1000;
        let mut sum = 0.0;
        for seed in 0..reps {
            let config = SimConfig::new(v, vec![0.0], t_max, seed);
            let x = simulate_ssa_final(&net, &config).unwrap();
            sum += x[0] * v;
        }
        let mean = sum / reps as f64;
        let expected = v * t_max; // Poisson(lambda V T)
        let se = expected.sqrt() / (reps as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs {expected} (se {se})"
        );
    }

    #[test]
    fn jump_structure_and_conservation() {
        // X <-> Y conserves X + Y
        let mut reactions = Vec::new();
        let to_map = |pairs: &[(&str, u64)]| {
            pairs
                .iter()
                .map(|&(s, c)| (s.to_string(), c))
                .collect::<BTreeMap<_, _>>()
        };
        reactions.push(Reaction {
            reactants: to_map(&[("X", 1)]),
            products: to_map(&[("Y", 1)]),
            rate_constant: 2.0,
        });
        reactions.push(Reaction {
            reactants: to_map(&[("Y", 1)]),
            products: to_map(&[("X", 1)]),
            rate_constant: 1.0,
        });
        let net = ReactionNetwork::new(
            "swap",
            vec!["X".to_string(), "Y".to_string()],
            reactions,
            RateConvention::Absorbed,
        )
        .unwrap();
        let v = 50.0;
        let config = SimConfig::new(v, vec![1.0, 0.0], 2.0, 11);
        let traj = simulate_ssa(&net, &config).unwrap();
        traj.check_invariants().unwrap();
        let vectors = net.reaction_vectors();
        for j in 1..traj.len() {
            let prev = traj.state(j - 1);
            let cur = traj.state(j);
            let diff: Vec<i64> = (0..2)
                .map(|i| ((cur[i] - prev[i]) * v).round() as i64)
                .collect();
            let is_jump = vectors.iter().any(|l| *l == diff);
            let is_final_hold = j == traj.len() - 1 && diff == vec![0, 0];
            assert!(is_jump || is_final_hold, "diff {diff:?} is not a reaction vector");
            let total = cur[0] + cur[1];
            assert!((total - 1.0).abs() < 1e-12, "conservation broken: {total}");
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let net = models::metabolism(0);
        let config = SimConfig::new(200.0, vec![1.0, 1.0], 1.0, 99);
        let a = simulate_ssa(&net, &config).unwrap();
        let b = simulate_ssa(&net, &config).unwrap();
        assert_eq!(a.times, b.times);
        for j in 0..a.len() {
            assert_eq!(a.state(j), b.state(j));
        }
        // and the lean variant agrees with the recorded one
        let fin = simulate_ssa_final(&net, &config).unwrap();
        assert_eq!(fin.as_slice(), a.last_state());
    }

    #[test]
    fn mean_trajectory_basics() {
        let net = single(&[], &[("X", 1)], 1.0);
        let config = SimConfig::new(10.0, vec![0.0], 1.0, 5);
        let traj = simulate_ssa(&net, &config).unwrap();
        let grid = vec![0.0, 0.5, 1.0];
        let mean = mean_trajectory(std::slice::from_ref(&traj), &grid).unwrap();
        let mut out = [0.0];
        for (j, &t) in grid.iter().enumerate() {
            traj.eval(t, &mut out);
            assert_eq!(mean.state(j), &out);
        }
        assert!(mean_trajectory(&[], &grid).is_err());
    }

    #[test]
    fn mean_of_many_births_tracks_analytic_mean() {
        let net = single(&[], &[("X", 1)], 1.0);
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let trajs: Vec<_> = (0..1000)
            .map(|seed| simulate_ssa(&net, &SimConfig::new(20.0, vec![0.0], 5.0, seed)).unwrap())
            .collect();
        let mean = mean_trajectory(&trajs, &grid).unwrap();
        for (j, &t) in grid.iter().enumerate() {
            let rel = (mean.state(j)[0] - t).abs() / t;
            assert!(rel < 0.05, "t = {t}: rel err {rel}");
        }
    }
}
