//! Deterministic and diffusion approximations, simulated independently of
//! the CTMC: fixed-step RK4 for the fluid limit and Euler-Maruyama for the
//! Langevin equation with one noise channel per reaction.
//!
//! Started exactly at a steady state, the fluid limit stays put:
//!
//! ```
//! use crnapprox::models;
//! use crnapprox::trajectory::SimConfig;
//!
//! let network = models::bistable();
//! // start exactly at a steady state: the fluid limit stays put
//! let config = SimConfig::new(100.0, vec![2.0, 0.5], 20.0, 1);
//! let ode = crnapprox::continuum::solve_ode(&network, &config)?;
//! let end = ode.last_state();
//! assert!((end[0] - 2.0).abs() < 1e-8 && (end[1] - 0.5).abs() < 1e-8);
//! # Ok::<(), crnapprox::SimError>(())
//! ```
//!
//! The diffusion keeps the leading noise term:
//!
//! ```
//! use crnapprox::models;
//! use crnapprox::trajectory::SimConfig;
//!
//! let network = models::metabolism(0);
//! let mut config = SimConfig::new(600.0, vec![1.0, 1.0], 1.0, 42);
//! config.em_step = 1e-3;
//! let em = crnapprox::continuum::simulate_em(&network, &config)?;
//! let ode = crnapprox::continuum::solve_ode(&network, &config)?;
//! // the diffusion stays within the fluid-limit fluctuation scale
//! assert!(em.sup_distance(&ode) < 0.5);
//! # Ok::<(), crnapprox::SimError>(())
//! ```

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::SimError;
use crate::net::ReactionNetwork;
use crate::rng::trajectory_rng;
use crate::trajectory::{BoundaryPolicy, Method, SimConfig, Trajectory};

/// Classical fourth-order Runge-Kutta with fixed step `em_step` on
/// xdot = F(x); output on the step grid, final partial step included.
pub fn solve_ode(network: &ReactionNetwork, config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    let d = network.dim();
    let mut traj = Trajectory::new(
        d,
        Method::Ode,
        config.volume,
        config.seed,
        network.name(),
        network.species().to_vec(),
    );
    let mut x = config.x0.clone();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    traj.push(0.0, &x);
    let mut t = 0.0;
    while t < config.t_max {
        let h = config.em_step.min(config.t_max - t);
        network.drift_into(&x, &mut k1);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        network.drift_into(&tmp, &mut k2);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        network.drift_into(&tmp, &mut k3);
        for i in 0..d {
            tmp[i] = x[i] + h * k3[i];
        }
        network.drift_into(&tmp, &mut k4);
        for i in 0..d {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        if let Some((i, &v)) = x.iter().enumerate().find(|&(_, &v)| v < -1e-9) {
            return Err(SimError::LeftDomain {
                index: i,
                value: v,
                time: t,
            });
        }
        traj.push(t, &x);
    }
    Ok(traj)
}

/// One Euler-Maruyama step of the Langevin equation, shared by the
/// recording and final-state variants. Returns true when the state froze
/// under the absorb policy.
struct EmStepper<'a> {
    network: &'a ReactionNetwork,
    sqrt_v_inv: f64,
    rates: Vec<f64>,
    frozen: bool,
}

impl<'a> EmStepper<'a> {
    fn new(network: &'a ReactionNetwork, volume: f64) -> Self {
        EmStepper {
            network,
            sqrt_v_inv: 1.0 / volume.sqrt(),
            rates: vec![0.0; network.num_reactions()],
            frozen: false,
        }
    }

    fn step<R: Rng>(
        &mut self,
        x: &mut [f64],
        h: f64,
        rng: &mut R,
        config: &SimConfig,
        t: f64,
    ) -> Result<(), SimError> {
        let sqrt_h = h.sqrt();
        let vectors = self.network.reaction_vectors();
        for (k, r) in self.rates.iter_mut().enumerate() {
            *r = self.network.density_rate_clamped(k, x);
        }
        // fixed channel order: drift and one normal per reaction channel
        for (k, l) in vectors.iter().enumerate() {
            let f = self.rates[k];
            let xi: f64 = rng.sample(StandardNormal);
            let noise = self.sqrt_v_inv * f.max(0.0).sqrt() * sqrt_h * xi;
            let drift = h * f;
            if drift != 0.0 || noise != 0.0 {
                for (xv, &li) in x.iter_mut().zip(l) {
                    *xv += li as f64 * (drift + noise);
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFiniteState { time: t });
        }
        if config.boundary_policy == BoundaryPolicy::Absorb {
            let thr = config.absorb_threshold();
            if x.iter().all(|&v| v < thr) {
                x.fill(0.0);
                self.frozen = true;
            }
        }
        Ok(())
    }
}

/// Euler-Maruyama trajectory of the diffusion (Langevin) approximation:
/// x' = x + h F(x) + sum_k (l_k / sqrt(V)) sqrt(f_k(x)^+) sqrt(h) xi_k,
/// independent standard normals per channel, boundary policy applied after
/// each step.
pub fn simulate_em(network: &ReactionNetwork, config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    advisory_step_check(network, config);
    let mut traj = Trajectory::new(
        network.dim(),
        Method::Em,
        config.volume,
        config.seed,
        network.name(),
        network.species().to_vec(),
    );
    let mut x = config.x0.clone();
    let mut rng = trajectory_rng(config.seed);
    let mut stepper = EmStepper::new(network, config.volume);
    traj.push(0.0, &x);
    let mut t = 0.0;
    while t < config.t_max {
        let h = config.em_step.min(config.t_max - t);
        if !stepper.frozen {
            stepper.step(&mut x, h, &mut rng, config, t)?;
        }
        t += h;
        traj.push(t, &x);
    }
    Ok(traj)
}

/// Final state of an EM run without path storage; identical draws to
/// [`simulate_em`] for the same config.
pub fn simulate_em_final(
    network: &ReactionNetwork,
    config: &SimConfig,
) -> Result<Vec<f64>, SimError> {
    config.validate()?;
    let mut x = config.x0.clone();
    let mut rng = trajectory_rng(config.seed);
    let mut stepper = EmStepper::new(network, config.volume);
    let mut t = 0.0;
    while t < config.t_max {
        let h = config.em_step.min(config.t_max - t);
        if stepper.frozen {
            break;
        }
        stepper.step(&mut x, h, &mut rng, config, t)?;
        t += h;
    }
    Ok(x)
}

fn advisory_step_check(network: &ReactionNetwork, config: &SimConfig) {
    let max_rate = (0..network.num_reactions())
        .map(|k| network.density_rate_clamped(k, &config.x0))
        .fold(0.0f64, f64::max);
    if config.em_step * max_rate >= 1.0 {
        log::warn!(
            "em_step {} times max initial rate {} is >= 1; consider a smaller step",
            config.em_step,
            max_rate
        );
    }
}

/// Index of the Euclidean-nearest equilibrium; ties break to the lowest
/// index.
pub fn classify_basin(state: &[f64], equilibria: &[Vec<f64>]) -> usize {
    assert!(!equilibria.is_empty(), "need at least one equilibrium");
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, eq) in equilibria.iter().enumerate() {
        let d2: f64 = state
            .iter()
            .zip(eq)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::net::{RateConvention, Reaction, ReactionNetwork};
    use crate::stats;
    use std::collections::BTreeMap;

    fn decay() -> ReactionNetwork {
        ReactionNetwork::new(
            "decay",
            vec!["X".to_string()],
            vec![Reaction {
                reactants: [("X".to_string(), 1u64)].into_iter().collect::<BTreeMap<_, _>>(),
                products: BTreeMap::new(),
                rate_constant: 1.0,
            }],
            RateConvention::Absorbed,
        )
        .unwrap()
    }

    #[test]
    fn rk4_order_on_linear_decay() {
        let net = decay();
        let x0 = 2.0;
        let max_err = |h: f64| {
            let mut config = SimConfig::new(1.0, vec![x0], 2.0, 0);
            config.em_step = h;
            let traj = solve_ode(&net, &config).unwrap();
            traj.times
                .iter()
                .enumerate()
                .map(|(j, &t)| (traj.state(j)[0] - x0 * (-t).exp()).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = max_err(0.1);
        let e2 = max_err(0.05);
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "RK4 error ratio {ratio}");
    }

    #[test]
    fn ode_stationary_at_unstable_equilibrium() {
        let net = models::bistable();
        let mut config = SimConfig::new(100.0, vec![2.0, 0.5], 20.0, 0);
        config.em_step = 1e-3;
        let traj = solve_ode(&net, &config).unwrap();
        for j in 0..traj.len() {
            let s = traj.state(j);
            assert!((s[0] - 2.0).abs() < 1e-8 && (s[1] - 0.5).abs() < 1e-8);
        }
        // and the origin is an equilibrium
        let traj0 = solve_ode(&net, &SimConfig::new(100.0, vec![0.0, 0.0], 5.0, 0)).unwrap();
        assert_eq!(traj0.last_state(), &[0.0, 0.0]);
    }

    #[test]
    fn metabolism_m3_damped_oscillation() {
        let net = models::metabolism(3);
        // find the positive equilibrium numerically by relaxing the ODE
        let mut config = SimConfig::new(600.0, vec![1.0, 1.0], 200.0, 0);
        config.em_step = 1e-3;
        let relax = solve_ode(&net, &config).unwrap();
        let eq = relax.last_state().to_vec();
        let mut cfg = SimConfig::new(600.0, vec![eq[0] + 0.1, eq[1] + 0.1], 30.0, 0);
        cfg.em_step = 1e-3;
        let traj = solve_ode(&net, &cfg).unwrap();
        // successive local maxima of e(t) decrease
        let mut maxima = Vec::new();
        for j in 1..traj.len() - 1 {
            let (a, b, c) = (traj.state(j - 1)[1], traj.state(j)[1], traj.state(j + 1)[1]);
            if b > a && b >= c && (b - eq[1]).abs() > 1e-4 {
                maxima.push(b);
            }
        }
        assert!(maxima.len() >= 3, "found {} maxima", maxima.len());
        for w in maxima.windows(2) {
            assert!(w[1] < w[0], "oscillation not damped: {maxima:?}");
        }
    }

    #[test]
    fn em_zero_rates_is_constant() {
        // all reactants absent at x0 = 0 with no inflow: rates vanish
        let net = decay();
        let config = SimConfig::new(10.0, vec![0.0], 1.0, 7);
        let traj = simulate_em(&net, &config).unwrap();
        for j in 0..traj.len() {
            assert_eq!(traj.state(j), &[0.0]);
        }
    }

    #[test]
    fn em_determinism() {
        let net = models::bistable();
        let mut config = SimConfig::new(100.0, vec![2.0, 0.5], 1.0, 13);
        config.em_step = 1e-2;
        let a = simulate_em(&net, &config).unwrap();
        let b = simulate_em(&net, &config).unwrap();
        assert_eq!(a.times, b.times);
        for j in 0..a.len() {
            assert_eq!(a.state(j), b.state(j));
        }
        let fin = simulate_em_final(&net, &config).unwrap();
        assert_eq!(fin.as_slice(), a.last_state());
    }

    #[test]
    fn em_approaches_ode_as_volume_grows() {
        let net = models::metabolism(0);
        let mut sups = Vec::new();
        for &v in &[1e2, 1e3, 1e4] {
            let mut per_seed = Vec::new();
            for seed in 0..20 {
                let mut config = SimConfig::new(v, vec![0.5, 0.5], 5.0, seed);
                config.em_step = 1e-2;
                let em = simulate_em(&net, &config).unwrap();
                let ode = solve_ode(&net, &config).unwrap();
                per_seed.push(em.sup_distance(&ode));
            }
            sups.push(stats::median(&per_seed));
        }
        assert!(
            sups[0] > sups[1] && sups[1] > sups[2],
            "EM-ODE sup distances not decreasing: {sups:?}"
        );
    }

    #[test]
    fn em_never_sqrt_negative_near_boundary() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        let net = models::bistable();
        runner
            .run(
                &(
                    prop::collection::vec(0.0f64..0.05, 2),
                    0u64..1000,
                ),
                |(x0, seed)| {
                    let mut config = SimConfig::new(50.0, x0, 0.5, seed);
                    config.em_step = 5e-3;
                    let traj = simulate_em(&net, &config).unwrap();
                    prop_assert!(traj.last_state().iter().all(|v| v.is_finite()));
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn absorb_policy_freezes_at_origin() {
        let net = models::bistable();
        let mut config = SimConfig::new(100.0, vec![0.004, 0.004], 2.0, 21);
        config.boundary_policy = BoundaryPolicy::Absorb;
        config.em_step = 1e-3;
        let traj = simulate_em(&net, &config).unwrap();
        assert_eq!(traj.last_state(), &[0.0, 0.0]);
    }

    #[test]
    fn equilibrium_residuals_below_1e12() {
        let net = models::bistable();
        for ss in models::bistable_steady_states(8.0, 1.0, 1.5) {
            let f = net.drift(&ss).unwrap();
            let norm = f.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            assert!(norm < 1e-12, "|F({ss:?})| = {norm}");
        }
    }

    #[test]
    fn basin_classification() {
        let eq = vec![vec![0.0, 0.0], vec![6.0, 4.5]];
        assert_eq!(classify_basin(&[0.1, 0.1], &eq), 0);
        assert_eq!(classify_basin(&[6.2, 4.4], &eq), 1);
        assert_eq!(classify_basin(&[3.0, 2.25], &eq), 0); // tie -> lowest
    }
}
