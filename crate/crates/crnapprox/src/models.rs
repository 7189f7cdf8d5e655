//! Bundled example networks.
//!
//! `metabolism(m)` builds the nutrient/energy toy model (species N, E) with
//! the exchange parameter m; `bistable()` builds the minimal bistable
//! chemical system (species X, Y) with the constant substrate/product
//! concentrations absorbed into the rate constants. Both use the `absorbed`
//! rate convention, matching the published rate lists.

use std::collections::BTreeMap;

use crate::net::{RateConvention, Reaction, ReactionNetwork};

fn side(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|&(s, c)| (s.to_string(), c)).collect()
}

fn reaction(reactants: &[(&str, u64)], products: &[(&str, u64)], rate: f64) -> Reaction {
    Reaction {
        reactants: side(reactants),
        products: side(products),
        rate_constant: rate,
    }
}

/// Metabolism toy model with n = 2 fixed and exchange parameter `m`:
///
/// ```text
/// 2E <-> 0 <-> N          (lambda_5/lambda_6, lambda_1/lambda_2)
/// N + mE <-> (m+2)E       (lambda_3/lambda_4)
/// ```
///
/// Rates lambda = (10, 1, 10, 1, 10, 1). Deficiency is 0 for m = 0 and 1
/// for m > 0.
pub fn metabolism(m: u64) -> ReactionNetwork {
    let reactions = vec![
        reaction(&[], &[("N", 1)], 10.0),
        reaction(&[("N", 1)], &[], 1.0),
        reaction(&[("N", 1), ("E", m)], &[("E", m + 2)], 10.0),
        reaction(&[("E", m + 2)], &[("N", 1), ("E", m)], 1.0),
        reaction(&[("E", 2)], &[], 10.0),
        reaction(&[], &[("E", 2)], 1.0),
    ];
    ReactionNetwork::new(
        "metabolism",
        vec!["N".to_string(), "E".to_string()],
        reactions,
        RateConvention::Absorbed,
    )
    .expect("bundled metabolism model is valid")
}

/// Minimal bistable chemical system (constant S, P absorbed):
///
/// ```text
/// Y -> 2X        lambda_1 = 8
/// 2X -> X + Y    lambda_2 = 1
/// X + Y -> Y     lambda_3 = 1
/// X -> 0         lambda_4 = 1.5
/// ```
///
/// Steady states (0,0), (2, 1/2) unstable, (6, 9/2).
pub fn bistable() -> ReactionNetwork {
    bistable_with_rates(8.0, 1.0, 1.0, 1.5)
}

/// Bistable system with explicit rate constants.
pub fn bistable_with_rates(l1: f64, l2: f64, l3: f64, l4: f64) -> ReactionNetwork {
    let reactions = vec![
        reaction(&[("Y", 1)], &[("X", 2)], l1),
        reaction(&[("X", 2)], &[("X", 1), ("Y", 1)], l2),
        reaction(&[("X", 1), ("Y", 1)], &[("Y", 1)], l3),
        reaction(&[("X", 1)], &[], l4),
    ];
    ReactionNetwork::new(
        "bistable",
        vec!["X".to_string(), "Y".to_string()],
        reactions,
        RateConvention::Absorbed,
    )
    .expect("bundled bistable model is valid")
}

/// Non-trivial steady states of the bistable system:
/// x = (l1 +/- sqrt(l1 * D)) / (2 l3) with D = l1 - 4 l3 l4, y = x^2 / l1.
pub fn bistable_steady_states(l1: f64, l3: f64, l4: f64) -> [[f64; 2]; 3] {
    let d = l1 - 4.0 * l3 * l4;
    let root = (l1 * d).sqrt();
    let x2 = (l1 - root) / (2.0 * l3);
    let x3 = (l1 + root) / (2.0 * l3);
    [[0.0, 0.0], [x2, x2 * x2 / l1], [x3, x3 * x3 / l1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_formula() {
        let ss = bistable_steady_states(8.0, 1.0, 1.5);
        assert!((ss[1][0] - 2.0).abs() < 1e-12 && (ss[1][1] - 0.5).abs() < 1e-12);
        assert!((ss[2][0] - 6.0).abs() < 1e-12 && (ss[2][1] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn bistable_rates_match_published_list() {
        let net = bistable();
        let rates: Vec<f64> = net.reactions().iter().map(|r| r.rate_constant).collect();
        assert_eq!(rates, vec![8.0, 1.0, 1.0, 1.5]);
        // q2 = lambda_2 X^2 / V at X = 5, V = 10
        assert!((net.exact_rate(1, &[5, 0], 10.0).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn metabolism_ode_field() {
        // udot = 10 - u - 10 u e^m + e^{2+m}, edot = 2(10 u e^m - e^{2+m} + 1 - 10 e^2)
        for m in [0u64, 3] {
            let net = metabolism(m);
            let (u, e) = (0.7, 1.3);
            let f = net.drift(&[u, e]).unwrap();
            let em = e.powi(m as i32);
            let udot = 10.0 - u - 10.0 * u * em + e * e * em;
            let edot = 2.0 * (10.0 * u * em - e * e * em + 1.0 - 10.0 * e * e);
            assert!((f[0] - udot).abs() < 1e-10, "m={m}");
            assert!((f[1] - edot).abs() < 1e-10, "m={m}");
        }
    }
}
