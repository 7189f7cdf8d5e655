//! Reaction networks: structure, deficiency, and rate functions.
//!
//! A network is the triple {species, complexes, reactions}. Complexes and the
//! reaction graph are derived from the stoichiometric equations; the
//! deficiency is the integer `|C| - L - dim S` where `L` counts linkage
//! classes (connected components of the undirected complex graph) and
//! `dim S` is the rank of the stoichiometric matrix, computed exactly over
//! the rationals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, SimError};

/// How combinatorial factors enter the rate constants.
///
/// Published rate lists often absorb the `1/c!` factors of the mass-action
/// binomial form into the constants (`absorbed`); the literal leading-order
/// mass-action form keeps them (`factorial`). Making the choice explicit
/// prevents silent factor-of-2 errors on bimolecular reactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateConvention {
    Absorbed,
    Factorial,
}

impl Default for RateConvention {
    fn default() -> Self {
        RateConvention::Absorbed
    }
}

/// One reaction: reactant and product multisets plus a positive rate constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reaction {
    #[serde(default)]
    pub reactants: BTreeMap<String, u64>,
    #[serde(default)]
    pub products: BTreeMap<String, u64>,
    pub rate_constant: f64,
}

/// A complex: a non-negative integer combination of species, canonically
/// ordered by species index so equal compositions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Complex {
    composition: BTreeMap<usize, u64>,
}

impl Complex {
    fn from_pairs(pairs: &[(usize, u64)]) -> Self {
        Complex {
            composition: pairs.iter().filter(|&&(_, c)| c > 0).copied().collect(),
        }
    }

    pub fn composition(&self) -> &BTreeMap<usize, u64> {
        &self.composition
    }

    /// Render like `N + 3E` using the network's species names.
    pub fn display(&self, network: &ReactionNetwork) -> String {
        if self.composition.is_empty() {
            return "0".to_string();
        }
        self.composition
            .iter()
            .map(|(&i, &c)| {
                if c == 1 {
                    network.species()[i].clone()
                } else {
                    format!("{}{}", c, network.species()[i])
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Structural summary: theta = |C| - L - dim S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeficiencyReport {
    pub complexes_count: usize,
    pub linkage_classes: usize,
    pub stoich_dim: usize,
    pub deficiency: i64,
}

/// Serialized model file format.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    name: String,
    species: Vec<String>,
    #[serde(default)]
    rate_convention: RateConvention,
    reactions: Vec<Reaction>,
}

/// An immutable, validated reaction network.
///
/// All operations are pure functions; the network is safe to share across
/// concurrent readers.
#[derive(Debug, Clone)]
pub struct ReactionNetwork {
    name: String,
    species: Vec<String>,
    reactions: Vec<Reaction>,
    rate_convention: RateConvention,
    // compiled per-reaction data, species referenced by index
    reactant_coeffs: Vec<Vec<(usize, u64)>>,
    product_coeffs: Vec<Vec<(usize, u64)>>,
    vectors: Vec<Vec<i64>>,
}

impl ReactionNetwork {
    pub fn new(
        name: impl Into<String>,
        species: Vec<String>,
        reactions: Vec<Reaction>,
        rate_convention: RateConvention,
    ) -> Result<Self, ModelError> {
        if species.is_empty() {
            return Err(ModelError::NoSpecies);
        }
        let mut index = BTreeMap::new();
        for (i, s) in species.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(ModelError::DuplicateSpecies(s.clone()));
            }
        }
        let d = species.len();
        let mut reactant_coeffs = Vec::with_capacity(reactions.len());
        let mut product_coeffs = Vec::with_capacity(reactions.len());
        let mut vectors = Vec::with_capacity(reactions.len());
        for (k, r) in reactions.iter().enumerate() {
            if !(r.rate_constant > 0.0) {
                return Err(ModelError::NonPositiveRate {
                    index: k,
                    rate: r.rate_constant,
                });
            }
            let compile = |side: &BTreeMap<String, u64>| -> Result<Vec<(usize, u64)>, ModelError> {
                let mut out = Vec::new();
                for (name, &c) in side {
                    let &i = index.get(name).ok_or_else(|| ModelError::UnknownSpecies {
                        index: k,
                        species: name.clone(),
                    })?;
                    if c > 0 {
                        out.push((i, c));
                    }
                }
                out.sort_unstable();
                Ok(out)
            };
            let rc = compile(&r.reactants)?;
            let pc = compile(&r.products)?;
            let mut l = vec![0i64; d];
            for &(i, c) in &pc {
                l[i] += c as i64;
            }
            for &(i, c) in &rc {
                l[i] -= c as i64;
            }
            // Self-loops have l = 0 but would distort complex/linkage counts.
            if rc == pc {
                return Err(ModelError::SelfLoop { index: k });
            }
            reactant_coeffs.push(rc);
            product_coeffs.push(pc);
            vectors.push(l);
        }
        Ok(ReactionNetwork {
            name: name.into(),
            species,
            reactions,
            rate_convention,
            reactant_coeffs,
            product_coeffs,
            vectors,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        ReactionNetwork::new(file.name, file.species, file.reactions, file.rate_convention)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            name: self.name.clone(),
            species: self.species.clone(),
            rate_convention: self.rate_convention,
            reactions: self.reactions.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn dim(&self) -> usize {
        self.species.len()
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn rate_convention(&self) -> RateConvention {
        self.rate_convention
    }

    #[cfg(test)]
    pub(crate) fn reactant_coeffs(&self, k: usize) -> &[(usize, u64)] {
        &self.reactant_coeffs[k]
    }

    /// Reaction vectors l_k = c'_k - c_k; columns of the d x K
    /// stoichiometric matrix.
    pub fn reaction_vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    /// The set of complexes: union of all reactant and product sides,
    /// deduplicated by composition.
    pub fn complexes(&self) -> Vec<Complex> {
        let mut set = std::collections::BTreeSet::new();
        for k in 0..self.reactions.len() {
            set.insert(Complex::from_pairs(&self.reactant_coeffs[k]));
            set.insert(Complex::from_pairs(&self.product_coeffs[k]));
        }
        set.into_iter().collect()
    }

    /// Number of connected components of the undirected graph on complexes
    /// with one edge per reaction.
    pub fn linkage_classes(&self) -> usize {
        let complexes = self.complexes();
        let find_idx = |c: &Complex| complexes.binary_search(c).expect("complex present");
        let mut parent: Vec<usize> = (0..complexes.len()).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for k in 0..self.reactions.len() {
            let a = find_idx(&Complex::from_pairs(&self.reactant_coeffs[k]));
            let b = find_idx(&Complex::from_pairs(&self.product_coeffs[k]));
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..complexes.len())
            .filter(|&i| find(&mut parent, i) == i)
            .count()
    }

    /// Rank of the stoichiometric matrix over the rationals
    /// (exact fraction-free elimination on integers).
    pub fn stoich_rank(&self) -> usize {
        let d = self.dim();
        let cols: Vec<&Vec<i64>> = self.vectors.iter().collect();
        integer_rank(d, &cols)
    }

    /// Full structural report with theta = |C| - L - dim S.
    pub fn deficiency(&self) -> DeficiencyReport {
        let complexes_count = self.complexes().len();
        let linkage_classes = self.linkage_classes();
        let stoich_dim = self.stoich_rank();
        DeficiencyReport {
            complexes_count,
            linkage_classes,
            stoich_dim,
            deficiency: complexes_count as i64 - linkage_classes as i64 - stoich_dim as i64,
        }
    }

    /// Density-dependent rate f_k(x) at concentrations x.
    ///
    /// `absorbed`: f = lambda * prod x_i^{c_ik} (combinatorial factors
    /// pre-absorbed in lambda). `factorial`: f = lambda / prod c_ik! *
    /// prod x_i^{c_ik}.
    pub fn density_rate(&self, k: usize, x: &[f64]) -> Result<f64, SimError> {
        if k >= self.reactions.len() {
            return Err(SimError::BadReactionIndex(k));
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi < 0.0 {
                return Err(SimError::NegativeState { index: i, value: xi });
            }
        }
        Ok(self.density_rate_unchecked(k, x))
    }

    /// Same as [`density_rate`](Self::density_rate) but clamps negative
    /// coordinates to zero instead of erroring. Hot path for integrators
    /// whose boundary policy allows small negative excursions.
    #[inline]
    pub fn density_rate_clamped(&self, k: usize, x: &[f64]) -> f64 {
        let mut rate = self.reactions[k].rate_constant;
        for &(i, c) in &self.reactant_coeffs[k] {
            let xi = x[i].max(0.0);
            for _ in 0..c {
                rate *= xi;
            }
        }
        if self.rate_convention == RateConvention::Factorial {
            for &(_, c) in &self.reactant_coeffs[k] {
                rate /= factorial(c);
            }
        }
        rate
    }

    #[inline]
    fn density_rate_unchecked(&self, k: usize, x: &[f64]) -> f64 {
        self.density_rate_clamped(k, x)
    }

    /// Exact CTMC jump rate at integer counts in volume V.
    ///
    /// `factorial`: q = lambda / V^{<c>-1} * prod binom(s_i, c_ik).
    /// `absorbed`: q = V * f(counts/V), gated by feasibility (s_i >= c_ik)
    /// so the chain never leaves the non-negative lattice.
    pub fn exact_rate(&self, k: usize, counts: &[i64], volume: f64) -> Result<f64, SimError> {
        if k >= self.reactions.len() {
            return Err(SimError::BadReactionIndex(k));
        }
        for (i, &s) in counts.iter().enumerate() {
            if s < 0 {
                return Err(SimError::NegativeState {
                    index: i,
                    value: s as f64,
                });
            }
        }
        Ok(self.exact_rate_unchecked(k, counts, volume))
    }

    #[inline]
    pub(crate) fn exact_rate_unchecked(&self, k: usize, counts: &[i64], volume: f64) -> f64 {
        // insufficient molecules: rate 0 under both conventions
        for &(i, c) in &self.reactant_coeffs[k] {
            if counts[i] < c as i64 {
                return 0.0;
            }
        }
        match self.rate_convention {
            RateConvention::Factorial => {
                let mut q = self.reactions[k].rate_constant;
                let mut order: i64 = 0;
                for &(i, c) in &self.reactant_coeffs[k] {
                    q *= binomial(counts[i], c);
                    order += c as i64;
                }
                q / volume.powi((order - 1) as i32)
            }
            RateConvention::Absorbed => {
                let mut q = self.reactions[k].rate_constant * volume;
                for &(i, c) in &self.reactant_coeffs[k] {
                    let xi = counts[i] as f64 / volume;
                    for _ in 0..c {
                        q *= xi;
                    }
                }
                q
            }
        }
    }

    /// Drift field F(x) = sum_k l_k f_k(x).
    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>, SimError> {
        for (i, &xi) in x.iter().enumerate() {
            if xi < 0.0 {
                return Err(SimError::NegativeState { index: i, value: xi });
            }
        }
        let mut out = vec![0.0; self.dim()];
        self.drift_into(x, &mut out);
        Ok(out)
    }

    /// Drift with clamped rates, writing into a preallocated buffer.
    #[inline]
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for k in 0..self.reactions.len() {
            let f = self.density_rate_clamped(k, x);
            if f != 0.0 {
                for (o, &l) in out.iter_mut().zip(&self.vectors[k]) {
                    *o += l as f64 * f;
                }
            }
        }
    }
}

fn factorial(c: u64) -> f64 {
    (1..=c).map(|i| i as f64).product()
}

/// binom(s, c) with binom(s, c) = 0 when s < c.
fn binomial(s: i64, c: u64) -> f64 {
    if s < c as i64 {
        return 0.0;
    }
    let mut out = 1.0;
    for i in 0..c {
        out *= (s - i as i64) as f64 / (c - i) as f64;
    }
    out
}

/// Rank of a d x K integer matrix (columns given) via fraction-free
/// Gaussian elimination in i128. Exact for the small stoichiometric
/// coefficients that occur in practice.
pub(crate) fn integer_rank(d: usize, cols: &[&Vec<i64>]) -> usize {
    let k = cols.len();
    let mut m: Vec<Vec<i128>> = (0..d)
        .map(|i| cols.iter().map(|c| c[i] as i128).collect())
        .collect();
    let mut rank = 0;
    let mut prev_pivot: i128 = 1;
    for col in 0..k {
        // find a pivot row
        let pivot_row = (rank..d).find(|&r| m[r][col] != 0);
        let Some(p) = pivot_row else { continue };
        m.swap(rank, p);
        let pivot = m[rank][col];
        for r in rank + 1..d {
            for c in col + 1..k {
                m[r][c] = (pivot * m[r][c] - m[r][col] * m[rank][c]) / prev_pivot;
            }
            m[r][col] = 0;
        }
        prev_pivot = pivot;
        rank += 1;
        if rank == d {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn bistable() -> ReactionNetwork {
        models::bistable()
    }

    #[test]
    fn metabolism_reaction_vectors() {
        let net = models::metabolism(3);
        // column order lambda_1..lambda_6; reaction 3 is N + 3E -> 5E
        let v = net.reaction_vectors();
        assert_eq!(v[2], vec![-1, 2]);
        let expected: Vec<Vec<i64>> = vec![
            vec![1, 0],
            vec![-1, 0],
            vec![-1, 2],
            vec![1, -2],
            vec![0, -2],
            vec![0, 2],
        ];
        assert_eq!(v, &expected[..]);
    }

    #[test]
    fn bistable_reaction_vector() {
        let net = bistable();
        // 2X -> X + Y
        assert_eq!(net.reaction_vectors()[1], vec![-1, 1]);
    }

    #[test]
    fn self_loop_rejected() {
        let r = Reaction {
            reactants: [("A".to_string(), 1)].into(),
            products: [("A".to_string(), 1)].into(),
            rate_constant: 1.0,
        };
        let err = ReactionNetwork::new(
            "loop",
            vec!["A".to_string()],
            vec![r],
            RateConvention::Absorbed,
        );
        assert!(matches!(err, Err(ModelError::SelfLoop { index: 0 })));
    }

    #[test]
    fn complex_counts() {
        assert_eq!(models::metabolism(0).complexes().len(), 3);
        assert_eq!(models::metabolism(3).complexes().len(), 5);
        let ab = ReactionNetwork::new(
            "ab",
            vec!["A".into(), "B".into()],
            vec![Reaction {
                reactants: [("A".to_string(), 1)].into(),
                products: [("B".to_string(), 1)].into(),
                rate_constant: 1.0,
            }],
            RateConvention::Absorbed,
        )
        .unwrap();
        assert_eq!(ab.complexes().len(), 2);
    }

    #[test]
    fn linkage_class_counts() {
        assert_eq!(models::metabolism(0).linkage_classes(), 1);
        assert_eq!(models::metabolism(3).linkage_classes(), 2);
        let empty = ReactionNetwork::new(
            "empty",
            vec!["A".into()],
            vec![],
            RateConvention::Absorbed,
        )
        .unwrap();
        assert_eq!(empty.linkage_classes(), 0);
    }

    #[test]
    fn deficiency_reports() {
        let r0 = models::metabolism(0).deficiency();
        assert_eq!(
            (r0.complexes_count, r0.linkage_classes, r0.stoich_dim, r0.deficiency),
            (3, 1, 2, 0)
        );
        let r3 = models::metabolism(3).deficiency();
        assert_eq!(
            (r3.complexes_count, r3.linkage_classes, r3.stoich_dim, r3.deficiency),
            (5, 2, 2, 1)
        );
        // bistable: complexes {Y, 2X, X+Y, X, 0}, two linkage classes, rank 2
        let rb = bistable().deficiency();
        assert_eq!(
            (rb.complexes_count, rb.linkage_classes, rb.stoich_dim, rb.deficiency),
            (5, 2, 2, 1)
        );
    }

    #[test]
    fn density_rate_conventions() {
        let net = models::metabolism(3);
        // reaction 3 (index 2): lambda_3 = 10, reactants N + 3E, at (1,1)
        assert!((net.density_rate(2, &[1.0, 1.0]).unwrap() - 10.0).abs() < 1e-12);
        // zero reactant concentration kills the rate
        assert_eq!(net.density_rate(2, &[0.0, 1.0]).unwrap(), 0.0);

        // bistable reaction 2 (2X -> X+Y), lambda_2 = 1, x = 3
        let b = bistable();
        assert!((b.density_rate(1, &[3.0, 0.0]).unwrap() - 9.0).abs() < 1e-12);
        let bf = ReactionNetwork::new(
            "bf",
            b.species().to_vec(),
            b.reactions().to_vec(),
            RateConvention::Factorial,
        )
        .unwrap();
        assert!((bf.density_rate(1, &[3.0, 0.0]).unwrap() - 4.5).abs() < 1e-12);

        assert!(net.density_rate(2, &[-0.1, 1.0]).is_err());
    }

    #[test]
    fn exact_rate_forms() {
        let b = bistable();
        let bf = ReactionNetwork::new(
            "bf",
            b.species().to_vec(),
            b.reactions().to_vec(),
            RateConvention::Factorial,
        )
        .unwrap();
        // 2X -> X+Y, lambda = 1, X = 5, V = 10, factorial: binom(5,2)/10 = 1
        assert!((bf.exact_rate(1, &[5, 0], 10.0).unwrap() - 1.0).abs() < 1e-12);
        // insufficient molecules
        assert_eq!(bf.exact_rate(1, &[1, 0], 10.0).unwrap(), 0.0);
        // absorbed: 1 * 5^2 / 10 = 2.5
        assert!((b.exact_rate(1, &[5, 0], 10.0).unwrap() - 2.5).abs() < 1e-12);
        assert!(b.exact_rate(1, &[-1, 0], 10.0).is_err());
    }

    #[test]
    fn drift_steady_states() {
        let b = bistable();
        for x in [[2.0, 0.5], [6.0, 4.5], [0.0, 0.0]] {
            let f = b.drift(&x).unwrap();
            assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12, "F({x:?}) = {f:?}");
        }
    }

    #[test]
    fn drift_matches_termwise_sum() {
        let b = bistable();
        let x = [1.3, 0.7];
        let f = b.drift(&x).unwrap();
        let mut manual = vec![0.0; 2];
        for k in 0..b.num_reactions() {
            let r = b.density_rate(k, &x).unwrap();
            for (m, &l) in manual.iter_mut().zip(&b.reaction_vectors()[k]) {
                *m += l as f64 * r;
            }
        }
        for i in 0..2 {
            assert!((f[i] - manual[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn convention_bridge_large_counts() {
        // factorial exact_rate(counts, V)/V -> factorial density_rate(counts/V)
        let b = bistable();
        let bf = ReactionNetwork::new(
            "bf",
            b.species().to_vec(),
            b.reactions().to_vec(),
            RateConvention::Factorial,
        )
        .unwrap();
        let v = 1000.0;
        let counts = [2000i64, 500];
        let x: Vec<f64> = counts.iter().map(|&c| c as f64 / v).collect();
        let min_count = 500.0;
        for k in 0..bf.num_reactions() {
            let q = bf.exact_rate(k, &counts, v).unwrap() / v;
            let f = bf.density_rate(k, &x).unwrap();
            if f > 0.0 {
                assert!(
                    ((q - f) / f).abs() < 10.0 / min_count,
                    "reaction {k}: {q} vs {f}"
                );
            }
        }
    }

    /// Independent rank oracle: enumerate all square minors and compute
    /// integer determinants recursively.
    fn minor_rank(d: usize, cols: &[&Vec<i64>]) -> usize {
        fn det(m: &[Vec<i128>]) -> i128 {
            let n = m.len();
            if n == 1 {
                return m[0][0];
            }
            let mut out = 0;
            for j in 0..n {
                let sub: Vec<Vec<i128>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                out += sign * m[0][j] * det(&sub);
            }
            out
        }
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for first in 0..n {
                for mut rest in subsets(n, k - 1) {
                    if rest.iter().all(|&r| r > first) {
                        rest.insert(0, first);
                        out.push(rest);
                    }
                }
            }
            out.retain(|s| s.len() == k);
            out
        }
        let kk = cols.len();
        for r in (1..=d.min(kk)).rev() {
            for rows in subsets(d, r) {
                for cs in subsets(kk, r) {
                    let m: Vec<Vec<i128>> = rows
                        .iter()
                        .map(|&i| cs.iter().map(|&j| cols[j][i] as i128).collect())
                        .collect();
                    if det(&m) != 0 {
                        return r;
                    }
                }
            }
        }
        0
    }

    use proptest::prelude::*;

    fn small_network_strategy() -> impl Strategy<Value = ReactionNetwork> {
        let species = prop::sample::select(vec![1usize, 2, 3, 4]);
        species.prop_flat_map(|d| {
            let names: Vec<String> = (0..d).map(|i| format!("S{i}")).collect();
            let side = prop::collection::vec(0u64..3, d);
            let reaction = (side.clone(), side, 0.1f64..10.0).prop_filter_map(
                "non-degenerate",
                move |(r, p, rate)| {
                    if r == p {
                        return None;
                    }
                    let to_map = |v: &Vec<u64>| {
                        v.iter()
                            .enumerate()
                            .filter(|&(_, &c)| c > 0)
                            .map(|(i, &c)| (format!("S{i}"), c))
                            .collect::<BTreeMap<_, _>>()
                    };
                    Some(Reaction {
                        reactants: to_map(&r),
                        products: to_map(&p),
                        rate_constant: rate,
                    })
                },
            );
            let names2 = names.clone();
            prop::collection::vec(reaction, 1..5).prop_map(move |rs| {
                ReactionNetwork::new(
                    "random",
                    names2.clone(),
                    rs,
                    RateConvention::Absorbed,
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn deficiency_nonnegative(net in small_network_strategy()) {
            let rep = net.deficiency();
            prop_assert!(rep.deficiency >= 0, "theta = {} for {:?}", rep.deficiency, net);
            prop_assert!(rep.stoich_dim <= net.dim().min(net.num_reactions()));
        }

        #[test]
        fn rank_matches_minor_enumeration(net in small_network_strategy()) {
            let cols: Vec<&Vec<i64>> = net.reaction_vectors().iter().collect();
            prop_assert_eq!(net.stoich_rank(), minor_rank(net.dim(), &cols));
        }

        #[test]
        fn rates_nonnegative_and_multiplicative(
            net in small_network_strategy(),
            x in prop::collection::vec(0.0f64..5.0, 4),
        ) {
            for k in 0..net.num_reactions() {
                let f = net.density_rate(k, &x[..net.dim()]).unwrap();
                prop_assert!(f >= 0.0);
                let has_reactant = !net.reactant_coeffs(k).is_empty();
                if has_reactant {
                    let zero_reactant = net
                        .reactant_coeffs(k)
                        .iter()
                        .any(|&(i, _)| x[i] == 0.0);
                    prop_assert_eq!(f == 0.0, zero_reactant);
                }
            }
        }
    }

    #[test]
    fn linkage_sizes_sum_to_complex_count() {
        // indirectly: L <= |C| and every complex is in some class; check on
        // the bundled models via the identity |C| = sum of class sizes,
        // which union-find guarantees when every complex is a node.
        for net in [models::metabolism(0), models::metabolism(3), bistable()] {
            let rep = net.deficiency();
            assert!(rep.linkage_classes <= rep.complexes_count);
            assert!(rep.linkage_classes >= 1);
        }
    }
}
