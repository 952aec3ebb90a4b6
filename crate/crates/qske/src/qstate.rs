//! Two-register quantum state model.
//!
//! Every operation the protocol performs on register 2 is a reversible
//! modular map on computational basis states, so a uniform superposition
//! stays uniform and no interference ever occurs. The state is therefore
//! stored exactly: an ordered list of `(index, value)` basis pairs with an
//! implicit common amplitude `1/sqrt(N)`. No floating point, no dense
//! vectors, valid at any word-sized modulus.
//!
//! Reversibility is enforced structurally rather than by inspecting the
//! current support: a value map `v -> m * v^e (mod p)` is accepted only when
//! `gcd(m, p) = 1` and `gcd(e, s) = 1`, where `s` is the order of the working
//! subgroup the values are confined to (up to a coset factor). On such a
//! coset the map is a bijection, which is the classical shadow of unitarity.
//! Exponents that violate the check (for example `e = 0`, a constant map)
//! have no reversible extension and are rejected as degenerate.
//!
//! Transmission is modeled as an ownership transfer of register 2 on a
//! persistent joint state: the sender keeps register 1, so entanglement
//! survives the trip. What an observer on the channel can see of the moving
//! register is its value multiset, captured as a [`ChannelView`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmath::{gcd, mod_inverse, mul_mod, pow_mod};
use crate::rng::SplitMix64;

/// A protocol participant. Nancy is the eavesdropper; when she intercepts a
/// transmission she is simply the party currently holding register 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Nancy,
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Party::Alice => write!(f, "Alice"),
            Party::Bob => write!(f, "Bob"),
            Party::Nancy => write!(f, "Nancy"),
        }
    }
}

/// A reversible map on register-2 values: `v -> multiplier * v^exponent mod p`
/// (exponentiation first).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModularMap {
    pub multiplier: u64,
    pub exponent: u64,
}

impl ModularMap {
    /// The map undoing `self` on values confined to a coset of the
    /// order-`subgroup_order` subgroup: exponent-inverse first, then the
    /// matching multiplier correction.
    pub fn inverse_on(&self, p: u64, subgroup_order: u64) -> Result<ModularMap> {
        let exp_inv = mod_inverse(self.exponent % subgroup_order, subgroup_order)?;
        let mult_inv = mod_inverse(self.multiplier, p)?;
        Ok(ModularMap {
            multiplier: pow_mod(mult_inv, exp_inv, p),
            exponent: exp_inv,
        })
    }
}

/// Adversary-visible face of a transmitted register: the multiset of its
/// values, with no index information. Stored sorted so two views compare as
/// multisets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelView {
    values: Vec<u64>,
}

impl ChannelView {
    /// Builds a view from observed values (an adversary's notebook entry).
    pub fn from_values(mut values: Vec<u64>) -> Self {
        values.sort_unstable();
        Self { values }
    }

    /// Sorted multiset of observed values.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Joint state of the two registers: `(1/sqrt(N)) * sum |i> |v_i>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointState {
    pairs: Vec<(u64, u64)>,
    p: u64,
    index_modulus: u64,
    holder_reg1: Party,
    holder_reg2: Party,
}

impl JointState {
    /// Builds a validated joint state with both registers held by `owner`.
    ///
    /// Indices must be distinct (the pairs are orthogonal basis states);
    /// values must be units modulo `p`. Values may repeat. `index_modulus`
    /// is the order of the working subgroup (`q`, or `r` in the general
    /// variant) and doubles as the modulus for index arithmetic.
    pub fn new(
        pairs: Vec<(u64, u64)>,
        p: u64,
        index_modulus: u64,
        owner: Party,
    ) -> Result<JointState> {
        if p < 2 {
            return Err(Error::InvalidModulus(p));
        }
        if pairs.is_empty() {
            return Err(Error::EmptyState);
        }
        let mut seen = std::collections::HashSet::with_capacity(pairs.len());
        for &(index, value) in &pairs {
            if !seen.insert(index) {
                return Err(Error::DuplicateIndex(index));
            }
            if value == 0 || value >= p || gcd(value, p) != 1 {
                return Err(Error::ValueOutOfGroup { value, modulus: p });
            }
        }
        Ok(JointState {
            pairs,
            p,
            index_modulus,
            holder_reg1: owner,
            holder_reg2: owner,
        })
    }

    /// Basis pairs in preparation order.
    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    /// Number of basis pairs N (amplitude is `1/sqrt(N)`).
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Order of the working subgroup; also the index-arithmetic modulus.
    pub fn index_modulus(&self) -> u64 {
        self.index_modulus
    }

    pub fn holder_reg1(&self) -> Party {
        self.holder_reg1
    }

    pub fn holder_reg2(&self) -> Party {
        self.holder_reg2
    }

    /// The value multiset an observer of register 2 would see.
    pub fn channel_view(&self) -> ChannelView {
        ChannelView::from_values(self.pairs.iter().map(|&(_, v)| v).collect())
    }

    fn check_map(&self, map: ModularMap) -> Result<()> {
        if gcd(map.multiplier % self.p, self.p) != 1 {
            return Err(Error::DegenerateOperation(format!(
                "multiplier {} shares a factor with the modulus {}",
                map.multiplier, self.p
            )));
        }
        self.check_exponent(map.exponent)
    }

    fn check_exponent(&self, exponent: u64) -> Result<()> {
        if gcd(exponent, self.index_modulus) != 1 {
            return Err(Error::DegenerateOperation(format!(
                "exponent {} shares a factor with the subgroup order {}; the map is not injective",
                exponent, self.index_modulus
            )));
        }
        Ok(())
    }

    /// Applies `map` to every register-2 value. `actor` must hold register 2.
    ///
    /// Pair order is preserved and the index register is untouched, so the
    /// entanglement pattern survives.
    pub fn apply_value_map(&self, map: ModularMap, actor: Party) -> Result<JointState> {
        if actor != self.holder_reg2 {
            return Err(Error::NotHolder { actor, register: 2 });
        }
        self.check_map(map)?;
        let pairs = self
            .pairs
            .iter()
            .map(|&(i, v)| {
                (
                    i,
                    mul_mod(map.multiplier % self.p, pow_mod(v, map.exponent, self.p), self.p),
                )
            })
            .collect();
        Ok(JointState {
            pairs,
            ..self.clone()
        })
    }

    /// Raises each value to a per-index exponent: `(i, v) -> (i, v^f(i))`.
    ///
    /// This is a map controlled on register 1, so `actor` must hold both
    /// registers. Every produced exponent must be a unit modulo the subgroup
    /// order or the branch map would be irreversible.
    pub fn apply_indexed_exponent<F>(&self, exponent_fn: F, actor: Party) -> Result<JointState>
    where
        F: Fn(u64) -> u64,
    {
        let exponents: Vec<u64> = self.pairs.iter().map(|&(i, _)| exponent_fn(i)).collect();
        self.apply_positional_exponents(&exponents, actor)
    }

    /// Same map with the exponents already laid out pairwise.
    pub(crate) fn apply_positional_exponents(
        &self,
        exponents: &[u64],
        actor: Party,
    ) -> Result<JointState> {
        debug_assert_eq!(exponents.len(), self.pairs.len());
        if actor != self.holder_reg1 {
            return Err(Error::NotHolder { actor, register: 1 });
        }
        if actor != self.holder_reg2 {
            return Err(Error::NotHolder { actor, register: 2 });
        }
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for (&(i, v), &e) in self.pairs.iter().zip(exponents) {
            self.check_exponent(e)?;
            pairs.push((i, pow_mod(v, e, self.p)));
        }
        Ok(JointState {
            pairs,
            ..self.clone()
        })
    }

    /// Hands register 2 to `to`, returning the new state and the value
    /// multiset visible on the channel. The state vector itself is untouched;
    /// register 1 stays with its holder, so the pair remains entangled.
    pub fn transmit_register2(&self, to: Party) -> (JointState, ChannelView) {
        let view = self.channel_view();
        let state = JointState {
            holder_reg2: to,
            ..self.clone()
        };
        (state, view)
    }

    /// Measures register 2 in the computational basis.
    ///
    /// Born rule on the uniform superposition: a value `v` is observed with
    /// probability `multiplicity(v) / N`, and the state collapses to exactly
    /// the pairs carrying that value. Deterministic for a fixed rng state.
    pub fn measure_register2(
        &self,
        actor: Party,
        rng: &mut SplitMix64,
    ) -> Result<(u64, JointState)> {
        if actor != self.holder_reg2 {
            return Err(Error::NotHolder { actor, register: 2 });
        }
        let k = rng.next_below(self.pairs.len() as u64) as usize;
        let observed = self.pairs[k].1;
        Ok((observed, self.collapse_to(observed)))
    }

    /// The post-measurement state for a given observed value.
    pub(crate) fn collapse_to(&self, observed: u64) -> JointState {
        let pairs = self
            .pairs
            .iter()
            .copied()
            .filter(|&(_, v)| v == observed)
            .collect();
        JointState {
            pairs,
            ..self.clone()
        }
    }

    /// Enumerates measurement outcomes exactly: each distinct value with its
    /// multiplicity and collapsed state, in first-appearance order. The
    /// probability of an outcome is `multiplicity / N`.
    pub fn measurement_branches(&self) -> Vec<(u64, usize, JointState)> {
        let mut order = Vec::new();
        for &(_, v) in &self.pairs {
            if !order.contains(&v) {
                order.push(v);
            }
        }
        order
            .into_iter()
            .map(|v| {
                let collapsed = self.collapse_to(v);
                let mult = collapsed.len();
                (v, mult, collapsed)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::Params;
    use proptest::prelude::*;

    fn paper_phi_a() -> JointState {
        JointState::new(vec![(1, 5), (2, 3), (3, 4), (4, 9)], 11, 5, Party::Alice).unwrap()
    }

    #[test]
    fn constructor_accepts_paper_state() {
        let s = paper_phi_a();
        assert_eq!(s.len(), 4);
        assert_eq!(s.holder_reg1(), Party::Alice);
        assert_eq!(s.holder_reg2(), Party::Alice);
    }

    #[test]
    fn constructor_accepts_single_pair() {
        let s = JointState::new(vec![(1, 1)], 11, 5, Party::Alice).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn constructor_rejects_duplicate_index() {
        assert_eq!(
            JointState::new(vec![(1, 5), (1, 3)], 11, 5, Party::Alice),
            Err(Error::DuplicateIndex(1))
        );
    }

    #[test]
    fn constructor_rejects_non_unit_values() {
        assert_eq!(
            JointState::new(vec![(1, 0)], 11, 5, Party::Alice),
            Err(Error::ValueOutOfGroup { value: 0, modulus: 11 })
        );
        assert_eq!(
            JointState::new(vec![(1, 11)], 11, 5, Party::Alice),
            Err(Error::ValueOutOfGroup { value: 11, modulus: 11 })
        );
        assert!(JointState::new(vec![], 11, 5, Party::Alice).is_err());
    }

    #[test]
    fn value_map_matches_paper_step2() {
        // Bob's Step 2 at x = 3, y = 3: multiplier 3, exponent y * xq_inv = 1 (mod 5).
        let (state, _) = paper_phi_a().transmit_register2(Party::Bob);
        let mapped = state
            .apply_value_map(ModularMap { multiplier: 3, exponent: 1 }, Party::Bob)
            .unwrap();
        let values: Vec<u64> = mapped.pairs().iter().map(|&(_, v)| v).collect();
        assert_eq!(values, vec![4, 9, 1, 5]);
    }

    #[test]
    fn identity_map_is_noop() {
        let s = paper_phi_a();
        let t = s
            .apply_value_map(ModularMap { multiplier: 1, exponent: 1 }, Party::Alice)
            .unwrap();
        assert_eq!(s.pairs(), t.pairs());
    }

    #[test]
    fn degenerate_exponent_rejected() {
        // v^5 = 1 on the order-5 subgroup: a constant map.
        let err = paper_phi_a()
            .apply_value_map(ModularMap { multiplier: 1, exponent: 5 }, Party::Alice)
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateOperation(_)));
        let err = paper_phi_a()
            .apply_value_map(ModularMap { multiplier: 1, exponent: 0 }, Party::Alice)
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateOperation(_)));
        let err = paper_phi_a()
            .apply_value_map(ModularMap { multiplier: 11, exponent: 1 }, Party::Alice)
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateOperation(_)));
    }

    #[test]
    fn non_holder_rejected() {
        let s = paper_phi_a();
        assert_eq!(
            s.apply_value_map(ModularMap { multiplier: 3, exponent: 1 }, Party::Bob),
            Err(Error::NotHolder { actor: Party::Bob, register: 2 })
        );
        let (sent, _) = s.transmit_register2(Party::Bob);
        // Bob now holds register 2 but not register 1.
        assert_eq!(
            sent.apply_indexed_exponent(|_| 1, Party::Bob),
            Err(Error::NotHolder { actor: Party::Bob, register: 1 })
        );
        assert_eq!(
            sent.apply_indexed_exponent(|_| 1, Party::Alice),
            Err(Error::NotHolder { actor: Party::Alice, register: 2 })
        );
        let mut rng = SplitMix64::new(0);
        assert_eq!(
            sent.measure_register2(Party::Alice, &mut rng).unwrap_err(),
            Error::NotHolder { actor: Party::Alice, register: 2 }
        );
    }

    #[test]
    fn indexed_exponent_matches_paper_step3() {
        // Phi_D2 with exponent i^-1 mod 5 flattens every value to 5.
        let s = paper_phi_a();
        let t = s
            .apply_indexed_exponent(|i| mod_inverse(i % 5, 5).unwrap_or(0), Party::Alice)
            .unwrap();
        assert_eq!(t.pairs(), &[(1, 5), (2, 5), (3, 5), (4, 5)]);
    }

    #[test]
    fn indexed_identity_is_noop() {
        let s = paper_phi_a();
        assert_eq!(s.apply_indexed_exponent(|_| 1, Party::Alice).unwrap().pairs(), s.pairs());
    }

    #[test]
    fn indexed_degenerate_exponent_rejected() {
        let s = paper_phi_a();
        let err = s
            .apply_indexed_exponent(|i| if i == 2 { 5 } else { 1 }, Party::Alice)
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateOperation(_)));
    }

    #[test]
    fn transmit_reports_multiset_and_keeps_state() {
        let s = paper_phi_a();
        let (sent, view) = s.transmit_register2(Party::Bob);
        assert_eq!(view.values(), &[3, 4, 5, 9]);
        assert_eq!(view.count(), 4);
        assert_eq!(sent.pairs(), s.pairs());
        assert_eq!(sent.holder_reg2(), Party::Bob);
        assert_eq!(sent.holder_reg1(), Party::Alice);
        // A second transmission only retags the holder.
        let (sent2, view2) = sent.transmit_register2(Party::Nancy);
        assert_eq!(view2, view);
        assert_eq!(sent2.pairs(), s.pairs());
        assert_eq!(sent2.holder_reg2(), Party::Nancy);
    }

    #[test]
    fn measurement_collapses_and_repeats() {
        let s = paper_phi_a();
        let mut rng = SplitMix64::new(9);
        let (observed, collapsed) = s.measure_register2(Party::Alice, &mut rng).unwrap();
        assert!([5, 3, 4, 9].contains(&observed));
        assert_eq!(collapsed.len(), 1);
        assert!(collapsed.pairs().iter().all(|&(_, v)| v == observed));
        // Re-measurement is deterministic.
        for seed in 0..50 {
            let mut rng2 = SplitMix64::new(seed);
            let (again, _) = collapsed.measure_register2(Party::Alice, &mut rng2).unwrap();
            assert_eq!(again, observed);
        }
    }

    #[test]
    fn measurement_of_constant_state_is_certain() {
        let s = JointState::new(vec![(1, 5), (2, 5), (3, 5), (4, 5)], 11, 5, Party::Alice).unwrap();
        for seed in 0..20 {
            let mut rng = SplitMix64::new(seed);
            let (observed, collapsed) = s.measure_register2(Party::Alice, &mut rng).unwrap();
            assert_eq!(observed, 5);
            assert_eq!(collapsed.len(), 4);
        }
    }

    #[test]
    fn measurement_frequencies_follow_born_rule() {
        // Multiplicities 2/4 and 1/4 each.
        let s = JointState::new(vec![(1, 3), (2, 3), (3, 4), (4, 9)], 11, 5, Party::Alice).unwrap();
        let trials = 10_000u64;
        let mut counts = std::collections::HashMap::new();
        for t in 0..trials {
            let mut rng = SplitMix64::derive(1000, t);
            let (v, _) = s.measure_register2(Party::Alice, &mut rng).unwrap();
            *counts.entry(v).or_insert(0u64) += 1;
        }
        for (v, expect) in [(3u64, 0.5f64), (4, 0.25), (9, 0.25)] {
            let n = counts[&v] as f64;
            let sigma = (trials as f64 * expect * (1.0 - expect)).sqrt();
            assert!(
                (n - trials as f64 * expect).abs() <= 3.0 * sigma,
                "value {v}: count {n} outside 3 sigma of {}",
                trials as f64 * expect
            );
        }
    }

    #[test]
    fn measurement_branches_enumerate_support() {
        let s = JointState::new(vec![(1, 3), (2, 3), (3, 4)], 11, 5, Party::Alice).unwrap();
        let branches = s.measurement_branches();
        assert_eq!(branches.len(), 2);
        assert_eq!((branches[0].0, branches[0].1), (3, 2));
        assert_eq!((branches[1].0, branches[1].1), (4, 1));
        assert_eq!(branches[0].2.pairs(), &[(1, 3), (2, 3)]);
    }

    #[test]
    fn map_then_inverse_restores_state_small_sweep() {
        // Every prime-order subgroup with p <= 200, canonical generator; all
        // keyed channel states; all unit exponents and a spread of multipliers.
        for p in (3u64..=200).filter(|&p| crate::modmath::is_prime(p)) {
            for q in crate::modmath::prime_factors(p - 1) {
                let g = (2..p)
                    .find(|&c| pow_mod(c, q, p) == 1 && c != 1)
                    .expect("subgroup generator");
                let params = Params::new(p, q, g).unwrap();
                for x in 1..q.min(12) {
                    let pairs: Vec<(u64, u64)> =
                        (1..q).map(|i| (i, pow_mod(g, i * x % q, p))).collect();
                    let state = JointState::new(pairs, p, q, Party::Alice).unwrap();
                    for e in (1..q).filter(|&e| gcd(e, q) == 1).take(8) {
                        for m in [1, x, p - 1, g] {
                            let map = ModularMap { multiplier: m, exponent: e };
                            let mapped = state.apply_value_map(map, Party::Alice).unwrap();
                            let inverse = map.inverse_on(p, q).unwrap();
                            let back = mapped.apply_value_map(inverse, Party::Alice).unwrap();
                            assert_eq!(back.pairs(), state.pairs(), "p={p} q={q} e={e} m={m}");
                        }
                    }
                }
                let _ = params;
            }
        }
    }

    #[test]
    fn injective_on_subgroup_states() {
        // Distinct inputs stay distinct under any admitted map.
        let params = Params::new(23, 11, 2).unwrap();
        let pairs: Vec<(u64, u64)> =
            (1..11).map(|i| (i, pow_mod(params.g(), i, 23))).collect();
        let state = JointState::new(pairs, 23, 11, Party::Alice).unwrap();
        for e in 1..11 {
            for m in 1..23 {
                let mapped = state
                    .apply_value_map(ModularMap { multiplier: m, exponent: e }, Party::Alice)
                    .unwrap();
                let mut values: Vec<u64> = mapped.pairs().iter().map(|&(_, v)| v).collect();
                values.sort_unstable();
                values.dedup();
                assert_eq!(values.len(), 10, "e={e} m={m}");
            }
        }
    }

    proptest! {
        #[test]
        fn prop_value_map_preserves_shape(
            seed in 0u64..5000,
            e in 1u64..5,
            m in 1u64..11,
        ) {
            prop_assume!(gcd(e, 5) == 1);
            let mut rng = SplitMix64::new(seed);
            let pairs: Vec<(u64, u64)> = (1..5)
                .map(|i| (i, pow_mod(3, rng.next_in_range(0, 4), 11)))
                .collect();
            let state = JointState::new(pairs, 11, 5, Party::Alice).unwrap();
            let mapped = state
                .apply_value_map(ModularMap { multiplier: m, exponent: e }, Party::Alice)
                .unwrap();
            prop_assert_eq!(mapped.len(), state.len());
            let idx: Vec<u64> = mapped.pairs().iter().map(|&(i, _)| i).collect();
            let idx0: Vec<u64> = state.pairs().iter().map(|&(i, _)| i).collect();
            prop_assert_eq!(idx, idx0);
        }

        #[test]
        fn prop_measurement_observes_support_value(seed in 0u64..10_000) {
            let state = JointState::new(
                vec![(1, 5), (2, 3), (3, 4), (4, 9)], 11, 5, Party::Alice,
            ).unwrap();
            let mut rng = SplitMix64::new(seed);
            let (v, collapsed) = state.measure_register2(Party::Alice, &mut rng).unwrap();
            prop_assert!(state.pairs().iter().any(|&(_, val)| val == v));
            prop_assert!(collapsed.pairs().iter().all(|&(_, val)| val == v));
            prop_assert!(!collapsed.is_empty());
        }
    }
}
