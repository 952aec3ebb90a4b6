//! Quantitative eavesdropper analyses.
//!
//! Nancy sits on the quantum channel. Four questions are made measurable:
//!
//! * **Case 1** — can she learn the key `x` from a transmitted register?
//!   [`channel_multiset_invariance`] shows the channel multiset is the same
//!   for every key, and [`brute_force_key_recovery`] returns the full key
//!   space: the observation carries zero bits about `x`.
//! * **Case 2** — can she learn the message by measuring the ciphertext in
//!   transit? [`intercept_ciphertext`] records her measured value `C'`, her
//!   best guess, and whether Alice still recovers `y` on the collapsed state
//!   (she always does). [`message_ambiguity_witness`] exhibits, for every
//!   candidate message, a key/index pair consistent with `C'`, and
//!   [`estimate_tv_distance`] puts a number (exactly zero) on the
//!   distinguishability of her views under two messages.
//! * **Case 3** — can she impersonate Alice with a forged key `x'`?
//!   [`forged_channel_attack`] runs her decryption pipeline; the exhaustive
//!   variant counts her success rate exactly against the blind-guess
//!   baseline `1/(q-1)`.
//! * **Case 4** — [`general_case_attack_suite`] reruns the key-recovery and
//!   ambiguity analyses when the index set itself is hidden.
//!
//! Nancy's guessing rule everywhere: take the discrete log of her (key-
//! corrected, where she has a key) observation when it lands in `<g>`,
//! otherwise guess uniformly. With the true key this rule always succeeds;
//! without it the uniform fallback is enumerated exactly, one success slot
//! per `q-1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmath::{
    discrete_log, gcd, mod_inverse, mul_mod, pow_mod, GeneralParams, Params,
};
use crate::protocol::{
    alice_equalize, alice_prepare, alice_prepare_general, alice_unmask, bob_encrypt, Message,
    SecretKey,
};
use crate::qstate::{ChannelView, JointState, ModularMap, Party};
use crate::rng::SplitMix64;

/// Verdict of a multiset-invariance sweep, with the common multiset as
/// witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub holds: bool,
    /// Number of secrets (keys or messages) swept.
    pub checked: u64,
    /// The multiset every secret produced (sorted); meaningful when `holds`.
    pub common_multiset: Vec<u64>,
}

/// One adversary trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    /// Nancy's measured value.
    pub c_prime: u64,
    /// Nancy's guessed message.
    pub guess: u64,
    pub true_y: u64,
    pub success: bool,
    /// What Alice recovered after the interception (intercept trials only).
    pub alice_recovered: Option<u64>,
    pub alice_ok: Option<bool>,
}

/// Aggregated trial outcomes for one attack case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub case_id: u8,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Blind-guess success probability `1/(q-1)`.
    pub baseline_rate: f64,
    pub details: Vec<TrialRecord>,
}

impl AttackReport {
    fn from_details(case_id: u8, baseline_rate: f64, details: Vec<TrialRecord>) -> Self {
        let trials = details.len() as u64;
        let successes = details.iter().filter(|r| r.success).count() as u64;
        AttackReport {
            case_id,
            trials,
            successes,
            success_rate: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            baseline_rate,
            details,
        }
    }
}

/// Exact enumeration of the forged-channel attack over keys, messages,
/// forged keys and measurement branches.
///
/// Counting is in "guess slots": each measurement branch contributes `q-1`
/// slots; a deterministic guess fills all of them (right or wrong), the
/// uniform fallback fills exactly one. This keeps the success rate an exact
/// rational with no sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgedExhaustiveReport {
    /// Number of (x, y, x') triples enumerated.
    pub combos: u64,
    pub success_slots_neq: u64,
    pub total_slots_neq: u64,
    /// Success rate over forged keys distinct from the true key.
    pub rate_neq: f64,
    pub success_slots_eq: u64,
    pub total_slots_eq: u64,
    /// Success rate when Nancy forges with the true key.
    pub rate_eq: f64,
    pub baseline: f64,
    /// Whether `rate_neq` equals the baseline exactly (integer identity).
    pub matches_baseline_exactly: bool,
}

/// Distinguishability of Nancy's ciphertext measurements under two messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguisherReport {
    pub message_pair: (u64, u64),
    pub samples_per_arm: u64,
    pub tv_estimate: f64,
    /// Exact total-variation distance (exact mode only).
    pub exact_tv: Option<f64>,
}

/// How [`estimate_tv_distance`] computes its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMode {
    /// Full enumeration of both measurement distributions.
    Exact,
    /// Seeded Monte Carlo with the given samples per arm.
    Sampled,
}

/// One row of an ambiguity table: `(x, j)` explains the observation for
/// candidate message `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityWitness {
    pub y: u64,
    pub x: u64,
    pub j: u64,
}

/// Case 4 analysis when the index set is hidden from the adversary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralAttackReport {
    /// Observed channel multiset (sorted).
    pub channel: Vec<u64>,
    /// Size of the observed multiset; any explaining index set has this size.
    pub k: usize,
    /// Number of valid keys (units modulo r).
    pub key_space: u64,
    /// Keys consistent with the observation under some index set.
    pub key_candidates: Vec<u64>,
    /// Per-candidate witness: the index set that explains the observation.
    pub explanations: Vec<(u64, Vec<u64>)>,
    /// Whether every candidate message has an explaining (key, index) pair
    /// for every genuine ciphertext value.
    pub ambiguity_complete: bool,
}

/// Case 1: the multiset Alice transmits is identical for every key
/// `x in [1, q-1]`, so it carries no information about `x`.
pub fn channel_multiset_invariance(params: &Params) -> InvarianceReport {
    let mut common: Option<Vec<u64>> = None;
    let mut holds = true;
    let mut checked = 0;
    for x in 1..params.q() {
        let key = SecretKey::derive(x, params.q(), params.p())
            .expect("x in [1, q-1] is a valid key for prime q");
        let view = alice_prepare(params, &key).channel_view();
        let values = view.values().to_vec();
        match &common {
            None => common = Some(values),
            Some(reference) => holds &= reference == &values,
        }
        checked += 1;
    }
    InvarianceReport {
        holds,
        checked,
        common_multiset: common.unwrap_or_default(),
    }
}

/// Case 2 groundwork: the ciphertext multiset is identical for every message
/// `y in [1, q-1]` under a fixed key.
pub fn ciphertext_multiset_invariance(params: &Params, key: &SecretKey) -> InvarianceReport {
    let phi_a = alice_prepare(params, key);
    let (held_by_bob, _) = phi_a.transmit_register2(Party::Bob);
    let mut common: Option<Vec<u64>> = None;
    let mut holds = true;
    let mut checked = 0;
    for y in 1..params.q() {
        let msg = Message::new(y, params).expect("y in [1, q-1]");
        let cipher = bob_encrypt(&held_by_bob, params, key, msg)
            .expect("unit exponent: y and xq_inv are units mod prime q");
        let values = cipher.channel_view().values().to_vec();
        match &common {
            None => common = Some(values),
            Some(reference) => holds &= reference == &values,
        }
        checked += 1;
    }
    InvarianceReport {
        holds,
        checked,
        common_multiset: common.unwrap_or_default(),
    }
}

/// Case 1: every key whose predicted channel multiset matches the view.
/// By the invariance property this is all of `[1, q-1]` for a genuine view,
/// and empty for a multiset that no key explains.
pub fn brute_force_key_recovery(view: &ChannelView, params: &Params) -> Vec<u64> {
    (1..params.q())
        .filter(|&x| {
            let key = SecretKey::derive(x, params.q(), params.p())
                .expect("x in [1, q-1] is a valid key for prime q");
            alice_prepare(params, &key).channel_view().values() == view.values()
        })
        .collect()
}

/// Nancy's Case 2 guessing rule: discrete log of `C'` when it lies in `<g>`,
/// otherwise a uniform guess.
fn nancy_plain_guess(c_prime: u64, params: &Params, rng: &mut SplitMix64) -> u64 {
    match discrete_log(c_prime, params.g(), params.p(), params.q()) {
        Ok(d) => d,
        Err(_) => rng.next_in_range(1, params.q() - 1),
    }
}

fn intercept_inner(
    params: &Params,
    key: &SecretKey,
    msg: Message,
    seed: u64,
    rng: &mut SplitMix64,
) -> Result<TrialRecord> {
    let phi_a = alice_prepare(params, key);
    let (state, _channel_a) = phi_a.transmit_register2(Party::Bob);
    let cipher = bob_encrypt(&state, params, key, msg)?;

    // Nancy pulls the ciphertext register off the channel and measures it.
    let (in_transit, _channel_c) = cipher.transmit_register2(Party::Nancy);
    let (c_prime, collapsed) = in_transit.measure_register2(Party::Nancy, rng)?;
    let guess = nancy_plain_guess(c_prime, params, rng);

    // The collapsed register travels on; Alice finishes the protocol.
    let (to_alice, _) = collapsed.transmit_register2(Party::Alice);
    let unmasked = alice_unmask(&to_alice, key)?;
    let flat = alice_equalize(&unmasked)?;
    let (observed, _) = flat.measure_register2(Party::Alice, rng)?;
    let alice_recovered = discrete_log(observed, params.g(), params.p(), params.q())?;

    Ok(TrialRecord {
        seed,
        c_prime,
        guess,
        true_y: msg.y(),
        success: guess == msg.y(),
        alice_recovered: Some(alice_recovered),
        alice_ok: Some(alice_recovered == msg.y()),
    })
}

/// Case 2: Nancy measures the ciphertext in transit, guesses, and the
/// (collapsed) register continues to Alice.
pub fn intercept_ciphertext(
    params: &Params,
    key: &SecretKey,
    msg: Message,
    seed: u64,
) -> Result<TrialRecord> {
    let mut rng = SplitMix64::new(seed);
    intercept_inner(params, key, msg, seed, &mut rng)
}

/// Runs seeded intercept trials. A fixed message is used when given,
/// otherwise each trial draws its own.
pub fn intercept_trials(
    params: &Params,
    key: &SecretKey,
    msg: Option<Message>,
    trials: u64,
    base_seed: u64,
) -> Result<AttackReport> {
    let mut details = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let seed = base_seed.wrapping_add(t);
        let mut rng = SplitMix64::new(seed);
        let m = match msg {
            Some(m) => m,
            None => Message::new(rng.next_in_range(1, params.q() - 1), params)?,
        };
        details.push(intercept_inner(params, key, m, seed, &mut rng)?);
    }
    Ok(AttackReport::from_details(
        2,
        1.0 / (params.q() - 1) as f64,
        details,
    ))
}

/// Exhaustive Case 2 continuation: for every measurement branch of the
/// in-transit ciphertext, returns `(C', multiplicity, what Alice recovers)`.
pub fn intercept_all_branches(
    params: &Params,
    key: &SecretKey,
    msg: Message,
) -> Result<Vec<(u64, usize, u64)>> {
    let phi_a = alice_prepare(params, key);
    let (state, _) = phi_a.transmit_register2(Party::Bob);
    let cipher = bob_encrypt(&state, params, key, msg)?;
    let (in_transit, _) = cipher.transmit_register2(Party::Nancy);

    let mut out = Vec::new();
    for (c_prime, multiplicity, collapsed) in in_transit.measurement_branches() {
        let (to_alice, _) = collapsed.transmit_register2(Party::Alice);
        let unmasked = alice_unmask(&to_alice, key)?;
        let flat = alice_equalize(&unmasked)?;
        // Post-collapse the flattened state holds a single value.
        let observed = flat.pairs()[0].1;
        debug_assert!(flat.pairs().iter().all(|&(_, v)| v == observed));
        let recovered = discrete_log(observed, params.g(), params.p(), params.q())?;
        out.push((c_prime, multiplicity, recovered));
    }
    Ok(out)
}

/// Case 2: for every candidate message `y*`, a pair `(x', j')` with
/// `x' * g^(j' * y*) = c_prime (mod p)` — every message explains the
/// observation equally well.
pub fn message_ambiguity_witness(c_prime: u64, params: &Params) -> Result<Vec<AmbiguityWitness>> {
    let (p, q, g) = (params.p(), params.q(), params.g());
    let mut table = Vec::with_capacity((q - 1) as usize);
    for y in 1..q {
        let mut found = None;
        for j in 1..q {
            let h = pow_mod(g, mul_mod(j, y, q), p);
            // x' is forced: c_prime * h^-1; it witnesses y iff it is a valid key.
            let x = mul_mod(c_prime % p, mod_inverse(h, p)?, p);
            if x >= 1 && x < q {
                found = Some(AmbiguityWitness { y, x, j });
                break;
            }
        }
        match found {
            Some(w) => table.push(w),
            None => return Err(Error::NoWitness { c_prime, y }),
        }
    }
    Ok(table)
}

/// Nancy's forged-channel state: she plays Alice's role with key `x'`.
fn nancy_prepare(params: &Params, forged_key: &SecretKey) -> Result<JointState> {
    let pairs: Vec<(u64, u64)> = (1..params.q())
        .map(|i| {
            (
                i,
                pow_mod(
                    params.g(),
                    mul_mod(i, forged_key.x(), params.q()),
                    params.p(),
                ),
            )
        })
        .collect();
    JointState::new(pairs, params.p(), params.q(), Party::Nancy)
}

/// Runs Nancy's Case 3 decryption pipeline, returning her final state:
/// value-map exponent `x'^-1 mod q`, then indexed exponent `i^-1 mod q`.
/// Exponents act on whole register values.
fn forged_final_state(
    params: &Params,
    bob_key: &SecretKey,
    msg: Message,
    forged_key: &SecretKey,
) -> Result<JointState> {
    let q = params.q();
    let state = nancy_prepare(params, forged_key)?;
    let (state, _) = state.transmit_register2(Party::Bob);
    let cipher = bob_encrypt(&state, params, bob_key, msg)?;
    let (state, _) = cipher.transmit_register2(Party::Nancy);
    let state = state.apply_value_map(
        ModularMap {
            multiplier: 1,
            exponent: forged_key.xq_inv(),
        },
        Party::Nancy,
    )?;
    state.apply_indexed_exponent(|i| mod_inverse(i % q, q).unwrap_or(0), Party::Nancy)
}

/// Nancy's deterministic Case 3 guess for branch `(j, v)`, when her
/// key-corrected value lands in `<g>`.
///
/// Believing her forged key is the true one, she strips the key factor her
/// own pipeline would have produced on branch `j` — `x'^(e1 * e2(j))`, the
/// exponents composed as integers exactly as the maps applied them — and
/// reads the message off the residual discrete log, rescaling by `x'`.
fn nancy_forged_guess(
    params: &Params,
    forged_key: &SecretKey,
    j: u64,
    v: u64,
) -> Result<Option<u64>> {
    let (p, q, g) = (params.p(), params.q(), params.g());
    let e1 = forged_key.xq_inv();
    let e2 = mod_inverse(j % q, q)?;
    let predicted_key_part = pow_mod(forged_key.x(), e1 * e2, p);
    let corrected = mul_mod(v, mod_inverse(predicted_key_part, p)?, p);
    match discrete_log(corrected, g, p, q) {
        Ok(d) => Ok(Some(mul_mod(d, forged_key.x(), q))),
        Err(_) => Ok(None),
    }
}

/// Case 3: Nancy forges Alice's channel with `forged_x`, Bob encrypts
/// honestly, and Nancy decrypts with her own key material.
pub fn forged_channel_attack(
    params: &Params,
    bob_key: &SecretKey,
    msg: Message,
    forged_x: u64,
    seed: u64,
) -> Result<TrialRecord> {
    let mut rng = SplitMix64::new(seed);
    let forged_key = SecretKey::derive(forged_x, params.q(), params.p())?;
    let final_state = forged_final_state(params, bob_key, msg, &forged_key)?;

    // Measure register 2, then register 1 among the compatible branches.
    let (observed, collapsed) = final_state.measure_register2(Party::Nancy, &mut rng)?;
    let branch = collapsed.pairs()[rng.next_below(collapsed.len() as u64) as usize].0;

    let guess = match nancy_forged_guess(params, &forged_key, branch, observed)? {
        Some(g) => g,
        None => rng.next_in_range(1, params.q() - 1),
    };
    Ok(TrialRecord {
        seed,
        c_prime: observed,
        guess,
        true_y: msg.y(),
        success: guess == msg.y(),
        alice_recovered: None,
        alice_ok: None,
    })
}

/// Seeded Case 3 trials with a fixed forged key.
pub fn forged_trials(
    params: &Params,
    bob_key: &SecretKey,
    msg: Message,
    forged_x: u64,
    trials: u64,
    base_seed: u64,
) -> Result<AttackReport> {
    let mut details = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let seed = base_seed.wrapping_add(t);
        details.push(forged_channel_attack(params, bob_key, msg, forged_x, seed)?);
    }
    Ok(AttackReport::from_details(
        3,
        1.0 / (params.q() - 1) as f64,
        details,
    ))
}

/// Exact Case 3 enumeration over all `(x, y, x')` and measurement branches.
pub fn forged_channel_exhaustive(params: &Params) -> Result<ForgedExhaustiveReport> {
    let q = params.q();
    let guess_slots = q - 1;
    let mut combos = 0u64;
    let (mut succ_neq, mut tot_neq) = (0u64, 0u64);
    let (mut succ_eq, mut tot_eq) = (0u64, 0u64);

    for x in 1..q {
        let bob_key = SecretKey::derive(x, q, params.p())?;
        for y in 1..q {
            let msg = Message::new(y, params)?;
            for forged_x in 1..q {
                combos += 1;
                let forged_key = SecretKey::derive(forged_x, q, params.p())?;
                let final_state = forged_final_state(params, &bob_key, msg, &forged_key)?;
                // Each basis pair is one measurement branch of weight 1/(q-1).
                for &(j, v) in final_state.pairs() {
                    let slots = match nancy_forged_guess(params, &forged_key, j, v)? {
                        Some(guess) if guess == y => guess_slots,
                        Some(_) => 0,
                        // Uniform fallback: exactly one guess in q-1 is right.
                        None => 1,
                    };
                    if forged_x == x {
                        succ_eq += slots;
                        tot_eq += guess_slots;
                    } else {
                        succ_neq += slots;
                        tot_neq += guess_slots;
                    }
                }
            }
        }
    }
    let rate = |s: u64, t: u64| if t == 0 { 0.0 } else { s as f64 / t as f64 };
    Ok(ForgedExhaustiveReport {
        combos,
        success_slots_neq: succ_neq,
        total_slots_neq: tot_neq,
        rate_neq: rate(succ_neq, tot_neq),
        success_slots_eq: succ_eq,
        total_slots_eq: tot_eq,
        rate_eq: rate(succ_eq, tot_eq),
        baseline: 1.0 / guess_slots as f64,
        matches_baseline_exactly: succ_neq as u128 * guess_slots as u128 == tot_neq as u128,
    })
}

/// `(1/2) * sum_v |P1(v) - P2(v)|` for two empirical counts over `n` draws.
fn total_variation(
    counts1: &BTreeMap<u64, u64>,
    counts2: &BTreeMap<u64, u64>,
    n: u64,
) -> f64 {
    let support: std::collections::BTreeSet<u64> =
        counts1.keys().chain(counts2.keys()).copied().collect();
    let abs_diff: u64 = support
        .into_iter()
        .map(|v| {
            counts1
                .get(&v)
                .copied()
                .unwrap_or(0)
                .abs_diff(counts2.get(&v).copied().unwrap_or(0))
        })
        .sum();
    abs_diff as f64 / (2 * n) as f64
}

fn ciphertext_state(params: &Params, key: &SecretKey, y: u64) -> Result<JointState> {
    let msg = Message::new(y, params)?;
    let phi_a = alice_prepare(params, key);
    let (state, _) = phi_a.transmit_register2(Party::Bob);
    let cipher = bob_encrypt(&state, params, key, msg)?;
    let (in_transit, _) = cipher.transmit_register2(Party::Nancy);
    Ok(in_transit)
}

/// Total-variation distance between Nancy's ciphertext-measurement
/// distributions under `y1` and `y2`.
pub fn estimate_tv_distance(
    params: &Params,
    key: &SecretKey,
    y1: u64,
    y2: u64,
    mode: TvMode,
    samples: u64,
    seed: u64,
) -> Result<DistinguisherReport> {
    let state1 = ciphertext_state(params, key, y1)?;
    let state2 = ciphertext_state(params, key, y2)?;
    match mode {
        TvMode::Exact => {
            let mut counts1: BTreeMap<u64, u64> = BTreeMap::new();
            let mut counts2: BTreeMap<u64, u64> = BTreeMap::new();
            for &(_, v) in state1.pairs() {
                *counts1.entry(v).or_insert(0) += 1;
            }
            for &(_, v) in state2.pairs() {
                *counts2.entry(v).or_insert(0) += 1;
            }
            let n = state1.len() as u64;
            debug_assert_eq!(n, state2.len() as u64);
            let tv = total_variation(&counts1, &counts2, n);
            Ok(DistinguisherReport {
                message_pair: (y1, y2),
                samples_per_arm: n,
                tv_estimate: tv,
                exact_tv: Some(tv),
            })
        }
        TvMode::Sampled => {
            let mut counts1: BTreeMap<u64, u64> = BTreeMap::new();
            let mut counts2: BTreeMap<u64, u64> = BTreeMap::new();
            for t in 0..samples {
                let mut rng1 = SplitMix64::derive(seed, 2 * t);
                let mut rng2 = SplitMix64::derive(seed, 2 * t + 1);
                let (v1, _) = state1.measure_register2(Party::Nancy, &mut rng1)?;
                let (v2, _) = state2.measure_register2(Party::Nancy, &mut rng2)?;
                *counts1.entry(v1).or_insert(0) += 1;
                *counts2.entry(v2).or_insert(0) += 1;
            }
            let tv = total_variation(&counts1, &counts2, samples);
            Ok(DistinguisherReport {
                message_pair: (y1, y2),
                samples_per_arm: samples,
                tv_estimate: tv,
                exact_tv: None,
            })
        }
    }
}

/// Units modulo `m` in `[1, m-1]`.
fn units(m: u64) -> Vec<u64> {
    (1..m).filter(|&a| gcd(a, m) == 1).collect()
}

/// Case 4: key recovery and message ambiguity when the index set is hidden.
///
/// Nancy sees the channel multiset of size `k`. For every candidate key the
/// explaining index set is reconstructed (and verified); the report lists
/// each `(key, index set)` explanation. The ambiguity rerun checks that for
/// every genuine ciphertext value and every candidate message some
/// `(key, index)` pair explains the observation.
pub fn general_case_attack_suite(
    gp: &GeneralParams,
    key_x: u64,
    msg_y: u64,
) -> Result<GeneralAttackReport> {
    let (p, g, r) = (gp.p(), gp.g(), gp.r());
    if msg_y == 0 || msg_y >= r || gcd(msg_y, r) != 1 {
        return Err(Error::InvalidMessage { y: msg_y, order: r });
    }
    let channel = alice_prepare_general(gp, key_x)?.channel_view();
    let observed: Vec<u64> = channel.values().to_vec();
    let k = observed.len();

    // Exponent multiset of the observation, recoverable because g and p are
    // public and every value lies in <g>.
    let mut exponents = Vec::with_capacity(k);
    for &v in &observed {
        exponents.push(discrete_log(v, g, p, r)?);
    }

    let candidate_keys = units(r);
    let key_space = candidate_keys.len() as u64;
    let mut key_candidates = Vec::new();
    let mut explanations = Vec::new();
    for &x in &candidate_keys {
        let x_inv = mod_inverse(x, r)?;
        let mut subset: Vec<u64> = exponents.iter().map(|&m| mul_mod(m, x_inv, r)).collect();
        subset.sort_unstable();
        let distinct = subset.windows(2).all(|w| w[0] != w[1]);
        let valid = distinct && subset.iter().all(|&a| a >= 1 && a < r && gcd(a, r) == 1);
        if !valid {
            continue;
        }
        // Verify by reconstruction.
        let mut predicted: Vec<u64> =
            subset.iter().map(|&a| pow_mod(g, mul_mod(a, x, r), p)).collect();
        predicted.sort_unstable();
        if predicted == observed {
            key_candidates.push(x);
            explanations.push((x, subset));
        }
    }

    // Message-ambiguity rerun against every genuine ciphertext value.
    let key = SecretKey::derive(key_x, r, p)?;
    let mut ambiguity_complete = true;
    'outer: for &a in gp.index_set() {
        let c_prime = mul_mod(
            key.x(),
            pow_mod(g, mul_mod(a, msg_y, r), p),
            p,
        );
        for &y_star in &candidate_keys {
            let mut found = false;
            for &a_prime in &candidate_keys {
                let h = pow_mod(g, mul_mod(a_prime, y_star, r), p);
                let x_prime = mul_mod(c_prime, mod_inverse(h, p)?, p);
                if x_prime >= 1 && x_prime < r && gcd(x_prime, r) == 1 {
                    found = true;
                    break;
                }
            }
            if !found {
                ambiguity_complete = false;
                break 'outer;
            }
        }
    }

    Ok(GeneralAttackReport {
        channel: observed,
        k,
        key_space,
        key_candidates,
        explanations,
        ambiguity_complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> (Params, SecretKey) {
        (
            Params::new(11, 5, 3).unwrap(),
            SecretKey::derive(3, 5, 11).unwrap(),
        )
    }

    #[test]
    fn channel_invariance_on_paper_params() {
        let (params, _) = paper();
        let report = channel_multiset_invariance(&params);
        assert!(report.holds);
        assert_eq!(report.checked, 4);
        assert_eq!(report.common_multiset, vec![3, 4, 5, 9]);
    }

    #[test]
    fn channel_invariance_on_23() {
        let params = Params::new(23, 11, 2).unwrap();
        assert!(channel_multiset_invariance(&params).holds);
    }

    #[test]
    fn ciphertext_invariance_on_paper_params() {
        let (params, key) = paper();
        let report = ciphertext_multiset_invariance(&params, &key);
        assert!(report.holds);
        assert_eq!(report.common_multiset, vec![1, 4, 5, 9]);
    }

    #[test]
    fn ciphertext_multiset_with_identity_key_is_channel_multiset() {
        let (params, _) = paper();
        let key = SecretKey::derive(1, 5, 11).unwrap();
        let report = ciphertext_multiset_invariance(&params, &key);
        assert!(report.holds);
        assert_eq!(
            report.common_multiset,
            channel_multiset_invariance(&params).common_multiset
        );
    }

    #[test]
    fn ciphertext_invariance_on_23() {
        let params = Params::new(23, 11, 2).unwrap();
        let key = SecretKey::derive(4, 11, 23).unwrap();
        assert!(ciphertext_multiset_invariance(&params, &key).holds);
    }

    #[test]
    fn brute_force_returns_full_key_space() {
        let (params, key) = paper();
        let view = alice_prepare(&params, &key).channel_view();
        assert_eq!(brute_force_key_recovery(&view, &params), vec![1, 2, 3, 4]);
    }

    #[test]
    fn brute_force_minimal_q3() {
        let params = Params::new(7, 3, 2).unwrap();
        let key = SecretKey::derive(2, 3, 7).unwrap();
        let view = alice_prepare(&params, &key).channel_view();
        assert_eq!(brute_force_key_recovery(&view, &params), vec![1, 2]);
    }

    #[test]
    fn brute_force_rejects_inconsistent_view() {
        let (params, _) = paper();
        let bogus = JointState::new(vec![(1, 2), (2, 6), (3, 7), (4, 8)], 11, 5, Party::Nancy)
            .unwrap()
            .channel_view();
        assert!(brute_force_key_recovery(&bogus, &params).is_empty());
    }

    #[test]
    fn intercept_observes_ciphertext_values_and_alice_survives() {
        let (params, key) = paper();
        let msg = Message::new(3, &params).unwrap();
        let mut seen = std::collections::HashSet::new();
        for seed in 0..200 {
            let rec = intercept_ciphertext(&params, &key, msg, seed).unwrap();
            assert!([4, 9, 1, 5].contains(&rec.c_prime), "C' = {}", rec.c_prime);
            assert_eq!(rec.alice_recovered, Some(3));
            assert_eq!(rec.alice_ok, Some(true));
            seen.insert(rec.c_prime);
        }
        assert_eq!(seen.len(), 4, "all four branches should occur");
    }

    #[test]
    fn intercept_branches_all_recover() {
        let (params, key) = paper();
        for y in 1..5 {
            let msg = Message::new(y, &params).unwrap();
            let branches = intercept_all_branches(&params, &key, msg).unwrap();
            assert_eq!(branches.len(), 4);
            for (c_prime, mult, recovered) in branches {
                assert_eq!(mult, 1);
                assert_eq!(recovered, y, "C'={c_prime}");
            }
        }
    }

    #[test]
    fn intercept_observation_distribution_is_message_independent() {
        let (params, key) = paper();
        let mut dists = Vec::new();
        for y in 1..5 {
            let msg = Message::new(y, &params).unwrap();
            let mut outcome: Vec<(u64, usize)> = intercept_all_branches(&params, &key, msg)
                .unwrap()
                .into_iter()
                .map(|(c, m, _)| (c, m))
                .collect();
            outcome.sort_unstable();
            dists.push(outcome);
        }
        assert!(dists.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn intercept_report_shape() {
        let (params, key) = paper();
        let report = intercept_trials(&params, &key, None, 50, 7).unwrap();
        assert_eq!(report.case_id, 2);
        assert_eq!(report.trials, 50);
        assert_eq!(report.baseline_rate, 0.25);
        assert_eq!(report.details.len(), 50);
        assert!(report.details.iter().all(|r| r.alice_ok == Some(true)));
        assert_eq!(
            report.successes,
            report.details.iter().filter(|r| r.success).count() as u64
        );
    }

    #[test]
    fn ambiguity_witness_covers_every_message() {
        let (params, _) = paper();
        for c_prime in [4u64, 9, 1, 5] {
            let table = message_ambiguity_witness(c_prime, &params).unwrap();
            assert_eq!(table.len(), 4);
            for w in table {
                assert!(w.x >= 1 && w.x < 5);
                assert!(w.j >= 1 && w.j < 5);
                let predicted = mul_mod(w.x, pow_mod(3, mul_mod(w.j, w.y, 5), 11), 11);
                assert_eq!(predicted, c_prime, "witness must reproduce C'");
            }
        }
    }

    #[test]
    fn ambiguity_witness_contains_true_explanation() {
        let (params, key) = paper();
        let msg = Message::new(2, &params).unwrap();
        // C' from branch j = 3 of the true session.
        let c_prime = mul_mod(
            key.x(),
            pow_mod(params.g(), mul_mod(3, msg.y(), 5), 11),
            11,
        );
        let table = message_ambiguity_witness(c_prime, &params).unwrap();
        let row = table.iter().find(|w| w.y == msg.y()).unwrap();
        let predicted = mul_mod(row.x, pow_mod(3, mul_mod(row.j, row.y, 5), 11), 11);
        assert_eq!(predicted, c_prime);
    }

    #[test]
    fn ambiguity_witness_rejects_zero() {
        let (params, _) = paper();
        assert!(matches!(
            message_ambiguity_witness(0, &params),
            Err(Error::NoWitness { c_prime: 0, y: 1 })
        ));
    }

    #[test]
    fn forged_pipeline_matches_hand_computation() {
        let (params, bob_key) = paper();
        let msg = Message::new(3, &params).unwrap();
        let forged_key = SecretKey::derive(2, 5, 11).unwrap();
        let state = forged_final_state(&params, &bob_key, msg, &forged_key).unwrap();
        assert_eq!(state.pairs(), &[(1, 4), (2, 1), (3, 9), (4, 5)]);
    }

    #[test]
    fn forged_with_true_key_always_succeeds() {
        let (params, bob_key) = paper();
        for y in 1..5 {
            let msg = Message::new(y, &params).unwrap();
            for seed in 0..40 {
                let rec =
                    forged_channel_attack(&params, &bob_key, msg, bob_key.x(), seed).unwrap();
                assert!(rec.success, "y={y} seed={seed}");
                assert_eq!(rec.guess, y);
            }
        }
    }

    #[test]
    fn forged_exhaustive_matches_blind_guess_baseline() {
        let (params, _) = paper();
        let report = forged_channel_exhaustive(&params).unwrap();
        assert_eq!(report.combos, 4 * 4 * 4);
        assert!(report.matches_baseline_exactly);
        assert_eq!(report.rate_neq, 0.25);
        assert_eq!(report.rate_eq, 1.0);
        assert_eq!(report.success_slots_eq, report.total_slots_eq);
    }

    #[test]
    fn forged_trials_report_shape() {
        let (params, bob_key) = paper();
        let msg = Message::new(3, &params).unwrap();
        let report = forged_trials(&params, &bob_key, msg, 2, 30, 11).unwrap();
        assert_eq!(report.case_id, 3);
        assert_eq!(report.trials, 30);
        assert!(report.details.iter().all(|r| r.alice_recovered.is_none()));
    }

    #[test]
    fn tv_exact_is_zero_for_all_message_pairs() {
        let (params, key) = paper();
        for y1 in 1..5 {
            for y2 in 1..5 {
                let rep =
                    estimate_tv_distance(&params, &key, y1, y2, TvMode::Exact, 0, 0).unwrap();
                assert_eq!(rep.exact_tv, Some(0.0), "y1={y1} y2={y2}");
                assert_eq!(rep.tv_estimate, 0.0);
            }
        }
    }

    #[test]
    fn tv_exact_detects_distinct_distributions() {
        // Sanity check that the distance is not identically zero: compare the
        // ciphertext distribution against itself under two different keys.
        let params = Params::new(11, 5, 3).unwrap();
        let k2 = SecretKey::derive(2, 5, 11).unwrap();
        let s1 = ciphertext_state(&params, &k2, 1).unwrap();
        // Key 2 coset {2,6,7,10,8} minus identity point differs from key 1's.
        let k1 = SecretKey::derive(1, 5, 11).unwrap();
        let s2 = ciphertext_state(&params, &k1, 1).unwrap();
        assert_ne!(s1.channel_view(), s2.channel_view());
    }

    #[test]
    fn tv_sampled_is_small() {
        let (params, key) = paper();
        let rep =
            estimate_tv_distance(&params, &key, 1, 3, TvMode::Sampled, 10_000, 42).unwrap();
        assert!(rep.exact_tv.is_none());
        assert!(
            rep.tv_estimate <= 0.05,
            "sampled TV {} exceeds tolerance",
            rep.tv_estimate
        );
    }

    #[test]
    fn general_suite_full_index_set_matches_base_case() {
        let gp = GeneralParams::new(11, 3, (1..5).collect()).unwrap();
        let report = general_case_attack_suite(&gp, 3, 3).unwrap();
        assert_eq!(report.k, 4);
        assert_eq!(report.key_candidates, vec![1, 2, 3, 4]);
        assert_eq!(report.key_space, 4);
        assert!(report.ambiguity_complete);
        // Same candidate set as base-case brute force.
        let params = Params::new(11, 5, 3).unwrap();
        let key = SecretKey::derive(3, 5, 11).unwrap();
        let view = alice_prepare(&params, &key).channel_view();
        assert_eq!(
            report.key_candidates,
            brute_force_key_recovery(&view, &params)
        );
    }

    #[test]
    fn general_suite_hidden_subset() {
        let gp = GeneralParams::new(11, 3, vec![1, 3]).unwrap();
        let report = general_case_attack_suite(&gp, 3, 3).unwrap();
        assert_eq!(report.k, 2);
        // Every key remains consistent: ambiguity at least the base case's.
        assert_eq!(report.key_candidates, vec![1, 2, 3, 4]);
        assert_eq!(report.explanations.len(), 4);
        for (x, subset) in &report.explanations {
            let mut predicted: Vec<u64> = subset
                .iter()
                .map(|&a| pow_mod(3, mul_mod(a, *x, 5), 11))
                .collect();
            predicted.sort_unstable();
            assert_eq!(predicted, report.channel);
        }
        assert!(report.ambiguity_complete);
    }

    #[test]
    fn general_suite_single_index_every_key_consistent() {
        let gp = GeneralParams::new(11, 3, vec![2]).unwrap();
        let report = general_case_attack_suite(&gp, 3, 1).unwrap();
        assert_eq!(report.k, 1);
        assert_eq!(report.key_candidates, vec![1, 2, 3, 4]);
    }

    #[test]
    fn general_suite_rejects_bad_inputs() {
        let gp = GeneralParams::new(11, 2, vec![1, 3]).unwrap(); // r = 10
        assert!(matches!(
            general_case_attack_suite(&gp, 5, 1),
            Err(Error::InvalidKey { .. })
        ));
        assert!(matches!(
            general_case_attack_suite(&gp, 3, 5),
            Err(Error::InvalidMessage { .. })
        ));
    }
}
