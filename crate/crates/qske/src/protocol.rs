//! The honest two-party protocol.
//!
//! Alice and Bob share a secret key `x`. One session transfers a message
//! `y` from Bob to Alice:
//!
//! 1. Alice prepares `(1/sqrt(q-1)) sum_i |i> |g^(i*x mod q) mod p>` for
//!    `i = 1..q-1` and sends register 2 to Bob.
//! 2. Bob applies `v -> x * v^(y * xq_inv mod q)`, turning the values into
//!    `x * g_i^y mod p`, and sends the register back.
//! 3. Alice multiplies by `xp_inv` (values become `g_i^y`), raises each
//!    branch to `i^-1 mod q` (all values become `g^y`), measures, and takes
//!    the discrete log to recover `y`.
//!
//! The message space is `[1, q-1]`: `y = 0 (mod q)` would make Bob's
//! exponent map constant, and recovery is only ever defined modulo `q`.
//! The general variant replaces `q` with the exact order `r` of `g` and the
//! full index range with an arbitrary set of units modulo `r`; keys and
//! messages must then be units modulo `r` for the same reason.

use crate::error::{Error, Result};
use crate::modmath::{discrete_log, gcd, mod_inverse, mul_mod, pow_mod, GeneralParams, Params};
use crate::qstate::{ChannelView, JointState, ModularMap, Party};
use crate::rng::SplitMix64;

/// Shared secret key with its two precomputed inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecretKey {
    x: u64,
    xq_inv: u64,
    xp_inv: u64,
}

impl SecretKey {
    /// Builds the key material for `x` under a subgroup of order `order`
    /// modulo `p`. `x` must lie in `[1, order - 1]` and be a unit modulo
    /// `order` (automatic when `order` is prime).
    pub fn derive(x: u64, order: u64, p: u64) -> Result<SecretKey> {
        if x == 0 || x >= order || gcd(x, order) != 1 {
            return Err(Error::InvalidKey { x, order });
        }
        let xq_inv = mod_inverse(x, order)?;
        let xp_inv = mod_inverse(x, p)?;
        debug_assert_eq!(mul_mod(x, xq_inv, order), 1);
        debug_assert_eq!(mul_mod(x, xp_inv, p), 1);
        Ok(SecretKey { x, xq_inv, xp_inv })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    /// `x^-1 mod q` (or mod `r` in the general variant).
    pub fn xq_inv(&self) -> u64 {
        self.xq_inv
    }

    /// `x^-1 mod p`.
    pub fn xp_inv(&self) -> u64 {
        self.xp_inv
    }
}

/// Draws a uniform secret key `x` in `[1, q-1]`.
pub fn keygen(params: &Params, rng: &mut SplitMix64) -> SecretKey {
    let x = rng.next_in_range(1, params.q() - 1);
    SecretKey::derive(x, params.q(), params.p()).expect("x in [1, q-1] is always a valid key")
}

/// A message, an integer in `[1, q-1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    y: u64,
}

impl Message {
    pub fn new(y: u64, params: &Params) -> Result<Message> {
        if y == 0 || y >= params.q() {
            return Err(Error::InvalidMessage { y, order: params.q() });
        }
        Ok(Message { y })
    }

    pub fn y(&self) -> u64 {
        self.y
    }
}

/// Parameters a transcript was produced under.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionParams {
    Base(Params),
    General(GeneralParams),
}

/// Full record of one protocol run: every intermediate state, the channel
/// views an eavesdropper could have observed, and the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub session: SessionParams,
    pub key: SecretKey,
    pub message: u64,
    pub seed: u64,
    pub phi_a: Vec<(u64, u64)>,
    pub channel_a: ChannelView,
    pub phi_c: Vec<(u64, u64)>,
    pub channel_c: ChannelView,
    pub phi_d1: Vec<(u64, u64)>,
    pub phi_d2: Vec<(u64, u64)>,
    pub phi_d3: Vec<(u64, u64)>,
    pub measured: u64,
    pub recovered: u64,
}

/// Step 1: Alice's keyed channel state, `(i, g^(i*x mod q))` for `i = 1..q-1`,
/// both registers held by Alice.
pub fn alice_prepare(params: &Params, key: &SecretKey) -> JointState {
    let pairs: Vec<(u64, u64)> = (1..params.q())
        .map(|i| (i, pow_mod(params.g(), mul_mod(i, key.x(), params.q()), params.p())))
        .collect();
    JointState::new(pairs, params.p(), params.q(), Party::Alice)
        .expect("prepared pairs satisfy the state invariants")
}

/// Step 2: Bob's encryption map, `v -> x * v^(y * xq_inv mod q)`.
pub fn bob_encrypt(
    state: &JointState,
    params: &Params,
    key: &SecretKey,
    msg: Message,
) -> Result<JointState> {
    let exponent = mul_mod(msg.y(), key.xq_inv(), params.q());
    let map = ModularMap {
        multiplier: key.x() % params.p(),
        exponent,
    };
    state.apply_value_map(map, Party::Bob)
}

/// Step 3a: Alice strips the multiplier, `v -> xp_inv * v`. She must hold
/// both registers (the ciphertext has come back).
pub fn alice_unmask(state: &JointState, key: &SecretKey) -> Result<JointState> {
    if state.holder_reg1() != Party::Alice {
        return Err(Error::NotHolder {
            actor: Party::Alice,
            register: 1,
        });
    }
    state.apply_value_map(
        ModularMap {
            multiplier: key.xp_inv(),
            exponent: 1,
        },
        Party::Alice,
    )
}

/// Step 3b: Alice raises each branch to `i^-1 mod q`, flattening every value
/// to `g^y`.
///
/// The branch inverses are batch-computed (prefix products and a single
/// extended Euclid); a non-unit index degrades to the per-index path so the
/// degenerate-operation error names the offender.
pub fn alice_equalize(state: &JointState) -> Result<JointState> {
    let q = state.index_modulus();
    let indices: Vec<u64> = state.pairs().iter().map(|&(i, _)| i % q).collect();
    let n = indices.len();

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(1u64);
    for &i in &indices {
        prefix.push(mul_mod(prefix[prefix.len() - 1], i, q));
    }
    let Ok(mut suffix_inv) = mod_inverse(prefix[n], q) else {
        // Some index shares a factor with q; exponent 0 trips the
        // degeneracy check on exactly that branch.
        return state.apply_indexed_exponent(|i| mod_inverse(i % q, q).unwrap_or(0), Party::Alice);
    };
    let mut exponents = vec![0u64; n];
    for k in (0..n).rev() {
        exponents[k] = mul_mod(suffix_inv, prefix[k], q);
        suffix_inv = mul_mod(suffix_inv, indices[k], q);
    }
    state.apply_positional_exponents(&exponents, Party::Alice)
}

/// Step 3c: Alice measures `g^y` and takes its discrete log.
pub fn alice_recover(state: &JointState, params: &Params, rng: &mut SplitMix64) -> Result<u64> {
    let (observed, _) = state.measure_register2(Party::Alice, rng)?;
    discrete_log(observed, params.g(), params.p(), params.q())
}

struct Pipeline {
    phi_a: Vec<(u64, u64)>,
    channel_a: ChannelView,
    phi_c: Vec<(u64, u64)>,
    channel_c: ChannelView,
    phi_d1: Vec<(u64, u64)>,
    phi_d2: Vec<(u64, u64)>,
    phi_d3: Vec<(u64, u64)>,
    measured: u64,
    recovered: u64,
}

/// Shared honest pipeline for the base and general variants.
fn run_pipeline(
    p: u64,
    g: u64,
    order: u64,
    indices: &[u64],
    key: &SecretKey,
    y: u64,
    seed: u64,
) -> Result<Pipeline> {
    let mut rng = SplitMix64::new(seed);

    let pairs: Vec<(u64, u64)> = indices
        .iter()
        .map(|&i| (i, pow_mod(g, mul_mod(i, key.x(), order), p)))
        .collect();
    let state = JointState::new(pairs, p, order, Party::Alice)?;
    let phi_a = state.pairs().to_vec();

    let (state, channel_a) = state.transmit_register2(Party::Bob);

    let encrypt = ModularMap {
        multiplier: key.x() % p,
        exponent: mul_mod(y, key.xq_inv(), order),
    };
    let state = state.apply_value_map(encrypt, Party::Bob)?;
    let phi_c = state.pairs().to_vec();

    let (state, channel_c) = state.transmit_register2(Party::Alice);
    let phi_d1 = state.pairs().to_vec();

    let state = alice_unmask(&state, key)?;
    let phi_d2 = state.pairs().to_vec();

    let state = alice_equalize(&state)?;
    let phi_d3 = state.pairs().to_vec();

    let (measured, _) = state.measure_register2(Party::Alice, &mut rng)?;
    let recovered = discrete_log(measured, g, p, order)?;

    Ok(Pipeline {
        phi_a,
        channel_a,
        phi_c,
        channel_c,
        phi_d1,
        phi_d2,
        phi_d3,
        measured,
        recovered,
    })
}

/// Runs one honest session end to end and records every snapshot.
pub fn run_session(
    params: &Params,
    key: &SecretKey,
    msg: Message,
    seed: u64,
) -> Result<SessionTranscript> {
    let indices: Vec<u64> = (1..params.q()).collect();
    let out = run_pipeline(
        params.p(),
        params.g(),
        params.q(),
        &indices,
        key,
        msg.y(),
        seed,
    )?;
    Ok(SessionTranscript {
        session: SessionParams::Base(*params),
        key: *key,
        message: msg.y(),
        seed,
        phi_a: out.phi_a,
        channel_a: out.channel_a,
        phi_c: out.phi_c,
        channel_c: out.channel_c,
        phi_d1: out.phi_d1,
        phi_d2: out.phi_d2,
        phi_d3: out.phi_d3,
        measured: out.measured,
        recovered: out.recovered,
    })
}

/// General-variant Step 1: `(a_i, g^(a_i * x mod r))` over the index set.
pub fn alice_prepare_general(gp: &GeneralParams, key_x: u64) -> Result<JointState> {
    if key_x == 0 || key_x >= gp.r() || gcd(key_x, gp.r()) != 1 {
        return Err(Error::InvalidKey {
            x: key_x,
            order: gp.r(),
        });
    }
    let pairs: Vec<(u64, u64)> = gp
        .index_set()
        .iter()
        .map(|&a| (a, pow_mod(gp.g(), mul_mod(a, key_x, gp.r()), gp.p())))
        .collect();
    JointState::new(pairs, gp.p(), gp.r(), Party::Alice)
}

/// Runs one general-variant session. `key_x` and `msg_y` must be units
/// modulo `r`; recovery yields `msg_y` exactly.
pub fn run_session_general(
    gp: &GeneralParams,
    key_x: u64,
    msg_y: u64,
    seed: u64,
) -> Result<SessionTranscript> {
    if key_x == 0 || key_x >= gp.r() || gcd(key_x, gp.r()) != 1 {
        return Err(Error::InvalidKey {
            x: key_x,
            order: gp.r(),
        });
    }
    if msg_y == 0 || msg_y >= gp.r() || gcd(msg_y, gp.r()) != 1 {
        return Err(Error::InvalidMessage {
            y: msg_y,
            order: gp.r(),
        });
    }
    let key = SecretKey::derive(key_x, gp.r(), gp.p())?;
    let out = run_pipeline(gp.p(), gp.g(), gp.r(), gp.index_set(), &key, msg_y, seed)?;
    Ok(SessionTranscript {
        session: SessionParams::General(gp.clone()),
        key,
        message: msg_y,
        seed,
        phi_a: out.phi_a,
        channel_a: out.channel_a,
        phi_c: out.phi_c,
        channel_c: out.channel_c,
        phi_d1: out.phi_d1,
        phi_d2: out.phi_d2,
        phi_d3: out.phi_d3,
        measured: out.measured,
        recovered: out.recovered,
    })
}
