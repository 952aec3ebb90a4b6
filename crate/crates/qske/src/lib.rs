//! Desk-scale simulator of a quantum secret-key encryption protocol built on
//! the discrete logarithm over prime-order subgroups.
//!
//! Two parties share a secret exponent `x`. The receiver, Alice, prepares an
//! entangled two-register superposition keyed by `x` and sends the value
//! register to the sender, Bob; Bob folds his message `y` into the values
//! with one reversible modular map and sends the register back; Alice undoes
//! the key material, flattens every branch to `g^y`, measures, and takes a
//! discrete log. The register is burned by the measurement, but the key is
//! reusable: nothing that crosses the channel depends on `x` or `y` in
//! distribution.
//!
//! The crate simulates honest sessions exactly (basis-state permutations, no
//! floating point) and makes the security discussion quantitative at desk
//! scale: multiset-hiding sweeps, intercept-and-measure experiments, forged-
//! channel enumerations, and statistical distinguishers, all deterministic
//! under explicit seeds.
//!
//! Modules:
//!
//! * [`modmath`] — word-sized modular arithmetic, primality, parameter
//!   search, baby-step giant-step discrete log.
//! * [`qstate`] — the two-register state model: validated reversible maps,
//!   ownership-aware transmission, Born-rule measurement.
//! * [`protocol`] — honest sessions, base and general variants, with full
//!   transcripts.
//! * [`adversary`] — the four eavesdropper analyses.
//! * [`trace`] — the JSON trace document emitted by the CLI.
//! * [`cli`] — command-line front end (`demo`, `session`, `params`,
//!   `attack`).

pub mod adversary;
pub mod cli;
pub mod error;
pub mod modmath;
pub mod protocol;
pub mod qstate;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
pub use modmath::{GeneralParams, Params};
pub use protocol::{Message, SecretKey, SessionTranscript};
pub use qstate::{ChannelView, JointState, ModularMap, Party};
pub use rng::SplitMix64;
