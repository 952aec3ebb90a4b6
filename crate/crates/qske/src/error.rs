//! Error types shared across the crate.

use crate::qstate::Party;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),

    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: u64, modulus: u64 },

    #[error("no discrete log: {target} is not a power of {base} modulo {modulus}")]
    NoSolution { target: u64, base: u64, modulus: u64 },

    #[error("parameter search exhausted after {attempts} attempts")]
    ExhaustedSearch { attempts: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{q} does not divide p - 1 for p = {p}")]
    NotSubgroupOrder { q: u64, p: u64 },

    #[error("{g} is not a generator of the order-{q} subgroup modulo {p}")]
    NotGenerator { g: u64, q: u64, p: u64 },

    #[error("element {g} has order {actual} modulo {p}, expected {expected}")]
    WrongOrder {
        g: u64,
        p: u64,
        expected: u64,
        actual: u64,
    },

    #[error("index set must be non-empty")]
    EmptyIndexSet,

    #[error("index {index} is outside [1, {order} - 1]")]
    IndexOutOfRange { index: u64, order: u64 },

    #[error("index {index} is not coprime to the subgroup order {order}")]
    IndexNotCoprime { index: u64, order: u64 },

    #[error("duplicate index {0} in joint state")]
    DuplicateIndex(u64),

    #[error("value {value} is outside the unit group modulo {modulus}")]
    ValueOutOfGroup { value: u64, modulus: u64 },

    #[error("joint state must contain at least one basis pair")]
    EmptyState,

    #[error("{actor} does not hold register {register}")]
    NotHolder { actor: Party, register: u8 },

    #[error("degenerate operation: {0}")]
    DegenerateOperation(String),

    #[error("key {x} is invalid for subgroup order {order}")]
    InvalidKey { x: u64, order: u64 },

    #[error("message {y} is invalid for subgroup order {order}")]
    InvalidMessage { y: u64, order: u64 },

    #[error("no (key, index) pair explains observation {c_prime} for candidate message {y}")]
    NoWitness { c_prime: u64, y: u64 },
}
