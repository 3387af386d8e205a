//! Search and verification of exact (disjoint) covering systems whose moduli
//! are all distinct except the largest, which repeats `r` times.
//!
//! The crate is organised bottom-up:
//!
//! - [`arith`]: exact integers and fractions, generic over the backing type
//! - [`systems`]: congruence classes, covering systems, verification and constructions
//! - [`enumerate`]: moduli enumeration, residue feasibility and the parallel search driver
//! - [`catalog`]: the embedded reference catalog, serialisation and diffing
//! - [`cli`]: the `ecs` command-line front end

pub mod arith;
pub mod catalog;
pub mod cli;
pub mod enumerate;
mod error;
pub mod systems;

pub use arith::{frac_sub_unit, gcd, lcm_checked, smallest_prime_factor, Fraction, Natural};
pub use catalog::{diff, format_compact, format_json, golden, parse_compact, parse_json, Catalog, DiffReport};
pub use enumerate::{
    enumerate_profiles, partition_cells, residue_witness, run_search, witness_bruteforce,
    SearchConfig, SearchOutcome, WitnessOutcome, WorkCell,
};
pub use error::{Error, Result};
pub use systems::{
    classes_disjoint, density, double_system, profile_of, trivial_power_system, verify,
    verify_bruteforce, CongruenceClass, CoveringSystem, ModuliProfile, VerifyReport,
};

/// Default exact rational: 128-bit checked backing.
pub type Ratio = Fraction<u128>;
/// 64-bit checked backing.
pub type Ratio64 = Fraction<u64>;
/// Unbounded backing, for sums whose denominators outgrow 128 bits.
pub type BigRatio = Fraction<num_bigint::BigUint>;
