//! Numeric foundations: special functions, forward-mode duals,
//! Gauss–Legendre quadrature, and scalar solvers/optimizers.

pub mod dual;
pub mod quad;
pub mod solve;
pub mod special;

/// SplitMix64 step; used to derive independent sub-seeds (per chain, per
/// replication) from one user-facing seed without correlated streams.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
