//! Physical conversion constants shared across the crate.

/// Bohr magneton divided by the Planck constant, in GHz per mT.
///
/// Multiplied by a g-factor and a field in mT this gives a Zeeman splitting
/// as a frequency.
pub const MU_B_GHZ_PER_MT: f64 = 0.0139962;

/// Planck constant divided by the Boltzmann constant, in K per GHz.
pub const H_OVER_KB_K_PER_GHZ: f64 = 0.0479924;

/// Same ratio in mK per GHz, the unit pair used by thermometry fits.
pub const H_OVER_KB_MK_PER_GHZ: f64 = 1.0e3 * H_OVER_KB_K_PER_GHZ;
