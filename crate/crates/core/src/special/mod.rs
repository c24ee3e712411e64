//! Zeta values, Euler products and the k-free constants, all with rigorous
//! truncation tails.

pub mod constants;
pub mod euler;
pub mod tail;
pub mod zeta;

pub use constants::{constants_for_k, KfreeConstants, PreciseConstants};
pub use euler::{accelerated_euler_product, euler_product, euler_product_to_tail, DecayBound, RationalFactor};
pub use tail::{Precise, TailBounded};
pub use zeta::{zeta_precise, zeta_real};

/// Working precision for constant evaluation (about 77 decimal digits).
pub const PRECISION_BITS: u32 = 256;

/// Smallest truncation tail that the evaluators accept.
pub const MIN_TARGET_TAIL: f64 = 1e-50;
