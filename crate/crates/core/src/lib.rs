//! Arithmetic of the k-free integers and the scaling of their diffraction
//! intensity near the origin.

pub mod asymptotics;
pub mod diffraction;
pub mod error;
pub mod numeric;
pub mod sieve;
pub mod special;

pub use error::{Error, Result};

/// Largest `k` accepted anywhere.
pub const MAX_K: u32 = 64;

pub(crate) fn validate_k(k: u32) -> Result<()> {
    if !(2..=MAX_K).contains(&k) {
        return Err(Error::OutOfRange {
            what: "k",
            value: k.to_string(),
            range: format!("[2, {MAX_K}]"),
        });
    }
    Ok(())
}
