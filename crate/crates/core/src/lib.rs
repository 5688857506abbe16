//! Models for long-baseline EPR experiments that bound the speed of
//! hypothetical superluminal influences propagating in a preferred frame.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm:
//! ideal polarization correlations, preferred-frame geometry over a
//! sidereal day, the detectable-speed bound, the path-equalization error
//! budget, seeded coincidence Monte Carlo, interferometric sweep fitting and
//! sidereal acquisition planning. File formats, configuration and the CLI
//! live in the `eprbound` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bound;
pub mod budget;
pub mod coincidence;
mod error;
pub mod geometry;
pub mod interferometry;
pub mod polarization;
pub mod sidereal;
pub mod rng;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Degrees to radians.
#[inline]
pub fn deg(angle_deg: f64) -> f64 {
    angle_deg.to_radians()
}

/// Euclidean remainder in `[0, m)` for `m > 0`.
#[inline]
pub(crate) fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = libm::fmod(x, m);
    if r < 0.0 {
        let s = r + m;
        if s >= m {
            0.0
        } else {
            s
        }
    } else {
        r
    }
}
