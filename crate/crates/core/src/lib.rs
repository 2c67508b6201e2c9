//! Joint caching and computing policies for edge-assisted mobile VR.
//!
//! A VR device can serve a viewpoint request from a cached 3D field of view,
//! by projecting a 2D field of view locally, or by downloading the projected
//! 3D field of view from the edge server. This crate finds the policy of
//! minimal average transmission rate under cache and energy budgets:
//!
//! * [`homogeneous`] gives the closed-form optimum when every viewpoint has
//!   the same projection task and popularity,
//! * [`heterogeneous`] solves the general case as a two-budget multiple-choice
//!   knapsack with multi-start CCCP, greedy baselines and an exact oracle,
//! * [`sim`] replays policies against an i.i.d. request stream.

pub mod error;
pub mod experiment;
pub mod heterogeneous;
pub mod homogeneous;
pub mod instance;
pub mod lp;
pub mod model;
pub mod sim;

pub use error::{Error, LpError, Result};

/// Formats a number for CSV output: plain decimal for moderate magnitudes,
/// scientific notation otherwise. Both forms round-trip exactly.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_num;

    #[test]
    fn number_formatting_round_trips() {
        for x in [0.0, 1.75e9, 0.3, 1e-7, 2.5e20, -3.25, 1.0 / 3.0] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(1.75e9), "1750000000");
        assert_eq!(fmt_num(1e-7), "1e-7");
    }
}
