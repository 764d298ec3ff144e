//! Binary entropy and the decoherence entropies of a measurement.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::bloch::{axes_up_overlap, up_overlap_prob, Axis, SpinState};
use crate::error::{Error, Result};

/// Entropy in nats, in `[0, ln 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Entropy(f64);

impl Entropy {
    pub const ZERO: Entropy = Entropy(0.0);
    pub const MAX: Entropy = Entropy(LN_2);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=LN_2 + 1e-12).contains(&value) {
            return Err(Error::Domain(format!(
                "entropy must lie in [0, ln 2], got {value}"
            )));
        }
        Ok(Entropy(value.min(LN_2)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `-x ln x`, extended continuously to 0.
fn neg_x_ln_x(x: f64) -> f64 {
    if x < 1e-300 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `-(1 - x) ln(1 - x)` using `ln_1p` to stay accurate for small `x`.
fn neg_complement_ln(x: f64) -> f64 {
    let q = 1.0 - x;
    if q < 1e-300 {
        0.0
    } else {
        -q * (-x).ln_1p()
    }
}

/// Entropy of a probability already known to lie in `[0, 1]`.
pub(crate) fn entropy_of(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    // Evaluate from the smaller side so that f(p) and f(1 - p) see the same
    // rounding.
    let a = p.min(1.0 - p);
    neg_x_ln_x(a) + neg_complement_ln(a)
}

/// `f(p) = -p ln p - (1 - p) ln(1 - p)`.
pub fn binary_entropy(p: f64) -> Result<Entropy> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    Ok(Entropy(entropy_of(p).min(LN_2)))
}

/// Both solutions of `f(p) = s`, as `(p_low, p_high)` with `p_low <= 1/2`.
pub fn entropy_pair_solutions(s: Entropy) -> (f64, f64) {
    let target = s.value();
    if target <= 0.0 {
        return (0.0, 1.0);
    }
    if target >= LN_2 {
        return (0.5, 0.5);
    }
    // f is strictly increasing on [0, 1/2].
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if entropy_of(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    (p, 1.0 - p)
}

/// Convenience wrapper over `entropy_pair_solutions` taking a raw value.
pub fn entropy_pair_solutions_value(s: f64) -> Result<(f64, f64)> {
    Ok(entropy_pair_solutions(Entropy::new(s)?))
}

/// The entropies `(S_i, S_f, S_up)` of a measurement along `i` that
/// collapses the observer to `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseEntropies {
    pub s_i: Entropy,
    pub s_f: Entropy,
    pub s_up: Entropy,
}

pub fn collapse_entropies(i: &Axis, f: &Axis, s: &SpinState) -> CollapseEntropies {
    CollapseEntropies {
        s_i: Entropy(entropy_of(up_overlap_prob(i, s))),
        s_f: Entropy(entropy_of(up_overlap_prob(f, s))),
        s_up: Entropy(entropy_of(axes_up_overlap(f, i))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{canonicalize_axis, eigenstate_as_state, Outcome};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn entropy_examples() {
        assert!((binary_entropy(0.5).unwrap().value() - LN_2).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap().value(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap().value(), 0.0);
        // numpy: f(0.98) = 0.09803911327973205
        assert!((binary_entropy(0.98).unwrap().value() - 0.098_039_113_279_732_05).abs() < 1e-15);
    }

    #[test]
    fn entropy_domain_errors() {
        assert!(binary_entropy(-1e-9).is_err());
        assert!(binary_entropy(1.0 + 1e-9).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
        assert!(Entropy::new(0.7).is_err());
        assert!(entropy_pair_solutions_value(0.7).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(entropy_pair_solutions(Entropy::MAX), (0.5, 0.5));
        assert_eq!(entropy_pair_solutions(Entropy::ZERO), (0.0, 1.0));
        let (lo, hi) = entropy_pair_solutions(binary_entropy(0.98).unwrap());
        assert!((lo - 0.02).abs() < 1e-12);
        assert!((hi - 0.98).abs() < 1e-12);
        // scipy brentq: f(p) = 0.098 at p = 0.019989950537282187
        let (lo, _) = entropy_pair_solutions_value(0.0980).unwrap();
        assert!((lo - 0.019_989_950_537_282_187).abs() < 1e-12);
    }

    #[test]
    fn collapse_entropy_examples() {
        let i = canonicalize_axis(FRAC_PI_4, FRAC_PI_2).unwrap();
        let e = collapse_entropies(&i, &i, &eigenstate_as_state(&i, Outcome::Up));
        assert!(e.s_i.value() < 1e-15 && e.s_f.value() < 1e-15 && e.s_up.value() < 1e-15);

        let f = canonicalize_axis(0.862, 1.197).unwrap();
        let s = SpinState::new(0.4, 0.0).unwrap();
        let e = collapse_entropies(&i, &f, &s);
        assert!((e.s_i.value() - 0.683_113_577_666_755).abs() < 1e-12);
        assert!((e.s_f.value() - 0.6831).abs() < 1e-3);
        assert!((e.s_up.value() - 0.0980).abs() < 1e-4);
    }
}
