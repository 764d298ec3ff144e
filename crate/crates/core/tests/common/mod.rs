#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spin_collapse::bloch::{axis_to_bloch, state_to_bloch, Axis, BlochVector, SpinState};

pub const ORACLE_SEED: u64 = 20_240_617;

/// Random axis, uniform on the sphere.
pub fn random_axis(rng: &mut impl Rng) -> Axis {
    let z: f64 = rng.random_range(-1.0..1.0);
    let a: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    Axis::from_bloch(BlochVector::new(r * a.cos(), r * a.sin(), z))
}

/// Random state, uniform on the sphere (uniform rho and tau).
pub fn random_state(rng: &mut impl Rng) -> SpinState {
    SpinState::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..2.0 * PI)).unwrap()
}

/// `c = n_i . m`
pub fn alignment(i: &Axis, s: &SpinState) -> f64 {
    axis_to_bloch(i).dot(&state_to_bloch(s))
}

/// Height above the seam of the highest point of the retained circle.
pub fn retained_max_y(i: &Axis, s: &SpinState) -> f64 {
    let m = state_to_bloch(s);
    let c = alignment(i, s);
    -c * m.y + (1.0 - c * c).max(0.0).sqrt() * (1.0 - m.y * m.y).max(0.0).sqrt()
}

/// `count` instances with `|c| < 0.95`, deterministic in `seed`.
pub fn instances(seed: u64, count: usize) -> Vec<(Axis, SpinState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = random_axis(&mut rng);
        let s = random_state(&mut rng);
        if alignment(&i, &s).abs() < 0.95 {
            out.push((i, s));
        }
    }
    out
}
