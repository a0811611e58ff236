#![allow(dead_code)]

use migdet::random::{random_hpd, trial_rng};
use migdet::{CMatrix, Hpd};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    trial_rng(seed, 0xfeed, 0)
}

pub fn hpd_set(rng: &mut ChaCha20Rng, count: usize, n: usize, condition: f64) -> Vec<Hpd> {
    (0..count).map(|_| random_hpd(rng, n, condition)).collect()
}

pub fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
