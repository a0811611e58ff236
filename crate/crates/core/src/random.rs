//! Random matrices and per-trial random streams.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::hpd::{CMatrix, CVector, Hermitian, Hpd};

/// Standard complex circular Gaussian: real and imaginary parts N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    // column-major fill order, fixed for reproducibility
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

/// Haar-distributed unitary matrix (QR of a complex Ginibre matrix with the
/// phases of `diag(R)` absorbed into `Q`).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = complex_normal_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random HPD matrix `U diag(λ) U^H` with log-uniform eigenvalues whose
/// extremes are 1 and `condition`, scaled by a log-uniform factor in
/// [0.1, 10]. For `n == 1` the single eigenvalue is the scale factor.
pub fn random_hpd<R: Rng + ?Sized>(rng: &mut R, n: usize, condition: f64) -> Hpd {
    assert!(n >= 1 && condition >= 1.0);
    let scale = 10f64.powf(rng.random_range(-1.0..1.0));
    let lc = condition.ln();
    let mut values: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 0.0,
            1 => lc,
            _ => rng.random_range(0.0..=lc),
        })
        .map(|t| scale * t.exp())
        .collect();
    values.sort_by(f64::total_cmp);
    let u = random_unitary(rng, n);
    let mut scaled = u.clone();
    for (j, &l) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l);
    }
    Hpd::new(&scaled * u.adjoint()).expect("constructed with a positive spectrum")
}

/// Random Hermitian matrix with unit Frobenius norm.
pub fn random_hermitian_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Hermitian {
    let g = complex_normal_matrix(rng, n, n);
    let h = Hermitian::from_hermitian_part(&g);
    let norm = h.norm();
    h.scale(1.0 / norm)
}

/// Random complex matrix `U diag(σ) W` with singular values σ log-uniform
/// in [0.5, 2].
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let mut u = random_unitary(rng, n);
    for j in 0..n {
        let s = 2f64.powf(rng.random_range(-1.0..=1.0));
        u.column_mut(j).scale_mut(s);
    }
    u * random_unitary(rng, n)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed identifying one experiment under a master seed.
pub fn experiment_seed(master_seed: u64, experiment: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(experiment))
}

/// Independent stream for one trial: ChaCha20 keyed by
/// `(master_seed, experiment)` with the trial index as the stream id, so
/// results do not depend on which worker runs which trial.
pub fn trial_rng(master_seed: u64, experiment: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(experiment_seed(master_seed, experiment));
    rng.set_stream(trial);
    rng
}
