//! Seeded sampling helpers. All generators in the crate go through here so
//! that every random object is a pure function of a `u64` seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{qr_orthonormalize, ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with a list of salts into an independent child seed
/// (splitmix64 finalizer applied per word).
pub fn derive_seed(master: u64, salts: &[u64]) -> u64 {
    let mut h = splitmix(master ^ 0x6a09_e667_f3bc_c908);
    for &s in salts {
        h = splitmix(h ^ splitmix(s.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard complex Gaussian: real and imaginary parts independent with
/// variance 1/2 each.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows x cols` matrix of independent standard complex Gaussians.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random isometry with `cols` orthonormal columns in `C^rows`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // A Gaussian matrix has full column rank with probability one; redraw on
    // the measure-zero failure.
    loop {
        if let Ok(q) = qr_orthonormalize(&gaussian_matrix(rng, rows, cols)) {
            return q;
        }
    }
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    random_isometry(rng, d, d)
}

/// Uniform sample from the probability simplex with `n` entries.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Haar-random unit vector in `C^d`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    random_isometry(rng, d, 1).column(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_salt() {
        let a = derive_seed(42, &[0, 1]);
        let b = derive_seed(42, &[0, 2]);
        let c = derive_seed(42, &[1, 1]);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, derive_seed(42, &[0, 1]));
    }

    #[test]
    fn simplex_sums_to_one() {
        let mut rng = rng_from_seed(1);
        for n in 1..10 {
            let p = random_simplex(&mut rng, n);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}
