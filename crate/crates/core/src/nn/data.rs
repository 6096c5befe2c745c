//! Seeded synthetic classification sets. The class geometry is fixed; the
//! seed only drives sampling, so sets drawn with different seeds come from
//! the same distribution.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;

/// Gaussian blobs with unit variance. Class `c` is centred at `3 e_{c mod dim}`,
/// negated for every second wrap around the axes.
pub fn blobs(n: usize, dim: usize, classes: usize, seed: u64) -> Dataset {
    let dim = dim.max(1);
    let classes = classes.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        let axis = c % dim;
        let sign = if (c / dim) % 2 == 0 { 1.0 } else { -1.0 };
        let row = (0..dim)
            .map(|j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + if j == axis { 3.0 * sign } else { 0.0 }
            })
            .collect();
        features.push(row);
        labels.push(c);
    }
    Dataset::new(features, labels, classes).expect("generated data is well formed")
}

/// Concentric rings in the plane: class `c` lies at radius `c + 1` with
/// radial noise of standard deviation 0.15.
pub fn rings(n: usize, classes: usize, seed: u64) -> Dataset {
    let classes = classes.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        let angle = rng.random_range(0.0..2.0 * PI);
        let z: f64 = StandardNormal.sample(&mut rng);
        let r = (c + 1) as f64 + 0.15 * z;
        features.push(alloc::vec![r * libm::cos(angle), r * libm::sin(angle)]);
        labels.push(c);
    }
    Dataset::new(features, labels, classes).expect("generated data is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(blobs(50, 3, 2, 7), blobs(50, 3, 2, 7));
        assert_eq!(rings(50, 3, 7), rings(50, 3, 7));
        assert_ne!(rings(50, 3, 7), rings(50, 3, 8));
    }

    #[test]
    fn shapes() {
        let b = blobs(30, 4, 3, 1);
        assert_eq!((b.len(), b.dim(), b.classes), (30, 4, 3));
        let r = rings(30, 2, 1);
        assert_eq!((r.len(), r.dim()), (30, 2));
        assert!(r.labels.iter().all(|&l| l < 2));
    }
}
