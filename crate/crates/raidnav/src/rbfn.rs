//! Gaussian radial basis function bank over the scalar side velocity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A bank of Gaussian bumps. Immutable after construction; activation is a
/// pure function, so networks can be shared across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbfNetwork {
    centers: Vec<f64>,
    /// Per-neuron widths; uniform by default.
    widths: Vec<f64>,
}

/// Activations plus their Euclidean norm and squared norm.
#[derive(Debug, Clone)]
pub struct RbfOutput {
    pub phi: Vec<f64>,
    pub norm: f64,
    pub norm_sq: f64,
}

impl RbfNetwork {
    pub fn new(centers: Vec<f64>, width: f64) -> Self {
        assert!(!centers.is_empty(), "at least one neuron required");
        assert!(width > 0.0, "width must be positive");
        assert!(centers.iter().all(|c| c.is_finite()), "centers must be finite");
        let widths = vec![width; centers.len()];
        Self { centers, widths }
    }

    /// Centers drawn as `2u - 1` with `u` uniform on [0, 1), one draw per
    /// neuron, from a seeded generator. Same seed, same network.
    pub fn init_stochastic(n: usize, seed: u64, width: f64) -> Self {
        assert!(n >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        Self::new(centers, width)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Evaluate all neurons at `v`: `phi_k = exp(-(v - c_k)^2 / w_k^2)`.
    pub fn activate(&self, v: f64) -> RbfOutput {
        debug_assert!(v.is_finite());
        let phi: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, w)| (-((v - c) / w).powi(2)).exp())
            .collect();
        let norm_sq: f64 = phi.iter().map(|p| p * p).sum();
        RbfOutput {
            norm: norm_sq.sqrt(),
            norm_sq,
            phi,
        }
    }
}
