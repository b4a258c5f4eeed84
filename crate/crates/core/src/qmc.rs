//! Randomized Halton points for quasi-Monte Carlo integration.

use rand::Rng;

use crate::rng::RngStream;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton sequence in `[0, 1)^dim` with a Cranley–Patterson rotation.
#[derive(Clone, Debug)]
pub struct ShiftedHalton {
    shift: Vec<f64>,
}

impl ShiftedHalton {
    pub fn new(dim: usize, stream: RngStream) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension {dim} too large");
        let mut rng = stream.rng();
        Self {
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Point `i` (skipping the origin of the unshifted sequence).
    pub fn point(&self, i: u64, out: &mut [f64]) {
        for (d, o) in out.iter_mut().enumerate().take(self.dim()) {
            let v = radical_inverse(i + 1, PRIMES[d]) + self.shift[d];
            *o = v - v.floor();
        }
    }
}
