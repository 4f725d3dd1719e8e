//! Low-discrepancy points and boxes used for validation and proposals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// Randomly shifted Halton sequence in `[0,1)^dim` (Cranley–Patterson rotation).
#[derive(Clone, Debug)]
pub struct Halton {
    shift: Vec<f64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension too large");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Halton {
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
            index: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        let i = self.index;
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, p)| (radical_inverse(i, p) + s).fract())
            .collect()
    }
}

/// Axis-aligned box in `R^{2N}` ordered as `(Re ζ_1, Im ζ_1, Re ζ_2, …)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl RealBox {
    pub fn cube(dim: usize, half_side: f64) -> Self {
        RealBox {
            lo: vec![-half_side; dim],
            hi: vec![half_side; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Maps a point of the unit cube into the box.
    pub fn map_unit(&self, u: &[f64], out: &mut [f64]) {
        for (((o, &x), a), b) in out.iter_mut().zip(u).zip(&self.lo).zip(&self.hi) {
            *o = a + (b - a) * x;
        }
    }

    /// Reflection through the box centre.
    pub fn reflect(&self, x: &[f64], out: &mut [f64]) {
        for (((o, &v), a), b) in out.iter_mut().zip(x).zip(&self.lo).zip(&self.hi) {
            *o = a + b - v;
        }
    }

    /// Scales the box about its centre.
    pub fn expanded(&self, factor: f64) -> RealBox {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for (&a, &b) in self.lo.iter().zip(&self.hi) {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a) * factor;
            lo.push(mid - half);
            hi.push(mid + half);
        }
        RealBox { lo, hi }
    }
}
