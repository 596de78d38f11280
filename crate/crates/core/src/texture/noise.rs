//! Two-dimensional improved gradient noise and its octave sum.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest magnitude 2-D gradient noise can reach with unit gradients.
pub const PERLIN2_BOUND: f64 = FRAC_1_SQRT_2;

// Unit gradients at multiples of 45 degrees, indexed by `hash & 7`.
const GRADIENTS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (-1.0, 0.0),
    (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    (0.0, -1.0),
    (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Lattice hash: a seeded permutation of `0..256`, stored twice so that
/// `perm[perm[x] + y]` never needs wrapping.
#[derive(Clone, PartialEq, Eq)]
pub struct PermutationTable {
    perm: [u8; 512],
}

impl PermutationTable {
    pub fn from_seed(seed: u64) -> Self {
        let mut base: Vec<u8> = (0..=255u8).collect();
        base.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut perm = [0u8; 512];
        perm[..256].copy_from_slice(&base);
        perm[256..].copy_from_slice(&base);
        Self { perm }
    }

    pub fn entries(&self) -> &[u8; 512] {
        &self.perm
    }

    #[inline]
    fn hash(&self, x: usize, y: usize) -> usize {
        self.perm[self.perm[x] as usize + y] as usize
    }
}

impl std::fmt::Debug for PermutationTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PermutationTable").field("head", &&self.perm[..8]).finish()
    }
}

#[inline]
pub fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn fade_deriv(t: f64) -> f64 {
    30.0 * t * t * (t * (t - 2.0) + 1.0)
}

struct Cell {
    xf: f64,
    yf: f64,
    g: [(f64, f64); 4],
}

#[inline]
fn cell(x: f64, y: f64, table: &PermutationTable) -> Cell {
    let x0 = x.floor();
    let y0 = y.floor();
    let xi = (x0 as i64 & 255) as usize;
    let yi = (y0 as i64 & 255) as usize;
    let g = |dx: usize, dy: usize| GRADIENTS[table.hash(xi + dx, yi + dy) & 7];
    Cell { xf: x - x0, yf: y - y0, g: [g(0, 0), g(1, 0), g(0, 1), g(1, 1)] }
}

/// Single-octave gradient noise, normalized to `[-1, 1]`.
///
/// Vanishes exactly at integer lattice points.
pub fn perlin2(x: f64, y: f64, table: &PermutationTable) -> f64 {
    let Cell { xf, yf, g } = cell(x, y, table);
    let n00 = g[0].0 * xf + g[0].1 * yf;
    let n10 = g[1].0 * (xf - 1.0) + g[1].1 * yf;
    let n01 = g[2].0 * xf + g[2].1 * (yf - 1.0);
    let n11 = g[3].0 * (xf - 1.0) + g[3].1 * (yf - 1.0);
    let u = fade(xf);
    let v = fade(yf);
    let a = n00 + u * (n10 - n00);
    let b = n01 + u * (n11 - n01);
    (a + v * (b - a)) * SQRT_2
}

/// Analytic gradient of [`perlin2`] with respect to `(x, y)`.
pub fn perlin2_gradient(x: f64, y: f64, table: &PermutationTable) -> (f64, f64) {
    let Cell { xf, yf, g } = cell(x, y, table);
    let n00 = g[0].0 * xf + g[0].1 * yf;
    let n10 = g[1].0 * (xf - 1.0) + g[1].1 * yf;
    let n01 = g[2].0 * xf + g[2].1 * (yf - 1.0);
    let n11 = g[3].0 * (xf - 1.0) + g[3].1 * (yf - 1.0);
    let (u, du) = (fade(xf), fade_deriv(xf));
    let (v, dv) = (fade(yf), fade_deriv(yf));

    let a = n00 + u * (n10 - n00);
    let b = n01 + u * (n11 - n01);
    let ax = g[0].0 + u * (g[1].0 - g[0].0) + du * (n10 - n00);
    let ay = g[0].1 + u * (g[1].1 - g[0].1);
    let bx = g[2].0 + u * (g[3].0 - g[2].0) + du * (n11 - n01);
    let by = g[2].1 + u * (g[3].1 - g[2].1);

    let dx = ax + v * (bx - ax);
    let dy = ay + v * (by - ay) + dv * (b - a);
    (dx * SQRT_2, dy * SQRT_2)
}

/// Weighted octave sum of [`perlin2`], divided by the total weight so the
/// result stays in `[-1, 1]`.
pub fn fbm2(x: f64, y: f64, octaves: u32, persistence: f64, table: &PermutationTable) -> f64 {
    debug_assert!(octaves >= 1);
    let mut sum = 0.0;
    let mut norm = 0.0;
    let mut amp = 1.0;
    let mut freq = 1.0;
    for _ in 0..octaves {
        sum += amp * perlin2(x * freq, y * freq, table);
        norm += amp;
        amp *= persistence;
        freq *= 2.0;
    }
    sum / norm
}
