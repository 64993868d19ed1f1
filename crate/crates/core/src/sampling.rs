//! Deterministic sample generators shared by the sampled invariant checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base` (van der Corput).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Point `index` of the Halton sequence in `[0,1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton: dimension {dim} too large");
    (0..dim).map(|k| radical_inverse(index + 1, PRIMES[k])).collect()
}

/// Quasi-uniform points in the closed unit ball of `R^dim`.
///
/// In one dimension this is the uniform grid on `[-1, 1]` (endpoints included),
/// which is what the envelope checks want. Higher dimensions use Halton points
/// in the cube filtered to the ball.
pub fn ball_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        if count == 1 {
            return vec![vec![0.0]];
        }
        return (0..count)
            .map(|k| vec![-1.0 + 2.0 * k as f64 / (count - 1) as f64])
            .collect();
    }
    let mut out = Vec::with_capacity(count);
    let mut index = 0u64;
    while out.len() < count {
        let p: Vec<f64> = halton(index, dim).into_iter().map(|u| 2.0 * u - 1.0).collect();
        index += 1;
        if norm(&p) <= 1.0 {
            out.push(p);
        }
    }
    out
}

/// Unit directions in `R^dim`: coordinate axes and diagonals first, then
/// quasi-random directions.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count + 2 * dim);
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        out.push(e);
    }
    if dim >= 2 {
        let s = 1.0 / (dim as f64).sqrt();
        out.push(vec![s; dim]);
        let mut alt = vec![s; dim];
        alt[dim - 1] = -s;
        out.push(alt);
    }
    if dim == 1 {
        return out;
    }
    if dim == 2 {
        // golden-angle Kronecker sequence on the circle
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for k in 0..count {
            let theta = std::f64::consts::TAU * ((k as f64 + 0.5) * g).fract();
            out.push(vec![theta.cos(), theta.sin()]);
        }
        return out;
    }
    let mut index = 0u64;
    while out.len() < count + 2 + dim {
        let p: Vec<f64> = halton(index, dim).into_iter().map(|u| 2.0 * u - 1.0).collect();
        index += 1;
        let r = norm(&p);
        if r > 1e-3 && r <= 1.0 {
            out.push(p.into_iter().map(|v| v / r).collect());
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// RNG for stream `stream` of a seeded experiment. Streams are independent of
/// each other, so work split by stream is reproducible under any scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform point in the box `[lo, hi]`.
pub fn uniform_in_box<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| a + (b - a) * rng.random::<f64>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn ball_points_stay_in_ball() {
        for dim in 1..4 {
            let pts = ball_points(dim, 200);
            assert_eq!(pts.len(), 200);
            assert!(pts.iter().all(|p| norm(p) <= 1.0 + 1e-15));
        }
    }

    #[test]
    fn directions_are_unit() {
        for dim in 1..5 {
            for d in sphere_directions(dim, 50) {
                assert!((norm(&d) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let a: f64 = stream_rng(7, 3).random();
        let b: f64 = stream_rng(7, 3).random();
        let c: f64 = stream_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
