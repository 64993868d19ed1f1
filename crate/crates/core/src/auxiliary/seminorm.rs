use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::LocalRegion;
use crate::sampling::{norm, stream_rng};

/// Separations, as fractions of the region radius, used for the local pairs.
const PAIR_SCALES: [f64; 3] = [0.5, 0.1, 0.01];

/// A point of the region: tangential part uniform in the clipped ball around
/// `z'`, normal part uniform across the local gap.
pub fn sample_in_region<R: Rng>(region: &LocalRegion<'_>, rng: &mut R) -> Option<Vec<f64>> {
    let geom = region.geometry();
    let n1 = geom.dim() - 1;
    let zp = region.center_tangential();
    let s = region.radius();
    for _ in 0..64 {
        let offset: Vec<f64> = (0..n1).map(|_| s * (2.0 * rng.random::<f64>() - 1.0)).collect();
        if norm(&offset) >= s {
            continue;
        }
        let xp: Vec<f64> = zp.iter().zip(&offset).map(|(a, b)| a + b).collect();
        if norm(&xp) > 1.0 {
            continue;
        }
        let lo = geom.bottom_height(&xp);
        let hi = geom.top_height(&xp);
        let t: f64 = rng.random();
        let mut x = xp;
        x.push(lo + t * (hi - lo));
        if region.contains(&x) {
            return Some(x);
        }
    }
    None
}

/// The `k`-th sample pair of a region. Pairs cycle through four kinds:
/// two independent points, then pairs whose separation is `0.5 s`, `0.1 s`
/// and `0.01 s` in a random direction. Each pair depends only on `(seed, k)`.
pub fn region_pair(region: &LocalRegion<'_>, seed: u64, k: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream_rng(seed, k as u64);
    let x = sample_in_region(region, &mut rng)?;
    if k % 4 == 0 {
        let y = sample_in_region(region, &mut rng)?;
        return Some((x, y));
    }
    let r = PAIR_SCALES[k % 4 - 1] * region.radius();
    let dim = x.len();
    for _ in 0..64 {
        let dir: Vec<f64> = (0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let len = norm(&dir);
        if len < 1e-6 || len > 1.0 {
            continue;
        }
        let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + r * d / len).collect();
        if region.contains(&y) {
            return Some((x, y));
        }
    }
    // the gap may be much thinner than r: fall back to an independent point
    let y = sample_in_region(region, &mut rng)?;
    Some((x, y))
}

/// Sampled Hölder seminorm `max |f(x) - f(y)| / |x - y|^γ` over `pairs` pairs
/// of the region. A lower bound of the true seminorm; increasing `pairs`
/// never decreases the result because pair `k` does not depend on the budget.
pub fn holder_seminorm(
    f: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    region: &LocalRegion<'_>,
    gamma: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    if pairs == 0 {
        return Err(Error::domain("seminorm needs at least one pair"));
    }
    let mut probe = stream_rng(seed, u64::MAX);
    if sample_in_region(region, &mut probe).is_none() {
        return Err(Error::domain("local region is empty"));
    }
    Ok((0..pairs)
        .into_par_iter()
        .filter_map(|k| region_pair(region, seed, k))
        .map(|(x, y)| {
            let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let r = norm(&dx);
            if r == 0.0 {
                return 0.0;
            }
            let df: Vec<f64> = f(&x).iter().zip(f(&y)).map(|(a, b)| a - b).collect();
            norm(&df) / r.powf(gamma)
        })
        .reduce(|| 0.0, f64::max))
}
