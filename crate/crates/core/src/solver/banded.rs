use crate::error::{Error, Result};

use super::sparse::CsrMatrix;

/// LU factorization with partial pivoting of a banded matrix with `kl`
/// sub- and `ku` superdiagonals.
///
/// Row `r` is stored over columns `r - kl ..= r + kl + ku`; the extra `kl`
/// superdiagonals hold fill from row interchanges. Multipliers of step `i`
/// are kept per step and replayed with the interchanges in the solve.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<f64>,
    mult: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn bandwidths(a: &CsrMatrix) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..a.nrows() {
            for (c, _) in a.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::domain("banded LU needs a square matrix"));
        }
        let (kl, ku) = Self::bandwidths(a);
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            rows: vec![0.0; n * width],
            mult: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                *lu.at_mut(r, c) = v;
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.rows[self.idx(r, c)]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        let k = self.idx(r, c);
        &mut self.rows[k]
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.rows.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + kl + ku).min(n - 1);
            let mut p = i;
            for r in i + 1..=last_row {
                if self.at(r, i).abs() > self.at(p, i).abs() {
                    p = r;
                }
            }
            self.pivots[i] = p;
            if p != i {
                for c in i..=last_col {
                    let (a, b) = (self.idx(i, c), self.idx(p, c));
                    self.rows.swap(a, b);
                }
            }
            let piv = self.at(i, i);
            if !(piv.abs() > 1e-300 * scale.max(1e-300)) {
                return Err(Error::SolveFailed { residual: f64::INFINITY });
            }
            for r in i + 1..=last_row {
                let f = self.at(r, i) / piv;
                self.mult[i * kl + (r - i - 1)] = f;
                *self.at_mut(r, i) = 0.0;
                if f != 0.0 {
                    for c in i + 1..=last_col {
                        let u = self.at(i, c);
                        *self.at_mut(r, c) -= f * u;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut x = b.to_vec();
        for i in 0..n {
            x.swap(i, self.pivots[i]);
            let xi = x[i];
            for r in i + 1..=(i + kl).min(n - 1) {
                x[r] -= self.mult[i * kl + (r - i - 1)] * xi;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for c in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.at(i, c) * x[c];
            }
            x[i] = s / self.at(i, i);
        }
        x
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream_rng;
    use rand::Rng;

    #[test]
    fn solves_random_banded_system_needing_pivots() {
        let n: usize = 60;
        let mut rng = stream_rng(9, 0);
        let mut trip = Vec::new();
        for r in 0..n {
            for c in r.saturating_sub(3)..=(r + 2).min(n - 1) {
                // weak diagonal forces interchanges
                let v: f64 = rng.random_range(-1.0..1.0);
                trip.push((r, c, if r == c { 0.01 * v } else { v }));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &trip);
        assert_eq!(BandedLu::bandwidths(&a), (3, 2));
        let x: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let lu = BandedLu::factor(&a).unwrap();
        let y = lu.solve(&b);
        let err = x.iter().zip(&y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err < 1e-9, "error {err}");
        assert!(lu.pivots.iter().enumerate().any(|(i, &p)| p != i));
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(BandedLu::factor(&a).is_err());
    }
}
