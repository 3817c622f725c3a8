//! Banded LU factorization with partial pivoting.
//!
//! Storage is row-wise: row `r` keeps columns `r - kl ..= r + kl + ku`,
//! the extra `kl` super-diagonals hold fill-in created by row swaps.
//! Multipliers are kept in place and row interchanges are applied lazily
//! during the solve, the same convention as LAPACK's `gbtrf`/`gbtrs`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + (c + self.kl - r)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.ku {
            return 0.0;
        }
        self.data[self.slot(r, c)]
    }

    /// Adds `v` to entry `(r, c)`, which must lie inside the band.
    pub fn add(&mut self, r: usize, c: usize, v: f64) -> Result<()> {
        if r >= self.n || c >= self.n || c + self.kl < r || c > r + self.ku {
            return Err(Error::Usage(format!(
                "entry ({r}, {c}) outside band (n = {}, kl = {}, ku = {})",
                self.n, self.kl, self.ku
            )));
        }
        let s = self.slot(r, c);
        self.data[s] += v;
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                let start = self.slot(r, lo);
                dot(&self.data[start..start + hi + 1 - lo], &x[lo..=hi])
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolve(format!("singular pivot in column {k}")));
            }
            piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let s = self.slot(r, k);
                let m = self.data[s] / pivot;
                self.data[s] = m;
                if m == 0.0 {
                    continue;
                }
                let src = self.slot(k, k + 1);
                let dst = self.slot(r, k + 1);
                let len = last_col - k;
                for t in 0..len {
                    self.data[dst + t] -= m * self.data[src + t];
                }
            }
        }
        // multipliers copied column by column for a contiguous forward sweep
        let mut lower = vec![0.0; n * kl];
        for k in 0..n {
            for r in k + 1..=(k + kl).min(n - 1) {
                lower[k * kl + (r - k - 1)] = self.data[self.slot(r, k)];
            }
        }
        Ok(BandedLu { lu: self, piv, lower })
    }
}

/// Dot product with four partial sums.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for t in 0..4 {
            acc[t] += x[t] * y[t];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Factorized band matrix; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandMatrix,
    piv: Vec<usize>,
    lower: Vec<f64>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.lu;
        let (n, kl) = (m.n, m.kl);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let hi = (k + kl).min(n - 1);
                let col = &self.lower[k * kl..k * kl + (hi - k)];
                for (x, l) in b[k + 1..=hi].iter_mut().zip(col) {
                    *x -= l * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let hi = (k + kl + m.ku).min(n - 1);
            let row = m.slot(k, k);
            let s = b[k] - dot(&m.data[row + 1..row + 1 + (hi - k)], &b[k + 1..=hi]);
            b[k] = s / m.data[row];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
