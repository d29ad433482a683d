//! Complex banded matrices with an unpivoted LU.
//!
//! Every system solved in this crate is a positive diagonal scaling of a
//! Hermitian positive definite matrix, for which elimination without
//! pivoting is stable.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = kl + ku + 1;
        Banded { n, kl, ku, width, data: vec![C64::new(0.0, 0.0); n * width] }
    }

    /// Assemble by probing: `apply(e_j)` must return column j.
    /// Entries below `drop_tol` (relative to the column max) are dropped.
    pub fn probe<F>(n: usize, mut apply: F) -> Self
    where
        F: FnMut(&[C64]) -> Vec<C64>,
    {
        let mut cols = Vec::with_capacity(n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let (mut kl, mut ku) = (0usize, 0usize);
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            let c = apply(&e);
            e[j] = C64::new(0.0, 0.0);
            for (i, v) in c.iter().enumerate() {
                if v.norm() != 0.0 {
                    if i > j {
                        kl = kl.max(i - j);
                    } else {
                        ku = ku.max(j - i);
                    }
                }
            }
            cols.push(c);
        }
        let mut b = Banded::zeros(n, kl, ku);
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                if v.norm() != 0.0 {
                    b.set(i, j, *v);
                }
            }
        }
        b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j + self.kl < i || j > i + self.ku {
            C64::new(0.0, 0.0)
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// `a * self + b * I`
    pub fn scaled_shift(&self, a: f64, b: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= a);
        for i in 0..self.n {
            let k = out.idx(i, i);
            out.data[k] += b;
        }
        out
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            let row = &self.data[i * self.width..(i + 1) * self.width];
            let mut s = C64::new(0.0, 0.0);
            for j in lo..hi {
                s += row[j + self.kl - i] * x[j];
            }
            y[i] = s;
        }
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for k in 0..n {
            let piv = self.data[self.idx(k, k)];
            if !(piv.norm() > 1e-14 * scale) {
                return Err(Error::Singular("banded LU"));
            }
            let imax = (k + self.kl + 1).min(n);
            let jmax = (k + self.ku + 1).min(n);
            for i in k + 1..imax {
                let ik = self.idx(i, k);
                let l = self.data[ik] / piv;
                self.data[ik] = l;
                if l.norm() == 0.0 {
                    continue;
                }
                for j in k + 1..jmax {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: Banded,
}

impl BandLu {
    pub fn solve_in_place(&self, x: &mut [C64]) {
        let a = &self.m;
        let n = a.n;
        for i in 0..n {
            let lo = i.saturating_sub(a.kl);
            let mut s = x[i];
            for j in lo..i {
                s -= a.data[a.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + a.ku + 1).min(n);
            let mut s = x[i];
            for j in i + 1..hi {
                s -= a.data[a.idx(i, j)] * x[j];
            }
            x[i] = s / a.data[a.idx(i, i)];
        }
    }
}
