//! Monte Carlo estimation with fixed-order chunked reduction.
//!
//! Samples are grouped in chunks of [`CHUNK`] rows; chunk `k` is drawn from
//! substream `(seed, MC_CHUNK, k)`. Each chunk is reduced sequentially and the
//! chunk partials are combined in chunk order, so results do not depend on the
//! number of worker threads.

use crate::distributions::{InputDistribution, SampleMatrix};
use crate::rng::{domain, substream};
use crate::scalar::{dot, Scalar};
use rayon::prelude::*;

pub const CHUNK: usize = 4096;

#[derive(Clone, Debug)]
pub(crate) struct McAcc<T> {
    pub n: usize,
    pub loss: T,
    pub loss2: T,
    pub g: Vec<T>,
    pub g2: Vec<T>,
    pub joint: usize,
    pub cross: T,
    pub cross2: T,
    pub sq: T,
}

impl<T: Scalar> McAcc<T> {
    fn new(cols: usize) -> Self {
        Self {
            n: 0,
            loss: T::zero(),
            loss2: T::zero(),
            g: vec![T::zero(); cols],
            g2: vec![T::zero(); cols],
            joint: 0,
            cross: T::zero(),
            cross2: T::zero(),
            sq: T::zero(),
        }
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.loss += o.loss;
        self.loss2 += o.loss2;
        for i in 0..self.g.len() {
            self.g[i] += o.g[i];
            self.g2[i] += o.g2[i];
        }
        self.joint += o.joint;
        self.cross += o.cross;
        self.cross2 += o.cross2;
        self.sq += o.sq;
    }

    fn push(&mut self, x: &[T], w: &[T], v: &[T], d0: T) {
        let a = dot(w, x);
        let b = dot(v, x);
        let sa = a.max(T::zero());
        let sb = b.max(T::zero());
        let r = sa - sb;
        let l = T::lit(0.5) * r * r;
        self.n += 1;
        self.loss += l;
        self.loss2 += l * l;
        let deriv = if a > T::zero() {
            T::one()
        } else if a == T::zero() {
            d0
        } else {
            T::zero()
        };
        let gc = r * deriv;
        if gc != T::zero() {
            for (i, &xi) in x.iter().enumerate() {
                let gi = gc * xi;
                self.g[i] += gi;
                self.g2[i] += gi * gi;
            }
        }
        if a >= T::zero() && b >= T::zero() {
            self.joint += 1;
        }
        let c = sa * sb;
        self.cross += c;
        self.cross2 += c * c;
        self.sq += sa * sa;
    }
}

/// Materializes the CRN sample set chunk by chunk.
pub(crate) fn materialize<T: Scalar>(dist: &InputDistribution<T>, n: usize, seed: u64) -> SampleMatrix<T> {
    let cols = dist.dim + 1;
    let n_chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let rows = CHUNK.min(n - k * CHUNK);
            let mut buf = vec![T::zero(); rows * cols];
            let mut rng = substream(seed, domain::MC_CHUNK, k as u64);
            for row in buf.chunks_mut(cols) {
                dist.draw_lifted(&mut rng, row);
            }
            buf
        })
        .collect();
    SampleMatrix { rows: n, cols, data: parts.concat() }
}

pub(crate) fn accumulate_matrix<T: Scalar>(samples: &SampleMatrix<T>, w: &[T], v: &[T], d0: T) -> McAcc<T> {
    let cols = samples.cols;
    let parts: Vec<McAcc<T>> = samples
        .data
        .par_chunks(CHUNK * cols)
        .map(|chunk| {
            let mut acc = McAcc::new(cols);
            for x in chunk.chunks(cols) {
                acc.push(x, w, v, d0);
            }
            acc
        })
        .collect();
    fold(parts, cols)
}

pub(crate) fn accumulate_stream<T: Scalar>(
    dist: &InputDistribution<T>,
    n: usize,
    seed: u64,
    w: &[T],
    v: &[T],
    d0: T,
) -> McAcc<T> {
    let cols = dist.dim + 1;
    let n_chunks = n.div_ceil(CHUNK);
    let parts: Vec<McAcc<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let rows = CHUNK.min(n - k * CHUNK);
            let mut rng = substream(seed, domain::MC_CHUNK, k as u64);
            let mut x = vec![T::zero(); cols];
            let mut acc = McAcc::new(cols);
            for _ in 0..rows {
                dist.draw_lifted(&mut rng, &mut x);
                acc.push(&x, w, v, d0);
            }
            acc
        })
        .collect();
    fold(parts, cols)
}

fn fold<T: Scalar>(parts: Vec<McAcc<T>>, cols: usize) -> McAcc<T> {
    let mut total = McAcc::new(cols);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Standard error of a mean from a sum and a sum of squares.
pub(crate) fn std_error<T: Scalar>(sum: T, sum2: T, n: usize) -> T {
    if n < 2 {
        return T::zero();
    }
    let nf = T::lit_usize(n);
    let mean = sum / nf;
    let var = ((sum2 / nf - mean * mean) * nf / (nf - T::one())).max(T::zero());
    (var / nf).sqrt()
}
