//! Square 2-D FFTs for zero-padded linear convolutions.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    pub p: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(p: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { p, fwd: planner.plan_fft_forward(p), inv: planner.plan_fft_inverse(p) }
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let p = self.p;
        let plan = if inverse { &self.inv } else { &self.fwd };
        plan.process(data);
        transpose(data, p);
        plan.process(data);
        transpose(data, p);
        if inverse {
            let scale = 1.0 / (p * p) as f64;
            data.iter_mut().for_each(|c| *c *= scale);
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    /// Real `nx × ny` array (row-major, `x` fastest) placed at the origin of a
    /// zeroed `p × p` buffer and transformed.
    pub fn transform_real(&self, vals: &[f64], nx: usize, ny: usize) -> Vec<Complex64> {
        let p = self.p;
        let mut buf = vec![Complex64::new(0.0, 0.0); p * p];
        for j in 0..ny {
            for i in 0..nx {
                buf[j * p + i].re = vals[j * nx + i];
            }
        }
        self.forward(&mut buf);
        buf
    }

    /// Kernel given on offsets `−m..=m` per axis (row-major, `(2m+1)²`),
    /// wrapped circularly and transformed.
    pub fn transform_offsets(&self, vals: &[f64], m: usize) -> Vec<Complex64> {
        let p = self.p;
        let w = 2 * m + 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); p * p];
        for b in 0..w {
            for a in 0..w {
                let i = (a as isize - m as isize).rem_euclid(p as isize) as usize;
                let j = (b as isize - m as isize).rem_euclid(p as isize) as usize;
                buf[j * p + i].re += vals[b * w + a];
            }
        }
        self.forward(&mut buf);
        buf
    }
}

fn transpose(data: &mut [Complex64], p: usize) {
    for j in 0..p {
        for i in (j + 1)..p {
            data.swap(j * p + i, i * p + j);
        }
    }
}

/// Smallest power of two `≥ n`.
pub(crate) fn padded(n: usize) -> usize {
    n.next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_convolution_matches_direct() {
        let f = Fft2::new(8);
        let a: Vec<f64> = (0..9).map(|k| k as f64 * 0.5 - 1.0).collect();
        let k: Vec<f64> = (0..9).map(|k| (k * k) as f64 * 0.1).collect();
        let mut fa = f.transform_real(&a, 3, 3);
        let fk = f.transform_offsets(&k, 1);
        fa.iter_mut().zip(&fk).for_each(|(x, y)| *x *= y);
        f.inverse(&mut fa);
        for j in 0..3i32 {
            for i in 0..3i32 {
                let mut direct = 0.0;
                for b in 0..3i32 {
                    for c in 0..3i32 {
                        let (di, dj) = (i - c, j - b);
                        if di.abs() <= 1 && dj.abs() <= 1 {
                            direct += a[(b * 3 + c) as usize] * k[((dj + 1) * 3 + di + 1) as usize];
                        }
                    }
                }
                assert!((fa[(j * 8 + i) as usize].re - direct).abs() < 1e-12);
            }
        }
    }
}
