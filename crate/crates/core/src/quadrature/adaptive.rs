use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_386_193_980,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// 21-point Gauss–Kronrod on `[a, b]` with the QUADPACK error heuristic.
pub fn gk21(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let hh = h.abs();
    let value = res_k * h;
    res_abs *= hh;
    res_asc *= hh;
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Estimate { value, error: err }
}

/// Globally adaptive Gauss–Kronrod integration.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est.error.total_cmp(&o.est.error)
    }
}

impl Adaptive {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// Integrates over consecutive intervals of `points` (sorted, at least two)
    /// and always returns the best estimate reached.
    pub fn estimate(&self, points: &[f64], mut f: impl FnMut(f64) -> f64) -> Estimate {
        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        for w in points.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let est = gk21(w[0], w[1], &mut f);
            total += est.value;
            total_err += est.error;
            heap.push(Piece {
                a: w[0],
                b: w[1],
                est,
            });
        }
        let mut count = heap.len();
        while total_err > self.abs_tol.max(self.rel_tol * total.abs()) && count < self.max_intervals
        {
            let Some(p) = heap.pop() else { break };
            let m = 0.5 * (p.a + p.b);
            if m <= p.a || m >= p.b {
                heap.push(p);
                break;
            }
            let l = gk21(p.a, m, &mut f);
            let r = gk21(m, p.b, &mut f);
            total += l.value + r.value - p.est.value;
            total_err += l.error + r.error - p.est.error;
            heap.push(Piece {
                a: p.a,
                b: m,
                est: l,
            });
            heap.push(Piece {
                a: m,
                b: p.b,
                est: r,
            });
            count += 1;
        }
        // Re-add from the pieces to shed accumulated cancellation in the running totals.
        let mut value = 0.0;
        let mut error = 0.0;
        for p in heap.iter() {
            value += p.est.value;
            error += p.est.error;
        }
        Estimate { value, error }
    }

    /// Like [`Adaptive::estimate`] but fails when the tolerance is not reached.
    pub fn integrate(&self, points: &[f64], f: impl FnMut(f64) -> f64) -> Result<Estimate> {
        let est = self.estimate(points, f);
        let requested = self.abs_tol.max(self.rel_tol * est.value.abs());
        if est.error.is_nan() || est.error > requested {
            return Err(Error::AccuracyNotMet {
                achieved: est.error,
                requested,
            });
        }
        Ok(est)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integrand() {
        let e = Adaptive::new(1e-13, 1e-13)
            .integrate(&[0.0, std::f64::consts::PI], f64::sin)
            .unwrap();
        assert!((e.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let e = Adaptive::new(1e-10, 1e-12)
            .integrate(&[0.0, 1.0], |x| x.ln())
            .unwrap();
        assert!((e.value + 1.0).abs() < 1e-10);
    }

    #[test]
    fn kink_at_breakpoint() {
        let e = Adaptive::default()
            .integrate(&[-1.0, 0.3, 2.0], |x| (x - 0.3).abs())
            .unwrap();
        assert!((e.value - (1.3 * 1.3 / 2.0 + 1.7 * 1.7 / 2.0)).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = Adaptive::new(1e-14, 0.0)
            .with_max_intervals(3)
            .integrate(&[0.0, 1.0], |x| 1.0 / x.sqrt());
        assert!(matches!(r, Err(Error::AccuracyNotMet { .. })));
    }
}
