//! Reference implementations used as oracles by the integration tests.
//! Everything here is written independently of the library code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn white(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn acov(h: f64, k: f64) -> f64 {
    0.5 * ((k + 1.0).abs().powf(2.0 * h) - 2.0 * k.abs().powf(2.0 * h)
        + (k - 1.0).abs().powf(2.0 * h))
}

/// Circulant-embedding sampler for fractional Gaussian noise.
///
/// The eigenvalues of the 2n circulant come from one FFT of its first row;
/// a complex Gaussian vector scaled by their square roots goes through a
/// second FFT. Real and imaginary parts of the first n outputs are two
/// independent fGn paths; only the real part is returned.
pub struct CirculantFgn {
    n: usize,
    sqrt_eig: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl CirculantFgn {
    pub fn new(n: usize, h: f64) -> Self {
        let m = 2 * n;
        let c: Vec<f64> = (0..m)
            .map(|k| {
                if k <= n {
                    acov(h, k as f64)
                } else {
                    acov(h, (m - k) as f64)
                }
            })
            .collect();
        let mut eig: Vec<Complex<f64>> = c.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut eig);
        let sqrt_eig = eig
            .iter()
            .map(|l| {
                assert!(l.re > -1e-8, "circulant embedding not PSD: {}", l.re);
                (l.re.max(0.0) / m as f64).sqrt()
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        Self { n, sqrt_eig, fft }
    }

    pub fn sample(&self, seed: u64) -> Vec<f64> {
        let mut r = rng(seed);
        let mut w: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|s| {
                Complex::new(
                    s * r.sample::<f64, _>(StandardNormal),
                    s * r.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        self.fft.process(&mut w);
        w[..self.n].iter().map(|z| z.re).collect()
    }
}

/// Exact fGn by the Durbin-Levinson recursion. O(n^2); use for short paths.
pub fn hosking_fgn(n: usize, h: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let g: Vec<f64> = (0..n).map(|k| acov(h, k as f64)).collect();
    let mut x = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    x.push(r.sample::<f64, _>(StandardNormal));
    for t in 1..n {
        let num = g[t] - (1..t).map(|j| phi[j - 1] * g[t - j]).sum::<f64>();
        let ptt = num / v;
        let prev = phi.clone();
        for j in 1..t {
            phi[j - 1] = prev[j - 1] - ptt * prev[t - j - 1];
        }
        phi.push(ptt);
        v *= 1.0 - ptt * ptt;
        let mean: f64 = (1..=t).map(|j| phi[j - 1] * x[t - j]).sum();
        x.push(mean + v.sqrt() * r.sample::<f64, _>(StandardNormal));
    }
    x
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn zero_crossing_rate(x: &[f64]) -> f64 {
    let n = x
        .windows(2)
        .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
        .count();
    n as f64 / x.len() as f64
}

/// Energy of `x` in the band [lo, hi] Hz from its DFT, at sample rate `fs`.
pub fn band_energy(x: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (0..n)
        .filter(|&k| {
            let f = k.min(n - k) as f64 * fs / n as f64;
            f >= lo && f <= hi
        })
        .map(|k| buf[k].norm_sqr())
        .sum::<f64>()
        / n as f64
}

/// Diagonal Gaussian mixture written out directly.
#[derive(Clone, Debug)]
pub struct RefGmm {
    pub w: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

impl RefGmm {
    pub fn log_component(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for d in 0..x.len() {
            let v = self.var[i][d];
            s += -0.5 * (2.0 * std::f64::consts::PI * v).ln()
                - (x[d] - self.mu[i][d]).powi(2) / (2.0 * v);
        }
        s
    }

    /// log sum_i w_i N(x; mu_i, var_i)
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.w.len())
            .map(|i| self.w[i].ln() + self.log_component(i, x))
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }

    pub fn posteriors(&self, x: &[f64]) -> Vec<f64> {
        let l = self.log_density(x);
        (0..self.w.len())
            .map(|i| (self.w[i].ln() + self.log_component(i, x) - l).exp())
            .collect()
    }

    /// One textbook EM iteration with a per-dimension variance floor.
    pub fn em_step(&self, data: &[Vec<f64>], floor: &[f64]) -> RefGmm {
        let m = self.w.len();
        let d = data[0].len();
        let post: Vec<Vec<f64>> = data.iter().map(|x| self.posteriors(x)).collect();
        let mut out = self.clone();
        for i in 0..m {
            let nk: f64 = post.iter().map(|p| p[i]).sum();
            out.w[i] = nk / data.len() as f64;
            for j in 0..d {
                let mu = post.iter().zip(data).map(|(p, x)| p[i] * x[j]).sum::<f64>() / nk;
                let var = post
                    .iter()
                    .zip(data)
                    .map(|(p, x)| p[i] * (x[j] - mu).powi(2))
                    .sum::<f64>()
                    / nk;
                out.mu[i][j] = mu;
                out.var[i][j] = var.max(floor[j]);
            }
        }
        out
    }
}
