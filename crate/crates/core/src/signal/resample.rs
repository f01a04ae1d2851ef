use super::Signal;
use crate::error::{Error, Result};
use crate::TARGET_RATE_HZ;

const KAISER_BETA: f64 = 8.0;
/// Taps on each side of the interpolation point, per phase.
const HALF_TAPS: usize = 32;
const CUTOFF_FRACTION: f64 = 0.45;

/// Downsample to 8 kHz with a Kaiser-windowed sinc low-pass (cutoff
/// 0.45 x 8000 Hz) evaluated as a rational-ratio polyphase filter.
/// 8 kHz input is returned unchanged.
pub fn resample_to_8k(signal: &Signal) -> Result<Signal> {
    let fs_in = signal.sample_rate_hz();
    if fs_in < TARGET_RATE_HZ {
        return Err(Error::UpsamplingRefused(fs_in));
    }
    if fs_in == TARGET_RATE_HZ {
        return Ok(signal.clone());
    }
    let g = gcd(fs_in as u64, TARGET_RATE_HZ as u64);
    let up = (TARGET_RATE_HZ as u64 / g) as usize;
    let down = (fs_in as u64 / g) as usize;

    let bank = PolyphaseBank::new(up, CUTOFF_FRACTION * TARGET_RATE_HZ as f64 / fs_in as f64);
    let x = signal.samples();
    let n_out = (x.len() * up).div_ceil(down);
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let pos = n * down;
        let base = (pos / up) as isize;
        let taps = &bank.phases[pos % up];
        let mut acc = 0.0;
        for (k, &h) in taps.iter().enumerate() {
            let idx = base + k as isize - (HALF_TAPS as isize - 1);
            if idx >= 0 && (idx as usize) < x.len() {
                acc += h * x[idx as usize];
            }
        }
        out.push(acc);
    }
    Signal::new(out, TARGET_RATE_HZ)
}

struct PolyphaseBank {
    phases: Vec<Vec<f64>>,
}

impl PolyphaseBank {
    /// `cutoff` is in cycles per input sample.
    fn new(up: usize, cutoff: f64) -> Self {
        let i0_beta = bessel_i0(KAISER_BETA);
        let phases = (0..up)
            .map(|p| {
                let frac = p as f64 / up as f64;
                let mut taps: Vec<f64> = (0..2 * HALF_TAPS)
                    .map(|k| {
                        // distance from the output instant to input sample k
                        let tau = k as f64 - (HALF_TAPS as f64 - 1.0) - frac;
                        let r = tau / HALF_TAPS as f64;
                        if r.abs() >= 1.0 {
                            return 0.0;
                        }
                        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta;
                        2.0 * cutoff * sinc(2.0 * cutoff * tau) * window
                    })
                    .collect();
                let sum: f64 = taps.iter().sum();
                taps.iter_mut().for_each(|t| *t /= sum);
                taps
            })
            .collect();
        Self { phases }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};
    use std::f64::consts::PI;

    fn tone(freq: f64, rate: u32, secs: f64) -> Signal {
        let n = (rate as f64 * secs) as usize;
        let s = (0..n)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect();
        Signal::new(s, rate).unwrap()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn identity_at_8k() {
        let s = tone(440.0, 8000, 0.1);
        let r = resample_to_8k(&s).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn refuses_upsampling() {
        let s = tone(440.0, 4000, 0.1);
        assert!(matches!(
            resample_to_8k(&s),
            Err(Error::UpsamplingRefused(4000))
        ));
    }

    #[test]
    fn bessel_i0_reference_values() {
        // I0(1) and I0(8) from standard tables
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(8.0) - 427.564_115_721_804_7).abs() < 1e-9);
    }

    #[test]
    fn passband_tone_matches_analytic_samples() {
        let s = tone(1000.0, 16000, 0.5);
        let r = resample_to_8k(&s).unwrap();
        assert_eq!(r.sample_rate_hz(), 8000);
        assert_eq!(r.len(), 4000);
        let edge = 2 * HALF_TAPS;
        let max_err = r.samples()[edge..r.len() - edge]
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let t = (i + edge) as f64 / 8000.0;
                (v - 0.5 * (2.0 * PI * 1000.0 * t).sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(max_err <= 1e-3, "max error {max_err}");
    }

    #[test]
    fn rolloff_tone_is_attenuated() {
        let edge = 2 * HALF_TAPS;
        let reference = resample_to_8k(&tone(1000.0, 16000, 0.5)).unwrap();
        let high = resample_to_8k(&tone(3900.0, 16000, 0.5)).unwrap();
        let r_ref = rms(&reference.samples()[edge..reference.len() - edge]);
        let r_high = rms(&high.samples()[edge..high.len() - edge]);
        assert!(r_high < 0.5 * r_ref, "3900 Hz rms {r_high} vs {r_ref}");
    }

    #[test]
    fn dominant_bin_preserved_for_odd_ratio() {
        // 44.1 kHz -> 8 kHz is 80/441
        let s = tone(700.0, 44100, 0.512);
        let r = resample_to_8k(&s).unwrap();
        let n = 4096;
        let mut buf: Vec<Complex<f64>> = r.samples()[..n]
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let (peak, _) = buf[..n / 2]
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let bin_hz = 8000.0 / n as f64;
        assert!((peak as f64 * bin_hz - 700.0).abs() <= bin_hz);
    }
}
