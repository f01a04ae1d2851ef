//! Periodic orthogonal discrete wavelet transform with the 12-tap
//! Daubechies filter (six vanishing moments).

/// Daubechies 12-tap scaling (low-pass) filter.
pub const DB6_LOWPASS: [f64; 12] = [
    0.111_540_743_350_080_17,
    0.494_623_890_398_385_4,
    0.751_133_908_021_577_5,
    0.315_250_351_709_243_2,
    -0.226_264_693_965_169_13,
    -0.129_766_867_567_095_63,
    0.097_501_605_587_079_36,
    0.027_522_865_530_016_29,
    -0.031_582_039_318_031_156,
    0.000_553_842_200_993_801_6,
    0.004_777_257_511_010_651,
    -0.001_077_301_084_995_58,
];

/// Quadrature-mirror high-pass filter g[k] = (-1)^k h[L-1-k].
pub fn db6_highpass() -> [f64; 12] {
    let mut g = [0.0; 12];
    for (k, gk) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *gk = sign * DB6_LOWPASS[11 - k];
    }
    g
}

/// One analysis step with periodic extension. Odd-length input yields
/// ceil(n/2) coefficients per band.
pub fn dwt_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let g = db6_highpass();
    let half = n.div_ceil(2);
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for m in 0..DB6_LOWPASS.len() {
            let v = x[(2 * k + m) % n];
            a += DB6_LOWPASS[m] * v;
            d += g[m] * v;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

/// Detail coefficients for scales 1, 2, ... while at least `min_coeffs`
/// coefficients remain, up to `max_level`.
pub fn detail_pyramid(x: &[f64], max_level: usize, min_coeffs: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut approx = x.to_vec();
    while out.len() < max_level && approx.len().div_ceil(2) >= min_coeffs && approx.len() >= 2 {
        let (a, d) = dwt_step(&approx);
        out.push(d);
        approx = a;
    }
    out
}
