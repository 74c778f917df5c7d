//! Individual NIST SP 800-22 statistical tests.
//!
//! Each test returns its p-values, or a "not applicable" reason when the
//! input is too short for the statistic to be defined. The minimums here are
//! the mathematical ones; SP 800-22 recommends far longer inputs for the
//! spectral and linear complexity tests (1000 and 10^6 bits).

use std::f64::consts::SQRT_2;

use rustfft::{num_complex::Complex, FftPlanner};
use statrs::function::{erf::erfc, gamma::checked_gamma_ur};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    PValues(Vec<f64>),
    NotApplicable(String),
}

fn not_applicable(need: usize, n: usize) -> Outcome {
    Outcome::NotApplicable(format!("needs at least {need} bits, got {n}"))
}

/// Regularized upper incomplete gamma Q(a, x); 1 at x <= 0.
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    checked_gamma_ur(a, x).unwrap_or(0.0).clamp(0.0, 1.0)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn ones(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

/// Monobit: `erfc(|S_n| / sqrt(2n))`.
pub fn frequency(bits: &[bool]) -> Outcome {
    let n = bits.len();
    if n == 0 {
        return not_applicable(1, n);
    }
    let s = 2.0 * ones(bits) as f64 - n as f64;
    Outcome::PValues(vec![erfc(s.abs() / (n as f64).sqrt() / SQRT_2)])
}

/// Frequency within non-overlapping blocks of `m` bits.
pub fn block_frequency(bits: &[bool], m: usize) -> Outcome {
    let n = bits.len();
    if m == 0 || n < m {
        return not_applicable(m.max(1), n);
    }
    let blocks = n / m;
    let chi2: f64 = bits
        .chunks_exact(m)
        .map(|block| {
            let pi = ones(block) as f64 / m as f64;
            (pi - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    Outcome::PValues(vec![igamc(blocks as f64 / 2.0, chi2 / 2.0)])
}

/// Total number of runs, with the frequency prerequisite.
pub fn runs(bits: &[bool]) -> Outcome {
    let n = bits.len();
    if n < 2 {
        return not_applicable(2, n);
    }
    let nf = n as f64;
    let pi = ones(bits) as f64 / nf;
    if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        return Outcome::PValues(vec![0.0]);
    }
    let v_obs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v_obs as f64 - 2.0 * nf * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * nf).sqrt() * pi * (1.0 - pi);
    Outcome::PValues(vec![erfc(num / den)])
}

/// Longest run of ones in a block, with SP 800-22's block-size table.
pub fn longest_run(bits: &[bool]) -> Outcome {
    let n = bits.len();
    let (m, lowest, probs): (usize, usize, &[f64]) = if n < 128 {
        return not_applicable(128, n);
    } else if n < 6272 {
        (8, 1, &[0.21484375, 0.3671875, 0.23046875, 0.1875])
    } else if n < 750_000 {
        (
            128,
            4,
            &[
                0.1174035788,
                0.242955959,
                0.249363483,
                0.17517706,
                0.102701071,
                0.112398847,
            ],
        )
    } else {
        (
            10_000,
            10,
            &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        )
    };
    let k = probs.len() - 1;
    let blocks = n / m;
    let mut counts = vec![0usize; probs.len()];
    for block in bits.chunks_exact(m) {
        let (mut best, mut run) = (0usize, 0usize);
        for &b in block {
            run = if b { run + 1 } else { 0 };
            best = best.max(run);
        }
        counts[best.saturating_sub(lowest).min(k)] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&v, &p)| {
            let expected = blocks as f64 * p;
            (v as f64 - expected).powi(2) / expected
        })
        .sum();
    Outcome::PValues(vec![igamc(k as f64 / 2.0, chi2 / 2.0)])
}

/// Discrete Fourier transform (spectral) test: fraction of peaks under the 95% bound.
pub fn spectral(bits: &[bool]) -> Outcome {
    let n = bits.len();
    if n < 8 {
        return not_applicable(8, n);
    }
    let mut buf: Vec<Complex<f64>> = bits
        .iter()
        .map(|&b| Complex::new(if b { 1.0 } else { -1.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let bound = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let below = buf[..n / 2].iter().filter(|c| c.norm() < bound).count() as f64;
    let expected = 0.95 * nf / 2.0;
    let d = (below - expected) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    Outcome::PValues(vec![erfc(d.abs() / SQRT_2)])
}

fn cusum_p(steps: impl Iterator<Item = bool>, n: usize) -> f64 {
    let mut sum = 0i64;
    let mut z = 0i64;
    for b in steps {
        sum += if b { 1 } else { -1 };
        z = z.max(sum.abs());
    }
    if z == 0 {
        return 1.0;
    }
    let (ni, nf, zf) = (n as i64, n as f64, z as f64);
    let sqrt_n = nf.sqrt();
    // integer bounds truncate toward zero, as in the reference implementation
    let mut sum1 = 0.0;
    let mut k = (-ni / z + 1) / 4;
    while k <= (ni / z - 1) / 4 {
        let kf = k as f64;
        sum1 +=
            normal_cdf((4.0 * kf + 1.0) * zf / sqrt_n) - normal_cdf((4.0 * kf - 1.0) * zf / sqrt_n);
        k += 1;
    }
    let mut sum2 = 0.0;
    let mut k = (-ni / z - 3) / 4;
    while k <= (ni / z - 1) / 4 {
        let kf = k as f64;
        sum2 +=
            normal_cdf((4.0 * kf + 3.0) * zf / sqrt_n) - normal_cdf((4.0 * kf + 1.0) * zf / sqrt_n);
        k += 1;
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

/// Cumulative sums, forward then backward.
pub fn cumulative_sums(bits: &[bool]) -> Outcome {
    let n = bits.len();
    if n == 0 {
        return not_applicable(1, n);
    }
    Outcome::PValues(vec![
        cusum_p(bits.iter().copied(), n),
        cusum_p(bits.iter().rev().copied(), n),
    ])
}

/// `ψ²_m` over overlapping, wrapped m-bit patterns.
fn psi_squared(bits: &[bool], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    for i in 0..n {
        let pattern = (0..m).fold(0usize, |acc, j| (acc << 1) | usize::from(bits[(i + j) % n]));
        counts[pattern] += 1;
    }
    let sum_sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    sum_sq * (1u64 << m) as f64 / n as f64 - n as f64
}

/// Serial test with pattern length `m`; returns both p-values.
pub fn serial(bits: &[bool], m: usize) -> Outcome {
    let n = bits.len();
    if !(2..=24).contains(&m) {
        return Outcome::NotApplicable(format!("pattern length {m} outside 2..=24"));
    }
    if n < (1 << m) {
        return not_applicable(1 << m, n);
    }
    let (p0, p1, p2) = (
        psi_squared(bits, m),
        psi_squared(bits, m - 1),
        psi_squared(bits, m - 2),
    );
    let del1 = p0 - p1;
    let del2 = p0 - 2.0 * p1 + p2;
    Outcome::PValues(vec![
        igamc(2f64.powi(m as i32 - 2), del1 / 2.0),
        igamc(2f64.powi(m as i32 - 3), del2 / 2.0),
    ])
}

/// Length of the shortest LFSR generating `bits`.
pub fn berlekamp_massey(bits: &[bool]) -> usize {
    let n = bits.len();
    let s: Vec<u8> = bits.iter().map(|&b| u8::from(b)).collect();
    let mut c = vec![0u8; n + 1];
    let mut b = vec![0u8; n + 1];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut last = 0usize; // index of the last length change, plus one
    for i in 0..n {
        let d = (1..=l).fold(s[i], |acc, j| acc ^ (c[j] & s[i - j]));
        if d == 1 {
            let shift = i + 1 - last;
            let prev = c.clone();
            for j in 0..=n - shift {
                c[j + shift] ^= b[j];
            }
            if 2 * l <= i {
                l = i + 1 - l;
                last = i + 1;
                b = prev;
            }
        }
    }
    l
}

/// Linear complexity over blocks of `m` bits.
pub fn linear_complexity(bits: &[bool], m: usize) -> Outcome {
    const PROBS: [f64; 7] = [0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833];
    let n = bits.len();
    if m < 2 || n < m {
        return not_applicable(m.max(2), n);
    }
    let blocks = n / m;
    let mf = m as f64;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mu = mf / 2.0 + (9.0 - sign) / 36.0 - (mf / 3.0 + 2.0 / 9.0) / 2f64.powf(mf);
    let mut counts = [0usize; 7];
    for block in bits.chunks_exact(m) {
        let t = sign * (berlekamp_massey(block) as f64 - mu) + 2.0 / 9.0;
        let bin = match t {
            t if t <= -2.5 => 0,
            t if t <= -1.5 => 1,
            t if t <= -0.5 => 2,
            t if t <= 0.5 => 3,
            t if t <= 1.5 => 4,
            t if t <= 2.5 => 5,
            _ => 6,
        };
        counts[bin] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(PROBS)
        .map(|(&v, p)| {
            let expected = blocks as f64 * p;
            (v as f64 - expected).powi(2) / expected
        })
        .sum();
    Outcome::PValues(vec![igamc(3.0, chi2 / 2.0)])
}
