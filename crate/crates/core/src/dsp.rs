//! FFT plumbing shared by the link simulator and the oracle.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// Unnormalized inverse transform.
pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_inverse(buf.len()).process(buf);
}

/// Storage slot of the signed frequency index `q` in a length-`len` DFT.
pub(crate) fn bin(q: i64, len: usize) -> usize {
    q.rem_euclid(len as i64) as usize
}

pub(crate) fn power(samples: &[Complex64]) -> f64 {
    samples.iter().map(|s| s.norm_sqr()).sum()
}
