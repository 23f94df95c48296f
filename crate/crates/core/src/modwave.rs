//! Switching waveform of an N-state phase switch and its harmonic content.
//!
//! State `n` applies the phase `2*pi*n/N` for a pulse of `A` sample periods.
//! The resulting sequence is periodic over `N` pulses, so its spectrum is a
//! line spectrum. Only the lines `k = 1 + zN` survive, and in the continuous
//! harmonic index `i` (line at `f_p/N + i*f_p`) the coefficient is
//! `alpha(i) = sinc(pi(i + 1/N)) * exp(-j*pi(i + 1/N))` with `sinc(x) = sin(x)/x`.
//!
//! A cyclic delay of `d` switch periods (`T_sw = T_p / O_tau`) rotates every
//! harmonic by `-2*pi*d/D - 2*pi*(d/O_tau)*i`, with `D = N*O_tau` delays.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_index, Error, Result};

/// Modulation tuple `(N, A, O_tau, f_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModConfig {
    n_states: usize,
    alias_factor: usize,
    oversampling: usize,
    sample_rate: f64,
}

impl ModConfig {
    /// Builds a configuration with normalized sample rate `f_s = 1`.
    pub fn new(n_states: usize, alias_factor: usize, oversampling: usize) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::InvalidConfig(format!("N = {n_states}, need at least two switch states")));
        }
        Self::build(n_states, alias_factor, oversampling, 1.0)
    }

    /// Single-state switch. The waveform is constant, which makes time
    /// modulation a pass-through; only useful as a baseline.
    pub fn single_state(alias_factor: usize, oversampling: usize) -> Result<Self> {
        Self::build(1, alias_factor, oversampling, 1.0)
    }

    fn build(n: usize, a: usize, o: usize, fs: f64) -> Result<Self> {
        if a < 1 {
            return Err(Error::InvalidConfig("A must be at least 1".into()));
        }
        if o < 1 {
            return Err(Error::InvalidConfig("O_tau must be at least 1".into()));
        }
        if o > a {
            return Err(Error::InvalidConfig(format!(
                "O_tau = {o} exceeds A = {a}; switching would run faster than f_s"
            )));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidConfig(format!("sample rate {fs} must be positive")));
        }
        Ok(Self { n_states: n, alias_factor: a, oversampling: o, sample_rate: fs })
    }

    pub fn with_sample_rate(self, sample_rate: f64) -> Result<Self> {
        Self::build(self.n_states, self.alias_factor, self.oversampling, sample_rate)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn alias_factor(&self) -> usize {
        self.alias_factor
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// `T_p = A * T_s`
    pub fn pulse_duration(&self) -> f64 {
        self.alias_factor as f64 / self.sample_rate
    }

    /// `f_p = f_s / A`
    pub fn pulse_frequency(&self) -> f64 {
        self.sample_rate / self.alias_factor as f64
    }

    /// `f_sw = f_s * O_tau / A`
    pub fn switch_frequency(&self) -> f64 {
        self.sample_rate * self.oversampling as f64 / self.alias_factor as f64
    }

    /// `T_sw = 1 / f_sw`
    pub fn switch_period(&self) -> f64 {
        1.0 / self.switch_frequency()
    }

    /// Number of realizable cyclic delays `D = N * O_tau`.
    pub fn delay_count(&self) -> usize {
        self.n_states * self.oversampling
    }

    /// Frequency offset of the main harmonic, `f_p / N = f_s / (N A)`.
    pub fn modulating_frequency(&self) -> f64 {
        self.pulse_frequency() / self.n_states as f64
    }

    /// Period of the switching sequence, `N * T_p`.
    pub fn waveform_period(&self) -> f64 {
        self.n_states as f64 * self.pulse_duration()
    }

    /// `floor((A - 1) / 2)`, the centering offset of the block comb.
    pub fn center_offset(&self) -> i64 {
        (self.alias_factor as i64 - 1).div_euclid(2)
    }

    /// Default harmonic window half-width `W = 8 A N`.
    pub fn default_window(&self) -> i64 {
        8 * (self.alias_factor * self.n_states) as i64
    }

    pub(crate) fn check_delay(&self, d: usize) -> Result<()> {
        check_index("d", d as i64, self.delay_count() as i64)
    }
}

/// Complex coefficients over a contiguous range of harmonic indices.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum {
    start: i64,
    coefficients: Vec<Complex64>,
}

impl HarmonicSpectrum {
    pub fn new(start: i64, coefficients: Vec<Complex64>) -> Self {
        Self { start, coefficients }
    }

    /// Evaluates `f` at every index in `[lo, hi]`.
    pub fn from_fn(lo: i64, hi: i64, f: impl FnMut(i64) -> Complex64) -> Self {
        Self { start: lo, coefficients: (lo..=hi).map(f).collect() }
    }

    /// Inclusive index range `(i_min, i_max)`.
    pub fn index_range(&self) -> (i64, i64) {
        (self.start, self.start + self.coefficients.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn contains(&self, i: i64) -> bool {
        let (lo, hi) = self.index_range();
        (lo..=hi).contains(&i)
    }

    pub fn get(&self, i: i64) -> Option<Complex64> {
        let off = i.checked_sub(self.start)?;
        usize::try_from(off).ok().and_then(|o| self.coefficients.get(o).copied())
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coefficients.iter().enumerate().map(move |(k, c)| (self.start + k as i64, *c))
    }

    pub fn total_power(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Phase of the `n`-th switch state, `2*pi*n/N`.
pub fn state_phase(n: usize, n_states: usize) -> Result<f64> {
    check_index("n", n as i64, n_states as i64)?;
    Ok(2.0 * PI * n as f64 / n_states as f64)
}

/// Ideal switch state values `exp(j*2*pi*n/N)`.
pub fn switch_states(n_states: usize) -> Vec<Complex64> {
    (0..n_states).map(|n| Complex64::from_polar(1.0, 2.0 * PI * n as f64 / n_states as f64)).collect()
}

/// Fourier coefficient of the `k`-th harmonic of the `n`-th periodic pulse.
pub fn fourier_coeff(n: usize, k: i64, n_states: usize) -> Result<Complex64> {
    let phi = state_phase(n, n_states)?;
    let x = PI * k as f64 / n_states as f64;
    Ok(Complex64::from_polar(1.0, phi) * sinc(x) * Complex64::from_polar(1.0, -x))
}

/// Harmonic coefficient `alpha(i)` of the undelayed modulating sequence.
pub fn harmonic_coef(i: i64, n_states: usize) -> Complex64 {
    if n_states == 1 {
        // constant waveform: a single line at DC
        return Complex64::new(if i == -1 { 1.0 } else { 0.0 }, 0.0);
    }
    // sin(pi(i + 1/N)) = (-1)^i sin(pi/N) and exp(-j pi i) = (-1)^i, so the
    // signs cancel; evaluating this way avoids large-argument trig.
    let x = i as f64 + 1.0 / n_states as f64;
    let s = (PI / n_states as f64).sin() / (PI * x);
    Complex64::from_polar(s, -PI / n_states as f64)
}

/// Magnitude `|sinc(pi(i + 1/N))|` of `alpha(i)`.
pub fn harmonic_amplitude(i: i64, n_states: usize) -> f64 {
    sinc(PI * (i as f64 + 1.0 / n_states as f64)).abs()
}

/// Two-branch phase of `alpha(i)`: `-pi/N` for `i >= 0`, `-pi/N - pi` below.
pub fn harmonic_phase(i: i64, n_states: usize) -> f64 {
    let base = -PI / n_states as f64;
    if i >= 0 {
        base
    } else {
        base - PI
    }
}

/// Whether harmonic line `k` of the sequence is nonzero (`k = 1 mod N`).
pub fn harmonic_exists(k: i64, n_states: usize) -> bool {
    k.rem_euclid(n_states as i64) == 1 % n_states as i64
}

/// Phase rotation of harmonic `i` caused by cyclic delay `d`.
pub fn delay_phase(i: i64, d: usize, cfg: &ModConfig) -> Result<f64> {
    cfg.check_delay(d)?;
    let dd = cfg.delay_count() as i64;
    let n = cfg.n_states() as i64;
    // -2 pi (d/D + d i / O_tau) = -2 pi d (1 + iN) / D
    Ok(-2.0 * PI * (d as i64 * (1 + i * n)) as f64 / dd as f64)
}

/// Delayed coefficient `alpha(i, d) = alpha(i) * exp(j * phi_tau(i, d))`.
pub fn delayed_coef(i: i64, d: usize, cfg: &ModConfig) -> Result<Complex64> {
    cfg.check_delay(d)?;
    Ok(harmonic_coef(i, cfg.n_states()) * unit_delay_rotation(i, d, cfg))
}

pub(crate) fn unit_delay_rotation(i: i64, d: usize, cfg: &ModConfig) -> Complex64 {
    let dd = cfg.delay_count() as i64;
    let n = cfg.n_states() as i64;
    let cycles = (d as i64 * (1 + i * n)).rem_euclid(dd);
    Complex64::from_polar(1.0, -2.0 * PI * cycles as f64 / dd as f64)
}

/// `alpha(i, d)` over `i in [-window, window]`.
pub fn harmonic_spectrum(cfg: &ModConfig, d: usize, window: i64) -> Result<HarmonicSpectrum> {
    cfg.check_delay(d)?;
    Ok(HarmonicSpectrum::from_fn(-window, window, |i| {
        harmonic_coef(i, cfg.n_states()) * unit_delay_rotation(i, d, cfg)
    }))
}

/// Samples per fine switching step (`T_sw`) at rate `L * f_s`.
pub fn samples_per_switch(cfg: &ModConfig, upsample: usize) -> Result<usize> {
    if upsample == 0 {
        return Err(Error::InvalidConfig("upsampling factor must be >= 1".into()));
    }
    let num = cfg.alias_factor() * upsample;
    if !num.is_multiple_of(cfg.oversampling()) {
        return Err(Error::OffGrid(format!(
            "A*L/O_tau = {}*{}/{} is not an integer",
            cfg.alias_factor(),
            upsample,
            cfg.oversampling()
        )));
    }
    Ok(num / cfg.oversampling())
}

/// Samples in one waveform period at rate `L * f_s`, `N * A * L`.
pub fn period_samples(cfg: &ModConfig, upsample: usize) -> usize {
    cfg.n_states() * cfg.alias_factor() * upsample
}

/// Modulating sequence `c(t - d*T_sw)` sampled at `L * f_s`.
///
/// Each sample takes the state active at the start of its interval.
pub fn waveform_samples(
    cfg: &ModConfig,
    d: usize,
    sample_count: usize,
    upsample: usize,
) -> Result<Vec<Complex64>> {
    waveform_from_states(cfg, d, sample_count, upsample, &switch_states(cfg.n_states()))
}

/// Same as [`waveform_samples`] but with arbitrary per-state values, e.g.
/// a switch with amplitude or phase imbalance.
pub fn waveform_from_states(
    cfg: &ModConfig,
    d: usize,
    sample_count: usize,
    upsample: usize,
    states: &[Complex64],
) -> Result<Vec<Complex64>> {
    cfg.check_delay(d)?;
    if states.len() != cfg.n_states() {
        return Err(Error::Length(format!("{} state values for N = {}", states.len(), cfg.n_states())));
    }
    let step = samples_per_switch(cfg, upsample)?;
    let period = period_samples(cfg, upsample);
    if !sample_count.is_multiple_of(period) {
        return Err(Error::Length(format!(
            "{sample_count} samples is not a multiple of the {period}-sample waveform period"
        )));
    }
    let pulse = cfg.alias_factor() * upsample;
    let shift = d * step;
    Ok((0..sample_count)
        .map(|s| {
            let u = (s + period - shift % period) % period;
            states[u / pulse]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn wrap(x: f64) -> f64 {
        (x + PI).rem_euclid(2.0 * PI) - PI
    }

    fn angle_eq(a: f64, b: f64) -> bool {
        wrap(a - b).abs() < 1e-9
    }

    #[test]
    fn state_phase_values() {
        assert_eq!(state_phase(0, 4).unwrap(), 0.0);
        assert!((state_phase(1, 4).unwrap() - PI / 2.0).abs() < TOL);
        assert!((state_phase(3, 8).unwrap() - 3.0 * PI / 4.0).abs() < TOL);
        assert!(matches!(state_phase(4, 4), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn fourier_coeff_values() {
        let c = fourier_coeff(0, 0, 4).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < TOL);
        assert!(fourier_coeff(0, 4, 4).unwrap().norm() < TOL);
        let c = fourier_coeff(1, 1, 4).unwrap();
        // sinc(pi/4) = sin(pi/4)/(pi/4)
        assert!((c.norm() - 0.900_316_316_157_106).abs() < 1e-12);
        assert!(angle_eq(c.arg(), PI / 2.0 - PI / 4.0));
        assert!(fourier_coeff(5, 1, 4).is_err());
    }

    #[test]
    fn harmonic_coef_values() {
        let a0 = harmonic_coef(0, 2);
        assert!((a0.norm() - 2.0 / PI).abs() < TOL);
        assert!(angle_eq(a0.arg(), -PI / 2.0));
        let am1 = harmonic_coef(-1, 2);
        assert!((am1.norm() - 2.0 / PI).abs() < TOL);
        assert!(angle_eq(am1.arg(), -PI / 2.0 - PI));
        let rel = (harmonic_coef(1, 4) / harmonic_coef(0, 4)).norm_sqr();
        assert!((10.0 * rel.log10() + 13.979_400_086_720_375).abs() < 1e-9);
    }

    #[test]
    fn harmonic_coef_matches_literal_formula() {
        for n in [2usize, 3, 4, 8, 16] {
            for i in -40..=40i64 {
                let x = PI * (i as f64 + 1.0 / n as f64);
                let lit = sinc(x) * Complex64::from_polar(1.0, -x);
                assert!((harmonic_coef(i, n) - lit).norm() < 1e-13, "n={n} i={i}");
                assert!((harmonic_amplitude(i, n) - lit.norm()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn phase_branch_rule() {
        for n in [2usize, 3, 4, 8, 16, 64] {
            for i in -64..=64i64 {
                let a = harmonic_coef(i, n);
                assert!(angle_eq(a.arg(), harmonic_phase(i, n)), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn existence_lattice() {
        assert!(harmonic_exists(1, 4));
        assert!(!harmonic_exists(2, 4));
        assert!(harmonic_exists(-3, 4));
        assert!(harmonic_exists(5, 4));
        assert!(!harmonic_exists(0, 4));
    }

    #[test]
    fn delay_phase_values() {
        let c41 = ModConfig::new(4, 1, 1).unwrap();
        assert_eq!(delay_phase(0, 0, &c41).unwrap(), 0.0);
        assert!((delay_phase(0, 1, &c41).unwrap() + PI / 2.0).abs() < TOL);
        let c22 = ModConfig::new(2, 2, 2).unwrap();
        assert!((delay_phase(1, 1, &c22).unwrap() - (-PI / 2.0 - PI)).abs() < TOL);
        assert!(delay_phase(0, 4, &c41).is_err());
    }

    #[test]
    fn delay_phase_is_literal_formula() {
        let cfg = ModConfig::new(4, 4, 2).unwrap();
        let dd = cfg.delay_count() as f64;
        for d in 0..cfg.delay_count() {
            for i in -20..=20i64 {
                let lit = -2.0 * PI * d as f64 / dd - 2.0 * PI * (d as f64 / 2.0) * i as f64;
                assert!((delay_phase(i, d, &cfg).unwrap() - lit).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn delayed_coef_values() {
        let cfg = ModConfig::new(4, 1, 1).unwrap();
        for i in -5..=5 {
            assert_eq!(delayed_coef(i, 0, &cfg).unwrap(), harmonic_coef(i, 4));
        }
        let want = harmonic_coef(0, 4) * Complex64::from_polar(1.0, -PI);
        assert!((delayed_coef(0, 2, &cfg).unwrap() - want).norm() < TOL);

        let cfg = ModConfig::new(4, 2, 2).unwrap();
        let mut worst = 0.0f64;
        for d in 0..cfg.delay_count() {
            for i in -64..=64 {
                let dev = delayed_coef(i, d, &cfg).unwrap().norm() - harmonic_coef(i, 4).norm();
                worst = worst.max(dev.abs());
            }
        }
        assert!(worst < 1e-15);
    }

    #[test]
    fn derived_timing() {
        let cfg = ModConfig::new(4, 8, 2).unwrap().with_sample_rate(20e6).unwrap();
        assert_eq!(cfg.delay_count(), 8);
        assert!((cfg.pulse_duration() - 8.0 / 20e6).abs() < 1e-20);
        assert!((cfg.pulse_frequency() - 2.5e6).abs() < 1e-6);
        assert!((cfg.switch_frequency() - 5e6).abs() < 1e-6);
        assert!((cfg.modulating_frequency() - 2.5e6 / 4.0).abs() < 1e-6);
        assert!((cfg.waveform_period() - 32.0 / 20e6).abs() < 1e-18);
        assert!(ModConfig::new(4, 2, 4).is_err());
        assert!(ModConfig::new(1, 2, 1).is_err());
        assert!(ModConfig::new(4, 0, 1).is_err());
    }

    #[test]
    fn waveform_examples() {
        let cfg = ModConfig::new(2, 1, 1).unwrap();
        let w = waveform_samples(&cfg, 0, 2, 1).unwrap();
        assert!((w[0] - Complex64::new(1.0, 0.0)).norm() < TOL);
        assert!((w[1] - Complex64::new(-1.0, 0.0)).norm() < TOL);

        let cfg = ModConfig::new(4, 2, 1).unwrap();
        let w = waveform_samples(&cfg, 0, 8, 1).unwrap();
        for (s, v) in w.iter().enumerate() {
            let want = 2.0 * PI * (s / 2) as f64 / 4.0;
            assert!(angle_eq(v.arg(), want));
        }
        assert!(waveform_samples(&cfg, 0, 7, 1).is_err());
    }

    #[test]
    fn waveform_oversampled_delay_moves_in_fine_steps() {
        // N=4, A=4, O=2: pulse of 4 samples, switch step of 2 samples.
        let cfg = ModConfig::new(4, 4, 2).unwrap();
        let w0 = waveform_samples(&cfg, 0, 16, 1).unwrap();
        let w1 = waveform_samples(&cfg, 1, 16, 1).unwrap();
        for s in 0..16 {
            assert_eq!(w1[s], w0[(s + 16 - 2) % 16]);
        }
        let c = ModConfig::new(4, 3, 2).unwrap();
        assert!(matches!(waveform_samples(&c, 0, 12, 1), Err(Error::OffGrid(_))));
        assert!(waveform_samples(&c, 0, 24, 2).is_ok());
    }

    #[test]
    fn harmonic_spectrum_window() {
        let cfg = ModConfig::new(4, 2, 1).unwrap();
        let s = harmonic_spectrum(&cfg, 1, 5).unwrap();
        assert_eq!(s.index_range(), (-5, 5));
        assert_eq!(s.get(2), Some(delayed_coef(2, 1, &cfg).unwrap()));
        assert_eq!(s.get(6), None);
        assert_eq!(cfg.default_window(), 64);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unit_modulus_and_periodic(n in 2usize..9, a in 1usize..6, o in 1usize..3, l in 1usize..4, d_seed in 0usize..64) {
                prop_assume!(o <= a);
                let cfg = ModConfig::new(n, a, o).unwrap();
                let l = l * o;
                let d = d_seed % cfg.delay_count();
                let p = period_samples(&cfg, l);
                let w = waveform_samples(&cfg, d, 3 * p, l).unwrap();
                for s in 0..w.len() {
                    prop_assert!((w[s].norm() - 1.0).abs() < 1e-14);
                    if s >= p {
                        prop_assert_eq!(w[s], w[s - p]);
                    }
                }
            }

            #[test]
            fn magnitude_bounded(n in 2usize..64, i in -500i64..500) {
                prop_assert!(harmonic_coef(i, n).norm() <= 1.0);
            }
        }
    }
}
