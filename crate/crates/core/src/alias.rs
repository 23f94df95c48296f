//! Block-repeated baseband, precoding and the aliased harmonic coefficient.
//!
//! The baseband consists of `A` adjacent blocks of width `f_s/A`, block `a`
//! weighted by `v(a)`. Harmonic `i` of the switching sequence shifts the comb
//! by exactly `i` block widths, so every output block position collects `A`
//! precoded harmonics:
//!
//! ```text
//! alpha_A(i, d) = exp(j phi_tauA(i, d)) * sum_a v(a) alpha(i - a + floor((A-1)/2))
//! ```
//!
//! With the alternating precoder `v(a) = (-1)^a` the sideband terms, which
//! share one phase per side, cancel pairwise.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{check_index, Error, Result};
use crate::modwave::{harmonic_coef, unit_delay_rotation, HarmonicSpectrum, ModConfig};

/// Phase-only per-block precoder `v(a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    base: Vec<Complex64>,
}

impl Precoder {
    /// Rejects empty vectors and entries off the unit circle.
    pub fn new(base: Vec<Complex64>) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::InvalidConfig("precoder needs at least one block".into()));
        }
        if let Some((a, v)) = base.iter().enumerate().find(|(_, v)| (v.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "precoder entry {a} has modulus {}, expected 1",
                v.norm()
            )));
        }
        Ok(Self { base })
    }

    /// `v(a) = (-1)^a`
    pub fn alternating(blocks: usize) -> Self {
        Self { base: (0..blocks).map(|a| Complex64::new(if a % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect() }
    }

    /// `v(a) = 1`, the plain block repetition.
    pub fn identity(blocks: usize) -> Self {
        Self { base: vec![Complex64::new(1.0, 0.0); blocks] }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn base(&self) -> &[Complex64] {
        &self.base
    }

    pub fn get(&self, a: usize) -> Option<Complex64> {
        self.base.get(a).copied()
    }

    /// Delay-extended coefficient `v(a, d) = v(a) exp(-j 2 pi a d / O_tau)`.
    pub fn extended(&self, a: usize, d: usize, oversampling: usize) -> Result<Complex64> {
        check_index("a", a as i64, self.base.len() as i64)?;
        Ok(self.base[a] * extension_rotation(a, d, oversampling))
    }

    /// Full extended vector for delay `d`.
    pub fn extended_vector(&self, d: usize, oversampling: usize) -> Vec<Complex64> {
        self.base.iter().enumerate().map(|(a, v)| v * extension_rotation(a, d, oversampling)).collect()
    }
}

fn extension_rotation(a: usize, d: usize, oversampling: usize) -> Complex64 {
    let turns = (a * d) % oversampling;
    Complex64::from_polar(1.0, -2.0 * PI * turns as f64 / oversampling as f64)
}

/// The alternating precoder for `A` blocks.
pub fn alternating_precoder(blocks: usize) -> Result<Precoder> {
    if blocks == 0 {
        return Err(Error::InvalidConfig("A must be at least 1".into()));
    }
    Ok(Precoder::alternating(blocks))
}

/// `v(a, d)` of precoder `p`; see [`Precoder::extended`].
pub fn extended_precoder(p: &Precoder, a: usize, d: usize, oversampling: usize) -> Result<Complex64> {
    p.extended(a, d, oversampling)
}

/// Indices of the wanted blocks after aliasing,
/// `{-floor((A-1)/2), ..., A-1-floor((A-1)/2)}`.
pub fn passband_indices(blocks: usize) -> RangeInclusive<i64> {
    let a = blocks as i64;
    let f = (a - 1).div_euclid(2);
    -f..=(a - 1 - f)
}

/// Baseband harmonic indices before aliasing,
/// `{-(A-1)+floor((A-1)/2), ..., floor((A-1)/2)}`.
pub fn pre_alias_passband(blocks: usize) -> RangeInclusive<i64> {
    let a = blocks as i64;
    let f = (a - 1).div_euclid(2);
    (-(a - 1) + f)..=f
}

/// Fractional block offset `floor((A-1)/2) - (A-1)/2 + 1/N`.
pub fn frac_shift(cfg: &ModConfig) -> f64 {
    cfg.center_offset() as f64 - (cfg.alias_factor() as f64 - 1.0) / 2.0 + 1.0 / cfg.n_states() as f64
}

/// `exp(j phi_tauA(i, d)) = exp(-j 2 pi d/D) exp(-j 2 pi (d/O_tau)(i + floor((A-1)/2)))`.
pub fn aliased_delay_rotation(i: i64, d: usize, cfg: &ModConfig) -> Result<Complex64> {
    cfg.check_delay(d)?;
    Ok(unit_delay_rotation(i + cfg.center_offset(), d, cfg))
}

fn check_precoder(cfg: &ModConfig, p: &Precoder) -> Result<()> {
    if p.len() != cfg.alias_factor() {
        return Err(Error::Length(format!("precoder has {} blocks, A = {}", p.len(), cfg.alias_factor())));
    }
    Ok(())
}

/// Undelayed precoded sum `sum_a v(a) alpha(i - a + floor((A-1)/2))`.
pub fn precoded_sum(i: i64, cfg: &ModConfig, p: &Precoder) -> Result<Complex64> {
    check_precoder(cfg, p)?;
    let f = cfg.center_offset();
    let n = cfg.n_states();
    Ok(p.base.iter().enumerate().map(|(a, v)| v * harmonic_coef(i - a as i64 + f, n)).sum())
}

/// Aliased coefficient `alpha_A(i, d)` in the factored form: common delay
/// rotation times the undelayed precoded sum.
pub fn aliased_coef(i: i64, d: usize, cfg: &ModConfig, p: &Precoder) -> Result<Complex64> {
    let rot = aliased_delay_rotation(i, d, cfg)?;
    Ok(rot * precoded_sum(i, cfg, p)?)
}

/// Aliased coefficient evaluated term by term: the delay-extended precoder
/// applied to the individually delayed harmonics `alpha(i - a + f, d)`.
pub fn aliased_coef_direct(i: i64, d: usize, cfg: &ModConfig, p: &Precoder) -> Result<Complex64> {
    cfg.check_delay(d)?;
    check_precoder(cfg, p)?;
    let f = cfg.center_offset();
    let o = cfg.oversampling();
    (0..p.len())
        .map(|a| {
            let h = i - a as i64 + f;
            let alpha_d = harmonic_coef(h, cfg.n_states()) * unit_delay_rotation(h, d, cfg);
            Ok(p.extended(a, d, o)? * alpha_d)
        })
        .sum()
}

/// Aliased block spectrum on a finite harmonic window.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasedSpectrum {
    config: ModConfig,
    delay: usize,
    precoder: Precoder,
    coefficients: HarmonicSpectrum,
}

impl AliasedSpectrum {
    pub fn config(&self) -> &ModConfig {
        &self.config
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn precoder(&self) -> &Precoder {
        &self.precoder
    }

    pub fn coefficients(&self) -> &HarmonicSpectrum {
        &self.coefficients
    }

    /// `alpha_A(i, d)`, or `None` outside the window.
    pub fn coef(&self, i: i64) -> Option<Complex64> {
        self.coefficients.get(i)
    }

    /// `|alpha_A(i, d)|^2`, or `None` outside the window.
    pub fn power(&self, i: i64) -> Option<f64> {
        self.coef(i).map(|c| c.norm_sqr())
    }

    pub fn passband_indices(&self) -> RangeInclusive<i64> {
        passband_indices(self.config.alias_factor())
    }

    pub fn pre_alias_passband(&self) -> RangeInclusive<i64> {
        pre_alias_passband(self.config.alias_factor())
    }

    pub fn frac_shift(&self) -> f64 {
        frac_shift(&self.config)
    }

    /// Center frequency of block `i`, `(Delta_f + i) f_s / A`.
    pub fn block_center(&self, i: i64) -> f64 {
        (self.frac_shift() + i as f64) * self.config.pulse_frequency()
    }

    /// Block powers in dB relative to the strongest block in the window.
    pub fn normalized_power_db(&self) -> Vec<(i64, f64)> {
        let peak = self.coefficients.coefficients().iter().map(|c| c.norm_sqr()).fold(0.0f64, f64::max);
        self.coefficients.iter().map(|(i, c)| (i, 10.0 * (c.norm_sqr() / peak).log10())).collect()
    }
}

/// Evaluates `alpha_A(i, d)` over `i in [-window, window]`.
pub fn block_spectrum(cfg: &ModConfig, d: usize, p: &Precoder, window: i64) -> Result<AliasedSpectrum> {
    if window < cfg.alias_factor() as i64 {
        return Err(Error::Window(format!("W = {window} is smaller than A = {}", cfg.alias_factor())));
    }
    cfg.check_delay(d)?;
    check_precoder(cfg, p)?;
    let mut coefs = Vec::with_capacity(2 * window as usize + 1);
    for i in -window..=window {
        coefs.push(aliased_coef(i, d, cfg, p)?);
    }
    Ok(AliasedSpectrum {
        config: *cfg,
        delay: d,
        precoder: p.clone(),
        coefficients: HarmonicSpectrum::new(-window, coefs),
    })
}
