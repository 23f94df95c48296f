//! Figures of merit and design-rule checks for an aliased TMA configuration.

use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;

use crate::alias::{
    aliased_coef, aliased_delay_rotation, passband_indices, precoded_sum, AliasedSpectrum, Precoder,
};
use crate::error::{Error, Result};
use crate::modwave::{harmonic_coef, ModConfig};

/// Which adjacent channel enters the ACLR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AclrSide {
    /// Blocks `i_bb_A - A`.
    #[default]
    Lower,
    /// Blocks `i_bb_A + A`.
    Upper,
    /// The weaker of the two ratios.
    Worst,
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn channel_power(spec: &AliasedSpectrum, offset: i64) -> Result<f64> {
    spec.passband_indices()
        .map(|i| {
            spec.power(i + offset).ok_or_else(|| {
                let (lo, hi) = spec.coefficients().index_range();
                Error::Window(format!(
                    "block {} needed for ACLR lies outside the window [{lo}, {hi}]",
                    i + offset
                ))
            })
        })
        .sum()
}

/// Adjacent channel leakage ratio in dB, lower adjacent channel.
pub fn aclr(spec: &AliasedSpectrum) -> Result<f64> {
    aclr_with(spec, AclrSide::Lower)
}

pub fn aclr_with(spec: &AliasedSpectrum, side: AclrSide) -> Result<f64> {
    let a = spec.config().alias_factor() as i64;
    let main = channel_power(spec, 0)?;
    let ratio = match side {
        AclrSide::Lower => main / channel_power(spec, -a)?,
        AclrSide::Upper => main / channel_power(spec, a)?,
        AclrSide::Worst => main / channel_power(spec, -a)?.max(channel_power(spec, a)?),
    };
    Ok(to_db(ratio))
}

/// ACLR straight from the finite precoded sums, no window involved. The
/// value does not depend on the delay.
pub fn aclr_for(cfg: &ModConfig, p: &Precoder, side: AclrSide) -> Result<f64> {
    let a = cfg.alias_factor() as i64;
    let chan = |offset: i64| -> Result<f64> {
        passband_indices(cfg.alias_factor())
            .map(|i| precoded_sum(i + offset, cfg, p).map(|c| c.norm_sqr()))
            .sum()
    };
    let main = chan(0)?;
    let ratio = match side {
        AclrSide::Lower => main / chan(-a)?,
        AclrSide::Upper => main / chan(a)?,
        AclrSide::Worst => main / chan(-a)?.max(chan(a)?),
    };
    Ok(to_db(ratio))
}

/// Peak-to-peak block power variation across the passband in dB.
pub fn passband_ripple(spec: &AliasedSpectrum) -> Result<f64> {
    if spec.config().alias_factor() == 1 {
        return Ok(0.0);
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in spec.passband_indices() {
        let p = spec.power(i).ok_or_else(|| Error::Window(format!("passband block {i} outside window")))?;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Ok(to_db(hi / lo))
}

/// Passband block gains after removing the known per-block phase terms:
/// the precoder entry `v(b)`, the delay rotation and the complex main
/// harmonic `alpha(0)`. Block `b = 0..A` sits at harmonic index
/// `b - floor((A-1)/2)`. A gain of exactly 1 is an ideal block.
pub fn compensated_block_gains(cfg: &ModConfig, d: usize, p: &Precoder) -> Result<Vec<Complex64>> {
    let f = cfg.center_offset();
    let a0 = harmonic_coef(0, cfg.n_states());
    (0..cfg.alias_factor())
        .map(|b| {
            let i = b as i64 - f;
            let known = p.base()[b] * aliased_delay_rotation(i, d, cfg)? * a0;
            Ok(aliased_coef(i, d, cfg, p)? / known)
        })
        .collect()
}

/// RMS deviation of the compensated block gains from 1.
pub fn evm(spec: &AliasedSpectrum, d: usize) -> Result<f64> {
    let gains = compensated_block_gains(spec.config(), d, spec.precoder())?;
    Ok(evm_from_gains(&gains))
}

pub fn evm_from_gains(gains: &[Complex64]) -> f64 {
    if gains.is_empty() {
        return 0.0;
    }
    let sum: f64 = gains.iter().map(|g| (g - 1.0).norm_sqr()).sum();
    (sum / gains.len() as f64).sqrt()
}

/// Symbol rate `R = (B/A) K / (K + N_cp)`.
pub fn symbol_rate(subcarriers: usize, cp_length: usize, blocks: usize, bandwidth: f64) -> Result<f64> {
    let r = symbol_rate_fraction(subcarriers, cp_length, blocks)?;
    Ok(bandwidth * *r.numer() as f64 / *r.denom() as f64)
}

/// Symbol rate as an exact fraction of `B`.
pub fn symbol_rate_fraction(subcarriers: usize, cp_length: usize, blocks: usize) -> Result<Ratio<u64>> {
    if subcarriers == 0 {
        return Err(Error::InvalidConfig("K must be positive".into()));
    }
    if blocks == 0 {
        return Err(Error::InvalidConfig("A must be at least 1".into()));
    }
    Ok(Ratio::new(subcarriers as u64, blocks as u64 * (subcarriers + cp_length) as u64))
}

/// Switching frequency as an exact fraction of `B = f_s`.
pub fn switch_frequency_fraction(cfg: &ModConfig) -> Ratio<u64> {
    Ratio::new(cfg.oversampling() as u64, cfg.alias_factor() as u64)
}

/// Capacity of the aliased passband relative to flat blocks at the same
/// total power: mean of `log2(1 + snr g_a^2)` over the blocks divided by
/// `log2(1 + snr)`, where `g_a` are the block amplitudes scaled to unit RMS.
/// `snr_ref` is linear.
pub fn normalized_capacity(n_states: usize, blocks: usize, snr_ref: f64) -> Result<f64> {
    let cfg = ModConfig::new(n_states, blocks, 1)?;
    let p = Precoder::alternating(blocks);
    let amps: Vec<f64> = passband_indices(blocks)
        .map(|i| precoded_sum(i, &cfg, &p).map(|c| c.norm()))
        .collect::<Result<_>>()?;
    normalized_capacity_from_gains(&amps, snr_ref)
}

pub fn normalized_capacity_from_gains(amplitudes: &[f64], snr_ref: f64) -> Result<f64> {
    if snr_ref.is_nan() || snr_ref <= 0.0 {
        return Err(Error::InvalidConfig(format!("reference SNR {snr_ref} must be positive")));
    }
    if amplitudes.is_empty() {
        return Err(Error::InvalidConfig("no blocks".into()));
    }
    let rms = (amplitudes.iter().map(|g| g * g).sum::<f64>() / amplitudes.len() as f64).sqrt();
    let mean: f64 = amplitudes.iter().map(|g| (1.0 + snr_ref * (g / rms).powi(2)).log2()).sum::<f64>()
        / amplitudes.len() as f64;
    Ok(mean / (1.0 + snr_ref).log2())
}

/// A broken design rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `1 + aN` is a multiple of `O_tau`.
    MultipleOfOversampling { block: usize, value: usize, oversampling: usize },
    /// `gcd(1 + aN, O_tau) != 1`.
    CommonDivisor { block: usize, value: usize, gcd: usize },
    /// Subcarriers per block not a multiple of `N`.
    BlockSize { block_size: usize, n_states: usize },
    /// Cyclic prefix not a multiple of `N`.
    CyclicPrefix { cp_length: usize, n_states: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MultipleOfOversampling { block, value, oversampling } => {
                write!(f, "block {block}: 1+aN = {value} is a multiple of O_tau = {oversampling}")
            }
            Violation::CommonDivisor { block, value, gcd } => {
                write!(f, "block {block}: gcd(1+aN = {value}, O_tau) = {gcd}")
            }
            Violation::BlockSize { block_size, n_states } => {
                write!(f, "K_b = {block_size} is not a multiple of N = {n_states}")
            }
            Violation::CyclicPrefix { cp_length, n_states } => {
                write!(f, "N_cp = {cp_length} is not a multiple of N = {n_states}")
            }
        }
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Design rules that keep every passband block on the same delay phase
/// step and an integer number of modulation cycles in each symbol.
/// An empty list means the configuration is valid.
pub fn check_constraints(cfg: &ModConfig, block_size: usize) -> Vec<Violation> {
    let n = cfg.n_states();
    let o = cfg.oversampling();
    let mut out = Vec::new();
    for a in 0..cfg.alias_factor() {
        let value = 1 + a * n;
        // every integer is a multiple of 1, so the rule only bites with oversampling
        if o >= 2 && value.is_multiple_of(o) {
            out.push(Violation::MultipleOfOversampling { block: a, value, oversampling: o });
        }
        let g = gcd(value, o);
        if g != 1 {
            out.push(Violation::CommonDivisor { block: a, value, gcd: g });
        }
    }
    if block_size == 0 || !block_size.is_multiple_of(n) {
        out.push(Violation::BlockSize { block_size, n_states: n });
    }
    out
}

/// One row of the system-parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemReport {
    pub config: ModConfig,
    pub subcarriers: usize,
    pub block_size: usize,
    pub cp_length: usize,
    /// Fraction of `B`.
    pub symbol_rate: Ratio<u64>,
    /// Fraction of `B`.
    pub switch_freq: Ratio<u64>,
    pub delay_count: usize,
    pub aclr_db: f64,
    pub ripple_db: f64,
    pub evm: f64,
}

/// Assembles rate, switching frequency, delay count, ACLR, ripple and EVM
/// for the alternating precoder at `d = 0`.
pub fn system_report(
    cfg: &ModConfig,
    subcarriers: usize,
    block_size: usize,
    cp_length: usize,
) -> Result<SystemReport> {
    if subcarriers != cfg.alias_factor() * block_size {
        return Err(Error::InvalidConfig(format!(
            "K = {subcarriers} but A * K_b = {}",
            cfg.alias_factor() * block_size
        )));
    }
    let mut violations = check_constraints(cfg, block_size);
    if !cp_length.is_multiple_of(cfg.n_states()) {
        violations.push(Violation::CyclicPrefix { cp_length, n_states: cfg.n_states() });
    }
    if !violations.is_empty() {
        return Err(Error::Constraints(violations));
    }
    let p = Precoder::alternating(cfg.alias_factor());
    let window = cfg.default_window().max(2 * cfg.alias_factor() as i64);
    let spec = crate::alias::block_spectrum(cfg, 0, &p, window)?;
    Ok(SystemReport {
        config: *cfg,
        subcarriers,
        block_size,
        cp_length,
        symbol_rate: symbol_rate_fraction(subcarriers, cp_length, cfg.alias_factor())?,
        switch_freq: switch_frequency_fraction(cfg),
        delay_count: cfg.delay_count(),
        aclr_db: aclr(&spec)?,
        ripple_db: passband_ripple(&spec)?,
        evm: evm(&spec, 0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alias::block_spectrum;

    fn spectrum(n: usize, a: usize, o: usize) -> AliasedSpectrum {
        let cfg = ModConfig::new(n, a, o).unwrap();
        block_spectrum(&cfg, 0, &Precoder::alternating(a), cfg.default_window()).unwrap()
    }

    #[test]
    fn aclr_examples() {
        assert!((aclr(&spectrum(4, 4, 1)).unwrap() - 19.71).abs() <= 0.05);
        assert!((aclr(&spectrum(4, 64, 4)).unwrap() - 30.34).abs() <= 0.05);
        let cfg = ModConfig::new(2, 1, 1).unwrap();
        let s = block_spectrum(&cfg, 0, &Precoder::identity(1), 4).unwrap();
        assert!(aclr(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn aclr_window_must_cover_adjacent_channel() {
        let cfg = ModConfig::new(4, 4, 1).unwrap();
        let p = Precoder::alternating(4);
        // i_bb_A - A reaches -5; a window of 4 cannot hold it
        let s = block_spectrum(&cfg, 0, &p, 4).unwrap();
        assert!(matches!(aclr(&s), Err(Error::Window(_))));
        let s = block_spectrum(&cfg, 0, &p, 5).unwrap();
        assert!(aclr(&s).is_ok());
        assert!(aclr_with(&s, AclrSide::Upper).is_err());
    }

    #[test]
    fn windowless_aclr_matches_windowed() {
        for (n, a, o) in [(4usize, 4usize, 1usize), (8, 8, 2), (2, 16, 1), (16, 3, 1)] {
            let cfg = ModConfig::new(n, a, o).unwrap();
            let p = Precoder::alternating(a);
            let s = spectrum(n, a, o);
            for side in [AclrSide::Lower, AclrSide::Upper, AclrSide::Worst] {
                let x = aclr_with(&s, side).unwrap();
                let y = aclr_for(&cfg, &p, side).unwrap();
                assert!((x - y).abs() < 1e-12);
            }
            assert!(
                aclr_for(&cfg, &p, AclrSide::Worst).unwrap() <= aclr_for(&cfg, &p, AclrSide::Lower).unwrap()
            );
        }
    }

    #[test]
    fn ripple_examples() {
        assert_eq!(passband_ripple(&spectrum(4, 1, 1)).unwrap(), 0.0);
        let r16 = passband_ripple(&spectrum(16, 4, 1)).unwrap();
        let r4 = passband_ripple(&spectrum(4, 4, 1)).unwrap();
        let r4_64 = passband_ripple(&spectrum(4, 64, 1)).unwrap();
        assert!(r16 < r4);
        assert!((r4 - r4_64).abs() < (r4 - r16).abs());
    }

    #[test]
    fn evm_examples() {
        assert_eq!(evm_from_gains(&[Complex64::new(1.0, 0.0); 4]), 0.0);
        for a in [4usize, 16, 128] {
            assert!(evm(&spectrum(16, a, 1), 0).unwrap() < evm(&spectrum(4, a, 1), 0).unwrap());
        }
        let mut prev = f64::INFINITY;
        for a in [2usize, 4, 8, 16, 32, 64, 128] {
            let e = evm(&spectrum(4, a, 1), 0).unwrap();
            assert!(e <= prev, "A={a}");
            prev = e;
        }
    }

    #[test]
    fn alternating_gains_are_real_after_compensation() {
        for (n, a, o) in [(2usize, 8usize, 1usize), (4, 4, 2), (8, 16, 4)] {
            let cfg = ModConfig::new(n, a, o).unwrap();
            for d in 0..cfg.delay_count() {
                for g in compensated_block_gains(&cfg, d, &Precoder::alternating(a)).unwrap() {
                    assert!(g.im.abs() < 1e-12);
                    assert!(g.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn evm_independent_of_delay() {
        let cfg = ModConfig::new(4, 8, 2).unwrap();
        let s = block_spectrum(&cfg, 0, &Precoder::alternating(8), 64).unwrap();
        let e0 = evm(&s, 0).unwrap();
        for d in 1..cfg.delay_count() {
            assert!((evm(&s, d).unwrap() - e0).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_rate_examples() {
        assert_eq!(symbol_rate_fraction(64, 16, 4).unwrap(), Ratio::new(1, 5));
        assert_eq!(symbol_rate_fraction(1024, 256, 64).unwrap(), Ratio::new(1, 80));
        assert_eq!(symbol_rate_fraction(64, 0, 1).unwrap(), Ratio::new(1, 1));
        assert!((symbol_rate(64, 16, 4, 20e6).unwrap() - 4e6).abs() < 1e-6);
        assert!(symbol_rate(0, 0, 1, 1.0).is_err());
    }

    #[test]
    fn capacity_examples() {
        assert!((normalized_capacity_from_gains(&[1.0; 8], 10.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((normalized_capacity(4, 1, 10.0).unwrap() - 1.0).abs() < 1e-15);
        let c = normalized_capacity(8, 8, 10.0).unwrap();
        assert!((c - 1.0).abs() < 0.01, "{c}");
        assert!(normalized_capacity(2, 2, 10.0).unwrap() < normalized_capacity(8, 2, 10.0).unwrap());
        assert!(normalized_capacity(2, 2, 0.0).is_err());
    }

    #[test]
    fn constraint_examples() {
        let cfg = ModConfig::new(4, 8, 2).unwrap();
        assert!(check_constraints(&cfg, 16).is_empty());

        let cfg = ModConfig::new(3, 2, 2).unwrap();
        let v = check_constraints(&cfg, 3);
        assert!(v.contains(&Violation::MultipleOfOversampling { block: 1, value: 4, oversampling: 2 }));
        assert!(v.contains(&Violation::CommonDivisor { block: 1, value: 4, gcd: 2 }));

        let cfg = ModConfig::new(4, 2, 1).unwrap();
        assert_eq!(check_constraints(&cfg, 6), vec![Violation::BlockSize { block_size: 6, n_states: 4 }]);
    }

    #[test]
    fn even_n_and_o_always_pass() {
        for n in [2usize, 4, 8] {
            for o in [2usize, 4, 8] {
                let cfg = ModConfig::new(n, 64, o).unwrap();
                assert!(check_constraints(&cfg, n).is_empty());
            }
        }
    }

    #[test]
    fn report_rows() {
        let cfg = ModConfig::new(4, 8, 2).unwrap();
        let r = system_report(&cfg, 128, 16, 32).unwrap();
        assert_eq!(r.symbol_rate, Ratio::new(1, 10));
        assert_eq!(r.switch_freq, Ratio::new(1, 4));
        assert_eq!(r.delay_count, 8);
        assert!((r.aclr_db - 22.04).abs() <= 0.05);

        let cfg = ModConfig::new(4, 16, 2).unwrap();
        let r = system_report(&cfg, 256, 16, 64).unwrap();
        assert_eq!(r.switch_freq, Ratio::new(1, 8));
        assert_eq!(r.delay_count, 8);
        assert!((r.aclr_db - 24.66).abs() <= 0.05);

        let cfg = ModConfig::new(4, 1, 1).unwrap();
        let r = system_report(&cfg, 16, 16, 4).unwrap();
        assert_eq!(r.symbol_rate, Ratio::new(16, 20));
        assert_eq!(r.switch_freq, Ratio::new(1, 1));
        assert_eq!(r.delay_count, 4);
        assert_eq!(r.ripple_db, 0.0);

        let cfg = ModConfig::new(3, 2, 2).unwrap();
        assert!(matches!(system_report(&cfg, 6, 3, 0), Err(Error::Constraints(_))));
        let cfg = ModConfig::new(4, 2, 1).unwrap();
        assert!(matches!(system_report(&cfg, 16, 8, 2), Err(Error::Constraints(_))));
        assert!(system_report(&cfg, 15, 8, 0).is_err());
    }
}
