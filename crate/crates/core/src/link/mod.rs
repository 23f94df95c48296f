//! Sample-level OFDM link through the switched modulator.
//!
//! The transmitter repeats a `K_b`-symbol payload over `A` adjacent blocks,
//! each weighted by the delay-extended precoder. The modulator multiplies
//! the band-limited symbol by the switching sequence at `L` times the
//! sample rate. The receiver removes the `f_p/N` offset, band-limits to
//! `B = f_s`, decimates and compensates the known per-block phases.
//!
//! Two modulator models are available. [`ModulationModel::Continuous`]
//! applies the continuous-time switch exactly: it convolves the frame
//! spectrum with the waveform's line spectrum recovered from one sampled
//! period. [`ModulationModel::SampleHold`] multiplies the upsampled samples
//! by the sampled waveform, which is power preserving but carries an
//! `O(1/L^2)` hold distortion.

mod iq;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::alias::Precoder;
use crate::dsp::{bin, fft_in_place, ifft_in_place, power};
use crate::error::{Error, Result};
use crate::metrics::{check_constraints, Violation};
use crate::modwave::{
    harmonic_coef, period_samples, samples_per_switch, sinc, switch_states, waveform_from_states,
    waveform_samples, HarmonicSpectrum, ModConfig,
};

pub use iq::{read_waveform, write_waveform, MAGIC, VERSION};

/// How the switch is applied to the transmit samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModulationModel {
    /// Exact continuous-time switching of the band-limited symbol.
    #[default]
    Continuous,
    /// Elementwise product with the sampled waveform at `L * f_s`.
    SampleHold,
}

/// Non-ideal switch: odd states are attenuated by `amplitude_db` and
/// rotated by an extra `phase_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Impairment {
    pub amplitude_db: f64,
    pub phase_deg: f64,
}

impl Impairment {
    pub fn new(amplitude_db: f64, phase_deg: f64) -> Self {
        Self { amplitude_db, phase_deg }
    }

    pub fn is_ideal(&self) -> bool {
        self.amplitude_db == 0.0 && self.phase_deg == 0.0
    }

    /// State values of an `N`-state switch under this impairment.
    pub fn states(&self, n_states: usize) -> Vec<Complex64> {
        let ideal = switch_states(n_states);
        if self.is_ideal() {
            return ideal;
        }
        let err = Complex64::from_polar(10f64.powf(-self.amplitude_db / 20.0), self.phase_deg.to_radians());
        ideal.into_iter().enumerate().map(|(n, s)| if n % 2 == 1 { s * err } else { s }).collect()
    }
}

/// `count` unit-modulus QPSK symbols from a seeded source.
pub fn qpsk_symbols(count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| {
            let re = if rng.random::<bool>() { h } else { -h };
            let im = if rng.random::<bool>() { h } else { -h };
            Complex64::new(re, im)
        })
        .collect()
}

/// Default upsampling factor, `8 O_tau / gcd(A, O_tau)`, which puts every
/// switching instant on the sample grid.
pub fn default_upsample(cfg: &ModConfig) -> usize {
    let (mut a, mut b) = (cfg.alias_factor(), cfg.oversampling());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    8 * cfg.oversampling() / a
}

/// One OFDM symbol of `K = A K_b` subcarriers with its cyclic prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    config: ModConfig,
    delay: usize,
    precoder: Precoder,
    payload: Vec<Complex64>,
    subcarriers: Vec<Complex64>,
    cp_length: usize,
    samples: Vec<Complex64>,
}

impl OfdmFrame {
    pub fn config(&self) -> &ModConfig {
        &self.config
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn precoder(&self) -> &Precoder {
        &self.precoder
    }

    pub fn payload(&self) -> &[Complex64] {
        &self.payload
    }

    pub fn block_size(&self) -> usize {
        self.payload.len()
    }

    pub fn subcarrier_count(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn cp_length(&self) -> usize {
        self.cp_length
    }

    /// Subcarrier symbols in frequency order, index 0 at `-K/2`.
    pub fn subcarriers(&self) -> &[Complex64] {
        &self.subcarriers
    }

    /// Subcarriers of block `a`.
    pub fn block(&self, a: usize) -> &[Complex64] {
        let kb = self.block_size();
        &self.subcarriers[a * kb..(a + 1) * kb]
    }

    /// Time samples at `f_s`, cyclic prefix first.
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Lowest subcarrier index, `-floor(K/2)`.
    fn first_index(&self) -> i64 {
        -((self.subcarrier_count() / 2) as i64)
    }

    /// Line spacing of the switching sequence in subcarriers, `K_b / N`.
    pub fn line_spacing(&self) -> usize {
        self.block_size() / self.config.n_states()
    }

    /// Occupied band after modulation as `[lo, hi)` in units of `f_s`.
    pub fn modulated_band(&self) -> (f64, f64) {
        let k = self.subcarrier_count() as f64;
        let lo = self.first_index() as f64 + self.line_spacing() as f64;
        (lo / k, (lo + k) / k)
    }

    /// Frame spectrum placed on a DFT grid of `len` bins.
    fn spectrum_on(&self, len: usize) -> Vec<Complex64> {
        let mut grid = vec![Complex64::new(0.0, 0.0); len];
        let lo = self.first_index();
        for (idx, s) in self.subcarriers.iter().enumerate() {
            grid[bin(lo + idx as i64, len)] = *s;
        }
        grid
    }
}

/// Builds one frame: block `a` carries `v(a, d) * payload`.
pub fn build_frame(
    payload: &[Complex64],
    cfg: &ModConfig,
    d: usize,
    p: &Precoder,
    cp_length: usize,
) -> Result<OfdmFrame> {
    cfg.check_delay(d)?;
    let kb = payload.len();
    let mut violations = check_constraints(cfg, kb);
    if !cp_length.is_multiple_of(cfg.n_states()) {
        violations.push(Violation::CyclicPrefix { cp_length, n_states: cfg.n_states() });
    }
    if !violations.is_empty() {
        return Err(Error::Constraints(violations));
    }
    if p.len() != cfg.alias_factor() {
        return Err(Error::Length(format!("precoder has {} blocks, A = {}", p.len(), cfg.alias_factor())));
    }
    let k = kb * cfg.alias_factor();
    if cp_length > k {
        return Err(Error::Length(format!("cyclic prefix {cp_length} longer than symbol {k}")));
    }
    let mut subcarriers = Vec::with_capacity(k);
    for a in 0..cfg.alias_factor() {
        let v = p.extended(a, d, cfg.oversampling())?;
        subcarriers.extend(payload.iter().map(|s| v * s));
    }
    let mut frame = OfdmFrame {
        config: *cfg,
        delay: d,
        precoder: p.clone(),
        payload: payload.to_vec(),
        subcarriers,
        cp_length,
        samples: Vec::new(),
    };
    let mut body = frame.spectrum_on(k);
    ifft_in_place(&mut body);
    let scale = 1.0 / k as f64;
    body.iter_mut().for_each(|x| *x *= scale);
    frame.samples = with_cyclic_prefix(&body, cp_length);
    Ok(frame)
}

fn with_cyclic_prefix(body: &[Complex64], cp: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(body.len() + cp);
    out.extend_from_slice(&body[body.len() - cp..]);
    out.extend_from_slice(body);
    out
}

/// Plain OFDM demodulation at `f_s`: drop the prefix and transform.
/// Returns subcarriers in frequency order.
pub fn demodulate_frame(
    samples: &[Complex64],
    subcarriers: usize,
    cp_length: usize,
) -> Result<Vec<Complex64>> {
    if samples.len() != subcarriers + cp_length {
        return Err(Error::Length(format!(
            "{} samples for K = {subcarriers}, N_cp = {cp_length}",
            samples.len()
        )));
    }
    let mut buf = samples[cp_length..].to_vec();
    fft_in_place(&mut buf);
    let lo = -((subcarriers / 2) as i64);
    Ok((0..subcarriers).map(|idx| buf[bin(lo + idx as i64, subcarriers)]).collect())
}

/// Band-limited interpolation of the frame body to `L * f_s`, without prefix.
pub fn upsample_frame(frame: &OfdmFrame, upsample: usize) -> Vec<Complex64> {
    let k = frame.subcarrier_count();
    let mut y = frame.spectrum_on(upsample * k);
    ifft_in_place(&mut y);
    let scale = 1.0 / k as f64;
    y.iter_mut().for_each(|x| *x *= scale);
    y
}

/// Direct DFT of one period, `X[k] = sum_n x[n] exp(-j 2 pi k n / P)`.
pub fn periodic_dft(x: &[Complex64]) -> Vec<Complex64> {
    let len = x.len();
    let twiddle: Vec<Complex64> =
        (0..len).map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / len as f64)).collect();
    (0..len).map(|k| x.iter().enumerate().map(|(n, v)| v * twiddle[(k * n) % len]).sum()).collect()
}

/// Fourier-series line `k` of a piecewise-constant periodic waveform from
/// the DFT of its left-edge samples. The hold kernel makes this exact.
pub fn line_from_dft(dft: &[Complex64], k: i64) -> Complex64 {
    let len = dft.len() as f64;
    let x = PI * k as f64 / len;
    dft[bin(k, dft.len())] / len * sinc(x) * Complex64::from_polar(1.0, -x)
}

/// Harmonic coefficients `alpha(i, d)`, `i in [-window, window]`, measured
/// from one sampled waveform period at `L * f_s`.
pub fn dft_oracle(cfg: &ModConfig, d: usize, upsample: usize, window: i64) -> Result<HarmonicSpectrum> {
    let dft = waveform_dft(cfg, d, upsample)?;
    let n = cfg.n_states() as i64;
    Ok(HarmonicSpectrum::from_fn(-window, window, |i| line_from_dft(&dft, 1 + i * n)))
}

/// Direct DFT of one waveform period at `L * f_s`.
pub fn waveform_dft(cfg: &ModConfig, d: usize, upsample: usize) -> Result<Vec<Complex64>> {
    let period = period_samples(cfg, upsample);
    samples_per_switch(cfg, upsample)?;
    Ok(periodic_dft(&waveform_samples(cfg, d, period, upsample)?))
}

/// Switch applied to the frame body at `L * f_s`, cyclic prefix included.
pub fn modulate_time(
    frame: &OfdmFrame,
    upsample: usize,
    model: ModulationModel,
    impairment: &Impairment,
) -> Result<Vec<Complex64>> {
    let cfg = frame.config;
    samples_per_switch(&cfg, upsample)?;
    let states = impairment.states(cfg.n_states());
    let len = upsample * frame.subcarrier_count();
    let body = match model {
        ModulationModel::SampleHold => {
            let x = upsample_frame(frame, upsample);
            let w = waveform_from_states(&cfg, frame.delay, len, upsample, &states)?;
            x.iter().zip(&w).map(|(a, b)| a * b).collect()
        }
        ModulationModel::Continuous => continuous_body(frame, upsample, &states)?,
    };
    Ok(with_cyclic_prefix(&body, upsample * frame.cp_length))
}

fn continuous_body(frame: &OfdmFrame, upsample: usize, states: &[Complex64]) -> Result<Vec<Complex64>> {
    let cfg = frame.config;
    let period = period_samples(&cfg, upsample);
    let mut dft = waveform_from_states(&cfg, frame.delay, period, upsample, states)?;
    fft_in_place(&mut dft);

    let k = frame.subcarrier_count() as i64;
    let len = upsample as i64 * k;
    let (q_lo, q_hi) = (-len / 2, len - len / 2);
    let r = frame.line_spacing() as i64;
    let lo = frame.first_index();
    let mut y = vec![Complex64::new(0.0, 0.0); len as usize];
    // line k moves subcarrier p to p + r k; keep only lines that land on the grid
    let k_min = (q_lo - (lo + k - 1)).div_euclid(r);
    let k_max = (q_hi - 1 - lo).div_euclid(r) + 1;
    for line in k_min..=k_max {
        let c = line_from_dft(&dft, line);
        let shift = r * line;
        for (idx, s) in frame.subcarriers.iter().enumerate() {
            let q = lo + idx as i64 + shift;
            if q >= q_lo && q < q_hi {
                y[bin(q, len as usize)] += c * s;
            }
        }
    }
    ifft_in_place(&mut y);
    let scale = 1.0 / k as f64;
    y.iter_mut().for_each(|x| *x *= scale);
    Ok(y)
}

/// Adds complex white Gaussian noise at `snr_db` relative to the mean
/// sample power.
pub fn add_noise(samples: &mut [Complex64], snr_db: f64, seed: u64) -> Result<()> {
    if samples.is_empty() {
        return Ok(());
    }
    let p = power(samples) / samples.len() as f64;
    let sigma = (p / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise level for SNR {snr_db} dB: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in samples.iter_mut() {
        *s += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(())
}

/// Receiver switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiverOptions {
    /// Divide each block by its measured gain magnitude.
    pub equalize_amplitude: bool,
    /// Undo the per-block precoder sign/phase.
    pub revert_precoder: bool,
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        Self { equalize_amplitude: false, revert_precoder: true }
    }
}

/// Outcome of one received frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    /// Complex gain of each block relative to the payload, least squares
    /// against the transmitted symbols. Ideally `alpha_A(b - f, d)`.
    pub per_block_gain: Vec<Complex64>,
    /// `sqrt(sum |s_hat - s|^2 / sum |s|^2)` over all subcarriers.
    pub measured_evm: f64,
    /// Normalized transmit spectrum, empty unless requested.
    pub measured_spectrum: Vec<f64>,
    /// Compensated subcarrier symbols in frequency order.
    pub demodulated: Vec<Complex64>,
    /// Blocks whose symbols come out negated.
    pub flipped_blocks: usize,
}

/// Demodulates `samples` (rate `L * f_s`, frame-aligned) against the
/// transmitted `frame`.
///
/// Mixing by `-f_p/N`, the brick-wall filter to `B` and the decimation are
/// done together by reading the `K` in-band bins of the length-`L K`
/// transform shifted by the line spacing.
pub fn receive(
    samples: &[Complex64],
    frame: &OfdmFrame,
    upsample: usize,
    opts: ReceiverOptions,
) -> Result<LinkResult> {
    let cfg = frame.config;
    let k = frame.subcarrier_count();
    let cp = upsample * frame.cp_length;
    let len = upsample * k;
    if samples.len() != len + cp {
        return Err(Error::Length(format!(
            "{} samples, expected L (K + N_cp) = {}",
            samples.len(),
            len + cp
        )));
    }
    let mut spec = samples[cp..].to_vec();
    fft_in_place(&mut spec);
    let r = frame.line_spacing() as i64;
    let lo = frame.first_index();
    let scale = 1.0 / upsample as f64;
    let z: Vec<Complex64> = (0..k as i64).map(|idx| spec[bin(lo + idx + r, len)] * scale).collect();

    let kb = frame.block_size();
    let payload = &frame.payload;
    let ref_power = power(payload);
    let a0 = harmonic_coef(0, cfg.n_states());
    let f = cfg.center_offset();
    let mut gains = Vec::with_capacity(cfg.alias_factor());
    let mut demod = Vec::with_capacity(k);
    let mut err = 0.0;
    let mut flipped = 0;
    for b in 0..cfg.alias_factor() {
        let zb = &z[b * kb..(b + 1) * kb];
        let g: Complex64 = zb.iter().zip(payload).map(|(y, s)| y * s.conj()).sum::<Complex64>() / ref_power;
        gains.push(g);
        let mut known = crate::alias::aliased_delay_rotation(b as i64 - f, frame.delay, &cfg)? * a0;
        if opts.revert_precoder {
            known *= frame.precoder.base()[b];
        }
        if opts.equalize_amplitude {
            known *= (g / known).norm();
        }
        let start = demod.len();
        demod.extend(zb.iter().map(|y| y / known));
        let block = &demod[start..];
        err += block.iter().zip(payload).map(|(x, s)| (x - s).norm_sqr()).sum::<f64>();
        let corr: Complex64 = block.iter().zip(payload).map(|(x, s)| x * s.conj()).sum();
        if corr.re < 0.0 {
            flipped += 1;
        }
    }
    Ok(LinkResult {
        per_block_gain: gains,
        measured_evm: (err / (ref_power * cfg.alias_factor() as f64)).sqrt(),
        measured_spectrum: Vec::new(),
        demodulated: demod,
        flipped_blocks: flipped,
    })
}

/// Averaged periodogram over non-overlapping rectangular windows of
/// `resolution_bins` samples, centered (DC in the middle) and scaled to a
/// peak of 1. Trailing samples that do not fill a window are ignored.
pub fn measure_spectrum(samples: &[Complex64], resolution_bins: usize) -> Result<Vec<f64>> {
    if resolution_bins < 256 {
        return Err(Error::InvalidConfig(format!("resolution of {resolution_bins} bins is below 256")));
    }
    let segments = samples.len() / resolution_bins;
    if segments == 0 {
        return Err(Error::Length(format!(
            "{} samples cannot fill one {resolution_bins}-bin window",
            samples.len()
        )));
    }
    let mut acc = vec![0.0; resolution_bins];
    for seg in samples.chunks_exact(resolution_bins) {
        let mut buf = seg.to_vec();
        fft_in_place(&mut buf);
        for (a, x) in acc.iter_mut().zip(&buf) {
            *a += x.norm_sqr();
        }
    }
    acc.rotate_right(resolution_bins / 2);
    let peak = acc.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        acc.iter_mut().for_each(|a| *a /= peak);
    }
    Ok(acc)
}

/// Center frequency of each bin of a [`measure_spectrum`] result, in units
/// of the sample rate of the measured signal.
pub fn spectrum_frequencies(resolution_bins: usize) -> Vec<f64> {
    let half = (resolution_bins / 2) as f64;
    (0..resolution_bins).map(|j| (j as f64 - half) / resolution_bins as f64).collect()
}

/// Out-of-band summary of a normalized spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandLevels {
    /// Strongest out-of-band bin, dB relative to the peak.
    pub worst_db: f64,
    /// Mean out-of-band power, dB relative to the peak.
    pub shelf_db: f64,
}

/// Sideband levels of `spectrum` (from [`measure_spectrum`] on samples at
/// `L * f_s`) outside the modulated band of `frame`, skipping `guard`
/// (in units of `f_s`) past each band edge.
pub fn sideband_levels(
    spectrum: &[f64],
    frame: &OfdmFrame,
    upsample: usize,
    guard: f64,
) -> Result<SidebandLevels> {
    let (lo, hi) = frame.modulated_band();
    let mut worst = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (f, p) in spectrum_frequencies(spectrum.len()).iter().zip(spectrum) {
        let f = f * upsample as f64;
        if f < lo - guard || f >= hi + guard {
            worst = worst.max(*p);
            sum += p;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Window("no bins outside the guarded band".into()));
    }
    Ok(SidebandLevels { worst_db: 10.0 * worst.log10(), shelf_db: 10.0 * (sum / count as f64).log10() })
}

/// Parameters of one end-to-end run.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub config: ModConfig,
    pub delay: usize,
    pub block_size: usize,
    pub cp_length: usize,
    pub upsample: usize,
    pub precoder: Precoder,
    pub model: ModulationModel,
    pub impairment: Impairment,
    /// Additive noise level; `None` is noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub receiver: ReceiverOptions,
    /// Spectrum resolution; `None` skips the measurement.
    pub spectrum_bins: Option<usize>,
}

impl LinkParams {
    /// Noiseless ideal run with the alternating precoder and default `L`.
    pub fn new(config: ModConfig, block_size: usize) -> Self {
        Self {
            config,
            delay: 0,
            block_size,
            cp_length: 0,
            upsample: default_upsample(&config),
            precoder: Precoder::alternating(config.alias_factor()),
            model: ModulationModel::default(),
            impairment: Impairment::default(),
            snr_db: None,
            seed: 0,
            receiver: ReceiverOptions::default(),
            spectrum_bins: None,
        }
    }
}

/// Transmit samples of one run, before noise.
pub fn transmit(params: &LinkParams) -> Result<(OfdmFrame, Vec<Complex64>)> {
    let payload = qpsk_symbols(params.block_size, params.seed);
    let frame = build_frame(&payload, &params.config, params.delay, &params.precoder, params.cp_length)?;
    let tx = modulate_time(&frame, params.upsample, params.model, &params.impairment)?;
    Ok((frame, tx))
}

/// Seeded end-to-end run: payload, frame, modulator, optional noise and
/// spectrum, receiver.
pub fn simulate_link(params: &LinkParams) -> Result<LinkResult> {
    let (frame, mut tx) = transmit(params)?;
    let spectrum = match params.spectrum_bins {
        Some(bins) => measure_spectrum(&tx, bins)?,
        None => Vec::new(),
    };
    if let Some(snr) = params.snr_db {
        add_noise(&mut tx, snr, params.seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    }
    let mut res = receive(&tx, &frame, params.upsample, params.receiver)?;
    res.measured_spectrum = spectrum;
    Ok(res)
}
