//! Uniform linear array driven by cyclically delayed switching sequences.
//!
//! Element `m` runs the common sequence delayed by `m*d` switch periods, so
//! harmonic `i` picks up a progressive phase and the replica at that
//! harmonic is steered off broadside.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::alias::frac_shift;
use crate::error::{Error, Result};
use crate::modwave::{harmonic_coef, ModConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `M` isotropic elements spaced `d_lambda` carrier wavelengths apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    elements: usize,
    spacing: f64,
    carrier: f64,
}

impl ArrayConfig {
    pub fn new(elements: usize, spacing: f64, carrier: f64) -> Result<Self> {
        if elements == 0 {
            return Err(Error::InvalidConfig("array needs at least one element".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidConfig(format!("element spacing {spacing} must be positive")));
        }
        if !(carrier > 0.0 && carrier.is_finite()) {
            return Err(Error::InvalidConfig(format!("carrier {carrier} must be positive")));
        }
        Ok(Self { elements, spacing, carrier })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    /// Spacing in carrier wavelengths.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// Physical spacing in meters.
    pub fn spacing_m(&self) -> f64 {
        self.spacing * self.wavelength()
    }
}

/// Which propagation phase the array factor uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AfForm {
    /// Propagation phase at the carrier only.
    #[default]
    Simplified,
    /// Propagation phase at the actual harmonic frequency.
    Full,
}

/// Steering direction of a harmonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamDirection {
    /// Angle from broadside in radians.
    Visible(f64),
    /// `|sin(theta)| > 1`: no beam in visible space.
    Invisible,
}

impl BeamDirection {
    pub fn degrees(&self) -> Option<f64> {
        match self {
            BeamDirection::Visible(t) => Some(t.to_degrees()),
            BeamDirection::Invisible => None,
        }
    }
}

/// Progressive steering term `d (1 + (i+f)N) / D` in cycles per element.
fn steering_cycles(i: i64, d: usize, cfg: &ModConfig) -> f64 {
    let k = 1 + (i + cfg.center_offset()) * cfg.n_states() as i64;
    d as f64 * k as f64 / cfg.delay_count() as f64
}

/// Phase applied by element `m` to harmonic `i` under per-element delay step `d`.
pub fn element_phase(m: usize, i: i64, d: usize, cfg: &ModConfig) -> f64 {
    -2.0 * PI * m as f64 * steering_cycles(i, d, cfg)
}

/// Array factor of harmonic `i` over `theta` (radians from broadside),
/// normalized by `1/sqrt(M)` and weighted by `alpha(i)`.
pub fn array_factor(
    theta: &[f64],
    i: i64,
    d: usize,
    acfg: &ArrayConfig,
    cfg: &ModConfig,
    form: AfForm,
) -> Vec<Complex64> {
    let alpha = harmonic_coef(i, cfg.n_states());
    let steer = steering_cycles(i, d, cfg);
    let scale = match form {
        AfForm::Simplified => 1.0,
        AfForm::Full => (acfg.carrier + (frac_shift(cfg) + i as f64) * cfg.pulse_frequency()) / acfg.carrier,
    };
    let norm = alpha / (acfg.elements as f64).sqrt();
    theta
        .iter()
        .map(|t| {
            let per_element = steer + scale * acfg.spacing * t.sin();
            // reduce before multiplying by m to keep the phase accurate for large arrays
            let step = per_element.rem_euclid(1.0);
            let sum: Complex64 = (0..acfg.elements)
                .map(|m| Complex64::from_polar(1.0, -2.0 * PI * (m as f64 * step).fract()))
                .sum();
            norm * sum
        })
        .collect()
}

/// Closed-form steering direction of harmonic `i`,
/// `-asin((d/d_lambda)(1/D + (i+f)/O_tau))`.
///
/// Whole cycles of the progressive phase do not move the beam, so the
/// steering term is first wrapped into `[-1/2, 1/2)` cycles.
pub fn beam_angle(i: i64, d: usize, cfg: &ModConfig, spacing: f64) -> BeamDirection {
    let cycles = steering_cycles(i, d, cfg);
    let arg = (cycles - (cycles + 0.5).floor()) / spacing;
    if arg.abs() > 1.0 {
        BeamDirection::Invisible
    } else {
        BeamDirection::Visible(-arg.asin())
    }
}

/// Uniform grid of `points` angles spanning `[-90, 90]` degrees, in radians.
pub fn angle_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| (-90.0 + 180.0 * k as f64 / (points - 1) as f64).to_radians()).collect(),
    }
}

/// Angle of the largest `|AF|` on a grid. Ties resolve to the first.
pub fn argmax_angle(theta: &[f64], af: &[Complex64]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (t, v) in theta.iter().zip(af) {
        let p = v.norm_sqr();
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((*t, p));
        }
    }
    best.map(|(t, _)| t)
}

/// `sum |AF|^2 cos(theta) dtheta` over a uniform grid, i.e. the radiated
/// power of a linear array up to a constant.
pub fn radiated_power(theta: &[f64], af: &[Complex64]) -> f64 {
    if theta.len() < 2 {
        return 0.0;
    }
    let step = (theta[theta.len() - 1] - theta[0]) / (theta.len() - 1) as f64;
    theta.iter().zip(af).map(|(t, v)| v.norm_sqr() * t.cos()).sum::<f64>() * step
}
