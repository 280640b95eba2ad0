//! Closed-form asymptotic energies of the four cooling protocols, their
//! large-Ω expansions and the resulting protocol choice.
//!
//! All energies are in units of ħω.

use thiserror::Error;

use crate::moments::is_physical;
use crate::protocol::{effective_gamma, ProtocolKind, ProtocolParams};

/// γ/λ above which the two-layer first-order correction is negative.
pub const TWO_LAYER_THRESHOLD: f64 = 2.0 * std::f64::consts::SQRT_2;
/// γ/λ above which the three-layer correction beats the two-layer one.
pub const THREE_OVER_TWO_THRESHOLD: f64 = 4.0;
/// γ/λ above which the three-layer correction is negative, `2√(8/3)`.
pub const THREE_LAYER_THRESHOLD: f64 = 3.265_986_323_710_904;

/// Relative size below which a denominator counts as vanishing.
const DENOMINATOR_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("{name} must be strictly positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyNote {
    Physical,
    Unphysical,
    /// The closed form has a vanishing denominator at this point.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyResult {
    /// `NaN` when `note` is `NotApplicable`.
    pub energy_over_hw: f64,
    pub physical: bool,
    pub note: EnergyNote,
}

impl EnergyResult {
    pub fn from_energy(energy: f64) -> Self {
        if !energy.is_finite() {
            return Self::not_applicable();
        }
        let physical = is_physical(energy);
        Self {
            energy_over_hw: energy,
            physical,
            note: if physical {
                EnergyNote::Physical
            } else {
                EnergyNote::Unphysical
            },
        }
    }

    pub fn not_applicable() -> Self {
        Self {
            energy_over_hw: f64::NAN,
            physical: false,
            note: EnergyNote::NotApplicable,
        }
    }

    pub fn is_applicable(&self) -> bool {
        self.note != EnergyNote::NotApplicable
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, AnalyticsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticsError::NonPositive { name, value })
    }
}

fn single_layer_value(l: f64, g: f64) -> f64 {
    0.5 * (l / g + g / (4.0 * l))
}

/// `½(λ/γ + γ/4λ)`; minimal (= ½) at γ = 2λ.
pub fn energy_1layer(lambda: f64, gamma: f64) -> Result<EnergyResult, AnalyticsError> {
    let l = positive("lambda", lambda)?;
    let g = positive("gamma", gamma)?;
    Ok(EnergyResult::from_energy(single_layer_value(l, g)))
}

/// Feedback on the second stage of a (γ, Ω) low-pass cascade.
pub fn energy_2layer(
    lambda: f64,
    gamma: f64,
    big_omega: f64,
    omega: f64,
) -> Result<EnergyResult, AnalyticsError> {
    let l = positive("lambda", lambda)?;
    let g = positive("gamma", gamma)?;
    let o = positive("Omega", big_omega)?;
    let w = positive("omega", omega)?;
    let gt = effective_gamma(g, o);
    let s = o + g;
    let e = 0.5 * (l / gt + gt / (4.0 * l) + l / s + l * w * w / (gt * s * s));
    Ok(EnergyResult::from_energy(e))
}

/// Feedback on the third stage of a (γ, Ω, Ω) low-pass cascade.
pub fn energy_3layer(
    lambda: f64,
    gamma: f64,
    big_omega: f64,
    omega: f64,
) -> Result<EnergyResult, AnalyticsError> {
    let l = positive("lambda", lambda)?;
    let g = positive("gamma", gamma)?;
    let o = positive("Omega", big_omega)?;
    let w = positive("omega", omega)?;
    let (l2, w2, o2) = (l * l, w * w, o * o);
    let (w4, o3, o4) = (w2 * w2, o2 * o, o2 * o2);
    let (o5, o6, o7) = (o4 * o, o4 * o2, o4 * o3);
    let g2 = g * g;
    let (g3, g4) = (g2 * g, g2 * g2);
    let g5 = g4 * g;

    let numer = 8.0 * l2 * o3 * (w2 + o2).powi(2)
        + 8.0 * g * l2 * o2 * (3.0 * w4 + 7.0 * w2 * o2 + 8.0 * o4)
        + g5 * (o4 + 4.0 * l2 * (w2 + 5.0 * o2))
        + 2.0 * g4 * (2.0 * o5 + l2 * (9.0 * w2 * o + 48.0 * o3))
        + g3 * (5.0 * o6 + 4.0 * l2 * (w4 + 10.0 * w2 * o2 + 45.0 * o4))
        + 2.0 * g2 * (o7 + l2 * (9.0 * w4 * o + 31.0 * w2 * o3 + 80.0 * o5));

    let terms = [
        4.0 * g4 * o,
        -4.0 * w2 * o3,
        4.0 * o5,
        -2.0 * g3 * (w2 - 8.0 * o2),
        g2 * (-9.0 * w2 * o + 24.0 * o3),
        4.0 * g * (-3.0 * w2 * o2 + 4.0 * o4),
    ];
    let bracket: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    if bracket.abs() <= DENOMINATOR_REL_TOL * scale {
        return Ok(EnergyResult::not_applicable());
    }
    let denom = 2.0 * g * l * o2 * bracket;
    Ok(EnergyResult::from_energy(0.5 * numer / denom))
}

/// Feedback on the in-phase band-pass quadrature centred at Ω.
///
/// `Ω = 0` is accepted and reduces to the single-layer result.
pub fn energy_bandpass(
    lambda: f64,
    gamma: f64,
    big_omega: f64,
    omega: f64,
) -> Result<EnergyResult, AnalyticsError> {
    let l = positive("lambda", lambda)?;
    let g = positive("gamma", gamma)?;
    let w = positive("omega", omega)?;
    if !(big_omega >= 0.0 && big_omega.is_finite()) {
        return Err(AnalyticsError::Negative {
            name: "Omega",
            value: big_omega,
        });
    }
    let (g2, w2, o2) = (g * g, w * w, big_omega * big_omega);
    let d = 4.0 * g2 + w2 - 4.0 * o2;
    let d_scale = 4.0 * g2 + w2 + 4.0 * o2;
    if d.abs() <= DENOMINATOR_REL_TOL * d_scale {
        return Ok(EnergyResult::not_applicable());
    }
    let e1 = single_layer_value(l, g);
    let first = e1 * (1.0 + (o2 / w2) * (4.0 * g2 - w2 + 4.0 * o2) / d);
    let second = 0.5 * g * o2 * (3.0 * w2 - 4.0 * g2 - 4.0 * o2) / (4.0 * l * w2 * d);
    Ok(EnergyResult::from_energy(first + second))
}

/// Closed-form energy for any protocol.
pub fn energy(p: &ProtocolParams) -> Result<EnergyResult, AnalyticsError> {
    let o = p.big_omega_or_zero();
    match p.kind {
        ProtocolKind::LowPass1 => energy_1layer(p.lambda, p.gamma),
        ProtocolKind::LowPass2 => energy_2layer(p.lambda, p.gamma, o, p.omega),
        ProtocolKind::LowPass3 => energy_3layer(p.lambda, p.gamma, o, p.omega),
        ProtocolKind::BandPass => energy_bandpass(p.lambda, p.gamma, o, p.omega),
    }
}

/// First-order expansion of the two-layer energy in 1/Ω.
pub fn energy_2layer_large_omega(lambda: f64, gamma: f64, big_omega: f64) -> f64 {
    single_layer_value(lambda, gamma) + (lambda - gamma * gamma / (8.0 * lambda)) / big_omega
}

/// First-order expansion of the three-layer energy in 1/Ω.
pub fn energy_3layer_large_omega(lambda: f64, gamma: f64, big_omega: f64) -> f64 {
    single_layer_value(lambda, gamma)
        + (2.0 * lambda - 3.0 * gamma * gamma / (16.0 * lambda)) / big_omega
}

/// Best low-pass protocol when the extra bandwidth Ω is large.
pub fn best_protocol_large_omega(gamma_over_lambda: f64) -> ProtocolKind {
    if gamma_over_lambda <= TWO_LAYER_THRESHOLD {
        ProtocolKind::LowPass1
    } else if gamma_over_lambda <= THREE_OVER_TWO_THRESHOLD {
        ProtocolKind::LowPass2
    } else {
        ProtocolKind::LowPass3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_values() {
        assert_eq!(energy_1layer(1.0, 2.0).unwrap().energy_over_hw, 0.5);
        assert_eq!(energy_1layer(1.0, 1.0).unwrap().energy_over_hw, 0.625);
        assert!(energy_1layer(0.0, 1.0).is_err());
        assert!(energy_1layer(1.0, f64::NAN).is_err());
    }

    #[test]
    fn single_layer_minimum_at_twice_lambda() {
        let l = 1.7;
        let e0 = energy_1layer(l, 2.0 * l).unwrap().energy_over_hw;
        for f in [0.9, 0.99, 1.01, 1.1] {
            assert!(energy_1layer(l, 2.0 * l * f).unwrap().energy_over_hw > e0);
        }
    }

    #[test]
    fn two_layer_reference_point() {
        let r = energy_2layer(1.0, 2.0, 2.0, 1.0).unwrap();
        assert!((r.energy_over_hw - 0.78125).abs() < 1e-15);
        assert_eq!(r.note, EnergyNote::Physical);
        let far = energy_2layer(1.0, 2.0, 1e9, 1.0).unwrap().energy_over_hw;
        assert!((far - 0.5).abs() < 1e-8);
    }

    #[test]
    fn three_layer_limits() {
        let e = energy_3layer(1.0, 2.0, 1e6, 1.0).unwrap().energy_over_hw;
        assert!((e - 0.5).abs() < 1e-5);
        let e = energy_3layer(1.0, 4.0, 100.0, 1.0).unwrap().energy_over_hw;
        // second-order remainder is ≈ 12/Ω² at this point
        assert!((e - 0.615).abs() < 20.0 / (100.0 * 100.0));
    }

    #[test]
    fn bandpass_values() {
        let r = energy_bandpass(1.0, 1.0, 0.5, 1.0).unwrap();
        assert!((r.energy_over_hw - 0.765625).abs() < 1e-15);
        assert!(r.physical);
        let r = energy_bandpass(1.0, 1.0, 2.0, 1.0).unwrap();
        assert!(r.energy_over_hw < 0.0);
        assert_eq!(r.note, EnergyNote::Unphysical);
        let e0 = energy_bandpass(1.3, 0.7, 0.0, 2.0).unwrap().energy_over_hw;
        assert_eq!(e0, energy_1layer(1.3, 0.7).unwrap().energy_over_hw);
    }

    #[test]
    fn bandpass_resonance_is_not_applicable() {
        // 4γ² + ω² = 4Ω² at γ = 1, ω = 2, Ω = √2.
        let r = energy_bandpass(1.0, 1.0, 2.0_f64.sqrt(), 2.0).unwrap();
        assert_eq!(r.note, EnergyNote::NotApplicable);
        assert!(r.energy_over_hw.is_nan());
        assert!(!r.physical);
        assert!(energy_bandpass(1.0, 1.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn large_omega_forms() {
        assert!((energy_2layer_large_omega(1.0, 4.0, 100.0) - 0.615).abs() < 1e-15);
        assert!((energy_3layer_large_omega(1.0, 4.0, 100.0) - 0.615).abs() < 1e-15);
        let g = TWO_LAYER_THRESHOLD;
        assert!((energy_2layer_large_omega(1.0, g, 1.0) - single_layer_value(1.0, g)).abs() < 1e-12);
        let g = THREE_LAYER_THRESHOLD;
        assert!((energy_3layer_large_omega(1.0, g, 1.0) - single_layer_value(1.0, g)).abs() < 1e-12);
        assert!((THREE_LAYER_THRESHOLD - 2.0 * (8.0_f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decision_table() {
        assert_eq!(best_protocol_large_omega(2.0), ProtocolKind::LowPass1);
        assert_eq!(best_protocol_large_omega(3.0), ProtocolKind::LowPass2);
        assert_eq!(best_protocol_large_omega(5.0), ProtocolKind::LowPass3);
        assert_eq!(best_protocol_large_omega(4.0), ProtocolKind::LowPass2);
    }
}
