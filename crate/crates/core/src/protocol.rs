//! Cooling protocols for the measured harmonic oscillator.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::filters::{self, FilterError, FilterModel};

/// Which filtered signal the shifted-trap feedback follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    /// One low-pass stage, feedback on `D₁`.
    LowPass1,
    /// Two stages (γ, Ω), feedback on `D₂`.
    LowPass2,
    /// Three stages (γ, Ω, Ω), feedback on `D₃`.
    LowPass3,
    /// Band-pass quadratures (γ, Ω), feedback on `E₁`.
    BandPass,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::LowPass1,
        ProtocolKind::LowPass2,
        ProtocolKind::LowPass3,
        ProtocolKind::BandPass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::LowPass1 => "lowpass1",
            ProtocolKind::LowPass2 => "lowpass2",
            ProtocolKind::LowPass3 => "lowpass3",
            ProtocolKind::BandPass => "bandpass",
        }
    }

    /// Dimension of the filter realization per measured channel.
    pub fn filter_dim(self) -> usize {
        match self {
            ProtocolKind::LowPass1 => 1,
            ProtocolKind::LowPass2 | ProtocolKind::BandPass => 2,
            ProtocolKind::LowPass3 => 3,
        }
    }

    /// Index of the filter component the trap centre follows.
    pub fn tap(self) -> usize {
        match self {
            ProtocolKind::LowPass1 | ProtocolKind::BandPass => 0,
            ProtocolKind::LowPass2 => 1,
            ProtocolKind::LowPass3 => 2,
        }
    }

    /// Whether the protocol needs the second frequency Ω.
    pub fn needs_big_omega(self) -> bool {
        !matches!(self, ProtocolKind::LowPass1)
    }

    /// Tie-break order: fewer filter components first, low-pass before band-pass.
    pub(crate) fn simplicity_rank(self) -> (usize, u8) {
        (self.filter_dim(), u8::from(self == ProtocolKind::BandPass))
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown protocol '{0}' (expected lowpass1, lowpass2, lowpass3 or bandpass)")]
pub struct UnknownProtocol(pub String);

impl FromStr for ProtocolKind {
    type Err = UnknownProtocol;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lowpass1" | "lp1" => Ok(ProtocolKind::LowPass1),
            "lowpass2" | "lp2" => Ok(ProtocolKind::LowPass2),
            "lowpass3" | "lp3" => Ok(ProtocolKind::LowPass3),
            "bandpass" | "bp" => Ok(ProtocolKind::BandPass),
            _ => Err(UnknownProtocol(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be strictly positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("protocol {0} requires Omega")]
    MissingBigOmega(ProtocolKind),
}

/// Physical parameters of a cooling protocol, all rates in the same time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Measurement strength λ.
    pub lambda: f64,
    /// Oscillator frequency ω.
    pub omega: f64,
    /// First-stage bandwidth γ.
    pub gamma: f64,
    /// Second bandwidth (low-pass) or centre frequency (band-pass) Ω.
    pub big_omega: Option<f64>,
    pub kind: ProtocolKind,
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ParamError::NonPositive { name, value })
    }
}

impl ProtocolParams {
    pub fn new(
        kind: ProtocolKind,
        lambda: f64,
        omega: f64,
        gamma: f64,
        big_omega: Option<f64>,
    ) -> Result<Self, ParamError> {
        positive("lambda", lambda)?;
        positive("omega", omega)?;
        positive("gamma", gamma)?;
        if let Some(w) = big_omega {
            positive("Omega", w)?;
        } else if kind.needs_big_omega() {
            return Err(ParamError::MissingBigOmega(kind));
        }
        Ok(Self {
            lambda,
            omega,
            gamma,
            big_omega,
            kind,
        })
    }

    /// Ω, or `0` when the protocol does not use it.
    pub fn big_omega_or_zero(&self) -> f64 {
        self.big_omega.unwrap_or(0.0)
    }

    /// Effective bandwidth of the two-stage cascade, `1/γ̃ = 1/γ + 1/Ω`.
    pub fn effective_gamma(&self) -> Option<f64> {
        self.big_omega.map(|w| effective_gamma(self.gamma, w))
    }

    /// The per-channel filter realization this protocol feeds back from.
    pub fn filter(&self) -> Result<FilterModel, FilterError> {
        let w = self.big_omega_or_zero();
        match self.kind {
            ProtocolKind::LowPass1 => filters::lowpass_cascade(&[self.gamma]),
            ProtocolKind::LowPass2 => filters::lowpass_cascade(&[self.gamma, w]),
            ProtocolKind::LowPass3 => filters::lowpass_cascade(&[self.gamma, w, w]),
            ProtocolKind::BandPass => filters::bandpass(self.gamma, w),
        }
    }

    /// Same parameters with every rate multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            lambda: self.lambda * factor,
            omega: self.omega * factor,
            gamma: self.gamma * factor,
            big_omega: self.big_omega.map(|w| w * factor),
            kind: self.kind,
        }
    }
}

/// `γ̃` with `1/γ̃ = 1/γ + 1/Ω`.
pub fn effective_gamma(gamma: f64, big_omega: f64) -> f64 {
    gamma * big_omega / (gamma + big_omega)
}
