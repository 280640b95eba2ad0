//! Command-line flags. Every flag is optional here so that values can also
//! come from a config file; requiredness is checked after merging.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "filtered-feedback",
    version,
    about = "Filtered-feedback cooling of a continuously measured oscillator"
)]
pub struct Cli {
    /// Flat TOML file whose keys are flag names; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Impulse response of a filter realization: `t,h_1,…,h_n`.
    FilterResponse(FilterArgs),
    /// Steady state of a protocol's moment system.
    SteadyState(ProtocolArgs),
    /// RK4 transient of a protocol's moment system: `t,<labels…>`.
    Evolve(EvolveArgs),
    /// Monte Carlo ensemble of measured, fed-back trajectories.
    Trajectory(TrajectoryArgs),
    /// Winner map over a log-spaced (γ, Ω) grid.
    PhaseDiagram(PhaseArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct ProtocolArgs {
    /// lowpass1, lowpass2, lowpass3 or bandpass.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Measurement strength λ.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Oscillator frequency ω (default 1).
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// First filter bandwidth γ.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Second bandwidth or band-pass centre Ω.
    #[arg(long = "Omega", allow_hyphen_values = true)]
    pub big_omega: Option<f64>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct FilterArgs {
    /// lowpass, bandpass or kernel.
    #[arg(long)]
    pub filter: Option<String>,
    /// Low-pass stage rates, comma separated (default: a single stage at γ).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rates: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Band-pass centre frequency.
    #[arg(long = "Omega", allow_hyphen_values = true)]
    pub big_omega: Option<f64>,
    /// Kernel ODE coefficients a₀,…,a_{n−1}.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,
    /// Kernel initial derivatives f(0),…,f⁽ⁿ⁻¹⁾(0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub derivs: Option<Vec<f64>>,
    /// Final time (default 10/γ, or 10 for kernels).
    #[arg(long, allow_hyphen_values = true)]
    pub tmax: Option<f64>,
    /// Number of sample times (default 101).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// RK4 step (default 1e-3).
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// Number of steps (default 5000).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Initial energy in units of ħω; other components start at 0 (default 0.5).
    #[arg(long, allow_hyphen_values = true)]
    pub e0: Option<f64>,
    /// Emit every `stride` steps (default 10).
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Number of trajectories.
    #[arg(long)]
    pub ntraj: Option<usize>,
    /// Base seed; trajectory i uses substream i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fock-space cutoff (default 25).
    #[arg(long)]
    pub fock: Option<usize>,
    /// Emit every `stride` steps (default 10).
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct PhaseArgs {
    /// Grid size `N` or `NxM` (γ points × Ω points; default 200).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}
