use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::settings::Kind;

#[derive(Debug, Parser)]
#[command(
    name = "fblfas",
    version,
    about = "Block error and outage sweeps for fluid antenna receivers under block spatial correlation",
    after_help = "Lists accept `a,b,c` or an inclusive range `start:step:stop`.\n\
                  FBLFAS_THREADS caps the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best-port gain CDF and PDF on a grid, with an empirical CDF overlay.
    Dist(Params),
    /// Block error bound against the number of users.
    BlerVsU(Params),
    /// Block error bound against SNR in dB.
    BlerVsSnr(Params),
    /// Block error bound against the number of ports.
    BlerVsN(Params),
    /// Block error bound against the antenna length in wavelengths.
    BlerVsW(Params),
    /// Outage probability against SNR in dB.
    OpVsSnr(Params),
    /// Outage probability against the number of users.
    OpVsU(Params),
    /// Order-N Gauss-Laguerre block density against the adaptive oracle.
    QuadCheck(Params),
    /// Re-runs the experiment recorded in a CSV metadata block.
    Replay {
        /// CSV written by an earlier run.
        csv: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    /// The experiment and its flags; `None` for `replay`.
    pub fn into_experiment(self) -> Option<(Kind, Params)> {
        Some(match self {
            Command::Dist(p) => (Kind::Dist, p),
            Command::BlerVsU(p) => (Kind::BlerVsU, p),
            Command::BlerVsSnr(p) => (Kind::BlerVsSnr, p),
            Command::BlerVsN(p) => (Kind::BlerVsN, p),
            Command::BlerVsW(p) => (Kind::BlerVsW, p),
            Command::OpVsSnr(p) => (Kind::OpVsSnr, p),
            Command::OpVsU(p) => (Kind::OpVsU, p),
            Command::QuadCheck(p) => (Kind::QuadCheck, p),
            Command::Replay { .. } => return None,
        })
    }
}

/// Every experiment flag. Values stay textual until the subcommand's
/// parameter table has merged them with the config file and defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of ports N (list).
    #[arg(long)]
    pub ports: Option<String>,
    /// Antenna length W in wavelengths (list).
    #[arg(long, allow_hyphen_values = true)]
    pub width: Option<String>,
    /// Number of users U (list).
    #[arg(long)]
    pub users: Option<String>,
    /// Blocklength M in channel uses.
    #[arg(long)]
    pub blocklength: Option<String>,
    /// SNR in dB (list).
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// SINR outage threshold (linear).
    #[arg(long = "gamma-th", allow_hyphen_values = true)]
    pub gamma_th: Option<String>,
    /// Channel variance per port.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma2: Option<String>,
    /// Intra-block correlation of the block model.
    #[arg(long, allow_hyphen_values = true)]
    pub mu2: Option<String>,
    /// MRC benchmark branch counts (list).
    #[arg(long)]
    pub mrc: Option<String>,
    /// Monte Carlo draws per point; 0 disables the simulated series.
    #[arg(long)]
    pub samples: Option<String>,
    /// Seed of every simulated series.
    #[arg(long)]
    pub seed: Option<String>,
    /// Gauss-Laguerre order.
    #[arg(long = "quad-order", visible_alias = "order")]
    pub quad_order: Option<String>,
    /// Correlation magnitudes mu for quad-check (list).
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Block size for quad-check.
    #[arg(long)]
    pub lb: Option<String>,
    /// Largest gain on the grid.
    #[arg(long = "t-max", allow_hyphen_values = true)]
    pub t_max: Option<String>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<String>,
}

impl Params {
    /// Flags given on the command line, keyed like the config file.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        [
            ("ports", &self.ports),
            ("width", &self.width),
            ("users", &self.users),
            ("blocklength", &self.blocklength),
            ("snr_db", &self.snr_db),
            ("gamma_th", &self.gamma_th),
            ("sigma2", &self.sigma2),
            ("mu2", &self.mu2),
            ("mrc", &self.mrc),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("quad_order", &self.quad_order),
            ("mu", &self.mu),
            ("lb", &self.lb),
            ("t_max", &self.t_max),
            ("points", &self.points),
        ]
        .into_iter()
        .filter_map(|(key, value)| value.clone().map(|v| (key, v)))
        .collect()
    }
}
