//! Run specification: defaults per command, optional JSON file, flag overrides.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Sweep,
    Optimize,
    Qcrb,
    McVerify,
    RatioPeak,
    Report,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Sweep => "sweep",
            CommandKind::Optimize => "optimize",
            CommandKind::Qcrb => "qcrb",
            CommandKind::McVerify => "mc-verify",
            CommandKind::RatioPeak => "ratio-peak",
            CommandKind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TopologyArg {
    Entangled,
    Separable,
}

impl From<TopologyArg> for gyronet::Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Entangled => gyronet::Topology::Entangled,
            TopologyArg::Separable => gyronet::Topology::Separable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SeedingArg {
    Single,
    Double,
}

impl From<SeedingArg> for gyronet::Seeding {
    fn from(s: SeedingArg) -> Self {
        match s {
            SeedingArg::Single => gyronet::Seeding::Single,
            SeedingArg::Double => gyronet::Seeding::Double,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Values a JSON run-spec file may set; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(rename = "M")]
    pub m: Option<Vec<usize>>,
    #[serde(rename = "N")]
    pub n: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub topology: Option<Vec<TopologyArg>>,
    pub seeding: Option<SeedingArg>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub r: Option<Vec<f64>>,
    pub amp: Option<f64>,
    pub samples: Option<usize>,
    pub n_range: Option<[f64; 2]>,
}

/// Fully resolved run description, echoed into JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub command: CommandKind,
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    pub eta: Vec<f64>,
    pub topology: Vec<TopologyArg>,
    pub seeding: SeedingArg,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    /// Squeezing grid for Monte Carlo verification.
    pub r: Vec<f64>,
    /// Seed amplitude for Monte Carlo verification.
    pub amp: f64,
    pub samples: usize,
    /// Photon-number interval searched for the ratio peak.
    pub n_range: [f64; 2],
}

const ETA_UNION: [f64; 4] = [1.0, 0.98, 0.95, 0.9];

impl RunSpec {
    pub fn defaults(command: CommandKind) -> Self {
        let both = vec![TopologyArg::Entangled, TopologyArg::Separable];
        let (m, n, eta): (Vec<usize>, Vec<f64>, Vec<f64>) = match command {
            CommandKind::Sweep => ((1..=10).collect(), vec![20.0], ETA_UNION.to_vec()),
            CommandKind::Optimize | CommandKind::Report => (vec![4], vec![2.53], vec![0.95]),
            CommandKind::Qcrb => (vec![2], (1..=50).map(f64::from).collect(), vec![1.0, 0.95]),
            CommandKind::McVerify => (vec![1, 2, 4], vec![1.0], vec![1.0, 0.95]),
            CommandKind::RatioPeak => (vec![4], vec![], vec![0.99, 0.95, 1.0]),
        };
        Self {
            command,
            m,
            n,
            eta,
            topology: both,
            seeding: SeedingArg::Single,
            out: None,
            format: Format::Csv,
            seed: 2024,
            r: vec![0.0, 0.5, 1.0],
            amp: 5.0,
            samples: 1_000_000,
            n_range: [0.1, 100.0],
        }
    }

    pub fn apply_file(&mut self, file: SpecFile) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = file.$field { self.$field = v; })*
            };
        }
        take!(m, n, eta, topology, seeding, format, seed, r, amp, samples, n_range);
        if file.out.is_some() {
            self.out = file.out;
        }
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |msg: String| Err(Failure::Validation(msg));
        if self.m.is_empty() || self.eta.is_empty() || self.topology.is_empty() {
            return bad("grids for M, eta and topology must be non-empty".into());
        }
        if self.command != CommandKind::RatioPeak && self.n.is_empty() {
            return bad("the N grid must be non-empty".into());
        }
        if let Some(m) = self.m.iter().find(|&&m| m == 0) {
            return bad(format!("M = {m} is not a valid sensor count"));
        }
        if let Some(e) = self.eta.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return bad(format!("eta = {e} outside (0, 1]"));
        }
        if let Some(n) = self.n.iter().find(|&&n| !(n > 0.0 && n.is_finite())) {
            return bad(format!("N = {n} must be positive"));
        }
        if let Some(r) = self.r.iter().find(|&&r| !(r >= 0.0 && r.is_finite())) {
            return bad(format!("r = {r} must be nonnegative"));
        }
        if self.r.is_empty() {
            return bad("the r grid must be non-empty".into());
        }
        if !(self.amp > 0.0 && self.amp.is_finite()) {
            return bad("seed amplitude must be positive".into());
        }
        if self.samples < 2 {
            return bad("at least two Monte Carlo samples are required".into());
        }
        let [lo, hi] = self.n_range;
        if !(lo > 0.0 && hi > lo) {
            return bad(format!("invalid photon-number range [{lo}, {hi}]"));
        }
        Ok(())
    }
}
