//! Setpoint trajectories drawn inside a band.

use std::fmt;
use std::str::FromStr;

use flexagg::FlexBand;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SampleMode {
    /// Independent uniform draw per period.
    Uniform,
    /// Random choice of band endpoint per period.
    Vertex,
    /// Runs of equal endpoints that alternate, pushing storage to its limits.
    /// The run length and starting side come from the seed.
    Adversarial,
}

impl SampleMode {
    pub const ALL: [SampleMode; 3] = [SampleMode::Uniform, SampleMode::Vertex, SampleMode::Adversarial];

    pub fn name(self) -> &'static str {
        match self {
            SampleMode::Uniform => "uniform",
            SampleMode::Vertex => "vertex",
            SampleMode::Adversarial => "adversarial",
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SampleMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        SampleMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown sampling mode '{s}' (uniform, vertex, adversarial)")))
    }
}

pub fn sample_trajectory(band: &FlexBand, seed: u64, mode: SampleMode) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let periods = band.periods();
    let pick = |t: usize, upper: bool| if upper { band.upper[t] } else { band.lower[t] };
    match mode {
        SampleMode::Uniform => (0..periods).map(|t| band.lower[t] + rng.random::<f64>() * band.width(t)).collect(),
        SampleMode::Vertex => (0..periods).map(|t| pick(t, rng.random::<bool>())).collect(),
        SampleMode::Adversarial => {
            let run = rng.random_range(1..=periods.max(1));
            let start = rng.random::<bool>();
            (0..periods).map(|t| pick(t, start ^ ((t / run) % 2 == 1))).collect()
        }
    }
}
