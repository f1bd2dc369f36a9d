use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use superlidar::SetupConfig;

use crate::exit::CliError;

/// Run configuration file.
///
/// ```json
/// { "setup": { "n_sources": 3, "order": 3 }, "curves": [[2, 2], [10, 10]] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub setup: SetupConfig,
    /// `(N, m)` pairs for the `correlation` command.
    pub curves: Vec<(usize, u32)>,
    /// Samples over `Δ ∈ [−2π, 2π]`; odd counts include `Δ = 0`.
    pub delta_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            setup: SetupConfig::default(),
            curves: vec![(2, 2), (10, 10)],
            delta_points: 801,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    /// Parse a JSON document, reporting the key path and position of the
    /// first offending value.
    pub fn parse(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            format!(
                "at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            )
        })?;
        if config.curves.is_empty() {
            return Err("at `curves`: need at least one (N, m) pair".into());
        }
        if config.delta_points < 2 {
            return Err(format!(
                "at `delta_points`: need at least 2, got {}",
                config.delta_points
            ));
        }
        Ok(config)
    }
}

/// `N_LO..N_HI,M_LO..M_HI`
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub n: (usize, usize),
    pub m: (u32, u32),
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: (2, 20), m: (2, 20) }
    }
}

impl GridSpec {
    pub fn n_range(&self) -> RangeInclusive<usize> {
        self.n.0..=self.n.1
    }

    pub fn m_range(&self) -> RangeInclusive<u32> {
        self.m.0..=self.m.1
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{},{}..{}", self.n.0, self.n.1, self.m.0, self.m.1)
    }
}

fn parse_range<T: FromStr + PartialOrd + Copy>(s: &str) -> Result<(T, T), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("`{s}` is not of the form LO..HI"))?;
    let lo: T = lo.trim().parse().map_err(|_| format!("bad lower bound in `{s}`"))?;
    let hi: T = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| format!("bad upper bound in `{s}`"))?;
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok((lo, hi))
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, m) = s
            .split_once(',')
            .ok_or_else(|| format!("grid `{s}` is not of the form N_LO..N_HI,M_LO..M_HI"))?;
        let grid = Self {
            n: parse_range(n)?,
            m: parse_range(m)?,
        };
        if grid.n.0 < 2 || grid.m.0 < 2 {
            return Err(format!("grid `{s}`: N and m start at 2"));
        }
        Ok(grid)
    }
}
