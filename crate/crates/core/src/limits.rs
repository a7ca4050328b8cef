use serde::{Deserialize, Serialize};

/// Capacity guards for sampling and brute-force enumeration.
///
/// Defaults can be overridden through `POLYROUND_MAX_ENTRIES`,
/// `POLYROUND_DISC_MAX_N`, `POLYROUND_GRID_MAX_N` and
/// `POLYROUND_ENUM_CAP` (see [`Limits::from_env`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest `m * n` accepted when sampling a matrix.
    pub max_entries: usize,
    /// Largest `n` for the `2^n` sign/0-1 enumerations.
    pub disc_max_n: usize,
    /// Largest `n` for the grid search over centers.
    pub grid_max_n: usize,
    /// Largest number of lattice points or grid-center/vertex pairs visited
    /// by a single enumeration.
    pub enum_cap: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_entries: 1 << 28,
            disc_max_n: 25,
            grid_max_n: 12,
            enum_cap: 1e9,
        }
    }
}

impl Limits {
    pub fn from_env() -> Self {
        let mut limits = Self::default();
        if let Some(v) = env_parse("POLYROUND_MAX_ENTRIES") {
            limits.max_entries = v;
        }
        if let Some(v) = env_parse("POLYROUND_DISC_MAX_N") {
            limits.disc_max_n = v;
        }
        if let Some(v) = env_parse("POLYROUND_GRID_MAX_N") {
            limits.grid_max_n = v;
        }
        if let Some(v) = env_parse("POLYROUND_ENUM_CAP") {
            limits.enum_cap = v;
        }
        limits
    }
}

fn env_parse<T: std::str::FromStr>(key: &str) -> Option<T> {
    std::env::var(key).ok()?.trim().parse().ok()
}
