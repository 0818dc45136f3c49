use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Turing,
    Circuit,
    BasicBlock,
    Assembly,
}

impl std::str::FromStr for ModelFamily {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "turing" => ModelFamily::Turing,
            "circuit" | "circuits" => ModelFamily::Circuit,
            "basic_block" | "basicblock" => ModelFamily::BasicBlock,
            "assembly" => ModelFamily::Assembly,
            other => return Err(MetricsError::UnknownFamily(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("unknown model family `{0}`")]
    UnknownFamily(String),
    #[error("size `{0}` is required for this family")]
    MissingSize(&'static str),
    #[error("size `{0}` must be positive")]
    NonPositive(&'static str),
}

/// Family size parameters. Only the fields relevant to a family are read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySizes {
    /// Number of head states (Turing), gate types (circuits) or instruction
    /// types (basic block, assembly).
    #[serde(default)]
    pub h: Option<u64>,
    /// Tape symbols (Turing).
    #[serde(default)]
    pub s: Option<u64>,
    /// Wires or registers.
    #[serde(default)]
    pub r: Option<u64>,
    /// Gates (circuits).
    #[serde(default)]
    pub t: Option<u64>,
    /// Blocks or lines.
    #[serde(default)]
    pub b: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Difficulty {
    pub log10_d: f64,
    pub t: u64,
}

fn get(v: Option<u64>, name: &'static str) -> Result<f64, MetricsError> {
    match v {
        None => Err(MetricsError::MissingSize(name)),
        Some(0) => Err(MetricsError::NonPositive(name)),
        Some(x) => Ok(x as f64),
    }
}

/// Base-10 logarithm of the brute-force search space size for a model family.
pub fn log10_search_space(family: ModelFamily, sizes: &FamilySizes) -> Result<f64, MetricsError> {
    Ok(match family {
        ModelFamily::Turing => {
            let (s, h) = (get(sizes.s, "S")?, get(sizes.h, "H")?);
            s * h * (3.0 * s * (h + 1.0)).log10()
        }
        ModelFamily::Circuit => {
            let (h, r, t) = (get(sizes.h, "H")?, get(sizes.r, "R")?, get(sizes.t, "T")?);
            t * h.log10() + 3.0 * t * r.log10()
        }
        ModelFamily::BasicBlock => {
            let (h, r, b) = (get(sizes.h, "H")?, get(sizes.r, "R")?, get(sizes.b, "B")?);
            b * (h * r.powi(4) * (b + 1.0).powi(2)).log10()
        }
        ModelFamily::Assembly => {
            let (h, r, b) = (get(sizes.h, "H")?, get(sizes.r, "R")?, get(sizes.b, "B")?);
            b * (h * r.powi(3) * (b + 1.0)).log10()
        }
    })
}

/// Search-space difficulty with the caller's execution length echoed back.
pub fn difficulty_metrics(family: ModelFamily, sizes: &FamilySizes, t: u64) -> Result<Difficulty, MetricsError> {
    Ok(Difficulty { log10_d: log10_search_space(family, sizes)?, t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turing_invert() {
        let d = log10_search_space(ModelFamily::Turing, &FamilySizes { s: Some(3), h: Some(1), ..Default::default() })
            .unwrap();
        assert!((d - 3.0 * 18f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn missing_size() {
        let e = log10_search_space(ModelFamily::Circuit, &FamilySizes::default()).unwrap_err();
        assert_eq!(e, MetricsError::MissingSize("H"));
        assert!("quantum".parse::<ModelFamily>().is_err());
    }
}
