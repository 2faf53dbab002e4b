//! Measure documents: `{"type":"haar"}`, `{"type":"roots","order":r}` or
//! `{"type":"atomic","atoms":[{"angle":"p/q","weight":w}, ...]}`.

use std::path::Path;

use bstoeplitz_core::{Angle, Atom, Measure};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureDoc {
    Haar {},
    Roots { order: u64 },
    Atomic { atoms: Vec<AtomDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub angle: String,
    pub weight: f64,
}

impl MeasureDoc {
    pub fn to_measure(&self) -> Result<Measure, CliError> {
        Ok(match self {
            MeasureDoc::Haar {} => Measure::Haar,
            MeasureDoc::Roots { order } => Measure::roots_uniform(*order)?,
            MeasureDoc::Atomic { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| Ok(Atom { angle: a.angle.parse::<Angle>()?, weight: a.weight }))
                    .collect::<Result<Vec<_>, CliError>>()?;
                Measure::atomic(atoms)?
            }
        })
    }

    pub fn from_measure(mu: &Measure) -> Self {
        match mu {
            Measure::Haar => MeasureDoc::Haar {},
            Measure::RootsUniform(order) => MeasureDoc::Roots { order: *order },
            Measure::Atomic(atoms) => MeasureDoc::Atomic {
                atoms: atoms.iter().map(|a| AtomDoc { angle: a.angle.to_string(), weight: a.weight }).collect(),
            },
        }
    }
}

/// Reads a measure given inline (text starting with `{`) or as a file path.
pub fn load(spec: &str) -> Result<Measure, CliError> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(Path::new(spec))
            .map_err(|e| CliError::usage(format!("cannot read measure file {spec}: {e}")))?
    };
    let doc: MeasureDoc =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid measure document: {e}")))?;
    doc.to_measure()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_shapes() {
        assert_eq!(load(r#"{"type":"haar"}"#).unwrap(), Measure::Haar);
        assert_eq!(load(r#"{"type":"roots","order":2}"#).unwrap(), Measure::RootsUniform(2));
        let mu =
            load(r#"{"type":"atomic","atoms":[{"angle":"1/4","weight":0.5},{"angle":"3/4","weight":0.5}]}"#).unwrap();
        assert_eq!(mu.atoms().unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(load(r#"{"type":"atomic","atoms":[{"angle":"1/4","weight":0.7}]}"#).is_err());
        assert!(load(r#"{"type":"roots"}"#).is_err());
        assert!(load(r#"{"type":"haar","extra":1}"#).is_err());
        assert!(load("/nonexistent/measure.json").is_err());
    }

    #[test]
    fn round_trips() {
        for mu in [Measure::Haar, Measure::RootsUniform(3), Measure::dirac_one()] {
            let text = serde_json::to_string(&MeasureDoc::from_measure(&mu)).unwrap();
            assert_eq!(load(&text).unwrap(), mu);
        }
    }
}
