//! JSON-lines persistence of scenario sets.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::Scenario;

pub const SCENARIO_SCHEMA: &str = "mgplan.scenario/1";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: unsupported schema {schema:?}")]
    Schema { line: usize, schema: String },
    #[error("line {line}: fingerprint does not match the loads")]
    Fingerprint { line: usize },
}

/// One line of a scenario dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub schema: String,
    /// Iteration after which the scenario joined the set (0 for seeds).
    pub iteration: usize,
    pub scenario: Scenario,
}

pub fn write_scenarios<W: Write>(mut w: W, records: &[(usize, &Scenario)]) -> Result<(), DumpError> {
    for &(iteration, scenario) in records {
        let rec = ScenarioRecord { schema: SCENARIO_SCHEMA.to_string(), iteration, scenario: scenario.clone() };
        serde_json::to_writer(&mut w, &rec).map_err(|source| DumpError::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a dump, skipping blank lines and verifying every fingerprint.
pub fn read_scenarios<R: BufRead>(r: R) -> Result<Vec<ScenarioRecord>, DumpError> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let n = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScenarioRecord = serde_json::from_str(&line).map_err(|source| DumpError::Json { line: n, source })?;
        if rec.schema != SCENARIO_SCHEMA {
            return Err(DumpError::Schema { line: n, schema: rec.schema });
        }
        if !rec.scenario.fingerprint_valid() {
            return Err(DumpError::Fingerprint { line: n });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Serde adapter writing non-finite floats as `null` and reading `null` back
/// as `+inf`.
pub mod float_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioOrigin;

    #[test]
    fn round_trip() {
        let a = Scenario::new(vec![vec![1.0, 2.0]], vec![vec![0.5, 0.25]], ScenarioOrigin::Deterministic);
        let b = Scenario::new(vec![vec![1.5, 2.0]], vec![vec![0.5, 0.3]], ScenarioOrigin::ThermalAdversary);
        let mut buf = Vec::new();
        write_scenarios(&mut buf, &[(0, &a), (2, &b)]).unwrap();
        let back = read_scenarios(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].iteration, 2);
        assert_eq!(back[1].scenario, b);
    }

    #[test]
    fn tampered_loads_are_rejected() {
        let a = Scenario::new(vec![vec![1.0]], vec![vec![0.5]], ScenarioOrigin::Deterministic);
        let mut buf = Vec::new();
        write_scenarios(&mut buf, &[(0, &a)]).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("[[1.0]]", "[[1.25]]");
        assert!(matches!(read_scenarios(text.as_bytes()), Err(DumpError::Fingerprint { line: 1 })));
        let bad = text.replace(SCENARIO_SCHEMA, "other/9");
        assert!(matches!(read_scenarios(bad.as_bytes()), Err(DumpError::Schema { .. })));
    }
}
