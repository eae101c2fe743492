//! Reports and their JSON/CSV encodings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real number that survives JSON: non-finite values become the strings
/// `"inf"`, `"-inf"` and `"nan"`.
#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits() || self.0 == other.0
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            F(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::F(v) => Ok(Num(v)),
            Raw::S(s) => match s.as_str() {
                "inf" => Ok(Num(f64::INFINITY)),
                "-inf" => Ok(Num(f64::NEG_INFINITY)),
                "nan" => Ok(Num(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v.is_nan() {
            f.write_str("nan")
        } else if v.is_infinite() {
            f.write_str(if v > 0.0 { "inf" } else { "-inf" })
        } else {
            // shortest round-trip form, same as the JSON encoding
            write!(f, "{}", serde_json::Number::from_f64(v).expect("finite"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Bool(bool),
    Int(u64),
    Num(Num),
    Vec(Vec<Num>),
    Text(String),
}

impl Metric {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Metric::Num(n) => Some(n.0),
            Metric::Int(n) => Some(*n as f64),
            _ => None,
        }
    }
}

impl From<f64> for Metric {
    fn from(v: f64) -> Self {
        Metric::Num(Num(v))
    }
}

impl From<usize> for Metric {
    fn from(v: usize) -> Self {
        Metric::Int(v as u64)
    }
}

impl From<bool> for Metric {
    fn from(v: bool) -> Self {
        Metric::Bool(v)
    }
}

impl From<&[f64]> for Metric {
    fn from(v: &[f64]) -> Self {
        Metric::Vec(v.iter().copied().map(Num).collect())
    }
}

impl From<Vec<f64>> for Metric {
    fn from(v: Vec<f64>) -> Self {
        Metric::from(v.as_slice())
    }
}

impl From<&str> for Metric {
    fn from(v: &str) -> Self {
        Metric::Text(v.to_string())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Bool(b) => write!(f, "{b}"),
            Metric::Int(n) => write!(f, "{n}"),
            Metric::Num(n) => write!(f, "{n}"),
            Metric::Vec(v) => {
                let parts: Vec<String> = v.iter().map(|n| n.to_string()).collect();
                write!(f, "{}", parts.join(";"))
            }
            Metric::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// The assertion a failed (or inconclusive) task violated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub assertion: String,
    pub observed: Metric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub verb: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub metrics: BTreeMap<String, Metric>,
    /// Only recorded on request; it would break byte-stable output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a TaskRecord>) -> Summary {
        let mut s = Summary::default();
        for r in records {
            s.total += 1;
            match r.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }

    /// 0 when everything passed, 1 on any failure, 2 on inconclusive only.
    pub fn exit_code(&self) -> i32 {
        if self.fail > 0 {
            1
        } else if self.inconclusive > 0 {
            2
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub scenarios: Vec<Report>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn new(seed: u64, scenarios: Vec<Report>) -> Self {
        let summary = Summary::of(scenarios.iter().flat_map(|r| &r.tasks));
        SuiteReport { seed, scenarios, summary }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports always serialize");
    s.push('\n');
    s
}

/// One row per task; metric columns are the sorted union over all rows.
pub fn to_csv(reports: &[&Report]) -> Result<String, csv::Error> {
    let columns: BTreeSet<&str> =
        reports.iter().flat_map(|r| &r.tasks).flat_map(|t| t.metrics.keys().map(String::as_str)).collect();
    let timed = reports.iter().flat_map(|r| &r.tasks).any(|t| t.wall_ms.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["scenario", "id", "verb", "status", "assertion", "observed"];
    header.extend(columns.iter().copied());
    if timed {
        header.push("wall_ms");
    }
    w.write_record(&header)?;
    for r in reports {
        for t in &r.tasks {
            let mut row = vec![r.scenario.clone(), t.id.clone(), t.verb.clone(), t.status.to_string()];
            match &t.failure {
                Some(f) => row.extend([f.assertion.clone(), f.observed.to_string()]),
                None => row.extend([String::new(), String::new()]),
            }
            row.extend(columns.iter().map(|c| t.metrics.get(*c).map(|m| m.to_string()).unwrap_or_default()));
            if timed {
                row.push(t.wall_ms.map(|v| Num(v).to_string()).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, status: Status) -> TaskRecord {
        let mut metrics = BTreeMap::new();
        metrics.insert("value".to_string(), Metric::from(0.1));
        TaskRecord { id: id.into(), verb: "minnorm".into(), status, failure: None, metrics, wall_ms: None }
    }

    #[test]
    fn non_finite_numbers_round_trip() {
        for v in [f64::INFINITY, f64::NEG_INFINITY, 0.1, -0.0, 1e-300] {
            let text = serde_json::to_string(&Num(v)).unwrap();
            let back: Num = serde_json::from_str(&text).unwrap();
            assert_eq!(back.0.to_bits(), v.to_bits(), "{text}");
        }
        let nan: Num = serde_json::from_str(&serde_json::to_string(&Num(f64::NAN)).unwrap()).unwrap();
        assert!(nan.0.is_nan());
        assert!(serde_json::from_str::<Num>("\"infinity\"").is_err());
    }

    #[test]
    fn metrics_keep_their_shape() {
        let m = vec![Metric::Bool(true), Metric::Int(3), Metric::from(2.5), Metric::from(vec![1.0, f64::INFINITY])];
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"[true,3,2.5,[1.0,"inf"]]"#);
        assert_eq!(serde_json::from_str::<Vec<Metric>>(&text).unwrap(), m);
        assert_eq!(Metric::from(vec![1.0, 0.5]).to_string(), "1.0;0.5");
    }

    #[test]
    fn exit_code_precedence() {
        let recs = [record("a", Status::Pass), record("b", Status::Inconclusive)];
        assert_eq!(Summary::of(&recs[..1]).exit_code(), 0);
        assert_eq!(Summary::of(&recs).exit_code(), 2);
        let recs = [record("a", Status::Fail), record("b", Status::Inconclusive)];
        assert_eq!(Summary::of(&recs).exit_code(), 1);
    }

    #[test]
    fn pass_only_csv() {
        let r = Report {
            scenario: "s".into(),
            seed: 0,
            tasks: vec![record("a", Status::Pass), record("b", Status::Pass)],
            summary: Summary::default(),
        };
        let text = to_csv(&[&r]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scenario,id,verb,status,assertion,observed,value");
        assert_eq!(lines[1], "s,a,minnorm,pass,,,0.1");
        assert_eq!(lines.len(), 3);
    }
}
