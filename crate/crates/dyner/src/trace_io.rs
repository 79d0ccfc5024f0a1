//! Count traces on disk: a `k,value` CSV with a JSON sidecar describing
//! how the trace was produced.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dyner_core::{CountTrace, Observable, OnOffLaw};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Contents of the sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub kind: Observable,
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<u64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on: Option<OnOffLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off: Option<OnOffLaw>,
}

impl TraceMeta {
    pub fn of(trace: &CountTrace, laws: Option<(OnOffLaw, OnOffLaw)>) -> Self {
        TraceMeta {
            kind: trace.kind,
            n: trace.n,
            vertices: trace.vertices,
            k: trace.len(),
            seed: trace.seed,
            on: laws.map(|l| l.0),
            off: laws.map(|l| l.1),
        }
    }
}

/// `t.csv` → `t.json`.
pub fn sidecar_path(trace: &Path) -> PathBuf {
    if trace.extension().is_some_and(|e| e == "json") {
        let mut s = trace.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    } else {
        trace.with_extension("json")
    }
}

pub fn write_trace(path: &Path, trace: &CountTrace, meta: &TraceMeta) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| HarnessError::io(path, e);
    writeln!(w, "k,value").map_err(io)?;
    for (i, v) in trace.values.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, v).map_err(io)?;
    }
    w.flush().map_err(io)?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(meta).expect("trace metadata serializes");
    std::fs::write(&side, json + "\n").map_err(|e| HarnessError::io(&side, e))
}

pub fn read_meta(trace: &Path) -> Result<Option<TraceMeta>> {
    let side = sidecar_path(trace);
    if !side.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&side).map_err(|e| HarnessError::io(&side, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| HarnessError::format(&side, e))
}

#[derive(Deserialize)]
struct Row {
    k: usize,
    value: u64,
}

/// Feeds the values of a trace file to `sink` in order, returning how many
/// there were. Rows must be numbered `1, 2, …`.
pub fn stream_trace(path: &Path, mut sink: impl FnMut(u64)) -> Result<usize> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    let mut count = 0;
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| HarnessError::format(path, e))?;
        if row.k != count + 1 {
            return Err(HarnessError::format(
                path,
                format!("expected k = {}, found {}", count + 1, row.k),
            ));
        }
        sink(row.value);
        count += 1;
    }
    Ok(count)
}

pub fn read_trace(path: &Path) -> Result<(CountTrace, Option<TraceMeta>)> {
    let meta = read_meta(path)?;
    let mut values = Vec::new();
    stream_trace(path, |v| values.push(v))?;
    let trace = CountTrace {
        kind: meta.as_ref().map_or(Observable::Edges, |m| m.kind),
        n: meta.as_ref().map_or(0, |m| m.n),
        vertices: meta.as_ref().and_then(|m| m.vertices),
        seed: meta.as_ref().map_or(0, |m| m.seed),
        values,
    };
    Ok((trace, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let trace = CountTrace {
            kind: Observable::Triangles,
            values: vec![3, 0, 7, 12],
            n: 15,
            vertices: Some(6),
            seed: 42,
        };
        let laws = (
            OnOffLaw::geometric(0.3).unwrap(),
            OnOffLaw::geometric(0.8).unwrap(),
        );
        write_trace(&path, &trace, &TraceMeta::of(&trace, Some(laws))).unwrap();
        assert!(dir.path().join("t.json").exists());
        let (back, meta) = read_trace(&path).unwrap();
        assert_eq!(back, trace);
        assert_eq!(meta.unwrap().on, Some(laws.0));
    }

    #[test]
    fn rejects_gaps_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "k,value\n1,4\n3,5\n").unwrap();
        assert!(matches!(
            stream_trace(&path, |_| {}),
            Err(HarnessError::Format { .. })
        ));
        std::fs::write(&path, "k,value\n1,x\n").unwrap();
        assert!(stream_trace(&path, |_| {}).is_err());
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar_path(Path::new("a/t.csv")),
            PathBuf::from("a/t.json")
        );
        assert_eq!(
            sidecar_path(Path::new("trace")),
            PathBuf::from("trace.json")
        );
        assert_eq!(
            sidecar_path(Path::new("t.json")),
            PathBuf::from("t.json.meta.json")
        );
    }
}
