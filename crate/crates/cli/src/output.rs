//! File formats.
//!
//! * `manifest.json`: command, tool version, the full argument set, the
//!   replica stream rule and a summary.
//! * `events-<k>.jsonl`: one event per line,
//!   `{"t":…,"i":…,"j":…,"kind":"jump"|"absorb","from":…,"to":…}`.
//! * `finals.json`: array of final states (`null` for replicas that hit the
//!   event cap), each `{"r":…,"cells":[{"i":…,"j":…,"h":…},…]}`.
//! * `shapes.csv`: header `diagram,probability`; the diagram is a JSON
//!   array of row lengths.
//! * `report.json`: statistics of the run or check.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use tabdyn::jump_chain::ShapeDistribution;
use tabdyn::pdmp::Event;
use tabdyn::YoungDiagram;

pub const STREAM_RULE: &str = "replica k draws from ChaCha8 seeded with the master seed, stream k";

#[derive(Serialize, Deserialize)]
pub struct Manifest<A> {
    pub command: String,
    pub version: String,
    pub args: A,
    pub stream_rule: String,
    pub summary: serde_json::Value,
}

impl<A> Manifest<A> {
    pub fn new(command: &str, args: A, summary: serde_json::Value) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            args,
            stream_rule: STREAM_RULE.to_string(),
            summary,
        }
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_events(path: &Path, log: &[Event]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for ev in log {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_shapes_csv(path: &Path, dist: &ShapeDistribution) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["diagram", "probability"])?;
    for (shape, p) in dist {
        w.write_record([serde_json::to_string(shape)?, format!("{p}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_distribution(path: &Path) -> anyhow::Result<ShapeDistribution> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut dist = ShapeDistribution::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let (Some(d), Some(p)) = (rec.get(0), rec.get(1)) else {
            anyhow::bail!("row {} of {} needs two fields", line + 2, path.display());
        };
        let shape: YoungDiagram = serde_json::from_str(d).with_context(|| format!("bad diagram {d:?}"))?;
        let p: f64 = p.trim().parse().with_context(|| format!("bad probability {p:?}"))?;
        *dist.entry(shape).or_insert(0.0) += p;
    }
    Ok(dist)
}
