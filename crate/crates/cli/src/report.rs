//! Report envelope and deterministic JSON/CSV writers.

use std::io::{self, Write};

use gradflow::flow::Trajectory;
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub results: Value,
    pub warnings: Vec<String>,
}

/// SHA-256 over the command, the effective options and every input file.
pub fn digest(command: &str, options: &Value, inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(to_json(options).as_bytes());
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

/// Writes every `f64` with 17 significant digits so values round-trip.
struct RoundTrip;

impl Formatter for RoundTrip {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, RoundTrip);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Header `t,x1,…,xd`, one row per node.
pub fn write_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    let d = traj.states.first().map_or(0, |x| x.len());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=d).map(|i| format!("x{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        write!(w, "{t:.16e}")?;
        for v in x.iter() {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}
