use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{stressed_runs, AlertSpan, StressTimeline, TimelineEntry};
use crate::error::{Error, Result};

pub const TABLE_HEADER: [&str; 5] = ["timestamp", "probability", "label", "tlx_score", "in_alert"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimelineFormat {
    /// Comma-delimited, one row per entry; alerts as an `in_alert` column.
    Table,
    /// JSON with entries and explicit alert spans.
    Structured,
}

impl FromStr for TimelineFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" | "csv" => Ok(Self::Table),
            "structured" | "json" => Ok(Self::Structured),
            other => Err(Error::InvalidConfig(format!(
                "unknown timeline format `{other}`"
            ))),
        }
    }
}

fn write_table<W: Write>(timeline: &StressTimeline, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for (e, alert) in timeline.entries().iter().zip(timeline.in_alert()) {
        w.write_record([
            e.timestamp.to_string(),
            e.probability.to_string(),
            e.label.to_string(),
            e.tlx_score.map(|s| s.to_string()).unwrap_or_default(),
            u8::from(alert).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Floats are written in shortest round-trip form, so both formats are lossless.
pub fn export_timeline(
    timeline: &StressTimeline,
    path: impl AsRef<Path>,
    format: TimelineFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        TimelineFormat::Table => {
            write_table(timeline, &mut out).map_err(|e| Error::csv(path, e))?
        }
        TimelineFormat::Structured => {
            serde_json::to_writer_pretty(&mut out, timeline)
                .map_err(|e| Error::corrupt(path, e.to_string()))?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn parse_table(path: &Path, text: &str) -> Result<StressTimeline> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?;
    if header.iter().ne(TABLE_HEADER) {
        return Err(Error::corrupt(
            path,
            format!("timeline header must be {}", TABLE_HEADER.join(",")),
        ));
    }
    let mut entries = Vec::new();
    let mut in_alert = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| Error::corrupt(path, format!("row {}: bad {what}", row + 1));
        let num = |i: usize, what: &str| field(i).parse::<f64>().map_err(|_| bad(what));
        let flag = |i: usize, what: &str| match field(i) {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            _ => Err(bad(what)),
        };
        entries.push(TimelineEntry {
            timestamp: num(0, "timestamp")?,
            probability: num(1, "probability")?,
            label: flag(2, "label")?,
            tlx_score: match field(3) {
                "" => None,
                _ => Some(num(3, "tlx_score")?),
            },
        });
        in_alert.push(flag(4, "in_alert")?);
    }
    let alerts = stressed_runs(&in_alert)
        .into_iter()
        .map(|(s, e)| AlertSpan {
            start_index: s,
            end_index: e,
            start_ts: entries[s].timestamp,
            end_ts: entries[e].timestamp,
        })
        .collect();
    StressTimeline::new(entries, alerts)
}

/// Reads a timeline written by [`export_timeline`] and re-validates it.
pub fn import_timeline(path: impl AsRef<Path>, format: TimelineFormat) -> Result<StressTimeline> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        TimelineFormat::Table => parse_table(path, &text),
        TimelineFormat::Structured => {
            let raw: StressTimeline =
                serde_json::from_str(&text).map_err(|e| Error::corrupt(path, e.to_string()))?;
            StressTimeline::new(raw.entries, raw.alerts)
        }
    }
}
