//! Stress-state series over time-ordered records, persistence-filtered
//! alerts, and their exports.

mod export;
mod render;

pub use export::{export_timeline, import_timeline, TimelineFormat};
pub use render::{render_svg, render_timeline, RELAXED_COLOR, STRESSED_COLOR};

use serde::{Deserialize, Serialize};

use crate::data::Record;
use crate::error::{Error, Result};
use crate::fusion::{FusionModel, TlxRegressor};

pub const DEFAULT_MIN_RUN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub timestamp: f64,
    pub probability: f64,
    pub label: u8,
    pub tlx_score: Option<f64>,
}

/// Entries `start_index..=end_index` all carry label 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertSpan {
    pub start_index: usize,
    pub end_index: usize,
    pub start_ts: f64,
    pub end_ts: f64,
}

impl AlertSpan {
    pub fn len(&self) -> usize {
        self.end_index - self.start_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistencePolicy {
    min_run: usize,
}

impl PersistencePolicy {
    pub fn new(min_run: usize) -> Result<Self> {
        if min_run == 0 {
            return Err(Error::InvalidConfig("min_run must be at least 1".into()));
        }
        Ok(Self { min_run })
    }

    pub fn min_run(&self) -> usize {
        self.min_run
    }
}

impl Default for PersistencePolicy {
    fn default() -> Self {
        Self {
            min_run: DEFAULT_MIN_RUN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StressTimeline {
    entries: Vec<TimelineEntry>,
    alerts: Vec<AlertSpan>,
}

fn check_timestamps(ts: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (i, t) in ts.enumerate() {
        if !t.is_finite() {
            return Err(Error::Timeline(format!(
                "timestamp at entry {i} is not finite"
            )));
        }
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::Timeline(format!(
                    "timestamps must be strictly increasing: entry {i} has {t} after {p}"
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

impl StressTimeline {
    /// Validates ordering, labels, and that alerts are in-range, ordered,
    /// non-overlapping runs of stressed entries.
    pub fn new(entries: Vec<TimelineEntry>, alerts: Vec<AlertSpan>) -> Result<Self> {
        check_timestamps(entries.iter().map(|e| e.timestamp))?;
        if let Some((i, e)) = entries.iter().enumerate().find(|(_, e)| {
            e.label > 1
                || !(0.0..=1.0).contains(&e.probability)
                || e.tlx_score.is_some_and(|s| !s.is_finite())
        }) {
            return Err(Error::Timeline(format!("entry {i} is invalid: {e:?}")));
        }
        let mut next_free = 0;
        for a in &alerts {
            if a.start_index < next_free
                || a.end_index < a.start_index
                || a.end_index >= entries.len()
            {
                return Err(Error::Timeline(format!(
                    "alert {a:?} is out of range or overlaps"
                )));
            }
            if entries[a.start_index..=a.end_index]
                .iter()
                .any(|e| e.label != 1)
            {
                return Err(Error::Timeline(format!(
                    "alert {a:?} covers a relaxed entry"
                )));
            }
            if a.start_ts != entries[a.start_index].timestamp
                || a.end_ts != entries[a.end_index].timestamp
            {
                return Err(Error::Timeline(format!(
                    "alert {a:?} timestamps disagree with entries"
                )));
            }
            next_free = a.end_index + 1;
        }
        Ok(Self { entries, alerts })
    }

    pub fn entries(&self) -> &[TimelineEntry] {
        &self.entries
    }

    pub fn alerts(&self) -> &[AlertSpan] {
        &self.alerts
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// Per-entry alert membership.
    pub fn in_alert(&self) -> Vec<bool> {
        let mut out = vec![false; self.entries.len()];
        for a in &self.alerts {
            out[a.start_index..=a.end_index]
                .iter_mut()
                .for_each(|v| *v = true);
        }
        out
    }
}

/// Maximal runs of 1s as inclusive `(start, end)` index pairs.
pub fn stressed_runs(labels: &[u8]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &l) in labels.iter().enumerate() {
        match (l == 1, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, labels.len() - 1));
    }
    runs
}

/// Replaces the alerts with every maximal stressed run of at least
/// `min_run` entries. Depends only on the labels, so it is idempotent.
pub fn apply_persistence(timeline: &StressTimeline, policy: PersistencePolicy) -> StressTimeline {
    let entries = &timeline.entries;
    let alerts = stressed_runs(&timeline.labels())
        .into_iter()
        .filter(|(s, e)| e - s + 1 >= policy.min_run)
        .map(|(s, e)| AlertSpan {
            start_index: s,
            end_index: e,
            start_ts: entries[s].timestamp,
            end_ts: entries[e].timestamp,
        })
        .collect();
    StressTimeline {
        entries: entries.clone(),
        alerts,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedRecord {
    pub timestamp: f64,
    pub record: Record,
}

/// One entry per record, in order, with no alerts yet.
pub fn run_timeline(
    model: &FusionModel,
    regressor: Option<&TlxRegressor>,
    records: &[TimedRecord],
) -> Result<StressTimeline> {
    check_timestamps(records.iter().map(|r| r.timestamp))?;
    let entries = records
        .iter()
        .map(|r| {
            let p = model.predict_stress(&r.record)?;
            Ok(TimelineEntry {
                timestamp: r.timestamp,
                probability: p.probability,
                label: p.label,
                tlx_score: regressor
                    .map(|reg| reg.predict_tlx(&r.record))
                    .transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    StressTimeline::new(entries, Vec::new())
}

#[cfg(test)]
pub(crate) fn timeline_from_labels(labels: &[u8]) -> StressTimeline {
    let entries = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| TimelineEntry {
            timestamp: i as f64,
            probability: if l == 1 { 0.8 } else { 0.2 },
            label: l,
            tlx_score: None,
        })
        .collect();
    StressTimeline::new(entries, Vec::new()).unwrap()
}
