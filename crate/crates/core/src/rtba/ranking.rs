use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SequenceRecord;
use crate::ephemeris::PlanetSet;
use crate::error::Result;

pub const RANKING_HEADER: &str = "rank,sequence,f_s_ms,min_dv_ms,mean_dv_ms,recursion_found,in_optimal_group";

/// Relative and absolute margins of the low-f_s group.
const GROUP_FACTOR: f64 = 1.3;
const GROUP_MARGIN: f64 = 5000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecord {
    /// 1-based.
    pub rank: usize,
    pub record: SequenceRecord,
    pub in_optimal_group: bool,
}

/// Sorts by f_s, then by the bodies' semi-major axes, then by the sequence
/// string, and flags the optimal group.
pub fn rank_records(system: &PlanetSet, records: &[SequenceRecord]) -> Vec<RankedRecord> {
    let axes = |r: &SequenceRecord| -> Vec<f64> {
        r.sequence.bodies().iter().map(|&b| system.get(b).map_or(f64::INFINITY, |x| x.elements.a)).collect()
    };
    let mut keyed: Vec<(Vec<f64>, String, &SequenceRecord)> =
        records.iter().map(|r| (axes(r), r.sequence.to_string(), r)).collect();
    keyed.sort_by(|a, b| {
        a.2.f_s.total_cmp(&b.2.f_s).then_with(|| lexicographic(&a.0, &b.0)).then_with(|| a.1.cmp(&b.1))
    });
    let sorted: Vec<SequenceRecord> = keyed.into_iter().map(|(_, _, r)| r.clone()).collect();
    let group = extract_optimal_group(&sorted);
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, record)| RankedRecord { rank: i + 1, in_optimal_group: group.contains(&i), record })
        .collect()
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Indices of the records with `f_s ≤ 1.3·min` or `f_s ≤ min + 5 km/s`.
pub fn extract_optimal_group(records: &[SequenceRecord]) -> Vec<usize> {
    let Some(min) = records.iter().map(|r| r.f_s).min_by(f64::total_cmp) else {
        return Vec::new();
    };
    let limit = (min * GROUP_FACTOR).max(min + GROUP_MARGIN);
    records.iter().enumerate().filter(|(_, r)| r.f_s <= limit).map(|(i, _)| i).collect()
}

pub fn write_ranking_csv<W: Write>(ranking: &[RankedRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RANKING_HEADER.split(','))?;
    for r in ranking {
        w.write_record([
            r.rank.to_string(),
            r.record.sequence.to_string(),
            r.record.f_s.to_string(),
            r.record.min_dv.to_string(),
            r.record.mean_dv.to_string(),
            r.record.recursion_found.to_string(),
            r.in_optimal_group.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per record.
pub fn write_journal<W: Write>(records: &[SequenceRecord], mut writer: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
