use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;

use super::{AgentKind, GroundTruth, SynthError};
use crate::{LbsLog, Uid, WEEK_HOURS};

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Writes logs as JSON Lines; a `.gz` extension selects gzip.
pub fn write_logs(path: &Path, logs: &[LbsLog]) -> Result<(), SynthError> {
    let file = BufWriter::new(File::create(path)?);
    let mut out: Box<dyn Write> = if is_gz(path) {
        Box::new(GzEncoder::new(file, Compression::fast()))
    } else {
        Box::new(file)
    };
    for log in logs {
        serde_json::to_writer(&mut out, log)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSON Lines log file, gzip-compressed if it ends in `.gz`.
/// Blank lines are skipped.
pub fn read_logs(path: &Path) -> Result<Vec<LbsLog>, SynthError> {
    let file = File::open(path)?;
    let input: Box<dyn Read> = if is_gz(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let mut logs = Vec::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        logs.push(serde_json::from_str(&line)?);
    }
    Ok(logs)
}

/// `hospital_id,week,hour_of_week,count`, one row per hospital-hour.
pub fn write_truth_csv(path: &Path, truth: &GroundTruth) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["hospital_id", "week", "hour_of_week", "count"])?;
    for (id, series) in truth.hospital_ids.iter().zip(&truth.counts) {
        for (h, count) in series.iter().enumerate() {
            w.write_record([
                id.to_string(),
                (h / WEEK_HOURS).to_string(),
                (h % WEEK_HOURS).to_string(),
                count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Label {
    uid: Uid,
    kind: AgentKind,
}

pub fn write_labels_jsonl(path: &Path, truth: &GroundTruth) -> Result<(), SynthError> {
    let mut out = BufWriter::new(File::create(path)?);
    for &(uid, kind) in &truth.labels {
        serde_json::to_writer(&mut out, &Label { uid, kind })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
