//! File formats: PFM, PLY, raw depth, JSON intrinsics and the CSV/JSONL
//! tables consumed and produced by the command-line tool.

pub mod disparity;
pub mod pfm;
pub mod ply;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::curriculum::{BatchSchedule, DataPart};
use crate::error::{Error, Result};
use crate::eval::{OrdinalLabel, OrdinalPair};
use crate::geometry::{CameraIntrinsics, DepthMap};
use crate::sphere::RobustnessRow;
use crate::surface_normal::WindowTable;

/// Camera intrinsics plus the image size they belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsFile {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    pub width: usize,
    pub height: usize,
}

impl IntrinsicsFile {
    pub fn from_json(reader: impl Read) -> Result<Self> {
        let f: Self = serde_json::from_reader(reader).map_err(|e| Error::Malformed(format!("intrinsics: {e}")))?;
        f.camera()?;
        Ok(f)
    }

    pub fn camera(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::new(self.fx, self.fy, self.u0, self.v0)
    }

    pub fn check_dims(&self, depth: &DepthMap) -> Result<()> {
        if depth.width() != self.width || depth.height() != self.height {
            return Err(Error::DimensionMismatch(format!(
                "intrinsics are for {}x{}, depth map is {}x{}",
                self.width,
                self.height,
                depth.width(),
                depth.height()
            )));
        }
        Ok(())
    }
}

fn csv_reader(reader: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Malformed(format!("csv: {e}"))
}

/// Rows `idx_a,idx_b,weight,label` with label one of `<`, `>`, `=`.
/// A leading header row is skipped.
pub fn read_ordinal_pairs(reader: impl Read) -> Result<Vec<OrdinalPair>> {
    let mut pairs = Vec::new();
    for (row, rec) in csv_reader(reader).records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 4 {
            return Err(Error::Malformed(format!("pair row {row}: expected 4 fields, got {}", rec.len())));
        }
        let parsed = (rec[0].parse::<usize>(), rec[1].parse::<usize>(), rec[2].parse::<f64>());
        let (Ok(a), Ok(b), Ok(w)) = parsed else {
            if row == 0 {
                continue;
            }
            return Err(Error::Malformed(format!("pair row {row}: bad numeric field")));
        };
        let label = OrdinalLabel::from_symbol(&rec[3])
            .ok_or_else(|| Error::Malformed(format!("pair row {row}: bad label {:?}", &rec[3])))?;
        pairs.push(OrdinalPair { idx_a: a, idx_b: b, weight: w, label });
    }
    Ok(pairs)
}

/// Rows `sample_id,score`. Returns the ids and the part built from the scores.
pub fn read_part_scores(part_id: &str, reader: impl Read) -> Result<(Vec<String>, DataPart)> {
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    for (row, rec) in csv_reader(reader).records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::Malformed(format!("score row {row}: expected 2 fields, got {}", rec.len())));
        }
        match rec[1].parse::<f64>() {
            Ok(s) => {
                ids.push(rec[0].to_string());
                scores.push(s);
            }
            Err(_) if row == 0 => continue,
            Err(_) => return Err(Error::Malformed(format!("score row {row}: bad score {:?}", &rec[1]))),
        }
    }
    let part = DataPart::new(part_id, scores)?;
    Ok((ids, part))
}

#[derive(Serialize)]
struct ScheduleRecord<'a> {
    iter: usize,
    step: usize,
    subset_sizes: &'a [usize],
    batch: Vec<Vec<&'a str>>,
}

/// One JSON object per iteration, with sample indices replaced by ids.
pub fn write_schedule_jsonl(mut writer: impl Write, schedule: &BatchSchedule, ids: &[Vec<String>]) -> Result<()> {
    for it in &schedule.iterations {
        let batch = it
            .batch
            .iter()
            .zip(ids)
            .map(|(b, part_ids)| b.iter().map(|&i| part_ids[i].as_str()).collect())
            .collect();
        let rec = ScheduleRecord { iter: it.iter, step: it.step, subset_sizes: &it.subset_sizes, batch };
        serde_json::to_writer(&mut writer, &rec).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(writer)?;
    }
    Ok(())
}

pub fn write_robustness_csv(mut writer: impl Write, rows: &[RobustnessRow]) -> Result<()> {
    writeln!(writer, "sigma,vn_mean_deg,sn_mean_deg")?;
    for r in rows {
        writeln!(writer, "{},{},{}", r.sigma, r.vn_mean_deg, r.sn_mean_deg)?;
    }
    Ok(())
}

pub fn write_window_table_csv(mut writer: impl Write, table: &WindowTable) -> Result<()> {
    let header: Vec<String> = table.windows.iter().map(|w| format!("i={w}")).collect();
    writeln!(writer, "window,{}", header.join(","))?;
    for (w, row) in table.windows.iter().zip(&table.mean_deg) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(writer, "i={w},{}", cells.join(","))?;
    }
    Ok(())
}
