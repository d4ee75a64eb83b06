//! CSV and JSON persistence for datasets, models and reports.
//!
//! A dataset directory holds `establishments.csv`, `panels.csv` and
//! `grid.csv`. Files are written to a temporary sibling and renamed into
//! place so a rerun never leaves a half-written output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::domain::{Counts, Dataset, EstablishmentRecord, OccupationPanel, Provenance, WageGrid, N_INTERVALS};
use crate::error::{Error, Result};

pub const ESTABLISHMENTS_FILE: &str = "establishments.csv";
pub const PANELS_FILE: &str = "panels.csv";
pub const GRID_FILE: &str = "grid.csv";

/// Write `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let mut tmp = PathBuf::from(path);
    tmp.set_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn parse_flag(s: &str, what: &str, line: u64) -> Result<bool> {
    match s.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::InvalidData(format!("line {line}: {what} must be 0 or 1, got {other:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, line: u64) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidData(format!("line {line}: cannot parse {what} from {s:?}")))
}

fn field<'r>(rec: &'r csv::StringRecord, headers: &csv::StringRecord, name: &str) -> Result<&'r str> {
    let j = headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::InvalidData(format!("missing column {name}")))?;
    Ok(rec.get(j).unwrap_or(""))
}

pub fn establishments_to_csv(estabs: &[EstablishmentRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["estab_id", "empl", "wage", "naics", "msa", "msacatt6", "multi", "weight", "responded"])?;
    for e in estabs {
        w.write_record([
            e.estab_id.clone(),
            e.empl.to_string(),
            e.wage.to_string(),
            e.naics.to_string(),
            e.msa.clone(),
            flag(e.msacatt6).into(),
            flag(e.multi).into(),
            e.weight.to_string(),
            flag(e.responded).into(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn establishments_from_csv<R: std::io::Read>(r: R) -> Result<Vec<EstablishmentRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |n: &str| field(&rec, &headers, n);
        out.push(EstablishmentRecord {
            estab_id: f("estab_id")?.trim().to_string(),
            empl: parse_num(f("empl")?, "empl", line)?,
            wage: parse_num(f("wage")?, "wage", line)?,
            naics: parse_num(f("naics")?, "naics", line)?,
            msa: f("msa")?.trim().to_string(),
            msacatt6: parse_flag(f("msacatt6")?, "msacatt6", line)?,
            multi: parse_flag(f("multi")?, "multi", line)?,
            weight: parse_num(f("weight")?, "weight", line)?,
            responded: parse_flag(f("responded")?, "responded", line)?,
        });
    }
    Ok(out)
}

pub fn panels_to_csv(panels: &[OccupationPanel]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["estab_id".to_string(), "soc".into(), "total".into()];
    header.extend((1..=N_INTERVALS).map(|l| format!("c{l}")));
    header.push("provenance".into());
    w.write_record(&header)?;
    for p in panels {
        let mut rec = vec![p.estab_id.clone(), p.soc.clone(), p.total.to_string()];
        match &p.counts {
            Some(c) => rec.extend(c.iter().map(u32::to_string)),
            None => rec.extend(std::iter::repeat_n(String::new(), N_INTERVALS)),
        }
        rec.push(p.provenance.as_str().into());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads panels; the provenance column is optional and defaults to observed.
pub fn panels_from_csv<R: std::io::Read>(r: R) -> Result<Vec<OccupationPanel>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let has_prov = headers.iter().any(|h| h.trim() == "provenance");
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |n: &str| field(&rec, &headers, n);
        let cells: Vec<&str> = (1..=N_INTERVALS)
            .map(|l| f(&format!("c{l}")).map(str::trim))
            .collect::<Result<_>>()?;
        let counts = if cells.iter().all(|c| c.is_empty()) {
            None
        } else {
            let mut c: Counts = [0; N_INTERVALS];
            for (slot, s) in c.iter_mut().zip(&cells) {
                *slot = parse_num(s, "interval count", line)?;
            }
            Some(c)
        };
        let provenance = if has_prov {
            let s = f("provenance")?.trim();
            Provenance::parse(s).ok_or_else(|| Error::InvalidData(format!("line {line}: unknown provenance {s:?}")))?
        } else {
            Provenance::Observed
        };
        out.push(OccupationPanel {
            estab_id: f("estab_id")?.trim().to_string(),
            soc: f("soc")?.trim().to_string(),
            total: parse_num(f("total")?, "total", line)?,
            counts,
            provenance,
        });
    }
    Ok(out)
}

pub fn grid_to_csv(grid: &WageGrid) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=N_INTERVALS).map(|l| format!("a{l}")))?;
    w.write_record(grid.lower.iter().map(f64::to_string))?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn grid_from_csv<R: std::io::Read>(r: R) -> Result<WageGrid> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let rec = rdr
        .records()
        .next()
        .ok_or_else(|| Error::InvalidData("grid.csv has no data row".into()))??;
    let mut lower = [0.0; N_INTERVALS];
    for (l, slot) in lower.iter_mut().enumerate() {
        *slot = parse_num(field(&rec, &headers, &format!("a{}", l + 1))?, "grid bound", 2)?;
    }
    WageGrid::new(lower)
}

fn open(dir: &Path, name: &str) -> Result<fs::File> {
    let path = dir.join(name);
    fs::File::open(&path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

/// Read a dataset directory. A missing `grid.csv` means the default grid.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let grid = if dir.join(GRID_FILE).exists() {
        grid_from_csv(open(dir, GRID_FILE)?)?
    } else {
        WageGrid::default()
    };
    Ok(Dataset {
        grid,
        establishments: establishments_from_csv(open(dir, ESTABLISHMENTS_FILE)?)?,
        panels: panels_from_csv(open(dir, PANELS_FILE)?)?,
    })
}

pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(ESTABLISHMENTS_FILE), &establishments_to_csv(&ds.establishments)?)?;
    write_atomic(&dir.join(PANELS_FILE), &panels_to_csv(&ds.panels)?)?;
    write_atomic(&dir.join(GRID_FILE), &grid_to_csv(&ds.grid)?)?;
    Ok(())
}
