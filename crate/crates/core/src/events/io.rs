//! CSV event files with a JSON sidecar.
//!
//! `events.csv` holds a `t_us,x,y,p` header and one event per row;
//! `events.json` next to it carries `{"width":W,"height":H,"duration_us":N}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Event, EventStream, Polarity, SENSOR_SIZE};

pub const CSV_HEADER: &str = "t_us,x,y,p";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub width: u16,
    pub height: u16,
    pub duration_us: u64,
}

/// Sidecar path for an event CSV: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_events(stream: &EventStream, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for e in stream.events() {
        writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.p.sign())?;
    }
    out.flush()?;
    let meta = StreamMeta {
        width: stream.width(),
        height: stream.height(),
        duration_us: stream.duration_us(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_string(&meta)?)?;
    Ok(())
}

/// Reads an event CSV. Without a sidecar the geometry defaults to 128x128 and
/// the duration to the last timestamp.
pub fn read_events(path: &Path) -> Result<EventStream> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let sidecar = sidecar_path(path);
    let meta: Option<StreamMeta> = if sidecar.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?)
    } else {
        None
    };
    let (width, height) = meta
        .map(|m| (m.width, m.height))
        .unwrap_or((SENSOR_SIZE, SENSOR_SIZE));

    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["t_us", "x", "y", "p"] {
        return Err(parse_err(1, format!("expected header `{CSV_HEADER}`")));
    }

    let mut events = Vec::new();
    let mut last_t = 0u64;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, got {}", record.len())));
        }
        let field = |i: usize, name: &str| -> Result<i64> {
            record[i]
                .parse::<i64>()
                .map_err(|_| parse_err(line, format!("invalid {name} `{}`", &record[i])))
        };
        let t = field(0, "t_us")?;
        let x = field(1, "x")?;
        let y = field(2, "y")?;
        let p = field(3, "p")?;
        if t < 0 {
            return Err(parse_err(line, format!("negative timestamp {t}")));
        }
        let t = t as u64;
        if t < last_t {
            return Err(parse_err(line, format!("timestamp {t} precedes {last_t}")));
        }
        if x < 0 || x >= width as i64 || y < 0 || y >= height as i64 {
            return Err(parse_err(
                line,
                format!("coordinate ({x}, {y}) outside {width}x{height} sensor"),
            ));
        }
        let p = Polarity::from_sign(p)
            .ok_or_else(|| parse_err(line, format!("polarity {p} not in {{-1, 1}}")))?;
        if let Some(m) = meta {
            if t > m.duration_us {
                return Err(parse_err(
                    line,
                    format!("timestamp {t} beyond duration {}", m.duration_us),
                ));
            }
        }
        last_t = t;
        events.push(Event::new(x as u16, y as u16, t, p));
    }
    let duration_us = meta.map(|m| m.duration_us).unwrap_or(last_t);
    EventStream::new(width, height, duration_us, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("ev.csv");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn header_only_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let s = read_events(&write(dir.path(), "t_us,x,y,p\n")).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.duration_us(), 0);
    }

    #[test]
    fn zero_polarity_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "t_us,x,y,p\n1,0,0,1\n2,3,4,0\n");
        match read_events(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unsorted_and_out_of_range_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "t_us,x,y,p\n5,0,0,1\n4,0,0,1\n");
        assert!(matches!(read_events(&path), Err(Error::Parse { line: 3, .. })));
        let path = write(dir.path(), "t_us,x,y,p\n5,128,0,1\n");
        assert!(matches!(read_events(&path), Err(Error::Parse { line: 2, .. })));
        let path = write(dir.path(), "t_us,x,y,p\n5,a,0,1\n");
        assert!(matches!(read_events(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            read_events(Path::new("/nonexistent/ev.csv")),
            Err(Error::MissingInput(_))
        ));
    }
}
