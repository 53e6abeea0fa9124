//! Writes `result.json`, `result.csv` and, when present, `trials.log`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::commands::ResultRecord;

pub fn write_outputs(record: &ResultRecord, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let json_path = dir.join("result.json");
    let mut text = serde_json::to_string_pretty(&record.to_json()).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(&json_path, text)?;
    written.push(json_path);

    let csv_path = dir.join("result.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(&record.table.header)?;
    for row in &record.table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    written.push(csv_path);

    for (name, contents) in &record.artifacts {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
    }

    if let Some(lines) = &record.trial_lines {
        let log_path = dir.join("trials.log");
        let mut f = io::BufWriter::new(fs::File::create(&log_path)?);
        for l in lines {
            writeln!(f, "{l}")?;
        }
        f.flush()?;
        written.push(log_path);
    }
    Ok(written)
}
