use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cone_blowup::numerics::SampledCurve;
use serde_json::Value;

/// Round-trip float formatting for CSV cells.
pub fn cell(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator,
    I::Item: IntoIterator<Item = String>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// A curve with its stored derivatives under custom column names.
pub fn write_curve(path: &Path, header: [&str; 4], c: &SampledCurve) -> Result<()> {
    write_csv(path, &header, c.csv_rows())
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// The JSON sidecar next to a CSV file.
pub fn sidecar(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_commas() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.csv");
        write_csv(&p, &["x", "y"], [vec![cell(0.5), cell(-1e-20)]]).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "x,y\n0.5,-1e-20\n");
    }

    #[test]
    fn sidecar_swaps_extension() {
        assert_eq!(sidecar(Path::new("out/q.csv")), PathBuf::from("out/q.json"));
    }
}
