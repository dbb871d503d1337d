//! Comma-separated output: header row, `\n` line ends, floats at 9 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::agent::RunRecord;
use crate::error::Result;
use crate::numfmt::fmt_float;

pub const RUN_HEADER: &str = "seed,episode,steps,return,rolling100";
pub const SUMMARY_HEADER: &str = "steps,mean_rolling100,std_rolling100";

/// One aligned evaluation point across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub steps: u64,
    pub mean: f64,
    pub std: f64,
}

pub fn run_csv(records: &[RunRecord], error: Option<&str>) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RUN_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.seed,
            r.episode,
            r.steps,
            fmt_float(r.episode_return),
            fmt_float(r.rolling100)
        ));
    }
    if let Some(msg) = error {
        out.push_str(&error_marker(msg));
    }
    out
}

/// The row appended to a CSV whose run was cut short.
pub fn error_marker(msg: &str) -> String {
    format!("# error: {}\n", msg.replace(['\n', '\r'], " "))
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.steps, fmt_float(r.mean), fmt_float(r.std)));
    }
    out
}

/// Writes through a temporary sibling so readers never see half a file.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_rows_use_nine_digits() {
        let rec = RunRecord {
            seed: 3,
            episode: 0,
            steps: 100,
            episode_return: -1.0 / 3.0,
            rolling100: 2.5e-7,
        };
        let text = run_csv(&[rec], Some("step 7: nan\nloss"));
        assert_eq!(
            text,
            "seed,episode,steps,return,rolling100\n3,0,100,-0.333333333,2.5e-07\n# error: step 7: nan loss\n"
        );
    }

    #[test]
    fn empty_summary_is_header_only() {
        assert_eq!(summary_csv(&[]), "steps,mean_rolling100,std_rolling100\n");
    }
}
