//! Result records and plot-data files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use weylap::ap_certifier::Certificate;
use weylap::weyl_metrics::ConvergenceReport;

/// Structured result; field order is fixed so equal runs give equal bytes.
#[derive(Serialize)]
pub struct Record<'a, C: Serialize, V: Serialize, R: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub value: V,
    pub report: R,
    pub grid_fingerprint: String,
    pub version: &'static str,
    pub warnings: Vec<String>,
}

pub fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Writes the whole file at once through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, text: &str) -> anyhow::Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Plot rows for the two report kinds that have one.
pub enum PlotSource<'a> {
    Convergence(&'a ConvergenceReport),
    /// `(first probe coordinate, measured quantity)` per witness.
    Certificate(&'a Certificate),
    Rows(&'a [(f64, f64)]),
}

pub fn plot_text(src: PlotSource<'_>, fingerprint: &str, columns: (&str, &str)) -> String {
    let rows: Vec<(f64, f64)> = match src {
        PlotSource::Convergence(r) => r.samples.clone(),
        PlotSource::Certificate(c) => c.witnesses.iter().map(|w| (w.probe[0], w.measured)).collect(),
        PlotSource::Rows(r) => r.to_vec(),
    };
    let mut s = format!("# {fingerprint}\n# {} {}\n", columns.0, columns.1);
    for (a, b) in rows {
        s.push_str(&format!("{a} {b}\n"));
    }
    s
}

pub fn emit_plot_data(src: PlotSource<'_>, fingerprint: &str, columns: (&str, &str), path: &Path) -> anyhow::Result<()> {
    write_atomic(path, &plot_text(src, fingerprint, columns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only() {
        let s = plot_text(PlotSource::Rows(&[]), "cfg", ("l", "value"));
        assert_eq!(s, "# cfg\n# l value\n");
    }

    #[test]
    fn constant_column_is_flat() {
        let r = ConvergenceReport::from_samples(vec![(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)], 2, 1e-3).unwrap();
        let s = plot_text(PlotSource::Convergence(&r), "cfg", ("l", "d"));
        let vals: Vec<&str> = s.lines().skip(2).map(|l| l.split(' ').nth(1).unwrap()).collect();
        assert_eq!(vals, ["1", "1", "1"]);
    }

    #[test]
    fn atomic_write_replaces() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("a.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert!(!p.with_extension("partial").exists());
    }
}
