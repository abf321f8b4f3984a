//! Plain-text sampled functions.
//!
//! ```text
//! # comments and blank lines are ignored
//! dim 2
//! axis 0 -1.0 1.0 21
//! axis 1 0.0 2.0 11
//! arity 1
//! kind real            # or complex: each value is a `re im` pair
//! data
//! <one row per sample, row-major, last axis fastest>
//! ```

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use weylap::function_model::{AxisBreaks, FunctionHandle};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("{path}: line {line}: {msg}")]
    Line { path: String, line: usize, msg: String },
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    fn node(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFile {
    pub axes: Vec<Axis>,
    pub arity: usize,
    pub complex: bool,
    /// `samples[row][component]`, row-major with the last axis fastest.
    pub samples: Vec<Vec<Complex64>>,
}

/// Sampled function plus a counter of evaluations outside the box.
#[derive(Clone)]
pub struct Ingested {
    pub handle: FunctionHandle,
    pub grid: Arc<GridFile>,
    pub outside: Arc<AtomicUsize>,
}

impl Ingested {
    pub fn outside_hits(&self) -> usize {
        self.outside.load(Ordering::Relaxed)
    }
}

fn strip(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub fn parse(text: &str, path: &str) -> Result<GridFile, GridError> {
    let err = |line: usize, msg: String| GridError::Line { path: path.to_string(), line, msg };
    let num = |line: usize, tok: &str, what: &str| -> Result<f64, GridError> {
        tok.parse::<f64>().map_err(|_| err(line, format!("cannot parse {what} `{tok}`")))
    };
    let mut dim: Option<usize> = None;
    let mut axes: Vec<Option<Axis>> = Vec::new();
    let mut arity = 1usize;
    let mut complex = false;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip(l))).filter(|(_, l)| !l.is_empty());
    let mut data_line = None;
    for (no, line) in lines.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "dim" => {
                let n: usize = toks.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| err(no, "expected `dim <n>`".into()))?;
                if n == 0 {
                    return Err(err(no, "dimension must be at least 1".into()));
                }
                dim = Some(n);
                axes = vec![None; n];
            }
            "axis" => {
                let n = dim.ok_or_else(|| err(no, "`axis` before `dim`".into()))?;
                if toks.len() != 5 {
                    return Err(err(no, "expected `axis <i> <lo> <hi> <count>`".into()));
                }
                let i: usize = toks[1].parse().map_err(|_| err(no, format!("bad axis index `{}`", toks[1])))?;
                if i >= n {
                    return Err(err(no, format!("axis index {i} out of range for dim {n}")));
                }
                let (lo, hi) = (num(no, toks[2], "axis lower end")?, num(no, toks[3], "axis upper end")?);
                let count: usize = toks[4].parse().map_err(|_| err(no, format!("bad sample count `{}`", toks[4])))?;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) || count < 2 {
                    return Err(err(no, "axis needs finite lo < hi and at least 2 samples".into()));
                }
                axes[i] = Some(Axis { lo, hi, count });
            }
            "arity" => {
                arity = toks
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .filter(|a| *a >= 1)
                    .ok_or_else(|| err(no, "expected `arity <k>` with k >= 1".into()))?;
            }
            "kind" => {
                complex = match toks.get(1) {
                    Some(&"real") => false,
                    Some(&"complex") => true,
                    _ => return Err(err(no, "expected `kind real` or `kind complex`".into())),
                };
            }
            "data" => {
                data_line = Some(no);
                break;
            }
            other => return Err(err(no, format!("unknown header keyword `{other}`"))),
        }
    }
    let Some(data_at) = data_line else {
        return Err(GridError::File { path: path.into(), msg: "missing `data` line".into() });
    };
    if dim.is_none() {
        return Err(err(data_at, "missing `dim` before data".into()));
    }
    let axes = axes
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| err(data_at, format!("axis {i} is not declared"))))
        .collect::<Result<Vec<Axis>, _>>()?;
    let expected: usize = axes.iter().map(|a| a.count).product();
    let per_row = if complex { 2 * arity } else { arity };
    let mut samples = Vec::with_capacity(expected);
    for (no, line) in lines {
        let vals = line
            .split_whitespace()
            .map(|t| num(no, t, "sample"))
            .collect::<Result<Vec<f64>, _>>()?;
        if vals.len() != per_row {
            return Err(err(no, format!("expected {per_row} values per row, found {}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(err(no, format!("non-finite sample in row {}", samples.len())));
        }
        let row: Vec<Complex64> = if complex {
            vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
        } else {
            vals.iter().map(|v| Complex64::new(*v, 0.0)).collect()
        };
        samples.push(row);
    }
    if samples.len() != expected {
        return Err(GridError::File {
            path: path.into(),
            msg: format!("sample count mismatch: expected {expected} rows, found {}", samples.len()),
        });
    }
    Ok(GridFile { axes, arity, complex, samples })
}

impl GridFile {
    /// Multilinear interpolation inside the box; `None` outside.
    pub fn interpolate(&self, t: &[f64], out: &mut [Complex64]) -> bool {
        let n = self.axes.len();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for (i, a) in self.axes.iter().enumerate() {
            if !(t[i] >= a.lo && t[i] <= a.hi) {
                return false;
            }
            let h = (a.hi - a.lo) / (a.count - 1) as f64;
            let s = (t[i] - a.lo) / h;
            let k = (s.floor() as usize).min(a.count - 2);
            base[i] = k;
            frac[i] = s - k as f64;
        }
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0usize;
            for (i, a) in self.axes.iter().enumerate() {
                let bit = (corner >> i) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                idx = idx * a.count + base[i] + bit;
            }
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(&self.samples[idx]) {
                    *o += v * w;
                }
            }
        }
        true
    }

    pub fn node(&self, axis: usize, i: usize) -> f64 {
        self.axes[axis].node(i)
    }
}

/// Reads a grid file into a handle that is 0 outside the declared box.
pub fn ingest_grid(path: &Path) -> Result<Ingested, GridError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| GridError::File { path: name.clone(), msg: e.to_string() })?;
    let g = Arc::new(parse(&text, &name)?);
    Ok(to_handle(g, &name))
}

pub fn to_handle(g: Arc<GridFile>, label: &str) -> Ingested {
    let outside = Arc::new(AtomicUsize::new(0));
    let (gc, oc) = (g.clone(), outside.clone());
    let sup = g.samples.iter().map(|r| weylap::function_model::euclid(r)).fold(0.0, f64::max);
    let breaks = g.axes.iter().map(|a| AxisBreaks::at(vec![a.lo, a.hi])).collect();
    let handle = FunctionHandle::new(g.axes.len(), g.arity, format!("grid:{label}"), move |t, _x, out| {
        if !gc.interpolate(t, out) {
            oc.fetch_add(1, Ordering::Relaxed);
            out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        }
    })
    .with_sup_bound(sup)
    .with_breaks(breaks);
    Ingested { handle, grid: g, outside }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_file(count: usize) -> String {
        let mut s = format!("# sin on [0, 2pi]\ndim 1\naxis 0 0 {} {count}\narity 1\nkind real\ndata\n", 2.0 * PI);
        for i in 0..count {
            s.push_str(&format!("{}\n", (2.0 * PI * i as f64 / (count - 1) as f64).sin()));
        }
        s
    }

    #[test]
    fn sine_interpolates() {
        let g = Arc::new(parse(&sine_file(201), "sin").unwrap());
        let h = to_handle(g, "sin");
        let v = h.handle.value(&[PI / 2.0]).re;
        // Linear interpolation error ≤ h²/8·max|f''|.
        let step = 2.0 * PI / 200.0;
        assert!((v - 1.0).abs() <= step * step / 8.0 + 1e-15);
        assert_eq!(h.outside_hits(), 0);
    }

    #[test]
    fn count_mismatch_names_both_counts() {
        let text = sine_file(11).replace("axis 0 0 6.283185307179586 11", "axis 0 0 6.283185307179586 12");
        let e = parse(&text, "f").unwrap_err().to_string();
        assert!(e.contains("expected 12") && e.contains("found 11"), "{e}");
    }

    #[test]
    fn non_finite_is_rejected_with_row() {
        let text = "dim 1\naxis 0 0 1 3\ndata\n1\nNaN\n2\n";
        let e = parse(text, "f").unwrap_err();
        assert_eq!(e, GridError::Line { path: "f".into(), line: 5, msg: "non-finite sample in row 1".into() });
    }

    #[test]
    fn outside_is_zero_with_flag() {
        let text = "dim 2\naxis 0 0 1 2\naxis 1 0 1 2\narity 1\nkind complex\ndata\n1 0\n2 0\n3 0\n4 1\n";
        let h = to_handle(Arc::new(parse(text, "f").unwrap()), "f");
        assert_eq!(h.handle.value(&[2.0, 0.5]), Complex64::new(0.0, 0.0));
        assert_eq!(h.outside_hits(), 1);
        // Bilinear centre value is the corner average.
        assert_eq!(h.handle.value(&[0.5, 0.5]), Complex64::new(2.5, 0.25));
        assert_eq!(h.handle.value(&[1.0, 0.0]), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn header_errors_carry_lines() {
        let e = parse("dim 1\naxis 3 0 1 2\ndata\n", "f").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = parse("dim 1\nfoo\n", "f").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("foo"));
        let e = parse("dim 1\naxis 0 0 1 2\ndata\n1 2\n3\n", "f").unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");
    }
}
