//! LIBSVM ingestion and CSV trace emission.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::optimizers::TraceRecord;

/// Binary classification data in compressed sparse row form, 0-based
/// feature indices, labels in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    row_ptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    /// Builds a dataset from per-row `(index, value)` lists.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::usage(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, row) in rows.into_iter().enumerate() {
            let mut prev = None;
            for (j, v) in row {
                if j >= dim {
                    return Err(Error::usage(format!(
                        "row {r}: feature index {j} out of range for dimension {dim}"
                    )));
                }
                if prev.is_some_and(|p| j <= p) {
                    return Err(Error::usage(format!(
                        "row {r}: feature indices must be strictly increasing"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::usage(format!("row {r}: non-finite feature value")));
                }
                prev = Some(j);
                indices.push(j);
                values.push(v);
            }
            row_ptr.push(indices.len());
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::usage(format!("label {bad} is not in {{0, 1}}")));
        }
        Ok(Self {
            dim,
            row_ptr,
            indices,
            values,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        f64::from(self.labels[i])
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Sparse row `i` as parallel index and value slices.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    #[inline]
    pub fn dot_row(&self, i: usize, w: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&j, v)| v * w[j]).sum()
    }

    /// `out += alpha * x_i`
    #[inline]
    pub fn add_row(&self, i: usize, alpha: f64, out: &mut [f64]) {
        let (idx, val) = self.row(i);
        for (&j, v) in idx.iter().zip(val) {
            out[j] += alpha * v;
        }
    }

    /// Divides every feature column by its largest absolute value.
    pub fn scale_max_abs(&mut self) {
        let mut max_abs = vec![0.0_f64; self.dim];
        for (&j, v) in self.indices.iter().zip(&self.values) {
            max_abs[j] = max_abs[j].max(v.abs());
        }
        for (&j, v) in self.indices.iter().zip(self.values.iter_mut()) {
            if max_abs[j] > 0.0 {
                *v /= max_abs[j];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Feature dimension; defaults to the largest index seen.
    pub dim: Option<usize>,
    /// Swap the `{0, 1}` labels after mapping.
    pub flip_labels: bool,
    /// Per-feature max-abs scaling after parsing.
    pub scale_features: bool,
}

const LABEL_SETS: [[f64; 2]; 3] = [[0.0, 1.0], [-1.0, 1.0], [1.0, 2.0]];

fn mappable_set(seen: &[f64]) -> Option<usize> {
    LABEL_SETS
        .iter()
        .position(|set| seen.iter().all(|y| set.contains(y)))
}

/// Reads LIBSVM text: `label idx:val idx:val ...` with 1-based strictly
/// increasing indices. Labels from `{0,1}`, `{-1,+1}` or `{1,2}` are mapped
/// to `{0,1}`, smaller label to 0. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R, options: ParseOptions) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    let mut seen_labels: Vec<f64> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_ascii_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(Error::parse(
                line_no,
                format!("invalid label `{label_tok}`"),
            ));
        }
        if !seen_labels.contains(&label) {
            seen_labels.push(label);
            if mappable_set(&seen_labels).is_none() {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "label {label} cannot be mapped to {{0, 1}} together with {seen_labels:?}"
                    ),
                ));
            }
        }

        let mut row = Vec::new();
        let mut prev: Option<usize> = None;
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("malformed feature `{tok}`")))?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid feature index `{idx_s}`")))?;
            if idx == 0 {
                return Err(Error::parse(line_no, "feature indices are 1-based"));
            }
            let val: f64 = val_s
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid feature value `{val_s}`")))?;
            if !val.is_finite() {
                return Err(Error::parse(
                    line_no,
                    format!("non-finite feature value `{val_s}`"),
                ));
            }
            match prev {
                Some(p) if idx == p => {
                    return Err(Error::parse(
                        line_no,
                        format!("duplicate feature index {idx}"),
                    ))
                }
                Some(p) if idx < p => {
                    return Err(Error::parse(
                        line_no,
                        format!("feature index {idx} after {p}: indices must increase"),
                    ))
                }
                _ => {}
            }
            prev = Some(idx);
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        raw_labels.push(label);
    }

    let dim = match options.dim {
        Some(d) if d < max_index => {
            return Err(Error::usage(format!(
                "dimension override {d} is smaller than the largest feature index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index,
    };

    let set = mappable_set(&seen_labels).unwrap_or(0);
    let positive = LABEL_SETS[set][1];
    let labels = raw_labels
        .iter()
        .map(|&y| u8::from((y == positive) != options.flip_labels))
        .collect();

    let mut data = Dataset::from_rows(dim, rows, labels)?;
    if options.scale_features {
        data.scale_max_abs();
    }
    Ok(data)
}

pub const TRACE_HEADER: &str =
    "iter,props,loss,grad_norm,radius_or_sigma,rho,success,step_norm,inner_iters,lambda_hat,wall_ms";

/// Round-trip float rendering with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Writes the trace as CSV with LF line endings. Wall-clock times are only
/// written when `include_wall_time` is set; otherwise the column is empty so
/// that repeated runs produce identical files.
pub fn write_trace_csv<W: Write>(
    trace: &[TraceRecord],
    mut sink: W,
    include_wall_time: bool,
) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::usage("cannot write an empty trace"));
    }
    writeln!(sink, "{TRACE_HEADER}")?;
    for r in trace {
        let wall = if include_wall_time {
            format_float(r.wall_ms)
        } else {
            String::new()
        };
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.props,
            format_float(r.loss),
            format_float(r.grad_norm),
            format_float(r.radius_or_sigma),
            format_opt(r.rho),
            u8::from(r.success()),
            format_opt(r.step_norm),
            r.inner_iterations,
            format_opt(r.lambda_hat),
            wall,
        )?;
    }
    sink.flush()?;
    Ok(())
}
