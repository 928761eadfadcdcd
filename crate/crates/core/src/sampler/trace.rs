use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TRACE_VERSION: u32 = 1;

/// Everything recorded during a production run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub label: String,
    pub dim: usize,
    pub stages: usize,
    /// Theoretical mean number of steps per leg.
    pub l_bar: f64,
    /// Row-major `n × dim` positions after each iteration.
    pub samples: Vec<f64>,
    pub accepted: Vec<bool>,
    pub delta_h: Vec<f64>,
    pub dt: Vec<f64>,
    pub n_steps: Vec<usize>,
    /// Kick coefficient used per iteration (NaN for Verlet).
    pub b: Vec<f64>,
    pub grad_evals: u64,
    pub divergences: usize,
    /// Iterations whose dimensionless step lay beyond the coefficient table.
    pub clamped_lookups: usize,
}

impl ChainRecord {
    pub fn new(label: impl Into<String>, dim: usize, stages: usize, l_bar: f64) -> Self {
        ChainRecord {
            label: label.into(),
            dim,
            stages,
            l_bar,
            samples: Vec::new(),
            accepted: Vec::new(),
            delta_h: Vec::new(),
            dt: Vec::new(),
            n_steps: Vec::new(),
            b: Vec::new(),
            grad_evals: 0,
            divergences: 0,
            clamped_lookups: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    /// Writes the trace as CSV: a `#` metadata line, a header, one row per
    /// iteration. Floats use shortest round-trip formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "# splitting-hmc-trace version={TRACE_VERSION} label={} dim={} stages={} l_bar={} grad_evals={} divergences={} clamped_lookups={}",
            self.label, self.dim, self.stages, self.l_bar, self.grad_evals, self.divergences, self.clamped_lookups
        )
        .map_err(io)?;
        let mut header = String::from("iter,accepted,delta_h,dt,L,b");
        for j in 0..self.dim {
            header.push_str(&format!(",theta_{j}"));
        }
        writeln!(w, "{header}").map_err(io)?;
        for i in 0..self.len() {
            let mut line = format!(
                "{},{},{},{},{},{}",
                i,
                u8::from(self.accepted[i]),
                self.delta_h[i],
                self.dt[i],
                self.n_steps[i],
                self.b[i]
            );
            for x in self.sample(i) {
                line.push(',');
                line.push_str(&x.to_string());
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let mut next_line = |row: usize| -> Result<Option<String>> {
            match lines.next() {
                None => Ok(None),
                Some(Ok(l)) => Ok(Some(l)),
                Some(Err(e)) => Err(Error::Parse { row, column: 0, message: e.to_string() }),
            }
        };
        let meta = next_line(1)?.ok_or_else(|| Error::TraceFormat("empty trace file".into()))?;
        let mut rec = parse_meta(&meta)?;
        let header = next_line(2)?.ok_or_else(|| Error::TraceFormat("missing header".into()))?;
        let width = header.split(',').count();
        if width != 6 + rec.dim {
            return Err(Error::TraceFormat(format!(
                "header has {width} columns, expected {}",
                6 + rec.dim
            )));
        }
        let mut row = 2;
        while let Some(line) = next_line(row + 1)? {
            row += 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(Error::RowWidth { row, found: fields.len(), expected: width });
            }
            let num = |c: usize| -> Result<f64> {
                fields[c].parse().map_err(|_| Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("cannot parse {:?}", fields[c]),
                })
            };
            rec.accepted.push(match fields[1] {
                "1" => true,
                "0" => false,
                _ => {
                    return Err(Error::Parse { row, column: 2, message: "expected 0 or 1".into() })
                }
            });
            rec.delta_h.push(num(2)?);
            rec.dt.push(num(3)?);
            rec.n_steps.push(num(4)? as usize);
            rec.b.push(num(5)?);
            for c in 6..width {
                rec.samples.push(num(c)?);
            }
        }
        if rec.is_empty() {
            return Err(Error::TraceFormat("trace has no iterations".into()));
        }
        Ok(rec)
    }
}

fn parse_meta(line: &str) -> Result<ChainRecord> {
    let body = line
        .strip_prefix("# splitting-hmc-trace ")
        .ok_or_else(|| Error::TraceFormat("missing trace metadata line".into()))?;
    let mut rec = ChainRecord::new("", 0, 0, 0.0);
    let mut version = None;
    for kv in body.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::TraceFormat(format!("bad metadata field {kv:?}")))?;
        let bad = || Error::TraceFormat(format!("bad value for {k}: {v:?}"));
        match k {
            "version" => version = Some(v.parse::<u32>().map_err(|_| bad())?),
            "label" => rec.label = v.to_string(),
            "dim" => rec.dim = v.parse().map_err(|_| bad())?,
            "stages" => rec.stages = v.parse().map_err(|_| bad())?,
            "l_bar" => rec.l_bar = v.parse().map_err(|_| bad())?,
            "grad_evals" => rec.grad_evals = v.parse().map_err(|_| bad())?,
            "divergences" => rec.divergences = v.parse().map_err(|_| bad())?,
            "clamped_lookups" => rec.clamped_lookups = v.parse().map_err(|_| bad())?,
            _ => {}
        }
    }
    match version {
        Some(TRACE_VERSION) => {}
        Some(v) => {
            return Err(Error::TraceFormat(format!(
                "trace version {v} is not supported (expected {TRACE_VERSION})"
            )))
        }
        None => return Err(Error::TraceFormat("trace version missing".into())),
    }
    if rec.dim == 0 {
        return Err(Error::TraceFormat("trace dimension missing".into()));
    }
    Ok(rec)
}
