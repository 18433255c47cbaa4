//! Text record format: a `# fs=<Hz> subject=<id>` line, then a CSV table with
//! columns `time_s,ecg,ppg,sbp_ref,dbp_ref` (extra columns are ignored).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::signal::{validate_and_load, Channel, SignalError, Waveform};
use crate::synth::SynthSubject;

pub const COLUMNS: [&str; 5] = ["time_s", "ecg", "ppg", "sbp_ref", "dbp_ref"];

/// Allowed deviation of each time step from `1 / fs`, seconds.
pub const TIME_TOLERANCE_S: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error("bad header: {0}")]
    HeaderMismatch(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("record has {0} rows, need at least 2")]
    TooFewRows(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile {
    pub subject_id: String,
    pub fs: f64,
    pub time_s: Vec<f64>,
    pub ecg: Vec<f64>,
    pub ppg: Vec<f64>,
    pub sbp_ref: Vec<f64>,
    pub dbp_ref: Vec<f64>,
}

impl RecordFile {
    pub fn len(&self) -> usize {
        self.time_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_s.is_empty()
    }

    pub fn ecg_waveform(&self) -> Result<Waveform, SignalError> {
        Ok(validate_and_load(self.ecg.clone(), self.fs, Channel::Ecg)?.with_t0(self.time_s[0]))
    }

    pub fn ppg_waveform(&self) -> Result<Waveform, SignalError> {
        Ok(validate_and_load(self.ppg.clone(), self.fs, Channel::Ppg)?.with_t0(self.time_s[0]))
    }

    /// Sample index nearest to time `t`, clamped to the record.
    pub fn index_at(&self, t: f64) -> usize {
        let i = ((t - self.time_s[0]) * self.fs).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.len() - 1)
        }
    }

    /// Record of a synthetic subject. Reference columns hold each beat's
    /// values from its R-peak up to the next R-peak.
    pub fn from_synth(subject: &SynthSubject) -> RecordFile {
        let rec = &subject.record;
        let fs = rec.ppg.fs();
        let n = rec.ppg.len();
        let time_s: Vec<f64> = (0..n).map(|i| rec.ppg.time_of(i)).collect();
        let (mut sbp_ref, mut dbp_ref) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut k = 0;
        for &t in &time_s {
            while k + 1 < rec.truth.len() && t >= rec.truth[k + 1].r_peak_s {
                k += 1;
            }
            sbp_ref.push(subject.sbp[k]);
            dbp_ref.push(subject.dbp[k]);
        }
        RecordFile {
            subject_id: subject.id.clone(),
            fs,
            time_s,
            ecg: rec.ecg.samples().to_vec(),
            ppg: rec.ppg.samples().to_vec(),
            sbp_ref,
            dbp_ref,
        }
    }
}

fn parse_header(line: &str) -> Result<(f64, String), RecordError> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| RecordError::HeaderMismatch(format!("expected `# fs=<Hz> subject=<id>`, got {line:?}")))?;
    let (mut fs, mut subject) = (None, None);
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(("fs", v)) => {
                fs = Some(
                    v.parse::<f64>()
                        .ok()
                        .filter(|f| *f > 0.0 && f.is_finite())
                        .ok_or_else(|| RecordError::HeaderMismatch(format!("invalid fs {v:?}")))?,
                )
            }
            Some(("subject", v)) if !v.is_empty() => subject = Some(v.to_string()),
            _ => {}
        }
    }
    match (fs, subject) {
        (Some(f), Some(s)) => Ok((f, s)),
        (None, _) => Err(RecordError::HeaderMismatch("header lacks fs=<Hz>".into())),
        (_, None) => Err(RecordError::HeaderMismatch("header lacks subject=<id>".into())),
    }
}

/// Reads and validates a record file.
pub fn ingest(path: &Path) -> Result<RecordFile, RecordError> {
    read_record(BufReader::new(File::open(path)?))
}

pub fn read_record<R: Read>(reader: R) -> Result<RecordFile, RecordError> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let (fs, subject_id) = parse_header(&first)?;

    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    // csv counts lines from its own start, one line after the `#` header
    let file_line = |pos: Option<&csv::Position>| pos.map_or(0, |p| p.line() + 1);
    let header = csv.headers().map_err(|e| RecordError::ParseError {
        line: file_line(e.position()),
        message: e.to_string(),
    })?;
    let mut col = [0usize; 5];
    for (slot, name) in col.iter_mut().zip(COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| RecordError::MissingColumn(name.to_string()))?;
    }

    let mut rec = RecordFile {
        subject_id,
        fs,
        time_s: Vec::new(),
        ecg: Vec::new(),
        ppg: Vec::new(),
        sbp_ref: Vec::new(),
        dbp_ref: Vec::new(),
    };
    let dt = 1.0 / fs;
    for row in csv.records() {
        let row = row.map_err(|e| RecordError::ParseError { line: file_line(e.position()), message: e.to_string() })?;
        let line = file_line(row.position());
        let mut v = [0.0; 5];
        for (k, (&c, name)) in col.iter().zip(COLUMNS).enumerate() {
            let field = row.get(c).unwrap_or("");
            v[k] = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| RecordError::ParseError { line, message: format!("{name}: {field:?} is not a finite number") })?;
        }
        if let Some(&prev) = rec.time_s.last() {
            let step = v[0] - prev;
            if step <= 0.0 {
                return Err(RecordError::ParseError { line, message: format!("time {} does not increase", v[0]) });
            }
            if (step - dt).abs() > TIME_TOLERANCE_S {
                return Err(RecordError::ParseError { line, message: format!("time step {step} differs from 1/fs = {dt}") });
            }
        }
        rec.time_s.push(v[0]);
        rec.ecg.push(v[1]);
        rec.ppg.push(v[2]);
        rec.sbp_ref.push(v[3]);
        rec.dbp_ref.push(v[4]);
    }
    if rec.len() < 2 {
        return Err(RecordError::TooFewRows(rec.len()));
    }
    Ok(rec)
}

/// Writes `rec` with shortest round-trip float formatting, so ingesting the
/// file gives back identical values.
pub fn write_record<W: Write>(rec: &RecordFile, writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "# fs={} subject={}", rec.fs, rec.subject_id)?;
    writeln!(w, "{}", COLUMNS.join(","))?;
    for i in 0..rec.len() {
        writeln!(w, "{},{},{},{},{}", rec.time_s[i], rec.ecg[i], rec.ppg[i], rec.sbp_ref[i], rec.dbp_ref[i])?;
    }
    w.flush()
}

pub fn save_record(rec: &RecordFile, path: &Path) -> std::io::Result<()> {
    write_record(rec, File::create(path)?)
}
