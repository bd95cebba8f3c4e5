//! Experiment reports: hex-float encoding, the CSV and JSON writers, and a
//! validating CSV reader.
//!
//! CSV layout (schema version 1):
//!
//! ```text
//! # sarith-report v1
//! # key=value                 metadata, one per line
//! ## samples
//! kind,mode,n,rep,idx,value_hex,value_dec,wall_ns
//! ...
//! ## summary
//! kind,mode,n,idx,reps,mean_hex,mean_dec,std_dec,sig_digits,ref64_hex,ref64_dec,rn_hex,rn_dec,rn_bitwise_equal
//! ...
//! ## timings                  only with --timings
//! op,format,ops_per_run,runs,<mode>_median_ns,...
//! ```
//!
//! Every float is written twice: a hex-float column that round-trips
//! bitwise and a shortest round-trip decimal column for reading.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpcore::{pow2, FormatName};
use crate::kernels::KernelSpec;
use crate::rounding::RoundingMode;

pub const SCHEMA_LINE: &str = "# sarith-report v1";
pub const SAMPLES_HEADER: &str = "kind,mode,n,rep,idx,value_hex,value_dec,wall_ns";
pub const SUMMARY_HEADER: &str =
    "kind,mode,n,idx,reps,mean_hex,mean_dec,std_dec,sig_digits,ref64_hex,ref64_dec,rn_hex,rn_dec,rn_bitwise_equal";
pub const TIMINGS_PREFIX: &str = "op,format,ops_per_run,runs";

/// `[-]0x1.<hex>p<exp>` for normals, `[-]0x0.<hex>p-1022` for subnormals,
/// `[-]0x0p+0` for zeros, `inf`, `-inf`, `nan`, or `nan(0x<bits>)` for a
/// non-canonical NaN.
pub fn to_hex_float(x: f64) -> String {
    let bits = x.to_bits();
    if x.is_nan() {
        return if bits == f64::NAN.to_bits() { "nan".to_string() } else { format!("nan(0x{bits:016x})") };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    if biased == 0 && fraction == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let digits = format!("{fraction:013x}");
    let digits = digits.trim_end_matches('0');
    let dot = if digits.is_empty() { "" } else { "." };
    format!("{sign}0x{lead}{dot}{digits}p{exp:+}")
}

/// Parses the forms written by [`to_hex_float`], plus any hex float whose
/// value is exactly representable in binary64 (`0x3p-2`, `0x.8p1`, ...).
pub fn parse_hex_float(s: &str) -> Option<f64> {
    let s = s.trim();
    match s {
        "nan" => return Some(f64::NAN),
        "inf" | "+inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    if let Some(inner) = s.strip_prefix("nan(0x").and_then(|r| r.strip_suffix(')')) {
        let bits = u64::from_str_radix(inner, 16).ok()?;
        let x = f64::from_bits(bits);
        return x.is_nan().then_some(x);
    }
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X"))?;
    let (mantissa, exp) = body.split_once(['p', 'P'])?;
    let exp: i32 = exp.parse().ok()?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let mut sig: u128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        let d = c.to_digit(16)?;
        if sig >> 124 != 0 {
            return None;
        }
        sig = (sig << 4) | d as u128;
    }
    let signed = |v: f64| if negative { -v } else { v };
    if sig == 0 {
        return Some(signed(0.0));
    }
    // value = sig * 2^e with sig odd
    let mut e = exp.checked_sub(4 * frac_part.len() as i32)?;
    let tz = sig.trailing_zeros();
    sig >>= tz;
    e = e.checked_add(tz as i32)?;
    let bitlen = 128 - sig.leading_zeros() as i32;
    if bitlen > 53 || e < -1074 || bitlen + e > 1024 {
        return None;
    }
    let m = sig as f64;
    let v = if e < -1022 { m * pow2::<f64>(-1022) * pow2::<f64>(e + 1022) } else { m * pow2::<f64>(e) };
    Some(signed(v))
}

/// Shortest decimal that parses back to `x`.
pub fn to_decimal(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:?}")
    }
}

pub fn parse_decimal(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidFormat(s.to_string())),
        }
    }
}

/// Everything needed to replay an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    /// Problem sizes; for the harmonic series, one per decade.
    pub sizes: Vec<usize>,
    pub modes: Vec<RoundingMode>,
    pub reps: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub output_format: OutputFormat,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Empty("reps must be at least 1"));
        }
        if self.modes.is_empty() {
            return Err(Error::Empty("at least one mode is required"));
        }
        if self.sizes.is_empty() {
            return Err(Error::Empty("at least one problem size is required"));
        }
        for &mode in &self.modes {
            let mut spec = self.kernel.clone();
            spec.mode = mode;
            spec.validate()?;
        }
        Ok(())
    }

    /// Single-line JSON.
    pub fn render(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// One output element of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub kind: String,
    pub mode: String,
    pub n: usize,
    pub rep: usize,
    pub idx: usize,
    pub value: f64,
    pub wall_ns: u64,
}

/// Per `(kind, mode, n, idx)` statistics across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub kind: String,
    pub mode: String,
    pub n: usize,
    pub idx: usize,
    pub reps: usize,
    pub mean: f64,
    pub std: f64,
    pub sig_digits: f64,
    /// Round-to-nearest result computed in binary64.
    pub ref64: f64,
    /// Round-to-nearest result in the working format.
    pub rn: f64,
    /// Every repetition equals `rn` bitwise.
    pub rn_bitwise_equal: bool,
}

/// Median nanoseconds per operation for one operator under several modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub op: String,
    pub format: String,
    pub ops_per_run: usize,
    pub runs: usize,
    pub median_ns: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    /// Ordered `key=value` metadata.
    pub meta: Vec<(String, String)>,
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryRow>,
    /// Mode names heading the timing columns.
    pub timing_modes: Vec<String>,
    pub timings: Vec<TimingRow>,
}

impl Report {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(SCHEMA_LINE);
        out.push('\n');
        for (k, v) in &self.meta {
            let v = v.replace('\n', " ");
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("## samples\n");
        out.push_str(SAMPLES_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.kind,
                r.mode,
                r.n,
                r.rep,
                r.idx,
                to_hex_float(r.value),
                to_decimal(r.value),
                r.wall_ns
            );
        }
        out.push_str("## summary\n");
        out.push_str(SUMMARY_HEADER);
        out.push('\n');
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.kind,
                s.mode,
                s.n,
                s.idx,
                s.reps,
                to_hex_float(s.mean),
                to_decimal(s.mean),
                to_decimal(s.std),
                to_decimal(s.sig_digits),
                to_hex_float(s.ref64),
                to_decimal(s.ref64),
                to_hex_float(s.rn),
                to_decimal(s.rn),
                s.rn_bitwise_equal
            );
        }
        if !self.timings.is_empty() {
            out.push_str("## timings\n");
            out.push_str(TIMINGS_PREFIX);
            for m in &self.timing_modes {
                let _ = write!(out, ",{m}_median_ns");
            }
            out.push('\n');
            for t in &self.timings {
                let _ = write!(out, "{},{},{},{}", t.op, t.format, t.ops_per_run, t.runs);
                for v in &t.median_ns {
                    let _ = write!(out, ",{}", to_decimal(*v));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let meta: serde_json::Map<String, serde_json::Value> =
            self.meta.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
        let rows: Vec<JsonRow> = self.rows.iter().map(JsonRow::from).collect();
        let entries: Vec<JsonSummary> = self.summary.iter().map(JsonSummary::from).collect();
        let timings: Vec<serde_json::Value> = self
            .timings
            .iter()
            .map(|t| {
                let mut obj = serde_json::Map::new();
                obj.insert("op".into(), t.op.clone().into());
                obj.insert("format".into(), t.format.clone().into());
                obj.insert("ops_per_run".into(), t.ops_per_run.into());
                obj.insert("runs".into(), t.runs.into());
                for (m, v) in self.timing_modes.iter().zip(&t.median_ns) {
                    obj.insert(format!("{m}_median_ns"), to_decimal(*v).into());
                }
                obj.into()
            })
            .collect();
        let mut summary = serde_json::Map::new();
        summary.insert("entries".into(), serde_json::to_value(entries).expect("summary serializes"));
        if !timings.is_empty() {
            summary.insert("timings".into(), timings.into());
        }
        let doc = serde_json::json!({
            "schema": "sarith-report v1",
            "meta": meta,
            "rows": rows,
            "summary": summary,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// Writes the report in one ordered pass.
    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<()> {
        std::fs::write(path, self.render(format)).map_err(|e| Error::io(path, e))
    }

    /// Parses and validates a CSV report; every float pair must agree
    /// bitwise.
    pub fn parse_csv(text: &str, path: &Path) -> Result<Report> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l == SCHEMA_LINE => {}
            _ => return Err(Error::parse(path, 1, format!("expected `{SCHEMA_LINE}`"))),
        }

        #[derive(PartialEq)]
        enum Section {
            Meta,
            Samples,
            Summary,
            Timings,
        }
        let mut report = Report::default();
        let mut section = Section::Meta;
        let mut expect_header = false;
        let mut seen_summary = false;

        for (no, line) in lines {
            if let Some(name) = line.strip_prefix("## ") {
                let next = match (name, &section) {
                    ("samples", Section::Meta) => Section::Samples,
                    ("summary", Section::Samples) => Section::Summary,
                    ("timings", Section::Summary) => Section::Timings,
                    _ => return Err(Error::parse(path, no, format!("unexpected section `{name}`"))),
                };
                seen_summary |= next == Section::Summary;
                section = next;
                expect_header = true;
                continue;
            }
            if expect_header {
                expect_header = false;
                let ok = match section {
                    Section::Samples => line == SAMPLES_HEADER,
                    Section::Summary => line == SUMMARY_HEADER,
                    Section::Timings => {
                        let rest = line.strip_prefix(TIMINGS_PREFIX).unwrap_or("\u{0}");
                        report.timing_modes = rest
                            .split(',')
                            .skip(1)
                            .map(|c| c.strip_suffix("_median_ns").map(str::to_string))
                            .collect::<Option<Vec<_>>>()
                            .unwrap_or_default();
                        rest.starts_with(',') && !report.timing_modes.is_empty()
                    }
                    Section::Meta => unreachable!(),
                };
                if !ok {
                    return Err(Error::parse(path, no, "column header does not match the schema"));
                }
                continue;
            }
            match section {
                Section::Meta => {
                    let kv = line
                        .strip_prefix("# ")
                        .and_then(|l| l.split_once('='))
                        .ok_or_else(|| Error::parse(path, no, "expected `# key=value` metadata"))?;
                    report.meta.push((kv.0.to_string(), kv.1.to_string()));
                }
                Section::Samples => report.rows.push(parse_sample_row(line, path, no)?),
                Section::Summary => report.summary.push(parse_summary_row(line, path, no)?),
                Section::Timings => {
                    let f: Vec<&str> = line.split(',').collect();
                    if f.len() != 4 + report.timing_modes.len() {
                        return Err(Error::parse(
                            path,
                            no,
                            format!("expected {} fields", 4 + report.timing_modes.len()),
                        ));
                    }
                    report.timings.push(TimingRow {
                        op: f[0].to_string(),
                        format: f[1].to_string(),
                        ops_per_run: parse_field(f[2], "ops_per_run", path, no)?,
                        runs: parse_field(f[3], "runs", path, no)?,
                        median_ns: f[4..]
                            .iter()
                            .map(|v| {
                                parse_decimal(v).ok_or_else(|| Error::parse(path, no, format!("bad timing `{v}`")))
                            })
                            .collect::<Result<_>>()?,
                    });
                }
            }
        }
        if !seen_summary || expect_header {
            return Err(Error::parse(path, text.lines().count().max(1), "report is truncated"));
        }
        Ok(report)
    }

    pub fn read_csv(path: &Path) -> Result<Report> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Report::parse_csv(&text, path)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str, path: &Path, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::parse(path, line, format!("bad {name} `{s}`")))
}

fn parse_float_pair(hex: &str, dec: &str, name: &str, path: &Path, line: usize) -> Result<f64> {
    let v = parse_hex_float(hex).ok_or_else(|| Error::parse(path, line, format!("bad hex float {name} `{hex}`")))?;
    let d = parse_decimal(dec).ok_or_else(|| Error::parse(path, line, format!("bad decimal {name} `{dec}`")))?;
    let agree = if v.is_nan() { d.is_nan() } else { v.to_bits() == d.to_bits() };
    if !agree {
        return Err(Error::parse(path, line, format!("{name}: `{hex}` and `{dec}` disagree")));
    }
    Ok(v)
}

fn check_mode(s: &str, path: &Path, line: usize) -> Result<String> {
    s.parse::<RoundingMode>().map_err(|_| Error::parse(path, line, format!("bad mode `{s}`")))?;
    Ok(s.to_string())
}

fn parse_sample_row(line: &str, path: &Path, no: usize) -> Result<ReportRow> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 8 {
        return Err(Error::parse(path, no, format!("expected 8 fields, found {}", f.len())));
    }
    Ok(ReportRow {
        kind: f[0].to_string(),
        mode: check_mode(f[1], path, no)?,
        n: parse_field(f[2], "n", path, no)?,
        rep: parse_field(f[3], "rep", path, no)?,
        idx: parse_field(f[4], "idx", path, no)?,
        value: parse_float_pair(f[5], f[6], "value", path, no)?,
        wall_ns: parse_field(f[7], "wall_ns", path, no)?,
    })
}

fn parse_summary_row(line: &str, path: &Path, no: usize) -> Result<SummaryRow> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 14 {
        return Err(Error::parse(path, no, format!("expected 14 fields, found {}", f.len())));
    }
    let dec = |i: usize, name: &str| {
        parse_decimal(f[i]).ok_or_else(|| Error::parse(path, no, format!("bad {name} `{}`", f[i])))
    };
    Ok(SummaryRow {
        kind: f[0].to_string(),
        mode: check_mode(f[1], path, no)?,
        n: parse_field(f[2], "n", path, no)?,
        idx: parse_field(f[3], "idx", path, no)?,
        reps: parse_field(f[4], "reps", path, no)?,
        mean: parse_float_pair(f[5], f[6], "mean", path, no)?,
        std: dec(7, "std")?,
        sig_digits: dec(8, "sig_digits")?,
        ref64: parse_float_pair(f[9], f[10], "ref64", path, no)?,
        rn: parse_float_pair(f[11], f[12], "rn", path, no)?,
        rn_bitwise_equal: parse_field(f[13], "rn_bitwise_equal", path, no)?,
    })
}

#[derive(Serialize)]
struct JsonRow<'a> {
    kind: &'a str,
    mode: &'a str,
    n: usize,
    rep: usize,
    idx: usize,
    value_hex: String,
    value_dec: String,
    wall_ns: u64,
}

impl<'a> From<&'a ReportRow> for JsonRow<'a> {
    fn from(r: &'a ReportRow) -> Self {
        JsonRow {
            kind: &r.kind,
            mode: &r.mode,
            n: r.n,
            rep: r.rep,
            idx: r.idx,
            value_hex: to_hex_float(r.value),
            value_dec: to_decimal(r.value),
            wall_ns: r.wall_ns,
        }
    }
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    kind: &'a str,
    mode: &'a str,
    n: usize,
    idx: usize,
    reps: usize,
    mean_hex: String,
    mean_dec: String,
    std_dec: String,
    sig_digits: String,
    ref64_hex: String,
    ref64_dec: String,
    rn_hex: String,
    rn_dec: String,
    rn_bitwise_equal: bool,
}

impl<'a> From<&'a SummaryRow> for JsonSummary<'a> {
    fn from(s: &'a SummaryRow) -> Self {
        JsonSummary {
            kind: &s.kind,
            mode: &s.mode,
            n: s.n,
            idx: s.idx,
            reps: s.reps,
            mean_hex: to_hex_float(s.mean),
            mean_dec: to_decimal(s.mean),
            std_dec: to_decimal(s.std),
            sig_digits: to_decimal(s.sig_digits),
            ref64_hex: to_hex_float(s.ref64),
            ref64_dec: to_decimal(s.ref64),
            rn_hex: to_hex_float(s.rn),
            rn_dec: to_decimal(s.rn),
            rn_bitwise_equal: s.rn_bitwise_equal,
        }
    }
}

/// Values of one sample column: either the samples table of a report or a
/// plain file with one number (decimal or hex float) per line.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub values: Vec<f64>,
    /// Report metadata, empty for plain files.
    pub meta: Vec<(String, String)>,
    pub format: Option<FormatName>,
}

impl SampleFile {
    /// `select` keeps rows whose `(mode, n)` match; report files must
    /// resolve to a single `(kind, mode, n, idx)` group.
    pub fn read(path: &Path, select: (Option<&str>, Option<usize>)) -> Result<SampleFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.starts_with(SCHEMA_LINE) {
            let report = Report::parse_csv(&text, path)?;
            let rows: Vec<&ReportRow> = report
                .rows
                .iter()
                .filter(|r| select.0.is_none_or(|m| r.mode == m) && select.1.is_none_or(|n| r.n == n))
                .collect();
            let first = rows.first().ok_or_else(|| Error::parse(path, 1, "no samples match the selection"))?;
            let key = (&first.kind, &first.mode, first.n, first.idx);
            if rows.iter().any(|r| (&r.kind, &r.mode, r.n, r.idx) != key) {
                return Err(Error::parse(path, 1, "several sample groups in report; narrow with --mode and --n"));
            }
            let format = report.meta("format").and_then(|f| f.parse().ok());
            return Ok(SampleFile { values: rows.iter().map(|r| r.value).collect(), meta: report.meta, format });
        }

        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || (values.is_empty() && line == "value") {
                continue;
            }
            let v =
                if line.contains("0x") || line.contains("0X") { parse_hex_float(line) } else { parse_decimal(line) };
            values.push(v.ok_or_else(|| Error::parse(path, i + 1, format!("bad sample `{line}`")))?);
        }
        if values.is_empty() {
            return Err(Error::parse(path, 1, "no samples"));
        }
        Ok(SampleFile { values, meta: Vec::new(), format: None })
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
