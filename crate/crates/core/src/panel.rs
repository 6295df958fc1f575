//! Loading, validation, frequency harmonisation and alignment of the GDP and
//! CPI series into a joint quarterly panel.
//!
//! Series files are plain CSV: a `period` column followed by one column per
//! country code. Quarterly periods are written `YYYYQn`, annual periods `YYYY`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariableKind {
    Gdp,
    Cpi,
}

impl VariableKind {
    pub fn tag(self) -> &'static str {
        match self {
            VariableKind::Gdp => "GDP",
            VariableKind::Cpi => "CPI",
        }
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frequency {
    Quarterly,
    Annual,
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quarterly" | "q" => Ok(Frequency::Quarterly),
            "annual" | "a" | "yearly" => Ok(Frequency::Annual),
            other => Err(Error::InvalidArgument(format!(
                "unknown frequency `{other}` (expected quarterly or annual)"
            ))),
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frequency::Quarterly => "quarterly",
            Frequency::Annual => "annual",
        })
    }
}

/// A calendar quarter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    year: i32,
    quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::InvalidArgument(format!(
                "quarter must be in 1..=4, got {quarter}"
            )));
        }
        Ok(Quarter { year, quarter })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.quarter
    }

    pub fn succ(self) -> Self {
        if self.quarter == 4 {
            Quarter {
                year: self.year + 1,
                quarter: 1,
            }
        } else {
            Quarter {
                year: self.year,
                quarter: self.quarter + 1,
            }
        }
    }

    /// Quarters elapsed since year 0 Q1.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    pub fn offset(self, quarters: i64) -> Self {
        let ord = self.ordinal() + quarters;
        Quarter {
            year: ord.div_euclid(4) as i32,
            quarter: (ord.rem_euclid(4) + 1) as u8,
        }
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("`{s}` is not a quarter of the form YYYYQn"));
        let (year, q) = s.split_once('Q').ok_or_else(bad)?;
        if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) || q.len() != 1 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let q: u8 = q.parse().map_err(|_| bad())?;
        Quarter::new(year, q).map_err(|_| bad())
    }
}

impl Serialize for Quarter {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quarter {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A row label of a raw series file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    Quarter(Quarter),
    Year(i32),
}

impl Period {
    fn parse(s: &str, frequency: Frequency) -> Option<Self> {
        match frequency {
            Frequency::Quarterly => s.parse().ok().map(Period::Quarter),
            Frequency::Annual => {
                if s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()) {
                    s.parse().ok().map(Period::Year)
                } else {
                    None
                }
            }
        }
    }

    fn succ(self) -> Self {
        match self {
            Period::Quarter(q) => Period::Quarter(q.succ()),
            Period::Year(y) => Period::Year(y + 1),
        }
    }

    pub fn as_quarter(self) -> Option<Quarter> {
        match self {
            Period::Quarter(q) => Some(q),
            Period::Year(_) => None,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Quarter(q) => q.fmt(f),
            Period::Year(y) => write!(f, "{y}"),
        }
    }
}

pub(crate) fn validate_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(Error::Schema {
            column: label.to_string(),
            message: "country codes must be non-empty uppercase tokens".into(),
        })
    }
}

pub(crate) fn validate_label_list(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Schema {
            column: "<header>".into(),
            message: "no country columns".into(),
        });
    }
    let mut seen = HashSet::new();
    for label in labels {
        validate_label(label)?;
        if !seen.insert(label.as_str()) {
            return Err(Error::Schema {
                column: label.clone(),
                message: "duplicate country code".into(),
            });
        }
    }
    Ok(())
}

fn check_continuity(periods: &[Period]) -> Result<()> {
    for pair in periods.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        let expected = prev.succ();
        if cur == expected {
            continue;
        }
        return Err(if cur == prev {
            Error::Continuity {
                period: cur.to_string(),
                message: "duplicate period".into(),
            }
        } else if cur < prev {
            Error::Continuity {
                period: cur.to_string(),
                message: format!("period is not after {prev}"),
            }
        } else {
            Error::Continuity {
                period: expected.to_string(),
                message: format!("missing period (jumps from {prev} to {cur})"),
            }
        });
    }
    Ok(())
}

/// Raw observations for one variable, one column per country.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSeriesSet {
    kind: VariableKind,
    frequency: Frequency,
    labels: Vec<String>,
    periods: Vec<Period>,
    values: DMatrix<f64>,
}

impl RawSeriesSet {
    /// `values` is periods × countries.
    pub fn new(
        kind: VariableKind,
        frequency: Frequency,
        labels: Vec<String>,
        periods: Vec<Period>,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        validate_label_list(&labels)?;
        if periods.is_empty() {
            return Err(Error::InsufficientData("series has no periods".into()));
        }
        if values.nrows() != periods.len() || values.ncols() != labels.len() {
            return Err(Error::Dimension(format!(
                "values are {}x{}, expected {}x{}",
                values.nrows(),
                values.ncols(),
                periods.len(),
                labels.len()
            )));
        }
        for p in &periods {
            let matches = matches!(
                (p, frequency),
                (Period::Quarter(_), Frequency::Quarterly) | (Period::Year(_), Frequency::Annual)
            );
            if !matches {
                return Err(Error::InvalidArgument(format!(
                    "period {p} does not match {frequency} frequency"
                )));
            }
        }
        check_continuity(&periods)?;
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::Parse {
                row: r + 1,
                column: labels[c].clone(),
                message: "value is not finite".into(),
            });
        }
        Ok(RawSeriesSet {
            kind,
            frequency,
            labels,
            periods,
            values,
        })
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    /// Series for one country, in period order.
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let c = self.labels.iter().position(|l| l == label)?;
        Some(self.values.column(c).iter().copied().collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["period".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (r, period) in self.periods.iter().enumerate() {
            let mut row = vec![period.to_string()];
            row.extend(self.values.row(r).iter().map(|v| format!("{v}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Parses a series CSV from any reader; see [`load_series_csv`].
pub fn read_series_csv<R: Read>(
    reader: R,
    kind: VariableKind,
    frequency: Frequency,
) -> Result<RawSeriesSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    match header.get(0) {
        Some("period") => {}
        other => {
            return Err(Error::Schema {
                column: other.unwrap_or("").to_string(),
                message: "first column must be `period`".into(),
            })
        }
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    validate_label_list(&labels)?;

    let mut periods = Vec::new();
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != header.len() {
            return Err(Error::Schema {
                column: format!("<row {line}>"),
                message: format!("row has {} fields, header has {}", record.len(), header.len()),
            });
        }
        let raw_period = &record[0];
        let period = Period::parse(raw_period, frequency).ok_or_else(|| Error::Parse {
            row: line,
            column: "period".into(),
            message: format!(
                "`{raw_period}` is not a {frequency} period ({})",
                match frequency {
                    Frequency::Quarterly => "YYYYQn",
                    Frequency::Annual => "YYYY",
                }
            ),
        })?;
        periods.push(period);
        for (c, cell) in record.iter().enumerate().skip(1) {
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: line,
                    column: labels[c - 1].clone(),
                    message: format!("cannot read `{cell}` as a finite number"),
                })?;
            data.push(value);
        }
    }
    if periods.is_empty() {
        return Err(Error::InsufficientData("file has no data rows".into()));
    }
    check_continuity(&periods)?;
    let values = DMatrix::from_row_slice(periods.len(), labels.len(), &data);
    RawSeriesSet::new(kind, frequency, labels, periods, values)
}

/// Loads one variable's series from a CSV file. Row order is period order.
pub fn load_series_csv(path: impl AsRef<Path>, kind: VariableKind, frequency: Frequency) -> Result<RawSeriesSet> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series_csv(file, kind, frequency)
}

/// Converts annual observations to quarterly ones. Each annual value sits at
/// quarter `anchor` of its year; quarters in between are filled linearly.
/// The output starts and ends at the first and last anchored quarters.
pub fn interpolate_annual_to_quarterly(annual: &RawSeriesSet, anchor: u8) -> Result<RawSeriesSet> {
    if annual.frequency != Frequency::Annual {
        return Err(Error::InvalidArgument("interpolation needs an annual series".into()));
    }
    if !(1..=4).contains(&anchor) {
        return Err(Error::InvalidArgument(format!("anchor quarter must be 1..=4, got {anchor}")));
    }
    let years = annual.len();
    if years < 2 {
        return Err(Error::InsufficientData(format!(
            "interpolation needs at least 2 annual observations, got {years}"
        )));
    }
    let first_year = match annual.periods[0] {
        Period::Year(y) => y,
        Period::Quarter(_) => unreachable!("annual set holds years"),
    };
    let start = Quarter::new(first_year, anchor)?;
    let t_out = 4 * (years - 1) + 1;
    let n = annual.labels.len();
    let mut values = DMatrix::zeros(t_out, n);
    for c in 0..n {
        for k in 0..years - 1 {
            let lo = annual.values[(k, c)];
            let hi = annual.values[(k + 1, c)];
            values[(4 * k, c)] = lo;
            for step in 1..4 {
                values[(4 * k + step, c)] = lo + (hi - lo) * (step as f64 / 4.0);
            }
        }
        values[(t_out - 1, c)] = annual.values[(years - 1, c)];
    }
    let periods = (0..t_out).map(|i| Period::Quarter(start.offset(i as i64))).collect();
    RawSeriesSet::new(annual.kind, Frequency::Quarterly, annual.labels.clone(), periods, values)
}

/// Aligned quarterly panel of GDP (`x`) and CPI (`y`), both T × n.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    labels: Vec<String>,
    quarters: Vec<Quarter>,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl Panel {
    pub fn new(labels: Vec<String>, quarters: Vec<Quarter>, x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        validate_label_list(&labels)?;
        let t = quarters.len();
        if t < 2 {
            return Err(Error::InsufficientData(format!("panel needs at least 2 quarters, got {t}")));
        }
        for m in [&x, &y] {
            if m.nrows() != t || m.ncols() != labels.len() {
                return Err(Error::Dimension(format!(
                    "panel matrix is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    t,
                    labels.len()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("panel contains non-finite values".into()));
            }
        }
        let periods: Vec<Period> = quarters.iter().copied().map(Period::Quarter).collect();
        check_continuity(&periods)?;
        Ok(Panel { labels, quarters, x, y })
    }

    /// Builds a panel with a consecutive calendar starting at `start`.
    pub fn from_matrices(labels: Vec<String>, start: Quarter, x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let quarters = (0..x.nrows()).map(|i| start.offset(i as i64)).collect();
        Panel::new(labels, quarters, x, y)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn quarters(&self) -> &[Quarter] {
        &self.quarters
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn n_periods(&self) -> usize {
        self.quarters.len()
    }

    pub fn n_countries(&self) -> usize {
        self.labels.len()
    }

    /// Reorders countries so that new column `k` is old column `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_countries();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::InvalidArgument("not a permutation of the country index".into()));
        }
        let labels = perm.iter().map(|&k| self.labels[k].clone()).collect();
        let x = self.x.select_columns(perm);
        let y = self.y.select_columns(perm);
        Panel::new(labels, self.quarters.clone(), x, y)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["period".to_string()];
        header.extend(self.labels.iter().map(|l| format!("GDP:{l}")));
        header.extend(self.labels.iter().map(|l| format!("CPI:{l}")));
        w.write_record(&header)?;
        for (t, q) in self.quarters.iter().enumerate() {
            let mut row = vec![q.to_string()];
            row.extend(self.x.row(t).iter().map(|v| format!("{v}")));
            row.extend(self.y.row(t).iter().map(|v| format!("{v}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Reads the combined panel format written by [`Panel::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("period") {
            return Err(Error::Schema {
                column: header.get(0).unwrap_or("").to_string(),
                message: "first column must be `period`".into(),
            });
        }
        let cols: Vec<&str> = header.iter().skip(1).collect();
        if cols.is_empty() || cols.len() % 2 != 0 {
            return Err(Error::Schema {
                column: "<header>".into(),
                message: "panel header needs matching GDP:* and CPI:* columns".into(),
            });
        }
        let n = cols.len() / 2;
        let mut labels = Vec::with_capacity(n);
        for (k, col) in cols.iter().enumerate() {
            let (prefix, want) = if k < n { ("GDP:", None) } else { ("CPI:", Some(&labels[k - n])) };
            let label = col.strip_prefix(prefix).ok_or_else(|| Error::Schema {
                column: col.to_string(),
                message: format!("expected a `{prefix}CODE` column"),
            })?;
            match want {
                None => labels.push(label.to_string()),
                Some(expected) if expected == label => {}
                Some(expected) => {
                    return Err(Error::Schema {
                        column: col.to_string(),
                        message: format!("expected CPI:{expected}"),
                    })
                }
            }
        }
        let mut quarters = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let q: Quarter = record[0].parse().map_err(|_| Error::Parse {
                row: line,
                column: "period".into(),
                message: format!("`{}` is not a quarter", &record[0]),
            })?;
            quarters.push(q);
            for (c, cell) in record.iter().enumerate().skip(1) {
                let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    row: line,
                    column: cols[c - 1].to_string(),
                    message: format!("cannot read `{cell}` as a finite number"),
                })?;
                if c <= n {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        let t = quarters.len();
        Panel::new(
            labels,
            quarters,
            DMatrix::from_row_slice(t, n, &xs),
            DMatrix::from_row_slice(t, n, &ys),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Panel::read_csv(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// The panel as two quarterly raw sets (GDP, CPI).
    pub fn split_series(&self) -> (RawSeriesSet, RawSeriesSet) {
        let periods: Vec<Period> = self.quarters.iter().copied().map(Period::Quarter).collect();
        let mk = |kind, values: &DMatrix<f64>| RawSeriesSet {
            kind,
            frequency: Frequency::Quarterly,
            labels: self.labels.clone(),
            periods: periods.clone(),
            values: values.clone(),
        };
        (mk(VariableKind::Gdp, &self.x), mk(VariableKind::Cpi, &self.y))
    }
}

/// Joins quarterly GDP and CPI sets on their common calendar. Country order
/// follows the GDP set.
pub fn align_panel(gdp: &RawSeriesSet, cpi: &RawSeriesSet) -> Result<Panel> {
    for set in [gdp, cpi] {
        if set.frequency != Frequency::Quarterly {
            return Err(Error::Alignment(format!(
                "{} series is {}; interpolate to quarterly first",
                set.kind, set.frequency
            )));
        }
    }
    let gdp_set: HashSet<&String> = gdp.labels.iter().collect();
    let cpi_set: HashSet<&String> = cpi.labels.iter().collect();
    if gdp_set != cpi_set {
        let only_in_gdp = gdp.labels.iter().filter(|l| !cpi_set.contains(l)).cloned().collect();
        let only_in_cpi = cpi.labels.iter().filter(|l| !gdp_set.contains(l)).cloned().collect();
        return Err(Error::LabelMismatch { only_in_gdp, only_in_cpi });
    }

    let quarter_at = |set: &RawSeriesSet, i: usize| set.periods[i].as_quarter().expect("quarterly set");
    let gdp_start = quarter_at(gdp, 0);
    let cpi_start = quarter_at(cpi, 0);
    let start = gdp_start.max(cpi_start);
    let end = quarter_at(gdp, gdp.len() - 1).min(quarter_at(cpi, cpi.len() - 1));
    if start > end {
        return Err(Error::Alignment(format!(
            "GDP and CPI calendars do not overlap (GDP {}..{}, CPI {}..{})",
            gdp.periods[0],
            gdp.periods[gdp.len() - 1],
            cpi.periods[0],
            cpi.periods[cpi.len() - 1]
        )));
    }
    let t = (end.ordinal() - start.ordinal() + 1) as usize;
    if t < 2 {
        return Err(Error::Alignment(format!("only one common quarter ({start})")));
    }
    let gdp_off = (start.ordinal() - gdp_start.ordinal()) as usize;
    let cpi_off = (start.ordinal() - cpi_start.ordinal()) as usize;
    let cpi_cols: Vec<usize> = gdp
        .labels
        .iter()
        .map(|l| cpi.labels.iter().position(|m| m == l).expect("label sets match"))
        .collect();
    let n = gdp.labels.len();
    let x = DMatrix::from_fn(t, n, |r, c| gdp.values[(gdp_off + r, c)]);
    let y = DMatrix::from_fn(t, n, |r, c| cpi.values[(cpi_off + r, cpi_cols[c])]);
    let quarters = (0..t).map(|i| start.offset(i as i64)).collect();
    Panel::new(gdp.labels.clone(), quarters, x, y)
}
