//! Raw citizen-month records and their CSV representation.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::MonthIndex;

/// Column order of the citizen-month CSV file.
pub const CSV_COLUMNS: [&str; 31] = [
    "citizen_id",
    "year",
    "month",
    "gender",
    "age",
    "zipcode",
    "civil_status",
    "living_type",
    "hours_total",
    "hours_day",
    "hours_evening",
    "hours_night",
    "hours_weekday",
    "hours_weekend",
    "hc_generic",
    "hc_emergency",
    "hc_dementia",
    "hc_reoccurring",
    "hc_dental",
    "hc_palliative",
    "hc_personal",
    "hc_practical",
    "hc_rehab",
    "hc_sick",
    "prov_public",
    "prov_private",
    "fb_home",
    "fb_not_home",
    "fb_hospitalized",
    "fb_other",
    "cost",
];

/// The exact header line written by [`write_csv`].
pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CitizenId(pub String);

impl fmt::Display for CitizenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CitizenId {
    fn from(s: &str) -> Self {
        CitizenId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LivingType {
    OwnResidence,
    SeniorHousing,
    AssignedResidence,
}

impl LivingType {
    pub const ALL: [LivingType; 3] = [
        LivingType::OwnResidence,
        LivingType::SeniorHousing,
        LivingType::AssignedResidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LivingType::OwnResidence => "own_residence",
            LivingType::SeniorHousing => "senior_housing",
            LivingType::AssignedResidence => "assigned_residence",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Time-of-care slots. Day/evening/night and weekday/weekend are two
/// independent partitions of the same hours.
pub const TIME_SLOTS: [&str; 5] = ["day", "evening", "night", "weekday", "weekend"];
pub const TIME_WEEKEND: usize = 4;

pub const SERVICES: [&str; 10] = [
    "generic",
    "emergency",
    "dementia",
    "reoccurring",
    "dental",
    "palliative",
    "personal",
    "practical",
    "rehab",
    "sick",
];
pub const SERVICE_EMERGENCY: usize = 1;
pub const SERVICE_PERSONAL: usize = 6;
pub const SERVICE_PRACTICAL: usize = 7;
pub const SERVICE_SICK: usize = 9;

pub const PROVIDERS: [&str; 2] = ["public", "private"];

pub const FEEDBACK: [&str; 4] = ["home", "not_home", "hospitalized", "other"];
pub const FEEDBACK_HOSPITALIZED: usize = 2;

/// One citizen's home-care log for one calendar month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitizenMonthRecord {
    pub citizen_id: CitizenId,
    pub month: MonthIndex,
    pub gender: Gender,
    pub age: u32,
    pub zipcode: String,
    pub civil_status: String,
    pub living_type: LivingType,
    pub hours_total: f64,
    pub hours_by_time: [f64; 5],
    pub hours_by_service: [f64; 10],
    pub hours_by_provider: [f64; 2],
    pub feedback_counts: [u32; 4],
    pub cost: f64,
}

impl CitizenMonthRecord {
    /// Copy of `self` moved to `month` with every hour, count and cost zeroed.
    /// Demographics are kept.
    pub fn zero_filled(&self, month: MonthIndex) -> Self {
        CitizenMonthRecord {
            month,
            hours_total: 0.0,
            hours_by_time: [0.0; 5],
            hours_by_service: [0.0; 10],
            hours_by_provider: [0.0; 2],
            feedback_counts: [0; 4],
            cost: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let key = || format!("citizen {} month {}", self.citizen_id, self.month);
        let hours = std::iter::once(("hours_total", self.hours_total))
            .chain(TIME_SLOTS.iter().zip(self.hours_by_time).map(|(n, v)| (*n, v)))
            .chain(SERVICES.iter().zip(self.hours_by_service).map(|(n, v)| (*n, v)))
            .chain(PROVIDERS.iter().zip(self.hours_by_provider).map(|(n, v)| (*n, v)))
            .chain(std::iter::once(("cost", self.cost)));
        for (name, value) in hours {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Validation(format!(
                    "{}: `{name}` must be finite and non-negative, got {value}",
                    key()
                )));
            }
        }
        let provider_sum: f64 = self.hours_by_provider.iter().sum();
        if (provider_sum - self.hours_total).abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "{}: provider hours sum to {provider_sum}, hours_total is {}",
                key(),
                self.hours_total
            )));
        }
        Ok(())
    }
}

/// Flat CSV row; field order matches [`CSV_COLUMNS`].
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    citizen_id: String,
    year: i32,
    month: u32,
    gender: Gender,
    age: u32,
    zipcode: String,
    civil_status: String,
    living_type: LivingType,
    hours_total: f64,
    hours_day: f64,
    hours_evening: f64,
    hours_night: f64,
    hours_weekday: f64,
    hours_weekend: f64,
    hc_generic: f64,
    hc_emergency: f64,
    hc_dementia: f64,
    hc_reoccurring: f64,
    hc_dental: f64,
    hc_palliative: f64,
    hc_personal: f64,
    hc_practical: f64,
    hc_rehab: f64,
    hc_sick: f64,
    prov_public: f64,
    prov_private: f64,
    fb_home: u32,
    fb_not_home: u32,
    fb_hospitalized: u32,
    fb_other: u32,
    cost: f64,
}

impl From<&CitizenMonthRecord> for CsvRow {
    fn from(r: &CitizenMonthRecord) -> Self {
        let [hours_day, hours_evening, hours_night, hours_weekday, hours_weekend] = r.hours_by_time;
        let [hc_generic, hc_emergency, hc_dementia, hc_reoccurring, hc_dental, hc_palliative, hc_personal, hc_practical, hc_rehab, hc_sick] =
            r.hours_by_service;
        let [prov_public, prov_private] = r.hours_by_provider;
        let [fb_home, fb_not_home, fb_hospitalized, fb_other] = r.feedback_counts;
        CsvRow {
            citizen_id: r.citizen_id.0.clone(),
            year: r.month.year(),
            month: r.month.month(),
            gender: r.gender,
            age: r.age,
            zipcode: r.zipcode.clone(),
            civil_status: r.civil_status.clone(),
            living_type: r.living_type,
            hours_total: r.hours_total,
            hours_day,
            hours_evening,
            hours_night,
            hours_weekday,
            hours_weekend,
            hc_generic,
            hc_emergency,
            hc_dementia,
            hc_reoccurring,
            hc_dental,
            hc_palliative,
            hc_personal,
            hc_practical,
            hc_rehab,
            hc_sick,
            prov_public,
            prov_private,
            fb_home,
            fb_not_home,
            fb_hospitalized,
            fb_other,
            cost: r.cost,
        }
    }
}

impl From<CsvRow> for CitizenMonthRecord {
    fn from(r: CsvRow) -> Self {
        CitizenMonthRecord {
            citizen_id: CitizenId(r.citizen_id),
            month: MonthIndex::new(r.year, r.month),
            gender: r.gender,
            age: r.age,
            zipcode: r.zipcode,
            civil_status: r.civil_status,
            living_type: r.living_type,
            hours_total: r.hours_total,
            hours_by_time: [
                r.hours_day,
                r.hours_evening,
                r.hours_night,
                r.hours_weekday,
                r.hours_weekend,
            ],
            hours_by_service: [
                r.hc_generic,
                r.hc_emergency,
                r.hc_dementia,
                r.hc_reoccurring,
                r.hc_dental,
                r.hc_palliative,
                r.hc_personal,
                r.hc_practical,
                r.hc_rehab,
                r.hc_sick,
            ],
            hours_by_provider: [r.prov_public, r.prov_private],
            feedback_counts: [r.fb_home, r.fb_not_home, r.fb_hospitalized, r.fb_other],
            cost: r.cost,
        }
    }
}

/// Reads and validates citizen-month records from a CSV file.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<CitizenMonthRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file).map_err(|e| match e {
        Error::Parse { .. } | Error::Validation(_) => e.context(path.display().to_string()),
        other => other,
    })
}

/// Reads records from any CSV source. Row numbers in errors are 1-based data
/// rows (the header is row 0).
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CitizenMonthRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();
    let expected: Vec<&str> = CSV_COLUMNS.to_vec();
    let actual: Vec<&str> = header.iter().map(str::trim).collect();
    if actual != expected {
        let column = expected
            .iter()
            .zip(actual.iter().chain(std::iter::repeat(&"")))
            .find(|(e, a)| e != a)
            .map(|(e, _)| e.to_string())
            .unwrap_or_else(|| actual.get(expected.len()).unwrap_or(&"").to_string());
        return Err(Error::Parse {
            row: 0,
            column,
            message: format!("header does not match the expected schema `{}`", csv_header()),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let row_no = i as u64 + 1;
        let row = row.map_err(|e| {
            let column = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err
                    .field()
                    .and_then(|f| CSV_COLUMNS.get(f as usize))
                    .map(|c| c.to_string())
                    .unwrap_or_default(),
                _ => String::new(),
            };
            Error::Parse {
                row: row_no,
                column,
                message: e.to_string(),
            }
        })?;
        if !(1..=12).contains(&row.month) {
            return Err(Error::Parse {
                row: row_no,
                column: "month".into(),
                message: format!("month must be in 1..=12, got {}", row.month),
            });
        }
        let record = CitizenMonthRecord::from(row);
        record
            .validate()
            .map_err(|e| e.context(format!("row {row_no}")))?;
        if !seen.insert((record.citizen_id.clone(), record.month)) {
            return Err(Error::Validation(format!(
                "row {row_no}: duplicate record for citizen {} month {}",
                record.citizen_id, record.month
            )));
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the documented CSV schema.
pub fn write_csv<W: Write>(records: &[CitizenMonthRecord], writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(true).from_writer(writer);
    for r in records {
        wtr.serialize(CsvRow::from(r))
            .map_err(|e| Error::Validation(format!("csv write failed: {e}")))?;
    }
    if records.is_empty() {
        wtr.write_record(CSV_COLUMNS)
            .map_err(|e| Error::Validation(format!("csv write failed: {e}")))?;
    }
    wtr.flush()
        .map_err(|e| Error::Validation(format!("csv flush failed: {e}")))
}

pub fn emit_csv(records: &[CitizenMonthRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(records, &mut buf)?;
    buf.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::fixtures::record;

    fn to_csv(records: &[CitizenMonthRecord]) -> String {
        let mut buf = Vec::new();
        write_csv(records, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_only_yields_no_records() {
        let text = format!("{}\n", csv_header());
        assert!(read_csv(text.as_bytes()).unwrap().is_empty());
        assert_eq!(to_csv(&[]), text);
    }

    #[test]
    fn header_matches_schema() {
        let text = to_csv(&[record("a", MonthIndex::new(2013, 4), 3.0)]);
        assert_eq!(text.lines().next().unwrap(), csv_header());
        assert!(csv_header().starts_with("citizen_id,year,month,gender,age,zipcode"));
        assert!(csv_header().ends_with("fb_hospitalized,fb_other,cost"));
    }

    #[test]
    fn consecutive_months_parse_one_apart() {
        let recs = vec![
            record("a", MonthIndex::new(2013, 4), 3.0),
            record("a", MonthIndex::new(2013, 5), 4.0),
        ];
        let parsed = read_csv(to_csv(&recs).as_bytes()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[1].month.since(parsed[0].month), 1);
        assert_eq!(parsed, recs);
    }

    #[test]
    fn negative_hours_rejected() {
        let mut bad = record("a", MonthIndex::new(2013, 4), 3.0);
        bad.hours_total = -1.0;
        bad.hours_by_provider = [-1.0, 0.0];
        let err = read_csv(to_csv(&[bad]).as_bytes()).unwrap_err();
        assert_eq!(err.category(), "validation");
        assert!(err.to_string().contains("hours_total"));
    }

    #[test]
    fn provider_hours_must_sum_to_total() {
        let mut bad = record("a", MonthIndex::new(2013, 4), 3.0);
        bad.hours_by_provider = [1.0, 1.0];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn duplicate_key_rejected() {
        let r = record("a", MonthIndex::new(2013, 4), 3.0);
        let err = read_csv(to_csv(&[r.clone(), r]).as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn malformed_row_names_row_and_column() {
        let good = to_csv(&[record("a", MonthIndex::new(2013, 4), 3.0)]);
        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        let second = lines[1].replacen(",80,", ",eighty,", 1);
        lines.push(second.replace("2013,4", "2013,5"));
        let err = read_csv(lines.join("\n").as_bytes()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "age");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        let text = csv_header().replace("hours_total", "hours") + "\n";
        let err = read_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 0, ref column, .. } if column == "hours_total"));
    }
}
