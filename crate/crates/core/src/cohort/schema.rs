//! Master feature layout and the five cumulative information levels.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cohort::records::{
    CitizenMonthRecord, LivingType, FEEDBACK, PROVIDERS, SERVICES, TIME_SLOTS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InformationLevel {
    IL1,
    IL2a,
    IL2b,
    IL3,
    IL4,
}

impl InformationLevel {
    pub const ALL: [InformationLevel; 5] = [
        InformationLevel::IL1,
        InformationLevel::IL2a,
        InformationLevel::IL2b,
        InformationLevel::IL3,
        InformationLevel::IL4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InformationLevel::IL1 => "IL1",
            InformationLevel::IL2a => "IL2a",
            InformationLevel::IL2b => "IL2b",
            InformationLevel::IL3 => "IL3",
            InformationLevel::IL4 => "IL4",
        }
    }
}

impl fmt::Display for InformationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InformationLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InformationLevel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown information level `{s}`")))
    }
}

/// Record category a master column is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Basic,
    Length,
    LivingType,
    Time,
    Type,
    HealthCare,
    Feedback,
    Financial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoding {
    Numeric,
    OneHot,
    /// Summed hours or counts over the window.
    Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub category: Category,
    pub encoding: Encoding,
}

/// One column read by an information level: a master index, optionally
/// thresholded to a `value > 0` indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub index: usize,
    pub binary: bool,
}

/// Sorted categorical vocabularies observed in a record set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub zipcodes: Vec<String>,
    pub civil_statuses: Vec<String>,
}

impl Vocabulary {
    pub fn from_records(records: &[CitizenMonthRecord]) -> Self {
        let zips: BTreeSet<&str> = records.iter().map(|r| r.zipcode.as_str()).collect();
        let civil: BTreeSet<&str> = records.iter().map(|r| r.civil_status.as_str()).collect();
        Vocabulary {
            zipcodes: zips.into_iter().map(String::from).collect(),
            civil_statuses: civil.into_iter().map(String::from).collect(),
        }
    }
}

/// Master (IL4-superset) feature layout with per-level masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub vocabulary: Vocabulary,
    pub columns: Vec<Column>,
    masks: Vec<(InformationLevel, Vec<MaskEntry>)>,
    offsets: Offsets,
}

/// Start indices of the column groups inside the master vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub(crate) struct Offsets {
    pub gender: usize,
    pub age: usize,
    pub zipcode: usize,
    pub calendar_month: usize,
    pub civil_status: usize,
    pub hours_total: usize,
    pub large_increases: usize,
    pub living_type: usize,
    pub time: usize,
    pub service: usize,
    pub provider: usize,
    pub feedback: usize,
    pub cost: usize,
}

/// Name of the window-level count of large increases.
pub const LARGE_INCREASES: &str = "large_increases";

impl FeatureSchema {
    pub fn build(vocabulary: &Vocabulary) -> Self {
        let mut b = LayoutBuilder::default();
        let months: Vec<String> = (1..=12).map(|m| format!("{m:02}")).collect();
        let living: Vec<&str> = LivingType::ALL.iter().map(|l| l.name()).collect();

        let offsets = Offsets {
            gender: b.single("gender_male", Category::Basic, Encoding::Numeric),
            age: b.single("age", Category::Basic, Encoding::Numeric),
            zipcode: b.group("zip", &vocabulary.zipcodes, Category::Basic, Encoding::OneHot),
            calendar_month: b.group("calendar_month", &months, Category::Basic, Encoding::OneHot),
            civil_status: b.group(
                "civil",
                &vocabulary.civil_statuses,
                Category::Basic,
                Encoding::OneHot,
            ),
            hours_total: b.single("hours_total", Category::Length, Encoding::Distribution),
            large_increases: b.single(LARGE_INCREASES, Category::Length, Encoding::Numeric),
            living_type: b.group("living", &living, Category::LivingType, Encoding::OneHot),
            time: b.group("time", &TIME_SLOTS, Category::Time, Encoding::Distribution),
            service: b.group("hc", &SERVICES, Category::HealthCare, Encoding::Distribution),
            provider: b.group("prov", &PROVIDERS, Category::Type, Encoding::Distribution),
            feedback: b.group("fb", &FEEDBACK, Category::Feedback, Encoding::Distribution),
            cost: b.single("cost", Category::Financial, Encoding::Distribution),
        };
        let columns = b.columns;

        let raw = |cat: Category| -> Vec<MaskEntry> {
            columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.category == cat)
                .map(|(index, _)| MaskEntry {
                    index,
                    binary: false,
                })
                .collect()
        };
        let binary = |cat: Category| -> Vec<MaskEntry> {
            raw(cat)
                .into_iter()
                .map(|e| MaskEntry {
                    binary: true,
                    ..e
                })
                .collect()
        };

        let il1: Vec<MaskEntry> = [Category::Basic, Category::Length, Category::LivingType]
            .into_iter()
            .flat_map(raw)
            .collect();
        let il2a = [il1.clone(), binary(Category::Time)].concat();
        let il2b = [il1.clone(), binary(Category::HealthCare), binary(Category::Type)].concat();
        let il3 = [
            il1.clone(),
            binary(Category::Time),
            binary(Category::HealthCare),
            binary(Category::Type),
        ]
        .concat();
        let il4 = [
            il1.clone(),
            raw(Category::Time),
            raw(Category::HealthCare),
            binary(Category::Type),
            raw(Category::Feedback),
            raw(Category::Financial),
        ]
        .concat();

        let masks = vec![
            (InformationLevel::IL1, il1),
            (InformationLevel::IL2a, il2a),
            (InformationLevel::IL2b, il2b),
            (InformationLevel::IL3, il3),
            (InformationLevel::IL4, il4),
        ];
        FeatureSchema {
            vocabulary: vocabulary.clone(),
            columns,
            masks,
            offsets,
        }
    }

    /// Dimension of the master vector.
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub(crate) fn offsets(&self) -> &Offsets {
        &self.offsets
    }

    pub fn mask(&self, level: InformationLevel) -> &[MaskEntry] {
        &self
            .masks
            .iter()
            .find(|(l, _)| *l == level)
            .expect("every level has a mask")
            .1
    }

    pub fn level_dim(&self, level: InformationLevel) -> usize {
        self.mask(level).len()
    }

    /// Master indices read by `level`.
    pub fn level_indices(&self, level: InformationLevel) -> BTreeSet<usize> {
        self.mask(level).iter().map(|e| e.index).collect()
    }

    /// Names of the projected features, in projection order.
    pub fn level_feature_names(&self, level: InformationLevel) -> Vec<String> {
        self.mask(level)
            .iter()
            .map(|e| {
                let col = &self.columns[e.index];
                match (e.binary, col.encoding) {
                    (true, _) => format!("{}_any", col.name),
                    (false, Encoding::Distribution) if col.category != Category::Length => {
                        match col.category {
                            Category::Feedback => format!("{}_count", col.name),
                            Category::Financial => col.name.clone(),
                            _ => format!("{}_hours", col.name),
                        }
                    }
                    _ => col.name.clone(),
                }
            })
            .collect()
    }

    pub fn project(&self, features: &[f64], level: InformationLevel) -> Result<Vec<f64>> {
        if features.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: features.len(),
            });
        }
        Ok(self
            .mask(level)
            .iter()
            .map(|e| project_value(features[e.index], e.binary))
            .collect())
    }

    /// Projects many master vectors into a row-major matrix.
    pub fn project_rows<'a, I>(&self, rows: I, level: InformationLevel) -> Result<Array2<f64>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mask = self.mask(level);
        let mut data = Vec::new();
        let mut n = 0;
        for features in rows {
            if features.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    got: features.len(),
                });
            }
            data.extend(mask.iter().map(|e| project_value(features[e.index], e.binary)));
            n += 1;
        }
        Ok(Array2::from_shape_vec((n, mask.len()), data).expect("row-major shape"))
    }
}

fn project_value(v: f64, binary: bool) -> f64 {
    if binary {
        if v > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        v
    }
}

#[derive(Default)]
struct LayoutBuilder {
    columns: Vec<Column>,
}

impl LayoutBuilder {
    fn single(&mut self, name: &str, category: Category, encoding: Encoding) -> usize {
        self.group("", &[name], category, encoding)
    }

    /// Appends one column per value and returns the group's start index.
    fn group<S: AsRef<str>>(
        &mut self,
        prefix: &str,
        values: &[S],
        category: Category,
        encoding: Encoding,
    ) -> usize {
        let start = self.columns.len();
        for v in values {
            let name = if prefix.is_empty() {
                v.as_ref().to_string()
            } else {
                format!("{prefix}_{}", v.as_ref())
            };
            self.columns.push(Column {
                name,
                category,
                encoding,
            });
        }
        start
    }
}
