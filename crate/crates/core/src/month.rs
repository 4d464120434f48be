use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Linear calendar-month coordinate: `year * 12 + (month - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthIndex(pub i32);

impl MonthIndex {
    /// `month` is 1-based.
    pub fn new(year: i32, month: u32) -> Self {
        debug_assert!((1..=12).contains(&month));
        MonthIndex(year * 12 + month as i32 - 1)
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// 1-based calendar month.
    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn offset(self, months: i32) -> Self {
        MonthIndex(self.0 + months)
    }

    /// Number of months from `earlier` to `self`.
    pub fn since(self, earlier: MonthIndex) -> i32 {
        self.0 - earlier.0
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for MonthIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Config(format!("invalid month `{s}`, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(MonthIndex::new(year, month))
    }
}

impl Serialize for MonthIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consecutive_months_differ_by_one() {
        let a = MonthIndex::new(2013, 4);
        let b = MonthIndex::new(2013, 5);
        assert_eq!(b.since(a), 1);
        assert_eq!(MonthIndex::new(2014, 1).since(MonthIndex::new(2013, 12)), 1);
        assert_eq!(a.0, 2013 * 12 + 3);
    }

    #[test]
    fn round_trips_through_text() {
        for raw in [0, 1, 11, 12, 24155, 24196] {
            let m = MonthIndex(raw);
            assert_eq!(m.to_string().parse::<MonthIndex>().unwrap(), m);
        }
        assert_eq!(MonthIndex::new(2017, 4).to_string(), "2017-04");
        assert!("2017-13".parse::<MonthIndex>().is_err());
        assert!("april".parse::<MonthIndex>().is_err());
    }
}
