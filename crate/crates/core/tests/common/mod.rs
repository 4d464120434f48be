#![allow(dead_code)]

use homecare_core::cohort::{CitizenMonthRecord, Gender, LivingType};
use homecare_core::MonthIndex;

/// A plausible record whose hours all sit in the day, weekday, personal-care
/// and public-provider columns.
pub fn record(id: &str, month: MonthIndex, hours: f64) -> CitizenMonthRecord {
    CitizenMonthRecord {
        citizen_id: id.into(),
        month,
        gender: Gender::M,
        age: 82,
        zipcode: "2100".into(),
        civil_status: "widowed".into(),
        living_type: LivingType::OwnResidence,
        hours_total: hours,
        hours_by_time: [hours, 0.0, 0.0, hours, 0.0],
        hours_by_service: [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, hours, 0.0, 0.0, 0.0],
        hours_by_provider: [hours, 0.0],
        feedback_counts: [1, 0, 0, 0],
        cost: hours * 250.0,
    }
}

pub fn series(id: &str, start: MonthIndex, hours: &[f64]) -> Vec<CitizenMonthRecord> {
    hours
        .iter()
        .enumerate()
        .map(|(i, h)| record(id, start.offset(i as i32), *h))
        .collect()
}
