//! Citizen-month records, 3-month window aggregation and information levels.

mod aggregate;
mod records;
mod schema;
mod timeline;

pub use aggregate::{
    aggregate_windows, event_history, timelines, AggregatedInstance, Cohort, EventHistory, Label,
    MonthChunk, WindowConfig, DEFAULT_THRESHOLD_HOURS,
};
pub use records::{
    csv_header, emit_csv, ingest_csv, read_csv, write_csv, CitizenId, CitizenMonthRecord, Gender,
    LivingType, CSV_COLUMNS, FEEDBACK, FEEDBACK_HOSPITALIZED, PROVIDERS, SERVICES,
    SERVICE_EMERGENCY, SERVICE_PERSONAL, SERVICE_PRACTICAL, SERVICE_SICK, TIME_SLOTS,
    TIME_WEEKEND,
};
pub use schema::{
    Category, Column, Encoding, FeatureSchema, InformationLevel, MaskEntry, Vocabulary,
    LARGE_INCREASES,
};
pub use timeline::{increase_events, monthly_timeline};

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::month::MonthIndex;

    pub fn record(id: &str, month: MonthIndex, hours: f64) -> CitizenMonthRecord {
        CitizenMonthRecord {
            citizen_id: id.into(),
            month,
            gender: Gender::F,
            age: 80,
            zipcode: "2100".into(),
            civil_status: "married".into(),
            living_type: LivingType::OwnResidence,
            hours_total: hours,
            hours_by_time: [hours, 0.0, 0.0, hours, 0.0],
            hours_by_service: [hours, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            hours_by_provider: [hours, 0.0],
            feedback_counts: [1, 0, 0, 0],
            cost: hours * 300.0,
        }
    }

    /// Consecutive monthly records with the given total hours.
    pub fn series(id: &str, start: MonthIndex, hours: &[f64]) -> Vec<CitizenMonthRecord> {
        hours
            .iter()
            .enumerate()
            .map(|(i, h)| record(id, start.offset(i as i32), *h))
            .collect()
    }
}
