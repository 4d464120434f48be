use crate::cohort::records::{CitizenId, CitizenMonthRecord};
use crate::month::MonthIndex;

/// Contiguous month-by-month history of one citizen, from the first to the
/// last observed month. Interior gaps are zero-filled with demographics
/// carried forward from the most recent observed month.
///
/// Returns an empty list for an unknown citizen.
pub fn monthly_timeline(
    records: &[CitizenMonthRecord],
    citizen_id: &CitizenId,
) -> Vec<CitizenMonthRecord> {
    let mut own: Vec<&CitizenMonthRecord> = records
        .iter()
        .filter(|r| &r.citizen_id == citizen_id)
        .collect();
    own.sort_by_key(|r| r.month);
    contiguous(&own)
}

/// `sorted` must belong to a single citizen and be ordered by month.
pub(crate) fn contiguous(sorted: &[&CitizenMonthRecord]) -> Vec<CitizenMonthRecord> {
    let Some(first) = sorted.first() else {
        return Vec::new();
    };
    let last = sorted[sorted.len() - 1].month;
    let mut out = Vec::with_capacity(last.since(first.month) as usize + 1);
    let mut observed = sorted.iter().peekable();
    let mut previous: &CitizenMonthRecord = first;
    let mut month = first.month;
    while month <= last {
        match observed.peek() {
            Some(r) if r.month == month => {
                previous = r;
                out.push((**r).clone());
                observed.next();
            }
            _ => out.push(previous.zero_filled(month)),
        }
        month = month.offset(1);
    }
    out
}

/// Months whose total hours rose by at least `threshold_hours` over the
/// preceding month. The first month of a timeline never qualifies.
pub fn increase_events(timeline: &[CitizenMonthRecord], threshold_hours: f64) -> Vec<MonthIndex> {
    timeline
        .windows(2)
        .filter(|w| w[1].hours_total - w[0].hours_total >= threshold_hours)
        .map(|w| w[1].month)
        .collect()
}

/// Event flags aligned with `hours` (index 0 is never an event).
pub(crate) fn increase_flags(hours: &[f64], threshold_hours: f64) -> Vec<bool> {
    let mut flags = vec![false; hours.len()];
    for i in 1..hours.len() {
        flags[i] = hours[i] - hours[i - 1] >= threshold_hours;
    }
    flags
}
