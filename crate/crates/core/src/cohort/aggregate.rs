//! Sliding-window aggregation of citizen timelines into labeled monthly chunks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cohort::records::{CitizenId, CitizenMonthRecord, Gender};
use crate::cohort::schema::{FeatureSchema, InformationLevel};
use crate::cohort::timeline::{contiguous, increase_flags};
use crate::error::{Error, Result};
use crate::month::MonthIndex;

/// Default large-increase threshold in hours.
pub const DEFAULT_THRESHOLD_HOURS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// -1 or +1.
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_months: usize,
    pub horizon_months: usize,
    pub threshold_hours: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_months: 3,
            horizon_months: 3,
            threshold_hours: DEFAULT_THRESHOLD_HOURS,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_months == 0 || self.horizon_months == 0 {
            return Err(Error::Config("window and horizon must be at least one month".into()));
        }
        if !(self.threshold_hours > 0.0) {
            return Err(Error::Config("increase threshold must be positive".into()));
        }
        Ok(())
    }
}

/// A window of consecutive months summarized into one master feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedInstance {
    pub citizen_id: CitizenId,
    /// Last month of the window.
    pub window_end: MonthIndex,
    pub features: Vec<f64>,
    /// `None` when the horizon runs past the citizen's last observed month.
    pub label: Option<Label>,
}

impl AggregatedInstance {
    pub fn label_defined(&self) -> bool {
        self.label.is_some()
    }
}

/// All instances whose window ends at month `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthChunk {
    pub t: MonthIndex,
    pub instances: Vec<AggregatedInstance>,
}

impl MonthChunk {
    pub fn labeled(&self) -> impl Iterator<Item = &AggregatedInstance> {
        self.instances.iter().filter(|i| i.label_defined())
    }

    pub fn positive_count(&self) -> usize {
        self.labeled()
            .filter(|i| i.label == Some(Label::Positive))
            .count()
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled().count()
    }
}

/// Months with a large increase, per citizen.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventHistory {
    events: BTreeMap<CitizenId, BTreeSet<MonthIndex>>,
}

impl EventHistory {
    pub fn any_between(&self, citizen: &CitizenId, first: MonthIndex, last: MonthIndex) -> bool {
        self.events
            .get(citizen)
            .is_some_and(|months| months.range(first..=last).next().is_some())
    }

    pub fn events(&self, citizen: &CitizenId) -> impl Iterator<Item = MonthIndex> + '_ {
        self.events.get(citizen).into_iter().flatten().copied()
    }
}

/// Records grouped per citizen (sorted by id) as contiguous timelines.
pub fn timelines(records: &[CitizenMonthRecord]) -> Vec<Vec<CitizenMonthRecord>> {
    let mut by_citizen: BTreeMap<&CitizenId, Vec<&CitizenMonthRecord>> = BTreeMap::new();
    for r in records {
        by_citizen.entry(&r.citizen_id).or_default().push(r);
    }
    by_citizen
        .into_values()
        .map(|mut rs| {
            rs.sort_by_key(|r| r.month);
            contiguous(&rs)
        })
        .collect()
}

pub fn event_history(records: &[CitizenMonthRecord], threshold_hours: f64) -> EventHistory {
    let mut events = BTreeMap::new();
    for tl in timelines(records) {
        let hours: Vec<f64> = tl.iter().map(|r| r.hours_total).collect();
        let months: BTreeSet<MonthIndex> = increase_flags(&hours, threshold_hours)
            .into_iter()
            .zip(&tl)
            .filter(|(flag, _)| *flag)
            .map(|(_, r)| r.month)
            .collect();
        events.insert(tl[0].citizen_id.clone(), months);
    }
    EventHistory { events }
}

/// Aggregates every citizen's timeline into overlapping windows advancing by
/// one month and groups them into chunks ordered by window end.
pub fn aggregate_windows(
    records: &[CitizenMonthRecord],
    schema: &FeatureSchema,
    config: &WindowConfig,
) -> Result<Vec<MonthChunk>> {
    config.validate()?;
    let mut chunks: BTreeMap<MonthIndex, Vec<AggregatedInstance>> = BTreeMap::new();
    for tl in timelines(records) {
        let hours: Vec<f64> = tl.iter().map(|r| r.hours_total).collect();
        let flags = increase_flags(&hours, config.threshold_hours);
        let w = config.window_months;
        let h = config.horizon_months;
        for end in (w - 1)..tl.len() {
            let window = &tl[end + 1 - w..=end];
            let increases = flags[end + 1 - w..=end].iter().filter(|f| **f).count();
            let label = (end + h < tl.len())
                .then(|| Label::from_bool(flags[end + 1..=end + h].iter().any(|f| *f)));
            chunks
                .entry(tl[end].month)
                .or_default()
                .push(AggregatedInstance {
                    citizen_id: tl[end].citizen_id.clone(),
                    window_end: tl[end].month,
                    features: window_features(schema, window, increases),
                    label,
                });
        }
    }
    Ok(chunks
        .into_iter()
        .map(|(t, instances)| MonthChunk { t, instances })
        .collect())
}

/// Master feature vector for one window. Demographics come from the last month.
fn window_features(
    schema: &FeatureSchema,
    window: &[CitizenMonthRecord],
    increases: usize,
) -> Vec<f64> {
    let o = schema.offsets();
    let last = window.last().expect("non-empty window");
    let mut x = vec![0.0; schema.dim()];
    x[o.gender] = if last.gender == Gender::M { 1.0 } else { 0.0 };
    x[o.age] = f64::from(last.age);
    let vocab = &schema.vocabulary;
    if let Ok(i) = vocab.zipcodes.binary_search(&last.zipcode) {
        x[o.zipcode + i] = 1.0;
    }
    x[o.calendar_month + last.month.month() as usize - 1] = 1.0;
    if let Ok(i) = vocab.civil_statuses.binary_search(&last.civil_status) {
        x[o.civil_status + i] = 1.0;
    }
    x[o.large_increases] = increases as f64;
    x[o.living_type + last.living_type.index()] = 1.0;
    for r in window {
        x[o.hours_total] += r.hours_total;
        for (k, v) in r.hours_by_time.iter().enumerate() {
            x[o.time + k] += v;
        }
        for (k, v) in r.hours_by_service.iter().enumerate() {
            x[o.service + k] += v;
        }
        for (k, v) in r.hours_by_provider.iter().enumerate() {
            x[o.provider + k] += v;
        }
        for (k, v) in r.feedback_counts.iter().enumerate() {
            x[o.feedback + k] += f64::from(*v);
        }
        x[o.cost] += r.cost;
    }
    x
}

/// Records turned into chunks together with everything downstream code needs.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub schema: FeatureSchema,
    pub chunks: Vec<MonthChunk>,
    pub history: EventHistory,
    pub window: WindowConfig,
}

impl Cohort {
    pub fn from_records(records: &[CitizenMonthRecord], window: WindowConfig) -> Result<Self> {
        let schema = FeatureSchema::build(&crate::cohort::schema::Vocabulary::from_records(records));
        let chunks = aggregate_windows(records, &schema, &window)?;
        let history = event_history(records, window.threshold_hours);
        Ok(Cohort {
            schema,
            chunks,
            history,
            window,
        })
    }

    pub fn chunk(&self, t: MonthIndex) -> Option<&MonthChunk> {
        self.chunks
            .binary_search_by_key(&t, |c| c.t)
            .ok()
            .map(|i| &self.chunks[i])
    }

    /// Projected feature vector of one instance.
    pub fn project(&self, instance: &AggregatedInstance, level: InformationLevel) -> Result<Vec<f64>> {
        self.schema.project(&instance.features, level)
    }
}
