//! Seeded synthetic cohorts with a planted logistic hazard for large
//! increases in care hours.
//!
//! Hours are simulated in quarter-hour units so that month-over-month
//! differences are exact in floating point. A jump of at least 6 hours
//! happens in month `m` with probability
//! `sigmoid(b + c_inc·jumps + c_hosp·hosp + c_sick·sick + c_week·weekend + c_age·age_z + c_frail·frailty)`
//! where the activity terms look at months `m-3 ..= m-1`. Every other month
//! changes hours by less than 6, so the realized large increases are exactly
//! the planted jumps.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cohort::{
    CitizenId, CitizenMonthRecord, Gender, LivingType, FEEDBACK_HOSPITALIZED, SERVICE_EMERGENCY,
    SERVICE_PERSONAL, SERVICE_PRACTICAL, SERVICE_SICK,
};
use crate::error::{Error, Result};
use crate::month::MonthIndex;

pub const COEF_RECENT_INCREASES: &str = "recent_increases";
pub const COEF_HOSPITALIZED: &str = "hospitalized";
pub const COEF_SICK_CARE: &str = "sick_care";
pub const COEF_WEEKEND_CARE: &str = "weekend_care";
pub const COEF_AGE: &str = "age";
pub const COEF_FRAILTY: &str = "frailty";

/// Names accepted in [`SyntheticConfig::coefficients`].
pub const COEFFICIENT_NAMES: [&str; 6] = [
    COEF_RECENT_INCREASES,
    COEF_HOSPITALIZED,
    COEF_SICK_CARE,
    COEF_WEEKEND_CARE,
    COEF_AGE,
    COEF_FRAILTY,
];

const QUARTERS_PER_HOUR: i64 = 4;
/// Smallest planted jump, 6 hours.
const JUMP_MIN: i64 = 6 * QUARTERS_PER_HOUR;
/// Largest month-over-month change outside a jump, 5.75 hours.
const DRIFT_MAX: i64 = JUMP_MIN - 1;
/// Two hours; large enough that every service share fits inside the total.
const HOURS_FLOOR: i64 = 2 * QUARTERS_PER_HOUR;
/// Months simulated before `start_month` so the first observed months are
/// already in the steady state.
const BURN_IN: i32 = 24;
const RECENT: usize = 3;
/// Citizens simulated to calibrate the intercept.
const PILOT_CITIZENS: u64 = 3000;
const PILOT_STREAM: u64 = 1 << 48;
const COST_PER_QUARTER: f64 = 87.5;
const PRIVATE_COST_PER_QUARTER: f64 = 100.0;

const ZIPCODES: [&str; 12] = [
    "1050", "1159", "1306", "1620", "1799", "2100", "2200", "2300", "2400", "2450", "2500", "2700",
];
const CIVIL_STATUSES: [&str; 4] = ["married", "widowed", "divorced", "unmarried"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_citizens: usize,
    pub start_month: MonthIndex,
    pub end_month: MonthIndex,
    pub seed: u64,
    /// Monthly jump probability with all hazard terms at zero. Only used when
    /// `target_positive_rate` is `None`.
    pub base_event_rate: f64,
    /// Hazard coefficients keyed by the names in [`COEFFICIENT_NAMES`];
    /// missing names count as zero.
    pub coefficients: BTreeMap<String, f64>,
    /// When set, the intercept is calibrated so that this fraction of labeled
    /// 3-month windows is followed by a jump within 3 months.
    pub target_positive_rate: Option<f64>,
    /// Fraction of citizens whose records stop before `end_month`.
    pub censored_fraction: f64,
    /// Fraction of citizens whose records start after `start_month`.
    pub late_entry_fraction: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let coefficients = [
            (COEF_RECENT_INCREASES, 1.3),
            (COEF_HOSPITALIZED, 0.9),
            (COEF_SICK_CARE, 0.8),
            (COEF_WEEKEND_CARE, 0.8),
            (COEF_AGE, 0.3),
            (COEF_FRAILTY, 0.5),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        SyntheticConfig {
            n_citizens: 5000,
            start_month: MonthIndex::new(2013, 4),
            end_month: MonthIndex::new(2017, 4),
            seed: 0,
            base_event_rate: 0.03,
            coefficients,
            target_positive_rate: Some(0.12),
            censored_fraction: 0.1,
            late_entry_fraction: 0.1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_citizens == 0 {
            return bad("n_citizens must be positive".into());
        }
        if self.start_month >= self.end_month {
            return bad(format!(
                "start_month {} must precede end_month {}",
                self.start_month, self.end_month
            ));
        }
        let probabilities = [
            ("base_event_rate", Some(self.base_event_rate)),
            ("target_positive_rate", self.target_positive_rate),
            ("censored_fraction", Some(self.censored_fraction)),
            ("late_entry_fraction", Some(self.late_entry_fraction)),
        ];
        for (name, value) in probabilities {
            if let Some(p) = value {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("{name} must lie in [0, 1], got {p}"));
                }
            }
        }
        let unknown: Vec<String> = self
            .coefficients
            .keys()
            .filter(|k| !COEFFICIENT_NAMES.contains(&k.as_str()))
            .map(|k| format!("coefficients.{k}"))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownKeys(unknown));
        }
        if let Some((k, v)) = self.coefficients.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("coefficient {k} must be finite, got {v}"));
        }
        Ok(())
    }

    /// Parses a JSON object. Every top-level key not naming a field is
    /// reported; absent fields take their defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let known = [
            "n_citizens",
            "start_month",
            "end_month",
            "seed",
            "base_event_rate",
            "coefficients",
            "target_positive_rate",
            "censored_fraction",
            "late_entry_fraction",
        ];
        check_keys(&value, &known)?;
        let config: SyntheticConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| e.context(format!("in {}", path.display())))
    }

    fn coefficient(&self, name: &str) -> f64 {
        self.coefficients.get(name).copied().unwrap_or(0.0)
    }
}

/// Errors with every key of the JSON object `value` missing from `known`.
pub(crate) fn check_keys(value: &serde_json::Value, known: &[&str]) -> Result<()> {
    let object = value
        .as_object()
        .ok_or_else(|| Error::Config("expected a JSON object".into()))?;
    let unknown: Vec<String> = object
        .keys()
        .filter(|k| !known.contains(&k.as_str()))
        .cloned()
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::UnknownKeys(unknown))
    }
}

#[derive(Debug, Clone, Copy)]
struct Hazard {
    intercept: f64,
    recent_increases: f64,
    hospitalized: f64,
    sick_care: f64,
    weekend_care: f64,
    age: f64,
    frailty: f64,
}

impl Hazard {
    fn from_config(config: &SyntheticConfig, intercept: f64) -> Self {
        Hazard {
            intercept,
            recent_increases: config.coefficient(COEF_RECENT_INCREASES),
            hospitalized: config.coefficient(COEF_HOSPITALIZED),
            sick_care: config.coefficient(COEF_SICK_CARE),
            weekend_care: config.coefficient(COEF_WEEKEND_CARE),
            age: config.coefficient(COEF_AGE),
            frailty: config.coefficient(COEF_FRAILTY),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Static traits of one simulated citizen.
#[derive(Debug, Clone)]
struct Profile {
    gender: Gender,
    /// Age at the first simulated month.
    age0: u32,
    zipcode: &'static str,
    civil_status: &'static str,
    living_type: LivingType,
    public_share: f64,
    dementia: bool,
    /// Observed months, as offsets from the first simulated month.
    observed: std::ops::Range<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
struct MonthState {
    quarters: i64,
    jump: bool,
    sick: bool,
    personal: bool,
    hospitalized: bool,
    not_home: u32,
    other: u32,
    rehab: bool,
    /// Random splits of the month's hours, drawn every month.
    weekend_share: f64,
    day_share: f64,
    evening_share: f64,
    practical_share: f64,
}

struct CitizenPath {
    profile: Profile,
    months: Vec<MonthState>,
}

/// Simulates one citizen from `rng`. The random draws of each month are made
/// in a fixed order and do not depend on earlier outcomes, so the same
/// stream yields the same exogenous history under any hazard.
fn simulate(rng: &mut ChaCha8Rng, hazard: &Hazard, total_months: usize, observed_months: usize, config: &SyntheticConfig) -> CitizenPath {
    let gender = if rng.random_bool(0.62) { Gender::F } else { Gender::M };
    let age0 = rng.random_range(65..=93);
    let zipcode = ZIPCODES[rng.random_range(0..ZIPCODES.len())];
    let civil_status = CIVIL_STATUSES[rng.random_range(0..CIVIL_STATUSES.len())];
    let living_type = match rng.random::<f64>() {
        u if u < 0.7 => LivingType::OwnResidence,
        u if u < 0.9 => LivingType::SeniorHousing,
        _ => LivingType::AssignedResidence,
    };
    let frailty: f64 = rng.sample(StandardNormal);
    let base_level = 12 + (rng.sample::<f64, _>(Exp1) * 24.0) as i64;
    let public_share = if rng.random_bool(0.8) { 1.0 } else { rng.random_range(0.5..1.0) };
    let dementia = rng.random_bool(0.12);

    let burn_in = total_months - observed_months;
    let late = rng.random::<f64>() < config.late_entry_fraction;
    let censored = rng.random::<f64>() < config.censored_fraction;
    let entry_draw = rng.random_range(1..observed_months.max(2));
    let exit_draw = rng.random_range(1..observed_months.max(2));
    let mut first = if late { entry_draw } else { 0 };
    let mut last = if censored { exit_draw } else { observed_months };
    if first >= last {
        // Keep at least one observed month.
        first = first.min(observed_months - 1);
        last = first + 1;
    }

    let age_z = |m: usize| (f64::from(age0) + m as f64 / 12.0 - 80.0) / 8.0;
    let mut months: Vec<MonthState> = Vec::with_capacity(total_months);
    let mut quarters = base_level;
    let mut sick = false;
    let mut personal = rng.random_bool(0.3);
    for m in 0..total_months {
        let u_sick = rng.random::<f64>();
        let u_personal = rng.random::<f64>();
        let u_hosp = rng.random::<f64>();
        let u_jump = rng.random::<f64>();
        let jump_extra: f64 = rng.sample(Exp1);
        let noise: f64 = rng.sample(StandardNormal);
        let u_not_home = rng.random::<f64>();
        let u_other = rng.random::<f64>();
        let u_rehab = rng.random::<f64>();
        let splits: [f64; 4] = rng.random();

        let hospitalized = u_hosp < sigmoid(-3.6 + 0.4 * age_z(m) + 0.5 * frailty);
        let recently_hospitalized = months.last().is_some_and(|s| s.hospitalized);
        sick = if sick {
            u_sick >= 0.35
        } else {
            u_sick < if recently_hospitalized { 0.5 } else { sigmoid(-3.3 + 0.4 * frailty) }
        };
        personal = if personal { u_personal >= 0.06 } else { u_personal < 0.025 };

        let recent = &months[m.saturating_sub(RECENT)..];
        let eta = hazard.intercept
            + hazard.recent_increases * recent.iter().filter(|s| s.jump).count() as f64
            + hazard.hospitalized * f64::from(u8::from(recent.iter().any(|s| s.hospitalized)))
            + hazard.sick_care * f64::from(u8::from(recent.iter().any(|s| s.sick)))
            + hazard.weekend_care * f64::from(u8::from(recent.iter().any(|s| s.personal)))
            + hazard.age * age_z(m)
            + hazard.frailty * frailty;
        let jump = m > 0 && u_jump < sigmoid(eta);

        if jump {
            quarters += JUMP_MIN + (jump_extra * 16.0) as i64;
        } else {
            let reversion = -0.06 * (quarters - base_level) as f64;
            let delta = (reversion + 3.0 * noise).round() as i64;
            quarters = (quarters + delta.min(DRIFT_MAX)).max(HOURS_FLOOR);
        }
        months.push(MonthState {
            quarters,
            jump,
            sick,
            personal,
            hospitalized,
            not_home: u32::from(u_not_home < 0.15),
            other: u32::from(u_other < 0.05),
            rehab: u_rehab < 0.04,
            weekend_share: 0.2 + 0.6 * splits[0],
            day_share: 0.45 + 0.3 * splits[1],
            evening_share: 0.5 + 0.4 * splits[2],
            practical_share: 0.3 + 0.5 * splits[3],
        });
    }
    CitizenPath {
        profile: Profile {
            gender,
            age0,
            zipcode,
            civil_status,
            living_type,
            public_share,
            dementia,
            observed: burn_in + first..burn_in + last,
        },
        months,
    }
}

fn citizen_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn share(quarters: i64, fraction: f64) -> i64 {
    ((quarters as f64 * fraction).round() as i64).max(1)
}

fn records_for(path: &CitizenPath, id: &CitizenId, sim_start: MonthIndex) -> Vec<CitizenMonthRecord> {
    let p = &path.profile;
    let hours = |q: i64| q as f64 / QUARTERS_PER_HOUR as f64;
    path.months[p.observed.clone()]
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let m = p.observed.start + i;
            let q = s.quarters;
            let mut service = [0i64; 10];
            if s.hospitalized {
                service[SERVICE_EMERGENCY] = share(q, 0.1);
            }
            if s.sick {
                service[SERVICE_SICK] = share(q, 0.15);
            }
            if s.personal {
                service[SERVICE_PERSONAL] = share(q, 0.3);
            }
            if p.dementia {
                service[2] = share(q, 0.1);
            }
            if s.rehab {
                service[8] = share(q, 0.05);
            }
            let rest = q - service.iter().sum::<i64>();
            debug_assert!(rest >= 0);
            service[SERVICE_PRACTICAL] = (rest as f64 * s.practical_share).round() as i64;
            service[0] = rest - service[SERVICE_PRACTICAL];
            let total = q;

            let weekend = (service[SERVICE_PERSONAL] as f64 * s.weekend_share).round() as i64;
            let day = (total as f64 * s.day_share).round() as i64;
            let evening = ((total - day) as f64 * s.evening_share).round() as i64;
            let time = [day, evening, total - day - evening, total - weekend, weekend];

            let public = (total as f64 * p.public_share).round() as i64;
            let private = total - public;
            let mut feedback = [total.max(1) as u32 / 4, s.not_home, 0, s.other];
            feedback[FEEDBACK_HOSPITALIZED] = u32::from(s.hospitalized);

            CitizenMonthRecord {
                citizen_id: id.clone(),
                month: sim_start.offset(m as i32),
                gender: p.gender,
                age: p.age0 + (m / 12) as u32,
                zipcode: p.zipcode.to_string(),
                civil_status: p.civil_status.to_string(),
                living_type: p.living_type,
                hours_total: hours(total),
                hours_by_time: time.map(hours),
                hours_by_service: service.map(hours),
                hours_by_provider: [hours(public), hours(private)],
                feedback_counts: feedback,
                cost: public as f64 * COST_PER_QUARTER + private as f64 * PRIVATE_COST_PER_QUARTER,
            }
        })
        .collect()
}

/// Fraction of labeled windows (3-month window, 3-month horizon) whose
/// horizon contains a jump, over the observed part of `paths`.
fn positive_rate(paths: &[CitizenPath]) -> Option<f64> {
    let (mut labeled, mut positive) = (0usize, 0usize);
    for path in paths {
        let observed = &path.months[path.profile.observed.clone()];
        // A jump in the first observed month is not visible as an increase.
        let flags: Vec<bool> = observed
            .iter()
            .enumerate()
            .map(|(i, s)| i > 0 && s.jump)
            .collect();
        for end in 2..flags.len() {
            if end + 3 < flags.len() {
                labeled += 1;
                positive += usize::from(flags[end + 1..=end + 3].iter().any(|f| *f));
            }
        }
    }
    (labeled > 0).then(|| positive as f64 / labeled as f64)
}

fn month_span(config: &SyntheticConfig) -> (usize, usize) {
    let observed = (config.end_month.since(config.start_month) + 1) as usize;
    (observed + BURN_IN as usize, observed)
}

/// Intercept reaching `target` on a pilot cohort drawn from streams disjoint
/// from the generated citizens. The realized rate is non-decreasing in the
/// intercept, so bisection applies.
fn calibrate_intercept(config: &SyntheticConfig, target: f64) -> f64 {
    let (total, observed) = month_span(config);
    let rate_at = |b: f64| {
        let hazard = Hazard::from_config(config, b);
        let paths: Vec<CitizenPath> = (0..PILOT_CITIZENS)
            .map(|i| simulate(&mut citizen_rng(config.seed, PILOT_STREAM + i), &hazard, total, observed, config))
            .collect();
        positive_rate(&paths).unwrap_or(0.0)
    };
    let (mut lo, mut hi) = (-15.0, 5.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Hazard intercept the generator uses for `config`.
pub fn hazard_intercept(config: &SyntheticConfig) -> f64 {
    match config.target_positive_rate {
        Some(target) => calibrate_intercept(config, target),
        None if config.base_event_rate <= 0.0 => f64::NEG_INFINITY,
        None if config.base_event_rate >= 1.0 => f64::INFINITY,
        None => logit(config.base_event_rate),
    }
}

/// Records of every citizen, ordered by citizen then month.
pub fn generate_cohort(config: &SyntheticConfig) -> Result<Vec<CitizenMonthRecord>> {
    config.validate()?;
    let hazard = Hazard::from_config(config, hazard_intercept(config));
    let (total, observed) = month_span(config);
    let sim_start = config.start_month.offset(-BURN_IN);
    let width = config.n_citizens.to_string().len().max(6);
    let mut records = Vec::with_capacity(config.n_citizens * observed);
    for i in 0..config.n_citizens {
        let id = CitizenId(format!("C{:0width$}", i + 1));
        let path = simulate(&mut citizen_rng(config.seed, i as u64), &hazard, total, observed, config);
        records.extend(records_for(&path, &id, sim_start));
    }
    Ok(records)
}
