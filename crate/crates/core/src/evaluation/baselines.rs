//! Heuristic predictors that need no training.

use crate::cohort::{AggregatedInstance, EventHistory, FeatureSchema, LARGE_INCREASES};

/// 1 when the instance's own window contains a large increase.
pub fn baseline_3_months(instance: &AggregatedInstance, schema: &FeatureSchema) -> f64 {
    let idx = schema.offsets().large_increases;
    debug_assert_eq!(schema.columns[idx].name, LARGE_INCREASES);
    if instance.features[idx] > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// 1 when a large increase happened in the same 3 months one year before the
/// prediction horizon, i.e. months `window_end - 11 ..= window_end - 9`.
pub fn baseline_12_months(instance: &AggregatedInstance, history: &EventHistory) -> f64 {
    let end = instance.window_end;
    if history.any_between(&instance.citizen_id, end.offset(-11), end.offset(-9)) {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::fixtures::series;
    use crate::cohort::{Cohort, WindowConfig};
    use crate::month::MonthIndex;

    #[test]
    fn three_month_baseline_follows_window_jumps() {
        let start = MonthIndex::new(2014, 1);
        let c = Cohort::from_records(
            &series("a", start, &[1.0, 8.0, 8.0, 8.0, 8.0]),
            WindowConfig::default(),
        )
        .unwrap();
        assert_eq!(baseline_3_months(&c.chunks[0].instances[0], &c.schema), 1.0);
        assert_eq!(baseline_3_months(&c.chunks[2].instances[0], &c.schema), 0.0);
    }

    #[test]
    fn twelve_month_baseline_looks_one_year_back() {
        let start = MonthIndex::new(2014, 1);
        // Jump at month 2 (index 1), visible to the window ending 10 months later.
        let mut hours = vec![1.0; 16];
        for h in hours.iter_mut().skip(1) {
            *h = 8.0;
        }
        let c = Cohort::from_records(&series("a", start, &hours), WindowConfig::default()).unwrap();
        let jump = start.offset(1);
        let at = |end: MonthIndex| {
            let inst = &c.chunk(end).unwrap().instances[0];
            baseline_12_months(inst, &c.history)
        };
        assert_eq!(at(jump.offset(9)), 1.0);
        assert_eq!(at(jump.offset(11)), 1.0);
        assert_eq!(at(jump.offset(8)), 0.0);
        assert_eq!(at(jump.offset(12)), 0.0);
    }

    #[test]
    fn short_history_scores_zero() {
        let start = MonthIndex::new(2014, 1);
        let c = Cohort::from_records(&series("a", start, &[1.0, 9.0, 9.0]), WindowConfig::default())
            .unwrap();
        assert_eq!(baseline_12_months(&c.chunks[0].instances[0], &c.history), 0.0);
    }
}
