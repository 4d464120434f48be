use homecare_core::cohort::{Cohort, InformationLevel, WindowConfig};
use homecare_core::ensemble::{build_meta_features, TrainingVariant};
use homecare_core::evaluation::{rolling_protocol, HyperParamGrid, Method, ProtocolConfig, Tuner};
use homecare_core::learners::ModelFamily;
use homecare_core::synth::{generate_cohort, SyntheticConfig};
use homecare_core::MonthIndex;

fn small_cohort() -> Cohort {
    let config = SyntheticConfig {
        n_citizens: 120,
        start_month: MonthIndex::new(2015, 1),
        end_month: MonthIndex::new(2015, 12),
        seed: 3,
        ..SyntheticConfig::default()
    };
    Cohort::from_records(&generate_cohort(&config).unwrap(), WindowConfig::default()).unwrap()
}

fn tuner() -> Tuner {
    Tuner {
        grid: HyperParamGrid { lr_lambdas: vec![1.0], rf: Vec::new() },
        ..Tuner::default()
    }
}

#[test]
fn pools_grow_one_model_per_month_and_feed_the_meta_matrix() {
    let cohort = small_cohort();
    let method: Method = "LR+LR:from_1_and_2".parse().unwrap();
    let config = ProtocolConfig {
        level: InformationLevel::IL2a,
        methods: vec![method],
        first_test: None,
        last_test: None,
        tuner: tuner(),
    };
    let outcome = rolling_protocol(&cohort, &config).unwrap();
    let months = outcome.results.len();
    assert!(months >= 2);

    for variant in [TrainingVariant::LastMonth, TrainingVariant::AllPrevious] {
        let pool = &outcome.pools[&(ModelFamily::LogReg, variant)];
        assert_eq!(pool.len(), months);
        let trained: Vec<MonthIndex> = pool.entries.iter().map(|e| e.trained_at).collect();
        assert!(trained.windows(2).all(|w| w[1] == w[0].offset(1)));
    }

    let ensemble = &outcome.ensembles[&method];
    assert_eq!(ensemble.pool.len(), 2 * months);
    let last = outcome.results.last().unwrap().t;
    let test: Vec<_> = cohort.chunk(last).unwrap().labeled().collect();
    let meta = build_meta_features(&ensemble.pool, &cohort.schema, &test).unwrap();
    assert_eq!(meta.dim(), (test.len(), 2 * months));
    assert!(meta.iter().all(|s| (0.0..=1.0).contains(s)));
}

#[test]
fn single_methods_only_train_from_the_first_test_month() {
    let cohort = small_cohort();
    let first = cohort.chunks[0].t.offset(5);
    let config = ProtocolConfig {
        level: InformationLevel::IL1,
        methods: vec!["LR_last".parse().unwrap()],
        first_test: Some(first),
        last_test: None,
        tuner: tuner(),
    };
    let outcome = rolling_protocol(&cohort, &config).unwrap();
    let pool = &outcome.pools[&(ModelFamily::LogReg, TrainingVariant::LastMonth)];
    assert_eq!(pool.entries[0].trained_at, first);
    assert_eq!(pool.len(), outcome.results.len());
}
