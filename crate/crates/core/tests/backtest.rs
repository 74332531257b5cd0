use nkpc::backtest::{horse_race, BacktestConfig, ForestSettings, GbtSettings, ModelId, Tuning};
use nkpc::data::{synth_dgp, Dataset, Series, SynthParams};
use nkpc::Error;

fn small_config() -> (BacktestConfig, ForestSettings) {
    let cfg = BacktestConfig {
        test_quarters: 8,
        horizons: vec![1, 2, 3, 4],
        models: vec![ModelId::Ols, ModelId::Rf, ModelId::Rw, ModelId::Ar, ModelId::Var],
        tuning: Tuning::Off,
        seed: 11,
        ..Default::default()
    };
    let mut forest = ForestSettings::default();
    forest.params.n_trees = 20;
    (cfg, forest)
}

fn perturb_after(d: &Dataset, cut: usize, bump: f64) -> Dataset {
    let cols: Vec<Series> = d
        .column_names()
        .map(|c| {
            let s = d.series(c).unwrap();
            let v: Vec<f64> = s
                .values()
                .iter()
                .enumerate()
                .map(|(i, x)| if i > cut { x + bump * (1.0 + i as f64 % 3.0) } else { *x })
                .collect();
            Series::new(c, s.index().to_vec(), v).unwrap()
        })
        .collect();
    Dataset::from_series(cols).unwrap()
}

#[test]
fn ledger_counts_shrink_with_horizon() {
    let (cfg, forest) = small_config();
    let d = synth_dgp(2, 70, &SynthParams::default()).unwrap().dataset;
    let ledger = horse_race(&d, &cfg, &forest, &GbtSettings::default()).unwrap();
    assert!(ledger.failures.is_empty(), "{:?}", ledger.failures);
    for (model, spec) in [("ols", "hybrid"), ("rf", "backward"), ("ar", "univariate")] {
        let counts: Vec<usize> = (1..=4).map(|h| ledger.cell(model, spec, h).len()).collect();
        assert_eq!(counts, vec![8, 7, 6, 5], "{model}/{spec}");
    }
}

#[test]
fn later_data_never_moves_earlier_forecasts() {
    let (cfg, forest) = small_config();
    let d = synth_dgp(5, 70, &SynthParams::default()).unwrap().dataset;
    let base = horse_race(&d, &cfg, &forest, &GbtSettings::default()).unwrap();
    for (trial, cut) in [61usize, 64, 67].into_iter().enumerate() {
        let moved = perturb_after(&d, cut, 0.5 + trial as f64);
        let other = horse_race(&moved, &cfg, &forest, &GbtSettings::default()).unwrap();
        let cut_q = d.index()[cut];
        let mut checked = 0;
        for r in base.records.iter().filter(|r| r.origin <= cut_q) {
            let s = other
                .records
                .iter()
                .find(|o| o.origin == r.origin && o.model == r.model && o.spec == r.spec && o.horizon == r.horizon)
                .unwrap();
            assert_eq!(r.prediction.to_bits(), s.prediction.to_bits(), "{r:?}");
            checked += 1;
        }
        assert!(checked > 0);
    }
}

#[test]
fn missing_control_is_reported_up_front() {
    let (cfg, forest) = small_config();
    let d = synth_dgp(5, 70, &SynthParams::default()).unwrap().dataset;
    let cols: Vec<Series> = d
        .column_names()
        .filter(|c| *c != "crude")
        .map(|c| d.series(c).unwrap())
        .collect();
    let d = Dataset::from_series(cols).unwrap();
    let e = horse_race(&d, &cfg, &forest, &GbtSettings::default()).unwrap_err();
    assert!(matches!(e, Error::MissingColumn(c) if c == "crude"));
}
