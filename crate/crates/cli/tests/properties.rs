use num_rational::BigRational;
use proptest::prelude::*;
use qpool_cli::emit::format_float;
use qpool_cli::{Estimate, Param, PoolClassical, Scenario, ScenarioConfig};

proptest! {
    #[test]
    fn floats_survive_canonical_form(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn ratios_parse_exactly(p in 0i64..1000, q in 1i64..1000) {
        let r = Param::Text(format!("{p}/{q}")).rational().unwrap();
        prop_assert_eq!(r, BigRational::new(p.into(), q.into()));
    }

    #[test]
    fn configs_round_trip(ws in proptest::collection::vec(0.01f64..1.0, 1..6), seed in proptest::option::of(any::<u64>())) {
        let total: f64 = ws.iter().sum();
        let p: Vec<Param> = ws.iter().map(|w| Param::Number(w / total)).collect();
        let flat = vec![Param::Text(format!("1/{}", ws.len())); ws.len()];
        if let Ok(cfg) = ScenarioConfig::from_value(
            ScenarioConfig { seed, scenario: Scenario::PoolClassical(PoolClassical { p, q: flat }) }.to_value(),
        ) {
            prop_assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
        let cfg = ScenarioConfig {
            seed,
            scenario: Scenario::Estimate(Estimate {
                alice: ws.iter().map(|w| Param::Number(*w)).collect(),
                bob: vec![Param::Text("3/7".into())],
                n_samples: None,
            }),
        };
        prop_assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
