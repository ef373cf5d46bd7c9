use percap::runner::{run, run_to_dir, sweep_configs, sweep_to_dir, ExperimentConfig, GridAxis};
use proptest::prelude::*;

fn cfg(text: &str) -> ExperimentConfig {
    let c = ExperimentConfig::from_json(text).unwrap();
    c.validate().unwrap();
    c
}

#[test]
fn tau_at_the_origin_is_one() {
    let rec = run(&cfg(r#"{"kind":"tau","dimension":3,"p":0.2,"z":[0,0,0],"n":50}"#)).unwrap();
    assert_eq!(rec.rows[0].value, 1.0);
    assert_eq!(rec.rows[0].std_error, Some(0.0));
}

#[test]
fn two_point_capacity_through_the_runner() {
    let rec = run(&cfg(r#"{"kind":"cap_d4","dimension":7,"a":[[0,0,0,0,0,0,0],[1,0,0,0,0,0,0]]}"#)).unwrap();
    assert!((rec.rows[0].value - 16.0 / 9.0).abs() < 1e-9);
}

#[test]
fn single_point_sweep_equals_run() {
    let template = cfg(r#"{"kind":"one_arm","dimension":2,"p":0.5,"r":4,"n":2000,"master_seed":9}"#);
    let grid = vec!["r=6".parse::<GridAxis>().unwrap()];
    let dir = tempfile::tempdir().unwrap();
    let (recs, _) = sweep_to_dir(&template, &grid, dir.path()).unwrap();
    let mut direct = template.clone();
    direct.r = Some(6);
    let rec = run(&direct).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].result, rec.result);
    assert_eq!(recs[0].config, rec.config);
}

#[test]
fn sweep_rows_and_seeds() {
    let template = cfg(r#"{"kind":"one_arm","dimension":2,"p":0.5,"r":2,"n":1000,"master_seed":4}"#);
    let grid = vec!["r=2,4,8,16".parse::<GridAxis>().unwrap()];
    let configs = sweep_configs(&template, &grid).unwrap();
    let mut seeds: Vec<u64> = configs.iter().map(|(_, c)| c.master_seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 4);
    let dir = tempfile::tempdir().unwrap();
    let (recs, w) = sweep_to_dir(&template, &grid, dir.path()).unwrap();
    let rows: usize = recs.iter().map(|r| r.rows.len()).sum();
    assert_eq!(rows, 4);
    let csv = std::fs::read_to_string(&w.csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(!name.contains(".tmp"), "leftover {name}");
    }
}

#[test]
fn pcap_sweep_over_distance_widens_relative_bands() {
    let template = cfg(
        r#"{"kind":"pcap","dimension":2,"p":0.45,"a":[[0,0],[1,0]],"z":[8,0],"n":20000,"budget":100000,"master_seed":12}"#,
    );
    let grid = vec!["z=[8,0],[16,0],[32,0]".parse::<GridAxis>().unwrap()];
    let dir = tempfile::tempdir().unwrap();
    let (recs, _) = sweep_to_dir(&template, &grid, dir.path()).unwrap();
    let ratio_rows: Vec<_> = recs
        .iter()
        .flat_map(|r| r.rows.iter().filter(|row| row.label == "pcap"))
        .collect();
    assert_eq!(ratio_rows.len(), 3);
    let rel: Vec<f64> = ratio_rows
        .iter()
        .map(|r| (r.wilson_hi.unwrap() - r.wilson_lo.unwrap()) / r.value)
        .collect();
    let hits: Vec<u64> = ratio_rows.iter().map(|r| r.hits.unwrap()).collect();
    assert!(hits.windows(2).all(|w| w[1] < w[0]), "{hits:?}");
    assert!(rel.windows(2).all(|w| w[1] > w[0]), "{rel:?}");
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let base = cfg(r#"{"kind":"tau","dimension":3,"p":0.2,"z":[2,0,0],"n":3000,"master_seed":1}"#);
    let read = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut c = base.clone();
        c.workers = Some(workers);
        let (_, w) = run_to_dir(&c, dir.path()).unwrap();
        (std::fs::read(&w.csv).unwrap(), std::fs::read(&w.json).unwrap())
    };
    assert_eq!(read(1), read(8));
}

fn config_strategy() -> impl Strategy<Value = String> {
    let tau = (1usize..=4, 0.0f64..=1.0, 1u64..10_000, any::<u64>(), prop::option::of(1usize..64)).prop_map(
        |(d, p, n, seed, budget)| {
            let z = vec![1i64; d];
            let budget = budget.map_or(String::new(), |b| format!(r#","budget":{b}"#));
            format!(
                r#"{{"kind":"tau","dimension":{d},"p":{p},"z":{z:?},"n":{n},"master_seed":{seed}{budget}}}"#
            )
        },
    );
    let pcap = (5usize..=9, 0.0f64..=1.0, prop::collection::vec(-5i64..=5, 9), 1u64..1000).prop_map(
        |(d, p, z, n)| {
            format!(
                r#"{{"kind":"pcap","dimension":{d},"p":{p},"a":[{:?}],"z":{:?},"n":{n},"pairing":"paired"}}"#,
                vec![0i64; d],
                &z[..d]
            )
        },
    );
    let cal = (0.01f64..0.4, 0.5f64..0.9, 1u32..20, 0.01f64..3.0).prop_map(|(lo, hi, it, eta)| {
        format!(
            r#"{{"kind":"calibrate_pc","dimension":3,"r_pair":[2,4],"bracket":[{lo},{hi}],"n":100,"iterations":{it},"exponent":{eta},"workers":3,"output":"x"}}"#
        )
    });
    prop_oneof![tau, pcap, cal]
}

proptest! {
    #[test]
    fn config_round_trip_is_idempotent(text in config_strategy()) {
        let once = ExperimentConfig::from_json(&text).unwrap();
        let emitted = once.to_json();
        let twice = ExperimentConfig::from_json(&emitted).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(emitted, twice.to_json());
    }
}
