//! Quick spacing sweep for one scenario, printing per-cell medians and the
//! mean number of detected points.
//!
//!     cargo run --release -p privnet --example sweep -- <scenario> <alpha> <reps> <delta>...

use std::collections::BTreeMap;

use privnet::simlab::{
    run_experiment, DetectorSettings, ExperimentConfig, GridConfig, ModelTemplate,
    OutputSettings, Scenario,
};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 4 {
        eprintln!("usage: sweep <scenario> <alpha> <reps> <delta>...");
        std::process::exit(2);
    }
    let scenario: Scenario = args[0].parse().expect("scenario");
    let alpha: f64 = args[1].parse().expect("alpha");
    let reps: usize = args[2].parse().expect("reps");
    let deltas: Vec<usize> = args[3..].iter().map(|s| s.parse().expect("delta")).collect();

    let cfg = ExperimentConfig {
        model: ModelTemplate {
            n1: 50,
            n2: 50,
            theta_pre: 0.1,
            theta_post: 0.4,
        },
        grid: GridConfig {
            scenarios: vec![scenario],
            alphas: vec![alpha],
            deltas,
            deltas_by_scenario: BTreeMap::new(),
            repetitions: reps,
            seed: 20260809,
        },
        detector: DetectorSettings::default(),
        output: OutputSettings {
            dir: "/tmp/sweep".into(),
            record_runtime: false,
        },
    };
    let start = std::time::Instant::now();
    let results = run_experiment(&cfg).expect("experiment");
    for s in &results.summary {
        let ks: Vec<usize> = results
            .rows
            .iter()
            .filter(|r| r.delta == s.delta && r.alpha == s.alpha)
            .map(|r| r.k_hat)
            .collect();
        let mean_k = ks.iter().sum::<usize>() as f64 / ks.len() as f64;
        println!(
            "scenario={} alpha={} delta={} median={:.4} mean_k_hat={:.2}",
            s.scenario, s.alpha, s.delta, s.median, mean_k
        );
    }
    eprintln!("elapsed: {:.1?}", start.elapsed());
}
