use robust_wald::family::FamilySpec;
use robust_wald::sim::{run, run_study, Contamination, Direction, SimTest, SimulationConfig};

fn config(theta2: f64, replicates: usize) -> SimulationConfig {
    SimulationConfig {
        family: FamilySpec::NormalKnownSigma { sigma: 1.0 },
        test: SimTest::Simple,
        direction: Direction::default(),
        theta1: vec![0.0],
        theta2: vec![theta2],
        n: 50,
        m: 50,
        replicates,
        betas: vec![0.0, 0.1, 0.3, 0.5, 1.0],
        alpha: 0.05,
        seed: 424242,
        contamination: vec![Contamination::none()],
        tuning: None,
    }
}

#[test]
fn pure_data_size_is_near_nominal() {
    for c in run_study(&config(0.0, 1000)).unwrap() {
        assert_eq!(c.failures, 0);
        let allowance = 3.0 * c.mc_se + 0.02;
        assert!((c.rate - 0.05).abs() <= allowance, "beta {}: size {}", c.beta, c.rate);
    }
}

#[test]
fn pure_data_power_does_not_grow_with_beta() {
    let cells = run_study(&config(0.5, 1000)).unwrap();
    for w in cells.windows(2) {
        let slack = 2.0 * w[0].mc_se.max(w[1].mc_se);
        assert!(w[1].rate <= w[0].rate + slack, "beta {} -> {}", w[0].beta, w[1].beta);
    }
    assert!(cells[0].rate > 0.5);
}

#[test]
fn report_does_not_depend_on_thread_count() {
    let mut c = config(0.0, 150);
    c.contamination.push(Contamination { epsilon: 0.2, theta_c: vec![3.0], ..Contamination::none() });
    let reports: Vec<String> = ["1", "3"]
        .iter()
        .map(|t| {
            std::env::set_var("RTS_THREADS", t);
            serde_json::to_string(&run(&c).unwrap()).unwrap()
        })
        .collect();
    std::env::remove_var("RTS_THREADS");
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], serde_json::to_string(&run(&c).unwrap()).unwrap());
}
