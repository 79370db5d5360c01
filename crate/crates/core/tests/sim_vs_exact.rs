use combwalk::kernel::collision_series;
use combwalk::kernel::moments::CountingProblem;
use combwalk::sim::{collect_replicas, summarize, SimConfig};
use combwalk::{Comb, Vertex};

#[test]
fn monte_carlo_agrees_with_exact_values() {
    let comb = Comb::log(1.0).unwrap();
    let starts = vec![Vertex::ORIGIN; 3];
    let mut config = SimConfig::new(comb.clone(), starts.clone(), 16);
    config.replicas = 20_000;
    config.master_seed = 42;
    config.probes = vec![6];
    config.horizon = config.t1().max(6);
    let records = collect_replicas(&config, 2).unwrap();
    let s = summarize(&records).unwrap();

    let h1 = CountingProblem::h1(&comb, 16, config.eps, config.h, config.c2, &starts).unwrap();
    let exact_h1 = h1.expectation().unwrap();
    let h1_est = s.h1.as_ref().unwrap();
    assert!(
        h1_est.agrees_with(exact_h1, 4.0),
        "{h1_est:?} vs {exact_h1}"
    );

    let meet = collision_series(&comb, &starts, 6, None).unwrap()[6];
    assert!(
        s.probe_meet[0].agrees_with(meet, 4.0),
        "{:?} vs {meet}",
        s.probe_meet[0]
    );
}

#[test]
fn same_seed_same_records() {
    let comb = Comb::log(0.5).unwrap();
    let mut config = SimConfig::new(
        comb,
        vec![Vertex::backbone(2), Vertex::ORIGIN, Vertex::backbone(-2)],
        16,
    );
    config.replicas = 50;
    config.horizon = 500;
    config.master_seed = 3;
    assert_eq!(
        collect_replicas(&config, 1).unwrap(),
        collect_replicas(&config, 3).unwrap()
    );
    config.master_seed = 4;
    let other = collect_replicas(&config, 1).unwrap();
    config.master_seed = 3;
    assert_ne!(collect_replicas(&config, 1).unwrap(), other);
}
