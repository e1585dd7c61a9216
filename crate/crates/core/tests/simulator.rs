use caids::classifier::{PatternVector, NORMAL_CLASS};
use caids::election::form_clusters;
use caids::seed::{self, Stream};
use caids::simulator::*;
use caids::topology::*;

fn small(seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::with_defaults(20);
    cfg.geometry.area_side = 150.0;
    cfg.geometry.radio_range = 70.0;
    cfg.geometry.energy = EnergyInit::Uniform { lo: 300, hi: 900 };
    cfg.threshold = 10.0;
    cfg.ticks = 120;
    cfg.seed = seed;
    cfg.train_size = 60;
    cfg.tree.ga.generations = 8;
    cfg
}

fn frozen(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.geometry.drain = DrainRates::new(0, 0).unwrap();
    cfg
}

#[test]
fn single_node_monitors_itself() {
    let mut cfg = ScenarioConfig::with_defaults(1);
    cfg.geometry.energy = EnergyInit::Fixed(1000);
    cfg.threshold = 1.0;
    cfg.ticks = 10;
    cfg.event_rate = 0.0;
    cfg.tree.ga.generations = 2;
    let out = run(&cfg).unwrap();
    assert_eq!(out.summary.terminal, TerminalState::Completed);
    assert_eq!(out.summary.initial_monitors, 1);
    assert_eq!(out.records.len(), 10);
    for (i, r) in out.records.iter().enumerate() {
        assert_eq!(r.roles, vec![Role::Monitor]);
        assert_eq!(r.energies, vec![1000 - 10 * (i as u64 + 1)]);
        assert_eq!(r.coverage, 1.0);
        assert!(r.elections.is_empty());
    }
    assert_eq!(out.summary.total_monitoring_energy, 100);
}

#[test]
fn frozen_network_never_reelects() {
    for mode in [Mode::Idfadnwca, Mode::SpaidBaseline] {
        let out = run(&frozen(small(3)).with_mode(mode)).unwrap();
        assert_eq!(out.summary.full_reruns, 0);
        assert_eq!(out.summary.intra_cluster_reelections, 0);
        assert_eq!(out.summary.total_drained_energy, 0);
        assert!(out.records.iter().all(|r| r.elections.is_empty()));
    }
}

#[test]
fn energy_is_conserved_exactly() {
    for s in 0..5 {
        for mode in [Mode::Idfadnwca, Mode::SpaidBaseline] {
            let out = run(&small(s).with_mode(mode)).unwrap();
            let last = out.records.last().unwrap();
            let remaining: u64 = last.energies.iter().sum();
            assert_eq!(out.initial_energy - remaining, out.summary.total_drained_energy);
            let per_tick: u64 = out.records.iter().map(|r| r.drained_energy).sum();
            assert_eq!(per_tick, out.summary.total_drained_energy);
            let monitor: u64 = out.records.iter().map(|r| r.monitor_energy).sum();
            assert_eq!(monitor, out.summary.total_monitoring_energy);
            assert!(monitor <= per_tick);
        }
    }
}

#[test]
fn modes_start_from_the_same_election() {
    for s in 0..5 {
        let a = run(&small(s).with_mode(Mode::Idfadnwca)).unwrap();
        let b = run(&small(s).with_mode(Mode::SpaidBaseline)).unwrap();
        assert!(a.initial_assignment.is_some());
        assert_eq!(a.initial_assignment, b.initial_assignment);
        assert_eq!(a.initial_energy, b.initial_energy);
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = small(9);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.records, b.records);
    let c = run(&cfg.with_seed(10)).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn reelections_stay_local() {
    for s in 0..10 {
        let out = run(&small(s)).unwrap();
        assert_eq!(out.summary.locality_violations, 0);
        for r in &out.records {
            for e in &r.elections {
                if let ElectionEvent::IntraCluster { role_changes, stranded, .. } = e {
                    assert!(*role_changes <= 2 + stranded);
                }
            }
        }
    }
}

#[test]
fn first_tick_detections_replay_offline() {
    let mut cfg = frozen(small(4));
    cfg.event_rate = 0.0;
    cfg.ticks = 1;
    let bits = ["11000000", "00111111", "11010101", "00000001"];
    for (i, b) in bits.iter().cycle().take(cfg.geometry.node_count).enumerate() {
        let label = u32::from(b.starts_with("11"));
        cfg.events.push(ScheduledEvent {
            tick: 1,
            source: NodeId(i as u32),
            pattern: PatternVector::parse(b, Some(label)).unwrap(),
        });
    }
    let (tree, acc) = train_classifier(&cfg).unwrap();
    let out = run_with_classifier(&cfg, &tree, acc).unwrap();

    let topology = build_geometric(&cfg.geometry, seed::sub_seed(cfg.seed, Stream::Topology)).unwrap();
    let clusters = form_clusters(&topology, out.initial_assignment.as_ref().unwrap()).unwrap();
    let mut expected = DetectionCounts::default();
    for ev in &cfg.events {
        let covered = clusters.iter().any(|c| c.root == ev.source || c.members.contains(&ev.source));
        let d = if covered { Detection::Alert(tree.classify(&ev.pattern).unwrap()) } else { Detection::Miss };
        assert_eq!(d, detect(&topology, &clusters, &tree, ev.source, &ev.pattern).unwrap());
        expected.record(d, ev.truth());
    }
    assert_eq!(out.records[0].detections, expected);
    assert_eq!(expected.delivered(), cfg.events.len() as u64);
}

#[test]
fn normal_misses_are_true_negatives() {
    let mut c = DetectionCounts::default();
    c.record(Detection::Miss, NORMAL_CLASS);
    c.record(Detection::Miss, 1);
    c.record(Detection::Alert(1), 1);
    c.record(Detection::Alert(0), 1);
    assert_eq!((c.true_negative, c.false_negative, c.true_positive, c.misses), (1, 2, 1, 2));
}

#[test]
fn frozen_compare_has_zero_delta() {
    let report = compare(&frozen(small(0)), &[0, 1, 2]).unwrap();
    for s in &report.seeds {
        assert_eq!(s.rerun_delta(), 0);
        assert_eq!(s.energy_delta(), 0);
        assert_eq!(s.first_series, s.second_series);
    }
    assert_eq!(report.seeds_first_not_worse(), 3);
}

#[test]
fn swapping_modes_mirrors_the_report() {
    let seeds = [5, 6, 7];
    let ab = compare_modes(&small(0), &seeds, Mode::Idfadnwca, Mode::SpaidBaseline).unwrap();
    let ba = compare_modes(&small(0), &seeds, Mode::SpaidBaseline, Mode::Idfadnwca).unwrap();
    for (x, y) in ab.seeds.iter().zip(&ba.seeds) {
        assert_eq!(x.rerun_delta(), -y.rerun_delta());
        assert_eq!(x.energy_delta(), -y.energy_delta());
        assert_eq!(x.first, y.second);
    }
    assert_eq!(ab.mean_rerun_delta(), -ba.mean_rerun_delta());
}

#[test]
fn unreachable_threshold_ends_at_tick_zero() {
    let mut cfg = small(1);
    cfg.threshold = 1e9;
    let out = run(&cfg).unwrap();
    assert_eq!(out.summary.terminal, TerminalState::NoEligibleMonitors { tick: 0 });
    assert!(out.records.is_empty());
}

#[test]
fn exhausted_network_stops_early() {
    let mut cfg = small(2);
    cfg.geometry.energy = EnergyInit::Uniform { lo: 100, hi: 200 };
    cfg.ticks = 1000;
    let out = run(&cfg).unwrap();
    assert_ne!(out.summary.terminal, TerminalState::Completed);
    assert!(out.summary.ticks_completed < 1000);
    assert_eq!(out.records.len() as u64, out.summary.ticks_completed);
}

#[test]
fn joins_are_recorded() {
    let mut cfg = frozen(small(6));
    cfg.joins = vec![JoinEvent { tick: 5, position: (75.0, 75.0), energy: 500 }];
    let out = run(&cfg).unwrap();
    assert_eq!(out.summary.joins, 1);
    assert_eq!(out.records[4].energies.len(), cfg.geometry.node_count + 1);
    assert!(out.records[4].elections.iter().any(|e| matches!(e, ElectionEvent::Join { .. })));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(0);
    cfg.hop_radius = 0;
    assert!(run(&cfg).is_err());
    let mut cfg = small(0);
    cfg.ticks = 0;
    assert!(run(&cfg).is_err());
    assert!(compare(&small(0), &[]).is_err());
}
