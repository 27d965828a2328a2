use rcp_core::packet_sim::{oscillation_metrics, run, PacketSimConfig, GBPS};
use rcp_core::Variant;

/// Smoothed rate amplitude relative to the equilibrium per-flow rate.
fn relative_swing(cfg: &PacketSimConfig) -> f64 {
    let trace = run(cfg).unwrap();
    assert!(trace.counters.conserved());
    let m = oscillation_metrics(&trace, 0.5).unwrap();
    m.rate_amplitude / (cfg.equilibrium_load().unwrap() / cfg.n_sources as f64)
}

#[test]
fn stable_runs_hold_target_utilization() {
    for (variant, a) in [(Variant::WithQueue, 0.4), (Variant::WithoutQueue, 0.8)] {
        let cfg = PacketSimConfig::new(variant, a);
        let m = oscillation_metrics(&run(&cfg).unwrap(), 0.5).unwrap();
        assert!(
            (m.mean_utilization - 0.95).abs() < 0.01,
            "{variant:?}: {m:?}"
        );
    }
}

#[test]
fn onset_brackets_fluid_prediction() {
    // The fluid model puts the boundary at pi / (2 (1 + rho*)) with queue
    // feedback and at pi / 2 without.
    for (variant, critical) in [
        (Variant::WithQueue, std::f64::consts::PI / (2.0 * 1.95)),
        (Variant::WithoutQueue, std::f64::consts::FRAC_PI_2),
    ] {
        let below = PacketSimConfig::new(variant, 0.75 * critical);
        let above = PacketSimConfig::new(variant, 1.25 * critical);
        assert!(relative_swing(&below) < 0.25, "{variant:?}");
        assert!(relative_swing(&above) >= 0.25, "{variant:?}");
    }
}

#[test]
fn queue_feedback_loses_stability_abruptly() {
    // Just past onset the queue-feedback loop lands on a large cycle while
    // the rate-only loop grows gradually.
    let with: Vec<f64> = [0.6, 0.65, 0.7, 0.75]
        .iter()
        .map(|&a| relative_swing(&PacketSimConfig::new(Variant::WithQueue, a)))
        .collect();
    let max_step = with.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    assert!(max_step > 0.3, "{with:?}");

    let without: Vec<f64> = [1.4, 1.45, 1.5, 1.55]
        .iter()
        .map(|&a| relative_swing(&PacketSimConfig::new(Variant::WithoutQueue, a)))
        .collect();
    let max_step = without.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    assert!(max_step < 0.15, "{without:?}");
}

#[test]
fn smaller_link_and_fewer_sources() {
    let cfg = PacketSimConfig {
        capacity: GBPS / 10.0,
        n_sources: 10,
        rtt: 50.0,
        control_interval: 1.0,
        ..PacketSimConfig::new(Variant::WithQueue, 0.8)
    };
    let t = run(&cfg).unwrap();
    assert!(t.counters.conserved());
    assert_eq!(t, run(&cfg).unwrap());
}
