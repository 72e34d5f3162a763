use nlstrain_core::train::preset;
use nlstrain_core::{Grid1D, Nonlinearity, PresetKind, Train, TrainSpec};

fn preset_a(j: usize, v_bar: f64) -> TrainSpec {
    preset(PresetKind::A, j, v_bar, 0.0, Nonlinearity::pure_power(2.0)).unwrap()
}

#[test]
fn spec_round_trips_through_json() {
    let spec = preset_a(3, 20.0);
    let js = serde_json::to_string(&spec).unwrap();
    let back: TrainSpec = serde_json::from_str(&js).unwrap();
    assert_eq!(spec, back);
}

#[test]
fn lone_soliton_has_no_source() {
    let train = Train::build(preset_a(1, 20.0)).unwrap();
    let grid = Grid1D::new(256.0, 4096).unwrap();
    for t in [0.0, 0.7, 1.5] {
        let h = train.source_values(t, &grid);
        assert!(h.iter().all(|z| z.norm() == 0.0));
    }
}

#[test]
fn source_is_smaller_for_faster_trains() {
    let grid = Grid1D::new(1024.0, 1 << 15).unwrap();
    let sup = |v_bar: f64| {
        let train = Train::build(preset_a(3, v_bar)).unwrap();
        train.source_values(1.0, &grid).iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    assert!(sup(40.0) < sup(20.0));
}

#[test]
fn source_values_match_full_source() {
    let train = Train::build(preset_a(3, 20.0)).unwrap();
    let grid = Grid1D::new(512.0, 1 << 13).unwrap();
    let a = train.source_values(0.3, &grid);
    let b = train.source(0.3, &grid).h;
    assert_eq!(a, b);
}

/// Decay rate of `sup |R_j|²|R_k|` for two receding sech² profiles.
fn overlap_rate(spec: &TrainSpec) -> f64 {
    let mut rate = f64::INFINITY;
    for (j, a) in spec.waves.iter().enumerate() {
        for (k, b) in spec.waves.iter().enumerate() {
            if j != k {
                let dv = (a.v - b.v).abs();
                rate = rate.min((2.0 * a.omega.sqrt()).min(b.omega.sqrt()) * dv);
            }
        }
    }
    rate
}

#[test]
fn source_decays_at_the_overlap_rate() {
    let spec = preset_a(3, 20.0);
    let oracle = overlap_rate(&spec);
    assert_eq!(oracle, 20.0);
    let train = Train::build(spec).unwrap();
    let grid = Grid1D::new(2560.0, 1 << 17).unwrap();
    let times = nlstrain_core::evolution::uniform_times(4.0, 160);
    let rep = nlstrain_core::train::source_decay_scan(&train, &times, &grid, 0.9, (0.5, 4.0)).unwrap();
    let fit = rep.fit_h_inf.unwrap();
    assert!(fit.r_squared > 0.95);
    assert!((fit.rate - oracle).abs() < 0.05 * oracle, "rate {}", fit.rate);
    assert!(fit.rate >= 0.4 * rep.rate_pointwise);
}
