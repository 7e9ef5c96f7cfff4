use proptest::prelude::*;
use saag_core::gaze::{fixations, heatmap, ingest, parse_log, GazeSample, GazeTrace};

const W: usize = 9;

/// Dwell-and-jump traces: clusters of jittered samples separated by saccades,
/// with occasional tracking loss and excursions off the board.
fn trace_strategy() -> impl Strategy<Value = GazeTrace> {
    let dwell = (
        -1.0f64..(W as f64 + 1.0),
        -1.0f64..(W as f64 + 1.0),
        0.0f64..0.4,
        prop::collection::vec((1.0f64..25.0, -1.0f64..1.0, -1.0f64..1.0, prop::bool::weighted(0.9)), 1..30),
    );
    prop::collection::vec(dwell, 0..8).prop_map(|dwells| {
        let mut t = 0.0;
        let mut out = Vec::new();
        for (cx, cy, jitter, samples) in dwells {
            for (dt, jx, jy, valid) in samples {
                out.push(GazeSample::new(t, cx + jx * jitter, cy + jy * jitter, valid));
                t += dt;
            }
        }
        ingest(out).unwrap()
    })
}

fn on_board(x: f64, y: f64) -> bool {
    (0.0..W as f64).contains(&x) && (0.0..W as f64).contains(&y)
}

fn max_interval(trace: &GazeTrace) -> f64 {
    trace.samples().windows(2).map(|w| w[1].t_ms - w[0].t_ms).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn heatmap_mass_matches_valid_dwell(trace in trace_strategy()) {
        let hm = heatmap(&trace, W, None);
        let s = trace.samples();
        let on: f64 = s.windows(2).filter(|w| w[0].valid && on_board(w[0].x, w[0].y)).map(|w| w[1].t_ms - w[0].t_ms).sum();
        let all: f64 = s.windows(2).filter(|w| w[0].valid).map(|w| w[1].t_ms - w[0].t_ms).sum();
        let tol = max_interval(&trace) + 1e-9;
        prop_assert!((hm.mass() - on).abs() <= tol, "grid {} vs dwell {}", hm.mass(), on);
        prop_assert!((hm.mass() + hm.off_board - all).abs() <= 1e-6);
        prop_assert!((hm.total_dwell_ms - trace.valid_dwell_ms()).abs() <= 1e-6);
        prop_assert!(hm.grid.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn decayed_mass_never_exceeds_raw(trace in trace_strategy(), half_life in 10.0f64..5000.0) {
        let raw = heatmap(&trace, W, None);
        let decayed = heatmap(&trace, W, Some(half_life));
        for (r, d) in raw.grid.iter().zip(&decayed.grid) {
            prop_assert!(*d <= r + 1e-9);
        }
    }

    #[test]
    fn fixation_count_non_increasing_in_duration(trace in trace_strategy()) {
        let counts: Vec<usize> = [20.0, 50.0, 100.0, 150.0, 250.0, 400.0]
            .iter()
            .map(|d| fixations(&trace, 1.0 / 3.0, *d).fixations.len())
            .collect();
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", counts);
    }

    #[test]
    fn fixations_respect_thresholds(trace in trace_strategy(), disp in 0.05f64..1.5, dur in 10.0f64..300.0) {
        let g = fixations(&trace, disp, dur);
        let s = trace.samples();
        let mut prev_end = f64::NEG_INFINITY;
        for f in &g.fixations {
            prop_assert!(f.duration_ms >= dur);
            prop_assert!(f.onset_ms >= prev_end - 1e-9);
            prev_end = f.onset_ms + f.duration_ms;
            let window: Vec<&GazeSample> =
                s.iter().filter(|p| p.valid && p.t_ms >= f.onset_ms && p.t_ms <= prev_end + 1e-9).collect();
            prop_assert!(window.len() >= f.samples);
        }
        prop_assert_eq!(g.saccades.len(), g.fixations.len().saturating_sub(1));
        for (i, sc) in g.saccades.iter().enumerate() {
            prop_assert_eq!((sc.from, sc.to), (i, i + 1));
        }
    }

    #[test]
    fn log_text_round_trips(trace in trace_strategy()) {
        prop_assert_eq!(parse_log(&trace.to_text()).unwrap(), trace);
    }
}

#[test]
fn decreasing_timestamps_are_rejected() {
    let s = [GazeSample::new(10.0, 1.0, 1.0, true), GazeSample::new(5.0, 1.0, 1.0, true)];
    assert!(ingest(s).is_err());
    assert!(parse_log("10, 1, 1, 1\n5, 1, 1, 1\n").is_err());
}

#[test]
fn empty_trace_gives_zero_heatmap() {
    let hm = heatmap(&ingest([]).unwrap(), W, None);
    assert_eq!(hm.mass(), 0.0);
    assert_eq!(hm.grid.len(), 27 * 27);
}

// Raising the dispersion threshold can merge two nearby dwells into one
// fixation, so the count is not monotone in that direction.
#[test]
fn dispersion_threshold_can_reduce_count() {
    let mut s = Vec::new();
    for i in 0..20 {
        let x = if i < 10 { 2.0 } else { 2.5 };
        s.push(GazeSample::new(i as f64 * 20.0, x, 2.0, true));
    }
    let t = ingest(s).unwrap();
    assert_eq!(fixations(&t, 1.0 / 3.0, 100.0).fixations.len(), 2);
    assert_eq!(fixations(&t, 1.0, 100.0).fixations.len(), 1);
}
