use igradeloc::engine::{run_replicate, run_replicates, run_scenario, Scenario, Trace};
use igradeloc::localization::{EstimateMethod, TdoaErrorModel};
use igradeloc::mobility::SensorErrorModel;
use igradeloc::report::trace_csv_bytes;
use igradeloc::scenario::paper_defaults;
use igradeloc::SimTime;

fn short(samples: u64) -> Scenario {
    let mut s = paper_defaults().unwrap();
    s.target_samples = samples;
    s
}

fn per_label(trace: &Trace, label: &str) -> Vec<String> {
    let i = trace.label_index(label).unwrap();
    trace
        .samples_for(i)
        .map(|s| format!("{:?} {:?} {:?}", s.time, s.actual, s.estimate))
        .collect()
}

#[test]
fn same_seed_same_bytes() {
    let s = short(3000);
    let a = trace_csv_bytes(&run_scenario(&s).unwrap()).unwrap();
    let b = trace_csv_bytes(&run_scenario(&s).unwrap()).unwrap();
    assert_eq!(a, b);

    let mut other = s.clone();
    other.master_seed += 1;
    assert_ne!(a, trace_csv_bytes(&run_scenario(&other).unwrap()).unwrap());
}

#[test]
fn one_sample_per_ntl_per_second() {
    let s = short(2500);
    let trace = run_scenario(&s).unwrap();
    assert_eq!(trace.samples.len(), 2500 * s.ntls.len());
    for i in 0..s.ntls.len() {
        let times: Vec<SimTime> = trace.samples_for(i).map(|x| x.time).collect();
        let expected: Vec<SimTime> = (0..2500).map(SimTime::from_secs).collect();
        assert_eq!(times, expected);
    }
}

#[test]
fn fgl_events_match_totals_and_cadence() {
    let s = short(4000);
    let trace = run_scenario(&s).unwrap();
    let p = s.timing.centroid_interval_s as u64 * 1000;
    for (i, n) in s.ntls.iter().enumerate() {
        let events = trace.fgl_events.iter().filter(|e| e.ntl == i).count() as u64;
        assert_eq!(events, trace.totals[i].fgl_count, "{}", n.label);
        if !n.profile.fine_grained {
            assert_eq!(events, 0, "{}", n.label);
        }
    }
    // The centroid timer starts with each episode.
    let starts: Vec<u64> = trace
        .samples_for(0)
        .filter(|x| x.actual.x == 0.0 && x.actual.y == 0.0)
        .map(|x| x.time.as_millis())
        .collect();
    for e in &trace.fgl_events {
        let t = e.time.as_millis();
        let start = starts.iter().rev().find(|&&s| s < t).unwrap();
        assert_eq!((t - start) % p, 0, "{e:?}");
    }
    assert!(trace.fgl_events.windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn reordering_ntls_keeps_each_trace() {
    let s = short(2000);
    let mut reversed = s.clone();
    reversed.ntls.reverse();
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&reversed).unwrap();
    for n in &s.ntls {
        assert_eq!(per_label(&a, &n.label), per_label(&b, &n.label), "{}", n.label);
    }
}

#[test]
fn dropping_an_ntl_keeps_the_others() {
    let s = short(2000);
    let mut fewer = s.clone();
    fewer.ntls.retain(|n| n.label != "FG-NTL");
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&fewer).unwrap();
    for n in &fewer.ntls {
        assert_eq!(per_label(&a, &n.label), per_label(&b, &n.label), "{}", n.label);
    }
}

#[test]
fn replicate_alone_equals_replicate_in_batch() {
    let s = short(1500);
    let batch = run_replicates(&s, 4).unwrap();
    for (k, t) in batch.iter().enumerate() {
        assert_eq!(&run_replicate(&s, k).unwrap(), t, "replicate {k}");
    }
    assert_eq!(batch[0], run_scenario(&s).unwrap());
    assert_ne!(batch[0].samples, batch[1].samples);
}

#[test]
fn improved_fires_at_least_as_often() {
    for seed in [1, 7, 42, 1234] {
        let mut s = short(4000);
        s.master_seed = seed;
        let t = run_scenario(&s).unwrap();
        let fgi = t.label_index("FG-NTL-Improved").unwrap();
        let fg = t.label_index("FG-NTL").unwrap();
        assert!(t.totals[fgi].fgl_count >= t.totals[fg].fgl_count, "seed {seed}");
    }
}

#[test]
fn error_free_dead_reckoning_tracks_the_walker() {
    let mut s = short(3000);
    s.tdoa = TdoaErrorModel { qmin: 0.0, qmax: 0.0 };
    for n in &mut s.ntls {
        if n.profile.self_localize {
            n.sensors = Some(SensorErrorModel::PERFECT);
        }
    }
    let t = run_scenario(&s).unwrap();
    let i = t.label_index("EFG-NTL-Accurate").unwrap();
    let mut checked = 0;
    for x in t.samples_for(i) {
        if matches!(x.estimate.method, EstimateMethod::Fine | EstimateMethod::DeadReckoned) {
            assert!(x.error().unwrap() < 1e-9, "{:?}", x);
            checked += 1;
        }
    }
    assert!(checked > 2500, "{checked}");
}

#[test]
fn episodes_restart_at_top_left() {
    let s = short(5000);
    let t = run_scenario(&s).unwrap();
    assert!(t.episodes > 1);
    let starts = t
        .samples_for(0)
        .filter(|x| x.actual.x == 0.0 && x.actual.y == 0.0)
        .count();
    assert_eq!(starts as u32, t.episodes);
    let corner = s.grid.bounds().max;
    for x in t.samples_for(0) {
        assert!(s.grid.bounds().contains(x.actual));
        assert!(x.actual.x <= corner.x && x.actual.y <= corner.y);
    }
}
