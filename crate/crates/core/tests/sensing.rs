mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seamquest::radio::RssiSample;
use seamquest::sensing::{arrival_check, estimate, BeaconHistory, SmoothingConfig, SmoothingMethod, Trend, Zone};
use seamquest::SimTime;
use support::{oracle_arrival, oracle_estimate, random_config, random_stream, Obs};

fn secs(s: f64) -> SimTime {
    SimTime::from_secs(s)
}

fn feed(stream: &[Obs], cfg: &SmoothingConfig) -> BeaconHistory {
    let mut h = BeaconHistory::new();
    for o in stream {
        let s = match o.rssi {
            Some(v) => RssiSample::detected(o.t, "b", v),
            None => RssiSample::missed(o.t, "b"),
        };
        h.ingest(s, cfg).unwrap();
    }
    h
}

fn ticks(values: impl IntoIterator<Item = f64>) -> Vec<Obs> {
    values
        .into_iter()
        .enumerate()
        .map(|(k, v)| Obs { t: secs(0.1).times(k as u64), rssi: Some(v) })
        .collect()
}

#[test]
fn rising_series_is_warmer() {
    let cfg = SmoothingConfig::default();
    // 4 s flat at -80, then a ramp to -65 over trend_gap
    let values: Vec<f64> = (0..=60)
        .map(|k| if k <= 40 { -80.0 } else { -80.0 + 15.0 * (k - 40) as f64 / 20.0 })
        .collect();
    let stream = ticks(values);
    let now = stream.last().unwrap().t;
    let h = feed(&stream, &cfg);
    let est = estimate("b", &h, now, &cfg);
    assert_eq!(est.trend, Trend::Warmer);
    assert_eq!(oracle_estimate(&stream, now, &cfg).2, Trend::Warmer);
}

#[test]
fn constant_series_is_steady_and_exact() {
    let cfg = SmoothingConfig::default();
    let stream = ticks(std::iter::repeat_n(-71.3, 50));
    let now = stream.last().unwrap().t;
    let est = estimate("b", &feed(&stream, &cfg), now, &cfg);
    assert_eq!(est.smoothed_rssi, Some(-71.3));
    assert_eq!(est.zone, Zone::Mid);
    assert_eq!(est.trend, Trend::Steady);
}

#[test]
fn arrival_examples() {
    let cfg = SmoothingConfig::default();
    let held = ticks(std::iter::repeat_n(-58.0, 31));
    let now = held.last().unwrap().t;
    assert_eq!(now, secs(3.0));
    assert!(arrival_check(&feed(&held, &cfg), now, &cfg));
    assert!(oracle_arrival(&held, now, &cfg));

    let mut spike: Vec<f64> = vec![-75.0; 40];
    spike.push(-40.0);
    let spike = ticks(spike);
    let cfg_raw = SmoothingConfig { method: SmoothingMethod::Raw, ..cfg };
    assert!(!arrival_check(&feed(&spike, &cfg_raw), spike.last().unwrap().t, &cfg_raw));

    assert!(!arrival_check(&BeaconHistory::new(), secs(5.0), &cfg));
}

#[test]
fn silence_means_lost() {
    let cfg = SmoothingConfig::default();
    let mut stream = ticks(std::iter::repeat_n(-70.0, 10));
    let last = stream.last().unwrap().t;
    stream.extend((1..=45).map(|k| Obs { t: last + secs(0.1).times(k), rssi: None }));
    let now = stream.last().unwrap().t;
    let est = estimate("b", &feed(&stream, &cfg), now, &cfg);
    assert_eq!(est.zone, Zone::Lost);
    assert_eq!(est.trend, Trend::Unknown);
    assert!(est.smoothed_rssi.is_none());
}

#[test]
fn ingest_rejects_time_going_backwards() {
    let cfg = SmoothingConfig::default();
    let mut h = BeaconHistory::new();
    h.ingest(RssiSample::detected(secs(1.0), "b", -70.0), &cfg).unwrap();
    assert!(h.ingest(RssiSample::detected(secs(0.9), "b", -70.0), &cfg).is_err());
}

#[test]
fn matches_brute_force_on_random_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checks = 0usize;
    for stream_no in 0..1000 {
        let cfg = random_config(&mut rng);
        cfg.validate(-95.0).unwrap();
        let n = rng.random_range(1..=1000);
        let stream = random_stream(&mut rng, n);
        let mut h = BeaconHistory::new();
        for (i, o) in stream.iter().enumerate() {
            let s = match o.rssi {
                Some(v) => RssiSample::detected(o.t, "b", v),
                None => RssiSample::missed(o.t, "b"),
            };
            h.ingest(s, &cfg).unwrap();
            // check a sample of prefixes plus the full stream
            if i + 1 != n && !rng.random_bool(0.05) {
                continue;
            }
            let seen = &stream[..=i];
            let now = o.t + SimTime::from_micros(rng.random_range(0..2) * 40_000);
            let est = estimate("b", &h, now, &cfg);
            let (smoothed, zone, trend) = oracle_estimate(seen, now, &cfg);
            match (est.smoothed_rssi, smoothed) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "stream {stream_no}: {a} vs {b}"),
                (a, b) => assert_eq!(a, b, "stream {stream_no}"),
            }
            assert_eq!(est.zone, zone, "stream {stream_no} at {now}");
            assert_eq!(est.trend, trend, "stream {stream_no} at {now}");
            assert_eq!(
                arrival_check(&h, now, &cfg),
                oracle_arrival(seen, now, &cfg),
                "stream {stream_no} at {now}"
            );
            checks += 1;
        }
    }
    assert!(checks > 20_000, "{checks}");
}
