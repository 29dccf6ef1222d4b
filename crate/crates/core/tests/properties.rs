//! Property-based invariants.

use proptest::prelude::*;

use als_core::boosting::{mae, rmse, rmsle};
use als_core::domain::{EtaDistribution, WeightClass};
use als_core::ingest::{
    count_events, haversine_nm, hour_bucket, stage_of_loop_count, Direction, EventType,
    FlightEvent, Stage,
};
use als_core::normal;
use als_core::separation::{
    build_windows, required_separation, QuantileConvention, ReferenceMatrix, WindowConfig,
};

fn events_strategy() -> impl Strategy<Value = Vec<FlightEvent>> {
    prop::collection::vec((0.0f64..10_000.0, 0u8..3), 0..60).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (t, k))| FlightEvent {
                flight_id: format!("f{i}"),
                timestamp: t,
                event_type: [EventType::Rrt, EventType::Loop, EventType::Goa][k as usize],
            })
            .collect()
    })
}

proptest! {
    /// Growing the look-back/look-ahead window never loses events.
    #[test]
    fn event_counts_monotone_in_window(
        events in events_strategy(),
        t0 in 0.0f64..10_000.0,
        w1 in 0.0f64..5_000.0,
        extra in 0.0f64..5_000.0,
    ) {
        for dir in [Direction::Ahead, Direction::Behind] {
            for ty in [EventType::Rrt, EventType::Loop, EventType::Goa] {
                let small = count_events(&events, t0, w1, dir, ty);
                let large = count_events(&events, t0, w1 + extra, dir, ty);
                prop_assert!(small <= large);
            }
        }
    }

    /// Every loop count lands in exactly one stage, with the documented cuts.
    #[test]
    fn stage_partition(l in -5.0f64..200.0) {
        let s = stage_of_loop_count(l);
        let expected = if l <= 10.0 { Stage::I } else if l <= 40.0 { Stage::II } else { Stage::III };
        prop_assert_eq!(s, expected);
    }

    /// Separation buffers: larger sigma and smaller conflict probability
    /// never shrink the required separation.
    #[test]
    fn required_separation_monotone(
        reference in 30.0f64..200.0,
        sigma in 0.0f64..60.0,
        bump in 0.01f64..30.0,
        pc in 0.01f64..0.49,
        dp in 0.001f64..0.01,
    ) {
        let base = required_separation(reference, sigma, pc, QuantileConvention::Reliability).unwrap();
        let wider = required_separation(reference, sigma + bump, pc, QuantileConvention::Reliability).unwrap();
        let safer = required_separation(reference, sigma, pc - dp, QuantileConvention::Reliability).unwrap();
        prop_assert!(base >= reference);
        prop_assert!(wider >= base);
        prop_assert!(safer >= base || sigma == 0.0);
    }

    /// Landing windows always satisfy l <= u and widen with sigma.
    #[test]
    fn windows_widen_with_sigma(
        entry in 0.0f64..100_000.0,
        mu in 200.0f64..4_000.0,
        sigma in 0.0f64..300.0,
        bump in 0.0f64..100.0,
    ) {
        let cfg = WindowConfig::default();
        let narrow = EtaDistribution::new(mu, sigma, Vec::new());
        let wide = EtaDistribution::new(mu, sigma + bump, Vec::new());
        let (l1, u1) = build_windows(entry, &narrow, &cfg);
        let (l2, u2) = build_windows(entry, &wide, &cfg);
        prop_assert!(l1 <= u1);
        prop_assert!(l2 <= l1 && u2 >= u1);
    }

    /// The normal quantile function inverts the CDF.
    #[test]
    fn inv_cdf_round_trip(p in 0.001f64..0.999) {
        let z = normal::inv_cdf(p);
        prop_assert!((normal::cdf(z) - p).abs() < 1e-9);
    }

    /// Great-circle distance is a symmetric non-negative function bounded by
    /// half the circumference.
    #[test]
    fn haversine_symmetric(
        lat1 in -89.0f64..89.0, lon1 in -180.0f64..180.0,
        lat2 in -89.0f64..89.0, lon2 in -180.0f64..180.0,
    ) {
        let d1 = haversine_nm((lat1, lon1), (lat2, lon2));
        let d2 = haversine_nm((lat2, lon2), (lat1, lon1));
        prop_assert!(d1 >= 0.0);
        prop_assert!((d1 - d2).abs() < 1e-9);
        prop_assert!(d1 <= std::f64::consts::PI * 3440.065 + 1e-6);
    }

    /// Hour bucketing rounds to the nearest hour, ties upward.
    #[test]
    fn hour_bucket_nearest(ts in -1.0e7f64..1.0e7) {
        let b = hour_bucket(ts);
        let center = b as f64 * 3600.0;
        prop_assert!(ts - center >= -1800.0 - 1e-6);
        prop_assert!(ts - center < 1800.0 + 1e-6);
    }

    /// Metric sanity: all are non-negative, zero only on identical inputs,
    /// and rmse dominates mae.
    #[test]
    fn metric_relations(
        pairs in prop::collection::vec((0.0f64..5_000.0, 0.0f64..5_000.0), 1..40),
    ) {
        let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y_hat: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let m = mae(&y, &y_hat).unwrap();
        let r = rmse(&y, &y_hat).unwrap();
        let rl = rmsle(&y, &y_hat).unwrap();
        prop_assert!(m >= 0.0 && r >= 0.0 && rl >= 0.0);
        prop_assert!(r >= m - 1e-12);
        let identical = mae(&y, &y).unwrap();
        prop_assert_eq!(identical, 0.0);
    }

    /// Reference separations are positive and Heavy leading never requires
    /// less spacing than it grants when trailing the same pair.
    #[test]
    fn reference_table_positive(a in 0usize..4, b in 0usize..4) {
        let table = ReferenceMatrix::faa_arrival_manager();
        let lead = WeightClass::ALL[a];
        let trail = WeightClass::ALL[b];
        prop_assert!(table.lookup(lead, trail) > 0.0);
    }
}
