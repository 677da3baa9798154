mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semdb_core::comm::*;
use semdb_core::geometry::Vec2;
use semdb_core::sparse::VoxelSpec;
use semdb_core::AgentId;

fn pose_strategy() -> impl Strategy<Value = Pose> {
    (-100.0f64..100.0, -100.0f64..100.0, -PI..PI).prop_map(|(x, y, h)| Pose::new(x, y, h).unwrap())
}

fn wide_spec() -> VoxelSpec {
    VoxelSpec::new((-1000.0, 1000.0), (-1000.0, 1000.0), (0.4, 0.4)).unwrap()
}

proptest! {
    #[test]
    fn relative_transform_round_trips(a in pose_strategy(), b in pose_strategy(), x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let p = Vec2::new(x, y);
        let there = Pose::relative(&a, &b, p);
        let back = Pose::relative(&b, &a, there);
        prop_assert!((back - p).norm() < 1e-9);
        // Against the world frame directly.
        let w = a.to_world(p);
        prop_assert!((b.to_world(there) - w).norm() < 1e-9);
    }

    #[test]
    fn transform_to_ego_is_an_isometry(sender in pose_strategy(), ego in pose_strategy(), seed in any::<u64>()) {
        let spec = wide_spec();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut semdbs = random_semdbs(&mut r, 8, 4, 1, 0);
        for s in &mut semdbs {
            s.position = (2500.0 + r.gen_range(-100.0..100.0), 2500.0 + r.gen_range(-100.0..100.0));
        }
        let out = transform_to_ego(&semdbs, &sender, &ego, &spec);
        prop_assert_eq!(out.len(), semdbs.len());
        let metric = |s: &semdb_core::extractor::SemDb| {
            let (x, y) = spec.index_to_metric(s.position.0, s.position.1);
            Vec2::new(x, y)
        };
        for i in 0..semdbs.len() {
            for j in 0..i {
                let before = (metric(&semdbs[i]) - metric(&semdbs[j])).norm();
                let after = (metric(&out[i]) - metric(&out[j])).norm();
                prop_assert!((before - after).abs() < 1e-9);
            }
        }
        let back = transform_to_ego(&out, &ego, &sender, &spec);
        for (a, b) in back.iter().zip(&semdbs) {
            prop_assert!((metric(a) - metric(b)).norm() < 1e-9);
            prop_assert_eq!(&a.feature, &b.feature);
        }
    }

    #[test]
    fn packets_round_trip_bitwise(seed in any::<u64>(), n in 0usize..40, c in prop::sample::select(vec![2usize, 8, 32])) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let semdbs = random_semdbs(&mut r, n, c, 3, 700);
        let p = serialize(&semdbs, c, AgentId(3), 700).unwrap();
        prop_assert_eq!(p.payload_bytes(), n * (c + 3) * 4);
        prop_assert_eq!(p.to_bytes().len(), HEADER_BYTES + p.payload_bytes());
        prop_assert_eq!(deserialize(&p), semdbs);
        prop_assert_eq!(CommPacket::from_bytes(&p.to_bytes(), c).unwrap(), p);
    }

    #[test]
    fn adding_a_collaborator_raises_frame_ab(seed in any::<u64>(), n1 in 1usize..50, n2 in 1usize..50) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = serialize(&random_semdbs(&mut r, n1, 32, 1, 0), 32, AgentId(1), 0).unwrap();
        let b = serialize(&random_semdbs(&mut r, n2, 32, 2, 0), 32, AgentId(2), 0).unwrap();
        let one = transmission_cost([&a]);
        let two = transmission_cost([&a, &b]);
        prop_assert!(two.ab_paper().unwrap() > one.ab_paper().unwrap());
        prop_assert!(two.ab_wire().unwrap() > one.ab_wire().unwrap());
    }

    #[test]
    fn channel_delivers_each_packet_once_in_order(seed in any::<u64>(), latency in 0u64..500, jitter in 0u64..300) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut ch = Channel::with_jitter(latency, jitter, ChaCha8Rng::seed_from_u64(seed ^ 1));
        let mut got = Vec::new();
        let mut now = 0;
        for i in 0..30u64 {
            now += r.gen_range(0..120);
            ch.send(serialize(&[], 4, AgentId(1), i).unwrap(), now).unwrap();
            got.extend(ch.poll(now).unwrap().iter().map(|p| p.timestamp_ms()));
        }
        got.extend(ch.poll(now + latency + jitter).unwrap().iter().map(|p| p.timestamp_ms()));
        prop_assert_eq!(got, (0..30).collect::<Vec<_>>());
        prop_assert_eq!(ch.in_flight(), 0);
    }
}

#[test]
fn dataset_ab_is_the_frame_mean() {
    let mut acc = AbAccumulator::default();
    acc.push_ab(Some(10.0));
    acc.push_ab(Some(12.0));
    acc.push_ab(None);
    let s = acc.summary();
    assert_eq!(s.ab_paper, 11.0);
    assert_eq!(s.communicating_frames, 2);
    assert_eq!(s.silent_frames, 1);
    assert!(!s.no_communication);
    assert!(AbAccumulator::default().summary().no_communication);
}

#[test]
fn latency_sweep_staleness() {
    for latency in [0u64, 100, 200, 300, 400] {
        let mut ch = Channel::new(latency);
        let mut stale = Vec::new();
        for frame in 0..10u64 {
            let now = frame * 100;
            ch.send(serialize(&[], 4, AgentId(1), now).unwrap(), now).unwrap();
            stale.extend(ch.poll(now).unwrap().iter().map(|p| now - p.timestamp_ms()));
        }
        assert_eq!(stale.len(), 10 - (latency / 100) as usize);
        assert!(stale.iter().all(|&s| s == latency));
    }
}
