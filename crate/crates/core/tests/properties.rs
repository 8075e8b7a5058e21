use guidecue_core::analytics::histogram;
use guidecue_core::commands::{classify_command, fit_status_thresholds, CommandEpoch};
use guidecue_core::fixture::{generate, random_spec};
use guidecue_core::geometry::{
    angle_between, marker_axes, perspective_to_sphere, rotate, sphere_to_perspective, Vec2, ViewParams,
};
use guidecue_core::haptics::{amplitude_from_angle, frequency_from_velocity, HapticCalibration};
use guidecue_core::kinematics::{pose_angles, smooth_series, AngleSeries, Subject};
use guidecue_core::scoring::{match_epochs, score_practice, ScoringConfig};
use guidecue_core::session::{load_session, write_session, Keypoint, MarkerFrame};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

fn vector() -> impl Strategy<Value = Vec2> {
    (coord(), coord()).prop_map(|(x, y)| Vec2::new(x, y)).prop_filter("non-degenerate", |v| v.norm() > 1e-3)
}

fn epoch(peak: u64, yaw: f64) -> CommandEpoch {
    CommandEpoch {
        start_frame: peak,
        peak_frame: peak,
        end_frame: peak,
        peak_yaw_deg: yaw,
        peak_pitch_deg: 0.0,
        peak_velocity_deg_s: 0.0,
        category: classify_command(yaw),
        dog_status: None,
    }
}

proptest! {
    #[test]
    fn angle_is_symmetric_and_bounded(u in vector(), v in vector()) {
        let a = angle_between(u, v).unwrap();
        prop_assert_eq!(a, angle_between(v, u).unwrap());
        prop_assert!((0.0..=180.0).contains(&a));
    }

    #[test]
    fn angle_is_scale_invariant(u in vector(), v in vector(), k in -8i32..8, s in 1e-3..1e3f64) {
        let a = angle_between(u, v).unwrap();
        let p = 2f64.powi(k);
        prop_assert_eq!(a, angle_between(u * p, v).unwrap());
        prop_assert!((a - angle_between(u * s, v * s).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn projection_round_trips(
        fov in 60.0..120.0f64,
        theta in -180.0..180.0f64,
        phi in -60.0..60.0f64,
        px in 0.0..640.0f64,
        py in 0.0..480.0f64,
    ) {
        let view = ViewParams { theta_deg: theta, phi_deg: phi, fov_deg: fov, out_width: 640, out_height: 480, ..Default::default() };
        let (lon, lat) = perspective_to_sphere(px, py, &view).unwrap();
        let (qx, qy) = sphere_to_perspective(lon, lat, &view).unwrap();
        prop_assert!((qx - px).abs() < 1e-6 && (qy - py).abs() < 1e-6);
    }

    #[test]
    fn pose_angles_follow_marker_rotation(v in vector(), rho in -180.0..180.0f64) {
        let square = |deg: f64| MarkerFrame {
            corners: [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .map(|(x, y)| rotate(Vec2::new(x, y) * 40.0, deg))
                .map(|c| Keypoint::new(c.x + 300.0, c.y + 300.0, 1.0)),
        };
        let base = pose_angles(v, &marker_axes(&square(0.0)).unwrap()).unwrap();
        let turned = pose_angles(rotate(v, rho), &marker_axes(&square(rho)).unwrap()).unwrap();
        prop_assert!((base.yaw_deg - turned.yaw_deg).abs() < 1e-6);
        prop_assert!((base.pitch_deg - turned.pitch_deg).abs() < 1e-6);
    }

    #[test]
    fn histogram_conserves_samples(values in prop::collection::vec(-50.0..250.0f64, 0..500)) {
        let h = histogram(&values, 3.0, (0.0, 180.0));
        prop_assert_eq!(h.counts.iter().sum::<u64>(), values.len() as u64);
        prop_assert_eq!(h.n, values.len() as u64);
    }

    #[test]
    fn haptic_maps_are_monotone(a in -100.0..500.0f64, b in -100.0..500.0f64) {
        let c = HapticCalibration::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(frequency_from_velocity(lo.max(0.0), &c) <= frequency_from_velocity(hi.max(0.0), &c));
        prop_assert!(amplitude_from_angle(lo, &c) <= amplitude_from_angle(hi, &c));
        let f = frequency_from_velocity(a, &c);
        prop_assert!((50.0..=300.0).contains(&f));
    }

    #[test]
    fn status_fit_ignores_sample_order(mut xs in prop::collection::vec(20.0..160.0f64, 3..60), seed in any::<u64>()) {
        let fitted = fit_status_thresholds(&xs);
        let mut state = seed | 1;
        for i in (1..xs.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            xs.swap(i, (state % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(fitted, fit_status_thresholds(&xs));
    }

    #[test]
    fn matching_never_double_assigns(
        expert in prop::collection::btree_set(0u64..2000, 0..30),
        practice in prop::collection::btree_set(0u64..2000, 0..30),
    ) {
        let ex: Vec<_> = expert.iter().map(|&p| epoch(p, 100.0)).collect();
        let pr: Vec<_> = practice.iter().map(|&p| epoch(p, 100.0)).collect();
        let pairs = match_epochs(&ex, &pr, 45);
        prop_assert_eq!(pairs.len(), ex.len());
        let mut seen = std::collections::HashSet::new();
        for (i, j) in pairs {
            if let Some(j) = j {
                prop_assert!(seen.insert(j));
                prop_assert!(ex[i].peak_frame.abs_diff(pr[j].peak_frame) <= 45);
            }
        }
    }

    #[test]
    fn composite_is_bounded_and_monotone(yaw in 90.0..150.0f64, e1 in 0.0..60.0f64, e2 in 0.0..60.0f64, dt in 0u64..45) {
        let cfg = ScoringConfig::default();
        let ex = epoch(100, yaw);
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let mut p_small = epoch(100 + dt, yaw + small);
        let mut p_large = epoch(100 + dt, yaw + large);
        p_small.peak_pitch_deg = small;
        p_large.peak_pitch_deg = large;
        let s = score_practice(0, &ex, Some(&p_small), 30.0, 300.0, &cfg).composite;
        let l = score_practice(0, &ex, Some(&p_large), 30.0, 300.0, &cfg).composite;
        prop_assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&l));
        prop_assert!(l <= s);
    }

    #[test]
    fn smoothing_keeps_absence_pattern(values in prop::collection::vec(prop::option::of(0.0..180.0f64), 0..80), w in 1usize..9) {
        let s = AngleSeries { subject: Subject::RightArm, fps: 30.0, values };
        let sm = smooth_series(&s, w);
        prop_assert_eq!(sm.values.len(), s.values.len());
        for (a, b) in s.values.iter().zip(&sm.values) {
            prop_assert_eq!(a.is_some(), b.is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn session_round_trips_through_disk(seed in any::<u64>(), sigma in 0.0..3.0f64) {
        let session = generate(&random_spec(seed, 2, sigma, "Disk")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_session(dir.path(), &session).unwrap();
        prop_assert_eq!(load_session(dir.path()).unwrap(), session);
    }
}

#[test]
fn center_pixel_is_exact() {
    for fov in [60.0, 90.0, 120.0] {
        let view = ViewParams { theta_deg: 33.0, phi_deg: -12.0, fov_deg: fov, ..Default::default() };
        assert_eq!(perspective_to_sphere(320.0, 320.0, &view).unwrap(), (33.0, -12.0));
        assert_eq!(sphere_to_perspective(33.0, -12.0, &view).unwrap(), (320.0, 320.0));
    }
}
