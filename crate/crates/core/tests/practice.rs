use guidecue_core::analysis::{analyze, AnalysisConfig, SessionAnalysis};
use guidecue_core::cues::{CueEngine, Mode, OverlayKind, STYLE_PRACTICE_POSE};
use guidecue_core::fixture::{generate, random_spec};
use guidecue_core::scoring::{score_session, LiveAnnotator, LiveError, LiveScorer, PracticePose};
use guidecue_core::session::Session;

fn fixture(seed: u64, epochs: usize, sigma: f64) -> (Session, SessionAnalysis) {
    let session = generate(&random_spec(seed, epochs, sigma, "P")).unwrap();
    let analysis = analyze(&session, &AnalysisConfig::default()).unwrap();
    (session, analysis)
}

/// The expert's own right arm replayed as a practice stream.
fn mimic(session: &Session, shift: i64) -> Vec<PracticePose> {
    let n = session.frame_count() as i64;
    session
        .frames
        .iter()
        .filter_map(|r| {
            let frame = r.frame_index as i64 + shift;
            (0..n).contains(&frame).then_some((frame as u64, r.right_arm?))
        })
        .enumerate()
        .map(|(seq, (frame_index, right_arm))| PracticePose { frame_index, right_arm, received_seq: seq as u64 })
        .collect()
}

#[test]
fn live_matches_batch_segmentation() {
    let cfg = AnalysisConfig::default();
    for seed in 0..6 {
        let (session, analysis) = fixture(seed, 8, 2.0);
        let mut live = LiveAnnotator::new(&analysis, cfg.kinematics.clone(), cfg.segmentation.clone());
        for p in mimic(&session, 0) {
            live.push(&p).unwrap();
        }
        live.finish();
        let got = live.epochs();
        assert_eq!(got.len(), analysis.epochs.len(), "seed {seed}");
        for (l, b) in got.iter().zip(&analysis.epochs) {
            assert!(l.peak_frame.abs_diff(b.peak_frame) <= 2, "seed {seed}: {} vs {}", l.peak_frame, b.peak_frame);
        }
    }
}

#[test]
fn single_pose_yields_one_practice_segment() {
    let (session, analysis) = fixture(1, 2, 0.0);
    let cfg = AnalysisConfig::default();
    let mut live = LiveAnnotator::new(&analysis, cfg.kinematics, cfg.segmentation);
    let update = live.push(&mimic(&session, 0)[0]).unwrap();
    assert_eq!(update.overlay.kind, OverlayKind::Segment);
    assert_eq!(update.overlay.style_tag, STYLE_PRACTICE_POSE);
}

#[test]
fn out_of_order_pose_is_dropped() {
    let (session, analysis) = fixture(1, 2, 0.0);
    let cfg = AnalysisConfig::default();
    let mut live = LiveAnnotator::new(&analysis, cfg.kinematics, cfg.segmentation);
    let poses = mimic(&session, 0);
    live.push(&poses[1]).unwrap();
    assert_eq!(live.push(&poses[0]), Err(LiveError::OutOfOrderPose { seq: 0, last: 1 }));
    assert_eq!(live.dropped(), 1);
}

#[test]
fn perfect_mimic_scores_one_per_epoch() {
    let (session, analysis) = fixture(2, 6, 0.0);
    let cfg = AnalysisConfig::default();
    let scores = score_session(&analysis, &mimic(&session, 0), &cfg.kinematics, &cfg.segmentation, &cfg.scoring);
    assert_eq!(scores.len(), analysis.epochs.len());
    for s in &scores {
        assert_eq!(s.timing_offset_ms, Some(0.0));
        assert!((s.composite - 1.0).abs() < 1e-9, "{s:?}");
        assert!(s.category_match);
    }
}

#[test]
fn live_scorer_emits_exactly_one_score_per_expert_epoch() {
    let (session, analysis) = fixture(5, 6, 0.0);
    let cfg = AnalysisConfig::default();
    let mut scorer = LiveScorer::new(&analysis, cfg.kinematics, cfg.segmentation, cfg.scoring);
    let mut scores = Vec::new();
    for p in mimic(&session, 10) {
        let (_, s) = scorer.push_pose(&p).unwrap();
        scores.extend(s);
        scores.extend(scorer.advance(p.frame_index));
    }
    scores.extend(scorer.finish());
    let mut ids: Vec<usize> = scores.iter().map(|s| s.epoch_id).collect();
    ids.sort_unstable();
    assert_eq!(ids, (0..analysis.epochs.len()).collect::<Vec<_>>());
    let hits: Vec<_> = scores.iter().filter(|s| !s.is_miss()).collect();
    assert!(hits.len() + 1 >= analysis.epochs.len());
    for s in hits {
        assert!((s.timing_offset_ms.unwrap() - 10.0 / 30.0 * 1000.0).abs() < 1e-6);
    }
}

#[test]
fn idle_practice_stream_reports_no_misses() {
    let (_, analysis) = fixture(5, 3, 0.0);
    let cfg = AnalysisConfig::default();
    let mut scorer = LiveScorer::new(&analysis, cfg.kinematics, cfg.segmentation, cfg.scoring);
    assert!(scorer.advance(analysis.frame_count as u64).is_empty());
}

#[test]
fn mode_a_is_union_of_b_and_c() {
    let (session, analysis) = fixture(7, 9, 0.0);
    let cfg = AnalysisConfig::default();
    let engine = CueEngine::new(&session, &analysis, &cfg.cues).unwrap();
    let mut both = 0;
    for f in 0..analysis.frame_count as u64 {
        let a = engine.build_overlays(f, Mode::A, None).unwrap();
        let b = engine.build_overlays(f, Mode::B, None).unwrap();
        let c = engine.build_overlays(f, Mode::C, None).unwrap();
        let union: Vec<_> = b.iter().chain(&c).collect();
        assert!(a.iter().all(|o| union.contains(&o)) && union.iter().all(|o| a.contains(o)), "frame {f}");
        if !b.is_empty() && !c.is_empty() {
            both += 1;
        }
        let d = engine.build_overlays(f, Mode::D, None).unwrap();
        assert!(d.iter().all(|o| o.kind != OverlayKind::Label && o.kind != OverlayKind::AngleArc));
        assert!(d.iter().any(|o| o.kind == OverlayKind::MaskRegion));
        for o in a.iter().chain(&d) {
            assert!(o.coords.iter().all(|c| (0.0..=640.0).contains(&c[0]) && (0.0..=640.0).contains(&c[1])));
        }
    }
    assert!(both > 0, "fixture never shows both cue families at once");
}

#[test]
fn mode_b_arc_matches_category_band() {
    let (session, analysis) = fixture(8, 4, 0.0);
    let cfg = AnalysisConfig::default();
    let engine = CueEngine::new(&session, &analysis, &cfg.cues).unwrap();
    for e in &analysis.epochs {
        let out = engine.build_overlays(e.peak_frame, Mode::B, None).unwrap();
        let arc = out.iter().find(|o| o.kind == OverlayKind::AngleArc).unwrap().arc.unwrap();
        assert_eq!(Some((arc.from_deg, arc.to_deg)), e.category.yaw_band());
        let label = out.iter().find(|o| o.kind == OverlayKind::Label).unwrap();
        assert_eq!(label.text.as_deref(), Some(e.category.name()));
    }
    let quiet = engine.build_overlays(0, Mode::B, None).unwrap();
    assert!(quiet.is_empty());
}

#[test]
fn practice_overlay_appended_in_every_mode() {
    let (session, analysis) = fixture(8, 2, 0.0);
    let cfg = AnalysisConfig::default();
    let engine = CueEngine::new(&session, &analysis, &cfg.cues).unwrap();
    let pose = mimic(&session, 0)[5];
    for mode in [Mode::A, Mode::B, Mode::C, Mode::D] {
        let out = engine.build_overlays(5, mode, Some(&pose)).unwrap();
        assert_eq!(out.iter().filter(|o| o.style_tag == STYLE_PRACTICE_POSE).count(), 1);
    }
}
