use hearsay::capture::{merge_sniffers, DEFAULT_MAX_SKEW_US};
use hearsay::identify::{OuiRegistry, SetupPatterns};
use hearsay::pipeline::{analyze, AnalysisConfig, Report, Stage};
use hearsay::report::write_outputs;
use hearsay::simulate::{self, generate, score};

fn run(sc: &simulate::Scenario, cfg: &AnalysisConfig) -> (Report, hearsay::capture::CaptureSet, simulate::GroundTruth) {
    let (caps, truth) = generate(sc).unwrap();
    let (cap, _) = merge_sniffers(caps, DEFAULT_MAX_SKEW_US).unwrap();
    (analyze(&cap, cfg, &OuiRegistry::builtin(), &SetupPatterns::builtin()), cap, truth)
}

#[test]
fn config_prerequisites() {
    let ok = simulate::household().analysis_config();
    assert_eq!(ok.validate(), Ok(()));
    let cases = [
        AnalysisConfig { stages: vec![Stage::States], ..ok.clone() },
        AnalysisConfig { stages: vec![Stage::Identify, Stage::Har], ..ok.clone() },
        AnalysisConfig { geometry: None, ..ok.clone() },
        AnalysisConfig { geometry: Some([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), ..ok.clone() },
        AnalysisConfig { subjects: vec![], ..ok.clone() },
        AnalysisConfig { bin_width_s: 0, ..ok.clone() },
        AnalysisConfig { off_gap_s: 10, smooth_window_s: 60, ..ok.clone() },
    ];
    for (i, c) in cases.iter().enumerate() {
        assert!(c.validate().is_err(), "case {i} accepted");
    }
    assert!(AnalysisConfig::from_toml("bin_width = 5\n").is_err());
    let back = AnalysisConfig::from_toml(&toml::to_string(&ok).unwrap()).unwrap();
    assert_eq!(back.validate(), Ok(()));
    assert_eq!(back.subjects.len(), ok.subjects.len());
}

#[test]
fn zero_noise_day_scores_perfect_states() {
    let sc = simulate::household().zero_noise().with_duration(2 * 86400);
    let cfg = AnalysisConfig { stages: vec![Stage::Identify, Stage::States], ..sc.analysis_config() };
    let (report, _, truth) = run(&sc, &cfg);
    let m = score(&report, &truth).unwrap();
    assert_eq!(m.values["states.accuracy"], 1.0);
    assert_eq!(m.values["inventory.recall"], 1.0);
    for d in report.states.as_ref().unwrap() {
        assert!(d.timeline.is_well_formed(), "{}", d.mac);
        assert_eq!(d.timeline.t_start_us(), report.capture.t_start_us);
    }
}

#[test]
fn report_survives_json_and_outputs_are_stable() {
    let sc = simulate::guest_night().with_duration(2 * 86400);
    let (report, cap, _) = run(&sc, &sc.analysis_config());
    assert!(report.stages.values().all(|s| s.status == "ok"), "{:?}", report.stages);
    let json = serde_json::to_string(&report).unwrap();
    let back: Report = serde_json::from_str(&json).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), json);

    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = write_outputs(&report, Some(&cap), a.path()).unwrap();
    let fb = write_outputs(&report, Some(&cap), b.path()).unwrap();
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let names: Vec<String> = fa.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in ["report.json", "events.csv", "weekly.csv", "polar.svg", "guests.svg"] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
}

#[test]
fn empty_capture_reports_instead_of_failing() {
    let sc = simulate::household().with_duration(0);
    let (report, _, _) = run(&sc, &sc.analysis_config());
    assert_eq!(report.stages["identify"].status, "ok");
    assert_eq!(report.inventory.as_ref().unwrap().len(), 0);
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&report, None, dir.path()).unwrap();
    let inv = std::fs::read_to_string(dir.path().join("inventory.csv")).unwrap();
    assert!(inv.starts_with("mac,identity_class"));
}
