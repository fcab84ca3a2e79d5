use vmr_eval::experiments::{model_selection, noise_experiment, stability_experiment, NoiseConfig};
use vmr_eval::io::{load_bundle, write_bundle, CoverageMode};
use vmr_eval::measure::{mean_measure, MeasureSpec};
use vmr_eval::synth::{bundled_reference_scenario, bundled_selection_scenario};

fn mean(bundle: &vmr_eval::io::DatasetBundle, system: &str, spec: &str) -> f64 {
    let spec: MeasureSpec = spec.parse().unwrap();
    mean_measure(bundle.run(system).unwrap(), &bundle.gt, &spec).unwrap().mean
}

#[test]
fn bundled_scenario_shape() {
    let b = bundled_reference_scenario();
    assert_eq!(b.gt.len(), 500);
    assert_eq!(b.runs.len(), 6);
    assert!(b.runs.iter().all(|r| r.len() == 500));
    assert_eq!(b, bundled_reference_scenario());
}

#[test]
fn distinct_systems_are_strictly_ordered_by_axiou() {
    let b = bundled_reference_scenario();
    let order = ["strong", "mid", "mid-loose", "weak", "blind"];
    let scores: Vec<f64> = order.iter().map(|s| mean(&b, s, "axiou@10")).collect();
    assert!(scores.windows(2).all(|w| w[0] > w[1]), "{scores:?}");
}

#[test]
fn redundant_twin_differs_only_under_ap() {
    let b = bundled_reference_scenario();
    for k in [1, 5, 10] {
        for spec in [format!("axiou@{k}"), format!("recall@{k}:0.3"), format!("recall@{k}:0.5"), format!("recall@{k}:0.7")] {
            let clean = mean(&b, "strong", &spec);
            let dup = mean(&b, "strong-nonms", &spec);
            assert!((clean - dup).abs() <= 1e-12, "{spec}: {clean} vs {dup}");
        }
    }
    assert!(mean(&b, "strong-nonms", "ap@10:0.5") > mean(&b, "strong", "ap@10:0.5"));
}

#[test]
fn bundle_round_trips_through_disk() {
    let b = bundled_reference_scenario();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&b, dir.path()).unwrap();
    let back = load_bundle(dir.path(), CoverageMode::Strict).unwrap();
    assert_eq!(back.gt, b.gt);
    assert_eq!(back.metadata, b.metadata);
    // runs come back in file-name order
    assert_eq!(back.runs.len(), b.runs.len());
    for run in &b.runs {
        assert_eq!(back.run(&run.system_id), Some(run));
    }
}

#[test]
fn noiseless_replicas_have_zero_rmse() {
    let b = bundled_reference_scenario();
    let specs = MeasureSpec::standard_set();
    let cfg = NoiseConfig::noiseless(5, 3, 0).unwrap();
    for r in noise_experiment(&b.runs, &b.gt, &specs, &[cfg]).unwrap() {
        assert_eq!(r.mean_rmse, 0.0, "{}", r.measure);
        assert_eq!(r.mean_median_iou, 1.0);
    }
}

#[test]
fn noise_hurts_high_threshold_recall_most() {
    let b = bundled_reference_scenario();
    let specs = MeasureSpec::parse_list("recall@5:0.7,axiou@5,recall@5:0.3").unwrap();
    let cfg = NoiseConfig::annotators(2.0, 5, 30, 4).unwrap();
    let r = noise_experiment(&b.runs, &b.gt, &specs, &[cfg]).unwrap();
    assert!(r[0].mean_rmse > r[1].mean_rmse);
    assert!(r[2].mean_rmse <= r[1].mean_rmse);
}

#[test]
fn stability_variance_shrinks_with_subset_size() {
    let b = bundled_reference_scenario();
    let specs = MeasureSpec::standard_set();
    let sizes = [25, 50, 100, 200];
    let reports = stability_experiment(&b.runs, &b.gt, &specs, &sizes, 300, 6).unwrap();
    for per_spec in reports.chunks(sizes.len()) {
        let v: Vec<f64> = per_spec.iter().map(|r| r.tau_variance.unwrap()).collect();
        let inversions = v.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(inversions <= 1, "{}: {v:?}", per_spec[0].measure);
    }
}

#[test]
fn axiou10_selects_an_above_average_model() {
    let (val, test) = bundled_selection_scenario(500).unwrap();
    assert_eq!(val.runs.len(), 640);
    let specs = MeasureSpec::standard_set();
    let r = model_selection(&val.runs, &test.runs, &val.gt, &test.gt, &specs, &specs).unwrap();
    for t in 0..specs.len() {
        if !r.degenerate[t] {
            let sum: f64 = r.z_scores.iter().map(|row| row[t]).sum();
            let var: f64 = r.z_scores.iter().map(|row| row[t] * row[t]).sum::<f64>() / specs.len() as f64;
            assert!(sum.abs() <= 1e-9);
            assert!((var - 1.0).abs() <= 1e-9);
        }
    }
    let axiou10 = specs.iter().position(|s| s.to_string() == "axiou@10").unwrap();
    assert!(r.z_scores[axiou10].iter().all(|&z| z > 0.0), "{:?}", r.z_scores[axiou10]);
}
