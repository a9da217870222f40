use std::ffi::{CStr, CString};
use std::ptr;

use evopipe_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(evp_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn blobs() -> (Vec<f64>, Vec<usize>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let c = i % 2;
        let off = if c == 0 { -2.0 } else { 2.0 };
        x.push(off + (i as f64 * 0.37).sin() * 0.5);
        x.push(-off + (i as f64 * 0.73).cos() * 0.5);
        y.push(c);
    }
    (x, y)
}

const PIPELINE: &str = "evopipe-export v1
[metadata]
cv_score = none
dataset = none
seed = 7
[tree]
Classifier GaussianNB
  Transformer StandardScaler
    Source
[script]
[end]
";

#[test]
fn fit_and_predict_through_handles() {
    let (x, y) = blobs();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            evp_dataset_from_arrays(x.as_ptr(), 40, 2, y.as_ptr(), 2, &mut ds),
            EvpStatus::Ok
        );
        assert_eq!((evp_dataset_rows(ds), evp_dataset_cols(ds)), (40, 2));

        let text = CString::new(PIPELINE).unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(evp_pipeline_import(text.as_ptr(), &mut p), EvpStatus::Ok);
        assert_eq!(evp_pipeline_complexity(p), 2);

        let mut score = 0.0;
        assert_eq!(
            evp_pipeline_cv_score(p, ds, 4, 1, &mut score),
            EvpStatus::Ok
        );
        assert_eq!(score, 1.0);

        let mut fitted = ptr::null_mut();
        assert_eq!(evp_pipeline_fit(p, ds, 0, &mut fitted), EvpStatus::Ok);
        let mut labels = vec![9usize; 40];
        assert_eq!(
            evp_fitted_predict(fitted, x.as_ptr(), 40, 2, labels.as_mut_ptr()),
            EvpStatus::Ok
        );
        assert_eq!(labels, y);

        assert_eq!(
            evp_fitted_predict(fitted, x.as_ptr(), 20, 4, labels.as_mut_ptr()),
            EvpStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());

        let mut out = ptr::null_mut();
        assert_eq!(evp_pipeline_export(p, &mut out), EvpStatus::Ok);
        let exported = CStr::from_ptr(out).to_str().unwrap().to_string();
        assert!(exported.starts_with("evopipe-export v1\n"));
        assert!(exported.contains("seed = 7"));
        evp_string_free(out);

        evp_fitted_free(fitted);
        evp_pipeline_free(p);
        evp_dataset_free(ds);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            evp_pipeline_import(ptr::null(), &mut p),
            EvpStatus::NullArgument
        );
        assert!(last_error().contains("null"));

        let bad = CString::new("evopipe-export v2\n").unwrap();
        assert_eq!(
            evp_pipeline_import(bad.as_ptr(), &mut p),
            EvpStatus::Version
        );

        let garbled = CString::new(PIPELINE.replace("GaussianNB", "Nope")).unwrap();
        assert_eq!(
            evp_pipeline_import(garbled.as_ptr(), &mut p),
            EvpStatus::Parse
        );
        assert!(last_error().contains("line"), "{}", last_error());

        let mut ds = ptr::null_mut();
        let name = CString::new("no-such-dataset").unwrap();
        assert_eq!(
            evp_dataset_named(name.as_ptr(), &mut ds),
            EvpStatus::Dataset
        );

        let bad_label = [5usize];
        let x = [0.0f64];
        assert_eq!(
            evp_dataset_from_arrays(x.as_ptr(), 1, 1, bad_label.as_ptr(), 2, &mut ds),
            EvpStatus::Dataset
        );

        evp_dataset_free(ptr::null_mut());
        evp_pipeline_free(ptr::null_mut());
        evp_fitted_free(ptr::null_mut());
        evp_string_free(ptr::null_mut());
        assert_eq!(evp_pipeline_complexity(ptr::null()), 0);
    }
}

#[test]
fn named_datasets_and_residual_block() {
    unsafe {
        let mut ds = ptr::null_mut();
        let name = CString::new("hill-valley:80x12").unwrap();
        assert_eq!(evp_dataset_named(name.as_ptr(), &mut ds), EvpStatus::Ok);
        assert_eq!(evp_dataset_cols(ds), 12);

        let mut p = ptr::null_mut();
        assert_eq!(evp_pipeline_residual_block(50, 0.1, &mut p), EvpStatus::Ok);
        assert_eq!(evp_pipeline_complexity(p), 6);
        let mut fitted = ptr::null_mut();
        assert_eq!(evp_pipeline_fit(p, ds, 3, &mut fitted), EvpStatus::Ok);

        assert_eq!(
            evp_pipeline_residual_block(50, 0.5, &mut p),
            EvpStatus::Validation
        );

        evp_fitted_free(fitted);
        evp_pipeline_free(p);
        evp_dataset_free(ds);
    }
}

#[test]
fn experiment_round_trips_json() {
    let cfg = CString::new(
        r#"{"dataset": "hill-valley:60x10", "generations": 1, "population_size": 4,
            "cv_folds": 3, "replicates": 1}"#,
    )
    .unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(evp_run_experiment(cfg.as_ptr(), &mut out), EvpStatus::Ok);
        let v: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert_eq!(v["family"], "TPOT");
        assert_eq!(v["replicates"].as_array().unwrap().len(), 1);
        evp_string_free(out);

        let broken = CString::new(r#"{"generations": "many"}"#).unwrap();
        assert_eq!(
            evp_run_experiment(broken.as_ptr(), &mut out),
            EvpStatus::Config
        );
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(evp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
