use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;
use std::process::Command;
use std::ptr;

use nkpc_ffi::*;

fn last_error() -> String {
    let p = nkpc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let v = CStr::from_ptr(s).to_string_lossy().into_owned();
    nkpc_string_free(s);
    v
}

#[test]
fn synth_backtest_roundtrip() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(nkpc_dataset_synth(4, 70, &mut ds), NkpcStatus::Ok);
        assert_eq!(nkpc_dataset_len(ds), 70);
        let cfg = CString::new(
            "[backtest]\ntest_quarters = 8\nhorizons = [1, 2]\nmodels = [\"ols\", \"rw\"]\ntuning = \"off\"\n",
        )
        .unwrap();
        let mut ledger = ptr::null_mut();
        assert_eq!(
            nkpc_backtest(ds, cfg.as_ptr(), &mut ledger),
            NkpcStatus::Ok,
            "{}",
            last_error()
        );
        // ols: 3 specs × (8 + 7), rw: 8 + 7
        assert_eq!(nkpc_ledger_len(ledger), 60);
        assert_eq!(nkpc_ledger_failures(ledger), 0);

        let mut rec = NkpcRecord::default();
        let (mut model, mut spec) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            nkpc_ledger_record(ledger, 0, &mut rec, &mut model, &mut spec),
            NkpcStatus::Ok
        );
        assert!((1..=4).contains(&rec.origin_quarter));
        assert!(rec.prediction.is_finite() && rec.actual.is_finite());
        assert_eq!(take(model), "ols");
        assert!(!take(spec).is_empty());

        assert_eq!(
            nkpc_ledger_record(ledger, 60, &mut rec, ptr::null_mut(), ptr::null_mut()),
            NkpcStatus::OutOfRange
        );
        assert!(last_error().contains("60"));

        let mut csv = ptr::null_mut();
        assert_eq!(nkpc_ledger_to_csv(ledger, &mut csv), NkpcStatus::Ok);
        assert_eq!(take(csv).lines().count(), 61);

        nkpc_ledger_free(ledger);
        nkpc_dataset_free(ds);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(nkpc_dataset_synth(1, 10, &mut ds), NkpcStatus::Computation);
        assert!(ds.is_null());
        assert!(last_error().contains("n >= 60"));

        assert_eq!(nkpc_dataset_synth(1, 80, ptr::null_mut()), NkpcStatus::NullPointer);

        assert_eq!(nkpc_dataset_synth(1, 80, &mut ds), NkpcStatus::Ok);
        let bad = CString::new("[forest]\nn_tress = 3\n").unwrap();
        let mut ledger = ptr::null_mut();
        assert_eq!(nkpc_backtest(ds, bad.as_ptr(), &mut ledger), NkpcStatus::InvalidInput);
        assert!(last_error().contains("n_tress"));
        nkpc_dataset_free(ds);

        let path = CString::new("/nonexistent/data.csv").unwrap();
        assert_eq!(nkpc_dataset_from_csv(path.as_ptr(), &mut ds), NkpcStatus::Io);
        nkpc_dataset_free(ptr::null_mut());
        nkpc_ledger_free(ptr::null_mut());
        nkpc_string_free(ptr::null_mut());
    }
}

#[test]
fn numeric_entry_points() {
    unsafe {
        let (a, p) = ([1.0, 2.0], [2.0, 4.0]);
        let mut v = 0.0;
        assert_eq!(
            nkpc_metric(NkpcMetric::Rmse, a.as_ptr(), p.as_ptr(), 2, &mut v),
            NkpcStatus::Ok
        );
        assert!((v - 2.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            nkpc_metric(NkpcMetric::Smape, [100.0].as_ptr(), [0.0].as_ptr(), 1, &mut v),
            NkpcStatus::Ok
        );
        assert!((v - 200.0).abs() < 1e-12);

        let y: Vec<f64> = (0..30).map(|t| (t as f64 * 0.4).sin() + 0.1 * t as f64).collect();
        let (mut trend, mut cycle) = (vec![0.0; 30], vec![0.0; 30]);
        assert_eq!(
            nkpc_hp_filter(y.as_ptr(), 30, 1600.0, trend.as_mut_ptr(), cycle.as_mut_ptr()),
            NkpcStatus::Ok
        );
        for t in 0..30 {
            assert!((trend[t] + cycle[t] - y[t]).abs() < 1e-10);
        }

        let scores = [0.5, 1.5, 0.2, 0.9, 1.1, 0.3, 0.7, 2.0, 0.4, 1.0];
        assert_eq!(
            nkpc_windowed_quantile(scores.as_ptr(), 10, 10, 0.2, &mut v),
            NkpcStatus::Ok
        );
        assert_eq!(v, 1.5); // ⌈11·0.8⌉ = 9th smallest
        assert_eq!(
            nkpc_windowed_quantile(scores.as_ptr(), 3, 3, 0.1, &mut v),
            NkpcStatus::Ok
        );
        assert!(v.is_infinite());
        assert_eq!(
            nkpc_windowed_quantile(ptr::null(), 0, 5, 0.1, &mut v),
            NkpcStatus::Computation
        );
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(nkpc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/nkpc.h")).unwrap();
    for sym in [
        "nkpc_backtest",
        "nkpc_ledger_record",
        "nkpc_last_error",
        "NKPC_STATUS_OK",
        "NkpcDataset",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.join("libnkpc_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let o = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("system C compiler available");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let out = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = out.split_whitespace().collect();
    // ols over 3 specs plus ar, 8 origins each
    assert_eq!(fields[0], "32");
    assert!(fields[1].parse::<f64>().unwrap() > 0.0);

    let o = Command::new("c++")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c++", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .output()
        .expect("system C++ compiler available");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
