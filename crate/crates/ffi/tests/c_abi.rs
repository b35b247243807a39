use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use grople_ffi::*;

fn dataset(x: &[f64], y: &[f64], n: usize, d: usize, l: usize) -> *mut GropleDataset {
    let mut ds = ptr::null_mut();
    let s = unsafe { grople_dataset_from_arrays(x.as_ptr(), y.as_ptr(), n, d, l, &mut ds) };
    assert_eq!(s, GropleStatus::Ok);
    ds
}

fn last_error() -> String {
    let p = grople_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn fit_predict_save_load() {
    let x = [1., 0., 0., 1., 1., 1., -1., 0., 0., -1., -1., -1.];
    let y = [1., -1., -1., 1., 1., 1., -1., -1., -1., -1., -1., -1.];
    let ds = dataset(&x, &y, 6, 2, 2);
    let (mut n, mut d, mut l) = (0, 0, 0);
    assert_eq!(unsafe { grople_dataset_shape(ds, &mut n, &mut d, &mut l) }, GropleStatus::Ok);
    assert_eq!((n, d, l), (6, 2, 2));

    let mut hp = grople_hyperparameters_default();
    assert_eq!((hp.latent_dim, hp.n_groups), (100, 10));
    hp.latent_dim = 3;
    hp.n_groups = 2;
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { grople_fit(ds, &hp, &mut model) }, GropleStatus::Ok);
    assert_eq!(unsafe { grople_model_n_labels(model) }, 2);
    assert_eq!(unsafe { grople_model_n_features(model) }, 2);

    let mut pred = [0.0; 12];
    assert_eq!(unsafe { grople_predict(model, x.as_ptr(), 6, 2, pred.as_mut_ptr()) }, GropleStatus::Ok);
    assert!(pred.iter().all(|&v| v == 1.0 || v == -1.0));

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { grople_model_save(model, path.as_ptr()) }, GropleStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { grople_model_load(path.as_ptr(), &mut back) }, GropleStatus::Ok);
    let mut pred2 = [0.0; 12];
    assert_eq!(unsafe { grople_predict(back, x.as_ptr(), 6, 2, pred2.as_mut_ptr()) }, GropleStatus::Ok);
    assert_eq!(pred, pred2);

    let mut scores = [0.0; 12];
    assert_eq!(unsafe { grople_score(back, x.as_ptr(), 6, 2, scores.as_mut_ptr()) }, GropleStatus::Ok);
    for (s, p) in scores.iter().zip(&pred) {
        assert_eq!(*p, if *s > 0.0 { 1.0 } else { -1.0 });
    }

    unsafe {
        grople_model_free(back);
        grople_model_free(model);
        grople_dataset_free(ds);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut model = ptr::null_mut();
    let hp = grople_hyperparameters_default();
    assert_eq!(unsafe { grople_fit(ptr::null(), &hp, &mut model) }, GropleStatus::NullPointer);
    assert!(last_error().contains("dataset"));

    let x = [1., 2.];
    let y = [1., 0.5];
    let mut ds = ptr::null_mut();
    let s = unsafe { grople_dataset_from_arrays(x.as_ptr(), y.as_ptr(), 2, 1, 1, &mut ds) };
    assert_eq!(s, GropleStatus::InvalidArgument);
    assert!(last_error().contains("-1 or +1"));

    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(unsafe { grople_model_load(missing.as_ptr(), &mut model) }, GropleStatus::Io);

    let x = [1., 0., 0., 1.];
    let y = [1., -1., -1., 1.];
    let ds = dataset(&x, &y, 2, 2, 2);
    let mut hp = grople_hyperparameters_default();
    hp.n_groups = 3;
    assert_eq!(unsafe { grople_fit(ds, &hp, &mut model) }, GropleStatus::InvalidArgument);
    assert!(last_error().contains("n_groups"));
    assert_eq!(unsafe { grople_ridge_fit(ds, 0.0, &mut model) }, GropleStatus::InvalidArgument);
    assert_eq!(unsafe { grople_ridge_fit(ds, 1.0, &mut model) }, GropleStatus::Ok);
    let mut out = [0.0; 6];
    let bad = unsafe { grople_predict(model, [0.0; 6].as_ptr(), 2, 3, out.as_mut_ptr()) };
    assert_eq!(bad, GropleStatus::Dimension);
    unsafe {
        grople_model_free(model);
        grople_dataset_free(ds);
        grople_model_free(ptr::null_mut());
        grople_dataset_free(ptr::null_mut());
    }
}

#[test]
fn metrics_and_cd() {
    let y = [1., -1., -1., 1.];
    let p = [1., 1., -1., -1.];
    let mut m = GropleMetrics::default();
    assert_eq!(unsafe { grople_metrics(y.as_ptr(), p.as_ptr(), 2, 2, &mut m) }, GropleStatus::Ok);
    assert_eq!(m.micro_f1, 0.5);
    assert!((grople_nemenyi_cd(8, 11, 3.031) - 3.1658).abs() < 1e-4);
    let v = unsafe { CStr::from_ptr(grople_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests/<exe> lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let lib = target_dir().join("libgrople_ffi.a");
    assert!(include.join("grople.h").is_file(), "header missing");
    assert!(lib.is_file(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).arg(dir.path().join("m.json")).output().unwrap();
    assert!(
        out.status.success(),
        "C smoke exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
