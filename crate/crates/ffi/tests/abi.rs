//! The C entry points, called from Rust and from a compiled C program.

use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mems_ffi::*;

fn model(n: usize) -> *mut MemsModel {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(
            mems_model_new(1.0, 0.0, 0.0, 0.5, n, 0, &mut m),
            MemsStatus::MemsOk
        );
        assert!(!m.is_null());
        m
    }
}

fn last_error() -> String {
    unsafe {
        let mut buf = vec![0 as std::ffi::c_char; 256];
        let n = mems_last_error(buf.as_mut_ptr(), buf.len());
        let s = CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned();
        assert_eq!(s.len(), n.min(255));
        s
    }
}

#[test]
fn flat_plate_energy_and_traction() {
    unsafe {
        let m = model(33);
        let n = mems_model_nodes(m);
        assert_eq!(n, 33);
        let u = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut e = 0.0;
        assert_eq!(
            mems_electrostatics(m, u.as_ptr(), n, &mut e, g.as_mut_ptr()),
            MemsStatus::MemsOk
        );
        assert!((e - 2.0).abs() < 1e-12);
        assert!(g.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(last_error().is_empty());
        let (mut lo, mut up) = (0.0, 0.0);
        assert_eq!(
            mems_energy_bounds(m, u.as_ptr(), n, &mut lo, &mut up),
            MemsStatus::MemsOk
        );
        assert!((lo - 2.0).abs() < 1e-12 && (up - 2.0).abs() < 1e-12);
        mems_model_free(m);
    }
}

#[test]
fn eigenpair_minimizer_and_branch() {
    unsafe {
        let m = model(65);
        let n = mems_model_nodes(m);
        let mut x = vec![0.0; n];
        assert_eq!(mems_model_nodes_x(m, x.as_mut_ptr(), n), MemsStatus::MemsOk);
        assert_eq!((x[0], x[n - 1]), (-1.0, 1.0));

        let mut mu = 0.0;
        let mut phi = vec![0.0; n];
        assert_eq!(
            mems_eigenpair(m, &mut mu, phi.as_mut_ptr(), n),
            MemsStatus::MemsOk
        );
        assert!(mu > 30.0 && mu < 32.0);
        assert_eq!(phi.iter().cloned().fold(f64::INFINITY, f64::min), -1.0);

        let mut u = vec![0.0; n];
        let (mut lambda, mut em, mut kkt) = (0.0, 0.0, 0.0);
        let st = mems_minimize(
            m,
            4.0,
            0.0,
            u.as_mut_ptr(),
            n,
            &mut lambda,
            &mut em,
            &mut kkt,
        );
        assert_eq!(st, MemsStatus::MemsOk, "{}", last_error());
        assert!(lambda > 0.0 && em > 0.0 && kkt <= 1e-5);
        let mut e = 0.0;
        assert_eq!(
            mems_electrostatics(m, u.as_ptr(), n, &mut e, ptr::null_mut()),
            MemsStatus::MemsOk
        );
        assert!((e - 4.0).abs() < 1e-5);

        let (mut reached, mut ee) = (0.0, 0.0);
        let st = mems_branch(m, 0.1, 4, u.as_mut_ptr(), n, &mut reached, &mut ee);
        assert_eq!(st, MemsStatus::MemsOk, "{}", last_error());
        assert_eq!(reached, 0.1);
        assert!(ee > 2.0 && ee < 2.1);
        mems_model_free(m);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(
            mems_model_new(-1.0, 0.0, 0.0, 0.5, 33, 0, &mut m),
            MemsStatus::MemsErrInvalid
        );
        assert!(m.is_null());
        assert!(last_error().contains("beta"));
        assert_eq!(
            mems_model_new(1.0, 0.0, 0.0, 0.5, 32, 0, &mut m),
            MemsStatus::MemsErrInvalid
        );
        assert_eq!(
            mems_model_new(1.0, 0.0, 0.0, 0.5, 33, 0, ptr::null_mut()),
            MemsStatus::MemsErrNull
        );

        let m = model(33);
        let short = [0.0; 10];
        let mut e = 0.0;
        assert_eq!(
            mems_electrostatics(m, short.as_ptr(), 10, &mut e, ptr::null_mut()),
            MemsStatus::MemsErrInvalid
        );
        assert!(last_error().contains("length"));
        let touch = vec![-1.0; 33];
        assert_eq!(
            mems_electrostatics(m, touch.as_ptr(), 33, &mut e, ptr::null_mut()),
            MemsStatus::MemsErrTouchdown
        );
        assert_eq!(
            mems_electrostatics(ptr::null(), touch.as_ptr(), 33, &mut e, ptr::null_mut()),
            MemsStatus::MemsErrNull
        );
        assert_eq!(mems_model_nodes(ptr::null()), 0);
        mems_model_free(m);
        mems_model_free(ptr::null_mut());

        let s = CStr::from_ptr(mems_status_str(MemsStatus::MemsErrTouchdown));
        assert_eq!(s.to_str().unwrap(), "touchdown");
        let v = CStr::from_ptr(mems_version());
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn error_message_is_per_thread() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_ne!(
            mems_model_new(1.0, 0.0, 0.0, -1.0, 33, 0, &mut m),
            MemsStatus::MemsOk
        );
        assert!(!last_error().is_empty());
        std::thread::spawn(|| assert!(last_error().is_empty()))
            .join()
            .unwrap();
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "mems.h"

int main(void) {
    MemsModel *m = NULL;
    if (mems_model_new(1.0, 0.0, 0.0, 0.5, 33, 0, &m) != MEMS_OK) return 1;
    size_t n = mems_model_nodes(m);
    double u[33] = {0}, g[33], e = 0.0;
    if (mems_electrostatics(m, u, n, &e, g) != MEMS_OK) return 2;
    if (fabs(e - 2.0) > 1e-12 || fabs(g[16] - 1.0) > 1e-12) return 3;
    u[16] = -1.0;
    if (mems_electrostatics(m, u, n, &e, NULL) != MEMS_ERR_TOUCHDOWN) return 4;
    char msg[128];
    if (mems_last_error(msg, sizeof msg) == 0) return 5;
    mems_model_free(m);
    printf("ok %s\n", mems_version());
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-* -> target/<profile>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libmems_ffi.a");
    if !lib.is_file() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
