//! Exercise the C ABI through the exported symbols, the way a foreign
//! caller would.

use cblab_ffi::*;
use std::ffi::CString;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { cblab_last_error(buf.as_mut_ptr() as *mut _, buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8_lossy(&buf).into_owned()
}

#[test]
fn domain_counts_through_the_abi() {
    let st = cblab_stencil_nearest(1);
    assert!(!st.is_null());
    let mut dom = std::ptr::null_mut();
    let lo = [0.0f64];
    let hi = [1.0f64];
    let rc = unsafe { cblab_domain_box(1, lo.as_ptr(), hi.as_ptr(), 0.125, st, &mut dom) };
    assert_eq!(rc, CBLAB_OK, "{}", last_error());
    unsafe {
        // the unit chain at eps = 1/8: 7 sites, 3 interior, 5 semi
        assert_eq!(cblab_domain_site_count(dom), 7);
        assert_eq!(cblab_domain_interior_count(dom), 3);
        assert_eq!(cblab_domain_semi_interior_count(dom), 5);
        assert_eq!(cblab_domain_boundary_count(dom), 4);
        cblab_domain_free(dom);
        cblab_stencil_free(st);
    }
}

#[test]
fn coarse_domain_reports_precondition_failure() {
    let st = cblab_stencil_nearest(2);
    let mut dom = std::ptr::null_mut();
    let lo = [0.0f64, 0.0];
    let hi = [1.0f64, 1.0];
    let rc = unsafe { cblab_domain_box(2, lo.as_ptr(), hi.as_ptr(), 0.5, st, &mut dom) };
    assert_eq!(rc, CBLAB_PRECONDITION_FAILED);
    assert!(last_error().contains("no interior site"), "{}", last_error());
    unsafe { cblab_stencil_free(st) };
}

#[test]
fn cauchy_born_and_stability_constants() {
    let st = cblab_stencil_nearest(1);
    let pot = unsafe { cblab_potential_harmonic(st) };
    assert!(!pot.is_null());
    let f = [1.5f64];
    let mut value = 0.0;
    let mut grad = [0.0f64];
    let rc = unsafe { cblab_cauchy_born(pot, f.as_ptr(), &mut value, grad.as_mut_ptr()) };
    assert_eq!(rc, CBLAB_OK);
    // harmonic chain: W_cb(a) = a^2
    assert!((value - 2.25).abs() < 1e-14);
    assert!((grad[0] - 3.0).abs() < 1e-14);

    let mut lh = 0.0;
    assert_eq!(unsafe { cblab_lambda_lh(pot, f.as_ptr(), &mut lh) }, CBLAB_OK);
    assert!((lh - 2.0).abs() < 1e-12);

    let mut atom = 0.0;
    let mut kmin = [0.0f64; 3];
    assert_eq!(
        unsafe { cblab_lambda_atom(pot, f.as_ptr(), &mut atom, kmin.as_mut_ptr()) },
        CBLAB_OK
    );
    assert!((atom - 1.0).abs() < 1e-9);

    let mut dom = std::ptr::null_mut();
    let lo = [0.0f64];
    let hi = [1.0f64];
    assert_eq!(
        unsafe { cblab_domain_box(1, lo.as_ptr(), hi.as_ptr(), 1.0 / 32.0, st, &mut dom) },
        CBLAB_OK
    );
    let mut le = 0.0;
    assert_eq!(unsafe { cblab_lambda_eps(pot, f.as_ptr(), dom, 7, &mut le) }, CBLAB_OK);
    assert!((le - 1.0).abs() < 1e-7);

    unsafe {
        cblab_domain_free(dom);
        cblab_potential_free(pot);
        cblab_stencil_free(st);
    }
}

#[test]
fn admissibility_errors_cross_the_boundary() {
    let st = cblab_stencil_nearest(1);
    let pot = unsafe { cblab_potential_lennard_jones(st, 1.0, 2.0_f64.powf(-1.0 / 6.0), 0.3) };
    let f = [0.1f64]; // bond length below the floor
    let mut value = 0.0;
    let rc = unsafe { cblab_cauchy_born(pot, f.as_ptr(), &mut value, std::ptr::null_mut()) };
    assert_eq!(rc, CBLAB_NUMERICAL_FAILURE);
    assert!(last_error().contains("admissible"), "{}", last_error());
    unsafe {
        cblab_potential_free(pot);
        cblab_stencil_free(st);
    }
}

#[test]
fn run_study_writes_csv() {
    let out = std::env::temp_dir().join(format!("cblab-ffi-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&out);
    let cfg = r#"{
        "dimension": 1,
        "domain": {"shape": "box", "lo": [0.0], "hi": [1.0]},
        "potential": {"kind": "harmonic"},
        "reference": {"family": "sinusoid", "amplitude": 0.05, "wave": [1.0], "omega": 3.141592653589793, "direction": [1.0]},
        "epsilons": [0.0625, 0.03125, 0.015625],
        "t0": 0.5
    }"#;
    let cfg_c = CString::new(cfg).unwrap();
    let out_c = CString::new(out.to_str().unwrap()).unwrap();
    let rc = unsafe {
        cblab_run_study(CblabStudy::Residual, cfg_c.as_ptr(), out_c.as_ptr(), 1, 2)
    };
    assert_eq!(rc, CBLAB_OK, "{}", last_error());
    let text = std::fs::read_to_string(out.join("residual.csv")).unwrap();
    assert!(text.starts_with("epsilon,interior_sites,residual_l2"));
    assert_eq!(text.lines().count(), 4);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn bad_config_reports_config_error() {
    let cfg_c = CString::new("{ not json").unwrap();
    let rc = unsafe {
        cblab_run_study(CblabStudy::Residual, cfg_c.as_ptr(), std::ptr::null(), 0, 1)
    };
    assert_eq!(rc, CBLAB_CONFIG_ERROR);
}
