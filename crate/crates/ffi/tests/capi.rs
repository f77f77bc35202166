use std::ffi::{CStr, CString};
use std::ptr;

use lacunary_ffi::*;

fn shape(json: &str) -> *mut LacunaryShape {
    let json = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lacunary_shape_from_json(json.as_ptr(), &mut out) }, LacunaryStatus::Ok);
    out
}

fn gaps(json: &str) -> *mut LacunaryGaps {
    let json = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lacunary_gaps_from_json(json.as_ptr(), &mut out) }, LacunaryStatus::Ok);
    out
}

fn last_error() -> String {
    let p = lacunary_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

const COS: &str = r#"{"type":"trig","cos":[1]}"#;
const UNIFORM: &str = r#"{"kind":"uniform","a":0,"b":1}"#;

#[test]
fn shape_queries() {
    let f = shape(COS);
    let mut v = 0.0;
    unsafe {
        assert_eq!(lacunary_shape_evaluate(f, 0.25, &mut v), LacunaryStatus::Ok);
        assert!(v.abs() < 1e-15);
        assert_eq!(lacunary_shape_l2_norm_sq(f, &mut v), LacunaryStatus::Ok);
        assert_eq!(v, 0.5);
        assert_eq!(lacunary_shape_autocorrelation(f, 0.5, &mut v), LacunaryStatus::Ok);
        assert!((v + 0.5).abs() < 1e-15);
        lacunary_shape_free(f);
    }
}

#[test]
fn variance_estimates_agree() {
    let (f, g) = (shape(COS), gaps(UNIFORM));
    let oracle = 0.5 * (1.0 - 8.0 / (std::f64::consts::PI.powi(2) + 4.0));
    let (mut cf, mut series, mut tail, mut mc, mut se) = (0.0, 0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(lacunary_ax_closed_form(f, g, 0.5, &mut cf), LacunaryStatus::Ok);
        assert_eq!(lacunary_ax_series(f, g, 0.5, 60, 4096, &mut series, &mut tail), LacunaryStatus::Ok);
        assert_eq!(lacunary_ax_series(f, g, 0.5, 60, 4096, &mut series, ptr::null_mut()), LacunaryStatus::Ok);
        assert_eq!(lacunary_ax_monte_carlo(f, g, 0.5, 60, 20_000, 9, &mut mc, &mut se), LacunaryStatus::Ok);
    }
    assert!((cf - oracle).abs() < 1e-12);
    assert!((series - cf).abs() < 1e-4);
    assert!(tail >= 0.0);
    assert!((mc - cf).abs() < 4.0 * se);

    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(lacunary_variance_report_json(f, g, 0.5, 60, 4096, 1000, 9, &mut json), LacunaryStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        lacunary_string_free(json);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!((doc["closed_form"].as_f64().unwrap() - cf).abs() < 1e-15);
        lacunary_shape_free(f);
        lacunary_gaps_free(g);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut f = ptr::null_mut();
    let mut g = ptr::null_mut();
    let bad_json = CString::new("{").unwrap();
    let bad_gaps = CString::new(r#"{"kind":"uniform","a":1,"b":0}"#).unwrap();
    let sampled = shape(r#"{"type":"sampled","values":[1,0,0,-1]}"#);
    let u = gaps(UNIFORM);
    let mut v = 0.0;
    unsafe {
        assert_eq!(lacunary_shape_from_json(bad_json.as_ptr(), &mut f), LacunaryStatus::InvalidJson);
        assert_eq!(lacunary_shape_from_json(ptr::null(), &mut f), LacunaryStatus::NullPointer);
        assert!(last_error().contains("json"));
        assert_eq!(lacunary_gaps_from_json(bad_gaps.as_ptr(), &mut g), LacunaryStatus::InvalidInput);
        assert!(last_error().contains("empty gap support"));
        assert_eq!(lacunary_ax_closed_form(sampled, u, 0.5, &mut v), LacunaryStatus::Unsupported);
        assert_eq!(lacunary_ax_closed_form(sampled, u, 0.0, &mut v), LacunaryStatus::InvalidInput);
        assert_eq!(lacunary_shape_evaluate(ptr::null(), 0.0, &mut v), LacunaryStatus::NullPointer);
        assert_eq!(lacunary_shape_evaluate(sampled, 0.0, ptr::null_mut()), LacunaryStatus::NullPointer);
        lacunary_shape_free(sampled);
        lacunary_gaps_free(u);
        lacunary_shape_free(ptr::null_mut());
        lacunary_gaps_free(ptr::null_mut());
        lacunary_string_free(ptr::null_mut());
    }
    assert!(f.is_null() && g.is_null());
}

#[test]
fn density_into_caller_buffer() {
    let g = gaps(UNIFORM);
    let mut buf = vec![0.0; 256];
    unsafe {
        assert_eq!(lacunary_mod1_density(g, 0.5, 3, 256, buf.as_mut_ptr(), buf.len()), LacunaryStatus::Ok);
        assert!((buf.iter().sum::<f64>() / 256.0 - 1.0).abs() < 1e-12);
        assert_eq!(lacunary_mod1_density(g, 0.5, 3, 512, buf.as_mut_ptr(), buf.len()), LacunaryStatus::BufferSize);
        assert_eq!(lacunary_mod1_density(g, 0.5, 3, 100, buf.as_mut_ptr(), 100), LacunaryStatus::InvalidInput);
        lacunary_gaps_free(g);
    }
}

#[test]
fn decay_fit_and_degenerate_case() {
    let half = gaps(r#"{"kind":"uniform","a":0,"b":0.5}"#);
    let mut fit = LacunaryDecayFit { c: 0.0, c_fit: 0.0, w: 0.0, r_squared: 0.0 };
    unsafe {
        assert_eq!(lacunary_decay_fit(half, 1.0, 30, 4096, &mut fit), LacunaryStatus::Ok);
        assert!((0.55..=0.72).contains(&fit.w) && fit.r_squared >= 0.98);
        lacunary_gaps_free(half);
    }
    // unit-length uniform gaps at x = 1 are uniform after one step
    let unit = gaps(UNIFORM);
    unsafe {
        assert_eq!(lacunary_decay_fit(unit, 1.0, 30, 4096, &mut fit), LacunaryStatus::DegenerateFit);
        lacunary_gaps_free(unit);
    }
}

#[test]
fn clt_kefp_and_schedule() {
    let (f, g) = (shape(COS), gaps(UNIFORM));
    let mut s = LacunaryTestSummary { statistic: 0.0, p_value: 0.0, passed: false };
    unsafe {
        assert_eq!(lacunary_clt_test(f, g, 0.5, 1024, 500, 5, &mut s), LacunaryStatus::Ok);
        assert!((0.0..=1.0).contains(&s.p_value));
        lacunary_shape_free(f);
        lacunary_gaps_free(g);
    }

    let mut k = LacunaryKefpResult { partial_integral: 0.0, exponent: 0.0, converges: false };
    unsafe {
        assert_eq!(lacunary_kefp_classify(5.0, 1e6, &mut k), LacunaryStatus::Ok);
        assert!(k.converges && k.exponent == 2.0);
        assert_eq!(lacunary_kefp_classify(1.0, 1e6, &mut k), LacunaryStatus::Ok);
        assert!(!k.converges);
        assert_eq!(lacunary_kefp_classify(1.0, 8.0, &mut k), LacunaryStatus::InvalidInput);
    }

    assert_eq!((lacunary_m_tilde(4), lacunary_m_hat(4), lacunary_m(4)), (5, 4, 9));
    assert_eq!(lacunary_p_of_n(5), 2);
    assert_eq!(lacunary_p_of_n(6), 3);
    assert_eq!(lacunary_p_of_n(1), 0);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(lacunary_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
