use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use lacunaria_ffi::*;

fn word(lit: &str) -> *mut LacWord {
    let lit = CString::new(lit).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { lac_word_parse(lit.as_ptr(), &mut w) }, LacStatus::Ok);
    w
}

fn last_error() -> String {
    let p = lac_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn word_round_trip() {
    unsafe {
        let a = word("1 2 -1");
        let b = word("1 -2");
        let mut ab = ptr::null_mut();
        assert_eq!(lac_word_multiply(a, b, &mut ab), LacStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(lac_word_to_string(ab, &mut s), LacStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), "1");
        let mut len = 0usize;
        assert_eq!(lac_word_length(ab, &mut len), LacStatus::Ok);
        assert_eq!(len, 1);
        lac_string_free(s);

        let mut inv = ptr::null_mut();
        assert_eq!(lac_word_inverse(a, &mut inv), LacStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(lac_word_multiply(a, inv, &mut e), LacStatus::Ok);
        assert_eq!(lac_word_length(e, &mut len), LacStatus::Ok);
        assert_eq!(len, 0);

        for w in [a, b, ab, inv, e] {
            lac_word_free(w);
        }
    }
}

#[test]
fn letters_reduce() {
    let letters = [1, 2, -2, 3];
    let mut w = ptr::null_mut();
    let mut len = 0usize;
    unsafe {
        assert_eq!(lac_word_from_letters(letters.as_ptr(), letters.len(), &mut w), LacStatus::Ok);
        assert_eq!(lac_word_length(w, &mut len), LacStatus::Ok);
        lac_word_free(w);
        assert_eq!(lac_word_from_letters([0].as_ptr(), 1, &mut w), LacStatus::InvalidArgument);
    }
    assert_eq!(len, 2);
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("1 x").unwrap();
    let mut w = ptr::null_mut();
    let status = unsafe { lac_word_parse(bad.as_ptr(), &mut w) };
    assert_eq!(status, LacStatus::Parse);
    assert!(w.is_null());
    assert!(last_error().contains("column 3"), "{}", last_error());

    let status = unsafe { lac_word_parse(ptr::null(), &mut w) };
    assert_eq!(status, LacStatus::NullPointer);

    let mut len = 0usize;
    assert_eq!(unsafe { lac_word_length(ptr::null(), &mut len) }, LacStatus::NullPointer);
}

#[test]
fn cn_check_discriminates() {
    let mut passed = -1;
    let mut lmax = 0.0;
    for (name, expect) in [("abs", 1), ("pow:3", 0)] {
        let name = CString::new(name).unwrap();
        let mut psi = ptr::null_mut();
        unsafe {
            assert_eq!(lac_length_from_name(name.as_ptr(), &mut psi), LacStatus::Ok);
            assert_eq!(lac_cn_check_ball(psi, 1, 4, 1e-9, &mut passed, &mut lmax), LacStatus::Ok);
            lac_length_free(psi);
        }
        assert_eq!(passed, expect);
    }
}

#[test]
fn element_norms() {
    let json = CString::new(r#"[{"word": "1", "re": 1}, {"word": "2", "re": 1}, {"word": "3", "re": 1}, {"word": "4", "re": 1}]"#).unwrap();
    let mut x = ptr::null_mut();
    let (mut lower, mut upper, mut col, mut row) = (0.0, 0.0, 0.0, 0.0);
    let mut len = 0usize;
    unsafe {
        assert_eq!(lac_element_from_json(json.as_ptr(), &mut x), LacStatus::Ok);
        assert_eq!(lac_element_len(x, &mut len), LacStatus::Ok);
        assert_eq!(lac_element_rcp_norms(x, &mut col, &mut row), LacStatus::Ok);
        assert_eq!(lac_element_operator_norm_lower(x, 4, 5_000_000, &mut lower), LacStatus::Ok);
        assert_eq!(lac_element_free_upper_bound(x, &mut upper), LacStatus::Ok);
        lac_element_free(x);
    }
    assert_eq!(len, 4);
    assert!((col - 4.0).abs() < 1e-12 && (row - 4.0).abs() < 1e-12);
    assert!((upper - 4.0).abs() < 1e-12);
    assert!(lower >= 2.0 && lower <= upper);
}

#[test]
fn non_free_support_is_refused() {
    unsafe {
        let ws = [word("1"), word("1 1")];
        let ptrs: Vec<*const LacWord> = ws.iter().map(|w| *w as *const _).collect();
        let (re, im) = ([1.0, 1.0], [0.0, 0.0]);
        let mut x = ptr::null_mut();
        assert_eq!(
            lac_element_from_scalars(ptrs.as_ptr(), re.as_ptr(), im.as_ptr(), 2, &mut x),
            LacStatus::Ok
        );
        let mut bound = 0.0;
        assert_eq!(lac_element_free_upper_bound(x, &mut bound), LacStatus::NotFree);
        let (mut free, mut rank) = (-1, 0usize);
        assert_eq!(lac_is_free_basis(ptrs.as_ptr(), 2, &mut free, &mut rank), LacStatus::Ok);
        assert_eq!((free, rank), (0, 1));
        lac_element_free(x);
        for w in ws {
            lac_word_free(w);
        }
    }
}

#[test]
fn torus_and_truncated_bmo_agree_on_dyadic_sum() {
    let entries: Vec<String> = (1..=6)
        .map(|k| format!(r#"{{"word": "{}", "re": 1}}"#, vec!["1"; 1 << k].join(" ")))
        .collect();
    let json = CString::new(format!("[{}]", entries.join(","))).unwrap();
    let abs = CString::new("abs").unwrap();
    let grid: Vec<f64> = (0..25).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).collect();
    let (mut torus, mut lower, mut upper, mut witness) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        let mut x = ptr::null_mut();
        let mut psi = ptr::null_mut();
        assert_eq!(lac_element_from_json(json.as_ptr(), &mut x), LacStatus::Ok);
        assert_eq!(lac_length_from_name(abs.as_ptr(), &mut psi), LacStatus::Ok);
        assert_eq!(
            lac_torus_bmo_estimate(psi, x, grid.as_ptr(), grid.len(), 1 << 12, &mut torus),
            LacStatus::Ok
        );
        assert_eq!(
            lac_bmo_estimate(psi, x, grid.as_ptr(), grid.len(), 256, &mut lower, &mut upper, &mut witness),
            LacStatus::Ok
        );
        lac_element_free(x);
        lac_length_free(psi);
    }
    assert!((torus - lower).abs() < 0.02, "{torus} vs {lower}");
    assert!(witness <= lower * lower + 1e-6);
    assert!(lower <= upper);
}

#[test]
fn counting() {
    let (mut count, mut ratio, mut exponent) = (0usize, 0.0, 0.0);
    assert_eq!(
        unsafe { lac_count_intersection(1, 5, &mut count, &mut ratio, &mut exponent) },
        LacStatus::Ok
    );
    assert_eq!(count, 8);
    assert!((exponent - 3f64.ln()).abs() < 0.1);
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(lac_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lacunaria.h");
    let text = std::fs::read_to_string(&header).expect("header generated by the build script");
    for name in ["lac_word_parse", "lac_bmo_estimate", "lac_count_intersection", "LAC_STATUS_NOT_FREE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(dir) = tempfile::tempdir() else { return };
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"lacunaria.h\"\nint main(void) { LacWord *w = 0; return lac_word_parse(\"1 2\", &w) == LAC_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; skipped the syntax check"),
    }
}
