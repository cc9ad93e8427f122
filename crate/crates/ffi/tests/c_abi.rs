use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use hsaug::classifier::{predict, train, FeatureSpec, LinearModel, TrainConfig};
use hsaug::corpus::read_corpus;
use hsaug_ffi::*;

fn last_error() -> String {
    let p = hsaug_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn trained(dir: &Path) -> (LinearModel, CString) {
    let gold = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/gold.jsonl");
    let posts = read_corpus(&gold).unwrap();
    let model = train(&posts, &TrainConfig::downstream_default(), &FeatureSpec::default()).unwrap();
    let path = dir.join("model.json");
    model.save(&path).unwrap();
    (model, CString::new(path.to_str().unwrap()).unwrap())
}

#[test]
fn model_round_trip_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (model, path) = trained(dir.path());
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { hsaug_model_load(path.as_ptr(), &mut handle) }, HsaugStatus::Ok);
    assert!(hsaug_last_error_message().is_null());
    for text in ["they should all be thrown out", "had a lovely walk in the park"] {
        let c = CString::new(text).unwrap();
        let (mut p, mut hateful) = (f64::NAN, false);
        assert_eq!(unsafe { hsaug_model_predict(handle, c.as_ptr(), &mut p, &mut hateful) }, HsaugStatus::Ok);
        let (label, expected) = predict(&model, text);
        assert_eq!(p.to_bits(), expected.to_bits());
        assert_eq!(hateful, label.is_hateful());
    }
    unsafe { hsaug_model_free(handle) };
}

#[test]
fn load_errors_carry_codes_and_messages() {
    let dir = tempfile::tempdir().unwrap();
    let mut handle = ptr::null_mut();
    let missing = CString::new(dir.path().join("absent.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { hsaug_model_load(missing.as_ptr(), &mut handle) }, HsaugStatus::Io);
    assert!(handle.is_null());
    assert!(last_error().contains("absent.json"));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"format\": 3}").unwrap();
    let garbage = CString::new(garbage.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { hsaug_model_load(garbage.as_ptr(), &mut handle) }, HsaugStatus::Format);
    assert_eq!(unsafe { hsaug_model_load(ptr::null(), &mut handle) }, HsaugStatus::NullArgument);
    assert_eq!(unsafe { hsaug_model_load(garbage.as_ptr(), ptr::null_mut()) }, HsaugStatus::NullArgument);
    let bad_utf8 = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { hsaug_model_load(bad_utf8.as_ptr().cast(), &mut handle) },
        HsaugStatus::InvalidUtf8
    );
    unsafe { hsaug_model_free(ptr::null_mut()) };
}

#[test]
fn prompts_follow_the_instruction_format() {
    let target = CString::new("religion").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { hsaug_build_prompt(true, target.as_ptr(), ptr::null(), 0, &mut out) }, HsaugStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(out) }.to_str().unwrap(), "Write a hateful social media post about religion:");
    unsafe { hsaug_string_free(out) };

    let demos: Vec<CString> = ["one", "two\nlines", "three"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs: Vec<*const std::ffi::c_char> = demos.iter().map(|d| d.as_ptr()).collect();
    assert_eq!(unsafe { hsaug_build_prompt(false, ptr::null(), ptrs.as_ptr(), 3, &mut out) }, HsaugStatus::Ok);
    let line = "Write a social media post:";
    let expected = format!("{line}\none\n\n{line}\ntwo lines\n\n{line}\nthree\n\n{line}");
    assert_eq!(unsafe { CStr::from_ptr(out) }.to_str().unwrap(), expected);
    unsafe { hsaug_string_free(out) };

    assert_eq!(unsafe { hsaug_build_prompt(false, ptr::null(), ptrs.as_ptr(), 2, &mut out) }, HsaugStatus::InvalidInput);
    assert!(out.is_null());
    let unknown = CString::new("planets").unwrap();
    assert_eq!(unsafe { hsaug_build_prompt(true, unknown.as_ptr(), ptr::null(), 0, &mut out) }, HsaugStatus::Format);
    assert!(last_error().contains("planets"));
}

#[test]
fn aso_through_the_abi() {
    let a: Vec<f64> = (0..5).map(|i| 0.8 + 0.01 * i as f64).collect();
    let b: Vec<f64> = (0..5).map(|i| 0.6 + 0.01 * i as f64).collect();
    let mut r = HsaugAsoResult::default();
    assert_eq!(unsafe { hsaug_aso(a.as_ptr(), 5, b.as_ptr(), 5, 200, 7, &mut r) }, HsaugStatus::Ok);
    assert!(r.epsilon_min < 0.2 && r.highly_significant && r.significant && !r.degenerate);

    assert_eq!(unsafe { hsaug_aso(a.as_ptr(), 5, a.as_ptr(), 5, 0, 7, &mut r) }, HsaugStatus::Ok);
    assert!(r.degenerate);
    assert_eq!(unsafe { hsaug_aso(a.as_ptr(), 1, b.as_ptr(), 5, 0, 7, &mut r) }, HsaugStatus::InvalidInput);
    assert_eq!(unsafe { hsaug_aso(a.as_ptr(), 5, b.as_ptr(), 5, 10, 7, &mut r) }, HsaugStatus::InvalidInput);
}

#[test]
fn alpha_matches_a_hand_computed_matrix() {
    // Coincidences o00 = o11 = 2, o01 = o10 = 1: alpha = 1 - (2/6) / (18/30) = 4/9.
    let values = [0, 0, 1, 1, 0, 1];
    let mut alpha = f64::NAN;
    assert_eq!(unsafe { hsaug_krippendorff_alpha(values.as_ptr(), 3, 2, &mut alpha) }, HsaugStatus::Ok);
    assert!((alpha - 4.0 / 9.0).abs() < 1e-12);

    // A lone judgment is not pairable and drops out.
    let values = [0, 0, 1, 1, 0, 1, 1, HSAUG_MISSING];
    assert_eq!(unsafe { hsaug_krippendorff_alpha(values.as_ptr(), 4, 2, &mut alpha) }, HsaugStatus::Ok);
    assert!((alpha - 4.0 / 9.0).abs() < 1e-12);

    let constant = [1, 1, 1, 1];
    assert_eq!(unsafe { hsaug_krippendorff_alpha(constant.as_ptr(), 2, 2, &mut alpha) }, HsaugStatus::Undefined);
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hsaug.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["hsaug_model_load", "hsaug_model_predict", "hsaug_model_free", "hsaug_build_prompt", "hsaug_aso", "hsaug_krippendorff_alpha", "hsaug_last_error_message", "hsaug_string_free", "HSAUG_STATUS_NULL_ARGUMENT"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"hsaug.h\"\nint main(void) { hsaug_model *m = 0; double p; bool h;\n\
         return hsaug_model_predict(m, \"x\", &p, &h) == HSAUG_STATUS_OK; }\n",
    )
    .unwrap();
    let include = header.parent().unwrap();
    for (compiler, extra) in [("cc", &["-std=c99"][..]), ("c++", &["-x", "c++"][..])] {
        let out = Command::new(compiler)
            .args(extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(include)
            .arg(&src)
            .output()
            .unwrap_or_else(|e| panic!("{compiler}: {e}"));
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_and_runs() {
    // Tests run from target/<profile>/deps; the cdylib sits one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(Path::parent).unwrap();
    assert!(lib_dir.join("libhsaug_ffi.so").exists() || lib_dir.join("libhsaug_ffi.dylib").exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "hsaug.h"
int main(void) {
    int32_t v[] = {0, 0, 1, 1, 0, 1};
    double alpha = 0;
    if (hsaug_krippendorff_alpha(v, 3, 2, &alpha) != HSAUG_STATUS_OK) return 2;
    char *prompt = NULL;
    if (hsaug_build_prompt(true, "gender", NULL, 0, &prompt) != HSAUG_STATUS_OK) return 3;
    printf("%.6f|%s\n", alpha, prompt);
    hsaug_string_free(prompt);
    hsaug_model *m = NULL;
    if (hsaug_model_load("/nonexistent/model.json", &m) != HSAUG_STATUS_IO) return 4;
    printf("%s\n", hsaug_last_error_message());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new("cc")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg("-L")
        .arg(lib_dir)
        .arg("-lhsaug_ffi")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).env("LD_LIBRARY_PATH", lib_dir).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "0.444444|Write a hateful social media post about gender:");
    assert!(lines.next().unwrap().contains("/nonexistent/model.json"));
}
