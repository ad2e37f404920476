use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use dfl_ffi::*;

const KB: &str = "forall x, y: chair(x) & partOf(y, x) -> cushion(y) | armRest(y)";
const GROUNDING: &str = "chair(o1)=0.9\nchair(o2)=0.4\ncushion(o1)=0.05\ncushion(o2)=0.5\n\
    armRest(o1)=0.05\narmRest(o2)=0.1\npartOf(o1,o1)=0.001\npartOf(o1,o2)=0.01\n\
    partOf(o2,o1)=0.95\npartOf(o2,o2)=0.001\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dfl_last_error()) }.to_string_lossy().into_owned()
}

struct Handles {
    kb: *mut DflKb,
    g: *mut DflGrounding,
    ops: *mut DflOps,
}

impl Handles {
    fn new(kb: &str, grounding: &str, preset: &str) -> Self {
        let mut h = Handles { kb: ptr::null_mut(), g: ptr::null_mut(), ops: ptr::null_mut() };
        unsafe {
            assert_eq!(dfl_kb_parse(c(kb).as_ptr(), &mut h.kb), DflStatus::Ok);
            assert_eq!(dfl_grounding_parse(c(grounding).as_ptr(), &mut h.g), DflStatus::Ok);
            assert_eq!(dfl_ops_preset(c(preset).as_ptr(), &mut h.ops), DflStatus::Ok);
        }
        h
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            dfl_kb_free(self.kb);
            dfl_grounding_free(self.g);
            dfl_ops_free(self.ops);
        }
    }
}

#[test]
fn chair_valuation_and_gradient() {
    let h = Handles::new(KB, GROUNDING, "product");
    assert_eq!(unsafe { dfl_kb_len(h.kb) }, 1);
    let (mut v, mut loss) = (0.0, 0.0);
    assert_eq!(unsafe { dfl_eval(h.kb, h.g, h.ops, &mut v, &mut loss) }, DflStatus::Ok);
    assert!((v - 0.612).abs() < 5e-4);
    assert_eq!(loss, -v);
    let mut d = 0.0;
    let atom = c("cushion(o2)");
    assert_eq!(unsafe { dfl_atom_gradient(h.kb, h.g, h.ops, atom.as_ptr(), &mut d) }, DflStatus::Ok);
    assert!((d.abs() - 0.7662).abs() < 1e-3);
    let missing = c("cushion(o9)");
    assert_eq!(
        unsafe { dfl_atom_gradient(h.kb, h.g, h.ops, missing.as_ptr(), &mut d) },
        DflStatus::InvalidArgument
    );
}

#[test]
fn errors_map_to_status_codes() {
    let mut kb = ptr::null_mut();
    assert_eq!(unsafe { dfl_kb_parse(c("forall x: p(x").as_ptr(), &mut kb) }, DflStatus::Parse);
    assert!(kb.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { dfl_kb_parse(ptr::null(), &mut kb) }, DflStatus::NullPointer);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { dfl_grounding_parse(c("p(a)=oops").as_ptr(), &mut g) }, DflStatus::Parse);

    let h = Handles::new("forall x: forall y: p(x) -> p(y)", "p(a)=0.5\np(b)=0.2", "dpfl");
    let (mut v, mut loss) = (0.0, 0.0);
    assert_eq!(unsafe { dfl_eval(h.kb, h.g, h.ops, &mut v, &mut loss) }, DflStatus::Semantic);
    assert!(last_error().contains("log_product"), "{}", last_error());
    assert_eq!(unsafe { dfl_eval(h.kb, h.g, h.ops, ptr::null_mut(), &mut loss) }, DflStatus::Semantic);
    assert_eq!(
        unsafe { dfl_ops_set(h.ops, c("tnorm").as_ptr(), c("nonsense").as_ptr()) },
        DflStatus::Semantic
    );
    assert_eq!(
        unsafe { dfl_ops_set(h.ops, c("colour").as_ptr(), c("red").as_ptr()) },
        DflStatus::InvalidArgument
    );
    assert_eq!(unsafe { dfl_ops_set(h.ops, c("aggregator").as_ptr(), c("min").as_ptr()) }, DflStatus::Ok);
    assert_eq!(unsafe { dfl_eval(h.kb, h.g, h.ops, &mut v, &mut loss) }, DflStatus::Ok);
    assert_eq!(unsafe { dfl_eval(h.kb, h.g, h.ops, ptr::null_mut(), &mut loss) }, DflStatus::NullPointer);
}

#[test]
fn operator_eval_and_oracle() {
    let (mut v, mut d) = (0.0, [0.0; 2]);
    let st = unsafe { dfl_operator_eval(c("reichenbach").as_ptr(), [0.3, 0.6].as_ptr(), 2, &mut v, d.as_mut_ptr()) };
    assert_eq!(st, DflStatus::Ok);
    assert!((v - (1.0 - 0.3 + 0.3 * 0.6)).abs() < 1e-12);
    assert!((d[0] - (0.6 - 1.0)).abs() < 1e-12 && (d[1] - 0.3).abs() < 1e-12);
    let st = unsafe { dfl_operator_eval(c("product_tnorm").as_ptr(), [0.3].as_ptr(), 1, &mut v, d.as_mut_ptr()) };
    assert_eq!(st, DflStatus::InvalidArgument);

    let h = Handles::new("p & ~(p & q)", "p=0.5\nq=0.5", "dpfl");
    let (mut exact, mut dpfl, mut single) = (0.0, 0.0, true);
    let st = unsafe { dfl_semantic_compare(h.kb, h.g, &mut exact, &mut dpfl, &mut single) };
    assert_eq!(st, DflStatus::Ok);
    assert!((exact - 0.25).abs() < 1e-12 && (dpfl - 0.375).abs() < 1e-12 && !single);

    let wide: String = (0..21).map(|i| format!("p(o{})=0.5\n", i)).collect();
    let h = Handles::new("forall x: p(x)", &wide, "dpfl");
    let st = unsafe { dfl_semantic_compare(h.kb, h.g, &mut exact, &mut dpfl, &mut single) };
    assert_eq!(st, DflStatus::ResourceCap);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(dfl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Directory holding the compiled libraries, two levels above the test
/// executable in `target/<profile>/deps`.
fn lib_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    exe.parent()?.parent().map(Path::to_path_buf)
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(crate_dir().join("include/dfl.h")).unwrap();
    for name in [
        "dfl_version",
        "dfl_last_error",
        "dfl_kb_parse",
        "dfl_kb_free",
        "dfl_grounding_parse",
        "dfl_ops_preset",
        "dfl_ops_set",
        "dfl_eval",
        "dfl_atom_gradient",
        "dfl_operator_eval",
        "dfl_semantic_compare",
        "DFL_STATUS_RESOURCE_CAP = 4",
        "typedef struct DflKb DflKb",
    ] {
        assert!(header.contains(name), "dfl.h lacks {}", name);
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let include = crate_dir().join("include");
    let src = crate_dir().join("tests/smoke.c");
    let syntax = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .expect("a C compiler on PATH");
    assert!(syntax.success(), "dfl.h does not compile as C11");

    let lib = lib_dir().unwrap().join("libdfl_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let bin = std::env::temp_dir().join(format!("dfl_smoke_{}", std::process::id()));
    let built = Command::new("cc")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(built.success());
    let out = Command::new(&bin).output().unwrap();
    let _ = std::fs::remove_file(&bin);
    assert!(out.status.success(), "smoke program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("valuation 0.612"));
}
