use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use mutsym_ffi::*;

const RUNNING: &str = include_str!("../../core/corpus/running_example.mimp");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    mutsym_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = mutsym_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

unsafe fn parse(src: &str) -> *mut MutsymProgram {
    let mut p = ptr::null_mut();
    assert_eq!(mutsym_program_parse(c(src).as_ptr(), &mut p), MutsymStatus::Ok);
    p
}

#[test]
fn parse_and_count_locations() {
    unsafe {
        let p = parse(RUNNING);
        let mut n = 0usize;
        assert_eq!(mutsym_program_location_count(p, &mut n), MutsymStatus::Ok);
        assert_eq!(n, 13);
        assert!(mutsym_last_error().is_null());
        mutsym_program_free(p);
    }
}

#[test]
fn run_reports_outputs() {
    unsafe {
        let p = parse(RUNNING);
        let mut out = ptr::null_mut();
        let lts = mutsym::lang::compile_str(RUNNING).unwrap();
        for x in [2, -1, 0, 127] {
            let input = format!("x={x}");
            assert_eq!(mutsym_program_run(p, c(&input).as_ptr(), 10_000, &mut out), MutsymStatus::Ok);
            let direct = mutsym::exec::run_outcome(&lts, 0, &mutsym::symex::io::parse_valuation(&input, 1).unwrap(), 10_000).unwrap();
            assert_eq!(take(out), direct.to_string());
        }
        assert_eq!(mutsym_program_run(p, c("x=999").as_ptr(), 10_000, &mut out), MutsymStatus::DomainViolation);
        assert!(out.is_null());
        assert!(last_error().contains("x=999"));
        mutsym_program_free(p);
    }
}

#[test]
fn syntax_and_semantic_errors_map_to_codes() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(mutsym_program_parse(c("fn main( {").as_ptr(), &mut p), MutsymStatus::Syntax);
        assert!(p.is_null());
        assert!(last_error().starts_with("syntax error"));
        let undeclared = "fn main() { output y; }";
        assert_eq!(mutsym_program_parse(c(undeclared).as_ptr(), &mut p), MutsymStatus::Semantic);
    }
}

#[test]
fn null_and_utf8_arguments_are_rejected() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(mutsym_program_parse(ptr::null(), &mut p), MutsymStatus::NullPointer);
        assert_eq!(mutsym_program_parse(c("fn main() {}").as_ptr(), ptr::null_mut()), MutsymStatus::NullPointer);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(mutsym_program_parse(bad.as_ptr().cast(), &mut p), MutsymStatus::InvalidUtf8);
        let mut n = 0usize;
        assert_eq!(mutsym_program_location_count(ptr::null(), &mut n), MutsymStatus::NullPointer);
        mutsym_program_free(ptr::null_mut());
        mutsym_mutants_free(ptr::null_mut());
        mutsym_string_free(ptr::null_mut());
    }
}

#[test]
fn mutants_with_operator_filter() {
    unsafe {
        let p = parse(RUNNING);
        let (mut all, mut crp) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(mutsym_mutants_generate(p, ptr::null(), &mut all), MutsymStatus::Ok);
        assert_eq!(mutsym_mutants_generate(p, c("CRP").as_ptr(), &mut crp), MutsymStatus::Ok);
        let (mut n_all, mut n_crp) = (0usize, 0usize);
        mutsym_mutants_count(all, &mut n_all);
        mutsym_mutants_count(crp, &mut n_crp);
        assert!(n_crp > 0 && n_crp < n_all);
        let mut tsv = ptr::null_mut();
        assert_eq!(mutsym_mutants_tsv(crp, &mut tsv), MutsymStatus::Ok);
        let tsv = take(tsv);
        assert_eq!(tsv.lines().count(), n_crp + 1);
        assert!(tsv.lines().skip(1).all(|l| l.contains("CRP")));
        let mut bad = ptr::null_mut();
        assert_eq!(mutsym_mutants_generate(p, c("XYZ").as_ptr(), &mut bad), MutsymStatus::Mutation);
        mutsym_mutants_free(all);
        mutsym_mutants_free(crp);
        mutsym_program_free(p);
    }
}

#[test]
fn generated_tests_parse_back() {
    unsafe {
        let p = parse(RUNNING);
        let mut out = ptr::null_mut();
        let cfg = c("max_states=400\nbudget_seconds=0\noperators=CRP\n");
        assert_eq!(mutsym_generate_tests(p, cfg.as_ptr(), c("x=2\n").as_ptr(), &mut out), MutsymStatus::Ok);
        let text = take(out);
        let tests = mutsym::symex::io::parse_tests(&text).unwrap();
        assert!(!tests.is_empty());
        assert!(tests.iter().all(|t| t.input.contains_key("x")));
        assert_eq!(mutsym_generate_tests(p, c("pp=3").as_ptr(), ptr::null(), &mut out), MutsymStatus::Config);
        assert!(out.is_null());
        mutsym_program_free(p);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mutsym.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["mutsym_program_parse", "mutsym_generate_tests", "mutsym_string_free", "MUTSYM_STATUS_DOMAIN_VIOLATION"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile_dir();
    let src = dir.join("check.c");
    std::fs::write(&src, "#include \"mutsym.h\"\nint main(void) { MutsymProgram *p = 0; return (int)mutsym_program_parse(\"\", &p); }\n").unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-I").arg(header.parent().unwrap()).arg(&src).status() {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler; skipped the compile check"),
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("mutsym-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
