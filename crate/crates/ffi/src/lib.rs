//! C interface to the mutsym library.
//!
//! Every function returns a [`MutsymStatus`]. On failure the message of the
//! last error on the calling thread is available from [`mutsym_last_error`].
//! Handles are opaque and must be released with their `_free` function;
//! strings returned through `char **` must be released with
//! [`mutsym_string_free`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mutsym::cli::{parse_config, seed_cases, CliError};
use mutsym::exec::{compute_kill_matrix, run_outcome, ExecError};
use mutsym::lang::{compile_str, LangError, Lts};
use mutsym::mutation::{build_meta_mutant, generate_mutants, mutants_tsv, tce_filter, Mutant, MutationError, Operator};
use mutsym::symex::{explore, io, SymexError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutsymStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    Semantic = 4,
    Lowering = 5,
    Mutation = 6,
    DomainViolation = 7,
    Io = 8,
    Config = 9,
    Internal = 10,
}

/// A compiled program.
pub struct MutsymProgram {
    lts: Lts,
}

/// The mutants of one program.
pub struct MutsymMutants {
    mutants: Vec<Mutant>,
}

struct Failure(MutsymStatus, String);

impl From<LangError> for Failure {
    fn from(e: LangError) -> Self {
        let status = match e {
            LangError::Syntax { .. } => MutsymStatus::Syntax,
            LangError::Semantic { .. } => MutsymStatus::Semantic,
            _ => MutsymStatus::Lowering,
        };
        Failure(status, e.to_string())
    }
}

impl From<MutationError> for Failure {
    fn from(e: MutationError) -> Self {
        Failure(MutsymStatus::Mutation, e.to_string())
    }
}

impl From<ExecError> for Failure {
    fn from(e: ExecError) -> Self {
        let status = match e {
            ExecError::DomainViolation { .. } => MutsymStatus::DomainViolation,
            ExecError::MalformedMatrix(_) => MutsymStatus::Internal,
            _ => MutsymStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

impl From<SymexError> for Failure {
    fn from(e: SymexError) -> Self {
        let status = match e {
            SymexError::InvalidConfig(_) | SymexError::Seed(_) | SymexError::Format { .. } => MutsymStatus::Config,
            _ => MutsymStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e {
            CliError::Config { .. } => MutsymStatus::Config,
            CliError::Io { .. } => MutsymStatus::Io,
            CliError::Stage { .. } => MutsymStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MutsymStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MutsymStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            MutsymStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(MutsymStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(MutsymStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(MutsymStatus::NullPointer, format!("{what} is null")))
}

fn check_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(MutsymStatus::NullPointer, "output pointer is null".into()));
    }
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn operators(spec: Option<&str>) -> Result<BTreeSet<Operator>, Failure> {
    match spec {
        None => Ok(Operator::all()),
        Some(s) => Ok(s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect::<Result<_, MutationError>>()?),
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mutsym_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and lowers program text.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mutsym_program_parse(source: *const c_char, out: *mut *mut MutsymProgram) -> MutsymStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let lts = compile_str(text(source, "source")?)?;
        *out = Box::into_raw(Box::new(MutsymProgram { lts }));
        Ok(())
    })
}

/// # Safety
/// `program` must come from [`mutsym_program_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn mutsym_program_free(program: *mut MutsymProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Number of locations, the exit location included.
///
/// # Safety
/// `program` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mutsym_program_location_count(program: *const MutsymProgram, out: *mut usize) -> MutsymStatus {
    guard(|| {
        check_out(out)?;
        *out = handle(program, "program")?.lts.locations.len();
        Ok(())
    })
}

/// Runs the original program on `input` (`name=value,...`) and writes the
/// outcome, e.g. `[4]` or `[] error`, to `out`.
///
/// # Safety
/// `program` must be a live handle, `input` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mutsym_program_run(
    program: *const MutsymProgram,
    input: *const c_char,
    step_budget: u64,
    out: *mut *mut c_char,
) -> MutsymStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let p = handle(program, "program")?;
        let input = io::parse_valuation(text(input, "input")?, 1)?;
        let outcome = run_outcome(&p.lts, 0, &input, step_budget)?;
        *out = into_c_string(outcome.to_string());
        Ok(())
    })
}

/// Generates the mutants of `program`. `operators` is a comma-separated list
/// of operator names, or null for all operators.
///
/// # Safety
/// `program` must be a live handle, `operators` null or NUL-terminated, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mutsym_mutants_generate(
    program: *const MutsymProgram,
    operators: *const c_char,
    out: *mut *mut MutsymMutants,
) -> MutsymStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let p = handle(program, "program")?;
        let ops = self::operators(optional_text(operators, "operators")?)?;
        let mutants = generate_mutants(&p.lts, &ops)?;
        *out = Box::into_raw(Box::new(MutsymMutants { mutants }));
        Ok(())
    })
}

/// # Safety
/// `mutants` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mutsym_mutants_count(mutants: *const MutsymMutants, out: *mut usize) -> MutsymStatus {
    guard(|| {
        check_out(out)?;
        *out = handle(mutants, "mutants")?.mutants.len();
        Ok(())
    })
}

/// Tab-separated mutant listing with a header line.
///
/// # Safety
/// `mutants` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mutsym_mutants_tsv(mutants: *const MutsymMutants, out: *mut *mut c_char) -> MutsymStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        *out = into_c_string(mutants_tsv(&handle(mutants, "mutants")?.mutants));
        Ok(())
    })
}

/// # Safety
/// `mutants` must come from [`mutsym_mutants_generate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn mutsym_mutants_free(mutants: *mut MutsymMutants) {
    if !mutants.is_null() {
        drop(Box::from_raw(mutants));
    }
}

/// Generates tests for the mutants of `program` that survive the trivial
/// equivalence filter and the seeds. `config` holds `key=value` lines in the
/// command-line configuration format and `seeds` one valuation per line;
/// either may be null. The generated-test file text is written to `out`.
///
/// # Safety
/// `program` must be a live handle, `config` and `seeds` null or
/// NUL-terminated, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mutsym_generate_tests(
    program: *const MutsymProgram,
    config: *const c_char,
    seeds: *const c_char,
    out: *mut *mut c_char,
) -> MutsymStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let p = handle(program, "program")?;
        let manifest = parse_config(optional_text(config, "config")?.unwrap_or(""))?;
        manifest.config.validate()?;
        let seeds = io::parse_seeds(optional_text(seeds, "seeds")?.unwrap_or(""))?;
        let mutants = generate_mutants(&p.lts, &manifest.operators)?;
        let tce = tce_filter(&p.lts, &mutants);
        let meta = build_meta_mutant(&p.lts, &mutants)?;
        let killed = compute_kill_matrix(&meta.lts, &tce.surviving, &seed_cases(&seeds), manifest.config.step_budget)?.killed_mutants();
        let targets = tce.surviving.iter().copied().filter(|m| !killed.contains(m)).collect();
        let ex = explore(&meta, &targets, &seeds, &manifest.config, &manifest.solver_handle(&p.lts))?;
        *out = into_c_string(io::format_tests(&ex.tests));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mutsym_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
