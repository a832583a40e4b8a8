//! C interface to the workbench: formulas, stratification and natural models
//! behind opaque handles.
//!
//! Every fallible call returns an [`NfwStatus`]. On failure the message is
//! kept per thread and can be read with [`nfw_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nf_workbench::formula::{parse, Formula, Mode, Sentence};
use nf_workbench::natmodel::{NaturalModel, DEFAULT_BUDGET};
use nf_workbench::stratify::infer;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NotASentence = 4,
    ModelError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfwMode {
    Tst = 0,
    Ttt = 1,
}

impl From<NfwMode> for Mode {
    fn from(m: NfwMode) -> Mode {
        match m {
            NfwMode::Tst => Mode::Tst,
            NfwMode::Ttt => Mode::Ttt,
        }
    }
}

/// Opaque parsed formula.
pub struct NfwFormula(Formula);

/// Opaque finite natural model.
pub struct NfwModel(NaturalModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: NfwStatus, msg: impl Into<String>) -> NfwStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> NfwStatus) -> NfwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == NfwStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(NfwStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, NfwStatus> {
    if p.is_null() {
        return Err(fail(NfwStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(NfwStatus::InvalidUtf8, e.to_string()))
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nfw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses `text`. On success `*out` owns a formula to release with
/// `nfw_formula_free`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nfw_parse(text: *const c_char, out: *mut *mut NfwFormula) -> NfwStatus {
    guarded(|| {
        if out.is_null() {
            return fail(NfwStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse(text) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(NfwFormula(f)));
                NfwStatus::Ok
            }
            Err(e) => fail(NfwStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `f` must come from `nfw_parse` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nfw_formula_free(f: *mut NfwFormula) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Prints the formula; release the result with `nfw_string_free`.
/// Returns null when `f` is null.
///
/// # Safety
/// `f` must be null or a live formula handle.
#[no_mangle]
pub unsafe extern "C" fn nfw_formula_to_string(f: *const NfwFormula) -> *mut c_char {
    match f.as_ref() {
        Some(f) => into_c(f.0.to_string()),
        None => {
            set_error("null formula");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nfw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Infers a stratification. `*out` receives a JSON object, either
/// `{"stratified":true,"assignment":{..}}` or
/// `{"stratified":false,"cycle":[..],"offset_sum":n}`.
///
/// # Safety
/// `f` must be a live formula handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nfw_stratify_json(f: *const NfwFormula, mode: NfwMode, out: *mut *mut c_char) -> NfwStatus {
    guarded(|| {
        let (Some(f), false) = (f.as_ref(), out.is_null()) else {
            return fail(NfwStatus::NullPointer, "null argument");
        };
        let v = match infer(&f.0, mode.into()) {
            Ok(s) => serde_json::json!({ "stratified": true, "assignment": s.assignment }),
            Err(n) => {
                let mut v = serde_json::to_value(&n).unwrap_or_default();
                v["stratified"] = serde_json::Value::Bool(false);
                v
            }
        };
        *out = into_c(v.to_string());
        NfwStatus::Ok
    })
}

/// Builds the natural model over a base of `base` atoms with `depth` levels.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nfw_model_new(base: u64, depth: usize, out: *mut *mut NfwModel) -> NfwStatus {
    guarded(|| {
        if out.is_null() {
            return fail(NfwStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        match NaturalModel::build_default(base, depth, DEFAULT_BUDGET) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(NfwModel(m)));
                NfwStatus::Ok
            }
            Err(e) => fail(NfwStatus::ModelError, e.to_string()),
        }
    })
}

/// Evaluates a typed sentence in the model and writes its truth value.
///
/// # Safety
/// `m` and `f` must be live handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nfw_model_eval(m: *const NfwModel, f: *const NfwFormula, out: *mut bool) -> NfwStatus {
    guarded(|| {
        let (Some(m), Some(f), false) = (m.as_ref(), f.as_ref(), out.is_null()) else {
            return fail(NfwStatus::NullPointer, "null argument");
        };
        let s = match Sentence::new(f.0.clone(), Mode::Tst) {
            Ok(s) => s,
            Err(e) => return fail(NfwStatus::NotASentence, e.to_string()),
        };
        match m.0.eval(&s) {
            Ok(v) => {
                *out = v;
                NfwStatus::Ok
            }
            Err(e) => fail(NfwStatus::ModelError, e.to_string()),
        }
    })
}

/// # Safety
/// `m` must come from `nfw_model_new` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nfw_model_free(m: *mut NfwModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(nfw_last_error_message()).to_string_lossy().into_owned() }
    }

    fn parsed(text: &str) -> *mut NfwFormula {
        let c = CString::new(text).unwrap();
        let mut f = ptr::null_mut();
        assert_eq!(unsafe { nfw_parse(c.as_ptr(), &mut f) }, NfwStatus::Ok);
        f
    }

    #[test]
    fn parse_print_free() {
        let f = parsed("forall x^0. exists y^1. x in y");
        unsafe {
            let s = nfw_formula_to_string(f);
            let text = CStr::from_ptr(s).to_str().unwrap().to_string();
            nfw_string_free(s);
            let again = parsed(&text);
            assert_eq!((*again).0, (*f).0);
            nfw_formula_free(again);
            nfw_formula_free(f);
        }
    }

    #[test]
    fn parse_errors_set_message() {
        let c = CString::new("x in").unwrap();
        let mut f = ptr::null_mut();
        assert_eq!(unsafe { nfw_parse(c.as_ptr(), &mut f) }, NfwStatus::ParseError);
        assert!(f.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(unsafe { nfw_parse(ptr::null(), &mut f) }, NfwStatus::NullPointer);
    }

    #[test]
    fn stratify_json_both_outcomes() {
        for (text, want) in [("x in y & y in z", true), ("x in x", false)] {
            let f = parsed(text);
            let mut out = ptr::null_mut();
            unsafe {
                assert_eq!(nfw_stratify_json(f, NfwMode::Tst, &mut out), NfwStatus::Ok);
                let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
                assert_eq!(v["stratified"], want);
                nfw_string_free(out);
                nfw_formula_free(f);
            }
        }
    }

    #[test]
    fn model_eval() {
        let mut m = ptr::null_mut();
        unsafe {
            assert_eq!(nfw_model_new(2, 2, &mut m), NfwStatus::Ok);
            let two = parsed("exists x^0 exists y^0. ~(x=y)");
            let three = parsed("exists x^0 exists y^0 exists z^0. ~(x=y) & ~(x=z) & ~(y=z)");
            let open = parsed("x^0 = x^0");
            let mut v = false;
            assert_eq!(nfw_model_eval(m, two, &mut v), NfwStatus::Ok);
            assert!(v);
            assert_eq!(nfw_model_eval(m, three, &mut v), NfwStatus::Ok);
            assert!(!v);
            assert_eq!(nfw_model_eval(m, open, &mut v), NfwStatus::NotASentence);
            assert_eq!(nfw_model_eval(ptr::null(), two, &mut v), NfwStatus::NullPointer);
            for f in [two, three, open] {
                nfw_formula_free(f);
            }
            nfw_model_free(m);
        }
    }
}
