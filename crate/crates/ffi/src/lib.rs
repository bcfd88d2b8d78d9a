//! C interface to `chainlock`.
//!
//! Scenes are opaque handles owned by the caller and released with
//! `chainlock_scene_free`. Functions return a `ChainlockStatus`; on any
//! status other than `Ok` a message is available from
//! `chainlock_last_error` until the next call on the same thread.
//! Strings returned by the library are freed with `chainlock_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chainlock::construction::{build_full_scene, build_tangle, build_ten_chain, validate_construction, ConstructionError, FrameSpec, TangleSpec};
use chainlock::planner::{attempt_unlock, PlannerConfig};
use chainlock::scene::Scene;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainlockStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Parse = 4,
    PredicateFailed = 5,
    Planner = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainlockKind {
    Tangle = 0,
    TenChain = 1,
    Full = 2,
}

/// Opaque scene handle.
pub struct ChainlockScene {
    scene: Scene,
}

/// Result of one planner run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainlockUnlockResult {
    pub separated: bool,
    pub iterations: u64,
    pub best_separation: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: ChainlockStatus, msg: impl Into<String>) -> ChainlockStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> ChainlockStatus) -> ChainlockStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ChainlockStatus::Panic, "internal panic"),
    }
}

fn construction_status(e: &ConstructionError) -> ChainlockStatus {
    match e {
        ConstructionError::InfeasibleFrame(_) | ConstructionError::LegsTooShort { .. } | ConstructionError::ThreadingFailed(_) => {
            ChainlockStatus::Infeasible
        }
        _ => ChainlockStatus::InvalidArgument,
    }
}

unsafe fn store(out: *mut *mut ChainlockScene, scene: Scene) {
    *out = Box::into_raw(Box::new(ChainlockScene { scene }));
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn chainlock_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a scene. `side` and `leg` are ignored for kinds that do not use them.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn chainlock_generate(
    kind: ChainlockKind,
    epsilon: f64,
    side: f64,
    leg: f64,
    out: *mut *mut ChainlockScene,
) -> ChainlockStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ChainlockStatus::NullPointer, "out is null");
        }
        if !(epsilon > 0.0 && side > 0.0 && leg > 0.0) {
            return fail(ChainlockStatus::InvalidArgument, "epsilon, side and leg must be positive");
        }
        let built = match kind {
            ChainlockKind::Tangle => Ok(build_tangle(&TangleSpec::new(epsilon))),
            ChainlockKind::TenChain => build_ten_chain(&FrameSpec::equilateral(side, epsilon)),
            ChainlockKind::Full => build_full_scene(&FrameSpec::equilateral(side, epsilon), leg),
        };
        match built {
            Ok(s) => {
                store(out, s);
                ChainlockStatus::Ok
            }
            Err(e) => fail(construction_status(&e), e.to_string()),
        }
    })
}

/// Parse a scene from NUL-terminated JSON.
///
/// # Safety
/// `json` must be a valid C string and `out` valid storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn chainlock_scene_from_json(json: *const c_char, out: *mut *mut ChainlockScene) -> ChainlockStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return fail(ChainlockStatus::NullPointer, "null argument");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(ChainlockStatus::Parse, e.to_string()),
        };
        match serde_json::from_str::<Scene>(text) {
            Ok(s) => {
                store(out, s);
                ChainlockStatus::Ok
            }
            Err(e) => fail(ChainlockStatus::Parse, e.to_string()),
        }
    })
}

/// Serialize a scene. The string is freed with `chainlock_string_free`.
///
/// # Safety
/// `scene` must be a live handle and `out` valid storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn chainlock_scene_to_json(scene: *const ChainlockScene, out: *mut *mut c_char) -> ChainlockStatus {
    guarded(|| {
        if scene.is_null() || out.is_null() {
            return fail(ChainlockStatus::NullPointer, "null argument");
        }
        let text = serde_json::to_string(&(*scene).scene).expect("scene serializes");
        *out = CString::new(text).expect("json has no NUL").into_raw();
        ChainlockStatus::Ok
    })
}

/// Number of joints over all chains.
///
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chainlock_scene_joint_count(scene: *const ChainlockScene) -> usize {
    if scene.is_null() {
        return 0;
    }
    (*scene).scene.joint_count()
}

/// Run every construction predicate. Returns `PredicateFailed` with the
/// failing names in the last error when any fails.
///
/// # Safety
/// `scene` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn chainlock_validate(scene: *const ChainlockScene) -> ChainlockStatus {
    guarded(|| {
        if scene.is_null() {
            return fail(ChainlockStatus::NullPointer, "scene is null");
        }
        let report = validate_construction(&(*scene).scene);
        if report.all_passed() {
            ChainlockStatus::Ok
        } else {
            fail(ChainlockStatus::PredicateFailed, report.failures().join(", "))
        }
    })
}

/// One planner run with the default goal bias and separation radius.
///
/// # Safety
/// `scene` must be a live handle and `out` valid storage for one result.
#[no_mangle]
pub unsafe extern "C" fn chainlock_unlock(
    scene: *const ChainlockScene,
    budget: u64,
    step: f64,
    seed: u64,
    out: *mut ChainlockUnlockResult,
) -> ChainlockStatus {
    guarded(|| {
        if scene.is_null() || out.is_null() {
            return fail(ChainlockStatus::NullPointer, "null argument");
        }
        let cfg = PlannerConfig::new(budget as usize, step, seed);
        match attempt_unlock(&(*scene).scene, &cfg) {
            Ok(r) => {
                *out = ChainlockUnlockResult { separated: r.separated, iterations: r.iterations as u64, best_separation: r.best_separation };
                ChainlockStatus::Ok
            }
            Err(e) => fail(ChainlockStatus::Planner, e.to_string()),
        }
    })
}

/// Release a scene handle. Null is ignored.
///
/// # Safety
/// `scene` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chainlock_scene_free(scene: *mut ChainlockScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Release a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chainlock_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
