//! C ABI over the proof-of-quantumness library: opaque verifier and prover
//! handles, flat tally and score structs, and integer status codes. The
//! header `include/poq.h` is regenerated by the build script. Handles are
//! not thread-safe; keep each one on a single thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use poq::cheater::{Cheater, CheaterKind};
use poq::circuits::BuildMode;
use poq::protocol::{
    run_protocol, study_verifier, HonestProver, Mode, Prover, ProtocolKind, RunConfig, RunTally,
    Verifier,
};
use poq::stats::{evaluate, Counts};

/// Result code returned by every fallible call. Anything other than `OK`
/// leaves a message readable through `poq_last_error_message`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Panic = 4,
}

/// Challenge ordering for a run: commit first, or challenge first with the
/// commitment measured last.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoqMode {
    Interactive = 0,
    Delayed = 1,
}

/// Shot totals for one branch of a run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PoqBranchTally {
    pub raw: u64,
    pub discarded_commitment: u64,
    pub discarded_zero_response: u64,
    pub counted: u64,
    pub accepted: u64,
}

/// Totals for both branches of a run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PoqTally {
    pub standard: PoqBranchTally,
    pub interference: PoqBranchTally,
}

/// Acceptance rates and the scores derived from them. `sigma` is negative
/// infinity when the quantumness score does not exceed the classical bound.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PoqScore {
    pub p_a: f64,
    pub p_b: f64,
    pub quantumness: f64,
    pub standard_error: f64,
    pub ln_p_value: f64,
    pub sigma: f64,
}

/// Opaque verifier handle owning the instance, trapdoor, and claw tables.
pub struct PoqVerifier {
    inner: Verifier,
}

/// Opaque prover handle. Honest provers own a prepared statevector.
pub struct PoqProver {
    inner: Box<dyn Prover>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: PoqStatus, msg: String) -> PoqStatus {
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
    status
}

fn guarded(body: impl FnOnce() -> PoqStatus) -> PoqStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(PoqStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn parse_c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, PoqStatus> {
    if ptr.is_null() {
        return Err(fail(PoqStatus::NullPointer, format!("{what} is null")));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| fail(PoqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn tally_out(t: &RunTally) -> PoqTally {
    let branch = |b: &poq::protocol::BranchTally| PoqBranchTally {
        raw: b.raw,
        discarded_commitment: b.discarded_commitment,
        discarded_zero_response: b.discarded_zero_response,
        counted: b.counted,
        accepted: b.accepted,
    };
    PoqTally { standard: branch(&t.standard), interference: branch(&t.interference) }
}

/// Builds a verifier for a named study instance and writes the handle to
/// `out`. `protocol` is `"factoring"` (instances 8, 15, 16, 21) or `"lwe"`
/// (instances 0 through 3). Release the handle with `poq_verifier_free`.
///
/// # Safety
/// `protocol` must point to a NUL-terminated string and `out` must point to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn poq_verifier_new(
    protocol: *const c_char,
    instance: u64,
    out: *mut *mut PoqVerifier,
) -> PoqStatus {
    if out.is_null() {
        return fail(PoqStatus::NullPointer, "out is null".into());
    }
    let name = match unsafe { parse_c_str(protocol, "protocol") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let kind = match name {
        "factoring" => ProtocolKind::Factoring,
        "lwe" => ProtocolKind::Lwe,
        other => {
            return fail(
                PoqStatus::InvalidArgument,
                format!("unknown protocol {other:?}; expected \"factoring\" or \"lwe\""),
            )
        }
    };
    let valid = match kind {
        ProtocolKind::Factoring => matches!(instance, 8 | 15 | 16 | 21),
        ProtocolKind::Lwe => instance <= 3,
    };
    if !valid {
        return fail(
            PoqStatus::InvalidArgument,
            format!("no {name} study instance {instance}"),
        );
    }
    guarded(|| {
        let verifier = study_verifier(kind, instance);
        unsafe { *out = Box::into_raw(Box::new(PoqVerifier { inner: verifier })) };
        PoqStatus::Ok
    })
}

/// Releases a verifier handle. Passing null is a no-op.
///
/// # Safety
/// `verifier` must be null or a pointer returned by `poq_verifier_new` that
/// has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn poq_verifier_free(verifier: *mut PoqVerifier) {
    if !verifier.is_null() {
        drop(unsafe { Box::from_raw(verifier) });
    }
}

/// Builds a prover against the verifier's public instance and writes the
/// handle to `out`. `kind` is `"honest"` for the simulated quantum prover,
/// or `"known_preimage"` / `"random"` for the classical baselines. Release
/// the handle with `poq_prover_free`.
///
/// # Safety
/// `verifier` must be a live handle from `poq_verifier_new`, `kind` must
/// point to a NUL-terminated string, and `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn poq_prover_new(
    verifier: *const PoqVerifier,
    kind: *const c_char,
    seed: u64,
    out: *mut *mut PoqProver,
) -> PoqStatus {
    if verifier.is_null() || out.is_null() {
        return fail(PoqStatus::NullPointer, "verifier or out is null".into());
    }
    let name = match unsafe { parse_c_str(kind, "kind") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let public = unsafe { &(*verifier).inner }.public_instance();
    guarded(|| {
        let inner: Box<dyn Prover> = match name.replace('-', "_").as_str() {
            "honest" => Box::new(HonestProver::for_instance(&public, BuildMode::Compiled, seed)),
            "known_preimage" => Box::new(Cheater::new(&public, CheaterKind::KnownPreimage, seed)),
            "random" => Box::new(Cheater::new(&public, CheaterKind::Random, seed)),
            other => {
                return fail(
                    PoqStatus::InvalidArgument,
                    format!(
                        "unknown prover kind {other:?}; expected \"honest\", \
                         \"known_preimage\", or \"random\""
                    ),
                )
            }
        };
        unsafe { *out = Box::into_raw(Box::new(PoqProver { inner })) };
        PoqStatus::Ok
    })
}

/// Releases a prover handle. Passing null is a no-op.
///
/// # Safety
/// `prover` must be null or a pointer returned by `poq_prover_new` that has
/// not already been freed.
#[no_mangle]
pub unsafe extern "C" fn poq_prover_free(prover: *mut PoqProver) {
    if !prover.is_null() {
        drop(unsafe { Box::from_raw(prover) });
    }
}

/// Runs the full protocol, `shots_standard` standard-branch shots followed
/// by `shots_interference` interference-branch shots, and writes the branch
/// totals to `tally`. All per-shot randomness derives from `seed`, so equal
/// arguments reproduce equal tallies. The call blocks until every shot has
/// been played.
///
/// # Safety
/// `verifier` and `prover` must be live handles from this library and
/// `tally` must point to writable storage for one `PoqTally`.
#[no_mangle]
pub unsafe extern "C" fn poq_run(
    verifier: *const PoqVerifier,
    prover: *mut PoqProver,
    shots_standard: u64,
    shots_interference: u64,
    mode: PoqMode,
    seed: u64,
    tally: *mut PoqTally,
) -> PoqStatus {
    if verifier.is_null() || prover.is_null() || tally.is_null() {
        return fail(PoqStatus::NullPointer, "verifier, prover, or tally is null".into());
    }
    let cfg = RunConfig {
        shots_standard,
        shots_interference,
        mode: match mode {
            PoqMode::Interactive => Mode::Interactive,
            PoqMode::Delayed => Mode::Delayed,
        },
        seed,
    };
    guarded(|| {
        let v = unsafe { &(*verifier).inner };
        let p = unsafe { &mut (*prover).inner };
        let totals = run_protocol(v, p.as_mut(), &cfg, |_| {});
        unsafe { *tally = tally_out(&totals) };
        PoqStatus::Ok
    })
}

/// Scores a tally against the verifier's protocol: acceptance rates, the
/// quantumness score with its standard error, and the log tail probability
/// with its one-sided sigma equivalent. Both branches must have at least
/// one counted shot.
///
/// # Safety
/// `verifier` must be a live handle from `poq_verifier_new`, and `tally`
/// and `score` must point to readable and writable storage respectively.
#[no_mangle]
pub unsafe extern "C" fn poq_tally_score(
    verifier: *const PoqVerifier,
    tally: *const PoqTally,
    score: *mut PoqScore,
) -> PoqStatus {
    if verifier.is_null() || tally.is_null() || score.is_null() {
        return fail(PoqStatus::NullPointer, "verifier, tally, or score is null".into());
    }
    let t = unsafe { *tally };
    if t.standard.accepted > t.standard.counted || t.interference.accepted > t.interference.counted
    {
        return fail(PoqStatus::InvalidArgument, "accepted exceeds counted".into());
    }
    if t.standard.counted == 0 || t.interference.counted == 0 {
        return fail(PoqStatus::InvalidArgument, "both branches need counted shots".into());
    }
    let kind = unsafe { &(*verifier).inner }.kind();
    guarded(|| {
        let counts = Counts {
            accepted_a: t.standard.accepted,
            counted_a: t.standard.counted,
            accepted_b: t.interference.accepted,
            counted_b: t.interference.counted,
        };
        let sig = evaluate(kind, &counts);
        unsafe {
            *score = PoqScore {
                p_a: sig.p_a,
                p_b: sig.p_b,
                quantumness: sig.q,
                standard_error: sig.se,
                ln_p_value: sig.ln_p,
                sigma: sig.sigma,
            };
        }
        PoqStatus::Ok
    })
}

/// Copies the message from the most recent failure on this thread into
/// `buf` (truncated, always NUL-terminated when `len > 0`) and returns the
/// full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn poq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;
    use std::ptr;

    fn last_error() -> String {
        let needed = unsafe { poq_last_error_message(ptr::null_mut(), 0) };
        let mut buf = vec![0i8; needed + 1];
        unsafe { poq_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
        let bytes: Vec<u8> = buf[..needed].iter().map(|&b| b as u8).collect();
        String::from_utf8(bytes).unwrap()
    }

    fn make(protocol: &str, instance: u64) -> *mut PoqVerifier {
        let name = CString::new(protocol).unwrap();
        let mut v = ptr::null_mut();
        let status = unsafe { poq_verifier_new(name.as_ptr(), instance, &mut v) };
        assert_eq!(status, PoqStatus::Ok, "{}", last_error());
        v
    }

    fn make_prover(v: *const PoqVerifier, kind: &str, seed: u64) -> *mut PoqProver {
        let name = CString::new(kind).unwrap();
        let mut p = ptr::null_mut();
        let status = unsafe { poq_prover_new(v, name.as_ptr(), seed, &mut p) };
        assert_eq!(status, PoqStatus::Ok, "{}", last_error());
        p
    }

    #[test]
    fn honest_factoring_run_round_trips_through_the_abi() {
        let v = make("factoring", 15);
        let p = make_prover(v, "honest", 5);
        let mut tally = PoqTally::default();
        let status = unsafe {
            poq_run(v, p, 40, 40, PoqMode::Interactive, 5, &mut tally)
        };
        assert_eq!(status, PoqStatus::Ok, "{}", last_error());
        assert_eq!(tally.standard.raw, 40);
        assert_eq!(tally.interference.raw, 40);
        assert!(tally.standard.counted <= tally.standard.raw);
        assert!(tally.standard.accepted <= tally.standard.counted);
        assert!(tally.standard.counted > 0 && tally.interference.counted > 0);

        let mut score = PoqScore::default();
        let status = unsafe { poq_tally_score(v, &tally, &mut score) };
        assert_eq!(status, PoqStatus::Ok, "{}", last_error());
        assert!(score.p_a.is_finite() && score.p_b.is_finite());
        assert!(score.standard_error > 0.0);
        assert!(score.ln_p_value <= 0.0);

        unsafe {
            poq_prover_free(p);
            poq_verifier_free(v);
        }
    }

    #[test]
    fn scores_match_the_library_exactly() {
        let v = make("lwe", 2);
        let tally = PoqTally {
            standard: PoqBranchTally {
                raw: 4000,
                counted: 4000,
                accepted: 2920,
                ..Default::default()
            },
            interference: PoqBranchTally {
                raw: 4000,
                discarded_zero_response: 265,
                counted: 3735,
                accepted: 3134,
                ..Default::default()
            },
        };
        let mut score = PoqScore::default();
        let status = unsafe { poq_tally_score(v, &tally, &mut score) };
        assert_eq!(status, PoqStatus::Ok, "{}", last_error());

        let counts = Counts { accepted_a: 2920, counted_a: 4000, accepted_b: 3134, counted_b: 3735 };
        let sig = evaluate(ProtocolKind::Lwe, &counts);
        assert_eq!(score.p_a, sig.p_a);
        assert_eq!(score.p_b, sig.p_b);
        assert_eq!(score.quantumness, sig.q);
        assert_eq!(score.standard_error, sig.se);
        assert_eq!(score.ln_p_value, sig.ln_p);
        assert_eq!(score.sigma, sig.sigma);

        unsafe { poq_verifier_free(v) };
    }

    #[test]
    fn known_preimage_cheater_stays_classical_over_the_abi() {
        let v = make("lwe", 0);
        let p = make_prover(v, "known_preimage", 11);
        let mut tally = PoqTally::default();
        let status = unsafe { poq_run(v, p, 400, 400, PoqMode::Delayed, 11, &mut tally) };
        assert_eq!(status, PoqStatus::Ok, "{}", last_error());
        assert_eq!(tally.standard.accepted, 400);

        let mut score = PoqScore::default();
        let status = unsafe { poq_tally_score(v, &tally, &mut score) };
        assert_eq!(status, PoqStatus::Ok, "{}", last_error());
        assert!(
            score.quantumness <= 4.0 * score.standard_error,
            "classical prover scored q = {} (se {})",
            score.quantumness,
            score.standard_error
        );

        unsafe {
            poq_prover_free(p);
            poq_verifier_free(v);
        }
    }

    #[test]
    fn bad_arguments_are_rejected_with_messages() {
        let mut v = ptr::null_mut();
        let name = CString::new("rsa").unwrap();
        let status = unsafe { poq_verifier_new(name.as_ptr(), 15, &mut v) };
        assert_eq!(status, PoqStatus::InvalidArgument);
        assert!(last_error().contains("protocol"));

        let name = CString::new("factoring").unwrap();
        let status = unsafe { poq_verifier_new(name.as_ptr(), 9, &mut v) };
        assert_eq!(status, PoqStatus::InvalidArgument);
        assert!(last_error().contains("instance 9"));

        let status = unsafe { poq_verifier_new(name.as_ptr(), 15, ptr::null_mut()) };
        assert_eq!(status, PoqStatus::NullPointer);

        let status = unsafe { poq_verifier_new(ptr::null(), 15, &mut v) };
        assert_eq!(status, PoqStatus::NullPointer);

        let bad = [0xffu8, 0];
        let status =
            unsafe { poq_verifier_new(bad.as_ptr().cast::<c_char>(), 15, &mut v) };
        assert_eq!(status, PoqStatus::InvalidUtf8);

        let v = make("lwe", 1);
        let mut p = ptr::null_mut();
        let kind = CString::new("quantum").unwrap();
        let status = unsafe { poq_prover_new(v, kind.as_ptr(), 0, &mut p) };
        assert_eq!(status, PoqStatus::InvalidArgument);
        assert!(last_error().contains("prover kind"));

        let tally = PoqTally::default();
        let mut score = PoqScore::default();
        let status = unsafe { poq_tally_score(v, &tally, &mut score) };
        assert_eq!(status, PoqStatus::InvalidArgument);

        unsafe {
            poq_prover_free(ptr::null_mut());
            poq_verifier_free(ptr::null_mut());
            poq_verifier_free(v);
        }
    }

    #[test]
    fn truncated_error_messages_stay_nul_terminated() {
        let mut v = ptr::null_mut();
        let name = CString::new("rsa").unwrap();
        unsafe { poq_verifier_new(name.as_ptr(), 15, &mut v) };

        let needed = unsafe { poq_last_error_message(ptr::null_mut(), 0) };
        assert!(needed > 8);
        let mut buf = [0x7fi8; 8];
        unsafe { poq_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
        assert_eq!(buf[7], 0);
        assert!(buf[..7].iter().all(|&b| b != 0));
    }

    #[test]
    fn generated_header_declares_the_surface() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/poq.h");
        let header = std::fs::read_to_string(&path).expect("header missing; build regenerates it");
        for needle in [
            "typedef struct PoqVerifier PoqVerifier;",
            "typedef struct PoqProver PoqProver;",
            "poq_verifier_new",
            "poq_prover_new",
            "poq_run",
            "poq_tally_score",
            "poq_last_error_message",
            "POQ_STATUS_OK",
        ] {
            assert!(header.contains(needle), "header lacks {needle:?}");
        }

        let gcc = std::process::Command::new("gcc")
            .args(["-fsyntax-only", "-x", "c", "-std=c99"])
            .arg(&path)
            .status();
        match gcc {
            Ok(status) => assert!(status.success(), "header does not parse as C99"),
            Err(_) => eprintln!("gcc not found; skipped header syntax check"),
        }
    }
}
