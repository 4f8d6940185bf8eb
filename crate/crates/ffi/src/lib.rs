//! C ABI for the poolevo objectives and the embedded pool server.
//!
//! Every fallible call returns a [`PoolevoStatus`]; on failure the message is
//! available from [`poolevo_last_error_message`] on the same thread. Handles
//! are opaque and must be released with their `_free`/`_stop` function.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::c_char;
use poolevo::genome::BitChromosome;
use poolevo::objective::{f15, make_f15_spec, rastrigin, trap_fitness, F15Spec, TrapParams};
use poolevo::server::{spawn_server, ServerConfig, ServerHandle};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolevoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Internal = 4,
    Panic = 5,
}

/// A generated F15 instance.
pub struct PoolevoF15Spec(F15Spec);

/// A pool server running on a background thread.
pub struct PoolevoServer(ServerHandle);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &poolevo::Error) -> PoolevoStatus {
    match err {
        poolevo::Error::Io(_) => PoolevoStatus::Io,
        poolevo::Error::Http(_) => PoolevoStatus::Internal,
        _ => PoolevoStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PoolevoStatus, String)>) -> PoolevoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PoolevoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside poolevo");
            PoolevoStatus::Panic
        }
    }
}

fn lib_err(e: poolevo::Error) -> (PoolevoStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PoolevoStatus, String) {
    (PoolevoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (PoolevoStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, (PoolevoStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (PoolevoStatus::Internal, "string contains NUL".into()))
}

/// Copy of the last error message on this thread, or NULL if there is none.
/// Free it with `poolevo_string_free`.
#[no_mangle]
pub extern "C" fn poolevo_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn poolevo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Trap fitness of `len` bits (one byte per bit, 0 or 1) split into blocks
/// of `l`.
///
/// # Safety
/// `bits` must point to `len` readable bytes and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn poolevo_trap_fitness(
    bits: *const u8,
    len: usize,
    l: usize,
    a: f64,
    b: f64,
    z: usize,
    out: *mut f64,
) -> PoolevoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bits = slice(bits, len, "bits")?;
        if l == 0 || len % l != 0 {
            return Err((PoolevoStatus::InvalidArgument, format!("{len} bits do not split into blocks of {l}")));
        }
        let chrom = BitChromosome::new(bits.to_vec()).map_err(lib_err)?;
        let params = TrapParams { l, a, b, z, num_blocks: len / l };
        *out = trap_fitness(&chrom, &params).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `x` must point to `len` readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn poolevo_rastrigin(x: *const f64, len: usize, out: *mut f64) -> PoolevoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = rastrigin(slice(x, len, "x")?).map_err(lib_err)?;
        Ok(())
    })
}

/// Generates an F15 instance. On success `*out` owns a new handle.
///
/// # Safety
/// `out` must point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn poolevo_f15_spec_new(
    dimension: usize,
    group_size: usize,
    seed: u64,
    lower: f64,
    upper: f64,
    out: *mut *mut PoolevoF15Spec,
) -> PoolevoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = make_f15_spec(dimension, group_size, seed, (lower, upper)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PoolevoF15Spec(spec)));
        Ok(())
    })
}

/// # Safety
/// `spec` must be NULL or a handle from `poolevo_f15_spec_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn poolevo_f15_spec_free(spec: *mut PoolevoF15Spec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// # Safety
/// `spec` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn poolevo_f15_spec_dimension(spec: *const PoolevoF15Spec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.dimension())
}

/// # Safety
/// `spec` must be a live handle, `x` must point to `len` readable doubles and
/// `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn poolevo_f15_eval(
    spec: *const PoolevoF15Spec,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> PoolevoStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = f15(slice(x, len, "x")?, &spec.0).map_err(lib_err)?;
        Ok(())
    })
}

/// The instance as JSON (`D`, `m`, `seed`, `bounds`, `o`, `M`, 1-based `P`).
/// Free the string with `poolevo_string_free`.
///
/// # Safety
/// `spec` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn poolevo_f15_spec_to_json(spec: *const PoolevoF15Spec, out: *mut *mut c_char) -> PoolevoStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&spec.0).map_err(|e| (PoolevoStatus::Internal, e.to_string()))?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// Starts a pool server. `config_json` is a JSON server configuration or
/// NULL for the defaults on a free local port.
///
/// # Safety
/// `config_json` must be NULL or a NUL-terminated string; `out` must be a
/// writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn poolevo_server_start(config_json: *const c_char, out: *mut *mut PoolevoServer) -> PoolevoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = if config_json.is_null() {
            ServerConfig { bind: "127.0.0.1:0".into(), ..ServerConfig::default() }
        } else {
            let text = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|_| (PoolevoStatus::InvalidArgument, "config is not UTF-8".to_string()))?;
            serde_json::from_str(text).map_err(|e| (PoolevoStatus::InvalidArgument, e.to_string()))?
        };
        let handle = spawn_server(&config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PoolevoServer(handle)));
        Ok(())
    })
}

/// # Safety
/// `server` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn poolevo_server_port(server: *const PoolevoServer) -> u16 {
    server.as_ref().map_or(0, |s| s.0.addr().port())
}

/// Current `/v1/stats` document. Free it with `poolevo_string_free`.
///
/// # Safety
/// `server` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn poolevo_server_stats_json(server: *const PoolevoServer, out: *mut *mut c_char) -> PoolevoStatus {
    guard(|| {
        let server = server.as_ref().ok_or_else(|| null("server"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&server.0.pool().stats()).map_err(|e| (PoolevoStatus::Internal, e.to_string()))?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// Stops the server and frees the handle.
///
/// # Safety
/// `server` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn poolevo_server_stop(server: *mut PoolevoServer) {
    if !server.is_null() {
        Box::from_raw(server).0.shutdown();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let p = poolevo_last_error_message();
        assert!(!p.is_null());
        let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
        unsafe { poolevo_string_free(p) };
        s
    }

    #[test]
    fn trap_through_the_abi() {
        let bits = vec![1u8; 160];
        let mut out = 0.0;
        let st = unsafe { poolevo_trap_fitness(bits.as_ptr(), bits.len(), 4, 1.0, 2.0, 3, &mut out) };
        assert_eq!(st, PoolevoStatus::Ok);
        assert_eq!(out, 80.0);
        let st = unsafe { poolevo_trap_fitness(bits.as_ptr(), 7, 4, 1.0, 2.0, 3, &mut out) };
        assert_eq!(st, PoolevoStatus::InvalidArgument);
        assert!(last_error().contains("blocks of 4"));
    }

    #[test]
    fn null_pointers_are_reported() {
        let st = unsafe { poolevo_rastrigin(ptr::null(), 3, ptr::null_mut()) };
        assert_eq!(st, PoolevoStatus::NullPointer);
        let mut out = 1.0;
        let st = unsafe { poolevo_rastrigin(ptr::null(), 3, &mut out) };
        assert_eq!(st, PoolevoStatus::NullPointer);
        assert!(last_error().contains("x is null"));
    }

    #[test]
    fn f15_handle_lifecycle() {
        let mut spec = ptr::null_mut();
        let st = unsafe { poolevo_f15_spec_new(20, 5, 42, -5.0, 5.0, &mut spec) };
        assert_eq!(st, PoolevoStatus::Ok);
        assert_eq!(unsafe { poolevo_f15_spec_dimension(spec) }, 20);

        let mut json = ptr::null_mut();
        assert_eq!(unsafe { poolevo_f15_spec_to_json(spec, &mut json) }, PoolevoStatus::Ok);
        let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
        unsafe { poolevo_string_free(json) };
        let parsed: F15Spec = serde_json::from_str(&text).unwrap();

        let mut at_optimum = 1.0;
        let o = parsed.shift().to_vec();
        assert_eq!(unsafe { poolevo_f15_eval(spec, o.as_ptr(), o.len(), &mut at_optimum) }, PoolevoStatus::Ok);
        assert!(at_optimum.abs() < 1e-9);

        let mut v = 0.0;
        assert_eq!(unsafe { poolevo_f15_eval(spec, o.as_ptr(), 3, &mut v) }, PoolevoStatus::InvalidArgument);
        unsafe { poolevo_f15_spec_free(spec) };
        unsafe { poolevo_f15_spec_free(ptr::null_mut()) };
    }

    #[test]
    fn bad_spec_parameters() {
        let mut spec = ptr::null_mut();
        let st = unsafe { poolevo_f15_spec_new(10, 3, 1, -5.0, 5.0, &mut spec) };
        assert_eq!(st, PoolevoStatus::InvalidArgument);
        assert!(spec.is_null());
    }

    #[test]
    fn server_round_trip() {
        let cfg = CString::new(r#"{"bind":"127.0.0.1:0","problem":{"kind":"trap","l":4,"a":1.0,"b":2.0,"z":3,"numBlocks":2}}"#)
            .unwrap();
        let mut server = ptr::null_mut();
        assert_eq!(unsafe { poolevo_server_start(cfg.as_ptr(), &mut server) }, PoolevoStatus::Ok);
        assert_ne!(unsafe { poolevo_server_port(server) }, 0);
        let mut stats = ptr::null_mut();
        assert_eq!(unsafe { poolevo_server_stats_json(server, &mut stats) }, PoolevoStatus::Ok);
        let text = unsafe { CStr::from_ptr(stats) }.to_str().unwrap().to_owned();
        unsafe { poolevo_string_free(stats) };
        assert!(text.contains("\"experimentId\":1"));
        unsafe { poolevo_server_stop(server) };
    }

    #[test]
    fn malformed_server_config() {
        let cfg = CString::new("{not json").unwrap();
        let mut server = ptr::null_mut();
        assert_eq!(unsafe { poolevo_server_start(cfg.as_ptr(), &mut server) }, PoolevoStatus::InvalidArgument);
        assert!(server.is_null());
    }
}
