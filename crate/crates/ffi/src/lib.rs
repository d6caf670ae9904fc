//! C ABI over `nashq`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! style functions and released with the matching `*_free`. Every fallible
//! call returns a [`NashqStatus`]; on failure the message is kept per thread
//! and can be fetched with [`nashq_last_error_message`]. Strings returned by
//! the library are owned by the caller and released with [`nashq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nashq::envs::{generate_random_game, RandomGameSpec};
use nashq::experiment::{run_experiment, ExperimentConfig};
use nashq::learning::{run_partial_info, LearnerSettings, LearningRateSchedule};
use nashq::verify::certify_nash;
use nashq::{Error, Player, StochasticGame, StrategyProfile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NashqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Solver = 4,
    Numerical = 5,
    Io = 6,
    Json = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// A stochastic game.
pub struct NashqGame {
    inner: StochasticGame,
}

/// One stationary strategy per state for each player.
pub struct NashqProfile {
    inner: StrategyProfile,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NashqCertificate {
    pub gap_1: f64,
    pub gap_2: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl From<nashq::verify::NashCertificate> for NashqCertificate {
    fn from(c: nashq::verify::NashCertificate) -> Self {
        NashqCertificate { gap_1: c.gap_1, gap_2: c.gap_2, tolerance: c.tolerance, passed: c.passed }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> NashqStatus {
    match err {
        Error::InvalidInput(_) => NashqStatus::InvalidInput,
        Error::Solver(_) => NashqStatus::Solver,
        Error::Numerical(_) => NashqStatus::Numerical,
        Error::Config { .. } => NashqStatus::Config,
        Error::Io(_) => NashqStatus::Io,
        Error::Json(_) => NashqStatus::Json,
    }
}

struct Fail(NashqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NashqStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NashqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NashqStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            NashqStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NashqStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn player_arg(player: u32) -> Result<Player, Fail> {
    match player {
        1 => Ok(Player::One),
        2 => Ok(Player::Two),
        _ => Err(Fail(NashqStatus::InvalidInput, format!("player must be 1 or 2, got {player}"))),
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(NashqStatus::Internal, "string contains NUL".into()))
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn nashq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The caller owns the copy and frees it with `nashq_string_free`.
#[no_mangle]
pub extern "C" fn nashq_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` is NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nashq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a game document.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_game_from_json(json: *const c_char, out: *mut *mut NashqGame) -> NashqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = StochasticGame::from_json_str(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(NashqGame { inner }));
        Ok(())
    })
}

/// Load a game document from a file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_game_load(path: *const c_char, out: *mut *mut NashqGame) -> NashqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = StochasticGame::load(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(NashqGame { inner }));
        Ok(())
    })
}

/// Seeded random game with `d1` and `d2` actions, `d_s` states, reward
/// correlation `h` and discount factors `gamma_1`, `gamma_2`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_game_random(
    d1: usize,
    d2: usize,
    d_s: usize,
    h: f64,
    gamma_1: f64,
    gamma_2: f64,
    seed: u64,
    out: *mut *mut NashqGame,
) -> NashqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = RandomGameSpec { d1, d2, d_s, h, gamma_1, gamma_2, seed };
        *out = Box::into_raw(Box::new(NashqGame { inner: generate_random_game(&spec)? }));
        Ok(())
    })
}

/// # Safety
/// `game` is NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nashq_game_free(game: *mut NashqGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// # Safety
/// `game` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_game_n_states(game: *const NashqGame, out: *mut usize) -> NashqStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(game, "game")?.inner.n_states();
        Ok(())
    })
}

/// Action count of `player` (1 or 2).
///
/// # Safety
/// `game` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_game_n_actions(game: *const NashqGame, player: u32, out: *mut usize) -> NashqStatus {
    guard(|| {
        let g = ref_arg(game, "game")?;
        *out_arg(out, "out")? = g.inner.n_actions(player_arg(player)?);
        Ok(())
    })
}

/// Serialize the game; free the result with `nashq_string_free`.
///
/// # Safety
/// `game` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_game_to_json(game: *const NashqGame, out: *mut *mut c_char) -> NashqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = into_c_string(ref_arg(game, "game")?.inner.to_json_string())?;
        Ok(())
    })
}

/// Both players uniform at every state.
///
/// # Safety
/// `game` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_profile_uniform(game: *const NashqGame, out: *mut *mut NashqProfile) -> NashqStatus {
    guard(|| {
        let g = ref_arg(game, "game")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(NashqProfile { inner: StrategyProfile::uniform(&g.inner) }));
        Ok(())
    })
}

/// Parse a profile as written under `strategies` in `tables.json`.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_profile_from_json(json: *const c_char, out: *mut *mut NashqProfile) -> NashqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner: StrategyProfile = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(NashqProfile { inner }));
        Ok(())
    })
}

/// # Safety
/// `profile` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_profile_to_json(profile: *const NashqProfile, out: *mut *mut c_char) -> NashqStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = serde_json::to_string(&ref_arg(profile, "profile")?.inner).map_err(Error::from)?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// Copy the strategy of `player` at `state` into `buf`, which holds `len`
/// doubles. `written` receives the number of actions; if `len` is too small
/// nothing is copied and the call fails with `NASHQ_STATUS_INVALID_INPUT`.
///
/// # Safety
/// `profile` is a live handle; `buf` holds `len` doubles; `written` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_profile_strategy(
    profile: *const NashqProfile,
    player: u32,
    state: usize,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> NashqStatus {
    guard(|| {
        let p = &ref_arg(profile, "profile")?.inner;
        let written = out_arg(written, "written")?;
        let player = player_arg(player)?;
        if state >= p.pi[player.index()].len() {
            return Err(Fail(NashqStatus::InvalidInput, format!("state {state} out of range")));
        }
        let w = p.strategy(player, state).weights();
        *written = w.len();
        if len < w.len() {
            return Err(Fail(NashqStatus::InvalidInput, format!("buffer holds {len}, strategy has {}", w.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(w.as_ptr(), buf, w.len());
        Ok(())
    })
}

/// # Safety
/// `profile` is NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nashq_profile_free(profile: *mut NashqProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Both players learn with partial information for `n_steps`. A positive
/// `stair_width` selects the stair learning rate, zero the per-visit rate.
///
/// # Safety
/// `game` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_run_partial_info(
    game: *const NashqGame,
    n_steps: u64,
    stair_width: u64,
    seed: u64,
    out: *mut *mut NashqProfile,
) -> NashqStatus {
    guard(|| {
        let g = ref_arg(game, "game")?;
        let out = out_arg(out, "out")?;
        let settings = LearnerSettings {
            schedule: if stair_width > 0 {
                LearningRateSchedule::stair(stair_width)
            } else {
                LearningRateSchedule::per_visit(0.0)
            },
            record_trace: false,
            ..LearnerSettings::default()
        };
        let run = run_partial_info(&g.inner, &settings, n_steps, seed)?;
        *out = Box::into_raw(Box::new(NashqProfile { inner: run.final_profile }));
        Ok(())
    })
}

/// Exact best-response gaps of `profile` in `game`.
///
/// # Safety
/// `game` and `profile` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_certify(
    game: *const NashqGame,
    profile: *const NashqProfile,
    tol: f64,
    out: *mut NashqCertificate,
) -> NashqStatus {
    guard(|| {
        let g = ref_arg(game, "game")?;
        let p = ref_arg(profile, "profile")?;
        let out = out_arg(out, "out")?;
        *out = certify_nash(&g.inner, &p.inner, tol)?.into();
        Ok(())
    })
}

/// Run the experiment described by the config file and write its artifacts
/// to `out_dir`. `out` receives the final certificate.
///
/// # Safety
/// `config_path` and `out_dir` are NUL-terminated strings; `out` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn nashq_run_experiment(
    config_path: *const c_char,
    out_dir: *const c_char,
    out: *mut NashqCertificate,
) -> NashqStatus {
    guard(|| {
        let cfg = ExperimentConfig::load(Path::new(str_arg(config_path, "config_path")?))?;
        let result = run_experiment(&cfg, Path::new(str_arg(out_dir, "out_dir")?))?;
        if let Some(out) = out.as_mut() {
            *out = result.certificate.certificate.into();
        }
        Ok(())
    })
}
