//! C ABI over the simulation engine.
//!
//! Objects cross the boundary as opaque handles created by `*_new` / `*_builtin`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`MpmabStatus`]; on failure the message is available from
//! [`mpmab_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mpmab::env::{Action, ArmSpec, Environment};
use mpmab::harness::{replication_rngs, run_experiment, serialize_results, ExperimentConfig, ExperimentResult};
use mpmab::policies::{Policy, PolicyKind, PolicySpec};
use mpmab::Error;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpmabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidEnvironment = 3,
    Infeasible = 4,
    UnknownName = 5,
    Config = 6,
    Io = 7,
    BufferTooSmall = 8,
    Unsupported = 9,
    Panic = 10,
}

/// Ground-truth environment.
pub struct MpmabEnv {
    inner: Environment,
}

/// Aggregated regret traces of one experiment.
pub struct MpmabResult {
    inner: ExperimentResult,
    labels: Vec<CString>,
}

/// One policy interacting with its own copy of an environment.
pub struct MpmabSimulation {
    env: Environment,
    policy: Box<dyn Policy>,
    env_rng: ChaCha8Rng,
    best: f64,
    slot: u64,
    cumulative_regret: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> MpmabStatus {
    match err {
        Error::InvalidArm { .. } | Error::InvalidEnvironment(_) => MpmabStatus::InvalidEnvironment,
        Error::Infeasible { .. } => MpmabStatus::Infeasible,
        Error::InvalidAction(_) | Error::OutOfRange(_) => MpmabStatus::InvalidArgument,
        Error::ActionSpaceTooLarge { .. } | Error::Unsupported(_) => MpmabStatus::Unsupported,
        Error::UnknownScenario { .. } | Error::UnknownPolicy { .. } => MpmabStatus::UnknownName,
        Error::Config(_) | Error::Json(_) => MpmabStatus::Config,
        Error::Io(_) => MpmabStatus::Io,
    }
}

struct Fail(MpmabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MpmabStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> MpmabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MpmabStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            MpmabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MpmabStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, needed: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len < needed {
        return Err(Fail(
            MpmabStatus::BufferTooSmall,
            format!("{what} holds {len} entries, {needed} needed"),
        ));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mpmab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mpmab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in scenario by name (`bernoulli9`, `gaussian9`, `bs20`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpmab_env_builtin(name: *const c_char, out: *mut *mut MpmabEnv) -> MpmabStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let env = mpmab::harness::builtin_scenario(name)?;
        *out = Box::into_raw(Box::new(MpmabEnv { inner: env }));
        Ok(())
    })
}

/// Environment from arm arrays of length `num_arms`. `variances` may be null
/// for an all-Bernoulli environment; otherwise a positive entry makes that arm
/// Gaussian and a non-positive entry keeps it Bernoulli.
///
/// # Safety
/// Array pointers must reference `num_arms` readable elements; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_env_new(
    means: *const f64,
    capacities: *const u32,
    variances: *const f64,
    num_arms: usize,
    plays: u32,
    out: *mut *mut MpmabEnv,
) -> MpmabStatus {
    guard(|| {
        let means = slice_arg(means, num_arms, "means")?;
        let caps = slice_arg(capacities, num_arms, "capacities")?;
        let vars = if variances.is_null() {
            None
        } else {
            Some(slice_arg(variances, num_arms, "variances")?)
        };
        let out = out_arg(out, "out")?;
        let arms = (0..num_arms)
            .map(|k| match vars.map(|v| v[k]) {
                Some(v) if v > 0.0 => ArmSpec::gaussian(means[k], caps[k], v),
                _ => ArmSpec::bernoulli(means[k], caps[k]),
            })
            .collect();
        let env = Environment::new(arms, plays, 0)?;
        *out = Box::into_raw(Box::new(MpmabEnv { inner: env }));
        Ok(())
    })
}

/// # Safety
/// `env` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn mpmab_env_free(env: *mut MpmabEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// # Safety
/// `env` must be a live handle; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_env_shape(env: *const MpmabEnv, num_arms: *mut usize, plays: *mut u32) -> MpmabStatus {
    guard(|| {
        let env = &env.as_ref().ok_or_else(|| null("env"))?.inner;
        *out_arg(num_arms, "num_arms")? = env.num_arms();
        *out_arg(plays, "plays")? = env.plays();
        Ok(())
    })
}

/// Writes the optimal allocation into `counts` (length `len` at least the arm
/// count) and its expected reward into `reward`.
///
/// # Safety
/// `env` must be live; `counts` must hold `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn mpmab_env_optimal_action(
    env: *const MpmabEnv,
    counts: *mut u32,
    len: usize,
    reward: *mut f64,
) -> MpmabStatus {
    guard(|| {
        let env = &env.as_ref().ok_or_else(|| null("env"))?.inner;
        let buf = out_slice(counts, len, env.num_arms(), "counts")?;
        let reward = out_arg(reward, "reward")?;
        let (a, _) = env.optimal_action();
        buf[..a.0.len()].copy_from_slice(&a.0);
        *reward = env.optimal_reward();
        Ok(())
    })
}

/// Expected reward `f(a)` of an allocation.
///
/// # Safety
/// `env` must be live; `counts` must hold `len` readable entries.
#[no_mangle]
pub unsafe extern "C" fn mpmab_env_expected_reward(
    env: *const MpmabEnv,
    counts: *const u32,
    len: usize,
    out: *mut f64,
) -> MpmabStatus {
    guard(|| {
        let env = &env.as_ref().ok_or_else(|| null("env"))?.inner;
        let a = Action(slice_arg(counts, len, "counts")?.to_vec());
        *out_arg(out, "out")? = env.expected_reward(&a)?;
        Ok(())
    })
}

/// Runs the experiment described by a TOML document.
///
/// # Safety
/// `config_toml` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_run_config(config_toml: *const c_char, out: *mut *mut MpmabResult) -> MpmabStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        let out = out_arg(out, "out")?;
        let cfg = ExperimentConfig::from_toml_str(text)?;
        *out = Box::into_raw(Box::new(wrap_result(run_experiment(&cfg)?)?));
        Ok(())
    })
}

fn wrap_result(inner: ExperimentResult) -> Result<MpmabResult, Fail> {
    let labels = inner
        .traces
        .iter()
        .map(|t| CString::new(t.label.as_str()).map_err(|_| Fail(MpmabStatus::InvalidArgument, "label has NUL".into())))
        .collect::<Result<_, _>>()?;
    Ok(MpmabResult { inner, labels })
}

/// # Safety
/// `result` must come from this library and not be used afterwards. Null is
/// a no-op.
#[no_mangle]
pub unsafe extern "C" fn mpmab_result_free(result: *mut MpmabResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of policies that produced a trace.
///
/// # Safety
/// `result` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_result_num_traces(result: *const MpmabResult, out: *mut usize) -> MpmabStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        *out_arg(out, "out")? = r.inner.traces.len();
        Ok(())
    })
}

/// Number of policies that could not run.
///
/// # Safety
/// `result` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_result_num_failures(result: *const MpmabResult, out: *mut usize) -> MpmabStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        *out_arg(out, "out")? = r.inner.failures.len();
        Ok(())
    })
}

/// Label of trace `index`; the string lives as long as the result handle.
///
/// # Safety
/// `result` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_result_label(
    result: *const MpmabResult,
    index: usize,
    out: *mut *const c_char,
) -> MpmabStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let label = r
            .labels
            .get(index)
            .ok_or_else(|| Fail(MpmabStatus::InvalidArgument, format!("trace {index} out of range")))?;
        *out_arg(out, "out")? = label.as_ptr();
        Ok(())
    })
}

/// Length of trace `index`.
///
/// # Safety
/// `result` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_result_trace_len(result: *const MpmabResult, index: usize, out: *mut usize) -> MpmabStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let tr = r
            .inner
            .traces
            .get(index)
            .ok_or_else(|| Fail(MpmabStatus::InvalidArgument, format!("trace {index} out of range")))?;
        *out_arg(out, "out")? = tr.t.len();
        Ok(())
    })
}

/// Copies trace `index` into four caller buffers of length `len`.
///
/// # Safety
/// `result` must be live; every buffer must hold `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn mpmab_result_trace(
    result: *const MpmabResult,
    index: usize,
    t: *mut u64,
    mean_regret: *mut f64,
    std_regret: *mut f64,
    optimal_freq: *mut f64,
    len: usize,
) -> MpmabStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let tr = r
            .inner
            .traces
            .get(index)
            .ok_or_else(|| Fail(MpmabStatus::InvalidArgument, format!("trace {index} out of range")))?;
        let n = tr.t.len();
        out_slice(t, len, n, "t")?[..n].copy_from_slice(&tr.t);
        out_slice(mean_regret, len, n, "mean_regret")?[..n].copy_from_slice(&tr.mean_regret);
        out_slice(std_regret, len, n, "std_regret")?[..n].copy_from_slice(&tr.std_regret);
        out_slice(optimal_freq, len, n, "optimal_freq")?[..n].copy_from_slice(&tr.optimal_action_freq);
        Ok(())
    })
}

/// Writes the CSV at `path` and the JSON sidecar next to it.
///
/// # Safety
/// `result` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mpmab_result_write(result: *const MpmabResult, path: *const c_char) -> MpmabStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let path = str_arg(path, "path")?;
        serialize_results(&r.inner, Path::new(path))?;
        Ok(())
    })
}

/// Starts a single-replication simulation of policy `policy_name` on a copy
/// of `env`, seeded like replication `rep` of an experiment with base seed
/// `seed`.
///
/// # Safety
/// `env` must be live; `policy_name` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_simulation_new(
    env: *const MpmabEnv,
    policy_name: *const c_char,
    horizon: u64,
    seed: u64,
    rep: u64,
    out: *mut *mut MpmabSimulation,
) -> MpmabStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?.inner.clone();
        let kind: PolicyKind = str_arg(policy_name, "policy_name")?.parse()?;
        let out = out_arg(out, "out")?;
        let (env_rng, policy_rng) = replication_rngs(seed, rep);
        let policy = PolicySpec::new(kind).build(&env, horizon, policy_rng)?;
        *out = Box::into_raw(Box::new(MpmabSimulation {
            best: env.optimal_reward(),
            env,
            policy,
            env_rng,
            slot: 0,
            cumulative_regret: 0.0,
        }));
        Ok(())
    })
}

/// Advances one slot: the policy acts, the environment answers, the policy
/// learns. Writes the action into `counts` and the cumulative pseudo-regret
/// into `regret`.
///
/// # Safety
/// `sim` must be live; `counts` must hold `len` writable entries; `regret`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn mpmab_simulation_step(
    sim: *mut MpmabSimulation,
    counts: *mut u32,
    len: usize,
    regret: *mut f64,
) -> MpmabStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("sim"))?;
        let buf = out_slice(counts, len, sim.env.num_arms(), "counts")?;
        let regret = out_arg(regret, "regret")?;
        sim.slot += 1;
        let t = sim.slot;
        let action = sim.policy.select_action(t);
        let feedback = sim.env.sample_feedback(&action, &mut sim.env_rng)?;
        let gap = (sim.best - sim.env.expected_reward(&action)?).max(0.0);
        if gap > 1e-12 * f64::from(sim.env.plays()) {
            sim.cumulative_regret += gap;
        }
        sim.policy.observe(t, &action, &feedback);
        buf[..action.0.len()].copy_from_slice(&action.0);
        *regret = sim.cumulative_regret;
        Ok(())
    })
}

/// # Safety
/// `sim` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn mpmab_simulation_free(sim: *mut MpmabSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
