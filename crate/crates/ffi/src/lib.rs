//! C ABI for `clusterpower`.
//!
//! Catalogs cross the boundary as opaque handles created by one of the
//! `cp_catalog_*` constructors and released with [`cp_catalog_free`]. Every
//! fallible call returns a [`CpStatus`]; on failure [`cp_last_error`] gives a
//! message for the calling thread. Results go through out-pointers, which are
//! written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clusterpower::hypothesis::{CalibrationKind, TestId, TestOutcome};
use clusterpower::io::{ingest_catalog, IngestOptions};
use clusterpower::power::{
    run_power_study, test_catalog, CalibrationSettings, NullRatePolicy, PowerConfig, TestConfig,
    PVALUE_BINS,
};
use clusterpower::process::{
    ClusterProcessParams, EventCatalog, OnsetRule, ProcessModel, SimulationWindow,
};
use clusterpower::stats;
use clusterpower::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    /// The catalog has too few events for the test.
    Untestable = 3,
    AllUntestable = 4,
    Io = 5,
    Parse = 6,
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

pub const CP_TEST_KS: u32 = 0;
pub const CP_TEST_CHI2_COUNTS: u32 = 1;
pub const CP_TEST_CHI2_INTER_N_EVENT: u32 = 2;

pub const CP_ONSET_REJECT: u32 = 0;
pub const CP_ONSET_DEFER: u32 = 1;

pub const CP_CALIBRATION_ANALYTIC: u32 = 0;
pub const CP_CALIBRATION_MONTE_CARLO: u32 = 1;

/// Bins of the p-value histogram in [`CpPowerResult`].
pub const CP_PVALUE_BINS: usize = 20;

const _: () = assert!(CP_PVALUE_BINS == PVALUE_BINS);

/// Opaque event catalog.
pub struct CpCatalog {
    inner: EventCatalog,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpTestOutcome {
    /// One of the `CP_TEST_*` values.
    pub test: u32,
    pub statistic: f64,
    pub p_value: f64,
    pub null_rate: f64,
    /// Nonzero when the null rate was estimated from the catalog.
    pub null_rate_estimated: u32,
    pub n_events: usize,
    /// One of the `CP_CALIBRATION_*` values.
    pub calibration: u32,
    /// Degrees of freedom of the analytic law, or -1.
    pub dof: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpPowerRequest {
    /// One of the `CP_TEST_*` values; each test uses its default settings.
    pub test: u32,
    /// Nonzero simulates a Poisson process at `poisson_rate` instead.
    pub poisson: u32,
    pub poisson_rate: f64,
    pub clusters_per_century: f64,
    pub events_per_decade: f64,
    pub cluster_years: f64,
    pub window_years: f64,
    /// One of the `CP_ONSET_*` values.
    pub onset_rule: u32,
    pub n_trials: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Fixed null rate; NaN uses the ensemble mean.
    pub null_rate: f64,
    /// One of the `CP_CALIBRATION_*` values.
    pub calibration: u32,
    pub calibration_trials: usize,
    /// Worker threads; 0 uses the default pool.
    pub workers: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpPowerResult {
    pub power: f64,
    pub std_error: f64,
    pub n_effective: usize,
    pub n_untestable: usize,
    pub ensemble_mean_rate: f64,
    /// Counts of p-values in 5%-wide bins.
    pub histogram: [u64; CP_PVALUE_BINS],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CpStatus {
    match e {
        Error::TooFewEvents { .. } | Error::DegenerateCategories(_) | Error::EmptySample => {
            CpStatus::Untestable
        }
        Error::AllUntestable => CpStatus::AllUntestable,
        Error::Io { .. } | Error::FileNotFound { .. } => CpStatus::Io,
        Error::Parse { .. } | Error::EmptyAfterFilter { .. } => CpStatus::Parse,
        _ => CpStatus::InvalidArgument,
    }
}

fn fail(status: CpStatus, message: &str) -> CpStatus {
    set_error(message);
    status
}

/// Runs `f`, converting errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), CpStatus>) -> CpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(CpStatus::Internal, "internal error"),
    }
}

fn check<T>(r: clusterpower::Result<T>) -> Result<T, CpStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), CpStatus> {
    if p.is_null() {
        Err(fail(CpStatus::NullPointer, &format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn invalid(message: &str) -> CpStatus {
    fail(CpStatus::InvalidArgument, message)
}

fn test_config(test: u32) -> Result<TestConfig, CpStatus> {
    match test {
        CP_TEST_KS => Ok(TestConfig::ks()),
        CP_TEST_CHI2_COUNTS => Ok(TestConfig::chi2_counts()),
        CP_TEST_CHI2_INTER_N_EVENT => Ok(TestConfig::chi2_inter_n_event()),
        _ => Err(invalid(&format!("unknown test {test}"))),
    }
}

fn calibration_kind(c: u32) -> Result<CalibrationKind, CpStatus> {
    match c {
        CP_CALIBRATION_ANALYTIC => Ok(CalibrationKind::Analytic),
        CP_CALIBRATION_MONTE_CARLO => Ok(CalibrationKind::MonteCarlo),
        _ => Err(invalid(&format!("unknown calibration {c}"))),
    }
}

fn onset_rule(r: u32) -> Result<OnsetRule, CpStatus> {
    match r {
        CP_ONSET_REJECT => Ok(OnsetRule::Reject),
        CP_ONSET_DEFER => Ok(OnsetRule::Defer),
        _ => Err(invalid(&format!("unknown onset rule {r}"))),
    }
}

fn test_code(id: TestId) -> u32 {
    match id {
        TestId::KsInterevent => CP_TEST_KS,
        TestId::Chi2Counts => CP_TEST_CHI2_COUNTS,
        TestId::Chi2InterNEvent => CP_TEST_CHI2_INTER_N_EVENT,
    }
}

unsafe fn emit_handle(out: *mut *mut CpCatalog, inner: EventCatalog) {
    *out = Box::into_raw(Box::new(CpCatalog { inner }));
}

/// Message for the last failure on this thread. Valid until the next call
/// on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a catalog from `n` strictly increasing times in `[0, window_years)`.
///
/// # Safety
/// `times` must point to `n` doubles (or be null with `n == 0`); `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_new(
    times: *const f64,
    n: usize,
    window_years: f64,
    out: *mut *mut CpCatalog,
) -> CpStatus {
    guard(|| {
        non_null(out, "out")?;
        if n > 0 {
            non_null(times, "times")?;
        }
        let slice = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(times, n)
        };
        let window = check(SimulationWindow::new(window_years))?;
        let catalog = check(EventCatalog::new(slice.to_vec(), window))?;
        emit_handle(out, catalog);
        Ok(())
    })
}

/// Simulates one catalog of the clustered process.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_simulate_clustered(
    clusters_per_century: f64,
    events_per_decade: f64,
    cluster_years: f64,
    window_years: f64,
    onset: u32,
    seed: u64,
    out: *mut *mut CpCatalog,
) -> CpStatus {
    guard(|| {
        non_null(out, "out")?;
        let params = check(
            ClusterProcessParams::new(clusters_per_century, events_per_decade)
                .and_then(|p| p.with_duration(cluster_years))
                .and_then(|p| p.with_window(SimulationWindow::new(window_years)?)),
        )?
        .with_onset_rule(onset_rule(onset)?);
        emit_handle(out, ProcessModel::Clustered(params).sample(seed));
        Ok(())
    })
}

/// Simulates one homogeneous Poisson catalog.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_simulate_poisson(
    rate: f64,
    window_years: f64,
    seed: u64,
    out: *mut *mut CpCatalog,
) -> CpStatus {
    guard(|| {
        non_null(out, "out")?;
        let window = check(SimulationWindow::new(window_years))?;
        let model = check(ProcessModel::poisson(rate, window))?;
        emit_handle(out, model.sample(seed));
        Ok(())
    })
}

/// Reads a catalog file. A NaN `cutoff` keeps every row.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_read_csv(
    path: *const c_char,
    cutoff: f64,
    out: *mut *mut CpCatalog,
) -> CpStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let options = IngestOptions {
            cutoff: (!cutoff.is_nan()).then_some(cutoff),
            ..Default::default()
        };
        let ingested = check(ingest_catalog(path, &options))?;
        emit_handle(out, ingested.catalog);
        Ok(())
    })
}

/// Releases a catalog. Null is ignored.
///
/// # Safety
/// `catalog` must come from a `cp_catalog_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_free(catalog: *mut CpCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Number of events; 0 for null.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_len(catalog: *const CpCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.inner.len())
}

/// Window length in years; NaN for null.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_window_years(catalog: *const CpCatalog) -> f64 {
    catalog
        .as_ref()
        .map_or(f64::NAN, |c| c.inner.window().length_years())
}

/// Copies the event times into `buffer`, which holds `capacity` doubles.
///
/// # Safety
/// `catalog` must be a live handle and `buffer` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_catalog_times(
    catalog: *const CpCatalog,
    buffer: *mut f64,
    capacity: usize,
) -> CpStatus {
    guard(|| {
        non_null(catalog, "catalog")?;
        let times = (*catalog).inner.times();
        if times.is_empty() {
            return Ok(());
        }
        non_null(buffer, "buffer")?;
        if capacity < times.len() {
            return Err(fail(
                CpStatus::BufferTooSmall,
                &format!("need room for {} times, have {capacity}", times.len()),
            ));
        }
        ptr::copy_nonoverlapping(times.as_ptr(), buffer, times.len());
        Ok(())
    })
}

fn outcome_to_c(o: &TestOutcome) -> CpTestOutcome {
    use clusterpower::hypothesis::NullRate;
    CpTestOutcome {
        test: test_code(o.test),
        statistic: o.statistic,
        p_value: o.p_value,
        null_rate: o.null_rate.value(),
        null_rate_estimated: matches!(o.null_rate, NullRate::Estimated(_)) as u32,
        n_events: o.n_events,
        calibration: match o.calibration {
            CalibrationKind::Analytic => CP_CALIBRATION_ANALYTIC,
            CalibrationKind::MonteCarlo => CP_CALIBRATION_MONTE_CARLO,
        },
        dof: o.dof.map_or(-1, |d| d as i64),
    }
}

/// Tests one catalog with the test's default settings. A NaN `null_rate`
/// uses the catalog's own rate where the test allows it.
///
/// # Safety
/// `catalog` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_test_catalog(
    catalog: *const CpCatalog,
    test: u32,
    null_rate: f64,
    calibration: u32,
    calibration_trials: usize,
    seed: u64,
    out: *mut CpTestOutcome,
) -> CpStatus {
    guard(|| {
        non_null(catalog, "catalog")?;
        non_null(out, "out")?;
        let config = test_config(test)?;
        let settings = CalibrationSettings {
            method: calibration_kind(calibration)?,
            n_trials: calibration_trials,
            ..Default::default()
        };
        let rate = (!null_rate.is_nan()).then_some(null_rate);
        let outcome = check(test_catalog(
            &(*catalog).inner,
            &config,
            rate,
            &settings,
            seed,
        ))?;
        *out = outcome_to_c(&outcome);
        Ok(())
    })
}

/// Request with the library defaults: the 3-by-4 clustered process, test
/// (a), 10 000 trials, alpha 0.05, Monte Carlo calibration.
#[no_mangle]
pub extern "C" fn cp_power_request_default() -> CpPowerRequest {
    let p = ClusterProcessParams::default();
    let c = CalibrationSettings::default();
    CpPowerRequest {
        test: CP_TEST_KS,
        poisson: 0,
        poisson_rate: f64::NAN,
        clusters_per_century: p.clusters_per_century,
        events_per_decade: p.in_cluster_events_per_decade,
        cluster_years: p.cluster_duration_years,
        window_years: p.window.length_years(),
        onset_rule: CP_ONSET_REJECT,
        n_trials: 10_000,
        alpha: 0.05,
        seed: 0,
        null_rate: f64::NAN,
        calibration: CP_CALIBRATION_MONTE_CARLO,
        calibration_trials: c.n_trials,
        workers: 0,
    }
}

/// Runs a power study.
///
/// # Safety
/// `request` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cp_power_study(
    request: *const CpPowerRequest,
    out: *mut CpPowerResult,
) -> CpStatus {
    guard(|| {
        non_null(request, "request")?;
        non_null(out, "out")?;
        let r = &*request;
        let window = check(SimulationWindow::new(r.window_years))?;
        let process = if r.poisson != 0 {
            check(ProcessModel::poisson(r.poisson_rate, window))?
        } else {
            let p = check(
                ClusterProcessParams::new(r.clusters_per_century, r.events_per_decade)
                    .and_then(|p| p.with_duration(r.cluster_years))
                    .and_then(|p| p.with_window(window)),
            )?
            .with_onset_rule(onset_rule(r.onset_rule)?);
            ProcessModel::Clustered(p)
        };
        let mut config = PowerConfig::new(process, test_config(r.test)?);
        config.n_trials = r.n_trials;
        config.alpha = r.alpha;
        config.master_seed = r.seed;
        if !r.null_rate.is_nan() {
            config.null_rate_policy = NullRatePolicy::Fixed(r.null_rate);
        }
        config.calibration.method = calibration_kind(r.calibration)?;
        config.calibration.n_trials = r.calibration_trials;
        config.workers = (r.workers > 0).then_some(r.workers);
        let study = check(run_power_study(&config))?;
        let mut histogram = [0u64; CP_PVALUE_BINS];
        histogram.copy_from_slice(study.distribution.histogram.counts());
        *out = CpPowerResult {
            power: study.estimate.power,
            std_error: study.estimate.std_error,
            n_effective: study.estimate.n_effective,
            n_untestable: study.distribution.n_untestable,
            ensemble_mean_rate: study.ensemble_mean_rate,
            histogram,
        };
        Ok(())
    })
}

fn kernel(out: *mut f64, f: impl FnOnce() -> clusterpower::Result<f64>) -> CpStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = check(f())?;
        // SAFETY: checked non-null; the caller guarantees validity
        unsafe { *out = v };
        Ok(())
    })
}

/// Asymptotic two-sided KS p-value for statistic `d` on `n` points.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_ks_pvalue(d: f64, n: usize, out: *mut f64) -> CpStatus {
    kernel(out, || stats::ks_pvalue_asymptotic(d, n))
}

/// Upper tail of the chi-square law with `dof` degrees of freedom.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_chi2_pvalue(x: f64, dof: usize, out: *mut f64) -> CpStatus {
    kernel(out, || stats::chi2_pvalue(x, dof))
}

/// CDF of the Erlang law of the given shape and rate.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_erlang_cdf(shape: u32, rate: f64, t: f64, out: *mut f64) -> CpStatus {
    kernel(out, || stats::erlang_cdf(shape, rate, t))
}

/// Poisson probability of exactly `k` events at mean `mean`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_poisson_pmf(mean: f64, k: u64, out: *mut f64) -> CpStatus {
    kernel(out, || stats::poisson_pmf(mean, k))
}
