//! Fit-call instrumentation for purity checks.
//!
//! When enabled, every learner fit records which stream rows it consumed
//! (by batch index and row offset) together with the batch currently being
//! processed by the orchestrator. Tests use the recorded events to assert
//! test-then-train purity (no training row from a batch at or after the one
//! being predicted) and holdout hygiene (member and meta fits never touch a
//! search's holdout rows). Disabled by default and a no-op in that state.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread::ThreadId;

/// Identity of a stream row: (batch index, offset within batch).
pub type RowId = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// A pipeline fit or partial_fit for a candidate/member model.
    Member,
    /// A stacker meta-model fit (consumes holdout rows by construction).
    Meta,
    /// Rows reserved as the holdout split of one search invocation.
    HoldoutSplit,
}

#[derive(Debug, Clone)]
pub struct FitEvent {
    pub kind: FitKind,
    /// Batch being processed by the orchestrator when the fit ran, if any.
    pub during_batch: Option<usize>,
    /// Search invocation the event belongs to (0 outside any search).
    pub search_id: u64,
    pub rows: Vec<RowId>,
}

static ENABLED: AtomicBool = AtomicBool::new(false);
static NEXT_SEARCH: AtomicU64 = AtomicU64::new(1);
static CURRENT_SEARCH: AtomicU64 = AtomicU64::new(0);
static EVENTS: Mutex<Vec<FitEvent>> = Mutex::new(Vec::new());
static CURRENT_BATCH: Mutex<Option<usize>> = Mutex::new(None);
// auditing is scoped to the thread that enabled it, so unrelated runs on
// other threads (parallel tests, sweep workers) do not interleave events
static OWNER: Mutex<Option<ThreadId>> = Mutex::new(None);

pub fn enable() {
    EVENTS.lock().unwrap().clear();
    *OWNER.lock().unwrap() = Some(std::thread::current().id());
    ENABLED.store(true, Ordering::SeqCst);
}

pub fn disable() {
    ENABLED.store(false, Ordering::SeqCst);
    *OWNER.lock().unwrap() = None;
}

pub fn enabled() -> bool {
    ENABLED.load(Ordering::SeqCst)
        && *OWNER.lock().unwrap() == Some(std::thread::current().id())
}

/// Drain all recorded events.
pub fn take() -> Vec<FitEvent> {
    std::mem::take(&mut *EVENTS.lock().unwrap())
}

pub fn set_current_batch(b: Option<usize>) {
    if enabled() {
        *CURRENT_BATCH.lock().unwrap() = b;
    }
}

/// Enter a new search invocation context; returns its id.
pub fn enter_search() -> u64 {
    let id = NEXT_SEARCH.fetch_add(1, Ordering::SeqCst);
    CURRENT_SEARCH.store(id, Ordering::SeqCst);
    id
}

pub fn exit_search() {
    CURRENT_SEARCH.store(0, Ordering::SeqCst);
}

pub fn record(kind: FitKind, rows: Vec<RowId>) {
    if !enabled() {
        return;
    }
    let during_batch = *CURRENT_BATCH.lock().unwrap();
    let search_id = CURRENT_SEARCH.load(Ordering::SeqCst);
    EVENTS.lock().unwrap().push(FitEvent {
        kind,
        during_batch,
        search_id,
        rows,
    });
}
