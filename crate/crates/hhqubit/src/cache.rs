//! One diagonalization per working point, shared by every sweep.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use hhqubit_core::constants::CODATA;
use hhqubit_core::spectrum::solve_working_point;
use hhqubit_core::{QubitSubspace, Spectrum, WorkingPoint};

/// Spectrum and qubit subspace of one working point.
#[derive(Debug)]
pub struct Solved {
    /// The point that was solved.
    pub working_point: WorkingPoint,
    /// Full eigendecomposition.
    pub spectrum: Spectrum,
    /// Levels and dipole rows.
    pub qubit: QubitSubspace,
}

/// Memo keyed by [`WorkingPoint::params_hash`].
#[derive(Debug, Default)]
pub struct SolveCache {
    solved: Mutex<HashMap<u64, Arc<Solved>>>,
    diagonalizations: AtomicUsize,
}

impl SolveCache {
    /// Empty cache.
    pub fn new() -> Self {
        Self::default()
    }

    /// Cached solution, diagonalizing on first request.
    pub fn solve(&self, wp: &WorkingPoint) -> hhqubit_core::Result<Arc<Solved>> {
        let key = wp.params_hash();
        if let Some(s) = self.lock().get(&key) {
            return Ok(Arc::clone(s));
        }
        let (spectrum, qubit) = solve_working_point(wp, &CODATA)?;
        self.diagonalizations.fetch_add(1, Ordering::Relaxed);
        let fresh = Arc::new(Solved { working_point: *wp, spectrum, qubit });
        Ok(Arc::clone(self.lock().entry(key).or_insert(fresh)))
    }

    /// Number of diagonalizations performed so far.
    pub fn diagonalizations(&self) -> usize {
        self.diagonalizations.load(Ordering::Relaxed)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<u64, Arc<Solved>>> {
        self.solved.lock().unwrap_or_else(|p| p.into_inner())
    }
}
