//! Thread-local FFT plan cache around rustfft.
//!
//! Plans are deterministic functions of the transform length, so results do
//! not depend on which thread computes them.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn with_plan<R>(len: usize, inverse: bool, f: impl FnOnce(&Arc<dyn Fft<f64>>) -> R) -> R {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        let plan = cache.entry((len, inverse)).or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        });
        f(plan)
    })
}

/// Unnormalized forward DFT of a real signal.
pub fn forward_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    with_plan(buf.len(), false, |plan| plan.process(&mut buf));
    buf
}

/// Unnormalized inverse DFT, in place.
pub fn inverse(buf: &mut [Complex64]) {
    with_plan(buf.len(), true, |plan| plan.process(buf));
}
