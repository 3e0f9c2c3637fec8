use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Cached 2D complex FFT for an `nx x ny` row-major layout.
pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

static PLANS: OnceLock<Mutex<HashMap<(usize, usize), Arc<Fft2>>>> = OnceLock::new();

pub(crate) fn plan(nx: usize, ny: usize) -> Arc<Fft2> {
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry((nx, ny))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Fft2 {
                nx,
                ny,
                row_fwd: planner.plan_fft_forward(nx),
                row_inv: planner.plan_fft_inverse(nx),
                col_fwd: planner.plan_fft_forward(ny),
                col_inv: planner.plan_fft_inverse(ny),
            })
        })
        .clone()
}

impl Fft2 {
    /// Unnormalized in-place 2D transform.
    pub(crate) fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let (nx, ny) = (self.nx, self.ny);
        if forward {
            self.row_fwd.process(buf);
        } else {
            self.row_inv.process(buf);
        }
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                t[i * ny + j] = buf[j * nx + i];
            }
        }
        if forward {
            self.col_fwd.process(&mut t);
        } else {
            self.col_inv.process(&mut t);
        }
        for j in 0..ny {
            for i in 0..nx {
                buf[j * nx + i] = t[i * ny + j];
            }
        }
    }

    /// Forward transform carrying the 1/(nx*ny) normalization.
    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, true);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Unnormalized inverse transform, returning the real part.
    pub(crate) fn inverse_real(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut coeffs, false);
        coeffs.into_iter().map(|c| c.re).collect()
    }
}

/// Cached 1D transforms of length `n`.
pub(crate) fn plan_1d(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static PLANS_1D: OnceLock<Mutex<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>>> =
        OnceLock::new();
    let cache = PLANS_1D.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}
