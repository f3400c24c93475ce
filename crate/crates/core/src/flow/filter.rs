//! Azimuthal Fourier filter for the rows near the poles of a radial graph.
//!
//! Longitude circles shrink like `sin θ`, so unfiltered explicit steps would
//! be limited by the shortest azimuthal spacing. Row `i` keeps the Fourier
//! modes `m ≤ M_i`, where `M_i` is the largest mode whose effective spacing
//! `chord / sin(M_i Δφ / 2)` is not below the grid spacing `min(Δθ, Δφ)`.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;
use std::sync::Arc;

pub(crate) struct PolarFilter {
    n_theta: usize,
    n_phi: usize,
    keep: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static CACHE: RefCell<HashMap<(usize, usize), Rc<PolarFilter>>> = RefCell::new(HashMap::new());
}

/// Cached filter for an `n_theta × n_phi` grid.
pub(crate) fn polar_filter(n_theta: usize, n_phi: usize) -> Rc<PolarFilter> {
    CACHE.with(|c| {
        c.borrow_mut()
            .entry((n_theta, n_phi))
            .or_insert_with(|| Rc::new(PolarFilter::new(n_theta, n_phi)))
            .clone()
    })
}

impl PolarFilter {
    fn new(n_theta: usize, n_phi: usize) -> Self {
        let dth = PI / (n_theta - 1) as f64;
        let dph = 2.0 * PI / n_phi as f64;
        let h = dth.min(dph);
        let half = n_phi / 2;
        let keep = (0..n_theta)
            .map(|i| {
                let bound = (i as f64 * dth).sin() * dph / h;
                if bound >= 1.0 {
                    half
                } else {
                    ((2.0 * bound.asin() / dph).floor() as usize).min(half)
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        PolarFilter {
            n_theta,
            n_phi,
            keep,
            forward: planner.plan_fft_forward(n_phi),
            inverse: planner.plan_fft_inverse(n_phi),
        }
    }

    /// Highest retained azimuthal mode of row `i`.
    #[cfg(test)]
    pub fn kept_mode(&self, i: usize) -> usize {
        self.keep[i]
    }

    /// `sin(M_i Δφ / 2)`; the row's effective azimuthal spacing is the chord
    /// divided by this (infinite when only the mean survives).
    pub fn spacing_factor(&self, i: usize) -> f64 {
        let dph = 2.0 * PI / self.n_phi as f64;
        (self.keep[i] as f64 * dph / 2.0).sin().min(1.0)
    }

    /// Remove the unresolvable modes from every filtered interior row of `field`.
    pub fn apply(&self, field: &mut [f64]) {
        let np = self.n_phi;
        let half = np / 2;
        let mut buf = vec![Complex::new(0.0, 0.0); np];
        for i in 1..self.n_theta - 1 {
            let m = self.keep[i];
            if m >= half {
                continue;
            }
            let row = &mut field[i * np..(i + 1) * np];
            for (b, x) in buf.iter_mut().zip(row.iter()) {
                *b = Complex::new(*x, 0.0);
            }
            self.forward.process(&mut buf);
            for b in &mut buf[m + 1..np - m] {
                *b = Complex::new(0.0, 0.0);
            }
            self.inverse.process(&mut buf);
            for (x, b) in row.iter_mut().zip(&buf) {
                *x = b.re / np as f64;
            }
        }
    }
}
