//! Periodic box `[-L, L)^d` with `n` points per axis and its FFT plans.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{FnlsError, Result};

/// Arrays at or above this length are transformed in parallel.
const PARALLEL_THRESHOLD: usize = 1 << 14;

pub struct Grid {
    dim: usize,
    n: usize,
    half_length: f64,
    len: usize,
    coords: Vec<f64>,
    freqs: Vec<f64>,
    xi_sq: Vec<f64>,
    /// `(-1)^(i_1 + ... + i_d) / N`, shifts FFT output to coefficients relative to `x = -L`.
    forward_phase: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("half_length", &self.half_length)
            .finish()
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(FnlsError::domain(format!("dimension {dim} not in 1..=3")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(FnlsError::domain(format!(
                "points per axis must be a power of two >= 16, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(FnlsError::domain(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        let len = n.pow(dim as u32);
        let h = 2.0 * half_length / n as f64;
        let coords: Vec<f64> = (0..n).map(|j| -half_length + h * j as f64).collect();
        let freqs: Vec<f64> = (0..n)
            .map(|i| {
                let k = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                std::f64::consts::PI * k / half_length
            })
            .collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let mut grid = Grid {
            dim,
            n,
            half_length,
            len,
            coords,
            freqs,
            xi_sq: Vec::new(),
            forward_phase: Vec::new(),
            forward,
            inverse,
        };
        let inv_len = 1.0 / len as f64;
        grid.xi_sq = (0..len)
            .map(|flat| {
                let idx = grid.multi_index(flat);
                idx[..dim].iter().map(|&i| grid.freqs[i].powi(2)).sum()
            })
            .collect();
        grid.forward_phase = (0..len)
            .map(|flat| {
                let parity: usize = grid.multi_index(flat)[..dim].iter().sum();
                if parity.is_multiple_of(2) {
                    inv_len
                } else {
                    -inv_len
                }
            })
            .collect();
        Ok(Arc::new(grid))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume of the box, `(2L)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Largest resolved wavenumber `pi n / (2L)`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / (2.0 * self.half_length)
    }

    /// One-dimensional coordinates `x_j = -L + j h`.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// One-dimensional wavenumbers in FFT order.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// `|xi|^2` at every flat spectral index.
    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_length == other.half_length
    }

    /// Row-major multi-index; unused trailing entries are zero.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        idx[..self.dim].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coords[idx[axis]];
        }
        x
    }

    pub fn radius(&self, flat: usize) -> f64 {
        let x = self.position(flat);
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Wavevector component `xi_axis` at a flat spectral index.
    pub fn xi_component(&self, flat: usize, axis: usize) -> f64 {
        self.freqs[self.multi_index(flat)[axis]]
    }

    /// Index of `-x` for the point at `flat` (periodic reflection through the origin on one axis).
    pub(crate) fn reflect_axis(&self, flat: usize, axis: usize) -> usize {
        let mut idx = self.multi_index(flat);
        idx[axis] = (self.n - idx[axis]) % self.n;
        self.flat_index(idx)
    }

    /// Index with two axes exchanged.
    pub(crate) fn swap_axes(&self, flat: usize, a: usize, b: usize) -> usize {
        let mut idx = self.multi_index(flat);
        idx.swap(a, b);
        self.flat_index(idx)
    }

    /// Physical values to coefficients `c_k` with `u(x) = sum_k c_k exp(i xi_k . x)`.
    pub(crate) fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform_all_axes(data, &self.forward);
        for (c, p) in data.iter_mut().zip(&self.forward_phase) {
            *c *= *p;
        }
    }

    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        let scale = self.len as f64;
        for (c, p) in data.iter_mut().zip(&self.forward_phase) {
            *c *= *p * scale;
        }
        self.transform_all_axes(data, &self.inverse);
    }

    fn transform_all_axes(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len);
        for axis in 0..self.dim {
            self.transform_axis(data, axis, fft);
        }
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let inner = n.pow((self.dim - 1 - axis) as u32);
        let parallel = self.len >= PARALLEL_THRESHOLD;
        if inner == 1 {
            run_lines(data, n, fft, parallel);
            return;
        }
        let block = n * inner;
        let mut scratch = vec![Complex64::new(0.0, 0.0); block];
        for chunk in data.chunks_mut(block) {
            // chunk is laid out [n][inner]; gather columns into rows of length n
            for (j, row) in chunk.chunks(inner).enumerate() {
                for (c, v) in row.iter().enumerate() {
                    scratch[c * n + j] = *v;
                }
            }
            run_lines(&mut scratch, n, fft, parallel);
            for (j, row) in chunk.chunks_mut(inner).enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = scratch[c * n + j];
                }
            }
        }
    }
}

fn run_lines(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>, parallel: bool) {
    if parallel {
        let lines = data.len() / n;
        let per_task = (lines / (4 * rayon::current_num_threads())).max(1);
        data.par_chunks_mut(n * per_task)
            .for_each(|chunk| fft.process(chunk));
    } else {
        fft.process(data);
    }
}
