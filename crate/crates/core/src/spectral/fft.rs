//! Real-data 2-D FFT built from 1-D complex plans.
//!
//! Rows are transformed two at a time by packing them into one complex
//! sequence; columns are transformed only for the non-negative half of the x
//! modes and the rest is filled in by Hermitian symmetry.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par::{self, Exec};

pub(crate) struct Fft2 {
    mx: usize,
    my: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

struct Work {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Work {
    fn new(len: usize, plan: &dyn Fft<f64>) -> Self {
        Self {
            buf: vec![Complex64::default(); len],
            scratch: vec![Complex64::default(); plan.get_inplace_scratch_len()],
        }
    }
}

impl Fft2 {
    pub(crate) fn new(mx: usize, my: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            mx,
            my,
            row_fwd: planner.plan_fft_forward(mx),
            row_inv: planner.plan_fft_inverse(mx),
            col_fwd: planner.plan_fft_forward(my),
            col_inv: planner.plan_fft_inverse(my),
        }
    }

    fn half(&self) -> usize {
        self.mx / 2 + 1
    }

    /// Forward transform of real samples, scaled by 1/(mx·my) so the zero mode
    /// is the mean. `out` receives the full (Hermitian) spectrum.
    pub(crate) fn forward(&self, exec: Exec, input: &[f64], out: &mut [Complex64]) {
        let (mx, my, h) = (self.mx, self.my, self.half());
        debug_assert_eq!(input.len(), mx * my);
        debug_assert_eq!(out.len(), mx * my);
        let scale = 1.0 / (mx * my) as f64;

        // rows 2j and 2j+1 as real and imaginary parts; half spectra of both
        let mut half = vec![Complex64::default(); my * h];
        let plan = &*self.row_fwd;
        par::for_rows_with(
            exec,
            &mut half,
            2 * h,
            || Work::new(mx, plan),
            |w, j, chunk| {
                let a = &input[2 * j * mx..(2 * j + 1) * mx];
                let b = &input[(2 * j + 1) * mx..(2 * j + 2) * mx];
                for ((z, &re), &im) in w.buf.iter_mut().zip(a).zip(b) {
                    *z = Complex64::new(re, im);
                }
                plan.process_with_scratch(&mut w.buf, &mut w.scratch);
                let (ra, rb) = chunk.split_at_mut(h);
                for k in 0..h {
                    let zk = w.buf[k];
                    let zc = w.buf[(mx - k) % mx].conj();
                    ra[k] = (zk + zc) * (0.5 * scale);
                    let d = (zk - zc) * (0.5 * scale);
                    // d / i
                    rb[k] = Complex64::new(d.im, -d.re);
                }
            },
        );

        // transform the columns kx = 0..=mx/2
        let mut cols = vec![Complex64::default(); h * my];
        let plan = &*self.col_fwd;
        par::for_rows_with(
            exec,
            &mut cols,
            my,
            || Work::new(0, plan),
            |w, kx, col| {
                for (ky, c) in col.iter_mut().enumerate() {
                    *c = half[ky * h + kx];
                }
                plan.process_with_scratch(col, &mut w.scratch);
            },
        );

        par::for_rows(exec, out, mx, |ky, row| {
            for kx in 0..h {
                row[kx] = cols[kx * my + ky];
            }
            let ky_m = (my - ky) % my;
            for kx in h..mx {
                row[kx] = cols[(mx - kx) * my + ky_m].conj();
            }
        });
    }

    /// Inverse transform of a Hermitian spectrum (as produced by `forward`
    /// and real multipliers) back to real samples.
    pub(crate) fn inverse(&self, exec: Exec, spec: &[Complex64], out: &mut [f64]) {
        let (mx, my, h) = (self.mx, self.my, self.half());
        debug_assert_eq!(spec.len(), mx * my);
        debug_assert_eq!(out.len(), mx * my);

        let mut cols = vec![Complex64::default(); h * my];
        let plan = &*self.col_inv;
        par::for_rows_with(
            exec,
            &mut cols,
            my,
            || Work::new(0, plan),
            |w, kx, col| {
                for (ky, c) in col.iter_mut().enumerate() {
                    *c = spec[ky * mx + kx];
                }
                plan.process_with_scratch(col, &mut w.scratch);
            },
        );

        let plan = &*self.row_inv;
        par::for_rows_with(
            exec,
            out,
            2 * mx,
            || Work::new(mx, plan),
            |w, j, chunk| {
                let (ya, yb) = (2 * j, 2 * j + 1);
                for k in 0..h {
                    let a = cols[k * my + ya];
                    let b = cols[k * my + yb];
                    w.buf[k] = Complex64::new(a.re - b.im, a.im + b.re);
                }
                for k in h..mx {
                    let a = cols[(mx - k) * my + ya].conj();
                    let b = cols[(mx - k) * my + yb].conj();
                    w.buf[k] = Complex64::new(a.re - b.im, a.im + b.re);
                }
                plan.process_with_scratch(&mut w.buf, &mut w.scratch);
                let (ra, rb) = chunk.split_at_mut(mx);
                for ((x, y), z) in ra.iter_mut().zip(rb.iter_mut()).zip(&w.buf) {
                    *x = z.re;
                    *y = z.im;
                }
            },
        );
    }
}
