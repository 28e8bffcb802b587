//! Pseudo-spectral discretization on a doubly periodic torus or a Neumann
//! rectangle.
//!
//! The rectangle is handled through its even reflection: a field on
//! `[0, Lx] × [0, Ly]` sampled at cell centres is stored as its mirror image on
//! the `2Lx × 2Ly` torus, so the Fourier modes that survive are exactly the
//! cosine eigenfunctions of the Neumann Laplacian and every torus operator
//! applies unchanged.

mod fft;
mod field;
mod norms;
mod ops;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par::Exec;

pub use field::{ScalarField, Spectrum, VectorField};
pub use norms::NormKind;
pub use ops::{div, leray};
pub(crate) use ops::{div_any, leray_any};

use fft::Fft2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMode {
    /// Doubly periodic `[0, Lx) × [0, Ly)`, full coupled system.
    Torus,
    /// `[0, Lx] × [0, Ly]` with homogeneous Neumann data, fluid-free only.
    NeumannRect,
}

impl DomainMode {
    pub fn name(self) -> &'static str {
        match self {
            DomainMode::Torus => "torus",
            DomainMode::NeumannRect => "neumann_rect",
        }
    }
}

impl fmt::Display for DomainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Immutable grid descriptor with cached FFT plans and multiplier tables.
/// Cloning is cheap.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    mode: DomainMode,
    extent: (f64, f64),
    resolution: (usize, usize),
    /// computational (possibly doubled) dimensions
    mx: usize,
    my: usize,
    /// signed mode index per axis, FFT order
    nx_idx: Vec<i64>,
    ny_idx: Vec<i64>,
    /// wavenumbers per axis (full, used for the Laplacian)
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// wavenumbers for first derivatives, Nyquist entry zeroed
    kx_d: Vec<f64>,
    ky_d: Vec<f64>,
    /// |k|² per mode, row-major
    k2: Vec<f64>,
    /// squared radial mode index per mode
    n2: Vec<f64>,
    /// 2/3-rule mask per mode
    mask: Vec<bool>,
    exec: Exec,
    fft: Fft2,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("mode", &self.mode())
            .field("extent", &self.extent())
            .field("resolution", &self.resolution())
            .field("exec", &self.exec())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.mode() == other.mode()
                && self.extent() == other.extent()
                && self.resolution() == other.resolution())
    }
}

fn axis_tables(m: usize, period: f64) -> (Vec<i64>, Vec<f64>, Vec<f64>) {
    let idx: Vec<i64> = (0..m)
        .map(|i| if i < m / 2 { i as i64 } else { i as i64 - m as i64 })
        .collect();
    let k: Vec<f64> = idx.iter().map(|&n| 2.0 * PI * n as f64 / period).collect();
    let mut kd = k.clone();
    kd[m / 2] = 0.0;
    (idx, k, kd)
}

impl Grid {
    /// Builds a grid with the default (parallel) execution policy.
    pub fn new(mode: DomainMode, extent: (f64, f64), resolution: (usize, usize)) -> Result<Self> {
        Self::with_exec(mode, extent, resolution, Exec::default())
    }

    pub fn with_exec(
        mode: DomainMode,
        extent: (f64, f64),
        resolution: (usize, usize),
        exec: Exec,
    ) -> Result<Self> {
        let (lx, ly) = extent;
        let (nx, ny) = resolution;
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Parameter(format!(
                "grid extent must be positive, got ({lx}, {ly})"
            )));
        }
        for n in [nx, ny] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::Parameter(format!(
                    "grid resolution must be even and >= 8, got {n}"
                )));
            }
        }
        let (mx, my, px, py) = match mode {
            DomainMode::Torus => (nx, ny, lx, ly),
            DomainMode::NeumannRect => (2 * nx, 2 * ny, 2.0 * lx, 2.0 * ly),
        };
        let (nx_idx, kx, kx_d) = axis_tables(mx, px);
        let (ny_idx, ky, ky_d) = axis_tables(my, py);
        let mut k2 = Vec::with_capacity(mx * my);
        let mut n2 = Vec::with_capacity(mx * my);
        let mut mask = Vec::with_capacity(mx * my);
        let (cx, cy) = (mx as f64 / 3.0, my as f64 / 3.0);
        for iy in 0..my {
            for ix in 0..mx {
                k2.push(kx[ix] * kx[ix] + ky[iy] * ky[iy]);
                let (a, b) = (nx_idx[ix], ny_idx[iy]);
                n2.push((a * a + b * b) as f64);
                let keep = (a as f64).abs() <= cx
                    && (b as f64).abs() <= cy
                    && ix != mx / 2
                    && iy != my / 2;
                mask.push(keep);
            }
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                mode,
                extent,
                resolution,
                mx,
                my,
                nx_idx,
                ny_idx,
                kx,
                ky,
                kx_d,
                ky_d,
                k2,
                n2,
                mask,
                exec,
                fft: Fft2::new(mx, my),
            }),
        })
    }

    /// Same grid with a different execution policy; plans are rebuilt.
    pub fn exec_as(&self, exec: Exec) -> Self {
        Self::with_exec(self.mode(), self.extent(), self.resolution(), exec)
            .expect("grid parameters already validated")
    }

    pub fn mode(&self) -> DomainMode {
        self.inner.mode
    }

    pub fn extent(&self) -> (f64, f64) {
        self.inner.extent
    }

    /// Number of physical sample points per axis.
    pub fn resolution(&self) -> (usize, usize) {
        self.inner.resolution
    }

    /// Dimensions of the stored arrays (doubled in rectangle mode).
    pub fn comp_dims(&self) -> (usize, usize) {
        (self.inner.mx, self.inner.my)
    }

    /// Length of the stored arrays.
    pub fn len(&self) -> usize {
        self.inner.mx * self.inner.my
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn exec(&self) -> Exec {
        self.inner.exec
    }

    /// |Ω|
    pub fn area(&self) -> f64 {
        self.inner.extent.0 * self.inner.extent.1
    }

    pub fn spacing(&self) -> (f64, f64) {
        let (lx, ly) = self.extent();
        let (nx, ny) = self.resolution();
        (lx / nx as f64, ly / ny as f64)
    }

    /// Physical coordinate of stored column `ix` (row `iy`). In rectangle mode
    /// the reflected copy maps back into `[0, L]`.
    pub fn coords(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (hx, hy) = self.spacing();
        match self.mode() {
            DomainMode::Torus => (ix as f64 * hx, iy as f64 * hy),
            DomainMode::NeumannRect => {
                let (mx, my) = self.comp_dims();
                let fold = |i: usize, m: usize| if i < m / 2 { i } else { m - 1 - i };
                (
                    (fold(ix, mx) as f64 + 0.5) * hx,
                    (fold(iy, my) as f64 + 0.5) * hy,
                )
            }
        }
    }

    /// Wavenumbers along x in FFT order (length `comp_dims().0`).
    pub fn kx(&self) -> &[f64] {
        &self.inner.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.inner.ky
    }

    /// Signed mode indices along x in FFT order.
    pub fn mode_index_x(&self) -> &[i64] {
        &self.inner.nx_idx
    }

    pub fn mode_index_y(&self) -> &[i64] {
        &self.inner.ny_idx
    }

    /// |k|² per stored mode.
    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }

    /// 2/3-rule mask per stored mode.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.inner.mask
    }

    /// Largest represented wavenumber per axis: πN/L on the torus, π(N−1)/L
    /// for the cosine basis.
    pub fn k_max(&self) -> (f64, f64) {
        let (lx, ly) = self.extent();
        let (nx, ny) = self.resolution();
        match self.mode() {
            DomainMode::Torus => (PI * nx as f64 / lx, PI * ny as f64 / ly),
            DomainMode::NeumannRect => (PI * (nx - 1) as f64 / lx, PI * (ny - 1) as f64 / ly),
        }
    }

    /// Largest admissible radial cutoff (in mode-index units): strictly below
    /// a third of the smaller computational dimension, so that products of
    /// three truncated fields are resolved exactly.
    pub fn max_cutoff(&self) -> f64 {
        let m = self.inner.mx.min(self.inner.my);
        ((m as f64 / 3.0).ceil() - 1.0).max(1.0)
    }

    /// Default radial cutoff, equal to [`Grid::max_cutoff`].
    pub fn default_cutoff(&self) -> f64 {
        self.max_cutoff()
    }

    pub(crate) fn n2(&self) -> &[f64] {
        &self.inner.n2
    }

    pub(crate) fn kx_d(&self) -> &[f64] {
        &self.inner.kx_d
    }

    pub(crate) fn ky_d(&self) -> &[f64] {
        &self.inner.ky_d
    }

    pub(crate) fn fft(&self) -> &Fft2 {
        &self.inner.fft
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!("grid mismatch: {self:?} vs {other:?}")))
        }
    }

    pub(crate) fn require_torus(&self, what: &str) -> Result<()> {
        match self.mode() {
            DomainMode::Torus => Ok(()),
            DomainMode::NeumannRect => Err(Error::UnsupportedMode(format!(
                "{what} is only available on the periodic torus"
            ))),
        }
    }
}
