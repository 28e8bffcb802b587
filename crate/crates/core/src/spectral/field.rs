use num_complex::Complex64;

use super::{DomainMode, Grid};
use crate::error::{Error, Result};
use crate::par;

/// Real samples on the stored grid. In rectangle mode the array holds the
/// even reflection, so it is four times the physical sample count.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

/// Fourier coefficients on the stored grid, normalized so the zero mode is the
/// spatial mean.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Two-component vector field.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![c; grid.len()],
        }
    }

    /// Samples `f(x, y)` at the grid points (cell centres in rectangle mode).
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let (mx, _) = grid.comp_dims();
        let mut data = vec![0.0; grid.len()];
        par::for_rows(grid.exec(), &mut data, mx, |iy, row| {
            for (ix, v) in row.iter_mut().enumerate() {
                let (x, y) = grid.coords(ix, iy);
                *v = f(x, y);
            }
        });
        Self {
            grid: grid.clone(),
            data,
        }
    }

    /// Builds a field from `Nx·Ny` row-major physical samples.
    pub fn from_samples(grid: &Grid, samples: &[f64]) -> Result<Self> {
        let (nx, ny) = grid.resolution();
        if samples.len() != nx * ny {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                nx * ny,
                samples.len()
            )));
        }
        let data = match grid.mode() {
            DomainMode::Torus => samples.to_vec(),
            DomainMode::NeumannRect => {
                let (mx, my) = grid.comp_dims();
                let mut d = vec![0.0; mx * my];
                for iy in 0..my {
                    let sy = if iy < ny { iy } else { my - 1 - iy };
                    for ix in 0..mx {
                        let sx = if ix < nx { ix } else { mx - 1 - ix };
                        d[iy * mx + ix] = samples[sy * nx + sx];
                    }
                }
                d
            }
        };
        Ok(Self {
            grid: grid.clone(),
            data,
        })
    }

    /// Wraps an array already laid out on the stored grid.
    pub fn from_raw(grid: &Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} stored values, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            data,
        })
    }

    /// Physical `Nx·Ny` samples, row-major.
    pub fn samples(&self) -> Vec<f64> {
        match self.grid.mode() {
            DomainMode::Torus => self.data.clone(),
            DomainMode::NeumannRect => {
                let (nx, ny) = self.grid.resolution();
                let (mx, _) = self.grid.comp_dims();
                (0..ny)
                    .flat_map(|iy| self.data[iy * mx..iy * mx + nx].iter().copied())
                    .collect()
            }
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Forward transform.
    pub fn spectrum(&self) -> Spectrum {
        let mut data = vec![Complex64::default(); self.grid.len()];
        self.grid
            .fft()
            .forward(self.grid.exec(), &self.data, &mut data);
        Spectrum {
            grid: self.grid.clone(),
            data,
        }
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let mut out = self.clone();
        out.map_in_place(f);
        out
    }

    pub fn map_in_place<F>(&mut self, f: F)
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let (mx, _) = self.grid.comp_dims();
        par::for_rows(self.grid.exec(), &mut self.data, mx, |_, row| {
            for v in row.iter_mut() {
                *v = f(*v);
            }
        });
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        self.grid.check_same(&other.grid)?;
        Ok(self.zip_map_unchecked(other, f))
    }

    pub(crate) fn zip_map_unchecked<F>(&self, other: &ScalarField, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let (mx, _) = self.grid.comp_dims();
        let mut data = vec![0.0; self.data.len()];
        par::for_rows(self.grid.exec(), &mut data, mx, |iy, row| {
            let a = &self.data[iy * mx..(iy + 1) * mx];
            let b = &other.data[iy * mx..(iy + 1) * mx];
            for ((o, &x), &y) in row.iter_mut().zip(a).zip(b) {
                *o = f(x, y);
            }
        });
        Self {
            grid: self.grid.clone(),
            data,
        }
    }

    /// Quadrature of `f(value)` over the domain: |Ω|·mean.
    pub fn integrate_with<F>(&self, f: F) -> f64
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let (mx, _) = self.grid.comp_dims();
        let s = par::sum_rows(self.grid.exec(), &self.data, mx, |_, row| {
            row.iter().map(|&v| f(v)).sum()
        });
        s * self.grid.area() / self.data.len() as f64
    }

    pub fn integral(&self) -> f64 {
        self.integrate_with(|v| v)
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.area()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Spectrum {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_raw(grid: &Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            data,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.data
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Inverse transform.
    pub fn to_field(&self) -> ScalarField {
        let mut data = vec![0.0; self.grid.len()];
        self.grid
            .fft()
            .inverse(self.grid.exec(), &self.data, &mut data);
        ScalarField {
            grid: self.grid.clone(),
            data,
        }
    }

    /// Zero-mode coefficient, i.e. the spatial mean.
    pub fn mean(&self) -> f64 {
        self.data[0].re
    }

    /// Σ|ĉ|², equal to the spatial mean of f².
    pub fn power(&self) -> f64 {
        self.weighted_power(|_| 1.0)
    }

    /// Σ w(|k|²)|ĉ|².
    pub fn weighted_power<F>(&self, w: F) -> f64
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let (mx, _) = self.grid.comp_dims();
        let k2 = self.grid.k2();
        par::sum_rows(self.grid.exec(), &self.data, mx, |iy, row| {
            row.iter()
                .zip(&k2[iy * mx..(iy + 1) * mx])
                .map(|(c, &k)| w(k) * c.norm_sqr())
                .sum()
        })
    }

    /// Real part of Σ ĉ·conj(d̂): the spatial mean of f·g.
    pub fn inner(&self, other: &Spectrum) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Multiplies every coefficient by `m(index, |k|²)`.
    pub fn apply<F>(&mut self, m: F)
    where
        F: Fn(usize, f64) -> f64 + Sync + Send,
    {
        let (mx, _) = self.grid.comp_dims();
        let k2 = self.grid.k2();
        par::for_rows(self.grid.exec(), &mut self.data, mx, |iy, row| {
            for (ix, c) in row.iter_mut().enumerate() {
                let i = iy * mx + ix;
                *c *= m(i, k2[i]);
            }
        });
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.data {
            *c *= s;
        }
    }

    /// self += a·other
    pub fn axpy(&mut self, a: f64, other: &Spectrum) {
        for (c, o) in self.data.iter_mut().zip(&other.data) {
            *c += o * a;
        }
    }

    /// Cosine-series coefficients a_jl with f = Σ a_jl cos(πjx/Lx)cos(πly/Ly),
    /// `Nx·Ny` row-major (rectangle mode only).
    pub fn cosine_coefficients(&self) -> Result<Vec<f64>> {
        if self.grid.mode() != DomainMode::NeumannRect {
            return Err(Error::UnsupportedMode(
                "cosine coefficients need the Neumann rectangle".into(),
            ));
        }
        let (nx, ny) = self.grid.resolution();
        let (mx, my) = self.grid.comp_dims();
        let mut out = vec![0.0; nx * ny];
        for l in 0..ny {
            for j in 0..nx {
                let ph = -std::f64::consts::PI * (j as f64 / mx as f64 + l as f64 / my as f64);
                let c = self.data[l * mx + j] * Complex64::from_polar(1.0, ph);
                let w = if j == 0 { 1.0 } else { 2.0 } * if l == 0 { 1.0 } else { 2.0 };
                out[l * nx + j] = w * c.re;
            }
        }
        Ok(out)
    }
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.grid.check_same(&y.grid)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn<F, G>(grid: &Grid, fx: F, fy: G) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
        G: Fn(f64, f64) -> f64 + Sync + Send,
    {
        Self {
            x: ScalarField::from_fn(grid, fx),
            y: ScalarField::from_fn(grid, fy),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn spectra(&self) -> (Spectrum, Spectrum) {
        (self.x.spectrum(), self.y.spectrum())
    }

    pub fn from_spectra(sx: &Spectrum, sy: &Spectrum) -> Self {
        Self {
            x: sx.to_field(),
            y: sy.to_field(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DomainMode;
    use std::f64::consts::PI;

    #[test]
    fn constant_lands_in_zero_mode() {
        let g = Grid::new(DomainMode::Torus, (2.0, 3.0), (16, 8)).unwrap();
        let s = ScalarField::constant(&g, 2.5).spectrum();
        assert!((s.coeffs()[0].re - 2.5).abs() < 1e-15);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn single_mode_is_one_pair() {
        let g = Grid::new(DomainMode::Torus, (1.0, 1.0), (16, 16)).unwrap();
        let s = ScalarField::from_fn(&g, |x, _| (2.0 * PI * x).cos()).spectrum();
        let nonzero: Vec<usize> = (0..g.len()).filter(|&i| s.coeffs()[i].norm() > 1e-14).collect();
        assert_eq!(nonzero, vec![1, 15]);
        assert!((s.coeffs()[1].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rectangle_cosine_mode() {
        let g = Grid::new(DomainMode::NeumannRect, (1.0, 2.0), (8, 8)).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| 3.0 * (PI * x).cos() * (PI * y / 2.0).cos() + 0.5);
        let a = f.spectrum().cosine_coefficients().unwrap();
        for (i, &v) in a.iter().enumerate() {
            let expect = match i {
                0 => 0.5,
                9 => 3.0,
                _ => 0.0,
            };
            assert!((v - expect).abs() < 1e-13, "coefficient {i}: {v}");
        }
    }

    #[test]
    fn samples_round_trip_through_reflection() {
        let g = Grid::new(DomainMode::NeumannRect, (1.0, 1.0), (8, 8)).unwrap();
        let s: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let f = ScalarField::from_samples(&g, &s).unwrap();
        assert_eq!(f.samples(), s);
        assert_eq!(f.data()[15], f.data()[0]);
    }
}
