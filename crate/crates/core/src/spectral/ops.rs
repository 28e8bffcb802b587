use num_complex::Complex64;

use super::{Grid, ScalarField, Spectrum, VectorField};
use crate::error::Result;
use crate::par;

fn times_ik(c: Complex64, k: f64) -> Complex64 {
    Complex64::new(-k * c.im, k * c.re)
}

impl Spectrum {
    pub fn laplacian(&self) -> Spectrum {
        let mut out = self.clone();
        out.apply(|_, k2| -k2);
        out
    }

    pub fn bilaplacian(&self) -> Spectrum {
        let mut out = self.clone();
        out.apply(|_, k2| k2 * k2);
        out
    }

    /// Solves −Δu = f − mean(f) with mean(u) = 0.
    pub fn inv_laplacian_zero_mean(&self) -> Spectrum {
        let mut out = self.clone();
        out.apply(|i, k2| if i == 0 { 0.0 } else { 1.0 / k2 });
        out
    }

    pub(crate) fn dx_any(&self) -> Spectrum {
        self.directional(true)
    }

    pub(crate) fn dy_any(&self) -> Spectrum {
        self.directional(false)
    }

    fn directional(&self, along_x: bool) -> Spectrum {
        let grid = self.grid().clone();
        let (mx, _) = grid.comp_dims();
        let (kx, ky) = (grid.kx_d(), grid.ky_d());
        let mut out = self.clone();
        par::for_rows(grid.exec(), out.coeffs_mut(), mx, |iy, row| {
            for (ix, c) in row.iter_mut().enumerate() {
                *c = times_ik(*c, if along_x { kx[ix] } else { ky[iy] });
            }
        });
        out
    }

    pub(crate) fn grad_any(&self) -> (Spectrum, Spectrum) {
        (self.dx_any(), self.dy_any())
    }

    /// Spectral gradient (torus only; in rectangle mode the components are
    /// sine series and are only exposed through composite operators).
    pub fn grad(&self) -> Result<(Spectrum, Spectrum)> {
        self.grid().require_torus("raw gradient")?;
        Ok(self.grad_any())
    }

    /// Zeroes the modes outside the 2/3-rule mask.
    pub fn dealias(&self) -> Spectrum {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let grid = self.grid().clone();
        let mask = grid.dealias_mask();
        self.apply(|i, _| if mask[i] { 1.0 } else { 0.0 });
    }

    /// Galerkin truncation: zeroes every mode whose radial index exceeds `k`.
    pub fn truncate(&self, k: f64) -> Spectrum {
        let mut out = self.clone();
        out.truncate_in_place(k);
        out
    }

    pub fn truncate_in_place(&mut self, k: f64) {
        let grid = self.grid().clone();
        let n2 = grid.n2();
        let mask = grid.dealias_mask();
        let kk = k * k;
        self.apply(|i, _| if mask[i] && n2[i] <= kk { 1.0 } else { 0.0 });
    }
}

/// div(u) from the spectra of the components (torus only).
pub fn div(sx: &Spectrum, sy: &Spectrum) -> Result<Spectrum> {
    sx.grid().require_torus("raw divergence")?;
    sx.grid().check_same(sy.grid())?;
    Ok(div_any(sx, sy))
}

pub(crate) fn div_any(sx: &Spectrum, sy: &Spectrum) -> Spectrum {
    let mut out = sx.dx_any();
    out.axpy(1.0, &sy.dy_any());
    out
}

/// Leray projection (I − kkᵀ/|k|²) applied mode by mode; the zero mode is left
/// untouched.
pub fn leray(sx: &Spectrum, sy: &Spectrum) -> Result<(Spectrum, Spectrum)> {
    let grid = sx.grid().clone();
    grid.require_torus("Leray projection")?;
    grid.check_same(sy.grid())?;
    Ok(leray_any(&grid, sx, sy))
}

pub(crate) fn leray_any(grid: &Grid, sx: &Spectrum, sy: &Spectrum) -> (Spectrum, Spectrum) {
    let (mx, _) = grid.comp_dims();
    let (kx, ky) = (grid.kx_d(), grid.ky_d());
    let mut ox = sx.clone();
    let mut oy = sy.clone();
    let (a, b) = (ox.coeffs_mut(), oy.coeffs_mut());
    for iy in 0..grid.comp_dims().1 {
        for ix in 0..mx {
            let i = iy * mx + ix;
            let (p, q) = (kx[ix], ky[iy]);
            let k2 = p * p + q * q;
            if k2 == 0.0 {
                continue;
            }
            let dot = (a[i] * p + b[i] * q) / k2;
            a[i] -= dot * p;
            b[i] -= dot * q;
        }
    }
    (ox, oy)
}

impl ScalarField {
    pub fn laplacian(&self) -> ScalarField {
        self.spectrum().laplacian().to_field()
    }

    pub fn bilaplacian(&self) -> ScalarField {
        self.spectrum().bilaplacian().to_field()
    }

    pub fn inv_laplacian_zero_mean(&self) -> ScalarField {
        self.spectrum().inv_laplacian_zero_mean().to_field()
    }

    pub fn dealias(&self) -> ScalarField {
        self.spectrum().dealias().to_field()
    }

    pub fn truncate(&self, k: f64) -> ScalarField {
        self.spectrum().truncate(k).to_field()
    }

    pub fn grad(&self) -> Result<VectorField> {
        let (sx, sy) = self.spectrum().grad()?;
        Ok(VectorField::from_spectra(&sx, &sy))
    }

    pub(crate) fn grad_any(&self) -> VectorField {
        let (sx, sy) = self.spectrum().grad_any();
        VectorField::from_spectra(&sx, &sy)
    }

    /// |∇f|², available in every domain mode.
    pub fn grad_norm_sq(&self) -> ScalarField {
        let g = self.grad_any();
        g.x.zip_map_unchecked(&g.y, |a, b| a * a + b * b)
    }

    /// div(w∇f) with `self` as the weight w, available in every domain mode.
    /// The product is formed pointwise; the result is not dealiased.
    pub fn div_weighted_grad(&self, f: &Spectrum) -> Result<Spectrum> {
        self.grid().check_same(f.grid())?;
        let (gx, gy) = f.grad_any();
        let (gx, gy) = (gx.to_field(), gy.to_field());
        let wx = self.zip_map_unchecked(&gx, |w, d| w * d);
        let wy = self.zip_map_unchecked(&gy, |w, d| w * d);
        Ok(div_any(&wx.spectrum(), &wy.spectrum()))
    }
}

impl VectorField {
    pub fn divergence(&self) -> Result<ScalarField> {
        let (sx, sy) = self.spectra();
        Ok(div(&sx, &sy)?.to_field())
    }

    pub fn leray_project(&self) -> Result<VectorField> {
        let (sx, sy) = self.spectra();
        let (px, py) = leray(&sx, &sy)?;
        Ok(VectorField::from_spectra(&px, &py))
    }
}
