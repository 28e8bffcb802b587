use super::{ScalarField, Spectrum, VectorField};
use crate::error::{Error, Result};

/// Scalar norms and functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1,
    Linf,
    Mean,
    /// (H¹)' norm through the (I − Δ)^{-1/2} multiplier.
    DualH1,
}

/// Relative tolerance on |k·û| for the solenoidal check of `dual_stokes`.
const SOLENOIDAL_TOL: f64 = 1e-9;

impl ScalarField {
    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Linf => self.data().iter().fold(0.0, |m, v| m.max(v.abs())),
            NormKind::Mean => self.mean(),
            NormKind::L2 => self.integrate_with(|v| v * v).sqrt(),
            _ => self.spectrum().norm(kind),
        }
    }
}

impl Spectrum {
    /// Norms computed from the coefficients (Linf goes through the inverse
    /// transform).
    pub fn norm(&self, kind: NormKind) -> f64 {
        let area = self.grid().area();
        match kind {
            NormKind::L2 => (area * self.power()).sqrt(),
            NormKind::H1 => (area * self.weighted_power(|k2| 1.0 + k2)).sqrt(),
            NormKind::DualH1 => (area * self.weighted_power(|k2| 1.0 / (1.0 + k2))).sqrt(),
            NormKind::Mean => self.mean(),
            NormKind::Linf => self.to_field().norm(NormKind::Linf),
        }
    }

    /// ‖∇f‖
    pub fn grad_norm(&self) -> f64 {
        (self.grid().area() * self.weighted_power(|k2| k2)).sqrt()
    }

    /// ‖∇N f‖ = ‖f − f̄‖_{V₀⁻¹} with N the zero-mean inverse Laplacian.
    pub fn dual_v0_norm(&self) -> f64 {
        (self.grid().area() * self.weighted_power(|k2| if k2 > 0.0 { 1.0 / k2 } else { 0.0 })).sqrt()
    }
}

impl VectorField {
    pub fn l2_norm(&self) -> f64 {
        (self.x.norm(NormKind::L2).powi(2) + self.y.norm(NormKind::L2).powi(2)).sqrt()
    }

    /// ‖∇S⁻¹u‖ = ‖|k|⁻¹û‖ over nonzero modes of a solenoidal field (torus only).
    pub fn dual_stokes(&self) -> Result<f64> {
        let grid = self.grid().clone();
        grid.require_torus("dual Stokes norm")?;
        let (sx, sy) = self.spectra();
        let (mx, my) = grid.comp_dims();
        let (kx, ky) = (grid.kx_d(), grid.ky_d());
        let (a, b) = (sx.coeffs(), sy.coeffs());
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        let mut sum = 0.0;
        for iy in 0..my {
            for ix in 0..mx {
                let i = iy * mx + ix;
                let k2 = grid.k2()[i];
                let amp = (a[i].norm_sqr() + b[i].norm_sqr()).sqrt();
                scale = scale.max(amp * k2.sqrt());
                worst = worst.max((a[i] * kx[ix] + b[i] * ky[iy]).norm());
                if k2 > 0.0 {
                    sum += (a[i].norm_sqr() + b[i].norm_sqr()) / k2;
                }
            }
        }
        if worst > SOLENOIDAL_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Precondition(format!(
                "dual Stokes norm of a field with divergence {worst:e}"
            )));
        }
        Ok((grid.area() * sum).sqrt())
    }
}
