//! Admissible initial data: elliptic smoothing of φ₀, heat mollification of
//! σ₀, Leray projection of v₀ and Galerkin truncation, plus a few generators.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::project_velocity;
use crate::error::{Error, Result};
use crate::spectral::{DomainMode, Grid, NormKind, ScalarField, VectorField};

/// Slack allowed on the discrete maximum principle of the smoothing.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;
/// Mollified values in `[-MOLLIFY_TOL, 0)` are set to zero.
pub const MOLLIFY_TOL: f64 = 1e-12;

/// Solves (I − γΔ)φ₀,γ = (1 − γ)φ₀ spectrally.
pub fn elliptic_smooth_phi0(phi0: &ScalarField, gamma: f64) -> Result<ScalarField> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::Parameter(format!(
            "smoothing parameter gamma must lie in (0, 1/2], got {gamma}"
        )));
    }
    let mut s = phi0.spectrum();
    s.apply(|_, k2| (1.0 - gamma) / (1.0 + gamma * k2));
    Ok(s.to_field())
}

/// Heat-semigroup smoothing σ̂₀,n = e^{−|k|²/n} σ̂₀.
pub fn mollify_sigma0(sigma0: &ScalarField, n: u32) -> Result<ScalarField> {
    if n == 0 {
        return Err(Error::Parameter("mollification index must be positive".into()));
    }
    let lo = sigma0.min();
    if lo < -MOLLIFY_TOL {
        return Err(Error::Data(format!("sigma0 has negative value {lo:e}")));
    }
    let mut s = sigma0.spectrum();
    let n = n as f64;
    s.apply(|_, k2| (-k2 / n).exp());
    let mut out = s.to_field();
    let lo = out.min();
    if lo < -MOLLIFY_TOL {
        return Err(Error::Data(format!(
            "mollified sigma0 dips to {lo:e}; increase the smoothing (lower n)"
        )));
    }
    out.map_in_place(|v| v.max(0.0));
    Ok(out)
}

/// Zeroes every coefficient with radial mode index above `k`.
pub fn galerkin_truncate(f: &ScalarField, k: f64) -> ScalarField {
    f.truncate(k)
}

pub fn galerkin_truncate_vector(v: &VectorField, k: f64) -> VectorField {
    VectorField {
        x: v.x.truncate(k),
        y: v.y.truncate(k),
    }
}

/// Raw initial data before preparation.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub v0: Option<VectorField>,
    pub phi0: ScalarField,
    pub sigma0: ScalarField,
    /// Smoothing parameter γ ∈ (0, 1/2].
    pub gamma: f64,
    /// Mollification index n.
    pub n_mollify: u32,
}

/// Prepared data, ready for time stepping.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub v: Option<VectorField>,
    pub phi: ScalarField,
    pub sigma: ScalarField,
    /// Mode cutoff actually used (raised if the L∞ check demanded it).
    pub cutoff: f64,
    /// max(‖φ₀,γ‖∞ − (1 − γ), 0) on the grid before truncation.
    pub max_principle_excess: f64,
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let grid = self.phi0.grid();
        grid.check_same(self.sigma0.grid())?;
        if let Some(v) = &self.v0 {
            grid.check_same(v.grid())?;
            grid.require_torus("initial velocity")?;
        }
        let linf = self.phi0.norm(NormKind::Linf);
        if linf > 1.0 + 1e-12 {
            return Err(Error::Data(format!("|phi0| must be <= 1, got {linf}")));
        }
        let mean = self.phi0.mean();
        if !(mean.abs() < 1.0) {
            return Err(Error::Data(format!("|mean(phi0)| must be < 1, got {mean}")));
        }
        let lo = self.sigma0.min();
        if lo < -MOLLIFY_TOL {
            return Err(Error::Data(format!("sigma0 must be >= 0, min is {lo:e}")));
        }
        if !(self.gamma > 0.0 && self.gamma <= 0.5) {
            return Err(Error::Parameter(format!(
                "smoothing parameter gamma must lie in (0, 1/2], got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Smooths, mollifies, projects and truncates. The cutoff starts at `cutoff`
    /// and is raised (up to the grid maximum) until ‖P_K φ₀,γ‖∞ ≤ 1 − γ/2.
    pub fn prepare(&self, cutoff: f64) -> Result<Prepared> {
        self.validate()?;
        let grid = self.phi0.grid().clone();
        let smooth = elliptic_smooth_phi0(&self.phi0, self.gamma)?;
        let excess = (smooth.norm(NormKind::Linf) - (1.0 - self.gamma)).max(0.0);
        let bound = 1.0 - 0.5 * self.gamma;
        let kmax = grid.max_cutoff();
        let mut k = cutoff.min(kmax);
        let phi = loop {
            let t = galerkin_truncate(&smooth, k);
            if t.norm(NormKind::Linf) <= bound {
                break t;
            }
            if k >= kmax {
                return Err(Error::Data(format!(
                    "truncated phi0 exceeds 1 - gamma/2 = {bound} even at the largest cutoff {kmax}"
                )));
            }
            k = (k + 1.0).min(kmax);
        };
        let sigma = galerkin_truncate(&mollify_sigma0(&self.sigma0, self.n_mollify)?, k);
        let v = match &self.v0 {
            Some(v) => Some(galerkin_truncate_vector(&project_velocity(v)?, k)),
            None => None,
        };
        Ok(Prepared {
            v,
            phi,
            sigma,
            cutoff: k,
            max_principle_excess: excess,
        })
    }
}

/// Random band-limited field with the given mean, max deviation `amplitude`
/// and modes of radial index ≤ `band`.
pub fn random_mixture(grid: &Grid, mean: f64, amplitude: f64, band: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, ny) = grid.resolution();
    let noise: Vec<f64> = (0..nx * ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let raw = ScalarField::from_samples(grid, &noise).expect("sample count matches grid");
    let mut s = raw.spectrum().truncate(band);
    s.coeffs_mut()[0] = Default::default();
    let f = s.to_field();
    let peak = f.norm(NormKind::Linf);
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    f.map(|v| mean + scale * v)
}

/// Two tanh interfaces at x = L/4 and 3L/4: `amplitude` inside, −`amplitude`
/// outside (for a width small against L).
pub fn stripe(grid: &Grid, amplitude: f64, width: f64) -> ScalarField {
    let (lx, _) = grid.extent();
    ScalarField::from_fn(grid, |x, _| {
        amplitude * (((x - 0.25 * lx) / width).tanh() - ((x - 0.75 * lx) / width).tanh() - 1.0)
    })
}

fn centred_distance(grid: &Grid, x: f64, y: f64) -> f64 {
    let (lx, ly) = grid.extent();
    let (mut dx, mut dy) = (x - 0.5 * lx, y - 0.5 * ly);
    if grid.mode() == DomainMode::Torus {
        dx -= lx * (dx / lx).round();
        dy -= ly * (dy / ly).round();
    }
    (dx * dx + dy * dy).sqrt()
}

/// Circular droplet of radius `radius` at the centre: `amplitude` inside,
/// −`amplitude` outside.
pub fn droplet(grid: &Grid, amplitude: f64, radius: f64, width: f64) -> ScalarField {
    let g = grid.clone();
    ScalarField::from_fn(grid, move |x, y| {
        amplitude * ((radius - centred_distance(&g, x, y)) / width).tanh()
    })
}

/// background + amplitude·exp(−r²/(2w²)) around the centre.
pub fn gaussian_blob(grid: &Grid, amplitude: f64, width: f64, background: f64) -> ScalarField {
    let g = grid.clone();
    ScalarField::from_fn(grid, move |x, y| {
        let r = centred_distance(&g, x, y);
        background + amplitude * (-r * r / (2.0 * width * width)).exp()
    })
}

/// Taylor–Green vortex (A sin(ax)cos(by)/a, −A cos(ax)sin(by)/b) with
/// a = 2π/Lx, b = 2π/Ly.
pub fn taylor_green(grid: &Grid, amplitude: f64) -> VectorField {
    let (lx, ly) = grid.extent();
    let (a, b) = (2.0 * PI / lx, 2.0 * PI / ly);
    VectorField::from_fn(
        grid,
        move |x, y| amplitude * (a * x).sin() * (b * y).cos() / a,
        move |x, y| -amplitude * (a * x).cos() * (b * y).sin() / b,
    )
}
