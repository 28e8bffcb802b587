//! Right-hand sides of the regularized system
//!
//! ```text
//! ∂t v   = P[−div(v⊗v) + div(2η(φ)Dv) + (μ + χσ)∇φ]
//! ∂t φ   = −div(vφ) + div(m(φ)∇μ) − αφ + ĥ
//! μ      = −γ⁸ div(|∇φ|²∇φ) − εΔφ + Ψ'(φ)/ε − χσ
//! ∂t σ   = −div(vσ) + Δσ − χ div(σ∇φ) + β(φ)σ − κσ²
//! ```
//!
//! with the linear-transport variant replacing −χ div(σ∇φ) by −χΔφ.
//! Nonlinear products are formed on the grid and projected back onto the
//! retained modes.

use crate::error::{Error, Result};
use crate::potential::{
    psi0, psi0_prime, psi_quartic, PotentialParams, QuarticVariant, RegPotential, SingularMode,
};
use crate::spectral::{leray, DomainMode, Grid, ScalarField, Spectrum, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaForm {
    /// Δσ − χ div(σ∇φ)
    #[default]
    CrossDiffusion,
    /// Δσ − χΔφ
    LinearTransport,
}

impl SigmaForm {
    pub fn name(self) -> &'static str {
        match self {
            SigmaForm::CrossDiffusion => "cross_diffusion",
            SigmaForm::LinearTransport => "linear_transport",
        }
    }
}

/// Double-well potential Ψ = Ψ₀ − θ₀r²/2 used in μ and in the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Regularized(RegPotential),
    /// (1 − r²)²/4
    Quartic,
    /// Logarithmic potential; evaluation fails once |φ| ≥ 1.
    Singular(PotentialParams),
}

impl Potential {
    /// Regularized logarithmic potential with θ₀ = θ_c.
    pub fn regularized(theta: f64, theta_c: f64, eps: f64, chi: f64) -> Result<Self> {
        let base = PotentialParams::flory_huggins(theta, theta_c)?;
        Ok(Potential::Regularized(RegPotential::new(base, eps, chi)?))
    }

    pub fn singular(theta: f64, theta_c: f64) -> Result<Self> {
        Ok(Potential::Singular(PotentialParams::flory_huggins(theta, theta_c)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Regularized(_) => "regularized",
            Potential::Quartic => "quartic",
            Potential::Singular(_) => "singular",
        }
    }

    /// Ψ'(r)
    pub fn prime(&self, r: f64) -> Result<f64> {
        match self {
            Potential::Regularized(rp) => Ok(rp.psi_prime(r)),
            Potential::Quartic => Ok(psi_quartic(r, QuarticVariant::Prime)),
            Potential::Singular(p) => Ok(psi0_prime(r, p, SingularMode::Strict)? - p.theta0 * r),
        }
    }

    /// Ψ(r), normalized so that Ψ₀(0) = 0 for the logarithmic family.
    pub fn value(&self, r: f64) -> Result<f64> {
        match self {
            Potential::Regularized(rp) => Ok(rp.psi(r)),
            Potential::Quartic => Ok(psi_quartic(r, QuarticVariant::Value)),
            Potential::Singular(p) => {
                if r.abs() >= 1.0 {
                    return Err(Error::Singularity(format!("potential evaluated at r = {r}")));
                }
                Ok(psi0(r, p)? - 0.5 * p.theta0 * r * r)
            }
        }
    }

    /// Strength of the concave part: θ₀, or 1 for the quartic.
    pub fn concavity(&self) -> f64 {
        match self {
            Potential::Regularized(rp) => rp.base().theta0,
            Potential::Quartic => 1.0,
            Potential::Singular(p) => p.theta0,
        }
    }

    /// Applies Ψ' pointwise; the singular potential reports the first grid
    /// point with |φ| ≥ 1.
    pub fn prime_field(&self, phi: &ScalarField) -> Result<ScalarField> {
        self.check_range(phi)?;
        Ok(match *self {
            Potential::Regularized(rp) => phi.map(move |r| rp.psi_prime(r)),
            Potential::Quartic => phi.map(|r| r * r * r - r),
            Potential::Singular(p) => phi.map(move |r| {
                0.5 * p.theta * (r.ln_1p() - (-r).ln_1p()) - p.theta0 * r
            }),
        })
    }

    pub fn value_field(&self, phi: &ScalarField) -> Result<ScalarField> {
        self.check_range(phi)?;
        let pot = *self;
        Ok(phi.map(move |r| pot.value(r).unwrap_or(f64::NAN)))
    }

    fn check_range(&self, phi: &ScalarField) -> Result<()> {
        if let Potential::Singular(_) = self {
            if let Some(i) = phi.data().iter().position(|v| !(v.abs() < 1.0)) {
                let (mx, _) = phi.grid().comp_dims();
                return Err(Error::Singularity(format!(
                    "|phi| >= 1 at grid point ({}, {}): phi = {}",
                    i % mx,
                    i / mx,
                    phi.data()[i]
                )));
            }
        }
        Ok(())
    }
}

/// Model coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub eta1: f64,
    pub eta2: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    pub chi: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub h_const: f64,
    pub b_star: f64,
    pub eps_interface: f64,
    /// γ of the γ⁸ p-Laplace coefficient; 0 disables the term.
    pub gamma_plap: f64,
    pub sigma_form: SigmaForm,
    pub potential: Potential,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            eta1: 1.0,
            eta2: 1.0,
            m_lo: 1.0,
            m_hi: 1.0,
            chi: 0.0,
            kappa: 0.0,
            alpha: 0.0,
            h_const: 0.0,
            b_star: 0.0,
            eps_interface: 1.0,
            gamma_plap: 0.0,
            sigma_form: SigmaForm::CrossDiffusion,
            potential: Potential::Quartic,
        }
    }
}

impl ModelParams {
    /// Checks the structural hypotheses; errors name the violated one.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.eta1,
            self.eta2,
            self.m_lo,
            self.m_hi,
            self.chi,
            self.kappa,
            self.alpha,
            self.h_const,
            self.b_star,
            self.eps_interface,
            self.gamma_plap,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("model coefficients must be finite".into()));
        }
        if !(self.eta1 > 0.0 && self.eta2 > 0.0) {
            return Err(Error::hypothesis("(H2)", "viscosities eta1, eta2 must be > 0"));
        }
        if !(self.m_lo > 0.0 && self.m_lo <= self.m_hi) {
            return Err(Error::hypothesis("(H3)", "mobility bounds need 0 < m_lo <= m_hi"));
        }
        if self.alpha < 0.0 {
            return Err(Error::hypothesis("(H4)", "alpha must be >= 0"));
        }
        if self.alpha == 0.0 && self.h_const != 0.0 {
            return Err(Error::hypothesis("(H4)", "h must vanish when alpha = 0"));
        }
        if self.alpha > 0.0 && !(self.h_const.abs() < self.alpha) {
            return Err(Error::hypothesis("(H4)", "|h| must be < alpha"));
        }
        if self.kappa < 0.0 {
            return Err(Error::hypothesis("(H5)", "kappa must be >= 0"));
        }
        if self.b_star < 0.0 {
            return Err(Error::hypothesis("(H5)", "b_star must be >= 0"));
        }
        if !(self.eps_interface > 0.0) {
            return Err(Error::hypothesis("(H6)", "interface width must be > 0"));
        }
        if self.gamma_plap < 0.0 {
            return Err(Error::Parameter("gamma_plap must be >= 0".into()));
        }
        if let Potential::Regularized(rp) = &self.potential {
            if rp.chi() != self.chi {
                return Err(Error::Parameter(format!(
                    "regularized potential built for chi = {} but model chi = {}",
                    rp.chi(),
                    self.chi
                )));
            }
        }
        Ok(())
    }

    /// η(r) = η₁(1+r)/2 + η₂(1−r)/2 at r clamped to [−1, 1].
    pub fn viscosity(&self, r: f64) -> f64 {
        let c = r.clamp(-1.0, 1.0);
        0.5 * (self.eta1 * (1.0 + c) + self.eta2 * (1.0 - c))
    }

    /// Linear blend from m_lo at r = −1 to m_hi at r = 1, clamped.
    pub fn mobility(&self, r: f64) -> f64 {
        let c = r.clamp(-1.0, 1.0);
        0.5 * (self.m_hi * (1.0 + c) + self.m_lo * (1.0 - c))
    }

    /// b*·q(|r|) with q = 1 on [0, 1], 1 − 3s² + 2s³ (s = |r| − 1) on [1, 2]
    /// and 0 beyond.
    pub fn beta_cutoff(&self, r: f64) -> f64 {
        let a = r.abs();
        if a <= 1.0 {
            self.b_star
        } else if a < 2.0 {
            let s = a - 1.0;
            self.b_star * (1.0 - 3.0 * s * s + 2.0 * s * s * s)
        } else {
            0.0
        }
    }

    pub fn constant_mobility(&self) -> bool {
        self.m_lo == self.m_hi
    }

    pub fn constant_viscosity(&self) -> bool {
        self.eta1 == self.eta2
    }

    /// m̄ = (m_lo + m_hi)/2
    pub fn mean_mobility(&self) -> f64 {
        0.5 * (self.m_lo + self.m_hi)
    }

    /// η̄ = (η₁ + η₂)/2
    pub fn mean_viscosity(&self) -> f64 {
        0.5 * (self.eta1 + self.eta2)
    }

    /// γ⁸
    pub fn plap_coefficient(&self) -> f64 {
        self.gamma_plap.powi(8)
    }
}

/// (v, φ, σ) at time t together with the chemical potential μ.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    /// Absent in the fluid-free subsystem.
    pub v: Option<VectorField>,
    pub phi: ScalarField,
    pub sigma: ScalarField,
    pub mu: ScalarField,
}

impl State {
    /// Assembles a state and computes μ with the given projection.
    pub fn new(
        t: f64,
        v: Option<VectorField>,
        phi: ScalarField,
        sigma: ScalarField,
        p: &ModelParams,
        cutoff: Option<f64>,
    ) -> Result<Self> {
        phi.grid().check_same(sigma.grid())?;
        if let Some(v) = &v {
            phi.grid().check_same(v.grid())?;
            phi.grid().require_torus("the velocity field")?;
        }
        let dynamics = Dynamics::new(phi.grid(), p.clone(), cutoff)?;
        let mu = dynamics.mu(&phi.spectrum(), &sigma.spectrum())?.to_field();
        Ok(Self {
            t,
            v,
            phi,
            sigma,
            mu,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn spectral(&self) -> SpectralState {
        SpectralState {
            phi: self.phi.spectrum(),
            sigma: self.sigma.spectrum(),
            v: self.v.as_ref().map(|v| {
                let (a, b) = v.spectra();
                [a, b]
            }),
        }
    }
}

/// Prognostic variables in coefficient space.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub phi: Spectrum,
    pub sigma: Spectrum,
    pub v: Option<[Spectrum; 2]>,
}

/// Time derivatives of the prognostic variables, plus μ̂ as a by-product.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub phi: Spectrum,
    pub sigma: Spectrum,
    pub v: Option<[Spectrum; 2]>,
    pub mu: Spectrum,
}

/// Right-hand-side assembler bound to a grid, parameters and projection.
///
/// `cutoff = Some(K)` projects every nonlinear result onto modes of radial
/// index ≤ K (inside the 2/3 mask); `None` applies only the 2/3 mask.
#[derive(Debug, Clone)]
pub struct Dynamics {
    grid: Grid,
    p: ModelParams,
    cutoff: Option<f64>,
}

fn product_spectrum(a: &ScalarField, b: &ScalarField) -> Spectrum {
    a.zip_map_unchecked(b, |x, y| x * y).spectrum()
}

impl Dynamics {
    pub fn new(grid: &Grid, p: ModelParams, cutoff: Option<f64>) -> Result<Self> {
        p.validate()?;
        if let Some(k) = cutoff {
            if !(k >= 0.0 && k <= grid.max_cutoff()) {
                return Err(Error::Parameter(format!(
                    "mode cutoff {k} outside [0, {}]",
                    grid.max_cutoff()
                )));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            p,
            cutoff,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.p
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn project(&self, s: &mut Spectrum) {
        match self.cutoff {
            Some(k) => s.truncate_in_place(k),
            None => s.dealias_in_place(),
        }
    }

    /// μ̂ from φ̂ and σ̂.
    pub fn mu(&self, phi_hat: &Spectrum, sigma_hat: &Spectrum) -> Result<Spectrum> {
        let phi = phi_hat.to_field();
        let (gx, gy) = phi_hat.grad_any();
        self.mu_with(phi_hat, sigma_hat, &phi, &gx.to_field(), &gy.to_field())
    }

    fn mu_with(
        &self,
        phi_hat: &Spectrum,
        sigma_hat: &Spectrum,
        phi: &ScalarField,
        gx: &ScalarField,
        gy: &ScalarField,
    ) -> Result<Spectrum> {
        let p = &self.p;
        let eps = p.eps_interface;
        let mut mu = p.potential.prime_field(phi)?.spectrum();
        mu.scale(1.0 / eps);
        mu.axpy(-eps, &phi_hat.laplacian());
        let g8 = p.plap_coefficient();
        if g8 > 0.0 {
            let w = gx.zip_map_unchecked(gy, |a, b| a * a + b * b);
            let fx = product_spectrum(&w, gx);
            let fy = product_spectrum(&w, gy);
            mu.axpy(-g8, &crate::spectral::div_any(&fx, &fy));
        }
        mu.axpy(-p.chi, sigma_hat);
        self.project(&mut mu);
        Ok(mu)
    }

    /// −P div(v f) for a scalar `f` given on the grid.
    pub fn advection(&self, v: &VectorField, f: &ScalarField) -> Spectrum {
        let mut out = crate::spectral::div_any(&product_spectrum(&v.x, f), &product_spectrum(&v.y, f));
        out.scale(-1.0);
        self.project(&mut out);
        out
    }

    /// P_K Leray[(μ + χσ)∇φ] with the zero mode removed.
    pub fn capillary_force(&self, phi_hat: &Spectrum, mu: &ScalarField, sigma: &ScalarField) -> Result<[Spectrum; 2]> {
        self.grid.require_torus("the capillary force")?;
        let (gx, gy) = phi_hat.grad_any();
        let w = mu.zip_map_unchecked(sigma, |m, s| m + self.p.chi * s);
        let fx = product_spectrum(&w, &gx.to_field());
        let fy = product_spectrum(&w, &gy.to_field());
        Ok(self.finish_velocity(fx, fy))
    }

    fn finish_velocity(&self, fx: Spectrum, fy: Spectrum) -> [Spectrum; 2] {
        let (mut ax, mut ay) = crate::spectral::leray_any(&self.grid, &fx, &fy);
        ax.coeffs_mut()[0] = Default::default();
        ay.coeffs_mut()[0] = Default::default();
        self.project(&mut ax);
        self.project(&mut ay);
        [ax, ay]
    }

    /// All tendencies at one state.
    pub fn tendency(&self, s: &SpectralState) -> Result<Tendency> {
        let p = &self.p;
        let phi = s.phi.to_field();
        let sigma = s.sigma.to_field();
        let (gxh, gyh) = s.phi.grad_any();
        let (gx, gy) = (gxh.to_field(), gyh.to_field());
        let mu_hat = self.mu_with(&s.phi, &s.sigma, &phi, &gx, &gy)?;
        let v = match &s.v {
            Some([a, b]) => {
                self.grid.require_torus("the velocity field")?;
                Some(VectorField {
                    x: a.to_field(),
                    y: b.to_field(),
                })
            }
            None => None,
        };

        // phase field
        let mut f_phi = if p.constant_mobility() {
            let mut lap = mu_hat.laplacian();
            lap.scale(p.m_lo);
            lap
        } else {
            let m = phi.map(|r| p.mobility(r));
            m.div_weighted_grad(&mu_hat)?
        };
        if let Some(v) = &v {
            let (ax, ay) = (product_spectrum(&v.x, &phi), product_spectrum(&v.y, &phi));
            f_phi.axpy(-1.0, &crate::spectral::div_any(&ax, &ay));
        }
        self.project(&mut f_phi);
        f_phi.axpy(-p.alpha, &s.phi);
        f_phi.coeffs_mut()[0].re += p.h_const;

        // concentration
        let mut f_sigma = s.sigma.laplacian();
        if p.chi != 0.0 {
            match p.sigma_form {
                SigmaForm::CrossDiffusion => {
                    let fx = product_spectrum(&sigma, &gx);
                    let fy = product_spectrum(&sigma, &gy);
                    f_sigma.axpy(-p.chi, &crate::spectral::div_any(&fx, &fy));
                }
                SigmaForm::LinearTransport => f_sigma.axpy(-p.chi, &s.phi.laplacian()),
            }
        }
        if p.b_star != 0.0 || p.kappa != 0.0 {
            let reaction = phi.zip_map_unchecked(&sigma, |r, s| p.beta_cutoff(r) * s - p.kappa * s * s);
            f_sigma.axpy(1.0, &reaction.spectrum());
        }
        if let Some(v) = &v {
            let (ax, ay) = (product_spectrum(&v.x, &sigma), product_spectrum(&v.y, &sigma));
            f_sigma.axpy(-1.0, &crate::spectral::div_any(&ax, &ay));
        }
        self.project(&mut f_sigma);

        // velocity
        let f_v = match (&s.v, &v) {
            (Some([vxh, vyh]), Some(v)) => {
                let xx = product_spectrum(&v.x, &v.x);
                let xy = product_spectrum(&v.x, &v.y);
                let yy = product_spectrum(&v.y, &v.y);
                let mut fx = xx.dx_any();
                fx.axpy(1.0, &xy.dy_any());
                fx.scale(-1.0);
                let mut fy = xy.dx_any();
                fy.axpy(1.0, &yy.dy_any());
                fy.scale(-1.0);
                if p.constant_viscosity() {
                    fx.axpy(p.eta1, &vxh.laplacian());
                    fy.axpy(p.eta1, &vyh.laplacian());
                } else {
                    let eta = phi.map(|r| p.viscosity(r));
                    let (ux, uy) = (vxh.dx_any().to_field(), vxh.dy_any().to_field());
                    let (wx, wy) = (vyh.dx_any().to_field(), vyh.dy_any().to_field());
                    let s11 = eta.zip_map_unchecked(&ux, |e, d| 2.0 * e * d).spectrum();
                    let s22 = eta.zip_map_unchecked(&wy, |e, d| 2.0 * e * d).spectrum();
                    let shear = uy.zip_map_unchecked(&wx, |a, b| a + b);
                    let s12 = product_spectrum(&eta, &shear);
                    fx.axpy(1.0, &s11.dx_any());
                    fx.axpy(1.0, &s12.dy_any());
                    fy.axpy(1.0, &s12.dx_any());
                    fy.axpy(1.0, &s22.dy_any());
                }
                let mu = mu_hat.to_field();
                let w = mu.zip_map_unchecked(&sigma, |m, s| m + p.chi * s);
                fx.axpy(1.0, &product_spectrum(&w, &gx));
                fy.axpy(1.0, &product_spectrum(&w, &gy));
                Some(self.finish_velocity(fx, fy))
            }
            _ => None,
        };

        Ok(Tendency {
            phi: f_phi,
            sigma: f_sigma,
            v: f_v,
            mu: mu_hat,
        })
    }
}

/// μ of the given fields, with the 2/3 mask as the only projection.
pub fn compute_mu(phi: &ScalarField, sigma: &ScalarField, p: &ModelParams) -> Result<ScalarField> {
    phi.grid().check_same(sigma.grid())?;
    let d = Dynamics::new(phi.grid(), p.clone(), None)?;
    Ok(d.mu(&phi.spectrum(), &sigma.spectrum())?.to_field())
}

fn tendency_of(s: &State, p: &ModelParams) -> Result<Tendency> {
    Dynamics::new(s.grid(), p.clone(), None)?.tendency(&s.spectral())
}

/// ∂t φ at the state.
pub fn rhs_phi(s: &State, p: &ModelParams) -> Result<ScalarField> {
    Ok(tendency_of(s, p)?.phi.to_field())
}

/// ∂t σ at the state, in the form selected by `p.sigma_form`.
pub fn rhs_sigma(s: &State, p: &ModelParams) -> Result<ScalarField> {
    Ok(tendency_of(s, p)?.sigma.to_field())
}

/// ∂t v at the state (torus only).
pub fn rhs_v(s: &State, p: &ModelParams) -> Result<VectorField> {
    if s.grid().mode() != DomainMode::Torus || s.v.is_none() {
        return Err(Error::UnsupportedMode(
            "the momentum equation needs the torus and a velocity field".into(),
        ));
    }
    let [a, b] = tendency_of(s, p)?.v.expect("velocity present");
    Ok(VectorField::from_spectra(&a, &b))
}

/// Leray projection of a velocity, exposed for initial-data preparation.
pub fn project_velocity(v: &VectorField) -> Result<VectorField> {
    let (sx, sy) = v.spectra();
    let (px, py) = leray(&sx, &sy)?;
    Ok(VectorField::from_spectra(&px, &py))
}
