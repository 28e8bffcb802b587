//! Monitored quantities: energy pieces, dissipation and source remainder,
//! energy-law residual, mass envelope, σ statistics, coercivity margins and
//! the twin-run metric.

use crate::dynamics::{ModelParams, State};
use crate::error::{Error, Result};
use crate::potential::{find_r_star, CoercivityTarget, RegPotential, Tail};
use crate::spectral::{NormKind, ScalarField, VectorField};

/// Default δ in ln max(σ, δ).
pub const ENTROPY_FLOOR: f64 = 1e-12;
/// Records where the floor was active on more than this fraction of points
/// underestimate the Fisher dissipation.
pub const FLOOR_FLAG_FRACTION: f64 = 1e-3;

fn floored_ln(s: f64, delta: f64) -> f64 {
    s.max(delta).ln()
}

/// Energy pieces; the total is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energy {
    /// ½∫|v|²
    pub kinetic: f64,
    /// (ε/2)∫|∇φ|²
    pub gradient: f64,
    /// (γ⁸/4)∫|∇φ|⁴
    pub plap: f64,
    /// (1/ε)∫Ψ(φ)
    pub potential: f64,
    /// ∫σ(ln σ − 1)
    pub entropy: f64,
    /// −χ∫σφ
    pub cross: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.gradient + self.plap + self.potential + self.entropy + self.cross
    }
}

/// Dissipation pieces and the source remainder.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dissipation {
    /// ∫2η(φ)|Dv|²
    pub visc: f64,
    /// ∫m(φ)|∇μ|²
    pub mu: f64,
    /// ∫σ|∇(ln σ − χφ)|²
    pub fisher: f64,
    /// κ∫σ² ln σ
    pub logistic: f64,
    /// ∫(−αφ + ĥ)μ + ∫β(φ)σ ln σ − χ∫(β(φ)σ − κσ²)φ
    pub source: f64,
    /// Fraction of grid points with σ ≤ δ.
    pub floor_fraction: f64,
}

impl Dissipation {
    /// D + κ∫σ² ln σ − R, so that dE/dt = −budget.
    pub fn budget(&self) -> f64 {
        self.visc + self.mu + self.fisher + self.logistic - self.source
    }
}

/// Energy of a state. Pieces that cannot be evaluated (non-finite input, a
/// singular potential outside (−1, 1)) come out as NaN.
pub fn energy(s: &State, p: &ModelParams, delta: f64) -> Energy {
    let kinetic = s
        .v
        .as_ref()
        .map_or(0.0, |v| 0.5 * (v.x.integrate_with(|a| a * a) + v.y.integrate_with(|a| a * a)));
    let g2 = s.phi.grad_norm_sq();
    let eps = p.eps_interface;
    let potential = match p.potential.value_field(&s.phi) {
        Ok(f) => f.integral() / eps,
        Err(_) => f64::NAN,
    };
    let entropy = s.sigma.integrate_with(|v| v * (floored_ln(v, delta) - 1.0));
    let cross = -p.chi * s.sigma.zip_map_unchecked(&s.phi, |a, b| a * b).integral();
    Energy {
        kinetic,
        gradient: 0.5 * eps * g2.integral(),
        plap: 0.25 * p.plap_coefficient() * g2.integrate_with(|w| w * w),
        potential,
        entropy,
        cross,
    }
}

fn symmetric_gradient_sq(v: &VectorField) -> ScalarField {
    let gx = v.x.grad_any();
    let gy = v.y.grad_any();
    let d11 = gx.x;
    let shear = gx.y.zip_map_unchecked(&gy.x, |a, b| a + b);
    let diag = d11.zip_map_unchecked(&gy.y, |a, b| a * a + b * b);
    diag.zip_map_unchecked(&shear, |d, s| d + 0.5 * s * s)
}

/// Dissipation terms and source remainder, using the cached μ of the state.
pub fn dissipation_and_remainder(s: &State, p: &ModelParams, delta: f64) -> Dissipation {
    let phi = &s.phi;
    let sigma = &s.sigma;
    let visc = match &s.v {
        Some(v) => {
            let eta = phi.map(|r| p.viscosity(r));
            eta.zip_map_unchecked(&symmetric_gradient_sq(v), |e, d| 2.0 * e * d).integral()
        }
        None => 0.0,
    };
    let mobility = phi.map(|r| p.mobility(r));
    let mu = mobility
        .zip_map_unchecked(&s.mu.grad_norm_sq(), |m, g| m * g)
        .integral();

    let chi = p.chi;
    let gphi = phi.grad_any();
    let gsig = sigma.grad_any();
    let n = sigma.data().len();
    let mut fisher_density = Vec::with_capacity(n);
    let mut floored = 0usize;
    for i in 0..n {
        let sv = sigma.data()[i];
        let (px, py) = (gphi.x.data()[i], gphi.y.data()[i]);
        if sv > delta {
            let ax = gsig.x.data()[i] - chi * sv * px;
            let ay = gsig.y.data()[i] - chi * sv * py;
            fisher_density.push((ax * ax + ay * ay) / sv);
        } else {
            floored += 1;
            fisher_density.push(sv.max(0.0) * chi * chi * (px * px + py * py));
        }
    }
    let fisher = ScalarField::from_raw(sigma.grid(), fisher_density)
        .expect("density has the grid length")
        .integral();

    let logistic = p.kappa * sigma.integrate_with(|v| v * v * floored_ln(v, delta));
    let mass_source = phi
        .zip_map_unchecked(&s.mu, |r, m| (-p.alpha * r + p.h_const) * m)
        .integral();
    let growth = phi
        .zip_map_unchecked(sigma, |r, v| p.beta_cutoff(r) * v * floored_ln(v, delta))
        .integral();
    let reaction = phi
        .zip_map_unchecked(sigma, |r, v| (p.beta_cutoff(r) * v - p.kappa * v * v) * r)
        .integral();
    Dissipation {
        visc,
        mu,
        fisher,
        logistic,
        source: mass_source + growth - chi * reaction,
        floor_fraction: floored as f64 / n as f64,
    }
}

/// [E(after) − E(before)]/dt + ½[G(before) + G(after)] with
/// G = D + κ∫σ² ln σ − R.
pub fn energy_law_residual(before: &State, after: &State, dt: f64, p: &ModelParams, delta: f64) -> f64 {
    let e0 = energy(before, p, delta).total();
    let e1 = energy(after, p, delta).total();
    let g0 = dissipation_and_remainder(before, p, delta).budget();
    let g1 = dissipation_and_remainder(after, p, delta).budget();
    residual_from_parts(e0, e1, g0, g1, dt)
}

pub(crate) fn residual_from_parts(e0: f64, e1: f64, g0: f64, g1: f64, dt: f64) -> f64 {
    (e1 - e0) / dt + 0.5 * (g0 + g1)
}

/// Mean of φ against the mass-dynamics bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub mean_phi: f64,
    /// φ̄₀e^{−αt} ∓ (1 − e^{−αt})h*/α at the state's time.
    pub envelope: (f64, f64),
    /// Time-independent bracket from the three-case classification.
    pub bracket: (f64, f64),
    /// Distance by which φ̄ lies outside the envelope (0 inside).
    pub violation: f64,
    /// 1 − ρ*, the bound on |φ̄| implied by the bracket.
    pub rho_star_margin: f64,
}

/// Static bracket for φ̄(t) given φ̄₀ and the source bounds.
pub fn mass_bracket(phi0_mean: f64, p: &ModelParams) -> (f64, f64) {
    if p.alpha == 0.0 {
        return (phi0_mean, phi0_mean);
    }
    let c = p.h_const.abs() / p.alpha;
    if phi0_mean >= c {
        (-c, phi0_mean)
    } else if phi0_mean > -c {
        (-c, c)
    } else {
        (phi0_mean, c)
    }
}

pub fn mass_envelope(phi0_mean: f64, p: &ModelParams, t: f64) -> (f64, f64) {
    if p.alpha == 0.0 {
        return (phi0_mean, phi0_mean);
    }
    let decay = (-p.alpha * t).exp();
    let spread = (1.0 - decay) * p.h_const.abs() / p.alpha;
    (phi0_mean * decay - spread, phi0_mean * decay + spread)
}

pub fn mass_monitor(s: &State, p: &ModelParams, phi0_mean: f64) -> MassReport {
    let mean_phi = s.phi.mean();
    let envelope = mass_envelope(phi0_mean, p, s.t);
    let bracket = mass_bracket(phi0_mean, p);
    let violation = (envelope.0 - mean_phi).max(mean_phi - envelope.1).max(0.0);
    MassReport {
        mean_phi,
        envelope,
        bracket,
        violation,
        rho_star_margin: bracket.0.abs().max(bracket.1.abs()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaReport {
    pub min: f64,
    /// ∫σ
    pub mass: f64,
    /// ‖σ‖
    pub l2: f64,
    /// ∫σ(ln σ − 1)
    pub entropy: f64,
}

pub fn sigma_monitor(s: &State, delta: f64) -> SigmaReport {
    let sigma = &s.sigma;
    SigmaReport {
        min: sigma.min(),
        mass: sigma.integral(),
        l2: sigma.norm(NormKind::L2),
        entropy: sigma.integrate_with(|v| v * (floored_ln(v, delta) - 1.0)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    /// ½∫[Ψε(φ) + σ(ln σ − 1)] − |χ|∫|σφ|
    pub margin: f64,
    /// Negative part of the margin: the smallest C* this state needs.
    pub c_star_needed: f64,
    /// Smallest value of the pointwise inequality over grid points in the
    /// tails φ ≥ r* and φ ≤ r★; `None` if no point lies there.
    pub tail_min: Option<f64>,
}

/// Integrand of the tail inequality, with +|χ|σφ on the lower tail.
pub fn neg1_pointwise(rp: &RegPotential, phi: f64, sigma: f64, tail: Tail) -> f64 {
    let chi = rp.chi().abs();
    let sign = match tail {
        Tail::Upper => -1.0,
        Tail::Lower => 1.0,
    };
    let ent = if sigma > 0.0 { sigma * (sigma.ln() - 1.0) } else { 0.0 };
    0.5 * rp.value(phi) - 0.5 * rp.base().theta0 * phi * phi + 0.5 * ent + sign * chi * sigma * phi
}

/// Minimum of [`neg1_pointwise`] over a tensor grid of samples.
pub fn neg1_grid_min(rp: &RegPotential, tail: Tail, phis: &[f64], sigmas: &[f64]) -> f64 {
    phis.iter()
        .flat_map(|&r| sigmas.iter().map(move |&s| neg1_pointwise(rp, r, s, tail)))
        .fold(f64::INFINITY, f64::min)
}

/// Both tail thresholds (r*, r★) for the entropy target.
pub fn tail_thresholds(rp: &RegPotential) -> Result<(f64, f64)> {
    Ok((
        find_r_star(rp, Tail::Upper, CoercivityTarget::Entropy)?,
        find_r_star(rp, Tail::Lower, CoercivityTarget::Entropy)?,
    ))
}

/// A run constant C* with |χ|∫|σφ| ≤ ½∫[Ψε + σ(ln σ − 1)] + C* for every
/// σ ≥ 0: |Ω|(A + ½e^{2A} + max(θ₀, 0)R²/4) with R = max(r*, −r★) and
/// A = (1 + |χ|)R.
pub fn coercivity_floor(rp: &RegPotential, area: f64) -> Result<f64> {
    let (upper, lower) = tail_thresholds(rp)?;
    let r = upper.max(-lower);
    let a = (1.0 + rp.chi().abs()) * r;
    Ok(area * (a + 0.5 * (2.0 * a).exp() + 0.25 * rp.base().theta0.max(0.0) * r * r))
}

pub fn coercivity_margin(s: &State, rp: &RegPotential, delta: f64) -> Result<CoercivityReport> {
    let chi = rp.chi().abs();
    let half = s
        .phi
        .zip_map_unchecked(&s.sigma, |r, v| 0.5 * (rp.psi(r) + v * (floored_ln(v, delta) - 1.0)))
        .integral();
    let cross = s.phi.zip_map_unchecked(&s.sigma, |r, v| (r * v).abs()).integral();
    let margin = half - chi * cross;
    let (upper, lower) = tail_thresholds(rp)?;
    let mut tail_min: Option<f64> = None;
    for (&r, &v) in s.phi.data().iter().zip(s.sigma.data()) {
        let tail = if r >= upper {
            Tail::Upper
        } else if r <= lower {
            Tail::Lower
        } else {
            continue;
        };
        let val = neg1_pointwise(rp, r, v.max(0.0), tail);
        tail_min = Some(tail_min.map_or(val, |m| m.min(val)));
    }
    Ok(CoercivityReport {
        margin,
        c_star_needed: (-margin).max(0.0),
        tail_min,
    })
}

/// W = ‖∇S⁻¹(v₁ − v₂)‖² + ‖φ₁ − φ₂‖²_(H¹)' + ‖σ₁ − σ₂‖²_(H¹)' + |φ̄₁ − φ̄₂|.
pub fn uniqueness_metric(s1: &State, s2: &State) -> Result<f64> {
    let grid = s1.grid();
    grid.check_same(s2.grid())?;
    grid.require_torus("the uniqueness metric")?;
    let dphi = s1.phi.zip_map(&s2.phi, |a, b| a - b)?;
    let dsigma = s1.sigma.zip_map(&s2.sigma, |a, b| a - b)?;
    let dv = match (&s1.v, &s2.v) {
        (Some(a), Some(b)) => {
            let d = VectorField::new(a.x.zip_map(&b.x, |p, q| p - q)?, a.y.zip_map(&b.y, |p, q| p - q)?)?;
            d.leray_project()?.dual_stokes()?.powi(2)
        }
        (None, None) => 0.0,
        _ => {
            return Err(Error::Shape(
                "uniqueness metric needs both states with or without velocity".into(),
            ))
        }
    };
    let ds = dphi.spectrum();
    Ok(dv + ds.norm(NormKind::DualH1).powi(2) + dsigma.norm(NormKind::DualH1).powi(2) + ds.mean().abs())
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_total: f64,
    pub e_kinetic: f64,
    pub e_gradient: f64,
    pub e_plap: f64,
    pub e_potential: f64,
    pub e_entropy: f64,
    pub e_cross: f64,
    pub d_visc: f64,
    pub d_mu: f64,
    pub d_fisher: f64,
    pub d_logistic: f64,
    pub r_source: f64,
    pub residual_energy: f64,
    pub mean_phi: f64,
    pub rho_star_margin: f64,
    pub sigma_min: f64,
    pub sigma_mass: f64,
    pub sigma_l2: f64,
    /// NaN outside twin runs.
    pub w_metric: f64,
    pub floor_fraction: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 21] = [
        "t",
        "E_total",
        "E_kinetic",
        "E_gradient",
        "E_plap",
        "E_potential",
        "E_entropy",
        "E_cross",
        "D_visc",
        "D_mu",
        "D_fisher",
        "D_logistic",
        "R_source",
        "residual_energy",
        "mean_phi",
        "rho_star_margin",
        "sigma_min",
        "sigma_mass",
        "sigma_L2",
        "W_metric",
        "floor_fraction",
    ];

    pub fn values(&self) -> [f64; 21] {
        [
            self.t,
            self.e_total,
            self.e_kinetic,
            self.e_gradient,
            self.e_plap,
            self.e_potential,
            self.e_entropy,
            self.e_cross,
            self.d_visc,
            self.d_mu,
            self.d_fisher,
            self.d_logistic,
            self.r_source,
            self.residual_energy,
            self.mean_phi,
            self.rho_star_margin,
            self.sigma_min,
            self.sigma_mass,
            self.sigma_l2,
            self.w_metric,
            self.floor_fraction,
        ]
    }

    pub fn assemble(t: f64, e: &Energy, d: &Dissipation, residual: f64, mass: &MassReport, sigma: &SigmaReport) -> Self {
        Self {
            t,
            e_total: e.total(),
            e_kinetic: e.kinetic,
            e_gradient: e.gradient,
            e_plap: e.plap,
            e_potential: e.potential,
            e_entropy: e.entropy,
            e_cross: e.cross,
            d_visc: d.visc,
            d_mu: d.mu,
            d_fisher: d.fisher,
            d_logistic: d.logistic,
            r_source: d.source,
            residual_energy: residual,
            mean_phi: mass.mean_phi,
            rho_star_margin: mass.rho_star_margin,
            sigma_min: sigma.min,
            sigma_mass: sigma.mass,
            sigma_l2: sigma.l2,
            w_metric: f64::NAN,
            floor_fraction: d.floor_fraction,
        }
    }

    /// Full record for a state; `residual` comes from the step that produced it.
    pub fn of_state(s: &State, p: &ModelParams, phi0_mean: f64, residual: f64, delta: f64) -> Self {
        let e = energy(s, p, delta);
        let d = dissipation_and_remainder(s, p, delta);
        Self::assemble(s.t, &e, &d, residual, &mass_monitor(s, p, phi0_mean), &sigma_monitor(s, delta))
    }

    /// True when some entry other than `W_metric` is NaN or infinite.
    pub fn has_nonfinite(&self) -> bool {
        self.values()
            .iter()
            .enumerate()
            .any(|(i, v)| i != 19 && !v.is_finite())
    }

    pub fn floor_flagged(&self) -> bool {
        self.floor_fraction > FLOOR_FLAG_FRACTION
    }
}
