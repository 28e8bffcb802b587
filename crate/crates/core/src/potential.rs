//! Double-well potentials: the logarithmic (Flory–Huggins) potential, its
//! quartic surrogate, and the χ-dependent regularized family that is smooth on
//! all of ℝ with exponential growth outside [−2, 2].
//!
//! The singular potential is split as Ψ(r) = Ψ₀(r) − θ₀r²/2 with Ψ₀ convex,
//! Ψ₀(0) = Ψ₀'(0) = 0. The regularization only touches Ψ₀.

use crate::error::{Error, Result};

/// Coefficients of the logarithmic potential
/// Ψ(r) = θ/2[(1−r)ln(1−r) + (1+r)ln(1+r)] + θ_c/2 (1−r²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub theta: f64,
    pub theta_c: f64,
    /// Coefficient of the concave part −θ₀r²/2.
    pub theta0: f64,
}

impl PotentialParams {
    /// General split; only `theta > 0` is required.
    pub fn new(theta: f64, theta_c: f64, theta0: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta_c.is_finite() || !theta0.is_finite() {
            return Err(Error::hypothesis(
                "(H1)",
                format!("theta must be > 0 (got theta = {theta})"),
            ));
        }
        Ok(Self {
            theta,
            theta_c,
            theta0,
        })
    }

    /// Flory–Huggins instantiation: 0 < θ < θ_c and θ₀ = θ_c.
    pub fn flory_huggins(theta: f64, theta_c: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < theta_c) {
            return Err(Error::hypothesis(
                "(H1)",
                format!(
                    "the logarithmic potential requires 0 < theta < theta_c (got theta = {theta}, theta_c = {theta_c})"
                ),
            ));
        }
        Ok(Self {
            theta,
            theta_c,
            theta0: theta_c,
        })
    }
}

/// How the singular derivative treats arguments that graze ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularMode {
    /// `|r| >= 1` is an error.
    #[default]
    Strict,
    /// Clamp to `|r| <= 1 - 1e-14` before taking the logarithm.
    Clamped,
}

const CLAMP_MARGIN: f64 = 1e-14;

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Convex part Ψ₀(r) = θ/2[(1−r)ln(1−r) + (1+r)ln(1+r)], finite on [−1, 1].
pub fn psi0(r: f64, p: &PotentialParams) -> Result<f64> {
    if !(r.abs() <= 1.0) {
        return Err(Error::Domain(format!("|r| = {} > 1", r.abs())));
    }
    Ok(0.5 * p.theta * (xlogx(1.0 - r) + xlogx(1.0 + r)))
}

/// Full logarithmic potential, including the θ_c/2 constant.
pub fn psi_singular(r: f64, p: &PotentialParams) -> Result<f64> {
    Ok(psi0(r, p)? + 0.5 * p.theta_c * (1.0 - r * r))
}

/// Ψ₀'(r) = (θ/2) ln((1+r)/(1−r)).
pub fn psi0_prime(r: f64, p: &PotentialParams, mode: SingularMode) -> Result<f64> {
    let r = singular_arg(r, mode)?;
    Ok(0.5 * p.theta * (r.ln_1p() - (-r).ln_1p()))
}

/// Ψ₀''(r) = θ/(1−r²).
pub fn psi0_second(r: f64, p: &PotentialParams, mode: SingularMode) -> Result<f64> {
    let r = singular_arg(r, mode)?;
    Ok(p.theta / ((1.0 - r) * (1.0 + r)))
}

fn singular_arg(r: f64, mode: SingularMode) -> Result<f64> {
    if r.abs() < 1.0 {
        return Ok(r);
    }
    match mode {
        SingularMode::Clamped if r.is_finite() => Ok(r.clamp(-1.0 + CLAMP_MARGIN, 1.0 - CLAMP_MARGIN)),
        _ => Err(Error::Singularity(format!(
            "logarithmic potential derivative evaluated at r = {r}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarticVariant {
    Value,
    Prime,
}

/// Quartic surrogate (1−r²)²/4 and its derivative r³ − r.
pub fn psi_quartic(r: f64, variant: QuarticVariant) -> f64 {
    match variant {
        QuarticVariant::Value => 0.25 * (1.0 - r * r).powi(2),
        QuarticVariant::Prime => r * r * r - r,
    }
}

/// The five pieces of the regularized convex part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// r ≤ −2
    LowerExp,
    /// −2 < r < −1+ε
    LowerLinear,
    /// |r| ≤ 1−ε
    Interior,
    /// 1−ε < r < 2
    UpperLinear,
    /// r ≥ 2
    UpperExp,
}

/// Regularized convex part Ψ₀,ε: equal to Ψ₀ on [−1+ε, 1−ε], continued with
/// slope Ψ₀''(±(1−ε)) up to ±2 and by an exponential of rate 4(|χ|+1)
/// beyond, glued C¹ in Ψ₀,ε'.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegPotential {
    base: PotentialParams,
    eps: f64,
    chi: f64,
    /// 1 − ε
    a: f64,
    /// 4(|χ|+1)
    rate: f64,
    /// (4|χ|+3)/(4(|χ|+1)) + ε
    offset: f64,
    /// Ψ₀, Ψ₀', Ψ₀'' at 1−ε
    up: [f64; 3],
    /// Ψ₀, Ψ₀', Ψ₀'' at −1+ε
    lo: [f64; 3],
}

impl RegPotential {
    /// Fails unless ε ∈ (0, 1) satisfies Ψ₀'(1−ε) ≥ 1 and Ψ₀'(−1+ε) ≤ −1.
    pub fn new(base: PotentialParams, eps: f64, chi: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Parameter(format!(
                "regularization width eps must lie in (0, 1), got {eps}"
            )));
        }
        if !chi.is_finite() {
            return Err(Error::Parameter(format!("chi must be finite, got {chi}")));
        }
        let a = 1.0 - eps;
        let eval = |r: f64| -> Result<[f64; 3]> {
            Ok([
                psi0(r, &base)?,
                psi0_prime(r, &base, SingularMode::Strict)?,
                psi0_second(r, &base, SingularMode::Strict)?,
            ])
        };
        let up = eval(a)?;
        let lo = eval(-a)?;
        if up[1] < 1.0 || lo[1] > -1.0 {
            return Err(Error::Parameter(format!(
                "eps = {eps} is too large: need psi0'(1-eps) >= 1 and psi0'(-1+eps) <= -1, got {:.6} and {:.6}",
                up[1], lo[1]
            )));
        }
        let c = chi.abs() + 1.0;
        Ok(Self {
            base,
            eps,
            chi,
            a,
            rate: 4.0 * c,
            offset: (4.0 * chi.abs() + 3.0) / (4.0 * c) + eps,
            up,
            lo,
        })
    }

    pub fn base(&self) -> &PotentialParams {
        &self.base
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Branch boundaries −2, −1+ε, 1−ε, 2.
    pub fn knots(&self) -> [f64; 4] {
        [-2.0, -self.a, self.a, 2.0]
    }

    pub fn branch(&self, r: f64) -> Branch {
        if r <= -2.0 {
            Branch::LowerExp
        } else if r < -self.a {
            Branch::LowerLinear
        } else if r <= self.a {
            Branch::Interior
        } else if r < 2.0 {
            Branch::UpperLinear
        } else {
            Branch::UpperExp
        }
    }

    /// Ψ₀,ε'(r).
    pub fn prime(&self, r: f64) -> f64 {
        self.prime_on(self.branch(r), r)
    }

    /// Ψ₀,ε''(r).
    pub fn second(&self, r: f64) -> f64 {
        self.second_on(self.branch(r), r)
    }

    /// Ψ₀,ε(r) = ∫₀ʳ Ψ₀,ε'(s) ds in closed form.
    pub fn value(&self, r: f64) -> f64 {
        self.value_on(self.branch(r), r)
    }

    /// Ψε'(r) = Ψ₀,ε'(r) − θ₀r.
    pub fn psi_prime(&self, r: f64) -> f64 {
        self.prime(r) - self.base.theta0 * r
    }

    /// Ψε(r) = Ψ₀,ε(r) − θ₀r²/2.
    pub fn psi(&self, r: f64) -> f64 {
        self.value(r) - 0.5 * self.base.theta0 * r * r
    }

    /// Ψ₀,ε' using the formula of a specific branch, regardless of where `r` lies.
    pub fn prime_on(&self, branch: Branch, r: f64) -> f64 {
        let [_, p1, p2] = self.up;
        let [_, q1, q2] = self.lo;
        match branch {
            Branch::Interior => {
                // |r| <= 1-eps < 1 always holds on this branch
                0.5 * self.base.theta * (r.ln_1p() - (-r).ln_1p())
            }
            Branch::UpperLinear => p1 + p2 * (r - self.a),
            Branch::LowerLinear => q1 + q2 * (r + self.a),
            Branch::UpperExp => {
                p1 + p2 * self.offset + p2 * (self.rate * (r - 2.0)).exp() / self.rate
            }
            Branch::LowerExp => {
                q1 - q2 * self.offset - q2 * (-self.rate * (r + 2.0)).exp() / self.rate
            }
        }
    }

    pub fn second_on(&self, branch: Branch, r: f64) -> f64 {
        match branch {
            Branch::Interior => self.base.theta / ((1.0 - r) * (1.0 + r)),
            Branch::UpperLinear => self.up[2],
            Branch::LowerLinear => self.lo[2],
            Branch::UpperExp => self.up[2] * (self.rate * (r - 2.0)).exp(),
            Branch::LowerExp => self.lo[2] * (-self.rate * (r + 2.0)).exp(),
        }
    }

    pub fn value_on(&self, branch: Branch, r: f64) -> f64 {
        let [v_up, p1, p2] = self.up;
        let [v_lo, q1, q2] = self.lo;
        let a = self.a;
        let lam2 = self.rate * self.rate;
        match branch {
            Branch::Interior => 0.5 * self.base.theta * (xlogx(1.0 - r) + xlogx(1.0 + r)),
            Branch::UpperLinear => {
                let d = r - a;
                v_up + p1 * d + 0.5 * p2 * d * d
            }
            Branch::LowerLinear => {
                let d = r + a;
                v_lo + q1 * d + 0.5 * q2 * d * d
            }
            Branch::UpperExp => {
                let at2 = v_up + p1 * (2.0 - a) + 0.5 * p2 * (2.0 - a).powi(2);
                let s = r - 2.0;
                at2 + (p1 + p2 * self.offset) * s + p2 * (self.rate * s).exp_m1() / lam2
            }
            Branch::LowerExp => {
                let at_m2 = v_lo + q1 * (a - 2.0) + 0.5 * q2 * (2.0 - a).powi(2);
                let s = r + 2.0;
                at_m2 + (q1 - q2 * self.offset) * s + q2 * (-self.rate * s).exp_m1() / lam2
            }
        }
    }

    /// Value and derivative jumps of Ψ₀,ε' across each knot, relative to
    /// `max(1, |Ψ₀,ε'(knot)|)` and `max(1, |Ψ₀,ε''(knot)|)`.
    pub fn knot_jumps(&self) -> [(f64, f64); 4] {
        let pairs = [
            (Branch::LowerExp, Branch::LowerLinear),
            (Branch::LowerLinear, Branch::Interior),
            (Branch::Interior, Branch::UpperLinear),
            (Branch::UpperLinear, Branch::UpperExp),
        ];
        let knots = self.knots();
        let mut out = [(0.0, 0.0); 4];
        for (slot, (&(left, right), &k)) in out.iter_mut().zip(pairs.iter().zip(knots.iter())) {
            let (vl, vr) = (self.prime_on(left, k), self.prime_on(right, k));
            let (dl, dr) = (self.second_on(left, k), self.second_on(right, k));
            *slot = (
                (vl - vr).abs() / vl.abs().max(1.0),
                (dl - dr).abs() / dl.abs().max(1.0),
            );
        }
        out
    }

    /// Minimum of Ψε = Ψ₀,ε − θ₀r²/2 over `n` uniform samples of `[lo, hi]`;
    /// an empirical value for the lower bound −L.
    pub fn empirical_floor(&self, lo: f64, hi: f64, n: usize) -> f64 {
        let n = n.max(2);
        (0..n)
            .map(|i| self.psi(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// f(a) = eᵃ − a − 1.
pub fn young_f(a: f64) -> f64 {
    a.exp_m1() - a
}

/// g(b) = (b+1) ln(b+1) − b.
pub fn young_g(b: f64) -> f64 {
    (b + 1.0) * b.ln_1p() - b
}

/// f(a) + g(b) − ab, nonnegative for a, b ≥ 0 with equality on b = eᵃ − 1.
pub fn young_gap(a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::Domain(format!(
            "young inequality needs a, b >= 0 (got a = {a}, b = {b})"
        )));
    }
    Ok(young_f(a) + young_g(b) - a * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Threshold r* ≥ 2.
    Upper,
    /// Mirror threshold r★ ≤ −2.
    Lower,
}

/// Which exponential the regularized potential has to dominate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoercivityTarget {
    /// e^{(2|χ|+1)r} + θ₀r² + 2|χ|r + 1, used against σ(ln σ − 1).
    #[default]
    Entropy,
    /// e^{(4|χ|+1)r} + θ₀r² + 4|χ|r, used against σ² ln σ.
    Logistic,
}

/// Ψ₀,ε(r) minus the coercivity target; on the lower tail the target is
/// mirrored (evaluated at −r).
pub fn coercivity_deficit(rp: &RegPotential, r: f64, tail: Tail, target: CoercivityTarget) -> f64 {
    let s = match tail {
        Tail::Upper => r,
        Tail::Lower => -r,
    };
    let chi = rp.chi.abs();
    let theta0 = rp.base.theta0;
    let t = match target {
        CoercivityTarget::Entropy => ((2.0 * chi + 1.0) * s).exp() + theta0 * s * s + 2.0 * chi * s + 1.0,
        CoercivityTarget::Logistic => ((4.0 * chi + 1.0) * s).exp() + theta0 * s * s + 4.0 * chi * s,
    };
    rp.value(r) - t
}

/// Largest horizon searched for r*.
pub const R_STAR_HORIZON: f64 = 200.0;
const R_STAR_SAMPLE: f64 = 1e-2;
const R_STAR_TOL: f64 = 1e-9;

/// Smallest |r| ≥ 2 from which the coercivity deficit stays nonnegative up to
/// the search horizon; returns r* (upper) or r★ = −|r| (lower).
///
/// The horizon is [`R_STAR_HORIZON`] or the point where the exponential branch
/// leaves the f64 range, whichever comes first.
pub fn find_r_star(rp: &RegPotential, tail: Tail, target: CoercivityTarget) -> Result<f64> {
    let sign = match tail {
        Tail::Upper => 1.0,
        Tail::Lower => -1.0,
    };
    let deficit = |s: f64| coercivity_deficit(rp, sign * s, tail, target);
    let horizon = R_STAR_HORIZON.min(2.0 + 700.0 / rp.rate);
    let n = ((horizon - 2.0) / R_STAR_SAMPLE).ceil() as usize;
    let sample = |i: usize| (2.0 + i as f64 * R_STAR_SAMPLE).min(horizon);

    let mut last_negative = None;
    for i in 0..=n {
        let d = deficit(sample(i));
        if !(d >= 0.0) {
            last_negative = Some(i);
        }
    }
    let Some(i) = last_negative else {
        return Ok(sign * 2.0);
    };
    if i == n {
        return Err(Error::CoercivityFailure {
            horizon,
            message: format!(
                "deficit still negative at |r| = {horizon} (eps = {}, chi = {})",
                rp.eps, rp.chi
            ),
        });
    }
    let (mut lo, mut hi) = (sample(i), sample(i + 1));
    while hi - lo > R_STAR_TOL {
        let mid = 0.5 * (lo + hi);
        if deficit(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(sign * hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn fh() -> PotentialParams {
        PotentialParams::flory_huggins(1.0, 2.0).unwrap()
    }

    #[test]
    fn singular_values() {
        let p = fh();
        assert!((psi_singular(0.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((psi_singular(1.0, &p).unwrap() - LN_2).abs() < 1e-15);
        assert!((psi_singular(-1.0, &p).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(psi_singular(0.5, &p).unwrap(), psi_singular(-0.5, &p).unwrap());
        assert!(matches!(psi_singular(1.01, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn singular_derivatives() {
        let p = fh();
        assert_eq!(psi0_prime(0.0, &p, SingularMode::Strict).unwrap(), 0.0);
        let d = psi0_prime(0.5, &p, SingularMode::Strict).unwrap();
        assert!((d - 0.5 * 3f64.ln()).abs() < 1e-15);
        // centered difference of the full potential plus the theta_c r correction
        let h = 1e-5;
        let fd = (psi_singular(0.5 + h, &p).unwrap() - psi_singular(0.5 - h, &p).unwrap()) / (2.0 * h)
            + p.theta_c * 0.5;
        assert!((fd - d).abs() < 1e-9, "{fd} vs {d}");
        assert_eq!(psi0_second(0.0, &p, SingularMode::Strict).unwrap(), 1.0);
        assert!(matches!(
            psi0_prime(1.0, &p, SingularMode::Strict),
            Err(Error::Singularity(_))
        ));
        let clamped = psi0_prime(1.0, &p, SingularMode::Clamped).unwrap();
        assert!(clamped.is_finite() && clamped > 15.0);
    }

    #[test]
    fn flory_huggins_requires_theta_below_critical() {
        let err = PotentialParams::flory_huggins(2.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("(H1)"));
        assert!(PotentialParams::new(-1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn quartic() {
        assert_eq!(psi_quartic(0.0, QuarticVariant::Value), 0.25);
        assert_eq!(psi_quartic(1.0, QuarticVariant::Value), 0.0);
        assert_eq!(psi_quartic(-1.0, QuarticVariant::Value), 0.0);
        assert_eq!(psi_quartic(0.0, QuarticVariant::Prime), 0.0);
    }

    #[test]
    fn eps_validation() {
        // 0.5 ln((2-eps)/eps) >= 1 fails for eps = 0.3
        assert!(RegPotential::new(fh(), 0.3, 0.0).is_err());
        assert!(RegPotential::new(fh(), 0.2, 0.0).is_ok());
        assert!(RegPotential::new(fh(), 0.0, 0.0).is_err());
    }

    #[test]
    fn regularized_branches() {
        let rp = RegPotential::new(fh(), 0.1, 0.5).unwrap();
        assert_eq!(rp.prime(0.0), 0.0);
        assert_eq!(rp.value(0.0), 0.0);
        let a = 0.9;
        assert!((rp.prime_on(Branch::Interior, a) - rp.prime_on(Branch::UpperLinear, a)).abs() < 1e-14);
        let p1 = psi0_prime(a, rp.base(), SingularMode::Strict).unwrap();
        let p2 = psi0_second(a, rp.base(), SingularMode::Strict).unwrap();
        let expect = p1 + p2 * 1.1;
        assert!((rp.prime_on(Branch::UpperLinear, 2.0) - expect).abs() < 1e-12);
        assert!((rp.prime_on(Branch::UpperExp, 2.0) - expect).abs() < 1e-12);
        assert!((rp.second_on(Branch::UpperExp, 2.0) - p2).abs() < 1e-12);
        for r in [-0.85, -0.3, 0.0, 0.4, 0.89] {
            let exact = psi0_prime(r, rp.base(), SingularMode::Strict).unwrap();
            assert_eq!(rp.prime(r), exact);
        }
    }

    #[test]
    fn antiderivative_matches_on_all_branches() {
        let rp = RegPotential::new(fh(), 0.05, -2.0).unwrap();
        let h = 1e-5;
        for r in [-3.0, -2.5, -1.5, -0.97, -0.5, 0.3, 0.96, 1.7, 2.2, 3.0] {
            let fd = (rp.value(r + h) - rp.value(r - h)) / (2.0 * h);
            let d = rp.prime(r);
            assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "r = {r}: {fd} vs {d}");
        }
    }

    #[test]
    fn young() {
        assert_eq!(young_gap(0.0, 0.0).unwrap(), 0.0);
        assert!(young_gap(1.0, E - 1.0).unwrap().abs() < 1e-15);
        let expect = (E * E - 3.0) + (2.0 * LN_2 - 1.0) - 2.0;
        assert!((young_gap(2.0, 1.0).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 2.775).abs() < 1e-3);
        assert!(young_gap(-1.0, 0.0).is_err());
    }

    /// Independent bisection for the root of the upper deficit.
    fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) >= 0.0 {
                hi = m
            } else {
                lo = m
            }
        }
        hi
    }

    #[test]
    fn r_star_for_chi_zero() {
        let base = PotentialParams::new(1.0, 2.0, 0.0).unwrap();
        let rp = RegPotential::new(base, 0.1, 0.0).unwrap();
        let r = find_r_star(&rp, Tail::Upper, CoercivityTarget::Entropy).unwrap();
        let d = |x| coercivity_deficit(&rp, x, Tail::Upper, CoercivityTarget::Entropy);
        assert!(r > 2.0);
        assert!(d(r) >= 0.0);
        assert!(d(r - 0.01) < 0.0);
        let oracle = bisect_root(d, 2.0, 10.0);
        assert!((oracle - r).abs() < 1e-8, "{oracle} vs {r}");
        for i in 0..200 {
            let x = r + 10.0 * i as f64 / 199.0;
            assert!(d(x) >= 0.0);
        }
        let lower = find_r_star(&rp, Tail::Lower, CoercivityTarget::Entropy).unwrap();
        assert!((lower + r).abs() < 1e-8);
    }

    #[test]
    fn r_star_logistic_target() {
        let rp = RegPotential::new(fh(), 0.05, 2.0).unwrap();
        let r = find_r_star(&rp, Tail::Upper, CoercivityTarget::Logistic).unwrap();
        assert!(coercivity_deficit(&rp, r, Tail::Upper, CoercivityTarget::Logistic) >= 0.0);
        assert!(r >= 2.0);
    }
}
