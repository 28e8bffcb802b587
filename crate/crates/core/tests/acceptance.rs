//! Acceptance suite: one PASS/FAIL line per criterion, each with a wall-clock
//! budget. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nsch_core::diagnostics::{coercivity_floor, coercivity_margin, mass_bracket, mass_envelope, neg1_grid_min};
use nsch_core::dynamics::{ModelParams, Potential, SigmaForm, State};
use nsch_core::init::{elliptic_smooth_phi0, gaussian_blob, random_mixture, stripe, taylor_green, InitialData};
use nsch_core::potential::{
    coercivity_deficit, find_r_star, young_gap, Branch, CoercivityTarget, PotentialParams, RegPotential, Tail,
};
use nsch_core::spectral::leray;
use nsch_core::timestepper::{run, twin_run, NullObserver, Observer, Schedule, SchemeConfig, Stepper};
use nsch_core::{DomainMode, Grid, NormKind, Result, ScalarField, VectorField};

type Verdict = Result<(bool, String)>;
type Criterion = (&'static str, u64, fn() -> Verdict);

fn torus(n: usize) -> Grid {
    Grid::new(DomainMode::Torus, (2.0 * PI, 2.0 * PI), (n, n)).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.data().iter().zip(b.data()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// θ/2[(1+r)ln(1+r) + (1−r)ln(1−r)] written out independently of the library.
fn psi0_oracle(r: f64, theta: f64) -> f64 {
    0.5 * theta * ((1.0 + r) * (1.0 + r).ln() + (1.0 - r) * (1.0 - r).ln())
}

fn regularization_suite() -> Verdict {
    let (theta, theta_c) = (1.0, 2.0);
    let base = PotentialParams::flory_huggins(theta, theta_c)?;
    let pairs = [
        (Branch::LowerExp, Branch::LowerLinear),
        (Branch::LowerLinear, Branch::Interior),
        (Branch::Interior, Branch::UpperLinear),
        (Branch::UpperLinear, Branch::UpperExp),
    ];
    let (mut jump, mut convex, mut sign, mut above, mut deficit) = (0.0f64, f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for eps in [0.01, 0.05, 0.1] {
        for chi in [0.0, 0.5, -0.5, 2.0, -2.0] {
            let rp = RegPotential::new(base, eps, chi)?;
            for (&(l, r), &k) in pairs.iter().zip(rp.knots().iter()) {
                let (vl, vr) = (rp.value_on(l, k), rp.value_on(r, k));
                let (dl, dr) = (rp.prime_on(l, k), rp.prime_on(r, k));
                jump = jump
                    .max((vl - vr).abs() / vl.abs().max(1.0))
                    .max((dl - dr).abs() / dl.abs().max(1.0));
            }
            for r in linspace(-10.0, 10.0, 10_000) {
                convex = convex.min(rp.second(r) - theta);
                sign = sign.min(r * rp.prime(r));
            }
            for r in linspace(-1.0 + 1e-6, 1.0 - 1e-6, 10_000) {
                above = above.max(rp.value(r) - psi0_oracle(r, theta));
            }
            let upper = find_r_star(&rp, Tail::Upper, CoercivityTarget::Entropy)?;
            let lower = find_r_star(&rp, Tail::Lower, CoercivityTarget::Entropy)?;
            for s in linspace(0.0, 10.0, 1001) {
                deficit = deficit
                    .min(coercivity_deficit(&rp, upper + s, Tail::Upper, CoercivityTarget::Entropy))
                    .min(coercivity_deficit(&rp, lower - s, Tail::Lower, CoercivityTarget::Entropy));
            }
        }
    }
    let ok = jump <= 1e-10 && convex >= 0.0 && sign >= 0.0 && above <= 1e-14 && deficit >= 0.0;
    Ok((
        ok,
        format!(
            "knot jump {jump:.1e}, min(psi''-theta) {convex:.3e}, min r*psi' {sign:.1e}, max(psi_eps-psi0) {above:.1e}, min deficit {deficit:.3e}"
        ),
    ))
}

fn young_inequality() -> Verdict {
    let mut gap_min = f64::INFINITY;
    for a in linspace(0.0, 50.0, 100) {
        for b in linspace(0.0, 50.0, 100) {
            gap_min = gap_min.min(young_gap(a, b)?);
        }
    }
    // equality curve b = eᵃ − 1 inside the sampled square
    let mut eq_max = 0.0f64;
    for a in linspace(0.0, 51f64.ln(), 50) {
        eq_max = eq_max.max(young_gap(a, a.exp_m1())?.abs());
    }
    Ok((
        gap_min >= -1e-12 && eq_max <= 1e-10,
        format!("min gap {gap_min:.3e}, max |gap| on b = e^a - 1: {eq_max:.1e}"),
    ))
}

fn smoothing() -> Verdict {
    let g = torus(128);
    let area = g.area();
    let (mut mean_err, mut mode_err, mut linf_excess) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut trio_ok = true;
    for i in 0..100u64 {
        let gamma = 0.05 + 0.45 * (i as f64 / 99.0);
        let mean = -0.5 + (i % 11) as f64 / 10.0;
        let amp = (1.0 - mean.abs()) * (0.5 + 0.5 * ((i * 7) % 13) as f64 / 12.0);
        let phi0 = random_mixture(&g, mean, amp, 4.0 + (i % 9) as f64, i);
        let s = elliptic_smooth_phi0(&phi0, gamma)?;
        mean_err = mean_err.max((s.mean() - (1.0 - gamma) * phi0.mean()).abs());
        linf_excess = linf_excess.max(s.norm(NormKind::Linf) - (1.0 - gamma));
        let (a, b) = (phi0.spectrum(), s.spectrum());
        let l2 = |x: &nsch_core::Spectrum| x.norm(NormKind::L2);
        let lap = (area * b.weighted_power(|k2| k2 * k2)).sqrt();
        trio_ok &= l2(&b) <= l2(&a) && b.grad_norm() <= a.grad_norm() && gamma * lap <= 2.0 * l2(&a);
    }
    for (m, n) in [(1.0, 0.0), (3.0, 2.0), (7.0, 5.0), (20.0, 11.0)] {
        let gamma = 0.3;
        let f = ScalarField::from_fn(&g, |x, y| (m * x + n * y).cos());
        let s = elliptic_smooth_phi0(&f, gamma)?;
        let factor = (1.0 - gamma) / (1.0 + gamma * (m * m + n * n));
        let scaled = f.map(|v| factor * v);
        mode_err = mode_err.max(max_abs_diff(&s, &scaled));
    }
    Ok((
        mean_err <= 1e-14 && mode_err <= 1e-12 && linf_excess <= 1e-8 && trio_ok,
        format!(
            "mean err {mean_err:.1e}, mode factor err {mode_err:.1e}, max(|phi_g|inf-(1-g)) {linf_excess:.3e}, norm trio {}",
            if trio_ok { "holds" } else { "violated" }
        ),
    ))
}

fn spectral_suite() -> Verdict {
    let mut worst = 0.0f64;
    let mut note = |name: &str, err: f64, acc: &mut Vec<String>| {
        worst = worst.max(err);
        acc.push(format!("{name} {err:.1e}"));
    };
    let mut parts = Vec::new();
    let g = torus(128);
    let rect = Grid::new(DomainMode::NeumannRect, (3.0, 2.0), (96, 64))?;
    for (label, grid) in [("torus", &g), ("rect", &rect)] {
        let f = random_mixture(grid, 0.1, 0.8, 20.0, 3);
        let spec = f.spectrum();
        let quad = f.integrate_with(|v| v * v);
        note(&format!("{label} parseval"), (quad - grid.area() * spec.power()).abs() / quad, &mut parts);
        note(&format!("{label} round-trip"), max_abs_diff(&spec.to_field(), &f), &mut parts);
    }
    // Leray: idempotent, kills gradients, keeps solenoidal fields
    let u = VectorField::new(random_mixture(&g, 0.0, 1.0, 20.0, 5), random_mixture(&g, 0.0, 1.0, 20.0, 6))?;
    let pu = u.leray_project()?;
    let ppu = pu.leray_project()?;
    note("leray idempotence", max_abs_diff(&pu.x, &ppu.x).max(max_abs_diff(&pu.y, &ppu.y)), &mut parts);
    note("leray divergence", pu.divergence()?.norm(NormKind::Linf), &mut parts);
    let q = random_mixture(&g, 0.0, 1.0, 20.0, 7);
    let (qx, qy) = q.spectrum().grad()?;
    let (lx, ly) = leray(&qx, &qy)?;
    let scale = qx.norm(NormKind::Linf).max(qy.norm(NormKind::Linf));
    note(
        "leray gradient",
        lx.to_field().norm(NormKind::Linf).max(ly.to_field().norm(NormKind::Linf)) / scale,
        &mut parts,
    );
    let tg = taylor_green(&g, 1.0);
    let ptg = tg.leray_project()?;
    note("leray solenoidal", max_abs_diff(&tg.x, &ptg.x).max(max_abs_diff(&tg.y, &ptg.y)), &mut parts);
    // inverse Laplacian on eigenfunctions
    let mut inv = 0.0f64;
    for (m, n) in [(1.0, 1.0), (2.0, 5.0), (13.0, 4.0)] {
        let f = ScalarField::from_fn(&g, |x, y| (m * x).cos() * (n * y).sin());
        let u = f.inv_laplacian_zero_mean();
        inv = inv.max(max_abs_diff(&u, &f.map(|v| v / (m * m + n * n))));
        let (a, b) = (m * PI / 3.0, n * PI / 2.0);
        let f = ScalarField::from_fn(&rect, |x, y| (a * x).cos() * (b * y).cos());
        let u = f.inv_laplacian_zero_mean();
        inv = inv.max(max_abs_diff(&u, &f.map(|v| v / (a * a + b * b))));
    }
    note("inverse laplacian", inv, &mut parts);
    Ok((worst <= 1e-11, parts.join(", ")))
}

fn plap_identity() -> Verdict {
    let g = torus(128);
    let area = g.area();
    let mut worst = f64::INFINITY;
    for seed in 0..100u64 {
        let amp = 0.1 + 0.9 * (seed as f64 / 99.0);
        let phi = random_mixture(&g, 0.0, amp, 16.0, 1000 + seed);
        let spec = phi.spectrum();
        let flux = phi.grad_norm_sq().div_weighted_grad(&spec)?;
        let pairing = area * flux.inner(&spec.laplacian());
        let h2 = (area * spec.weighted_power(|k2| (1.0 + k2) * (1.0 + k2))).sqrt();
        worst = worst.min(pairing / h2.powi(4));
    }
    Ok((worst >= -1e-10, format!("min <div(|grad phi|^2 grad phi), lap phi>/|phi|_H2^4 = {worst:.3e}")))
}

fn energy_params(sources: bool) -> ModelParams {
    let chi = 1.0;
    let (kappa, alpha, h_const, b_star) = if sources { (0.2, 0.5, 0.05, 0.5) } else { (0.0, 0.0, 0.0, 0.0) };
    ModelParams {
        eta1: 1.0,
        eta2: 0.5,
        m_lo: 0.5,
        m_hi: 1.5,
        chi,
        kappa,
        alpha,
        h_const,
        b_star,
        eps_interface: 1.0,
        gamma_plap: 0.3,
        sigma_form: SigmaForm::CrossDiffusion,
        potential: Potential::regularized(1.0, 2.0, 0.05, chi).unwrap(),
    }
}

fn coupled_data(g: &Grid, gamma: f64) -> InitialData {
    InitialData {
        v0: Some(taylor_green(g, 0.5)),
        phi0: ScalarField::from_fn(g, |x, y| 0.5 * x.cos() * y.sin() + 0.2 * (2.0 * x + y).cos()),
        sigma0: ScalarField::from_fn(g, |x, y| 1.0 + 0.4 * x.cos() * y.cos()),
        gamma,
        n_mollify: 1000,
    }
}

fn energy_law() -> Verdict {
    let g = torus(128);
    let init = coupled_data(&g, 0.3);
    let schedule = Schedule { diag_interval: 100, snapshot_interval: 0 };
    let p = energy_params(true);
    let mut maxima = Vec::new();
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let cfg = SchemeConfig::new(dt, 0.5, g.max_cutoff());
        maxima.push(run(&init, &cfg, &p, schedule, &mut NullObserver)?.max_abs_residual());
    }
    let ratios = [maxima[0] / maxima[1], maxima[1] / maxima[2]];
    let ratios_ok = ratios.iter().all(|r| (3.0..=6.0).contains(r));

    let p = energy_params(false);
    let dt = 2.5e-4;
    let cfg = SchemeConfig::new(dt, 2000.0 * dt, g.max_cutoff());
    let out = run(&init, &cfg, &p, schedule, &mut NullObserver)?;
    let mut worst = f64::NEG_INFINITY;
    for (i, r) in out.residuals.iter().enumerate() {
        let rise = out.energies[i + 1] - out.energies[i];
        worst = worst.max(rise - 10.0 * r.abs() * dt);
    }
    let monotone_ok = out.steps == 2000 && worst <= 0.0;
    Ok((
        ratios_ok && monotone_ok,
        format!(
            "max |residual| {:.3e} / {:.3e} / {:.3e}, ratios {:.2} {:.2}; sources off: {} steps, max(dE - 10|r|dt) = {worst:.3e}, E {:.6} -> {:.6}",
            maxima[0],
            maxima[1],
            maxima[2],
            ratios[0],
            ratios[1],
            out.steps,
            out.energies[0],
            out.energies.last().copied().unwrap_or(f64::NAN)
        ),
    ))
}

fn mass_dynamics() -> Verdict {
    let g = torus(128);
    let gamma = 0.1;
    let phi_bar0 = 0.6;
    let p = ModelParams {
        alpha: 0.5,
        h_const: 0.05,
        ..energy_params(true)
    };
    // the smoothing scales the mean by 1 − γ
    let raw_mean = phi_bar0 / (1.0 - gamma);
    let init = InitialData {
        phi0: ScalarField::from_fn(&g, |x, y| raw_mean + 0.2 * x.cos() * y.sin()),
        ..coupled_data(&g, gamma)
    };
    let cfg = SchemeConfig::new(2e-3, 1.0, g.max_cutoff());
    let out = run(&init, &cfg, &p, Schedule::default(), &mut NullObserver)?;
    let m0 = out.records[0].mean_phi;
    let c = p.h_const / p.alpha;
    let (mut track, mut outside) = (0.0f64, 0.0f64);
    let bracket = mass_bracket(m0, &p);
    for r in &out.records {
        let decay = (-p.alpha * r.t).exp();
        track = track.max((r.mean_phi - (m0 * decay + c * (1.0 - decay))).abs());
        let (lo, hi) = mass_envelope(m0, &p, r.t);
        // the exact trajectory runs along the upper edge; allow roundoff only
        let slack = 1e-12;
        outside = outside
            .max(lo - r.mean_phi - slack)
            .max(r.mean_phi - hi - slack)
            .max(bracket.0 - r.mean_phi)
            .max(r.mean_phi - bracket.1);
    }
    Ok((
        (m0 - phi_bar0).abs() <= 1e-14 && track <= 1e-8 && outside <= 0.0,
        format!("phi_bar0 {m0:.15}, max tracking error {track:.1e}, envelope excursion {}", if outside > 0.0 { format!("{outside:.1e}") } else { "none".into() }),
    ))
}

fn sign_params(form: SigmaForm) -> ModelParams {
    let chi = 2.0;
    ModelParams {
        chi,
        kappa: 0.1,
        b_star: 1.0,
        sigma_form: form,
        potential: Potential::regularized(1.0, 2.0, 0.05, chi).unwrap(),
        ..Default::default()
    }
}

fn sign_data(g: &Grid) -> InitialData {
    InitialData {
        v0: Some(VectorField::zeros(g)),
        phi0: stripe(g, 0.9, 0.3),
        sigma0: gaussian_blob(g, 1.0, 0.4, 0.0),
        gamma: 0.2,
        n_mollify: 1000,
    }
}

fn sign_preservation() -> Verdict {
    let g = torus(128);
    let init = sign_data(&g);
    let cfg = SchemeConfig::new(1e-3, 0.5, g.max_cutoff());
    let mut lows = Vec::new();
    for form in [SigmaForm::CrossDiffusion, SigmaForm::LinearTransport] {
        let out = run(&init, &cfg, &sign_params(form), Schedule::default(), &mut NullObserver)?;
        lows.push(out.records.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min));
    }
    Ok((
        lows[0] >= -1e-8 && lows[1] < -1e-3,
        format!("min sigma: cross_diffusion {:.3e}, linear_transport {:.3e}", lows[0], lows[1]),
    ))
}

fn sigma_rate(s: &State, p: &ModelParams) -> f64 {
    s.phi
        .zip_map(&s.sigma, |r, v| p.beta_cutoff(r) * v - p.kappa * v * v)
        .expect("same grid")
        .integral()
}

/// Max over steps of |Δ∫σ/dt − trapezoidal mean of ∫(β(φ)σ − κσ²)|, and
/// whether ∫σ never increased.
fn sigma_mass_errors(init: &InitialData, p: &ModelParams, dt: f64, t_end: f64) -> Result<(f64, bool)> {
    let g = init.phi0.grid();
    let pr = init.prepare(g.max_cutoff())?;
    let s0 = State::new(0.0, pr.v, pr.phi, pr.sigma, p, Some(pr.cutoff))?;
    let cfg = SchemeConfig::new(dt, t_end, pr.cutoff);
    let mut st = Stepper::new(&s0, &cfg, p)?;
    let (mut mass, mut rate) = (st.state().sigma.integral(), sigma_rate(st.state(), p));
    let (mut err, mut monotone) = (0.0f64, true);
    let n = (t_end / dt).round() as usize;
    for _ in 0..n {
        st.advance()?;
        let (m1, r1) = (st.state().sigma.integral(), sigma_rate(st.state(), p));
        err = err.max(((m1 - mass) / dt - 0.5 * (rate + r1)).abs());
        monotone &= m1 <= mass;
        mass = m1;
        rate = r1;
    }
    Ok((err, monotone))
}

fn sigma_mass() -> Verdict {
    let g = torus(128);
    let init = coupled_data(&g, 0.1);
    let p = ModelParams {
        b_star: 1.0,
        kappa: 0.5,
        ..energy_params(true)
    };
    let (e1, _) = sigma_mass_errors(&init, &p, 2e-3, 0.2)?;
    let (e2, _) = sigma_mass_errors(&init, &p, 1e-3, 0.2)?;
    let order = (e1 / e2).log2();
    let no_growth = ModelParams { b_star: 0.0, ..p };
    let (_, monotone) = sigma_mass_errors(&init, &no_growth, 1e-3, 0.2)?;
    Ok((
        order >= 1.8 && monotone,
        format!(
            "max |d/dt int sigma - rate| {e1:.3e} (dt 2e-3), {e2:.3e} (dt 1e-3), order {order:.2}; beta = 0 mass nonincreasing: {monotone}"
        ),
    ))
}

fn continuous_dependence() -> Verdict {
    let g = torus(128);
    let init = coupled_data(&g, 0.3);
    let p = ModelParams {
        m_lo: 1.0,
        m_hi: 1.0,
        ..energy_params(true)
    };
    let deltas = [1e-3, 1e-4, 1e-5];
    let cfg = SchemeConfig::new(1e-3, 0.25, g.max_cutoff());
    let series = twin_run(&init, &deltas, &cfg, &p)?;
    let sups: Vec<f64> = series.iter().map(|s| s.sup()).collect();
    let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
    let orders: Vec<f64> = sups.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    Ok((
        decreasing && orders.iter().all(|&o| o >= 1.0),
        format!(
            "sup W {:.3e} / {:.3e} / {:.3e}, orders in delta {:.2} {:.2}",
            sups[0], sups[1], sups[2], orders[0], orders[1]
        ),
    ))
}

struct MarginTracker {
    rp: RegPotential,
    worst: f64,
    tail: Option<f64>,
    error: Option<nsch_core::Error>,
}

impl Observer for MarginTracker {
    fn record(&mut self, _: usize, _: &nsch_core::diagnostics::DiagnosticsRecord) -> Result<()> {
        Ok(())
    }

    fn snapshot(&mut self, _: usize, s: &State) -> Result<()> {
        match coercivity_margin(s, &self.rp, 1e-12) {
            Ok(rep) => {
                self.worst = self.worst.min(rep.margin);
                if let Some(t) = rep.tail_min {
                    self.tail = Some(self.tail.map_or(t, |m: f64| m.min(t)));
                }
            }
            Err(e) => self.error = Some(e),
        }
        Ok(())
    }
}

fn coercivity() -> Verdict {
    let g = torus(128);
    let rp = RegPotential::new(PotentialParams::flory_huggins(1.0, 2.0)?, 0.05, 2.0)?;
    let floor = coercivity_floor(&rp, g.area())?;
    let mut tracker = MarginTracker { rp, worst: f64::INFINITY, tail: None, error: None };
    let cfg = SchemeConfig::new(1e-3, 0.5, g.max_cutoff());
    let schedule = Schedule { diag_interval: 100, snapshot_interval: 1 };
    run(&sign_data(&g), &cfg, &sign_params(SigmaForm::CrossDiffusion), schedule, &mut tracker)?;
    if let Some(e) = tracker.error {
        return Err(e);
    }
    let upper = find_r_star(&rp, Tail::Upper, CoercivityTarget::Entropy)?;
    let lower = find_r_star(&rp, Tail::Lower, CoercivityTarget::Entropy)?;
    let sigmas: Vec<f64> = std::iter::once(0.0).chain(linspace(-12.0, 12.0, 400).map(|e| 10f64.powf(e))).collect();
    let up: Vec<f64> = linspace(upper, upper + 10.0, 200).collect();
    let lo: Vec<f64> = linspace(lower - 10.0, lower, 200).collect();
    let pointwise = neg1_grid_min(&rp, Tail::Upper, &up, &sigmas).min(neg1_grid_min(&rp, Tail::Lower, &lo, &sigmas));
    Ok((
        tracker.worst >= -floor && pointwise >= -1e-10 && tracker.tail.is_none_or(|t| t >= -1e-10),
        format!(
            "min margin {:.4e} vs floor -C* = {:.4e}, sampled tail inequality min {pointwise:.3e} (r* = {upper:.4}, r_low = {lower:.4})",
            tracker.worst, -floor
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("potential regularization", 1, regularization_suite),
        ("generalized Young inequality", 1, young_inequality),
        ("initial-data smoothing", 5, smoothing),
        ("spectral operators", 5, spectral_suite),
        ("p-Laplace torus identity", 10, plap_identity),
        ("energy law", 300, energy_law),
        ("mass dynamics", 60, mass_dynamics),
        ("sigma sign: cross diffusion vs linear transport", 180, sign_preservation),
        ("sigma mass identity", 60, sigma_mass),
        ("continuous dependence", 300, continuous_dependence),
        ("coercivity", 60, coercivity),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let (ok, detail) = match verdict {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} ({:.2} s of {budget} s{})",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
