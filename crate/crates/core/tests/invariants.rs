use std::f64::consts::PI;

use proptest::prelude::*;

use nsch_core::cli_io::RunConfig;
use nsch_core::diagnostics::{dissipation_and_remainder, energy, mass_bracket, mass_envelope};
use nsch_core::dynamics::{ModelParams, Potential, SigmaForm, State};
use nsch_core::init::{random_mixture, InitialData};
use nsch_core::potential::{psi0_prime, young_gap, PotentialParams, RegPotential, SingularMode};
use nsch_core::timestepper::{exact_mean_update, SchemeConfig};
use nsch_core::{DomainMode, Error, Grid, NormKind, ScalarField, VectorField};

fn torus(n: usize) -> Grid {
    Grid::new(DomainMode::Torus, (2.0 * PI, 2.0 * PI), (n, n)).unwrap()
}

fn rect(n: usize) -> Grid {
    Grid::new(DomainMode::NeumannRect, (3.0, 2.0), (n, n)).unwrap()
}

fn params(chi: f64, kappa: f64, b_star: f64) -> ModelParams {
    ModelParams {
        eta1: 1.0,
        eta2: 2.0,
        m_lo: 0.5,
        m_hi: 1.0,
        chi,
        kappa,
        b_star,
        gamma_plap: 0.4,
        potential: Potential::regularized(1.0, 2.0, 0.05, chi).unwrap(),
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flory_huggins_needs_theta_below_critical(theta in -1.0f64..3.0, theta_c in -1.0f64..3.0) {
        let ok = PotentialParams::flory_huggins(theta, theta_c).is_ok();
        prop_assert_eq!(ok, theta > 0.0 && theta < theta_c);
    }

    #[test]
    fn accepted_regularizations_meet_the_width_condition(
        theta in 0.1f64..1.9,
        eps in 1e-4f64..0.9,
        chi in -3.0f64..3.0,
    ) {
        let base = PotentialParams::flory_huggins(theta, 2.0).unwrap();
        if let Ok(rp) = RegPotential::new(base, eps, chi) {
            prop_assert!(psi0_prime(1.0 - eps, &base, SingularMode::Strict).unwrap() >= 1.0);
            prop_assert!(psi0_prime(-1.0 + eps, &base, SingularMode::Strict).unwrap() <= -1.0);
            for (dv, dd) in rp.knot_jumps() {
                prop_assert!(dv <= 1e-10 && dd <= 1e-10, "jumps {dv:e} {dd:e}");
            }
        }
    }

    #[test]
    fn young_gap_is_nonnegative(a in 0.0f64..60.0, b in 0.0f64..1e6) {
        let gap = young_gap(a, b).unwrap();
        prop_assert!(gap >= -1e-12 * (1.0 + a * b));
    }

    #[test]
    fn round_trip_is_exact(seed in any::<u64>(), neumann in any::<bool>()) {
        let g = if neumann { rect(16) } else { torus(16) };
        let f = random_mixture(&g, 0.3, 2.0, 12.0, seed);
        let back = f.spectrum().to_field();
        let scale = f.norm(NormKind::Linf);
        for (a, b) in f.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn leray_output_is_solenoidal(s1 in any::<u64>(), s2 in any::<u64>(), amp in 0.01f64..100.0) {
        let g = torus(32);
        let u = VectorField::new(random_mixture(&g, 1.0, amp, 15.0, s1), random_mixture(&g, -1.0, amp, 15.0, s2)).unwrap();
        let p = u.leray_project().unwrap();
        let div = p.divergence().unwrap().norm(NormKind::Linf);
        prop_assert!(div <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn initial_data_class_is_enforced(peak in 0.1f64..1.5, sigma_lo in -0.5f64..0.5) {
        let g = torus(16);
        let data = InitialData {
            v0: None,
            phi0: random_mixture(&g, 0.0, peak, 4.0, 1),
            sigma0: ScalarField::from_fn(&g, |x, _| sigma_lo + 0.5 * (1.0 + x.cos())),
            gamma: 0.2,
            n_mollify: 100,
        };
        let ok = data.validate().is_ok();
        prop_assert_eq!(ok, peak <= 1.0 && sigma_lo >= 0.0);
    }

    #[test]
    fn compatibility_condition(alpha in 0.0f64..1.0, h in -1.0f64..1.0, zero_alpha in any::<bool>()) {
        let alpha = if zero_alpha { 0.0 } else { alpha };
        let p = ModelParams { alpha, h_const: h, ..Default::default() };
        let ok = p.validate().is_ok();
        prop_assert_eq!(ok, if alpha > 0.0 { h.abs() < alpha } else { h == 0.0 });
        if !ok {
            prop_assert!(p.validate().unwrap_err().to_string().contains("(H4)"));
        }
    }

    #[test]
    fn config_errors_name_the_hypothesis(alpha in 0.01f64..1.0, h in 0.0f64..2.0) {
        prop_assume!(h >= alpha);
        let text = format!("model.alpha = {alpha}\nmodel.h_const = {h}\n");
        let err = RunConfig::parse(&text).unwrap_err();
        let named = matches!(err, Error::Hypothesis { .. });
        prop_assert!(named);
        prop_assert!(err.to_string().contains("(H4)"));
    }

    #[test]
    fn mobility_bounds_ordered(lo in 0.1f64..2.0, hi in 0.1f64..2.0) {
        let p = ModelParams { m_lo: lo, m_hi: hi, ..Default::default() };
        prop_assert_eq!(p.validate().is_ok(), lo <= hi);
    }

    #[test]
    fn scheme_config_bounds(dt in -1e-3f64..1e-2, k in 1.0f64..20.0) {
        let g = torus(32);
        let cfg = SchemeConfig::new(dt, 1.0, k);
        prop_assert_eq!(cfg.validate(g.max_cutoff()).is_ok(), dt > 0.0 && k <= g.max_cutoff());
    }

    #[test]
    fn prepared_velocity_is_solenoidal(s1 in any::<u64>(), s2 in any::<u64>()) {
        let g = torus(32);
        let data = InitialData {
            v0: Some(VectorField::new(random_mixture(&g, 0.0, 1.0, 8.0, s1), random_mixture(&g, 0.0, 1.0, 8.0, s2)).unwrap()),
            phi0: random_mixture(&g, 0.1, 0.5, 6.0, s1 ^ s2),
            sigma0: ScalarField::constant(&g, 1.0),
            gamma: 0.1,
            n_mollify: 500,
        };
        let pr = data.prepare(g.max_cutoff()).unwrap();
        let v = pr.v.unwrap();
        prop_assert!(v.divergence().unwrap().norm(NormKind::Linf) <= 1e-12 * v.l2_norm().max(1e-300));
    }

    #[test]
    fn energy_pieces_and_dissipation_signs(
        seed in any::<u64>(),
        chi in -2.0f64..2.0,
        sigma_amp in 0.0f64..1.0,
        neumann in any::<bool>(),
    ) {
        let g = if neumann { rect(16) } else { torus(16) };
        let p = params(chi, 0.3, 0.5);
        let phi = random_mixture(&g, 0.0, 0.8, 5.0, seed).truncate(g.max_cutoff());
        // nonnegative on the grid by construction
        let sigma = random_mixture(&g, 0.0, 1.0, 5.0, seed.wrapping_add(1)).map(|v| 1.0 + sigma_amp * v);
        let v = (!neumann).then(|| {
            VectorField::new(random_mixture(&g, 0.0, 0.5, 4.0, seed ^ 7), random_mixture(&g, 0.0, 0.5, 4.0, seed ^ 9))
                .unwrap()
                .leray_project()
                .unwrap()
        });
        let s = State::new(0.0, v, phi, sigma, &p, Some(g.max_cutoff())).unwrap();
        let e = energy(&s, &p, 1e-12);
        let sum = e.kinetic + e.gradient + e.plap + e.potential + e.entropy + e.cross;
        let scale = [e.kinetic, e.gradient, e.plap, e.potential, e.entropy, e.cross]
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!((e.total() - sum).abs() <= 1e-12 * scale.max(1.0));
        let d = dissipation_and_remainder(&s, &p, 1e-12);
        prop_assert!(d.visc >= 0.0 && d.mu >= 0.0 && d.fisher >= 0.0, "{d:?}");
    }

    #[test]
    fn exact_mean_stays_in_envelope_and_bracket(
        m0 in -0.99f64..0.99,
        alpha in 0.01f64..2.0,
        frac in -0.99f64..0.99,
        dt in 1e-4f64..0.1,
    ) {
        let p = ModelParams { alpha, h_const: frac * alpha, ..Default::default() };
        let (blo, bhi) = mass_bracket(m0, &p);
        let mut m = m0;
        for n in 1..=50 {
            m = exact_mean_update(m, &p, dt);
            let (lo, hi) = mass_envelope(m0, &p, n as f64 * dt);
            let tol = 1e-13;
            prop_assert!(m >= lo - tol && m <= hi + tol);
            prop_assert!(m >= blo - tol && m <= bhi + tol);
        }
    }
}

#[test]
fn sigma_form_names() {
    assert_eq!(SigmaForm::CrossDiffusion.name(), "cross_diffusion");
    assert_eq!(SigmaForm::LinearTransport.name(), "linear_transport");
}
