//! Linear-implicit IMEX integration of the truncated system.
//!
//! The constant-coefficient stiff parts
//!
//! ```text
//! L_φ = −m̄(ε|k|⁴ + S|k|²) − α,   L_σ = −|k|²,   L_v = −η̄|k|²
//! ```
//!
//! are implicit and everything else (N = F − Lu) is explicit. Order 2 is
//! SBDF2 started by a Richardson-extrapolated pair of order-1 steps; the mean
//! of φ follows its linear ODE exactly.

use num_complex::Complex64;

use crate::diagnostics::{
    dissipation_and_remainder, energy, mass_monitor, residual_from_parts, sigma_monitor, uniqueness_metric,
    DiagnosticsRecord, Dissipation, Energy, ENTROPY_FLOOR,
};
use crate::dynamics::{Dynamics, ModelParams, SpectralState, State, Tendency};
use crate::error::{Error, Result};
use crate::init::InitialData;
use crate::par;
use crate::spectral::{Spectrum, VectorField};

/// Time-discretization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Radial mode cutoff K (mode-index units).
    pub cutoff: f64,
    /// 1 or 2.
    pub imex_order: u8,
    /// Stabilization S; `None` uses half the concavity of Ψ/ε.
    pub stabilization: Option<f64>,
    pub max_halvings: usize,
    /// |residual| above which a step is retried with dt/2.
    pub residual_trigger: f64,
    pub entropy_floor: f64,
}

impl SchemeConfig {
    pub fn new(dt: f64, t_end: f64, cutoff: f64) -> Self {
        Self {
            dt,
            t_end,
            cutoff,
            imex_order: 2,
            stabilization: None,
            max_halvings: 4,
            residual_trigger: f64::INFINITY,
            entropy_floor: ENTROPY_FLOOR,
        }
    }

    pub fn validate(&self, max_cutoff: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Parameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.cutoff >= 0.0 && self.cutoff <= max_cutoff) {
            return Err(Error::Parameter(format!(
                "cutoff {} outside [0, {max_cutoff}] (2/3 rule)",
                self.cutoff
            )));
        }
        if !matches!(self.imex_order, 1 | 2) {
            return Err(Error::Parameter(format!("imex_order must be 1 or 2, got {}", self.imex_order)));
        }
        if let Some(s) = self.stabilization {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Parameter(format!("stabilization must be >= 0, got {s}")));
            }
        }
        if !(self.residual_trigger > 0.0) {
            return Err(Error::Parameter("residual_trigger must be > 0".into()));
        }
        if !(self.entropy_floor > 0.0) {
            return Err(Error::Parameter("entropy_floor must be > 0".into()));
        }
        Ok(())
    }

    /// Number of steps and the step actually used so that they tile [0, t_end].
    fn tiling(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// Per-mode implicit symbols.
#[derive(Debug, Clone)]
struct Symbols {
    phi: Vec<f64>,
    sigma: Vec<f64>,
    v: Vec<f64>,
}

impl Symbols {
    fn new(d: &Dynamics, s: f64) -> Self {
        let p = d.params();
        let k2 = d.grid().k2();
        let (m, eps, eta) = (p.mean_mobility(), p.eps_interface, p.mean_viscosity());
        Self {
            phi: k2.iter().map(|&k| -m * (eps * k * k + s * k) - p.alpha).collect(),
            sigma: k2.iter().map(|&k| -k).collect(),
            v: k2.iter().map(|&k| -eta * k).collect(),
        }
    }
}

/// Explicit remainders N = F − Lu.
#[derive(Debug, Clone)]
struct Explicit {
    phi: Spectrum,
    sigma: Spectrum,
    v: Option<[Spectrum; 2]>,
}

fn remainder(f: &Spectrum, l: &[f64], u: &Spectrum) -> Spectrum {
    let mut out = f.clone();
    for ((o, &li), ui) in out.coeffs_mut().iter_mut().zip(l).zip(u.coeffs()) {
        *o -= ui * li;
    }
    out
}

fn explicit_of(sym: &Symbols, u: &SpectralState, f: &Tendency) -> Explicit {
    Explicit {
        phi: remainder(&f.phi, &sym.phi, &u.phi),
        sigma: remainder(&f.sigma, &sym.sigma, &u.sigma),
        v: match (&u.v, &f.v) {
            (Some([ux, uy]), Some([fx, fy])) => Some([remainder(fx, &sym.v, ux), remainder(fy, &sym.v, uy)]),
            _ => None,
        },
    }
}

/// (u + dt·N)/(1 − dt·L)
fn euler_field(u: &Spectrum, n: &Spectrum, l: &[f64], dt: f64) -> Spectrum {
    let mut out = u.clone();
    for (((o, ni), &li), ui) in out.coeffs_mut().iter_mut().zip(n.coeffs()).zip(l).zip(u.coeffs()) {
        *o = (ui + ni * dt) / (1.0 - dt * li);
    }
    out
}

/// (4uⁿ − uⁿ⁻¹ + 2dt(2Nⁿ − Nⁿ⁻¹))/(3 − 2dt·L)
fn sbdf2_field(u: &Spectrum, u_old: &Spectrum, n: &Spectrum, n_old: &Spectrum, l: &[f64], dt: f64) -> Spectrum {
    let mut out = u.clone();
    let it = out
        .coeffs_mut()
        .iter_mut()
        .zip(u_old.coeffs())
        .zip(n.coeffs().iter().zip(n_old.coeffs()))
        .zip(l);
    for (((o, &uo), (&ni, &no)), &li) in it {
        let num: Complex64 = *o * 4.0 - uo + (ni * 2.0 - no) * (2.0 * dt);
        *o = num / (3.0 - 2.0 * dt * li);
    }
    out
}

fn map_state<F>(u: &SpectralState, n: &Explicit, sym: &Symbols, f: F) -> SpectralState
where
    F: Fn(&Spectrum, &Spectrum, &[f64], usize) -> Spectrum,
{
    SpectralState {
        phi: f(&u.phi, &n.phi, &sym.phi, 0),
        sigma: f(&u.sigma, &n.sigma, &sym.sigma, 1),
        v: match (&u.v, &n.v) {
            (Some([ux, uy]), Some([nx, ny])) => Some([f(ux, nx, &sym.v, 2), f(uy, ny, &sym.v, 3)]),
            _ => None,
        },
    }
}

/// φ̄ after time `dt` of dφ̄/dt = −αφ̄ + ĥ.
pub fn exact_mean_update(mean: f64, p: &ModelParams, dt: f64) -> f64 {
    if p.alpha == 0.0 {
        mean + p.h_const * dt
    } else {
        let decay = (-p.alpha * dt).exp();
        mean * decay + p.h_const / p.alpha * (1.0 - decay)
    }
}

fn set_mean(s: &mut Spectrum, mean: f64) {
    s.coeffs_mut()[0] = Complex64::new(mean, 0.0);
}

fn spectral_is_finite(u: &SpectralState) -> bool {
    let ok = |s: &Spectrum| s.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite());
    ok(&u.phi) && ok(&u.sigma) && u.v.as_ref().is_none_or(|[a, b]| ok(a) && ok(b))
}

fn lincomb(a: f64, x: &SpectralState, b: f64, y: &SpectralState) -> SpectralState {
    let comb = |p: &Spectrum, q: &Spectrum| {
        let mut out = p.clone();
        out.scale(a);
        out.axpy(b, q);
        out
    };
    SpectralState {
        phi: comb(&x.phi, &y.phi),
        sigma: comb(&x.sigma, &y.sigma),
        v: match (&x.v, &y.v) {
            (Some([a0, a1]), Some([b0, b1])) => Some([comb(a0, b0), comb(a1, b1)]),
            _ => None,
        },
    }
}

/// A state known in coefficient space together with everything derived from it.
#[derive(Debug, Clone)]
struct Node {
    u: SpectralState,
    n: Explicit,
    state: State,
    energy: Energy,
    dissipation: Dissipation,
}

/// Outcome of [`Stepper::advance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    /// The step was accepted with this energy-law residual.
    Accepted { residual: f64 },
    /// The residual tripped the trigger; dt was halved and nothing advanced.
    Halved { residual: f64 },
}

/// Multistep integrator holding the current state and its history.
#[derive(Debug, Clone)]
pub struct Stepper {
    dynamics: Dynamics,
    cfg: SchemeConfig,
    sym_s: f64,
    sym: Symbols,
    dt: f64,
    steps: usize,
    /// Steps taken since the last change of dt.
    segment_steps: usize,
    segment_t0: f64,
    halvings: usize,
    cur: Node,
    prev: Option<(SpectralState, Explicit)>,
}

impl Stepper {
    /// Starts from a state whose fields already lie in the retained modes.
    pub fn new(state: &State, cfg: &SchemeConfig, p: &ModelParams) -> Result<Self> {
        let grid = state.grid().clone();
        cfg.validate(grid.max_cutoff())?;
        let dynamics = Dynamics::new(&grid, p.clone(), Some(cfg.cutoff))?;
        let s = cfg
            .stabilization
            .unwrap_or(0.5 * p.potential.concavity() / p.eps_interface);
        let sym = Symbols::new(&dynamics, s);
        let mut u = state.spectral();
        for f in [&mut u.phi, &mut u.sigma] {
            f.truncate_in_place(cfg.cutoff);
        }
        if let Some([a, b]) = &mut u.v {
            a.truncate_in_place(cfg.cutoff);
            b.truncate_in_place(cfg.cutoff);
        }
        let mut st = Self {
            dynamics,
            cfg: cfg.clone(),
            sym_s: s,
            sym,
            dt: cfg.dt,
            steps: 0,
            segment_steps: 0,
            segment_t0: state.t,
            halvings: 0,
            cur: Node {
                u: u.clone(),
                n: Explicit {
                    phi: u.phi.clone(),
                    sigma: u.sigma.clone(),
                    v: None,
                },
                state: state.clone(),
                energy: Energy::default(),
                dissipation: Dissipation::default(),
            },
            prev: None,
        };
        st.cur = st.node(u, state.t)?;
        Ok(st)
    }

    fn node(&self, u: SpectralState, t: f64) -> Result<Node> {
        if !spectral_is_finite(&u) {
            return Err(Error::Divergence { step: self.steps + 1 });
        }
        let f = self.dynamics.tendency(&u)?;
        let n = explicit_of(&self.sym, &u, &f);
        let state = State {
            t,
            v: u.v.as_ref().map(|[a, b]| VectorField::from_spectra(a, b)),
            phi: u.phi.to_field(),
            sigma: u.sigma.to_field(),
            mu: f.mu.to_field(),
        };
        let p = self.dynamics.params();
        let delta = self.cfg.entropy_floor;
        let energy = energy(&state, p, delta);
        let dissipation = dissipation_and_remainder(&state, p, delta);
        if !(state.mu.is_finite() && energy.total().is_finite() && dissipation.budget().is_finite()) {
            return Err(Error::Divergence { step: self.steps + 1 });
        }
        Ok(Node {
            u,
            n,
            state,
            energy,
            dissipation,
        })
    }

    fn euler(&self, u: &SpectralState, n: &Explicit, dt: f64) -> SpectralState {
        let mut out = map_state(u, n, &self.sym, |a, b, l, _| euler_field(a, b, l, dt));
        let m = exact_mean_update(u.phi.mean(), self.dynamics.params(), dt);
        set_mean(&mut out.phi, m);
        out
    }

    /// One self-starting step: IMEX Euler, or its Richardson extrapolation
    /// for order 2.
    fn startup(&self, dt: f64) -> Result<SpectralState> {
        let cur = &self.cur;
        let full = self.euler(&cur.u, &cur.n, dt);
        if self.cfg.imex_order == 1 {
            return Ok(full);
        }
        let half = self.euler(&cur.u, &cur.n, 0.5 * dt);
        if !spectral_is_finite(&half) {
            return Err(Error::Divergence { step: self.steps + 1 });
        }
        let f = self.dynamics.tendency(&half)?;
        let nh = explicit_of(&self.sym, &half, &f);
        let two = self.euler(&half, &nh, 0.5 * dt);
        let mut out = lincomb(2.0, &two, -1.0, &full);
        let m = exact_mean_update(cur.u.phi.mean(), self.dynamics.params(), dt);
        set_mean(&mut out.phi, m);
        Ok(out)
    }

    fn sbdf2(&self, prev: &(SpectralState, Explicit), dt: f64) -> SpectralState {
        let (u_old, n_old) = prev;
        let cur = &self.cur;
        let old = |i: usize| -> (&Spectrum, &Spectrum) {
            match i {
                0 => (&u_old.phi, &n_old.phi),
                1 => (&u_old.sigma, &n_old.sigma),
                _ => {
                    let [a, b] = u_old.v.as_ref().expect("velocity history");
                    let [c, d] = n_old.v.as_ref().expect("velocity history");
                    if i == 2 {
                        (a, c)
                    } else {
                        (b, d)
                    }
                }
            }
        };
        let mut out = map_state(&cur.u, &cur.n, &self.sym, |u, n, l, i| {
            let (uo, no) = old(i);
            sbdf2_field(u, uo, n, no, l, dt)
        });
        let m = exact_mean_update(cur.u.phi.mean(), self.dynamics.params(), dt);
        set_mean(&mut out.phi, m);
        out
    }

    /// Takes one step (or halves dt when the residual trips the trigger).
    pub fn advance(&mut self) -> Result<Advance> {
        let dt = self.dt;
        let u = match (&self.prev, self.cfg.imex_order) {
            (Some(prev), 2) => self.sbdf2(prev, dt),
            _ => self.startup(dt)?,
        };
        let t = self.segment_t0 + (self.segment_steps + 1) as f64 * dt;
        let node = self.node(u, t)?;
        let residual = residual_from_parts(
            self.cur.energy.total(),
            node.energy.total(),
            self.cur.dissipation.budget(),
            node.dissipation.budget(),
            dt,
        );
        if !residual.is_finite() {
            return Err(Error::Divergence { step: self.steps + 1 });
        }
        if residual.abs() > self.cfg.residual_trigger {
            if self.halvings >= self.cfg.max_halvings {
                return Err(Error::Stability {
                    step: self.steps + 1,
                    halvings: self.halvings,
                    residual,
                });
            }
            self.halvings += 1;
            self.dt *= 0.5;
            self.segment_t0 = self.cur.state.t;
            self.segment_steps = 0;
            self.prev = None;
            return Ok(Advance::Halved { residual });
        }
        let old = std::mem::replace(&mut self.cur, node);
        self.prev = Some((old.u, old.n));
        self.steps += 1;
        self.segment_steps += 1;
        Ok(Advance::Accepted { residual })
    }

    pub fn state(&self) -> &State {
        &self.cur.state
    }

    pub fn energy(&self) -> &Energy {
        &self.cur.energy
    }

    pub fn dissipation(&self) -> &Dissipation {
        &self.cur.dissipation
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn halvings(&self) -> usize {
        self.halvings
    }

    /// Stabilization constant in use.
    pub fn stabilization(&self) -> f64 {
        self.sym_s
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ModelParams {
        self.dynamics.params()
    }

    /// Diagnostics row for the current state.
    pub fn record(&self, phi0_mean: f64, residual: f64) -> DiagnosticsRecord {
        let s = &self.cur.state;
        let p = self.dynamics.params();
        let delta = self.cfg.entropy_floor;
        DiagnosticsRecord::assemble(
            s.t,
            &self.cur.energy,
            &self.cur.dissipation,
            residual,
            &mass_monitor(s, p, phi0_mean),
            &sigma_monitor(s, delta),
        )
    }

    /// Time left until `t_end` (measured from the stepper's start).
    fn finished(&self, t_end: f64) -> bool {
        self.cur.state.t >= t_end - 1e-9 * self.dt
    }
}

/// One self-starting step from a bare state (IMEX Euler for order 1, its
/// Richardson extrapolation for order 2).
pub fn step(s: &State, cfg: &SchemeConfig, p: &ModelParams) -> Result<State> {
    let mut st = Stepper::new(s, cfg, p)?;
    loop {
        if let Advance::Accepted { .. } = st.advance()? {
            return Ok(st.state().clone());
        }
    }
}

/// Receives diagnostics and snapshots during [`run`].
pub trait Observer {
    fn record(&mut self, step: usize, rec: &DiagnosticsRecord) -> Result<()>;

    fn snapshot(&mut self, _step: usize, _s: &State) -> Result<()> {
        Ok(())
    }

    /// Called once at the end, also when the run stops on an error.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullObserver;

impl Observer for NullObserver {
    fn record(&mut self, _step: usize, _rec: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }
}

/// Output cadence in steps; 0 disables snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub diag_interval: usize,
    pub snapshot_interval: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            diag_interval: 1,
            snapshot_interval: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: State,
    /// Rows emitted on the diagnostics schedule (always including t = 0 and
    /// the final time).
    pub records: Vec<DiagnosticsRecord>,
    /// Energy-law residual of every accepted step.
    pub residuals: Vec<f64>,
    /// Total energy after every accepted step, starting with E(0).
    pub energies: Vec<f64>,
    pub steps: usize,
    pub final_dt: f64,
    pub halvings: usize,
    /// Mode cutoff after initial-data preparation.
    pub cutoff: f64,
}

impl RunOutput {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Prepares the initial data and integrates to `cfg.t_end`.
pub fn run(
    init: &InitialData,
    cfg: &SchemeConfig,
    p: &ModelParams,
    schedule: Schedule,
    observer: &mut dyn Observer,
) -> Result<RunOutput> {
    let prepared = init.prepare(cfg.cutoff)?;
    let mut cfg = cfg.clone();
    cfg.cutoff = prepared.cutoff;
    let s0 = State::new(0.0, prepared.v, prepared.phi, prepared.sigma, p, Some(cfg.cutoff))?;
    run_from(&s0, &cfg, p, schedule, observer)
}

/// Integrates an already prepared state for `cfg.t_end` time units.
pub fn run_from(
    s0: &State,
    cfg: &SchemeConfig,
    p: &ModelParams,
    schedule: Schedule,
    observer: &mut dyn Observer,
) -> Result<RunOutput> {
    let result = drive(s0, cfg, p, schedule, observer);
    let fin = observer.finish();
    let out = result?;
    fin?;
    Ok(out)
}

fn drive(
    s0: &State,
    cfg: &SchemeConfig,
    p: &ModelParams,
    schedule: Schedule,
    observer: &mut dyn Observer,
) -> Result<RunOutput> {
    let (_, dt) = cfg.tiling();
    let mut tiled = cfg.clone();
    tiled.dt = dt;
    let mut st = Stepper::new(s0, &tiled, p)?;
    let phi0_mean = st.state().phi.mean();
    let t_end = s0.t + cfg.t_end;
    let diag = schedule.diag_interval.max(1);

    let mut records = Vec::new();
    let first = st.record(phi0_mean, 0.0);
    observer.record(0, &first)?;
    records.push(first);
    if schedule.snapshot_interval > 0 {
        observer.snapshot(0, st.state())?;
    }
    let mut residuals = Vec::new();
    let mut energies = vec![st.energy().total()];

    while !st.finished(t_end) {
        let residual = match st.advance()? {
            Advance::Accepted { residual } => residual,
            Advance::Halved { .. } => continue,
        };
        residuals.push(residual);
        energies.push(st.energy().total());
        let n = st.steps();
        let last = st.finished(t_end);
        if n % diag == 0 || last {
            let rec = st.record(phi0_mean, residual);
            observer.record(n, &rec)?;
            records.push(rec);
        }
        if schedule.snapshot_interval > 0 && (n % schedule.snapshot_interval == 0 || last) {
            observer.snapshot(n, st.state())?;
        }
    }
    let state = if st.steps() == 0 { s0.clone() } else { st.state().clone() };
    Ok(RunOutput {
        state,
        records,
        residuals,
        energies,
        steps: st.steps(),
        final_dt: st.dt(),
        halvings: st.halvings(),
        cutoff: st.config().cutoff,
    })
}

/// W(t) of one perturbed trajectory against the base run.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinSeries {
    pub delta: f64,
    /// (t, W) after every step, starting at t = 0.
    pub w: Vec<(f64, f64)>,
}

impl TwinSeries {
    pub fn sup(&self) -> f64 {
        self.w.iter().fold(0.0, |m, &(_, w)| m.max(w))
    }
}

/// The fixed mean-free bump cos(2πx/Lx)cos(2πy/Ly) added to φ₀ (times δ).
pub fn twin_perturbation(init: &InitialData) -> crate::spectral::ScalarField {
    let grid = init.phi0.grid();
    let (lx, ly) = grid.extent();
    let (a, b) = (2.0 * std::f64::consts::PI / lx, 2.0 * std::f64::consts::PI / ly);
    crate::spectral::ScalarField::from_fn(grid, move |x, y| (a * x).cos() * (b * y).cos())
}

/// Runs the base data and one perturbed copy per δ in lockstep and records W.
pub fn twin_run(init: &InitialData, deltas: &[f64], cfg: &SchemeConfig, p: &ModelParams) -> Result<Vec<TwinSeries>> {
    let grid = init.phi0.grid().clone();
    grid.require_torus("twin runs")?;
    if !p.constant_mobility() {
        return Err(Error::Precondition("twin runs need a constant mobility".into()));
    }
    let bump = twin_perturbation(init);
    let mut datas = vec![init.clone()];
    for &d in deltas {
        let mut pert = init.clone();
        pert.phi0 = init.phi0.zip_map(&bump, |a, b| a + d * b)?;
        datas.push(pert);
    }

    let (_, dt) = cfg.tiling();
    let mut tiled = cfg.clone();
    tiled.dt = dt;
    // a common cutoff: the largest any member needs
    let mut cutoff = cfg.cutoff;
    for d in &datas {
        cutoff = cutoff.max(d.prepare(cfg.cutoff)?.cutoff);
    }
    tiled.cutoff = cutoff;
    let mut steppers = Vec::with_capacity(datas.len());
    for d in &datas {
        let pr = d.prepare(cutoff)?;
        let s0 = State::new(0.0, pr.v, pr.phi, pr.sigma, p, Some(cutoff))?;
        steppers.push(Stepper::new(&s0, &tiled, p)?);
    }

    let mut series: Vec<TwinSeries> = deltas
        .iter()
        .map(|&delta| TwinSeries { delta, w: Vec::new() })
        .collect();
    let push = |series: &mut Vec<TwinSeries>, steppers: &[Stepper]| -> Result<()> {
        let base = steppers[0].state();
        for (s, st) in series.iter_mut().zip(&steppers[1..]) {
            s.w.push((base.t, uniqueness_metric(base, st.state())?));
        }
        Ok(())
    };
    push(&mut series, &steppers)?;
    let t_end = cfg.t_end;
    let exec = grid.exec();
    while !steppers[0].finished(t_end) {
        let mut results: Vec<Option<Result<Advance>>> = steppers.iter().map(|_| None).collect();
        let mut pairs: Vec<(&mut Stepper, &mut Option<Result<Advance>>)> =
            steppers.iter_mut().zip(results.iter_mut()).collect();
        par::for_each_mut(exec, &mut pairs, |(st, out)| **out = Some(st.advance()));
        drop(pairs);
        for r in results {
            if let Advance::Halved { .. } = r.expect("every member advanced")? {
                return Err(Error::Precondition(
                    "twin trajectories desynchronized by step halving".into(),
                ));
            }
        }
        push(&mut series, &steppers)?;
    }
    Ok(series)
}
