//! Configuration files, output formats and the four driver commands.
//!
//! Config files are `key = value` lines with `#` comments and dotted
//! namespaces (`model.chi = 1.5`). Every key has a default; unknown keys are
//! rejected with their line number.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::{ModelParams, Potential, SigmaForm, State};
use crate::error::{Error, Result};
use crate::init::{droplet, gaussian_blob, random_mixture, stripe, taylor_green, InitialData};
use crate::par;
use crate::potential::{
    coercivity_deficit, find_r_star, psi0, young_gap, CoercivityTarget, PotentialParams, RegPotential, Tail,
};
use crate::spectral::{DomainMode, Grid, ScalarField, VectorField};
use crate::timestepper::{run, Observer, RunOutput, Schedule, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Regularized,
    Quartic,
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub mode: DomainMode,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub theta: f64,
    pub theta_c: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiInit {
    Random,
    Stripe,
    Droplet,
    Constant,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaInit {
    Constant,
    Blob,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityInit {
    None,
    Zero,
    TaylorGreen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub phi: PhiInit,
    pub phi_mean: f64,
    pub phi_amplitude: f64,
    pub phi_width: f64,
    pub phi_radius: f64,
    pub phi_band: f64,
    pub sigma: SigmaInit,
    pub sigma_mean: f64,
    pub sigma_amplitude: f64,
    pub sigma_width: f64,
    pub sigma_background: f64,
    pub velocity: VelocityInit,
    pub velocity_amplitude: f64,
    pub gamma: f64,
    pub n_mollify: u32,
    /// Snapshot supplying φ₀ and σ₀ (and v₀ when it holds `vx`, `vy`).
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub diag_interval: usize,
    pub snapshot_interval: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub eps_values: Vec<f64>,
    pub chi_values: Vec<f64>,
}

/// A parsed, defaulted and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub model: ModelParams,
    pub scheme: SchemeConfig,
    pub init: InitConfig,
    pub output: OutputConfig,
    pub check: CheckConfig,
    canonical: String,
}

fn parse_real(s: &str) -> Option<f64> {
    let t = s.trim();
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        if head.is_empty() {
            return Some(PI);
        }
        return head.parse::<f64>().ok().map(|v| v * PI);
    }
    t.parse().ok()
}

struct Reader {
    entries: BTreeMap<String, (usize, String)>,
    resolved: Vec<(String, String)>,
}

impl Reader {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected `key = value`, got `{body}`"),
                });
            };
            let key = k.trim().to_string();
            let value = v.trim().trim_matches('"').to_string();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Config {
                    line,
                    message: format!("malformed key `{}`", k.trim()),
                });
            }
            if let Some((first, _)) = entries.insert(key.clone(), (line, value)) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
        }
        Ok(Self {
            entries,
            resolved: Vec::new(),
        })
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn note(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    fn real(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.raw(key) {
            Some((line, s)) => parse_real(&s).ok_or_else(|| Error::Config {
                line,
                message: format!("`{key}` expects a number, got `{s}`"),
            })?,
            None => default,
        };
        self.note(key, format!("{v:?}"));
        Ok(v)
    }

    fn opt_real(&mut self, key: &str) -> Result<Option<f64>> {
        let v = match self.raw(key) {
            Some((_, s)) if s == "auto" => None,
            Some((line, s)) => Some(parse_real(&s).ok_or_else(|| Error::Config {
                line,
                message: format!("`{key}` expects a number or `auto`, got `{s}`"),
            })?),
            None => None,
        };
        self.note(key, v.map_or("auto".into(), |x| format!("{x:?}")));
        Ok(v)
    }

    fn uint(&mut self, key: &str, default: u64) -> Result<u64> {
        let v = match self.raw(key) {
            Some((line, s)) => s.parse::<u64>().map_err(|_| Error::Config {
                line,
                message: format!("`{key}` expects a nonnegative integer, got `{s}`"),
            })?,
            None => default,
        };
        self.note(key, v.to_string());
        Ok(v)
    }

    fn word<T: Copy>(&mut self, key: &str, default: &str, choices: &[(&str, T)]) -> Result<T> {
        let (line, s) = self.raw(key).unwrap_or((0, default.to_string()));
        let found = choices.iter().find(|(name, _)| *name == s).map(|&(_, v)| v);
        let v = found.ok_or_else(|| {
            let names: Vec<&str> = choices.iter().map(|(n, _)| *n).collect();
            Error::Config {
                line,
                message: format!("`{key}` must be one of {}, got `{s}`", names.join(", ")),
            }
        })?;
        self.note(key, s);
        Ok(v)
    }

    fn text(&mut self, key: &str) -> Option<String> {
        let v = self.raw(key).map(|(_, s)| s);
        self.note(key, v.clone().unwrap_or_default());
        v
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.raw(key) {
            Some((line, s)) => s
                .split(',')
                .map(|x| {
                    parse_real(x).ok_or_else(|| Error::Config {
                        line,
                        message: format!("`{key}` expects comma-separated numbers, got `{s}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            None => default.to_vec(),
        };
        let shown: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        self.note(key, shown.join(","));
        Ok(v)
    }

    fn finish(self) -> Result<String> {
        if let Some((key, (line, _))) = self.entries.iter().min_by_key(|(_, (l, _))| *l) {
            return Err(Error::Config {
                line: *line,
                message: format!("unknown key `{key}`"),
            });
        }
        let mut out = String::new();
        for (k, v) in &self.resolved {
            let _ = writeln!(out, "{k} = {v}");
        }
        Ok(out)
    }
}

impl RunConfig {
    /// Parses, defaults and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Reader::parse(text)?;
        let grid = GridConfig {
            mode: r.word(
                "grid.mode",
                "torus",
                &[("torus", DomainMode::Torus), ("neumann", DomainMode::NeumannRect)],
            )?,
            lx: r.real("grid.lx", 2.0 * PI)?,
            ly: r.real("grid.ly", 2.0 * PI)?,
            nx: r.uint("grid.nx", 128)? as usize,
            ny: r.uint("grid.ny", 128)? as usize,
        };
        let potential = PotentialConfig {
            kind: r.word(
                "potential.kind",
                "regularized",
                &[
                    ("regularized", PotentialKind::Regularized),
                    ("quartic", PotentialKind::Quartic),
                    ("singular", PotentialKind::Singular),
                ],
            )?,
            theta: r.real("potential.theta", 1.0)?,
            theta_c: r.real("potential.theta_c", 2.0)?,
            eps: r.real("potential.eps", 0.05)?,
        };
        let eta1 = r.real("model.eta1", 1.0)?;
        let eta2 = r.real("model.eta2", 1.0)?;
        let m_lo = r.real("model.m_lo", 1.0)?;
        let m_hi = r.real("model.m_hi", 1.0)?;
        let chi = r.real("model.chi", 0.0)?;
        let kappa = r.real("model.kappa", 0.0)?;
        let alpha = r.real("model.alpha", 0.0)?;
        let h_const = r.real("model.h_const", 0.0)?;
        let b_star = r.real("model.b_star", 0.0)?;
        let eps_interface = r.real("model.eps_interface", 1.0)?;
        let gamma_plap = r.real("model.gamma_plap", 0.0)?;
        let sigma_form = r.word(
            "model.sigma_form",
            "cross_diffusion",
            &[
                ("cross_diffusion", SigmaForm::CrossDiffusion),
                ("linear_transport", SigmaForm::LinearTransport),
            ],
        )?;

        let dt = r.real("scheme.dt", 1e-3)?;
        let t_end = r.real("scheme.t_end", 1.0)?;
        let k_cutoff = r.opt_real("scheme.k_cutoff")?;
        let imex_order = r.uint("scheme.imex_order", 2)?;
        let stabilization = r.opt_real("scheme.stabilization")?;
        let max_halvings = r.uint("scheme.max_halvings", 4)? as usize;
        let residual_trigger = r.real("scheme.residual_trigger", f64::INFINITY)?;
        let entropy_floor = r.real("scheme.entropy_floor", crate::diagnostics::ENTROPY_FLOOR)?;

        let init = InitConfig {
            phi: r.word(
                "init.phi",
                "random",
                &[
                    ("random", PhiInit::Random),
                    ("stripe", PhiInit::Stripe),
                    ("droplet", PhiInit::Droplet),
                    ("constant", PhiInit::Constant),
                    ("cosine", PhiInit::Cosine),
                ],
            )?,
            phi_mean: r.real("init.phi_mean", 0.0)?,
            phi_amplitude: r.real("init.phi_amplitude", 0.5)?,
            phi_width: r.real("init.phi_width", 0.3)?,
            phi_radius: r.real("init.phi_radius", 1.0)?,
            phi_band: r.real("init.phi_band", 8.0)?,
            sigma: r.word(
                "init.sigma",
                "constant",
                &[
                    ("constant", SigmaInit::Constant),
                    ("blob", SigmaInit::Blob),
                    ("cosine", SigmaInit::Cosine),
                ],
            )?,
            sigma_mean: r.real("init.sigma_mean", 1.0)?,
            sigma_amplitude: r.real("init.sigma_amplitude", 1.0)?,
            sigma_width: r.real("init.sigma_width", 0.4)?,
            sigma_background: r.real("init.sigma_background", 0.0)?,
            velocity: r.word(
                "init.velocity",
                if grid.mode == DomainMode::Torus { "zero" } else { "none" },
                &[
                    ("none", VelocityInit::None),
                    ("zero", VelocityInit::Zero),
                    ("taylor_green", VelocityInit::TaylorGreen),
                ],
            )?,
            velocity_amplitude: r.real("init.velocity_amplitude", 0.5)?,
            gamma: r.real("init.gamma", 0.1)?,
            n_mollify: r.uint("init.n_mollify", 1000)?.min(u32::MAX as u64) as u32,
            snapshot: r.text("init.snapshot").map(PathBuf::from),
        };
        let output = OutputConfig {
            dir: PathBuf::from(r.text("output.dir").unwrap_or_else(|| "out".into())),
            diag_interval: r.uint("output.diag_interval", 10)? as usize,
            snapshot_interval: r.uint("output.snapshot_interval", 0)? as usize,
            seed: r.uint("output.seed", 0)?,
        };
        let check = CheckConfig {
            eps_values: r.list("check.eps_values", &[0.01, 0.05, 0.1])?,
            chi_values: r.list("check.chi_values", &[0.0, 0.5, -0.5, 2.0, -2.0])?,
        };
        let canonical = r.finish()?;

        let pot = match potential.kind {
            PotentialKind::Regularized => Potential::regularized(potential.theta, potential.theta_c, potential.eps, chi)?,
            PotentialKind::Quartic => Potential::Quartic,
            PotentialKind::Singular => Potential::singular(potential.theta, potential.theta_c)?,
        };
        let model = ModelParams {
            eta1,
            eta2,
            m_lo,
            m_hi,
            chi,
            kappa,
            alpha,
            h_const,
            b_star,
            eps_interface,
            gamma_plap,
            sigma_form,
            potential: pot,
        };
        model.validate()?;
        let g = Grid::new(grid.mode, (grid.lx, grid.ly), (grid.nx, grid.ny))?;
        if grid.mode == DomainMode::NeumannRect && init.velocity != VelocityInit::None {
            return Err(Error::Parameter(
                "the Neumann rectangle has no fluid; set init.velocity = none".into(),
            ));
        }
        let scheme = SchemeConfig {
            dt,
            t_end,
            cutoff: k_cutoff.unwrap_or_else(|| g.default_cutoff()),
            imex_order: imex_order.min(u8::MAX as u64) as u8,
            stabilization,
            max_halvings,
            residual_trigger,
            entropy_floor,
        };
        scheme.validate(g.max_cutoff())?;
        Ok(Self {
            grid,
            potential,
            model,
            scheme,
            init,
            output,
            check,
            canonical,
        })
    }

    /// Fully resolved `key = value` listing, one line per key.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// SHA-256 of the canonical listing, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.mode, (self.grid.lx, self.grid.ly), (self.grid.nx, self.grid.ny))
    }

    /// Initial data from the generators or the snapshot named in the config.
    pub fn initial_data(&self, grid: &Grid) -> Result<InitialData> {
        let c = &self.init;
        let (lx, ly) = grid.extent();
        let (a, b) = (2.0 * PI / lx, 2.0 * PI / ly);
        let mut v0 = match c.velocity {
            VelocityInit::None => None,
            VelocityInit::Zero => Some(VectorField::zeros(grid)),
            VelocityInit::TaylorGreen => Some(taylor_green(grid, c.velocity_amplitude)),
        };
        let (phi0, sigma0) = if let Some(path) = &c.snapshot {
            let snap = Snapshot::read(path)?;
            snap.check_grid(grid)?;
            if let (Some(vx), Some(vy)) = (snap.field("vx"), snap.field("vy")) {
                if v0.is_some() {
                    v0 = Some(VectorField::new(
                        ScalarField::from_samples(grid, vx)?,
                        ScalarField::from_samples(grid, vy)?,
                    )?);
                }
            }
            let get = |name: &str| {
                snap.field(name)
                    .ok_or_else(|| Error::Data(format!("snapshot has no field `{name}`")))
                    .and_then(|d| ScalarField::from_samples(grid, d))
            };
            (get("phi")?, get("sigma")?)
        } else {
            let phi0 = match c.phi {
                PhiInit::Random => random_mixture(grid, c.phi_mean, c.phi_amplitude, c.phi_band, self.output.seed),
                PhiInit::Stripe => stripe(grid, c.phi_amplitude, c.phi_width),
                PhiInit::Droplet => droplet(grid, c.phi_amplitude, c.phi_radius, c.phi_width),
                PhiInit::Constant => ScalarField::constant(grid, c.phi_mean),
                PhiInit::Cosine => {
                    let (m, amp) = (c.phi_mean, c.phi_amplitude);
                    ScalarField::from_fn(grid, move |x, y| m + amp * (a * x).cos() * (b * y).sin())
                }
            };
            let sigma0 = match c.sigma {
                SigmaInit::Constant => ScalarField::constant(grid, c.sigma_mean),
                SigmaInit::Blob => gaussian_blob(grid, c.sigma_amplitude, c.sigma_width, c.sigma_background),
                SigmaInit::Cosine => {
                    let (m, amp) = (c.sigma_mean, c.sigma_amplitude);
                    ScalarField::from_fn(grid, move |x, y| m + amp * (a * x).cos() * (b * y).cos())
                }
            };
            (phi0, sigma0)
        };
        let data = InitialData {
            v0,
            phi0,
            sigma0,
            gamma: c.gamma,
            n_mollify: c.n_mollify,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            diag_interval: self.output.diag_interval.max(1),
            snapshot_interval: self.output.snapshot_interval,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    RunConfig::parse(&text)
}

/// `{:.16e}`, i.e. 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// CSV writer with the fingerprint line and header.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, fingerprint: &str, columns: &[&str]) -> Result<Self> {
        let mut out = create(path)?;
        writeln!(out, "# config-fingerprint: {fingerprint}")?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let cells: Vec<String> = values.iter().map(|&v| format_value(v)).collect();
        writeln!(self.out, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// A `NSCH1` snapshot: little-endian header and row-major f64 fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: u32,
    pub ny: u32,
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

const MAGIC: &[u8; 5] = b"NSCH1";

impl Snapshot {
    /// φ, σ, μ and (if present) the velocity components.
    pub fn of_state(s: &State) -> Self {
        let (nx, ny) = s.grid().resolution();
        let (lx, ly) = s.grid().extent();
        let mut fields = vec![
            ("phi".to_string(), s.phi.samples()),
            ("sigma".to_string(), s.sigma.samples()),
            ("mu".to_string(), s.mu.samples()),
        ];
        if let Some(v) = &s.v {
            fields.push(("vx".to_string(), v.x.samples()));
            fields.push(("vy".to_string(), v.y.samples()));
        }
        Self {
            nx: nx as u32,
            ny: ny as u32,
            lx,
            ly,
            t: s.t,
            fields,
        }
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, d)| d.as_slice())
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let (nx, ny) = grid.resolution();
        let (lx, ly) = grid.extent();
        if (self.nx as usize, self.ny as usize) != (nx, ny) || self.lx != lx || self.ly != ly {
            return Err(Error::Shape(format!(
                "snapshot grid {}x{} on {}x{} does not match {nx}x{ny} on {lx}x{ly}",
                self.nx, self.ny, self.lx, self.ly
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.nx as usize * self.ny as usize;
        let mut out = Vec::with_capacity(40 + self.fields.len() * (n * 8 + 16));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.nx.to_le_bytes());
        out.extend_from_slice(&self.ny.to_le_bytes());
        for v in [self.lx, self.ly, self.t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let count = u8::try_from(self.fields.len())
            .map_err(|_| Error::Data("a snapshot holds at most 255 fields".into()))?;
        out.push(count);
        for (name, data) in &self.fields {
            let len = u8::try_from(name.len())
                .ok()
                .filter(|_| name.is_ascii())
                .ok_or_else(|| Error::Data(format!("bad field name `{name}`")))?;
            if data.len() != n {
                return Err(Error::Shape(format!("field `{name}` has {} samples, expected {n}", data.len())));
            }
            out.push(len);
            out.extend_from_slice(name.as_bytes());
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |k: usize| -> Result<&[u8]> {
            let s = bytes
                .get(pos..pos + k)
                .ok_or_else(|| Error::Data("truncated snapshot".into()))?;
            pos += k;
            Ok(s)
        };
        if take(5)? != MAGIC {
            return Err(Error::Data("not an NSCH1 snapshot".into()));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().expect("8 bytes"));
        let nx = u32_at(take(4)?);
        let ny = u32_at(take(4)?);
        let lx = f64_at(take(8)?);
        let ly = f64_at(take(8)?);
        let t = f64_at(take(8)?);
        let count = take(1)?[0];
        let n = nx as usize * ny as usize;
        let mut fields = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let len = take(1)?[0] as usize;
            let name = String::from_utf8(take(len)?.to_vec())
                .map_err(|_| Error::Data("field name is not ASCII".into()))?;
            let raw = take(n * 8)?;
            fields.push((name, raw.chunks_exact(8).map(f64_at).collect()));
        }
        if pos != bytes.len() {
            return Err(Error::Data("trailing bytes after snapshot".into()));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            t,
            fields,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = create(path)?;
        out.write_all(&self.to_bytes()?)?;
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Observer writing `diagnostics.csv` and `snap_{step:06}.bin` into a directory.
pub struct FileSink {
    dir: PathBuf,
    csv: CsvWriter,
}

impl FileSink {
    pub fn new(dir: &Path, fingerprint: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let csv = CsvWriter::create(&dir.join("diagnostics.csv"), fingerprint, &DiagnosticsRecord::COLUMNS)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
        })
    }
}

impl Observer for FileSink {
    fn record(&mut self, _step: usize, rec: &DiagnosticsRecord) -> Result<()> {
        self.csv.row(&rec.values())
    }

    fn snapshot(&mut self, step: usize, s: &State) -> Result<()> {
        Snapshot::of_state(s).write(&self.dir.join(format!("snap_{step:06}.bin")))
    }

    fn finish(&mut self) -> Result<()> {
        self.csv.flush()
    }
}

fn run_into(cfg: &RunConfig, model: &ModelParams, dir: &Path) -> Result<RunOutput> {
    let grid = cfg.build_grid()?;
    let init = cfg.initial_data(&grid)?;
    let mut sink = FileSink::new(dir, &cfg.fingerprint())?;
    run(&init, &cfg.scheme, model, cfg.schedule(), &mut sink)
}

/// Integrates the configured run into `output.dir`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput> {
    run_into(cfg, &cfg.model, &cfg.output.dir)
}

/// One row of the potential check table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialCheck {
    pub eps: f64,
    pub chi: f64,
    /// Largest relative jump of Ψ₀,ε' across the four knots.
    pub knot_jump: f64,
    /// Largest relative jump of Ψ₀,ε'' across the knots.
    pub knot_jump_second: f64,
    /// min(Ψ₀,ε'' − θ) over 10⁴ samples of [−10, 10].
    pub convexity_min: f64,
    /// min r·Ψ₀,ε'(r) over the same samples.
    pub sign_min: f64,
    /// max(Ψ₀,ε − Ψ₀) on [−1 + 1e−6, 1 − 1e−6].
    pub below_singular_max: f64,
    /// Ψε at r = −3, −1, 0, 1, 3.
    pub psi: [f64; 5],
    pub r_star: f64,
    pub r_star_lower: f64,
    /// min coercivity deficit on [r*, r* + 10] and [r★ − 10, r★].
    pub deficit_min: f64,
    /// min young_gap on a 100×100 grid of [0, 50]².
    pub young_gap_min: f64,
}

impl PotentialCheck {
    pub const COLUMNS: [&'static str; 16] = [
        "eps",
        "chi",
        "knot_jump",
        "knot_jump_second",
        "convexity_min",
        "sign_min",
        "below_singular_max",
        "psi_m3",
        "psi_m1",
        "psi_0",
        "psi_1",
        "psi_3",
        "r_star",
        "r_star_lower",
        "deficit_min",
        "young_gap_min",
    ];

    pub fn values(&self) -> [f64; 16] {
        let p = self.psi;
        [
            self.eps,
            self.chi,
            self.knot_jump,
            self.knot_jump_second,
            self.convexity_min,
            self.sign_min,
            self.below_singular_max,
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            self.r_star,
            self.r_star_lower,
            self.deficit_min,
            self.young_gap_min,
        ]
    }

    pub fn compute(base: PotentialParams, eps: f64, chi: f64) -> Result<Self> {
        let rp = RegPotential::new(base, eps, chi)?;
        let jumps = rp.knot_jumps();
        let knot_jump = jumps.iter().fold(0.0f64, |m, j| m.max(j.0));
        let knot_jump_second = jumps.iter().fold(0.0f64, |m, j| m.max(j.1));
        let n = 10_000;
        let samples = (0..n).map(|i| -10.0 + 20.0 * i as f64 / (n - 1) as f64);
        let (mut convexity_min, mut sign_min) = (f64::INFINITY, f64::INFINITY);
        for r in samples {
            convexity_min = convexity_min.min(rp.second(r) - base.theta);
            sign_min = sign_min.min(r * rp.prime(r));
        }
        let lim = 1.0 - 1e-6;
        let mut below_singular_max = f64::NEG_INFINITY;
        for i in 0..n {
            let r = -lim + 2.0 * lim * i as f64 / (n - 1) as f64;
            below_singular_max = below_singular_max.max(rp.value(r) - psi0(r, &base)?);
        }
        let psi = [-3.0, -1.0, 0.0, 1.0, 3.0].map(|r| rp.psi(r));
        let r_star = find_r_star(&rp, Tail::Upper, CoercivityTarget::Entropy)?;
        let r_star_lower = find_r_star(&rp, Tail::Lower, CoercivityTarget::Entropy)?;
        let mut deficit_min = f64::INFINITY;
        for i in 0..=1000 {
            let s = 10.0 * i as f64 / 1000.0;
            deficit_min = deficit_min
                .min(coercivity_deficit(&rp, r_star + s, Tail::Upper, CoercivityTarget::Entropy))
                .min(coercivity_deficit(&rp, r_star_lower - s, Tail::Lower, CoercivityTarget::Entropy));
        }
        let mut young_gap_min = f64::INFINITY;
        for i in 0..100 {
            for j in 0..100 {
                let (a, b) = (50.0 * i as f64 / 99.0, 50.0 * j as f64 / 99.0);
                young_gap_min = young_gap_min.min(young_gap(a, b)?);
            }
        }
        Ok(Self {
            eps,
            chi,
            knot_jump,
            knot_jump_second,
            convexity_min,
            sign_min,
            below_singular_max,
            psi,
            r_star,
            r_star_lower,
            deficit_min,
            young_gap_min,
        })
    }
}

/// Writes `potential_check.csv` over the configured (ε, χ) grid.
pub fn cmd_check_potential(cfg: &RunConfig) -> Result<Vec<PotentialCheck>> {
    let base = PotentialParams::flory_huggins(cfg.potential.theta, cfg.potential.theta_c)?;
    let mut jobs = Vec::new();
    for &eps in &cfg.check.eps_values {
        for &chi in &cfg.check.chi_values {
            jobs.push((eps, chi));
        }
    }
    let rows = par::map_jobs(crate::Exec::default(), jobs, |(eps, chi)| {
        PotentialCheck::compute(base, eps, chi)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.output.dir)?;
    let mut csv = CsvWriter::create(
        &cfg.output.dir.join("potential_check.csv"),
        &cfg.fingerprint(),
        &PotentialCheck::COLUMNS,
    )?;
    for r in &rows {
        csv.row(&r.values())?;
    }
    csv.flush()?;
    Ok(rows)
}

/// Runs both σ-equation forms (each into its own subdirectory) and writes
/// `compare_forms.csv` with the two σ_min trajectories.
pub fn cmd_compare_forms(cfg: &RunConfig) -> Result<[RunOutput; 2]> {
    let forms = vec![SigmaForm::CrossDiffusion, SigmaForm::LinearTransport];
    let results = par::map_jobs(crate::Exec::default(), forms, |form| {
        let model = ModelParams {
            sigma_form: form,
            ..cfg.model.clone()
        };
        run_into(cfg, &model, &cfg.output.dir.join(form.name()))
    });
    let mut it = results.into_iter();
    let cross = it.next().expect("two jobs")?;
    let linear = it.next().expect("two jobs")?;
    let mut csv = CsvWriter::create(
        &cfg.output.dir.join("compare_forms.csv"),
        &cfg.fingerprint(),
        &["t", "sigma_min_cross_diffusion", "sigma_min_linear_transport"],
    )?;
    let rows = cross.records.len().max(linear.records.len());
    for i in 0..rows {
        let (a, b) = (cross.records.get(i), linear.records.get(i));
        let t = a.or(b).map_or(f64::NAN, |r| r.t);
        csv.row(&[t, a.map_or(f64::NAN, |r| r.sigma_min), b.map_or(f64::NAN, |r| r.sigma_min)])?;
    }
    csv.flush()?;
    Ok([cross, linear])
}

/// Runs the δ ladder and writes `twin_run.csv` (delta, t, W) on the
/// diagnostics schedule.
pub fn cmd_twin_run(cfg: &RunConfig, deltas: &[f64]) -> Result<Vec<crate::timestepper::TwinSeries>> {
    let grid = cfg.build_grid()?;
    let init = cfg.initial_data(&grid)?;
    let series = crate::timestepper::twin_run(&init, deltas, &cfg.scheme, &cfg.model)?;
    fs::create_dir_all(&cfg.output.dir)?;
    let mut csv = CsvWriter::create(&cfg.output.dir.join("twin_run.csv"), &cfg.fingerprint(), &["delta", "t", "W"])?;
    let every = cfg.output.diag_interval.max(1);
    for s in &series {
        let last = s.w.len().saturating_sub(1);
        for (i, &(t, w)) in s.w.iter().enumerate() {
            if i % every == 0 || i == last {
                csv.row(&[s.delta, t, w])?;
            }
        }
    }
    csv.flush()?;
    Ok(series)
}
