//! Commands behind the `cvpurity` binary.
//!
//! Each `cmd_*` function loads its inputs, calls into `cvpurity-core`, and
//! returns a report that renders either as text or as JSON. All arithmetic
//! happens in the core crate.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use cvpurity_core::document::{CmDocument, CmKind, CmPayload, Provenance, PurityLaw, ReconstructedState};
use cvpurity_core::homodyne::{estimate_cm_pq, estimate_cm_xy, sample_ensemble, SpectrumConfig};
use cvpurity_core::oracle::{purity_integral_single, purity_integral_two_mode, GridSpec, Method, OracleReport, SelfTest};
use cvpurity_core::{
    convert, moments_from_params, purity_by_kind, reconstruct, save_cm, xy_cm_from_two_mode_params, Error,
    GaussianParams, ModeIndex, Result, TwoModeGaussianParams,
};
use serde::Serialize;

/// Default for the size of the worker pool used by the oracle and simulator.
pub const THREADS_ENV: &str = "CVPURITY_THREADS";

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VERIFY_FAIL: u8 = 3;

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::DegenerateParams { .. }
        | Error::SingularCm { .. }
        | Error::GridTooCoarse(_)
        | Error::BudgetExceeded { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

/// Extra guidance printed after an error, where there is something to suggest.
pub fn hint(err: &Error) -> Option<&'static str> {
    match err {
        Error::CorrelatedPairNotSupported(..) => Some(
            "a correlated (Ω, -Ω) pair has no product law; re-measure it in the XY basis \
             (`cvpurity convert <file> --to XY_PAIR`) and use the 1/det law",
        ),
        Error::GridTooCoarse(_) => Some("raise --grid or --half-width, or switch to --mc"),
        Error::BudgetExceeded { .. } => Some("lower --grid, raise --budget, or switch to --mc"),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

impl Format {
    pub fn render<R: Serialize + fmt::Display>(self, report: &R) -> String {
        match self {
            Format::Text => report.to_string(),
            Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        }
    }
}

fn modes_of(doc: &CmDocument) -> Option<Vec<i64>> {
    doc.modes.as_ref().map(|m| m.iter().map(|b| b.0).collect())
}

fn write_modes(f: &mut fmt::Formatter<'_>, modes: &Option<Vec<i64>>) -> fmt::Result {
    if let Some(m) = modes {
        writeln!(f, "modes:  {m:?}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurityReport {
    pub kind: &'static str,
    pub modes: Option<Vec<i64>>,
    pub law: &'static str,
    pub det: f64,
    pub purity: f64,
}

impl fmt::Display for PurityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind:   {}", self.kind)?;
        write_modes(f, &self.modes)?;
        writeln!(f, "law:    {}", self.law)?;
        writeln!(f, "det:    {}", self.det)?;
        writeln!(f, "purity: {}", self.purity)
    }
}

pub fn cmd_purity(doc: &CmDocument) -> Result<PurityReport> {
    let r = purity_by_kind(&doc.payload)?;
    Ok(PurityReport { kind: doc.kind().name(), modes: modes_of(doc), law: r.law.label(), det: r.det, purity: r.purity })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReport {
    /// `"single"` or `"pair"`.
    pub family: &'static str,
    pub mode: Option<i64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub purity: Option<f64>,
    pub normalizable: bool,
    pub physical: bool,
    pub wigner: String,
}

impl From<&ReconstructedState> for StateReport {
    fn from(s: &ReconstructedState) -> Self {
        let (a, b, c) = s.abc();
        let (family, mode) = match s {
            ReconstructedState::Single { mode, .. } => ("single", mode.map(|m| m.0)),
            ReconstructedState::Pair { mode, .. } => ("pair", Some(mode.0)),
        };
        Self {
            family,
            mode,
            a,
            b,
            c,
            purity: s.purity(),
            normalizable: s.normalizable(),
            physical: s.physical(),
            wigner: s.wigner_expression(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructReport {
    pub kind: &'static str,
    pub law: &'static str,
    pub purity: f64,
    pub states: Vec<StateReport>,
}

impl fmt::Display for ReconstructReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind:   {}", self.kind)?;
        writeln!(f, "law:    {}", self.law)?;
        writeln!(f, "purity: {}", self.purity)?;
        for s in &self.states {
            match s.mode {
                Some(m) => writeln!(f, "{} state, bin {m}:", s.family)?,
                None => writeln!(f, "{} state:", s.family)?,
            }
            writeln!(f, "  a = {}", s.a)?;
            writeln!(f, "  b = {}", s.b)?;
            writeln!(f, "  c = {}", s.c)?;
            match s.purity {
                Some(p) => writeln!(f, "  purity = {p}")?,
                None => writeln!(f, "  purity = undefined")?,
            }
            writeln!(f, "  normalizable = {}, physical = {}", s.normalizable, s.physical)?;
            writeln!(f, "  {}", s.wigner)?;
        }
        Ok(())
    }
}

pub fn cmd_reconstruct(doc: &CmDocument) -> Result<ReconstructReport> {
    let r = reconstruct(doc)?;
    Ok(ReconstructReport {
        kind: doc.kind().name(),
        law: r.purity.law.label(),
        purity: r.purity.purity,
        states: r.states.iter().map(StateReport::from).collect(),
    })
}

pub fn cmd_convert(doc: &CmDocument, to: CmKind) -> Result<CmDocument> {
    convert(doc, to)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedCm {
    pub file: PathBuf,
    pub kind: &'static str,
    pub modes: Vec<i64>,
    pub m_xx: f64,
    pub m_yy: f64,
    pub m_xy: f64,
    pub std_errors: [f64; 3],
    pub law: &'static str,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub seed: u64,
    pub n_samples: usize,
    pub config_digest: String,
    pub ensemble: PathBuf,
    pub documents: Vec<SimulatedCm>,
}

impl fmt::Display for SimulateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed:      {}", self.seed)?;
        writeln!(f, "samples:   {}", self.n_samples)?;
        writeln!(f, "digest:    {}", self.config_digest)?;
        writeln!(f, "ensemble:  {}", self.ensemble.display())?;
        for d in &self.documents {
            writeln!(
                f,
                "{} {:?}: m_xx = {} ± {}, m_yy = {} ± {}, m_xy = {} ± {}; purity {} via {} -> {}",
                d.kind,
                d.modes,
                d.m_xx,
                d.std_errors[0],
                d.m_yy,
                d.std_errors[1],
                d.m_xy,
                d.std_errors[2],
                d.purity,
                d.law,
                d.file.display()
            )?;
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<SpectrumConfig> {
    let text = fs::read_to_string(path)?;
    let cfg: SpectrumConfig = serde_json::from_str(&text)
        .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn std_error_map(err: [f64; 3]) -> std::collections::BTreeMap<String, f64> {
    ["m_xx", "m_yy", "m_xy"].iter().map(|k| k.to_string()).zip(err).collect()
}

/// Samples the configured spectrum and writes `ensemble.csv` plus one CM
/// document per bin (`bin_<Ω>.json`, QUADRATURE) and per pair
/// (`pair_<Ω>.json`, XY_PAIR) into `out_dir`.
pub fn cmd_simulate(config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<SimulateReport> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let ens = sample_ensemble(&cfg)?;
    fs::create_dir_all(out_dir)?;
    let ensemble = out_dir.join("ensemble.csv");
    ens.write_table(BufWriter::new(File::create(&ensemble)?))?;

    let provenance = |err: [f64; 3]| Provenance {
        note: format!("homodyne estimate from {} samples, seed {}", ens.n_samples(), ens.seed()),
        ensemble_digest: Some(ens.config_digest().to_string()),
        std_errors: std_error_map(err),
    };
    let mut documents = Vec::new();
    let mut emit = |doc: CmDocument, file: PathBuf, entries: [f64; 3], err: [f64; 3]| -> Result<()> {
        let doc = doc.with_provenance(provenance(err));
        save_cm(&doc, &file)?;
        let r = purity_by_kind(&doc.payload)?;
        documents.push(SimulatedCm {
            file,
            kind: doc.kind().name(),
            modes: modes_of(&doc).unwrap_or_default(),
            m_xx: entries[0],
            m_yy: entries[1],
            m_xy: entries[2],
            std_errors: err,
            law: r.law.label(),
            purity: r.purity,
        });
        Ok(())
    };
    for bin in cfg.solo_params.keys() {
        let est = estimate_cm_pq(&ens, *bin)?;
        let doc = CmDocument::new(CmPayload::Quadrature(est.cm)).with_modes(vec![*bin]);
        emit(doc, out_dir.join(format!("bin_{}.json", bin.0)), [est.cm.m_xx, est.cm.m_yy, est.cm.m_xy], est.std_err)?;
    }
    for bin in cfg.pair_params.keys() {
        let est = estimate_cm_xy(&ens, *bin)?;
        let doc = CmDocument::new(CmPayload::XyPair(est.cm));
        emit(doc, out_dir.join(format!("pair_{}.json", bin.0)), [est.cm.m_xx, est.cm.m_yy, est.cm.m_xy], est.std_err)?;
    }
    Ok(SimulateReport {
        seed: ens.seed(),
        n_samples: ens.n_samples(),
        config_digest: ens.config_digest().to_string(),
        ensemble,
        documents,
    })
}

/// What `verify` integrates: explicit parameters or the states of a CM file.
#[derive(Debug, Clone, PartialEq)]
pub enum VerifyInput {
    Single(GaussianParams),
    Pair(TwoModeGaussianParams),
    Document(Box<CmDocument>),
}

impl VerifyInput {
    /// `"a,b,c"` parameters, or a path to a CM document if `arg` names a file.
    pub fn parse(arg: &str, two_mode: bool) -> Result<Self> {
        let path = Path::new(arg);
        if path.is_file() {
            return Ok(VerifyInput::Document(Box::new(cvpurity_core::load_cm(path)?)));
        }
        let nums: Vec<f64> = arg
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvariantViolation(format!("`{arg}` is neither a file nor \"a,b,c\"")))?;
        let [a, b, c] = nums[..] else {
            return Err(Error::InvariantViolation(format!("expected three parameters \"a,b,c\", got {}", nums.len())));
        };
        Ok(if two_mode {
            VerifyInput::Pair(TwoModeGaussianParams::new(a, b, c)?)
        } else {
            VerifyInput::Single(GaussianParams::new(a, b, c)?)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyOptions {
    pub points_per_axis: Option<usize>,
    pub half_width_sigmas: Option<f64>,
    pub mc_samples: Option<usize>,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub budget: Option<u128>,
    pub deterministic: bool,
}

impl VerifyOptions {
    fn grid(&self, base: GridSpec) -> GridSpec {
        let mut g = base;
        if let Some(n) = self.points_per_axis {
            g.points_per_axis = n;
        }
        if let Some(h) = self.half_width_sigmas {
            g.half_width_sigmas = h;
        }
        if let Some(b) = self.budget {
            g.point_budget = b;
        }
        g.deterministic = self.deterministic;
        g.seed = self.seed;
        match self.mc_samples {
            Some(n) => g.monte_carlo(n, self.seed),
            None => g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub purity: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl From<SelfTest> for SelfTestReport {
    fn from(t: SelfTest) -> Self {
        Self { purity: t.purity, deviation: t.deviation, tolerance: t.tolerance, passed: t.passed() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyCase {
    pub family: &'static str,
    pub mode: Option<i64>,
    pub params: [f64; 3],
    pub law: &'static str,
    pub closed_form: f64,
    pub oracle: f64,
    pub oracle_std_err: Option<f64>,
    pub difference: f64,
    /// Pass threshold: the tolerance, or 3 standard errors if larger.
    pub threshold: f64,
    pub method: &'static str,
    pub evaluations: u128,
    pub vacuum_self_test: SelfTestReport,
    pub reference_self_test: Option<SelfTestReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub cases: Vec<VerifyCase>,
    pub passed: bool,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            let [a, b, cc] = c.params;
            match c.mode {
                Some(m) => writeln!(f, "{} state (a, b, c) = ({a}, {b}, {cc}), bin {m}", c.family)?,
                None => writeln!(f, "{} state (a, b, c) = ({a}, {b}, {cc})", c.family)?,
            }
            writeln!(f, "  closed form:  {} via {}", c.closed_form, c.law)?;
            match c.oracle_std_err {
                Some(se) => writeln!(f, "  oracle:       {} ± {se} ({}, {} evaluations)", c.oracle, c.method, c.evaluations)?,
                None => writeln!(f, "  oracle:       {} ({}, {} evaluations)", c.oracle, c.method, c.evaluations)?,
            }
            writeln!(f, "  difference:   {:e} (threshold {:e})", c.difference, c.threshold)?;
            let t = &c.vacuum_self_test;
            writeln!(f, "  vacuum self-test: purity {} (deviation {:e}, tolerance {:e})", t.purity, t.deviation, t.tolerance)?;
            if let Some(t) = &c.reference_self_test {
                writeln!(
                    f,
                    "  reference vacuum: purity {} (deviation {:e}, tolerance {:e})",
                    t.purity, t.deviation, t.tolerance
                )?;
            }
            writeln!(f, "  {}", if c.passed { "PASS" } else { "FAIL" })?;
        }
        writeln!(f, "verdict: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

fn verify_case(
    family: &'static str,
    mode: Option<i64>,
    params: [f64; 3],
    law: PurityLaw,
    closed_form: f64,
    report: OracleReport,
    tolerance: f64,
) -> VerifyCase {
    let difference = (closed_form - report.purity).abs();
    let threshold = report.std_err.map_or(tolerance, |se| tolerance.max(3.0 * se));
    VerifyCase {
        family,
        mode,
        params,
        law: law.label(),
        closed_form,
        oracle: report.purity,
        oracle_std_err: report.std_err,
        difference,
        threshold,
        method: match report.method {
            Method::TensorGrid => "tensor grid",
            Method::MonteCarlo => "monte carlo",
        },
        evaluations: report.evaluations,
        vacuum_self_test: report.vacuum.into(),
        reference_self_test: report.reference.map(Into::into),
        passed: difference <= threshold,
    }
}

fn verify_single(p: &GaussianParams, mode: Option<i64>, opts: &VerifyOptions) -> Result<VerifyCase> {
    let cm = moments_from_params(p)?;
    let law = purity_by_kind(&CmPayload::Quadrature(cm))?;
    let report = purity_integral_single(p, &opts.grid(GridSpec::single_mode()))?;
    Ok(verify_case("single", mode, [p.a, p.b, p.c], law.law, law.purity, report, opts.tolerance.unwrap_or(1e-6)))
}

fn verify_pair(p: &TwoModeGaussianParams, mode: ModeIndex, opts: &VerifyOptions) -> Result<VerifyCase> {
    let cm = xy_cm_from_two_mode_params(p, mode)?;
    let law = purity_by_kind(&CmPayload::XyPair(cm))?;
    let report = purity_integral_two_mode(p, &opts.grid(GridSpec::two_mode()))?;
    Ok(verify_case("pair", Some(mode.0), [p.a, p.b, p.c], law.law, law.purity, report, opts.tolerance.unwrap_or(1e-3)))
}

/// Runs the integral oracle against the determinant law. A failed comparison
/// is reported, not returned as an error; the caller maps it to exit code 3.
pub fn cmd_verify(input: &VerifyInput, opts: &VerifyOptions) -> Result<VerifyReport> {
    let cases = match input {
        VerifyInput::Single(p) => vec![verify_single(p, None, opts)?],
        VerifyInput::Pair(p) => vec![verify_pair(p, ModeIndex(1), opts)?],
        VerifyInput::Document(doc) => reconstruct(doc)?
            .states
            .iter()
            .map(|s| match s {
                ReconstructedState::Single { mode, params } => verify_single(params, mode.map(|m| m.0), opts),
                ReconstructedState::Pair { mode, params } => verify_pair(params, *mode, opts),
            })
            .collect::<Result<_>>()?,
    };
    let passed = cases.iter().all(|c| c.passed);
    Ok(VerifyReport { cases, passed })
}
