//! Kind-tagged covariance-matrix documents.
//!
//! The same three numbers mean different things in different bases, so every
//! CM on disk carries its `kind` and the purity law is chosen from it, never
//! from the numbers. The format is JSON:
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "kind": "XY_PAIR",
//!   "modes": [3, -3],
//!   "entries": { "m_xx": 1.25, "m_yy": 1.25, "m_xy": 0.0 },
//!   "provenance": { "note": "estimated from 1000000 samples", "std_errors": { "m_xx": 0.0017 } }
//! }
//! ```
//!
//! | kind          | entries                                                      | modes              |
//! |---------------|--------------------------------------------------------------|--------------------|
//! | `QUADRATURE`  | `basis`, `m_xx`, `m_yy`, `m_xy`                               | optional `[Ω]`     |
//! | `AMPLITUDE`   | `m_abs`, `m_aa_re`, `m_aa_im`                                 | optional `[Ω]`     |
//! | `TWO_MODE_PQ` | `block_1`, `block_2` (`m_xx`, `m_yy`, `m_xy`), `cross` 2×2   | required `[Ω₁, Ω₂]`|
//! | `XY_PAIR`     | `m_xx`, `m_yy`, `m_xy`                                        | optional `[Ω, −Ω]` |
//!
//! An unlabeled `XY_PAIR` is treated as bins `(1, −1)`. Floats are written in
//! shortest round-trip form, so `load(save(doc)) == doc` bit for bit.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gaussian::{
    params_from_amplitude_cm, params_from_quadrature_cm, validate_physicality, AmplitudeCM, Basis,
    GaussianParams, QuadratureCM, SingleModePurity,
};
use crate::multimode::{
    assemble_two_mode_cm, expand_xy_to_full_pq_cm, purity_two_mode_pq, purity_xy,
    two_mode_cm_from_matrix, two_mode_params_from_xy_cm, xy_cm_from_full_pq_cm, ModeIndex,
    TwoModeCM, TwoModeGaussianParams, XYPairCM,
};

pub const SCHEMA_VERSION: &str = "1";

/// Tolerance for recognizing a 4×4 `(q, p)` CM as the embedding of a pair CM.
const EMBEDDING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CmKind {
    Quadrature,
    Amplitude,
    TwoModePq,
    XyPair,
}

impl CmKind {
    pub fn name(self) -> &'static str {
        match self {
            CmKind::Quadrature => "QUADRATURE",
            CmKind::Amplitude => "AMPLITUDE",
            CmKind::TwoModePq => "TWO_MODE_PQ",
            CmKind::XyPair => "XY_PAIR",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "QUADRATURE" => Ok(CmKind::Quadrature),
            "AMPLITUDE" => Ok(CmKind::Amplitude),
            "TWO_MODE_PQ" => Ok(CmKind::TwoModePq),
            "XY_PAIR" => Ok(CmKind::XyPair),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

impl fmt::Display for CmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CmPayload {
    Quadrature(QuadratureCM),
    Amplitude(AmplitudeCM),
    TwoModePq(TwoModeCM),
    XyPair(XYPairCM),
}

impl CmPayload {
    pub fn kind(&self) -> CmKind {
        match self {
            CmPayload::Quadrature(_) => CmKind::Quadrature,
            CmPayload::Amplitude(_) => CmKind::Amplitude,
            CmPayload::TwoModePq(_) => CmKind::TwoModePq,
            CmPayload::XyPair(_) => CmKind::XyPair,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(default)]
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_digest: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub std_errors: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmDocument {
    pub schema_version: String,
    pub payload: CmPayload,
    pub modes: Option<Vec<ModeIndex>>,
    pub provenance: Provenance,
}

impl CmDocument {
    /// Wraps a payload, taking the mode labels from it where it has them.
    pub fn new(payload: CmPayload) -> Self {
        let modes = match &payload {
            CmPayload::TwoModePq(cm) => Some(vec![cm.modes.0, cm.modes.1]),
            CmPayload::XyPair(cm) => Some(vec![cm.mode, -cm.mode]),
            _ => None,
        };
        Self { schema_version: SCHEMA_VERSION.into(), payload, modes, provenance: Provenance::default() }
    }

    pub fn with_modes(mut self, modes: Vec<ModeIndex>) -> Self {
        self.modes = Some(modes);
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn kind(&self) -> CmKind {
        self.payload.kind()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawDocument = serde_json::from_str(text)?;
        let entries_line = text
            .lines()
            .position(|l| l.contains("\"entries\""))
            .map_or(0, |i| i + 1);
        raw.into_document(entries_line)
    }

    pub fn to_json(&self) -> String {
        let raw = RawDocument::from_document(self);
        serde_json::to_string_pretty(&raw).expect("document serializes") + "\n"
    }
}

pub fn load_cm(path: impl AsRef<Path>) -> Result<CmDocument> {
    CmDocument::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_cm(doc: &CmDocument, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, doc.to_json())?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema_version: String,
    kind: CmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<i64>>,
    entries: Value,
    #[serde(default)]
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockEntries {
    m_xx: f64,
    m_yy: f64,
    m_xy: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureEntries {
    #[serde(default = "default_basis")]
    basis: Basis,
    m_xx: f64,
    m_yy: f64,
    m_xy: f64,
}

fn default_basis() -> Basis {
    Basis::IntracavityXy
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplitudeEntries {
    m_abs: f64,
    m_aa_re: f64,
    m_aa_im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoModeEntries {
    block_1: BlockEntries,
    block_2: BlockEntries,
    cross: [[f64; 2]; 2],
}

fn violation(what: impl Into<String>) -> Error {
    Error::InvariantViolation(what.into())
}

/// Re-labels numeric failures from validation as the invariant they break.
fn as_violation(prefix: &str, err: Error) -> Error {
    let p = |s: &str| if prefix.is_empty() { s.to_string() } else { format!("{prefix}.{s}") };
    match err {
        Error::InvariantViolation(m) => violation(p(&m)),
        Error::SingularCm { .. } => violation(p("det > 0")),
        Error::NotPositiveDefinite => violation("assembled 4x4 CM positive definite"),
        other => other,
    }
}

impl RawDocument {
    fn entries<T: serde::de::DeserializeOwned>(&self, line: usize) -> Result<T> {
        serde_json::from_value(self.entries.clone()).map_err(|e| Error::Parse {
            line,
            column: 0,
            message: format!("entries ({}): {e}", self.kind),
        })
    }

    fn into_document(self, entries_line: usize) -> Result<CmDocument> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(violation(format!(
                "schema_version == \"{SCHEMA_VERSION}\" (found \"{}\")",
                self.schema_version
            )));
        }
        let modes: Option<Vec<ModeIndex>> = self.modes.as_ref().map(|m| m.iter().map(|&b| ModeIndex(b)).collect());
        let payload = match self.kind {
            CmKind::Quadrature => {
                let e: QuadratureEntries = self.entries(entries_line)?;
                if modes.as_ref().is_some_and(|m| m.len() != 1) {
                    return Err(violation("modes has one bin for QUADRATURE"));
                }
                let cm = QuadratureCM::new(e.m_xx, e.m_yy, e.m_xy, e.basis);
                cm.validate().map_err(|e| as_violation("", e))?;
                CmPayload::Quadrature(cm)
            }
            CmKind::Amplitude => {
                let e: AmplitudeEntries = self.entries(entries_line)?;
                if modes.as_ref().is_some_and(|m| m.len() != 1) {
                    return Err(violation("modes has one bin for AMPLITUDE"));
                }
                let cm = AmplitudeCM::new(e.m_abs, Complex64::new(e.m_aa_re, e.m_aa_im));
                cm.validate().map_err(|e| as_violation("", e))?;
                CmPayload::Amplitude(cm)
            }
            CmKind::TwoModePq => {
                let e: TwoModeEntries = self.entries(entries_line)?;
                let pair = match modes.as_deref() {
                    Some([m1, m2]) => (*m1, *m2),
                    _ => return Err(violation("modes has two bins for TWO_MODE_PQ")),
                };
                let block = |b: &BlockEntries, name: &str| {
                    let cm = QuadratureCM::new(b.m_xx, b.m_yy, b.m_xy, Basis::SpectralPq);
                    cm.validate().map(|_| cm).map_err(|e| as_violation(name, e))
                };
                let b1 = block(&e.block_1, "block_1")?;
                let b2 = block(&e.block_2, "block_2")?;
                let cross = Matrix2::new(e.cross[0][0], e.cross[0][1], e.cross[1][0], e.cross[1][1]);
                if !pair.0.is_opposite(pair.1) && cross != Matrix2::zeros() {
                    return Err(violation("cross = 0 unless modes are an opposite pair (stationary flux)"));
                }
                CmPayload::TwoModePq(assemble_two_mode_cm(&b1, &b2, &cross, pair).map_err(|e| as_violation("", e))?)
            }
            CmKind::XyPair => {
                let e: BlockEntries = self.entries(entries_line)?;
                let mode = match modes.as_deref() {
                    None => ModeIndex(1),
                    Some([plus, minus]) if plus.is_opposite(*minus) => *plus,
                    Some(_) => return Err(violation("modes is an opposite pair [Ω, -Ω] for XY_PAIR")),
                };
                let cm = XYPairCM::new(e.m_xx, e.m_yy, e.m_xy, mode);
                cm.validate().map_err(|e| as_violation("", e))?;
                CmPayload::XyPair(cm)
            }
        };
        Ok(CmDocument { schema_version: self.schema_version, payload, modes, provenance: self.provenance })
    }

    fn from_document(doc: &CmDocument) -> Self {
        let entries = match &doc.payload {
            CmPayload::Quadrature(cm) => serde_json::to_value(QuadratureEntries {
                basis: cm.basis,
                m_xx: cm.m_xx,
                m_yy: cm.m_yy,
                m_xy: cm.m_xy,
            }),
            CmPayload::Amplitude(cm) => serde_json::to_value(AmplitudeEntries {
                m_abs: cm.m_abs,
                m_aa_re: cm.m_aa.re,
                m_aa_im: cm.m_aa.im,
            }),
            CmPayload::TwoModePq(cm) => {
                let block = |b: &QuadratureCM| BlockEntries { m_xx: b.m_xx, m_yy: b.m_yy, m_xy: b.m_xy };
                serde_json::to_value(TwoModeEntries {
                    block_1: block(&cm.block_1),
                    block_2: block(&cm.block_2),
                    cross: [[cm.cross[(0, 0)], cm.cross[(0, 1)]], [cm.cross[(1, 0)], cm.cross[(1, 1)]]],
                })
            }
            CmPayload::XyPair(cm) => {
                serde_json::to_value(BlockEntries { m_xx: cm.m_xx, m_yy: cm.m_yy, m_xy: cm.m_xy })
            }
        }
        .expect("entries serialize");
        RawDocument {
            schema_version: doc.schema_version.clone(),
            kind: doc.kind(),
            modes: doc.modes.as_ref().map(|m| m.iter().map(|b| b.0).collect()),
            entries,
            provenance: doc.provenance.clone(),
        }
    }
}

/// Which determinant law turns a CM of a given kind into a purity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurityLaw {
    /// `1/√det M` for one oscillator.
    InverseSqrtDet,
    /// `1/√det M₄ = P₁·P₂` for two uncorrelated oscillators.
    Product,
    /// `1/det M` for the `(x, y)` CM of a `±Ω` pair.
    InverseDet,
}

impl PurityLaw {
    pub fn label(self) -> &'static str {
        match self {
            PurityLaw::InverseSqrtDet => "1/sqrt(det)",
            PurityLaw::Product => "product law",
            PurityLaw::InverseDet => "1/det",
        }
    }
}

impl fmt::Display for PurityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurityResult {
    pub law: PurityLaw,
    pub det: f64,
    pub purity: f64,
}

/// Purity with the law dictated by the CM kind.
pub fn purity_by_kind(payload: &CmPayload) -> Result<PurityResult> {
    match payload {
        CmPayload::Quadrature(cm) => {
            Ok(PurityResult { law: PurityLaw::InverseSqrtDet, det: cm.det(), purity: cm.purity()? })
        }
        CmPayload::Amplitude(cm) => {
            Ok(PurityResult { law: PurityLaw::InverseSqrtDet, det: cm.det(), purity: cm.purity()? })
        }
        CmPayload::TwoModePq(cm) => Ok(PurityResult {
            law: PurityLaw::Product,
            det: cm.matrix().determinant(),
            purity: purity_two_mode_pq(cm)?,
        }),
        CmPayload::XyPair(cm) => Ok(PurityResult { law: PurityLaw::InverseDet, det: cm.det(), purity: purity_xy(cm)? }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReconstructedState {
    Single { mode: Option<ModeIndex>, params: GaussianParams },
    Pair { mode: ModeIndex, params: TwoModeGaussianParams },
}

impl ReconstructedState {
    pub fn abc(&self) -> (f64, f64, f64) {
        match self {
            ReconstructedState::Single { params, .. } => (params.a, params.b, params.c),
            ReconstructedState::Pair { params, .. } => (params.a, params.b, params.c),
        }
    }

    /// Single oscillators: `√(ab − c²)`; pairs: `ab − c²`.
    pub fn purity(&self) -> Option<f64> {
        match self {
            ReconstructedState::Single { params, .. } => validate_physicality(params).purity,
            ReconstructedState::Pair { params, .. } => params.discriminant().ok(),
        }
    }

    pub fn normalizable(&self) -> bool {
        let (a, b, c) = self.abc();
        GaussianParams::raw(a, b, c).is_normalizable()
    }

    pub fn physical(&self) -> bool {
        match self {
            ReconstructedState::Single { params, .. } => params.is_physical(),
            ReconstructedState::Pair { params, .. } => params.is_physical(),
        }
    }

    /// The reconstructed Wigner function written out with its numbers.
    pub fn wigner_expression(&self) -> String {
        let (a, b, c) = self.abc();
        let d = a * b - c * c;
        match self {
            ReconstructedState::Single { .. } => format!(
                "W(x, y) = (2/pi) * sqrt({d}) * exp(-[{a} dx^2 + {b} dy^2 - 2 * {c} dx dy])"
            ),
            ReconstructedState::Pair { mode, .. } => {
                let (w, m) = (mode.0, -mode.0);
                format!(
                    "W = (4/pi^2) * {d} * exp(-{a} dx_{w} dx_{m} - {b} dy_{w} dy_{m} + {c} (dx_{w} dy_{m} + dx_{m} dy_{w}))"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub states: Vec<ReconstructedState>,
    pub purity: PurityResult,
}

/// Recovers Wigner parameters from a CM. A `TWO_MODE_PQ` document is accepted
/// only for uncorrelated oscillators, which are reconstructed one by one.
pub fn reconstruct(doc: &CmDocument) -> Result<Reconstruction> {
    let single_mode = doc.modes.as_ref().and_then(|m| m.first().copied());
    let states = match &doc.payload {
        CmPayload::Quadrature(cm) => {
            vec![ReconstructedState::Single { mode: single_mode, params: params_from_quadrature_cm(cm)? }]
        }
        CmPayload::Amplitude(cm) => {
            vec![ReconstructedState::Single { mode: single_mode, params: params_from_amplitude_cm(cm)? }]
        }
        CmPayload::XyPair(cm) => {
            vec![ReconstructedState::Pair { mode: cm.mode, params: two_mode_params_from_xy_cm(cm)? }]
        }
        CmPayload::TwoModePq(cm) => {
            if cm.cross != Matrix2::zeros() {
                return Err(Error::UnsupportedKind(
                    "TWO_MODE_PQ with a nonzero cross block has no (q, p) reconstruction; convert to XY_PAIR".into(),
                ));
            }
            vec![
                ReconstructedState::Single { mode: Some(cm.modes.0), params: params_from_quadrature_cm(&cm.block_1)? },
                ReconstructedState::Single { mode: Some(cm.modes.1), params: params_from_quadrature_cm(&cm.block_2)? },
            ]
        }
    };
    Ok(Reconstruction { states, purity: purity_by_kind(&doc.payload)? })
}

/// Re-expresses a CM in another basis. Supported: `QUADRATURE ↔ AMPLITUDE`,
/// `XY_PAIR ↔ TWO_MODE_PQ` (the latter only for the stationary pair embedding).
pub fn convert(doc: &CmDocument, to: CmKind) -> Result<CmDocument> {
    let from = doc.kind();
    let payload = match (&doc.payload, to) {
        (_, k) if k == from => doc.payload.clone(),
        (CmPayload::Quadrature(cm), CmKind::Amplitude) => CmPayload::Amplitude(AmplitudeCM::from_quadrature(cm)),
        (CmPayload::Amplitude(cm), CmKind::Quadrature) => CmPayload::Quadrature(cm.to_quadrature(Basis::IntracavityXy)),
        (CmPayload::XyPair(cm), CmKind::TwoModePq) => {
            let full = expand_xy_to_full_pq_cm(cm)?;
            CmPayload::TwoModePq(two_mode_cm_from_matrix(&full, cm.mode_pair())?)
        }
        (CmPayload::TwoModePq(cm), CmKind::XyPair) => {
            if !cm.modes.0.is_opposite(cm.modes.1) {
                return Err(Error::UnsupportedKind(format!(
                    "modes ({}, {}) are not a ±Ω pair; no XY_PAIR form",
                    cm.modes.0, cm.modes.1
                )));
            }
            let mode = ModeIndex(cm.modes.0 .0.abs());
            let full = if cm.modes.0 == mode {
                cm.matrix()
            } else {
                // reorder so the +Ω oscillator comes first
                let m = cm.matrix();
                nalgebra::Matrix4::from_fn(|i, j| m[((i + 2) % 4, (j + 2) % 4)])
            };
            CmPayload::XyPair(xy_cm_from_full_pq_cm(&full, mode, EMBEDDING_TOL)?)
        }
        _ => return Err(Error::UnsupportedKind(format!("cannot convert {from} to {to}"))),
    };
    let modes = match &payload {
        CmPayload::TwoModePq(_) | CmPayload::XyPair(_) => CmDocument::new(payload.clone()).modes,
        _ => doc.modes.clone(),
    };
    let mut provenance = doc.provenance.clone();
    if from != to {
        provenance.note = format!("converted from {from}{}{}", if provenance.note.is_empty() { "" } else { "; " }, provenance.note);
        provenance.std_errors.clear();
    }
    Ok(CmDocument { schema_version: SCHEMA_VERSION.into(), payload, modes, provenance })
}
