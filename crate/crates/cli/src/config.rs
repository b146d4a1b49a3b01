//! JSON scenario files and their translation into core objects.

use std::collections::BTreeMap;
use std::path::Path;

use qifs_core::markov::{embed_classic_bridge, embed_perron, embed_stochastic};
use qifs_core::matcore::{c64, ComplexMatrix};
use qifs_core::nalgebra::DMatrix;
use qifs_core::{EmbeddingKind, KrausFamily, QifsError, QifsModel, StochasticMatrix};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const COLUMN_STOCHASTIC: &str = "column-stochastic";

/// A matrix entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

pub type MatrixSpec = Vec<Vec<Entry>>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Families {
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<MatrixSpec>>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<MatrixSpec>>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<MatrixSpec>>,
}

/// Stochastic matrices are written row-major; `convention` must say
/// `"column-stochastic"` (columns sum to one).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization_n0: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    /// Extra independent chains from random starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureSpec {
    /// Replace `W` by the maximizing scalar weights.
    #[serde(default)]
    pub maximize: bool,
    /// 1-based `(l, m)` for the coordinate form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinate: Option<[usize; 2]>,
    /// Multiply the potential by `sqrt(alpha)` first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Number(f64),
    Array(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Families>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure: Option<PressureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Result keys and the values they must reproduce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<BTreeMap<String, Expected>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_tol: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

pub fn to_matrix(spec: &MatrixSpec, name: &str) -> Result<ComplexMatrix, CliError> {
    let rows = spec.len();
    let cols = spec.first().map(Vec::len).unwrap_or(0);
    if rows == 0 || cols == 0 || spec.iter().any(|r| r.len() != cols) {
        return Err(CliError::validation(format!("{name}: ragged or empty matrix")));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (i, row) in spec.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = match *e {
                Entry::Real(x) => c64(x, 0.0),
                Entry::Complex([re, im]) => c64(re, im),
            };
            if !m[(i, j)].re.is_finite() || !m[(i, j)].im.is_finite() {
                return Err(CliError::validation(format!("{name}: non-finite entry")));
            }
        }
    }
    Ok(m)
}

fn to_family(specs: &[MatrixSpec], name: &str) -> Result<KrausFamily, CliError> {
    let ops = specs
        .iter()
        .enumerate()
        .map(|(i, s)| to_matrix(s, &format!("{name}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    KrausFamily::new(ops).map_err(CliError::from)
}

pub fn to_real(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let m = rows.first().map(Vec::len).unwrap_or(0);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::validation(format!("{name}: ragged or empty matrix")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn to_stochastic(rows: &[Vec<f64>], name: &str) -> Result<StochasticMatrix, CliError> {
    StochasticMatrix::from_rows(rows).map_err(|e| CliError::validation(format!("{name}: {e}")))
}

/// Everything a task may need, built once from the configuration.
#[derive(Debug, Clone, Default)]
pub struct Resolved {
    pub model: Option<QifsModel>,
    pub v: Option<KrausFamily>,
    pub h: Option<KrausFamily>,
    pub kind: Option<EmbeddingKind>,
    pub p: Option<StochasticMatrix>,
    pub q: Option<StochasticMatrix>,
    pub a: Option<DMatrix<f64>>,
}

impl Resolved {
    pub fn model(&self) -> Result<&QifsModel, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::validation("task needs a QIFS: give families V and W, or a stochastic embedding"))
    }

    pub fn v(&self) -> Result<&KrausFamily, CliError> {
        self.v.as_ref().ok_or_else(|| CliError::validation("task needs the dynamics family V"))
    }

    pub fn h(&self) -> Result<&KrausFamily, CliError> {
        self.h
            .as_ref()
            .ok_or_else(|| CliError::validation("task needs a potential family H (or a perron/classic embedding)"))
    }

    /// Dimension of the state space, or 0 when no family is present.
    pub fn dim(&self) -> usize {
        self.v.as_ref().map(KrausFamily::dim).unwrap_or(0)
    }
}

pub fn resolve(cfg: &ScenarioConfig) -> Result<Resolved, CliError> {
    match (&cfg.families, &cfg.embedding) {
        (Some(_), Some(_)) => Err(CliError::validation("give either families or embedding, not both")),
        (None, None) => Err(CliError::validation("config has neither families nor embedding")),
        (Some(f), None) => resolve_families(f),
        (None, Some(e)) => resolve_embedding(e),
    }
}

fn resolve_families(f: &Families) -> Result<Resolved, CliError> {
    let v = to_family(f.v.as_deref().ok_or_else(|| CliError::validation("families.V is required"))?, "V")?;
    let h = f.h.as_deref().map(|h| to_family(h, "H")).transpose()?;
    let model = match &f.w {
        Some(w) => Some(QifsModel::new(v.clone(), to_family(w, "W")?)?),
        None if v.is_normalized() => Some(QifsModel::homogeneous(v.clone())?),
        None => None,
    };
    if let Some(h) = &h {
        if h.dim() != v.dim() {
            return Err(QifsError::DimensionMismatch { expected: v.dim(), found: h.dim() }.into());
        }
        if h.arity() != v.arity() {
            return Err(QifsError::ArityMismatch { expected: v.arity(), found: h.arity() }.into());
        }
    }
    Ok(Resolved { model, v: Some(v), h, ..Default::default() })
}

fn resolve_embedding(e: &EmbeddingSpec) -> Result<Resolved, CliError> {
    let kind = EmbeddingKind::parse(&e.kind)
        .ok_or_else(|| CliError::validation(format!("unknown embedding kind '{}'", e.kind)))?;
    if e.p.is_some() || e.q.is_some() {
        match e.convention.as_deref() {
            Some(COLUMN_STOCHASTIC) => {}
            Some(other) => {
                return Err(CliError::validation(format!(
                    "unsupported convention '{other}', only '{COLUMN_STOCHASTIC}' is accepted"
                )))
            }
            None => {
                return Err(CliError::validation(format!(
                    "stochastic matrices need \"convention\": \"{COLUMN_STOCHASTIC}\""
                )))
            }
        }
    }
    let p = e.p.as_deref().map(|p| to_stochastic(p, "p")).transpose()?;
    let q = e.q.as_deref().map(|q| to_stochastic(q, "q")).transpose()?;
    let a = e.a.as_deref().map(|a| to_real(a, "a")).transpose()?;
    let mut out = Resolved { kind: Some(kind), a: a.clone(), ..Default::default() };
    match kind {
        EmbeddingKind::PerronPotential => {
            let a = a.ok_or_else(|| CliError::validation("perron embedding needs a"))?;
            let (v, h) = embed_perron(&a)?;
            out.v = Some(v);
            out.h = Some(h);
        }
        EmbeddingKind::ClassicBridge => {
            let a = a.ok_or_else(|| CliError::validation("classic embedding needs a"))?;
            let q = q.ok_or_else(|| CliError::validation("classic embedding needs q"))?;
            let (m, h) = embed_classic_bridge(&a, &q)?;
            out.v = Some(m.v().clone());
            out.h = Some(h);
            out.model = Some(m);
            out.q = Some(q);
        }
        _ => {
            // A lone matrix serves as both dynamics and weights.
            let p = p.or_else(|| q.clone()).ok_or_else(|| CliError::validation("embedding needs p or q"))?;
            let q = q.unwrap_or_else(|| p.clone());
            let m = embed_stochastic(&p, Some(&q), kind)?;
            out.v = Some(m.v().clone());
            out.model = Some(m);
            out.p = Some(p);
            out.q = Some(q);
        }
    }
    Ok(out)
}

/// Parses `a,b,c,d` into a row-major square matrix.
pub fn parse_flat_square(text: &str, name: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let xs = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::validation(format!("--{name}: {e}")))?;
    let n = (xs.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != xs.len() {
        return Err(CliError::validation(format!("--{name}: expected n*n comma-separated numbers")));
    }
    Ok(xs.chunks(n).map(<[f64]>::to_vec).collect())
}
