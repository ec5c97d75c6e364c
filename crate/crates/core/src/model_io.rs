//! Ingestion of frequentist model specs and posterior-draw matrices, name
//! resolution for interaction terms, and derivation of focal-role views.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for accepting (and symmetrizing) a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// A coefficient vector with its covariance matrix and the value ranges of
/// the variables that may act as focal predictor or moderator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub coef_names: Vec<String>,
    pub coefs: Vec<f64>,
    /// Row-major, same order as `coef_names`.
    pub covar: Vec<Vec<f64>>,
    pub var_ranges: BTreeMap<String, (f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_label: Option<String>,
}

impl ModelSpec {
    /// Checks every invariant and symmetrizes `covar` as `(A + Aᵀ) / 2`.
    pub fn validate(mut self) -> Result<Self> {
        let k = self.coef_names.len();
        if self.coefs.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient names but {} coefficients",
                k,
                self.coefs.len()
            )));
        }
        if self.covar.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient names but covariance has {} rows",
                k,
                self.covar.len()
            )));
        }
        if let Some((i, row)) = self.covar.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::DimensionMismatch(format!(
                "covariance row {} has {} entries, expected {}",
                i,
                row.len(),
                k
            )));
        }
        let mut seen = HashSet::new();
        for name in &self.coef_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateParameter(name.clone()));
            }
        }
        if self.coefs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("coefs".into()));
        }
        if self.covar.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("covar".into()));
        }
        for i in 0..k {
            if self.covar[i][i] < 0.0 {
                return Err(Error::NegativeDiagonal(self.coef_names[i].clone()));
            }
            for j in (i + 1)..k {
                let (upper, lower) = (self.covar[i][j], self.covar[j][i]);
                if (upper - lower).abs() > SYMMETRY_TOL {
                    return Err(Error::AsymmetricCovariance {
                        row: i,
                        col: j,
                        upper,
                        lower,
                    });
                }
                let mean = 0.5 * (upper + lower);
                self.covar[i][j] = mean;
                self.covar[j][i] = mean;
            }
        }
        for (name, &(min, max)) in &self.var_ranges {
            if !(min < max) {
                return Err(Error::InvalidRange {
                    name: name.clone(),
                    min,
                    max,
                });
            }
        }
        Ok(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()
    }

    /// Canonical serialization: pretty-printed JSON with keys in field order
    /// and `var_ranges` sorted by name.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ModelSpec always serializes")
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.coef_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn range_of(&self, name: &str) -> Result<(f64, f64)> {
        self.var_ranges
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingRange(name.to_string()))
    }

    #[inline]
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covar[i][j]
    }

    /// Label used in messages and output paths; falls back to the position.
    pub fn label_or(&self, index: usize) -> String {
        self.group_label
            .clone()
            .unwrap_or_else(|| format!("group {}", index + 1))
    }
}

/// Loads a single model spec from a JSON file.
pub fn load_model_spec(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelSpec::from_json_str(&text)
}

/// Loads either a single spec object or a JSON array of specs (grouped file).
pub fn load_model_specs(path: impl AsRef<Path>) -> Result<Vec<ModelSpec>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let raw: Vec<ModelSpec> = if value.is_array() {
        serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        vec![serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?]
    };
    raw.into_iter()
        .enumerate()
        .map(|(i, spec)| {
            let label = spec.label_or(i);
            spec.validate().map_err(|e| e.in_group(&label))
        })
        .collect()
}

/// One variable's role assignment: which coefficients make up its
/// conditional effect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalView {
    pub focal: String,
    pub moderators: Vec<String>,
    pub idx_main: usize,
    /// Focal × moderator terms, in `moderators` order.
    pub idx_two_way: Vec<usize>,
    pub idx_three_way: Option<usize>,
}

impl FocalView {
    pub fn order(&self) -> usize {
        self.moderators.len() + 1
    }
}

/// Finds the unique parameter named by any colon-permutation of the
/// requested variables (`x:z` and `z:x` both match `(x, z)`).
pub fn resolve_interaction_name<'a>(
    names: &'a [String],
    a: &str,
    b: &str,
    c: Option<&str>,
) -> Result<&'a str> {
    let mut wanted: Vec<&str> = vec![a, b];
    wanted.extend(c);
    let request = wanted.join(", ");
    wanted.sort_unstable();

    let matches: Vec<&'a str> = names
        .iter()
        .map(String::as_str)
        .filter(|name| {
            let mut parts: Vec<&str> = name.split(':').map(str::trim).collect();
            parts.sort_unstable();
            parts == wanted
        })
        .collect();
    match matches.as_slice() {
        [] => Err(Error::InteractionNotFound(request)),
        [one] => Ok(one),
        _ => Err(Error::AmbiguousInteraction {
            request,
            candidates: matches.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn position(names: &[String], name: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::UnknownParameter(name.to_string()))
}

fn interaction_index(names: &[String], a: &str, b: &str, c: Option<&str>) -> Result<usize> {
    let name = resolve_interaction_name(names, a, b, c)?;
    position(names, name)
}

/// Builds one view per theta, each taking the focal role once.
///
/// With thetas `(x, m, w)` the views are
/// `x: (x; x:m, x:w; x:m:w)`, `m: (m; x:m, m:w; x:m:w)`, `w: (w; x:w, m:w; x:m:w)`.
pub fn derive_role_views(spec_names: &[String], thetas: &[&str]) -> Result<Vec<FocalView>> {
    if !(2..=3).contains(&thetas.len()) {
        return Err(Error::ThetaCount(thetas.len()));
    }
    let mut seen = HashSet::new();
    for t in thetas {
        if !seen.insert(*t) {
            return Err(Error::DuplicateParameter(t.to_string()));
        }
    }

    let triple = match thetas {
        [a, b, c] => Some(interaction_index(spec_names, a, b, Some(c))?),
        _ => None,
    };
    thetas
        .iter()
        .enumerate()
        .map(|(k, &focal)| {
            let moderators: Vec<&str> = thetas
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &t)| t)
                .collect();
            let idx_two_way = moderators
                .iter()
                .map(|m| interaction_index(spec_names, focal, m, None))
                .collect::<Result<Vec<_>>>()?;
            Ok(FocalView {
                focal: focal.to_string(),
                moderators: moderators.iter().map(|s| s.to_string()).collect(),
                idx_main: position(spec_names, focal)?,
                idx_two_way,
                idx_three_way: triple,
            })
        })
        .collect()
}

/// Posterior draws, iterations × parameters, stored untrimmed. Burn-in and
/// thinning are recorded here and applied by [`crate::preprocess_draws`].
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDrawMatrix {
    param_names: Vec<String>,
    /// Row-major, `n_rows * param_names.len()` values.
    values: Vec<f64>,
    n_rows: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl PosteriorDrawMatrix {
    pub fn from_rows(
        param_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        burn_in: usize,
        thin: usize,
    ) -> Result<Self> {
        let ncol = param_names.len();
        let mut values = Vec::with_capacity(rows.len() * ncol);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncol {
                return Err(Error::DimensionMismatch(format!(
                    "draw row {} has {} values, expected {}",
                    i + 1,
                    row.len(),
                    ncol
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(param_names, values, rows.len(), burn_in, thin)
    }

    /// Builds a matrix from one vector per parameter.
    pub fn from_columns(
        param_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        burn_in: usize,
        thin: usize,
    ) -> Result<Self> {
        if columns.len() != param_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names but {} columns",
                param_names.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::DimensionMismatch("columns differ in length".into()));
        }
        let mut values = Vec::with_capacity(n_rows * columns.len());
        for r in 0..n_rows {
            values.extend(columns.iter().map(|c| c[r]));
        }
        Self::from_flat(param_names, values, n_rows, burn_in, thin)
    }

    fn from_flat(
        param_names: Vec<String>,
        values: Vec<f64>,
        n_rows: usize,
        burn_in: usize,
        thin: usize,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &param_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateParameter(name.clone()));
            }
        }
        if n_rows == 0 {
            return Err(Error::InvalidDraws("empty draw matrix".into()));
        }
        if thin == 0 {
            return Err(Error::InvalidDraws("thin must be at least 1".into()));
        }
        if burn_in >= n_rows {
            return Err(Error::InvalidDraws(format!(
                "burn_in {burn_in} must be below the row count {n_rows}"
            )));
        }
        Ok(Self {
            param_names,
            values,
            n_rows,
            burn_in,
            thin,
        })
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.param_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_cols();
        &self.values[i * k..(i + 1) * k]
    }
}

/// Reads a posterior CSV: one header row of parameter names, then one row
/// per iteration.
pub fn load_posterior_csv(
    path: impl AsRef<Path>,
    burn_in: usize,
    thin: usize,
) -> Result<PosteriorDrawMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_posterior_csv(file, burn_in, thin)
}

pub fn read_posterior_csv<R: Read>(
    reader: R,
    burn_in: usize,
    thin: usize,
) -> Result<PosteriorDrawMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(Error::Parse("missing or empty header name".into()));
    }
    let mut values = Vec::new();
    let mut n_rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!(
                    "non-numeric cell '{}' at row {}, column '{}'",
                    cell,
                    i + 1,
                    names[j]
                ))
            })?;
            values.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::InvalidDraws("posterior CSV has no draws".into()));
    }
    PosteriorDrawMatrix::from_flat(names, values, n_rows, burn_in, thin)
}
