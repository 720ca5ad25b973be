//! Regular-grid scalar fields: ingestion, synthetic Gaussian mixtures and
//! noise injection.
//!
//! Vertex `(i, j[, k])` is stored at linear index `i + nx * (j + ny * k)`,
//! so the x axis varies fastest. A CSV grid therefore maps columns to x and
//! lines to y.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScalarField<T> {
    dims: Vec<usize>,
    origin: Vec<T>,
    spacing: Vec<T>,
    values: Vec<T>,
    time_index: i64,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(
        dims: Vec<usize>,
        origin: Vec<T>,
        spacing: Vec<T>,
        values: Vec<T>,
        time_index: i64,
    ) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::InvalidField(format!(
                "expected 2 or 3 dimensions, got {}",
                dims.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidField(format!("every extent must be >= 2, got {d}")));
        }
        if origin.len() != dims.len() || spacing.len() != dims.len() {
            return Err(Error::InvalidField(
                "origin and spacing must match the number of dimensions".into(),
            ));
        }
        if spacing.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::InvalidField("spacing must be strictly positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidField("origin must be finite".into()));
        }
        let expected: usize = dims.iter().product();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            dims,
            origin,
            spacing,
            values,
            time_index,
        })
    }

    /// Unit-spaced grid anchored at the origin.
    pub fn from_values(dims: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let n = dims.len();
        Self::new(dims, vec![T::zero(); n], vec![T::one(); n], values, 0)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn time_index(&self) -> i64 {
        self.time_index
    }

    pub fn with_time_index(mut self, t: i64) -> Self {
        self.time_index = t;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    /// Grid index of a linear vertex id.
    pub fn grid_index(&self, vertex: usize) -> Vec<usize> {
        let mut rest = vertex;
        self.dims
            .iter()
            .map(|&d| {
                let i = rest % d;
                rest /= d;
                i
            })
            .collect()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .rev()
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Domain coordinates `origin + spacing * index`.
    pub fn coords(&self, vertex: usize) -> Vec<T> {
        self.grid_index(vertex)
            .iter()
            .zip(self.origin.iter().zip(&self.spacing))
            .map(|(&i, (&o, &s))| o + s * T::from_usize(i).unwrap())
            .collect()
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &v| (lo.min(v), hi.max(v)),
        )
    }

    /// `max f - min f`.
    pub fn range(&self) -> T {
        let (lo, hi) = self.min_max();
        hi - lo
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn cast<U: Scalar>(&self) -> ScalarField<U> {
        let conv = |x: &T| U::lit(x.as_f64());
        ScalarField {
            dims: self.dims.clone(),
            origin: self.origin.iter().map(conv).collect(),
            spacing: self.spacing.iter().map(conv).collect(),
            values: self.values.iter().map(conv).collect(),
            time_index: self.time_index,
        }
    }
}

/// Length of the bounding-box diagonal.
pub fn domain_diagonal<T: Scalar>(field: &ScalarField<T>) -> T {
    field
        .dims
        .iter()
        .zip(&field.spacing)
        .map(|(&d, &s)| {
            let extent = s * T::from_usize(d - 1).unwrap();
            extent * extent
        })
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

/// Input formats accepted by [`load_field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldFormat {
    /// float32 samples plus a JSON sidecar header.
    Raw,
    /// Comma separated 2D grid; one line per y.
    Csv2d,
}

impl FieldFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("txt") => FieldFormat::Csv2d,
            _ => FieldFormat::Raw,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

/// JSON sidecar describing a raw float32 file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawHeader {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
    #[serde(default)]
    pub spacing: Option<Vec<f64>>,
    #[serde(default)]
    pub time_index: i64,
    #[serde(default)]
    pub endianness: Endianness,
}

/// Sidecar path for a raw file: `field.raw` -> `field.json`.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

pub fn load_field<T: Scalar>(path: &Path, format: FieldFormat) -> Result<ScalarField<T>> {
    match format {
        FieldFormat::Raw => load_raw(path),
        FieldFormat::Csv2d => load_csv2d(path),
    }
}

fn load_raw<T: Scalar>(path: &Path) -> Result<ScalarField<T>> {
    let header_path = sidecar_path(path);
    let header_text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: RawHeader = serde_json::from_str(&header_text)
        .map_err(|e| Error::MalformedHeader(format!("{}: {e}", header_path.display())))?;
    let n = header.dims.len();
    if n != 2 && n != 3 {
        return Err(Error::MalformedHeader(format!("dims must have 2 or 3 entries, got {n}")));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected: usize = header.dims.iter().product();
    if bytes.len() % 4 != 0 {
        return Err(Error::MalformedHeader(format!(
            "raw payload of {} bytes is not a whole number of float32 values",
            bytes.len()
        )));
    }
    let found = bytes.len() / 4;
    if found != expected {
        return Err(Error::LengthMismatch { expected, found });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            let v = match header.endianness {
                Endianness::Little => f32::from_le_bytes(b),
                Endianness::Big => f32::from_be_bytes(b),
            };
            T::from_f32(v).unwrap_or_else(T::nan)
        })
        .collect();
    let origin = header.origin.unwrap_or_else(|| vec![0.0; n]);
    let spacing = header.spacing.unwrap_or_else(|| vec![1.0; n]);
    if origin.len() != n || spacing.len() != n {
        return Err(Error::MalformedHeader(
            "origin/spacing length differs from dims".into(),
        ));
    }
    ScalarField::new(
        header.dims,
        origin.into_iter().map(T::lit).collect(),
        spacing.into_iter().map(T::lit).collect(),
        values,
        header.time_index,
    )
}

fn load_csv2d<T: Scalar>(path: &Path) -> Result<ScalarField<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv2d(&text)
}

/// Parses a comma separated grid. Columns become x, lines become y.
pub fn parse_csv2d<T: Scalar>(text: &str) -> Result<ScalarField<T>> {
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<&str> = line.split(',').map(str::trim).collect();
        match ncols {
            None => ncols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse(format!(
                    "line {} has {} columns, expected {c}",
                    line_no + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        for cell in row {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: cannot parse {cell:?}", line_no + 1)))?;
            values.push(T::lit(v));
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| Error::Parse("empty csv".into()))?;
    ScalarField::from_values(vec![ncols, nrows], values)
}

/// Writes `path` as little-endian float32 plus its JSON sidecar.
pub fn save_raw<T: Scalar>(field: &ScalarField<T>, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(field.values.len() * 4);
    for v in &field.values {
        bytes.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let header = RawHeader {
        dims: field.dims.clone(),
        origin: Some(field.origin.iter().map(|x| x.as_f64()).collect()),
        spacing: Some(field.spacing.iter().map(|x| x.as_f64()).collect()),
        time_index: field.time_index,
        endianness: Endianness::Little,
    };
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

/// One anisotropic Gaussian bump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GaussianSpec<T> {
    pub center: Vec<T>,
    pub amplitude: T,
    pub sigma: Vec<T>,
}

impl<T: Scalar> GaussianSpec<T> {
    pub fn isotropic(center: Vec<T>, amplitude: T, sigma: T) -> Self {
        let sigma = vec![sigma; center.len()];
        Self {
            center,
            amplitude,
            sigma,
        }
    }

    pub fn eval(&self, x: &[T]) -> T {
        let two = T::lit(2.0);
        let exponent = x
            .iter()
            .zip(self.center.iter().zip(&self.sigma))
            .map(|(&xi, (&c, &s))| (xi - c) * (xi - c) / (two * s * s))
            .fold(T::zero(), |a, b| a + b);
        self.amplitude * (-exponent).exp()
    }
}

/// Samples `sum_k amp_k * exp(-sum_ax (x_ax - c_ax)^2 / (2 sigma_ax^2))` on a grid.
pub fn gaussian_mixture<T: Scalar>(
    specs: &[GaussianSpec<T>],
    dims: &[usize],
    origin: &[T],
    spacing: &[T],
) -> Result<ScalarField<T>> {
    if specs.is_empty() {
        return Err(Error::EmptySpecs);
    }
    for s in specs {
        if s.center.len() != dims.len() || s.sigma.len() != dims.len() {
            return Err(Error::InvalidField(
                "Gaussian center/sigma dimension differs from grid".into(),
            ));
        }
        if s.sigma.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::InvalidField("Gaussian sigma must be positive".into()));
        }
    }
    let n: usize = dims.iter().product();
    let skeleton = ScalarField::new(
        dims.to_vec(),
        origin.to_vec(),
        spacing.to_vec(),
        vec![T::zero(); n],
        0,
    )?;
    let values = (0..n)
        .map(|v| {
            let x = skeleton.coords(v);
            specs.iter().map(|s| s.eval(&x)).fold(T::zero(), |a, b| a + b)
        })
        .collect();
    ScalarField::new(dims.to_vec(), origin.to_vec(), spacing.to_vec(), values, 0)
}

/// Adds i.i.d. `Uniform(-iota R, iota R)` noise per vertex, `R` being the
/// input range. Deterministic in `seed`.
pub fn add_noise<T: Scalar>(field: &ScalarField<T>, iota: T, seed: u64) -> Result<ScalarField<T>> {
    if !(iota >= T::zero() && iota <= T::one()) {
        return Err(Error::InvalidParameter(format!("iota must lie in [0, 1], got {iota}")));
    }
    if iota == T::zero() {
        return Ok(field.clone());
    }
    let amp = (iota * field.range()).as_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = field
        .values
        .iter()
        .map(|&v| {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            v + T::lit(u * amp)
        })
        .collect();
    Ok(ScalarField {
        values,
        ..field.clone()
    })
}
