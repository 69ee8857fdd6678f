//! Text persistence: CSV matrices with a `# rows cols` header, JSON reports and
//! run manifests with SHA-256 digests of the files they reference.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::DampingModel;
use crate::phantom::PhantomSpec;
use crate::spectral::Regularization;

pub const ARTIFACT_VERSION: &str = "1";

/// Writes `matrix` row-major, comma separated, each value in its shortest
/// representation that parses back to the same double.
pub fn save_matrix(path: impl AsRef<Path>, matrix: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    if let Some(bad) = matrix.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "cannot save non-finite value {bad} to {}",
            path.display()
        )));
    }
    write_atomic(path, format_matrix(matrix).as_bytes())
}

pub fn format_matrix(matrix: &DMatrix<f64>) -> String {
    let mut out = format!("# {} {}\n", matrix.nrows(), matrix.ncols());
    for row in matrix.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let dims: Vec<usize> = header
        .strip_prefix('#')
        .map(|h| h.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>())
        .and_then(|d| d.ok())
        .filter(|d: &Vec<usize>| d.len() == 2)
        .ok_or_else(|| err(1, format!("malformed header {header:?}, expected \"# rows cols\"")))?;
    let (rows, cols) = (dims[0], dims[1]);
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        if seen > rows {
            return Err(err(lineno, format!("more than the {rows} declared rows")));
        }
        let fields: Vec<&str> = if cols == 0 { Vec::new() } else { line.split(',').collect() };
        if fields.len() != cols {
            return Err(err(
                lineno,
                format!("row {seen} has {} values, expected {cols}", fields.len()),
            ));
        }
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| err(lineno, format!("row {seen}: cannot parse {f:?} as a number")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("row {seen}: non-finite value {f:?}")));
            }
            values.push(v);
        }
    }
    if seen != rows && cols > 0 {
        return Err(err(text.lines().count(), format!("found {seen} rows, header declares {rows}")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// A column vector stored as an `n x 1` matrix.
pub fn save_vector(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    save_matrix(path, &DMatrix::from_column_slice(values.len(), 1, values))
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let m = load_matrix(path)?;
    if m.ncols() != 1 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected one column, found {}", m.ncols()),
        });
    }
    Ok(m.iter().copied().collect())
}

/// Matrix whose columns are the given equally long slices.
pub fn columns(cols: &[&[f64]]) -> Result<DMatrix<f64>> {
    let rows = cols.first().map_or(0, |c| c.len());
    if let Some(c) = cols.iter().find(|c| c.len() != rows) {
        return Err(Error::LengthMismatch {
            context: "matrix columns",
            expected: rows,
            found: c.len(),
        });
    }
    Ok(DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path.as_ref(), text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Radial and time discretization inputs of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub radius: f64,
    pub panels: usize,
    pub order: usize,
    /// User cap on the time horizon, if any.
    pub time_cap: Option<f64>,
    /// Tail tolerance of the adapted time grid.
    pub time_tol: f64,
}

/// Everything needed to reproduce a run, plus digests of its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub model: DampingModel,
    pub n: usize,
    pub l_max: usize,
    pub alpha: f64,
    pub alpha_in_window: bool,
    pub grid: GridParams,
    pub regularization: Regularization,
    pub phantom: PhantomSpec,
    pub seed: u64,
    pub noise_sigma: f64,
    /// Seconds since the Unix epoch when the manifest was written.
    pub timestamp: u64,
    /// File name (relative to the run directory) to SHA-256.
    pub digests: BTreeMap<String, String>,
}

impl RunManifest {
    /// Records the digest of `name` inside `dir`.
    pub fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        let digest = file_digest(dir.join(name))?;
        self.digests.insert(name.to_string(), digest);
        Ok(())
    }

    /// Whether `name` exists in `dir` with the digest recorded here.
    pub fn matches(&self, dir: &Path, name: &str) -> bool {
        match (self.digests.get(name), file_digest(dir.join(name))) {
            (Some(want), Ok(got)) => *want == got,
            _ => false,
        }
    }

    /// Same kernel and radial grid, which is all Gram and eigen files depend on.
    pub fn same_kernel_inputs(&self, other: &RunManifest) -> bool {
        self.artifact_version == other.artifact_version
            && self.model == other.model
            && self.n == other.n
            && self.alpha == other.alpha
            && self.grid.radius == other.grid.radius
            && self.grid.panels == other.grid.panels
            && self.grid.order == other.grid.order
    }

    /// Same inputs, ignoring timestamp and digests.
    pub fn same_inputs(&self, other: &RunManifest) -> bool {
        let strip = |m: &RunManifest| RunManifest {
            timestamp: 0,
            digests: BTreeMap::new(),
            ..m.clone()
        };
        strip(self) == strip(other)
    }
}

pub fn now_timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// File names inside a run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn create(&self) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn manifest() -> &'static str {
        "manifest.json"
    }

    pub fn report() -> &'static str {
        "report.json"
    }

    pub fn gram(l: usize) -> String {
        format!("gram_{l}.csv")
    }

    pub fn eig_values(l: usize) -> String {
        format!("eig_values_{l}.csv")
    }

    pub fn eig_vectors(l: usize) -> String {
        format!("eig_vectors_{l}.csv")
    }

    pub fn mode_series(l: usize, k: usize) -> String {
        format!("mode_{l}_{k}_u.csv")
    }

    pub fn mode_recon(l: usize, k: usize) -> String {
        format!("mode_{l}_{k}_recon.csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn random_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = DMatrix::from_fn(5, 5, |_, _| {
            let mant: f64 = rng.random_range(-1.0..1.0);
            mant * 10f64.powi(rng.random_range(-300..300))
        });
        let p = dir.path().join("m.csv");
        save_matrix(&p, &m).unwrap();
        let back = load_matrix(&p).unwrap();
        assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        let extremes = DMatrix::from_row_slice(1, 4, &[f64::MIN_POSITIVE, 5e-324, f64::MAX, -0.0]);
        save_matrix(&p, &extremes).unwrap();
        let back = load_matrix(&p).unwrap();
        assert!(extremes.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn one_by_one_body() {
        let text = format_matrix(&DMatrix::from_element(1, 1, 0.5));
        assert_eq!(text, "# 1 1\n0.5\n");
    }

    #[test]
    fn parse_errors_name_the_row() {
        let p = Path::new("x.csv");
        let e = parse_matrix("# 2 2\n1,2\n3\n", p).unwrap_err();
        match e {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("row 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_matrix("2 2\n", p), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_matrix("# 1 1\nNaN\n", p), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("# 1 1\ninf\n", p), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("# 2 1\n1\n", p), Err(Error::Parse { .. })));
        assert!(save_matrix("/nonexistent/dir/m.csv", &DMatrix::from_element(1, 1, 1.0)).is_err());
        assert!(save_matrix("unused.csv", &DMatrix::from_element(1, 1, f64::NAN)).is_err());
    }

    #[test]
    fn digests() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            file_digest(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
