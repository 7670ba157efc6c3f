//! On-disk formats: unitary and mesh JSON, photon and run configuration,
//! scan and visibility CSV.

use multiphoton::matfunc::ComplexMatrix;
use multiphoton::mesh::InterferometerMesh;
use multiphoton::reconstruct::{ScanSample, VisibilityDatum, VisibilityScan};
use multiphoton::wavepacket::{GaussianPhoton, PhotonSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

/// Row-major complex matrix as `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
pub struct UnitaryFile {
    pub m: usize,
    pub entries: Vec<[f64; 2]>,
}

impl UnitaryFile {
    pub fn to_matrix(&self) -> Result<ComplexMatrix, CliError> {
        if self.entries.len() != self.m * self.m {
            return Err(CliError::input(format!(
                "unitary file promises {} modes but carries {} entries",
                self.m,
                self.entries.len()
            )));
        }
        Ok(ComplexMatrix::from_fn(self.m, self.m, |i, j| {
            let [re, im] = self.entries[i * self.m + j];
            Complex64::new(re, im)
        }))
    }

    pub fn from_matrix(u: &ComplexMatrix) -> Self {
        let m = u.n_rows();
        let entries = (0..m * m)
            .map(|k| {
                let z = u.get(k / m, k % m);
                [z.re, z.im]
            })
            .collect();
        Self { m, entries }
    }
}

pub fn read_unitary(path: &Path) -> Result<ComplexMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let file: UnitaryFile = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{} is not a unitary file: {e}", path.display())))?;
    file.to_matrix()
}

pub fn write_unitary(path: &Path, u: &ComplexMatrix) -> Result<(), CliError> {
    let file = UnitaryFile::from_matrix(u);
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_mesh(path: &Path) -> Result<InterferometerMesh, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mesh: InterferometerMesh = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{} is not a mesh file: {e}", path.display())))?;
    InterferometerMesh::new(mesh.m, mesh.elements).map_err(CliError::from)
}

/// Grid section of a run configuration.
#[derive(Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub dt1_min: f64,
    pub dt1_max: f64,
    pub dt2_min: f64,
    pub dt2_max: f64,
}

/// One run configuration file drives every photon-level subcommand.
#[derive(Serialize, Deserialize)]
pub struct RunConfig {
    pub photons: Vec<PhotonSpec>,
    #[serde(default)]
    pub unitary: Option<String>,
    #[serde(default)]
    pub mesh: Option<String>,
    #[serde(default)]
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub outputs: Vec<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Explicit `(Δτ₁, Δτ₂)` evaluation points for `landscape --points`.
    #[serde(default)]
    pub delta_points: Vec<[f64; 2]>,
    /// Relative delays for single-setting commands (`distribution`,
    /// `ratematrix`).
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Per-photon coefficients mapping `(Δτ₁, Δτ₂)` to arrival-time shifts.
    /// Defaults to `Δτ₁` on photon 1, reference photon 2, `Δτ₂` on photon 3.
    #[serde(default)]
    pub delay_map: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{} is not a run config: {e}", path.display())))
    }

    pub fn photons(&self) -> Result<Vec<GaussianPhoton>, CliError> {
        if self.photons.is_empty() {
            return Err(CliError::input("config lists no photons".into()));
        }
        self.photons
            .iter()
            .map(|s| GaussianPhoton::from_spec(s).map_err(CliError::from))
            .collect()
    }

    /// The network matrix, from exactly one of `unitary` or `mesh`,
    /// resolved relative to the config file's directory.
    pub fn network(&self, config_dir: &Path) -> Result<ComplexMatrix, CliError> {
        match (&self.unitary, &self.mesh) {
            (Some(u), None) => read_unitary(&config_dir.join(u)),
            (None, Some(m)) => {
                let mesh = read_mesh(&config_dir.join(m))?;
                multiphoton::mesh::mesh_to_unitary(&mesh).map_err(CliError::from)
            }
            (None, None) => Err(CliError::input(
                "config needs one of \"unitary\" or \"mesh\"".into(),
            )),
            (Some(_), Some(_)) => Err(CliError::input(
                "config must name exactly one of \"unitary\" or \"mesh\", not both".into(),
            )),
        }
    }
}

/// Parses a scan CSV: `#`-prefixed header lines carry the pair, background
/// rates and photon spectra; then a column header and `delay_fs,counts,error`
/// rows.
pub fn read_scan(path: &Path) -> Result<VisibilityScan, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut input_pair = None;
    let mut output_pair = None;
    let mut ho1 = 0.0;
    let mut ho2 = 0.0;
    let mut dark = 0.0;
    let mut photon1: Option<PhotonSpec> = None;
    let mut photon2: Option<PhotonSpec> = None;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for field in rest.split_whitespace() {
                let Some((key, value)) = field.split_once('=') else { continue };
                let parse_pair = |v: &str| -> Result<(usize, usize), CliError> {
                    let parts: Vec<&str> = v.split(',').collect();
                    if parts.len() != 2 {
                        return Err(CliError::input(format!("row {row}: bad pair {v:?}")));
                    }
                    Ok((
                        parts[0].parse().map_err(|_| CliError::input(format!("row {row}: bad pair {v:?}")))?,
                        parts[1].parse().map_err(|_| CliError::input(format!("row {row}: bad pair {v:?}")))?,
                    ))
                };
                let parse_photon = |v: &str| -> Result<PhotonSpec, CliError> {
                    let parts: Vec<&str> = v.split(',').collect();
                    if parts.len() != 2 {
                        return Err(CliError::input(format!("row {row}: bad photon {v:?}")));
                    }
                    Ok(PhotonSpec {
                        lambda_c_nm: parts[0]
                            .parse()
                            .map_err(|_| CliError::input(format!("row {row}: bad photon {v:?}")))?,
                        fwhm_nm: parts[1]
                            .parse()
                            .map_err(|_| CliError::input(format!("row {row}: bad photon {v:?}")))?,
                        tau_fs: 0.0,
                    })
                };
                match key {
                    "input_pair" => input_pair = Some(parse_pair(value)?),
                    "output_pair" => output_pair = Some(parse_pair(value)?),
                    "ho1" => ho1 = parse_float(value, row)?,
                    "ho2" => ho2 = parse_float(value, row)?,
                    "dark" => dark = parse_float(value, row)?,
                    "photon1" => photon1 = Some(parse_photon(value)?),
                    "photon2" => photon2 = Some(parse_photon(value)?),
                    _ => {}
                }
            }
            continue;
        }
        if line.starts_with("delay_fs") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(CliError::input(format!(
                "row {row}: expected delay_fs,counts,error, got {line:?}"
            )));
        }
        samples.push(ScanSample {
            delay_fs: parse_float(cols[0], row)?,
            counts: parse_float(cols[1], row)?,
            error: parse_float(cols[2], row)?,
        });
    }
    let input_pair = input_pair.ok_or_else(|| CliError::input("scan header lacks input_pair".into()))?;
    let output_pair =
        output_pair.ok_or_else(|| CliError::input("scan header lacks output_pair".into()))?;
    let p1 = photon1.ok_or_else(|| CliError::input("scan header lacks photon1".into()))?;
    let p2 = photon2.ok_or_else(|| CliError::input("scan header lacks photon2".into()))?;
    let spectra = [
        GaussianPhoton::from_spec(&p1)?,
        GaussianPhoton::from_spec(&p2)?,
    ];
    VisibilityScan::new(input_pair, output_pair, samples, ho1, ho2, dark, spectra)
        .map_err(CliError::from)
}

fn parse_float(s: &str, row: usize) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::input(format!("row {row}: {s:?} is not a number")))
}

/// Parses a visibility CSV with header `i,j,k,l,visibility,sigma`.
pub fn read_visibilities(path: &Path) -> Result<Vec<VisibilityDatum>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('i') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(CliError::input(format!(
                "row {row}: expected i,j,k,l,visibility,sigma, got {line:?}"
            )));
        }
        let idx = |s: &str| -> Result<usize, CliError> {
            s.trim()
                .parse()
                .map_err(|_| CliError::input(format!("row {row}: {s:?} is not a mode index")))
        };
        out.push(VisibilityDatum {
            input_pair: (idx(cols[0])?, idx(cols[1])?),
            output_pair: (idx(cols[2])?, idx(cols[3])?),
            visibility: parse_float(cols[4], row)?,
            sigma: parse_float(cols[5], row)?,
        });
    }
    Ok(out)
}

pub fn write_visibilities(path: &Path, data: &[VisibilityDatum]) -> Result<(), CliError> {
    let mut text = String::from("i,j,k,l,visibility,sigma\n");
    for d in data {
        text.push_str(&format!(
            "{},{},{},{},{:.12e},{:.12e}\n",
            d.input_pair.0, d.input_pair.1, d.output_pair.0, d.output_pair.1, d.visibility, d.sigma
        ));
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}
