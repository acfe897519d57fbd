//! Matrix CSV files and instance bundles.
//!
//! A bundle is a directory holding `meta.json` plus `X.csv`, `W.csv`,
//! `H.csv` and `N.csv`. Matrices are written row-major without a header,
//! each entry with 17 significant digits so that they reload bit-exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PsscLevel;
use crate::instance::{assemble, GenMeta, HMode, Instance, NoiseMode};
use crate::norms::Mat;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv(path: &Path, a: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in a.row_iter() {
        w.write_record(row.iter().map(|&v| format_f64(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let malformed = |reason: String| Error::Malformed { path: path.display().to_string(), reason };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if ncols.is_some_and(|c| c != rec.len()) {
            return Err(malformed(format!("row {} has {} fields, expected {}", i + 1, rec.len(), ncols.unwrap_or(0))));
        }
        ncols = Some(rec.len());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| malformed(format!("row {}, column {}: {field:?} is not a number", i + 1, j + 1)))?;
            data.push(v);
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| malformed("empty matrix".into()))?;
    let a = Mat::from_row_slice(nrows, ncols, &data);
    crate::norms::ensure_finite(&a)?;
    Ok(a)
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub p: f64,
    pub eps: f64,
    pub seed: u64,
    pub modes: Modes,
    pub certified_p: Option<f64>,
    #[serde(default)]
    pub gen_meta: Option<GenMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modes {
    pub h: Option<HMode>,
    pub noise: Option<NoiseMode>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed { path: path.display().to_string(), reason: e.to_string() })
}

fn part(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

pub fn save_bundle(dir: &Path, inst: &Instance) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = BundleMeta {
        m: inst.m(),
        n: inst.n(),
        r: inst.r(),
        p: inst.level.p(),
        eps: inst.eps,
        seed: inst.seed,
        modes: Modes { h: inst.gen_meta.h.as_ref().map(|h| h.mode), noise: inst.gen_meta.noise_mode },
        certified_p: inst.gen_meta.certified_p,
        gen_meta: Some(inst.gen_meta.clone()),
    };
    write_json(&part(dir, "meta.json"), &meta)?;
    write_matrix_csv(&part(dir, "X.csv"), &inst.x)?;
    write_matrix_csv(&part(dir, "W.csv"), &inst.w_sharp)?;
    write_matrix_csv(&part(dir, "H.csv"), &inst.h_sharp)?;
    write_matrix_csv(&part(dir, "N.csv"), &inst.n_sharp)?;
    Ok(())
}

/// Reloads a bundle, re-checking every invariant. The stored `X` must match
/// `W Hᵀ + N` to rounding; it is returned as stored.
pub fn load_bundle(dir: &Path) -> Result<Instance> {
    let meta: BundleMeta = read_json(&part(dir, "meta.json"))?;
    let x = read_matrix_csv(&part(dir, "X.csv"))?;
    let w = read_matrix_csv(&part(dir, "W.csv"))?;
    let h = read_matrix_csv(&part(dir, "H.csv"))?;
    let n = read_matrix_csv(&part(dir, "N.csv"))?;
    let bad = |reason: String| Error::Malformed { path: dir.display().to_string(), reason };
    if x.shape() != (meta.m, meta.n) || w.shape() != (meta.m, meta.r) || h.shape() != (meta.n, meta.r) {
        return Err(bad(format!("matrix shapes disagree with meta.json (m = {}, n = {}, r = {})", meta.m, meta.n, meta.r)));
    }
    let level = PsscLevel::extended(meta.r, meta.p)?;
    let gen_meta = meta.gen_meta.clone().unwrap_or(GenMeta { w_profile: None, h: None, noise_mode: meta.modes.noise, certified_p: meta.certified_p });
    let mut inst = assemble(w, h, n, level, meta.eps, meta.seed, gen_meta)?;
    let scale = crate::norms::frobenius(&x).max(f64::MIN_POSITIVE);
    let drift = crate::norms::frobenius(&(&x - &inst.x));
    if drift > 1e-12 * scale {
        return Err(bad(format!("X differs from W Hᵀ + N by {drift:e}")));
    }
    inst.x = x;
    Ok(inst)
}

/// Loads the data matrix of a bundle, or a bare CSV file.
pub fn load_data_matrix(path: &Path) -> Result<Mat> {
    if path.is_dir() {
        read_matrix_csv(&part(path, "X.csv"))
    } else {
        read_matrix_csv(path)
    }
}
