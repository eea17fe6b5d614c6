//! Problem-bundle directory format: signal.csv, b.csv, mask.csv, and either
//! ensemble.csv (dense rows) or ensemble_hadamard.csv (block count plus sign
//! diagonals).

use std::fmt::Write as _;
use std::path::Path;

use phaselin::sensing::MeasurementEnsemble;

pub struct Bundle {
    pub ensemble: MeasurementEnsemble,
    pub b: Vec<f64>,
    pub mask: Vec<bool>,
    pub signal: Option<Vec<f64>>,
}

fn write_column(path: &Path, values: impl Iterator<Item = String>) -> Result<(), String> {
    let mut out = String::new();
    for v in values {
        out.push_str(&v);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| format!("writing {}: {e}", path.display()))
}

pub fn write_bundle(
    dir: &Path,
    ensemble: &MeasurementEnsemble,
    b: &[f64],
    mask: &[bool],
    signal: &[f64],
) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    write_column(&dir.join("signal.csv"), signal.iter().map(|v| v.to_string()))?;
    write_column(&dir.join("b.csv"), b.iter().map(|v| v.to_string()))?;
    write_column(&dir.join("mask.csv"), mask.iter().map(|v| v.to_string()))?;
    match ensemble {
        MeasurementEnsemble::Dense { m, n, rows } => {
            let mut out = String::new();
            for i in 0..*m {
                let row = &rows[i * n..(i + 1) * n];
                for (j, v) in row.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{v}");
                }
                out.push('\n');
            }
            std::fs::write(dir.join("ensemble.csv"), out)
                .map_err(|e| format!("writing ensemble.csv: {e}"))?;
        }
        MeasurementEnsemble::HadamardStack {
            n,
            k,
            sign_diagonals,
        } => {
            let mut out = format!("k={k} n={n}\n");
            for diag in sign_diagonals {
                for (j, v) in diag.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{}", *v as i64);
                }
                out.push('\n');
            }
            std::fs::write(dir.join("ensemble_hadamard.csv"), out)
                .map_err(|e| format!("writing ensemble_hadamard.csv: {e}"))?;
        }
    }
    Ok(())
}

fn read_column<T: std::str::FromStr>(path: &Path, what: &str) -> Result<Vec<T>, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.push(line.parse::<T>().map_err(|_| {
            format!("{}: line {} is not a valid {what}: '{line}'", path.display(), i + 1)
        })?);
    }
    Ok(out)
}

fn read_dense_ensemble(path: &Path) -> Result<MeasurementEnsemble, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let mut rows = Vec::new();
    let mut n = 0usize;
    let mut m = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("ensemble.csv line {}: bad number '{v}'", i + 1))
            })
            .collect::<Result<_, _>>()?;
        if m == 0 {
            n = row.len();
        } else if row.len() != n {
            return Err(format!(
                "ensemble.csv line {}: expected {n} entries, found {}",
                i + 1,
                row.len()
            ));
        }
        rows.extend_from_slice(&row);
        m += 1;
    }
    if m == 0 {
        return Err("ensemble.csv is empty".into());
    }
    Ok(MeasurementEnsemble::Dense { m, n, rows })
}

fn read_hadamard_ensemble(path: &Path) -> Result<MeasurementEnsemble, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or("ensemble_hadamard.csv is empty")?;
    let mut k = None;
    let mut n = None;
    for part in header.split_whitespace() {
        if let Some(v) = part.strip_prefix("k=") {
            k = v.parse::<usize>().ok();
        } else if let Some(v) = part.strip_prefix("n=") {
            n = v.parse::<usize>().ok();
        }
    }
    let (k, n) = match (k, n) {
        (Some(k), Some(n)) => (k, n),
        _ => {
            return Err(format!(
                "ensemble_hadamard.csv: header must be 'k=<int> n=<int>', got '{header}'"
            ))
        }
    };
    let mut sign_diagonals: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut diag = Vec::with_capacity(n);
        for v in line.split(',') {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| format!("ensemble_hadamard.csv line {}: bad entry '{v}'", i + 2))?;
            if x != 1.0 && x != -1.0 {
                return Err(format!(
                    "ensemble_hadamard.csv line {}: diagonal entries must be +/-1, got {x}",
                    i + 2
                ));
            }
            diag.push(x);
        }
        if diag.len() != n {
            return Err(format!(
                "ensemble_hadamard.csv line {}: expected {n} entries, found {}",
                i + 2,
                diag.len()
            ));
        }
        sign_diagonals.push(diag);
    }
    if sign_diagonals.len() != k {
        return Err(format!(
            "ensemble_hadamard.csv: expected {k} diagonal lines, found {}",
            sign_diagonals.len()
        ));
    }
    if !n.is_power_of_two() {
        return Err("n must be a power of two".into());
    }
    Ok(MeasurementEnsemble::HadamardStack {
        n,
        k,
        sign_diagonals,
    })
}

pub fn read_bundle(dir: &Path) -> Result<Bundle, String> {
    let dense = dir.join("ensemble.csv");
    let hadamard = dir.join("ensemble_hadamard.csv");
    let ensemble = if dense.exists() {
        read_dense_ensemble(&dense)?
    } else if hadamard.exists() {
        read_hadamard_ensemble(&hadamard)?
    } else {
        return Err(format!(
            "no ensemble.csv or ensemble_hadamard.csv in {}",
            dir.display()
        ));
    };

    let b: Vec<f64> = read_column(&dir.join("b.csv"), "number")?;
    if b.len() != ensemble.m() {
        return Err(format!(
            "inconsistent dims: b.csv has {} entries but the ensemble has {} rows",
            b.len(),
            ensemble.m()
        ));
    }

    let mask_path = dir.join("mask.csv");
    let mask: Vec<bool> = if mask_path.exists() {
        let mask = read_column(&mask_path, "boolean")?;
        if mask.len() != ensemble.m() {
            return Err(format!(
                "inconsistent dims: mask.csv has {} entries but the ensemble has {} rows",
                mask.len(),
                ensemble.m()
            ));
        }
        mask
    } else {
        vec![false; ensemble.m()]
    };

    let signal_path = dir.join("signal.csv");
    let signal = if signal_path.exists() {
        let s: Vec<f64> = read_column(&signal_path, "number")?;
        if s.len() != ensemble.n() {
            return Err(format!(
                "inconsistent dims: signal.csv has {} entries but the ensemble has {} columns",
                s.len(),
                ensemble.n()
            ));
        }
        Some(s)
    } else {
        None
    };

    Ok(Bundle {
        ensemble,
        b,
        mask,
        signal,
    })
}
