//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

/// Every accepted key with its default.
const DEFAULTS: &[(&str, &str)] = &[
    ("alpha", "0.5"),
    ("T", "1"),
    ("m", "8"),
    ("N", "256"),
    ("grading", "auto"),
    ("boundary", "constant"),
    ("b", "1"),
    ("v", "1"),
    ("c", "1"),
    ("beta", "0.5"),
    ("table", ""),
    ("f", "zero"),
    ("h", "zero"),
    ("u0", "parabola"),
    ("eps", "auto"),
    ("solver", "picard"),
    ("seed", "7"),
    ("tol", "1e-10"),
    ("max_iter", "50"),
    ("window", "0.125"),
    ("field_nx", "33"),
    ("field_nt", "33"),
    ("ladder", "64:8,128:8,256:8,512:8"),
    ("suite", "all"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Constant { b: f64 },
    Affine { b: f64, v: f64 },
    Power { b: f64, c: f64, beta: f64 },
    /// Two-column `t,s` CSV.
    Table { path: PathBuf },
}

/// A named probe or a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Named(String),
    Csv(PathBuf),
}

impl DataSpec {
    pub fn is_named(&self, name: &str) -> bool {
        matches!(self, DataSpec::Named(n) if n == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Picard,
    L1,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    base_dir: PathBuf,
    pub alpha: f64,
    pub horizon: f64,
    pub modes: usize,
    pub n: usize,
    pub grading: Option<f64>,
    pub boundary: BoundarySpec,
    pub f: DataSpec,
    pub h: DataSpec,
    pub u0: DataSpec,
    pub eps: Option<f64>,
    pub solver: SolverChoice,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub window: f64,
    pub field_nx: usize,
    pub field_nt: usize,
    pub ladder: Vec<(usize, usize)>,
    pub suite: String,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn parse_lines(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key=value, got '{line}'", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the file (if any), then `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut base_dir = PathBuf::from(".");
        if let Some(p) = path {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config '{}': {e}", p.display())))?;
            for (k, v) in parse_lines(&text, &p.display().to_string())? {
                Self::set(&mut entries, k, v)?;
            }
            if let Some(dir) = p.parent() {
                base_dir = dir.to_path_buf();
            }
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{o}'")))?;
            Self::set(&mut entries, k.trim().to_string(), v.trim().to_string())?;
        }
        Self::from_entries(entries, base_dir)
    }

    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in parse_lines(text, "<config>")? {
            Self::set(&mut entries, k, v)?;
        }
        Self::from_entries(entries, base_dir.to_path_buf())
    }

    fn set(entries: &mut BTreeMap<String, String>, k: String, v: String) -> Result<(), CliError> {
        if !DEFAULTS.iter().any(|(d, _)| *d == k) {
            return Err(CliError::Config(format!("unknown key '{k}'")));
        }
        entries.insert(k, v);
        Ok(())
    }

    /// Same configuration with one key replaced.
    pub fn with(&self, key: &str, value: impl ToString) -> Result<Self, CliError> {
        let mut entries = self.entries.clone();
        Self::set(&mut entries, key.to_string(), value.to_string())?;
        Self::from_entries(entries, self.base_dir.clone())
    }

    fn get(entries: &BTreeMap<String, String>, key: &str) -> String {
        entries[key].clone()
    }

    fn from_entries(entries: BTreeMap<String, String>, base_dir: PathBuf) -> Result<Self, CliError> {
        let num = |key: &str| -> Result<f64, CliError> {
            let v = Self::get(&entries, key);
            let x: f64 = v.parse().map_err(|_| bad(key, format!("not a number: '{v}'")))?;
            if !x.is_finite() {
                return Err(bad(key, "must be finite"));
            }
            Ok(x)
        };
        let int = |key: &str| -> Result<usize, CliError> {
            let v = Self::get(&entries, key);
            v.parse().map_err(|_| bad(key, format!("not a non-negative integer: '{v}'")))
        };
        let auto = |key: &str| -> Result<Option<f64>, CliError> {
            if Self::get(&entries, key) == "auto" {
                Ok(None)
            } else {
                num(key).map(Some)
            }
        };
        let file = |key: &str, v: &str| -> Result<PathBuf, CliError> {
            let p = base_dir.join(v);
            if !p.is_file() {
                return Err(bad(key, format!("file '{}' not found", p.display())));
            }
            Ok(p)
        };
        let data = |key: &str| -> Result<DataSpec, CliError> {
            let v = Self::get(&entries, key);
            if v.ends_with(".csv") {
                Ok(DataSpec::Csv(file(key, &v)?))
            } else if v.is_empty() {
                Err(bad(key, "empty value"))
            } else {
                Ok(DataSpec::Named(v))
            }
        };

        let alpha = num("alpha")?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(bad("alpha", format!("must lie in (0,1), got {alpha}")));
        }
        let horizon = num("T")?;
        if horizon <= 0.0 {
            return Err(bad("T", "must be positive"));
        }
        let n = int("N")?;
        if n < 8 {
            return Err(bad("N", format!("needs at least 8 steps, got {n}")));
        }
        let b = num("b")?;
        let boundary = match Self::get(&entries, "boundary").as_str() {
            "constant" => BoundarySpec::Constant { b },
            "affine" => BoundarySpec::Affine { b, v: num("v")? },
            "power" => BoundarySpec::Power { b, c: num("c")?, beta: num("beta")? },
            "table" => {
                let t = Self::get(&entries, "table");
                if t.is_empty() {
                    return Err(bad("table", "boundary=table needs table=PATH"));
                }
                BoundarySpec::Table { path: file("table", &t)? }
            }
            other => return Err(bad("boundary", format!("unknown family '{other}' (constant|affine|power|table)"))),
        };
        let solver = match Self::get(&entries, "solver").as_str() {
            "picard" => SolverChoice::Picard,
            "l1" => SolverChoice::L1,
            "both" => SolverChoice::Both,
            other => return Err(bad("solver", format!("unknown solver '{other}' (picard|l1|both)"))),
        };
        let eps = auto("eps")?;
        if eps.is_some_and(|e| e <= 0.0) {
            return Err(bad("eps", "must be positive"));
        }
        let grading = auto("grading")?;
        if grading.is_some_and(|r| r < 1.0) {
            return Err(bad("grading", "must be at least 1"));
        }
        let seed = Self::get(&entries, "seed");
        let seed = seed.parse().map_err(|_| bad("seed", format!("not an unsigned integer: '{seed}'")))?;
        let mut ladder = Vec::new();
        for item in Self::get(&entries, "ladder").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (ns, ms) = item.split_once(':').ok_or_else(|| bad("ladder", format!("expected N:m, got '{item}'")))?;
            let pair: (usize, usize) = match (ns.trim().parse(), ms.trim().parse()) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return Err(bad("ladder", format!("expected N:m, got '{item}'"))),
            };
            if pair.0 < 8 {
                return Err(bad("ladder", format!("N needs at least 8 steps in '{item}'")));
            }
            ladder.push(pair);
        }
        let suite = Self::get(&entries, "suite");
        if !["appendix", "q", "energy", "weak", "all"].contains(&suite.as_str()) {
            return Err(bad("suite", format!("unknown suite '{suite}' (appendix|q|energy|weak|all)")));
        }
        let window = num("window")?;
        if !(window > 0.0 && window <= 1.0) {
            return Err(bad("window", "must lie in (0,1]"));
        }
        let cfg = RunConfig {
            alpha,
            horizon,
            modes: int("m")?,
            n,
            grading,
            boundary,
            f: data("f")?,
            h: data("h")?,
            u0: data("u0")?,
            eps,
            solver,
            seed,
            tol: num("tol")?,
            max_iter: int("max_iter")?,
            window,
            field_nx: int("field_nx")?.max(2),
            field_nt: int("field_nt")?.max(2),
            ladder,
            suite,
            entries,
            base_dir,
        };
        Ok(cfg)
    }

    /// SHA-256 over the resolved `key=value` lines, sorted by key.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Mollification width; `1/m` unless set.
    pub fn eps_or_default(&self) -> f64 {
        self.eps.unwrap_or(1.0 / self.modes.max(1) as f64)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}
