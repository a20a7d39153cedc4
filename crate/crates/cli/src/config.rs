use std::path::Path;

use clap::Args;
use isoquant::optimize::ParamBounds;
use isoquant::quotients::QuotientSpec;
use isoquant::shapes::{Family, MaskParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Run configuration. Every field may come from a JSON file and be
/// overridden on the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<FamilyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    /// Parameter grid (sweep) or asymmetry grid (fit-coeffs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ParamBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fourier modes of the free-boundary search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    /// Symmetrized profile samples as CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, rename = "L", alias = "half_length", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskParams>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Parameter tolerance of the optimizers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Value-spread tolerance of the optimizers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    /// Grid resolution of the asymmetry solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<f64>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// JSON run configuration; flags override its entries.
    #[arg(long)]
    pub config: Option<String>,
    /// disk | oval | pk | biscuit | mask | ellipse (search also: free).
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Lower coefficients c_1,...,c_{m-1}, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub penalty_alpha: Option<f64>,
    /// Comma-separated values or `start:stop:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub svg: Option<String>,
    /// Optimizer trace as CSV.
    #[arg(long)]
    pub trace: Option<String>,
    /// Symmetrized profile samples as CSV.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub modes: Option<usize>,
    #[arg(long)]
    pub tol_x: Option<f64>,
    #[arg(long)]
    pub tol_f: Option<f64>,
    #[arg(long)]
    pub tol_grid: Option<f64>,
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("cannot parse grid `{text}`"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Config file (if any) with the flags applied on top.
    pub fn resolve(command: &str, flags: &Flags) -> Result<Self, CliError> {
        let mut c = match &flags.config {
            Some(p) => Self::load(Path::new(p))?,
            None => Self::default(),
        };
        if let Some(cmd) = &c.command {
            if cmd != command {
                return Err(CliError::Config(format!("config is for `{cmd}`, not `{command}`")));
            }
        }
        c.command = Some(command.to_string());
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = Some(v);
                }
            };
        }
        set!(c.family, flags.family);
        if flags.beta.is_some() || flags.l.is_some() || flags.k.is_some() || flags.a.is_some() {
            let p = c.params.get_or_insert_with(FamilyParams::default);
            set!(p.beta, flags.beta);
            set!(p.l, flags.l);
            set!(p.k, flags.k);
            set!(p.a, flags.a);
        }
        set!(c.m, flags.m);
        set!(c.coeffs, flags.coeffs);
        set!(c.alpha0, flags.alpha0);
        set!(c.penalty_alpha, flags.penalty_alpha);
        if let Some(g) = &flags.grid {
            c.grid = Some(parse_grid(g)?);
        }
        set!(c.out, flags.out);
        set!(c.svg, flags.svg);
        set!(c.trace, flags.trace);
        set!(c.profile, flags.profile);
        set!(c.seed, flags.seed);
        set!(c.seeds, flags.seeds);
        set!(c.budget, flags.budget);
        set!(c.modes, flags.modes);
        if flags.tol_x.is_some() || flags.tol_f.is_some() || flags.tol_grid.is_some() {
            let t = c.tolerances.get_or_insert_with(Tolerances::default);
            set!(t.x, flags.tol_x);
            set!(t.f, flags.tol_f);
            set!(t.grid, flags.tol_grid);
        }
        Ok(c)
    }

    /// SHA-256 of the resolved configuration's JSON.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn params(&self) -> FamilyParams {
        self.params.clone().unwrap_or_default()
    }

    pub fn family_name(&self) -> Result<&str, CliError> {
        self.family.as_deref().ok_or_else(|| CliError::Config("no family given".into()))
    }

    /// Shape family with every parameter filled in.
    pub fn shape_family(&self) -> Result<Family, CliError> {
        let p = self.params();
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Config(format!("family `{}` needs --{name}", self.family.as_deref().unwrap_or(""))))
        };
        Ok(match self.family_name()? {
            "disk" => Family::Disk,
            "oval" => Family::Oval {
                beta: need(p.beta, "beta")?,
            },
            "pk" => Family::Pk {
                k: p.k.ok_or_else(|| CliError::Config("family `pk` needs --k".into()))?,
                beta: need(p.beta, "beta")?,
            },
            "biscuit" => Family::Biscuit {
                half_length: need(p.l, "L")?,
            },
            "ellipse" => Family::Ellipse { a: need(p.a, "a")? },
            "mask" => Family::Mask(
                p.mask
                    .ok_or_else(|| CliError::Config("family `mask` needs params.mask in the config".into()))?,
            ),
            other => return Err(CliError::Config(format!("unknown family `{other}`"))),
        })
    }

    /// Family with its swept scalar parameter set to `v`.
    pub fn family_at(&self, v: f64) -> Result<Family, CliError> {
        let mut c = self.clone();
        let p = c.params.get_or_insert_with(FamilyParams::default);
        match self.family_name()? {
            "oval" | "pk" => p.beta = Some(v),
            "biscuit" => p.l = Some(v),
            "ellipse" => p.a = Some(v),
            other => return Err(CliError::Config(format!("family `{other}` has no scalar parameter to sweep"))),
        }
        c.shape_family()
    }

    /// Quotient spec if an order is given.
    pub fn spec(&self) -> Result<Option<QuotientSpec>, CliError> {
        let Some(m) = self.m else {
            if self.coeffs.is_some() || self.penalty_alpha.is_some() {
                return Err(CliError::Config("--coeffs/--penalty-alpha need --m".into()));
            }
            return Ok(None);
        };
        let mut spec = match &self.coeffs {
            Some(c) => QuotientSpec::with_coeffs(m, c.clone()).map_err(|e| CliError::Config(e.to_string()))?,
            None => QuotientSpec::new(m),
        };
        spec.penalty_alpha = self.penalty_alpha;
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Some(spec))
    }

    pub fn tol(&self) -> Tolerances {
        self.tolerances.clone().unwrap_or_default()
    }
}

/// Scalar parameter of a family, if it has one.
pub fn family_parameter(f: &Family) -> Option<f64> {
    match *f {
        Family::Oval { beta } | Family::Pk { beta, .. } => Some(beta),
        Family::Biscuit { half_length } => Some(half_length),
        Family::Ellipse { a } => Some(a),
        Family::Disk | Family::Mask(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"family":"oval","colour":1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"params":{"beta":0.3,"gamma":1}}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"family":"biscuit","params":{"L":1.0}}"#).unwrap();
        assert_eq!(c.shape_family().unwrap(), Family::Biscuit { half_length: 1.0 });
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"family":"oval","params":{"beta":0.3},"m":2}"#).unwrap();
        let flags = Flags {
            config: Some(p.display().to_string()),
            beta: Some(0.5),
            ..Flags::default()
        };
        let c = RunConfig::resolve("eval", &flags).unwrap();
        assert_eq!(c.shape_family().unwrap(), Family::Oval { beta: 0.5 });
        assert_eq!(c.m, Some(2));
        assert!(RunConfig::resolve("search", &Flags { config: flags.config.clone(), ..Flags::default() }).is_ok());
        std::fs::write(&p, r#"{"command":"sweep"}"#).unwrap();
        assert!(RunConfig::resolve("eval", &flags).is_err());
    }
}
