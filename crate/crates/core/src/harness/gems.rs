use std::path::Path;

use super::RunConfig;
use crate::error::{Error, Result};
use crate::hermitian::{c, identity, CMatrix};
use crate::io::read_json;
use crate::opuc::VerblunskySequence;
use crate::sumrule::{gem_series, GemDiagnostics};

pub const GEMS_CSV_HEADER: &str = "# gems v1: k,sum_i,sum_ii,sum_iii";

/// Scalar-times-identity sequences for gem experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GemSource {
    /// `alpha_k = r^k`.
    Geometric(f64),
    /// `alpha_k = c / (k + 1)^s`.
    Power { c: f64, s: f64 },
    Constant(f64),
    Zero,
}

impl GemSource {
    /// Parses `geom:r`, `power:c:s`, `const:c` or `zero`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::BadConfig(format!("bad number {s:?} in generator {spec:?}")))
        };
        match parts.as_slice() {
            ["geom", r] => Ok(Self::Geometric(num(r)?)),
            ["power", c, s] => Ok(Self::Power { c: num(c)?, s: num(s)? }),
            ["const", c] => Ok(Self::Constant(num(c)?)),
            ["zero"] => Ok(Self::Zero),
            _ => Err(Error::BadConfig(format!("unknown generator {spec:?}"))),
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        match *self {
            Self::Geometric(r) => r.powi(k as i32),
            Self::Power { c, s } => c / ((k + 1) as f64).powf(s),
            Self::Constant(c) => c,
            Self::Zero => 0.0,
        }
    }

    pub fn terms(&self, p: usize, n: usize) -> Vec<CMatrix> {
        (0..n).map(|k| identity(p) * c(self.value(k), 0.0)).collect()
    }
}

/// Partial sums for a coefficient file or a generator spec. Generated
/// sequences get `trunc + 1` terms so the last difference term is not
/// truncated.
pub fn cmd_gems(source: &str, config: &RunConfig) -> Result<Vec<GemDiagnostics>> {
    config.validate()?;
    let (terms, rows) = if Path::new(source).exists() {
        let alpha: VerblunskySequence = read_json(Path::new(source))?;
        let n = alpha.len();
        (alpha.coeffs().to_vec(), n)
    } else {
        let gen = GemSource::parse(source)?;
        (gen.terms(config.dim, config.trunc + 1), config.trunc)
    };
    Ok(config.g_list.iter().map(|&g| gem_series(&terms, g, rows)).collect())
}

pub fn gems_csv(d: &GemDiagnostics) -> String {
    let mut out = String::from(GEMS_CSV_HEADER);
    out.push('\n');
    for r in &d.rows {
        out.push_str(&format!("{},{:e},{:e},{:e}\n", r.k, r.sum_i, r.sum_ii, r.sum_iii));
    }
    out
}
