use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use super::RunConfig;
use crate::error::{Error, Result};
use crate::measure::{parse_builtin, MatrixMeasure, MeasureFile};
use crate::opuc::{VerblunskyFile, VerblunskySequence};
use crate::sumrule::{sumrule_report, sumrule_report_measure, SumRuleReport, CSV_HEADER};

/// Either a coefficient sequence or a measure.
#[derive(Debug, Clone)]
pub enum SumRuleInput {
    Coefficients(VerblunskySequence),
    Measure(MatrixMeasure),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InputFile {
    Coefficients(VerblunskyFile),
    Measure(MeasureFile),
}

/// Reads `source` as a coefficient or measure JSON file, or, when no such
/// file exists, as a builtin measure name (`lambda0`, `lambda_g:<g>`) on the
/// configured grid and dimension.
pub fn load_input(source: &str, config: &RunConfig) -> Result<SumRuleInput> {
    let path = Path::new(source);
    if !path.exists() {
        if let Ok(w) = parse_builtin(source) {
            return Ok(SumRuleInput::Measure(MatrixMeasure::lambda_g(config.dim, w, config.grid_size)?));
        }
    }
    let text = std::fs::read_to_string(path)?;
    match serde_json::from_str::<InputFile>(&text)? {
        InputFile::Coefficients(f) => Ok(SumRuleInput::Coefficients(f.try_into()?)),
        InputFile::Measure(f) => Ok(SumRuleInput::Measure(f.into_measure(false)?)),
    }
}

/// One report per `g` in the configuration, computed in parallel.
pub fn cmd_sumrule(input: &SumRuleInput, config: &RunConfig) -> Result<Vec<SumRuleReport>> {
    config.validate()?;
    if let SumRuleInput::Coefficients(alpha) = input {
        if config.grid_size < 8 * alpha.len().max(1) {
            return Err(Error::BadConfig(format!(
                "grid size {} < 8 * {} coefficients",
                config.grid_size,
                alpha.len()
            )));
        }
    }
    config
        .g_list
        .par_iter()
        .map(|&g| match input {
            SumRuleInput::Coefficients(alpha) => sumrule_report(alpha, g, config.grid_size),
            SumRuleInput::Measure(mu) => sumrule_report_measure(mu, g, config.trunc),
        })
        .collect()
}

/// CSV rows, preceded by the header comment when `header` is set.
pub fn reports_csv(reports: &[SumRuleReport], header: bool) -> String {
    let mut out = String::new();
    if header {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::c;

    #[test]
    fn builtin_lambda0_has_zero_residual() {
        let cfg = RunConfig { grid_size: 512, ..Default::default() };
        let input = load_input("lambda0", &cfg).unwrap();
        for r in cmd_sumrule(&input, &cfg).unwrap() {
            assert!(r.residual < 1e-14, "{}", r.residual);
        }
    }

    #[test]
    fn scalar_report() {
        let cfg = RunConfig { g_list: vec![1.0], ..Default::default() };
        let alpha = VerblunskySequence::scalar(1, &[c(0.5, 0.0)]).unwrap();
        let r = &cmd_sumrule(&SumRuleInput::Coefficients(alpha), &cfg).unwrap()[0];
        assert!((r.lhs_integral + 0.787_682_072_451_780_9).abs() < 1e-8);
        assert!((r.rhs_series + 0.787_682_072_451_780_9).abs() < 1e-12);
        let csv = reports_csv(std::slice::from_ref(r), true);
        assert!(csv.starts_with('#'));
        assert_eq!(csv.lines().count(), 2);
    }
}
