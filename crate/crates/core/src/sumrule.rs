//! Both sides of the matrix Gross-Witten sum rule.
//!
//! Spectral side: `int (1 - g cos) log det w d lambda_0`. Coefficient side:
//! `sum_k log det(1 - alpha_k alpha_k†) - g T(alpha)` with
//! `T = Re tr(alpha_0 - sum_k alpha_k alpha_{k+1}†)`. For finitely supported
//! coefficients both sides are exactly computable, which is what every check
//! here relies on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{logdet_defect, logdet_remainder, trace, CMatrix};
use crate::measure::{entropy_k, entropy_reference, lhs_integral, MatrixMeasure, ReferenceWeight};
use crate::opuc::{bernstein_szego_measure, verblunsky_from_measure, VerblunskySequence};
use crate::summation::{compensated_sum, NeumaierSum};

/// Agreement required between the two forms of `T`.
pub const T_FORMS_TOL: f64 = 1e-10;

fn tr_aat(a: &CMatrix) -> f64 {
    trace(&(a * a.adjoint())).re
}

/// `T = Re tr(alpha_0 - sum_k alpha_k alpha_{k+1}†)`.
pub fn rhs_t(alpha: &VerblunskySequence) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.add(trace(&alpha.get(0)).re);
    for k in 0..alpha.len() {
        acc.add(-trace(&(alpha.get(k) * alpha.get(k + 1).adjoint())).re);
    }
    acc.value()
}

/// `Re tr alpha_0 + tr(alpha_0 alpha_0†)/2 + sum_k tr |alpha_k - alpha_{k+1}|^2 / 2
/// - sum_k tr alpha_k alpha_k†`, equal to [`rhs_t`] for finite sequences.
pub fn rhs_t_alt(alpha: &VerblunskySequence) -> f64 {
    let a0 = alpha.get(0);
    let mut acc = NeumaierSum::new();
    acc.add(trace(&a0).re);
    acc.add(0.5 * tr_aat(&a0));
    for k in 0..alpha.len() {
        acc.add(0.5 * tr_aat(&(alpha.get(k) - alpha.get(k + 1))));
        acc.add(-tr_aat(&alpha.get(k)));
    }
    acc.value()
}

/// `sum_k log det(1 - alpha_k alpha_k†)`.
pub fn logdet_sum(alpha: &VerblunskySequence) -> Result<f64> {
    let terms = alpha.coeffs().iter().map(logdet_defect).collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

fn check_g(g: f64) -> Result<ReferenceWeight> {
    ReferenceWeight::new(g)
}

/// `sum_k log det(1 - alpha_k alpha_k†) - g T(alpha)`.
pub fn rhs_sumrule(alpha: &VerblunskySequence, g: f64) -> Result<f64> {
    check_g(g)?;
    Ok(logdet_sum(alpha)? - g * rhs_t(alpha))
}

/// `int (1 - g cos theta) log det w d lambda_0` over the absolutely
/// continuous part; `-inf` when too many samples are singular.
pub fn lhs_sumrule(mu: &MatrixMeasure, g: f64) -> Result<f64> {
    Ok(lhs_integral(check_g(g)?, mu))
}

/// Which gem series controls finiteness for a given `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoverningSeries {
    /// `sum tr alpha_k alpha_k†`, for `|g| < 1`.
    Quadratic,
    /// `sum tr (alpha_k alpha_k†)^2 + sum tr |alpha_{k+1} - alpha_k|^2`, for `g = 1`.
    QuarticDifference,
    /// `sum tr (alpha_k alpha_k†)^2 + sum tr |alpha_{k+1} + alpha_k|^2`, for `g = -1`.
    QuarticSum,
}

impl GoverningSeries {
    pub fn for_g(g: f64) -> Self {
        if g >= 1.0 {
            Self::QuarticDifference
        } else if g <= -1.0 {
            Self::QuarticSum
        } else {
            Self::Quadratic
        }
    }

    fn pick(self, row: &GemRow) -> f64 {
        match self {
            Self::Quadratic => row.sum_i,
            Self::QuarticDifference => row.sum_ii,
            Self::QuarticSum => row.sum_iii,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GemRow {
    pub k: usize,
    pub sum_i: f64,
    pub sum_ii: f64,
    pub sum_iii: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GemDiagnostics {
    pub governing: GoverningSeries,
    pub rows: Vec<GemRow>,
    /// `(S_n - S_{n/2}) / (n/2)` for the governing series; near zero for a
    /// convergent series.
    pub growth: f64,
    /// Geometric tail estimate from the ratio of the last two governing
    /// terms; `None` when the terms are not decreasing.
    pub tail_estimate: Option<f64>,
}

impl GemDiagnostics {
    pub fn last(&self) -> GemRow {
        self.rows.last().copied().unwrap_or(GemRow { k: 0, sum_i: 0.0, sum_ii: 0.0, sum_iii: 0.0 })
    }
}

/// Partial sums of the three gem series over `k < rows`; coefficients past
/// the end of `alpha` are zero. The entries need not be contractions.
pub fn gem_series(alpha: &[CMatrix], g: f64, rows: usize) -> GemDiagnostics {
    let governing = GoverningSeries::for_g(g);
    let p = alpha.first().map_or(1, |a| a.nrows());
    let zero = CMatrix::zeros(p, p);
    let get = |k: usize| alpha.get(k).unwrap_or(&zero);
    let mut s = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    let mut out = Vec::with_capacity(rows);
    let mut terms = Vec::with_capacity(rows);
    for k in 0..rows {
        let (a, next) = (get(k), get(k + 1));
        let aa = a * a.adjoint();
        let quartic = trace(&(&aa * &aa)).re;
        let t = [trace(&aa).re, quartic + tr_aat(&(next - a)), quartic + tr_aat(&(next + a))];
        for (acc, x) in s.iter_mut().zip(t) {
            acc.add(x);
        }
        let row = GemRow { k, sum_i: s[0].value(), sum_ii: s[1].value(), sum_iii: s[2].value() };
        terms.push(match governing {
            GoverningSeries::Quadratic => t[0],
            GoverningSeries::QuarticDifference => t[1],
            GoverningSeries::QuarticSum => t[2],
        });
        out.push(row);
    }
    let growth = if rows >= 2 {
        let half = rows / 2;
        (governing.pick(&out[rows - 1]) - governing.pick(&out[half - 1])) / (rows - half) as f64
    } else {
        0.0
    };
    let tail_estimate = match terms.as_slice() {
        [.., prev, last] if *last == 0.0 => Some(0.0).filter(|_| *prev >= 0.0),
        [.., prev, last] if *prev > 0.0 && last / prev < 1.0 => {
            let q = last / prev;
            Some(last * q / (1.0 - q))
        }
        _ => None,
    };
    GemDiagnostics { governing, rows: out, growth, tail_estimate }
}

/// Gem series over the support of `alpha`.
pub fn gem_diagnostics(alpha: &VerblunskySequence, g: f64) -> GemDiagnostics {
    gem_series(alpha.coeffs(), g, alpha.len())
}

/// Reduces `g < 0` to `g > 0` by rotating the measure by `pi`.
pub fn flip_reduce(alpha: &VerblunskySequence, g: f64) -> (VerblunskySequence, f64) {
    if g >= 0.0 {
        (alpha.clone(), g)
    } else {
        (alpha.flipped(), -g)
    }
}

/// `A_k = -log det(1 - a a†) - g tr a a† + (g/2) tr |b - a|^2` for
/// `a = alpha_k`, `b = alpha_{k+1}`.
pub fn a_k_term(a: &CMatrix, next: &CMatrix, g: f64) -> Result<f64> {
    Ok(-logdet_defect(a)? - g * tr_aat(a) + 0.5 * g * tr_aat(&(next - a)))
}

/// Lower bound `(1 - g) tr a a† + tr (a a†)^2 / 2 + (g/2) tr |b - a|^2` for
/// [`a_k_term`]; the gap equals the log-det remainder of `a`.
pub fn a_k_lower_bound(a: &CMatrix, next: &CMatrix, g: f64) -> f64 {
    let aa = a * a.adjoint();
    (1.0 - g) * trace(&aa).re + 0.5 * trace(&(&aa * &aa)).re + 0.5 * g * tr_aat(&(next - a))
}

/// `A_k - lower bound`, computed without cancellation.
pub fn a_k_gap(a: &CMatrix) -> Result<f64> {
    logdet_remainder(a)
}

/// `log det(1 - alpha_0 alpha_0†) - g Re tr(alpha_0 - alpha_1 - alpha_1 alpha_0†)`.
pub fn step_rule_rhs(alpha: &VerblunskySequence, g: f64) -> Result<f64> {
    let a0 = alpha.get(0);
    let a1 = alpha.get(1);
    Ok(logdet_defect(&a0)? - g * trace(&(&a0 - &a1 - &a1 * a0.adjoint())).re)
}

/// `int log det(w w_1^{-1}) d lambda_g` for the Bernstein-Szego measures of
/// `alpha` and of `alpha` shifted by one, on an `m`-point grid.
pub fn step_rule_lhs(alpha: &VerblunskySequence, g: f64, m: usize) -> Result<f64> {
    let mu = bernstein_szego_measure(alpha, m)?;
    let mu1 = bernstein_szego_measure(&alpha.shifted(1), m)?;
    Ok(lhs_sumrule(&mu, g)? - lhs_sumrule(&mu1, g)?)
}

pub fn step_rule_residual(alpha: &VerblunskySequence, g: f64, m: usize) -> Result<f64> {
    if alpha.is_empty() {
        return Err(Error::BadConfig("step rule needs at least one coefficient".into()));
    }
    Ok((step_rule_lhs(alpha, g, m)? - step_rule_rhs(alpha, g)?).abs())
}

/// `G_N` three ways: accumulated step rules and the two closed forms as
/// commonly printed. The closed forms carry `-g Re tr(alpha_N - alpha_0)`,
/// while accumulation gives `+g Re tr(alpha_N - alpha_0)`; they differ by
/// exactly `2 g Re tr(alpha_N - alpha_0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IteratedG {
    pub n: usize,
    pub accumulated: f64,
    pub closed_form: f64,
    pub closed_form_a_k: f64,
    /// `2 g Re tr(alpha_N - alpha_0)`.
    pub predicted_gap: f64,
}

pub fn iterated_g(alpha: &VerblunskySequence, g: f64, n: usize) -> Result<IteratedG> {
    check_g(g)?;
    if n > alpha.len() {
        return Err(Error::BadConfig(format!("N = {n} exceeds sequence length {}", alpha.len())));
    }
    let mut acc = NeumaierSum::new();
    let mut cross = NeumaierSum::new();
    let mut logdets = NeumaierSum::new();
    let mut a_sum = NeumaierSum::new();
    for k in 0..n {
        let a = alpha.get(k);
        let b = alpha.get(k + 1);
        let ld = logdet_defect(&a)?;
        acc.add(ld - g * trace(&(&a - &b - &b * a.adjoint())).re);
        cross.add(trace(&(&a * b.adjoint())).re);
        logdets.add(ld);
        a_sum.add(a_k_term(&a, &b, g)?);
    }
    let a0 = alpha.get(0);
    let an = alpha.get(n);
    let edge = trace(&(&an - &a0)).re;
    let closed_form = -g * edge + g * cross.value() + logdets.value();
    let closed_form_a_k = -g * edge + 0.5 * g * (tr_aat(&an) - tr_aat(&a0)) - a_sum.value();
    Ok(IteratedG {
        n,
        accumulated: acc.value(),
        closed_form,
        closed_form_a_k,
        predicted_gap: 2.0 * g * edge,
    })
}

/// `int log det(w w_N^{-1}) d lambda_g` for Bernstein-Szego measures.
pub fn entropy_shift(alpha: &VerblunskySequence, g: f64, n: usize, m: usize) -> Result<f64> {
    let mu = bernstein_szego_measure(alpha, m)?;
    let mu_n = bernstein_szego_measure(&alpha.shifted(n), m)?;
    Ok(lhs_sumrule(&mu, g)? - lhs_sumrule(&mu_n, g)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    pub g: f64,
    pub p: usize,
    pub n_trunc: usize,
    pub grid_size: usize,
    pub lhs_integral: f64,
    pub rhs_series: f64,
    pub residual: f64,
    /// `K(Lambda_g | mu)` by quadrature.
    pub entropy_lhs: f64,
    /// `p K(lambda_g | lambda_0) - sum log det(1 - alpha alpha†) + g T`.
    pub entropy_rhs: f64,
    pub t_value: f64,
    pub t_alt_value: f64,
    pub gem: GemRow,
    pub governing: GoverningSeries,
    pub lhs_infinite: bool,
    pub clamped_samples: usize,
}

/// Column order of [`SumRuleReport::csv_row`].
pub const CSV_HEADER: &str = "# sumrule v1: g,p,N,lhs,rhs,residual,T,sum_i,sum_ii,sum_iii";

impl SumRuleReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.g,
            self.p,
            self.n_trunc,
            self.lhs_integral,
            self.rhs_series,
            self.residual,
            self.t_value,
            self.gem.sum_i,
            self.gem.sum_ii,
            self.gem.sum_iii
        )
    }
}

/// Report for a measure whose coefficients are `alpha` (already extracted or
/// given).
pub fn report_for(mu: &MatrixMeasure, alpha: &VerblunskySequence, g: f64) -> Result<SumRuleReport> {
    let w = check_g(g)?;
    let integral = mu.weighted_logdet(w);
    let lhs = lhs_sumrule(mu, g)?;
    let rhs = rhs_sumrule(alpha, g)?;
    let t_value = rhs_t(alpha);
    let gem = gem_diagnostics(alpha, g);
    let p = mu.dim();
    Ok(SumRuleReport {
        g,
        p,
        n_trunc: alpha.len(),
        grid_size: mu.grid_size(),
        lhs_integral: lhs,
        rhs_series: rhs,
        residual: (lhs - rhs).abs(),
        entropy_lhs: entropy_k(w, mu),
        entropy_rhs: p as f64 * entropy_reference(w) - logdet_sum(alpha)? + g * t_value,
        t_value,
        t_alt_value: rhs_t_alt(alpha),
        gem: gem.last(),
        governing: gem.governing,
        lhs_infinite: integral.infinite,
        clamped_samples: integral.clamped,
    })
}

/// Builds the Bernstein-Szego measure of `alpha` on `m` points and compares
/// both sides.
pub fn sumrule_report(alpha: &VerblunskySequence, g: f64, m: usize) -> Result<SumRuleReport> {
    let mu = bernstein_szego_measure(alpha, m)?;
    report_for(&mu, alpha, g)
}

/// Extracts up to `n` coefficients from `mu` and compares both sides.
pub fn sumrule_report_measure(mu: &MatrixMeasure, g: f64, n: usize) -> Result<SumRuleReport> {
    let alpha = verblunsky_from_measure(mu, n)?;
    report_for(mu, &alpha, g)
}
