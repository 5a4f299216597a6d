//! Tables of the reduced risk `R(μ, r)` over a grid, where `μ = ⟨β, a⟩` and `r = ‖β‖`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::risk::{population_risk, risk_point, RiskPoint};

/// Parses `start:stop:count` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Config(vec!["grid is empty".into()]));
    }
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Config(vec![format!("not a number: {s:?}")]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(vec![format!("grid value must be finite: {s:?}")]))
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(num).collect(),
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::Config(vec![format!("grid count must be an integer: {n:?}")]))?;
            match n {
                0 => Err(Error::Config(vec!["grid is empty".into()])),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(Error::Config(vec![format!(
            "expected start:stop:count or a list, got {text:?}"
        )])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeRow {
    pub point: RiskPoint,
    /// `R(μ, r) − R(R‖a‖, R)`.
    pub excess: f64,
    /// Whether some `β` with `‖β‖ ≤ R` realises `(μ, r)`: `r ≤ R` and `|μ| ≤ r‖a‖`.
    pub feasible: bool,
}

pub fn landscape(a_norm: f64, radius: f64, mu_grid: &[f64], r_grid: &[f64]) -> Result<Vec<LandscapeRow>> {
    let mut errs = Vec::new();
    if mu_grid.is_empty() {
        errs.push("mu grid is empty".to_string());
    }
    if r_grid.is_empty() {
        errs.push("r grid is empty".to_string());
    }
    if r_grid.iter().any(|&r| r <= 0.0) {
        errs.push("r grid values must be positive".to_string());
    }
    if !(a_norm > 0.0 && a_norm.is_finite()) {
        errs.push(format!("a-norm must be positive, got {a_norm}"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        errs.push(format!("R must be positive, got {radius}"));
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let quad = QuadratureRule::default();
    let best = population_risk(radius * a_norm, radius, &quad)?;
    let cells: Vec<(f64, f64)> = mu_grid
        .iter()
        .flat_map(|&mu| r_grid.iter().map(move |&r| (mu, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(mu, r)| {
            let point = risk_point(mu, r, &quad)?;
            Ok(LandscapeRow {
                point,
                excess: point.value - best,
                feasible: r <= radius && mu.abs() <= r * a_norm,
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "mu,r,risk,d_mu,d_r,excess,feasible";

pub fn to_csv(rows: &[LandscapeRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let p = &row.point;
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{}",
            p.mu, p.r, p.value, p.d_mu, p.d_r, row.excess, row.feasible
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("1, 2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
        assert_eq!(parse_grid("2:9:1").unwrap(), vec![2.0]);
        for bad in ["", "  ", "0:1:0", "a,b", "0:1", "0:1:2:3", "1,inf"] {
            assert!(parse_grid(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn symmetric_and_flat_at_zero() {
        let rows = landscape(2.5, 1.27, &[-1.0, 0.0, 1.0], &[0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 6);
        for r in rows.iter().filter(|r| r.point.mu == 0.0) {
            assert!(r.point.d_mu.abs() < 1e-15);
        }
        for k in 0..2 {
            let (lo, hi) = (&rows[k], &rows[4 + k]);
            assert!((lo.point.value - hi.point.value).abs() < 1e-12);
            assert!((lo.point.d_r - hi.point.d_r).abs() < 1e-12);
            assert!((lo.point.d_mu + hi.point.d_mu).abs() < 1e-12);
        }
        assert!(rows.iter().all(|r| r.excess >= -1e-12 || !r.feasible));
    }

    #[test]
    fn empty_grids_are_rejected() {
        match landscape(2.0, 1.0, &[], &[]).unwrap_err() {
            Error::Config(list) => assert_eq!(list.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
