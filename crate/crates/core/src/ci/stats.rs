use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use super::{ColumnKind, Dataset};
use crate::error::{Error, Result};

/// Partial correlations this close to ±1 are treated as exact dependence.
const PERFECT_CORR: f64 = 1.0 - 1e-12;

fn check_query(data: &Dataset, x: usize, y: usize, cond: Option<usize>) -> Result<()> {
    let d = data.n_vars();
    let mut nodes = vec![x, y];
    nodes.extend(cond);
    for (i, &a) in nodes.iter().enumerate() {
        if a >= d {
            return Err(Error::domain(format!("variable {a} out of range for {d} columns")));
        }
        if nodes[..i].contains(&a) {
            return Err(Error::domain(format!("query variables {nodes:?} are not distinct")));
        }
    }
    Ok(())
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        let (du, dv) = (u - ma, v - mb);
        sab += du * dv;
        saa += du * du;
        sbb += dv * dv;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Fisher-z test of zero (partial) correlation between columns `x` and `y`,
/// optionally given column `cond`. Two-sided p-value.
pub fn fisher_z(data: &Dataset, x: usize, y: usize, cond: Option<usize>) -> Result<f64> {
    check_query(data, x, y, cond)?;
    let (x, y) = (x.max(y), x.min(y));
    let n = data.n_samples();
    let k = cond.map_or(0, |_| 1);
    if n <= k + 3 {
        return Err(Error::DegenerateData(format!("Fisher-z needs more than {} samples, got {n}", k + 3)));
    }
    let corr = |a: usize, b: usize| {
        pearson(data.column(a), data.column(b))
            .ok_or_else(|| Error::DegenerateData(format!("column {a} or {b} is constant")))
    };
    let rxy = corr(x, y)?;
    let rho = match cond {
        None => rxy,
        Some(z) => {
            let (rxz, ryz) = (corr(x, z)?, corr(y, z)?);
            let denom = (1.0 - rxz * rxz) * (1.0 - ryz * ryz);
            if denom <= 0.0 {
                return Err(Error::DegenerateData(format!("correlation matrix of columns ({x},{y},{z}) is singular")));
            }
            ((rxy - rxz * ryz) / denom.sqrt()).clamp(-1.0, 1.0)
        }
    };
    if rho.abs() >= PERFECT_CORR {
        return Ok(0.0);
    }
    let z = 0.5 * ((n - k - 3) as f64).sqrt() * ((1.0 + rho) / (1.0 - rho)).ln();
    Ok(erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0))
}

fn levels(data: &Dataset, i: usize) -> Result<usize> {
    match data.kind(i) {
        ColumnKind::Categorical { levels } => Ok(levels),
        ColumnKind::Continuous => Err(Error::Config(format!(
            "chi-square test needs categorical columns but column {} ({}) is continuous",
            i,
            data.names()[i]
        ))),
    }
}

/// Pearson chi-square test of independence between categorical columns `x`
/// and `y`, stratified on `cond` when given.
///
/// Each stratum contributes its own Pearson statistic over the rows and
/// columns it actually observes, with `(r - 1)(c - 1)` degrees of freedom;
/// strata observing fewer than two levels of either variable contribute
/// nothing. With zero pooled degrees of freedom the p-value is 1.
pub fn chi_square(data: &Dataset, x: usize, y: usize, cond: Option<usize>) -> Result<f64> {
    check_query(data, x, y, cond)?;
    let (x, y) = (x.max(y), x.min(y));
    let (kx, ky) = (levels(data, x)?, levels(data, y)?);
    let kz = cond.map(|z| levels(data, z)).transpose()?.unwrap_or(1);

    let mut counts = vec![0u64; kz * kx * ky];
    let (cx, cy) = (data.column(x), data.column(y));
    let cz = cond.map(|z| data.column(z));
    for i in 0..data.n_samples() {
        let s = cz.map_or(0, |c| c[i] as usize);
        counts[(s * kx + cx[i] as usize) * ky + cy[i] as usize] += 1;
    }

    let mut stat = 0.0;
    let mut df = 0usize;
    for s in 0..kz {
        let table = &counts[s * kx * ky..(s + 1) * kx * ky];
        let rows: Vec<u64> = (0..kx).map(|a| (0..ky).map(|b| table[a * ky + b]).sum()).collect();
        let cols: Vec<u64> = (0..ky).map(|b| (0..kx).map(|a| table[a * ky + b]).sum()).collect();
        let r = rows.iter().filter(|&&c| c > 0).count();
        let c = cols.iter().filter(|&&c| c > 0).count();
        if r < 2 || c < 2 {
            continue;
        }
        let total: u64 = rows.iter().sum();
        for a in (0..kx).filter(|&a| rows[a] > 0) {
            for b in (0..ky).filter(|&b| cols[b] > 0) {
                let expected = rows[a] as f64 * cols[b] as f64 / total as f64;
                let diff = table[a * ky + b] as f64 - expected;
                stat += diff * diff / expected;
            }
        }
        df += (r - 1) * (c - 1);
    }
    if df == 0 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    Ok(dist.sf(stat).clamp(0.0, 1.0))
}
