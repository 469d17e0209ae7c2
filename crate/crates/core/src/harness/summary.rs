//! Per (point, algorithm) aggregates of result rows.

use std::collections::BTreeMap;

use super::experiment::{Algorithm, ExperimentSpec, ResultRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub point: usize,
    pub coords: Vec<f64>,
    /// Feasible rows.
    pub count: usize,
    pub infeasible: usize,
    /// `None` when no row of the group is feasible.
    pub mean: Option<f64>,
    /// Sample standard deviation, 0 for a single row.
    pub std: Option<f64>,
}

type Group = (Vec<f64>, Vec<f64>, usize);

/// Neumaier-compensated sum.
fn sum(xs: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0_f64, 0.0_f64);
    for &x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Groups rows by point, then by algorithm in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<Algorithm> = Vec::new();
    for r in rows {
        if !order.contains(&r.algorithm) {
            order.push(r.algorithm);
        }
    }
    // (point, algorithm) -> (coords, feasible values, infeasible count)
    let mut groups: BTreeMap<(usize, usize), Group> = BTreeMap::new();
    for r in rows {
        let a = order.iter().position(|&x| x == r.algorithm).unwrap_or(0);
        let g = groups.entry((r.point, a)).or_insert_with(|| (r.coords.clone(), Vec::new(), 0));
        match r.xi {
            Some(xi) => g.1.push(xi),
            None => g.2 += 1,
        }
    }
    Ok(groups
        .into_iter()
        .map(|((point, a), (coords, xs, infeasible))| {
            let n = xs.len();
            let mean = (n > 0).then(|| sum(&xs) / n as f64);
            let std = mean.map(|m| {
                if n < 2 {
                    0.0
                } else {
                    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
                    (sum(&dev) / (n - 1) as f64).sqrt()
                }
            });
            SummaryRow { algorithm: order[a], point, coords, count: n, infeasible, mean, std }
        })
        .collect())
}

pub fn summary_to_csv(spec: &ExperimentSpec, rows: &[SummaryRow]) -> String {
    let mut out = String::from("experiment,algorithm");
    for a in &spec.axes {
        out.push(',');
        out.push_str(&a.name);
    }
    out.push_str(",point,mean_xi_joules,std_xi_joules,n,infeasible\n");
    let f = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
    for r in rows {
        let mut cols = vec![spec.id.name().to_string(), r.algorithm.tag().to_string()];
        cols.extend(r.coords.iter().map(|c| format!("{c:?}")));
        cols.extend([r.point.to_string(), f(r.mean), f(r.std), r.count.to_string(), r.infeasible.to_string()]);
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;
    use crate::harness::experiment::ExperimentId;

    fn row(point: usize, algorithm: Algorithm, xi: Option<f64>) -> ResultRow {
        ResultRow {
            experiment: ExperimentId::Custom,
            algorithm,
            point,
            coords: vec![point as f64],
            trial: 0,
            seed: 0,
            xi,
            wallclock_s: None,
            trace_file: None,
            trace: None,
            error: None,
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(summarize(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn single_and_equal_rows() {
        let s = summarize(&[row(0, Algorithm::Proposed, Some(0.7))]).unwrap();
        assert_eq!((s[0].mean, s[0].std, s[0].count), (Some(0.7), Some(0.0), 1));
        let s = summarize(&[row(0, Algorithm::Proposed, Some(0.3)), row(0, Algorithm::Proposed, Some(0.3))]).unwrap();
        assert_eq!((s[0].mean, s[0].std), (Some(0.3), Some(0.0)));
    }

    #[test]
    fn groups_and_infeasible_rows() {
        let ro = Algorithm::Baseline(BaselineKind::Ro);
        let rows = [
            row(1, Algorithm::Proposed, Some(1.0)),
            row(0, Algorithm::Proposed, Some(2.0)),
            row(0, ro, None),
            row(0, Algorithm::Proposed, Some(4.0)),
            row(0, ro, Some(5.0)),
        ];
        let s = summarize(&rows).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].point, s[0].algorithm, s[0].mean, s[0].count), (0, Algorithm::Proposed, Some(3.0), 2));
        assert!((s[0].std.unwrap() - 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!((s[1].algorithm, s[1].count, s[1].infeasible, s[1].mean), (ro, 1, 1, Some(5.0)));
        assert_eq!(s[2].point, 1);
        let none = summarize(&[row(0, ro, None)]).unwrap();
        assert_eq!((none[0].mean, none[0].std, none[0].infeasible), (None, None, 1));
    }

    #[test]
    fn compensated_sum() {
        assert_eq!(sum(&[1e16, 1.0, -1e16]), 1.0);
    }
}
