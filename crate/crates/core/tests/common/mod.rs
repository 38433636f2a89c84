//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use melc::LabeledDataset;

/// Sample covariance matrix of a point set, row-major.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for c in row.iter_mut() {
            *c /= (n - 1) as f64;
        }
    }
    cov
}

pub fn quad_form(m: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += v[i] * m[i][j] * v[j];
        }
    }
    s
}

pub fn rows_of(ds: &LabeledDataset) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        ds.neg().rows().map(|r| r.to_vec()).collect(),
        ds.pos().rows().map(|r| r.to_vec()).collect(),
    )
}

/// Direct double-sum potential between two point sets under projection `v`.
pub fn direct_ip(a: &[Vec<f64>], b: &[Vec<f64>], v: &[f64], var: f64) -> f64 {
    let mut total = 0.0;
    for x in a {
        for y in b {
            let t: f64 = x.iter().zip(y).zip(v).map(|((xi, yi), vi)| (xi - yi) * vi).sum();
            total += (-t * t / (2.0 * var)).exp();
        }
    }
    total / ((2.0 * std::f64::consts::PI * var).sqrt() * a.len() as f64 * b.len() as f64)
}

pub struct OracleDcs {
    pub value: f64,
    pub ip_cross: f64,
    pub ip_neg: f64,
    pub ip_pos: f64,
}

/// D_CS from covariance matrices and direct summation over original points.
pub fn oracle_dcs(ds: &LabeledDataset, v: &[f64], gamma: f64) -> OracleDcs {
    let (neg, pos) = rows_of(ds);
    let silverman = |n: usize| gamma * gamma * (4.0 / (3.0 * n as f64)).powf(0.4);
    let h2n = silverman(neg.len()) * quad_form(&covariance(&neg), v);
    let h2p = silverman(pos.len()) * quad_form(&covariance(&pos), v);
    let ip_cross = direct_ip(&neg, &pos, v, h2n + h2p);
    let ip_neg = direct_ip(&neg, &neg, v, 2.0 * h2n);
    let ip_pos = direct_ip(&pos, &pos, v, 2.0 * h2p);
    OracleDcs {
        value: -2.0 * ip_cross.ln() + ip_neg.ln() + ip_pos.ln(),
        ip_cross,
        ip_neg,
        ip_pos,
    }
}

/// Central finite differences with step `h`.
pub fn central_differences(mut f: impl FnMut(&[f64]) -> f64, v: &[f64], h: f64) -> Vec<f64> {
    (0..v.len())
        .map(|k| {
            let mut up = v.to_vec();
            let mut down = v.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Worst violation of |a − b| ≤ max(rel·|b|, floor), as a ratio (≤ 1 passes).
pub fn worst_gradient_error(analytic: &[f64], numeric: &[f64], rel: f64, floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (rel * n.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
