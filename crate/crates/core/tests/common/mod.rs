//! Brute-force reference implementations shared by the integration and
//! acceptance tests. Nothing here calls the estimator or path code under test.

#![allow(dead_code, clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use netmark::netgeom::{LinearNetwork, NetworkPoint};
use netmark::testfun::TestFunctionId;

/// All-pairs distances between `pts` by Floyd-Warshall on the graph whose
/// vertices are the network nodes plus the points, each segment being split
/// at the points lying on it.
pub fn floyd_warshall(net: &LinearNetwork, pts: &[NetworkPoint]) -> Vec<Vec<f64>> {
    let n_nodes = net.nodes().len();
    let n = n_nodes + pts.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    let link = |d: &mut Vec<Vec<f64>>, a: usize, b: usize, w: f64| {
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    };
    for (k, seg) in net.segments().iter().enumerate() {
        // vertices along the segment ordered by offset
        let mut chain: Vec<(f64, usize)> = vec![(0.0, seg.from)];
        chain.extend(pts.iter().enumerate().filter(|(_, p)| p.segment == k).map(|(i, p)| (p.offset, n_nodes + i)));
        chain.push((seg.length, seg.to));
        chain.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in chain.windows(2) {
            link(&mut d, w[0].1, w[1].1, w[1].0 - w[0].0);
        }
    }
    for m in 0..n {
        for a in 0..n {
            let dam = d[a][m];
            if !dam.is_finite() {
                continue;
            }
            for b in 0..n {
                let via = dam + d[m][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    (0..pts.len()).map(|i| (0..pts.len()).map(|j| d[n_nodes + i][n_nodes + j]).collect()).collect()
}

pub fn epanechnikov(d: f64, r: f64, bw: f64) -> f64 {
    let u = (d - r) / bw;
    if u.abs() <= 1.0 {
        0.75 / bw * (1.0 - u * u)
    } else {
        0.0
    }
}

fn tau(id: TestFunctionId, a: f64, b: f64, mu: f64, mu_r: f64) -> f64 {
    use TestFunctionId::*;
    match id {
        StoyanCorr => a * b,
        BeisbartKerscher => a + b,
        RMarkLeft => a,
        RMarkRight => b,
        MarkVariogram => 0.5 * (a - b).powi(2),
        StoyanCov | IshamCorr => a * b - mu * mu,
        SchlatherI => (a - mu_r) * (b - mu_r),
        ShimataniI => (a - mu) * (b - mu),
    }
}

pub struct NaiveSurface {
    /// `values[r][t]`; `None` where masked.
    pub values: Vec<Vec<Option<f64>>>,
    pub weight_ok: Vec<bool>,
    pub time_ok: Vec<bool>,
}

/// Pointwise surface by a loop over (r, t, i, j).
pub fn naive_surface(
    dist: &[Vec<f64>],
    marks: &[Vec<f64>],
    id: TestFunctionId,
    r_values: &[f64],
    bw: f64,
) -> NaiveSurface {
    let n = marks.len();
    let t_len = marks[0].len();
    let nf = n as f64;
    let mut mean = vec![0.0; t_len];
    let mut var = vec![0.0; t_len];
    let mut norm = vec![0.0; t_len];
    let mut time_ok = vec![true; t_len];
    for t in 0..t_len {
        mean[t] = marks.iter().map(|m| m[t]).sum::<f64>() / nf;
        var[t] = marks.iter().map(|m| (m[t] - mean[t]).powi(2)).sum::<f64>() / nf;
        let mut pair_sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pair_sum += tau(id, marks[i][t], marks[j][t], mean[t], 0.0);
                }
            }
        }
        norm[t] = match id {
            TestFunctionId::StoyanCov => 1.0,
            TestFunctionId::IshamCorr | TestFunctionId::SchlatherI | TestFunctionId::ShimataniI => var[t],
            _ => pair_sum / (nf * nf),
        };
        let scale = if id.degree() == 1 {
            marks.iter().map(|m| m[t].abs()).sum::<f64>() / nf
        } else {
            marks.iter().map(|m| m[t] * m[t]).sum::<f64>() / nf
        };
        time_ok[t] = id == TestFunctionId::StoyanCov || norm[t].abs() > 1e-12 * (1.0 + scale);
    }

    let mut values = vec![vec![None; t_len]; r_values.len()];
    let mut weight_ok = vec![false; r_values.len()];
    for (k, &r) in r_values.iter().enumerate() {
        for t in 0..t_len {
            let (mut wsum, mut msum) = (0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let w = epanechnikov(dist[i][j], r, bw);
                        wsum += w;
                        msum += w * marks[i][t];
                    }
                }
            }
            weight_ok[k] = wsum > 0.0;
            if !(wsum > 0.0) || !time_ok[t] {
                continue;
            }
            let mu_r = msum / wsum;
            let mut num = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        num += epanechnikov(dist[i][j], r, bw) * tau(id, marks[i][t], marks[j][t], mean[t], mu_r);
                    }
                }
            }
            values[k][t] = Some(num / wsum / norm[t]);
        }
    }
    NaiveSurface { values, weight_ok, time_ok }
}

/// Global curve: trapezoid over the unmasked timestamps divided by their span.
pub fn naive_curve(s: &NaiveSurface, times: &[f64]) -> Vec<Option<f64>> {
    let kept: Vec<usize> = (0..times.len()).filter(|&t| s.time_ok[t]).collect();
    s.values
        .iter()
        .enumerate()
        .map(|(k, row)| {
            if !s.weight_ok[k] || kept.is_empty() {
                return None;
            }
            if kept.len() == 1 {
                return row[kept[0]];
            }
            let mut integral = 0.0;
            for w in kept.windows(2) {
                integral += 0.5 * (times[w[1]] - times[w[0]]) * (row[w[0]]? + row[w[1]]?);
            }
            Some(integral / (times[*kept.last().unwrap()] - times[kept[0]]))
        })
        .collect()
}

/// Pointwise ranks by counting, then ERL vectors; O(s^2 L).
pub fn naive_erl(curves: &[Vec<f64>]) -> Vec<Vec<usize>> {
    curves
        .iter()
        .map(|c| {
            let mut ranks: Vec<usize> = (0..c.len())
                .map(|k| {
                    let below = 1 + curves.iter().filter(|o| o[k] < c[k]).count();
                    let above = 1 + curves.iter().filter(|o| o[k] > c[k]).count();
                    below.min(above)
                })
                .collect();
            ranks.sort_unstable();
            ranks
        })
        .collect()
}

/// Upper tail of the chi-square distribution with `k` degrees of freedom.
pub fn chi_square_sf(x: f64, k: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    1.0 - ChiSquared::new(k as f64).unwrap().cdf(x)
}
