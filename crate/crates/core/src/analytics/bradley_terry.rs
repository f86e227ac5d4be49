use nalgebra::DMatrix;
use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, UnGraph};

use super::{AnalyticsError, ScoreVector, WinMatrix};

/// Probability that an item with score `si` is preferred over one with `sj`.
/// Evaluated without overflow for any finite difference.
#[inline]
pub fn preference_probability(si: f64, sj: f64) -> f64 {
    let d = si - sj;
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `L(s) = Σ_ij w_ij (s_i − ln(e^{s_i} + e^{s_j}))`.
pub fn log_likelihood(s: &[f64], w: &WinMatrix) -> f64 {
    assert_eq!(s.len(), w.len());
    let m = w.len();
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            let n = w.get(i, j);
            if n > 0 {
                sum -= n as f64 * softplus(s[j] - s[i]);
            }
        }
    }
    sum
}

/// `∂L/∂s_i = W_i − Σ_j n_ij p_ij`: observed minus expected wins.
pub fn gradient(s: &[f64], w: &WinMatrix) -> Vec<f64> {
    assert_eq!(s.len(), w.len());
    let m = w.len();
    (0..m)
        .map(|i| {
            let expected: f64 = (0..m)
                .filter(|&j| j != i)
                .map(|j| w.games(i, j) as f64 * preference_probability(s[i], s[j]))
                .sum();
            w.wins(i) as f64 - expected
        })
        .collect()
}

/// Negative Hessian of `L`. Singular along the constant direction.
pub fn observed_information(s: &[f64], w: &WinMatrix) -> DMatrix<f64> {
    let m = w.len();
    let mut info = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let n = w.games(i, j) as f64;
            if n == 0.0 {
                continue;
            }
            let p = preference_probability(s[i], s[j]);
            let v = n * p * (1.0 - p);
            info[(i, i)] += v;
            info[(j, j)] += v;
            info[(i, j)] -= v;
            info[(j, i)] -= v;
        }
    }
    info
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Anchor {
    /// The lowest-scoring item is pinned to zero.
    #[default]
    MinScore,
    Item(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub anchor: Anchor,
    /// Stop once the gradient norm drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { anchor: Anchor::MinScore, tolerance: 1e-10, max_iterations: 10_000 }
    }
}

pub fn fit_bradley_terry(w: &WinMatrix) -> Result<ScoreVector, AnalyticsError> {
    fit_bradley_terry_with(w, &FitOptions::default())
}

pub fn fit_bradley_terry_with(w: &WinMatrix, opts: &FitOptions) -> Result<ScoreVector, AnalyticsError> {
    let m = w.len();
    if m < 2 {
        return Err(AnalyticsError::TooFewItems { items: m });
    }
    if let Anchor::Item(a) = opts.anchor {
        if a >= m {
            return Err(AnalyticsError::InvalidAnchor { anchor: a, items: m });
        }
    }
    check_identifiable(w)?;

    // MM update in log space: γ_i ← W_i / Σ_j n_ij / (γ_i + γ_j), which is
    // s_i += ln(W_i / expected wins_i).
    let wins: Vec<f64> = (0..m).map(|i| w.wins(i) as f64).collect();
    let mut s = vec![0.0; m];
    let mut iterations = 0;
    let mut norm = gradient_norm(&s, w);
    while norm >= opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(AnalyticsError::NotConverged { iterations, gradient: norm });
        }
        let next: Vec<f64> = (0..m)
            .map(|i| {
                let expected: f64 = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| w.games(i, j) as f64 * preference_probability(s[i], s[j]))
                    .sum();
                s[i] + (wins[i] / expected).ln()
            })
            .collect();
        let mean = next.iter().sum::<f64>() / m as f64;
        for (si, ni) in s.iter_mut().zip(&next) {
            *si = ni - mean;
        }
        iterations += 1;
        norm = gradient_norm(&s, w);
    }
    log::debug!("Bradley-Terry MM converged in {iterations} iterations, |g| = {norm:e}");

    let anchor = match opts.anchor {
        Anchor::Item(a) => a,
        Anchor::MinScore => (0..m).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap(),
    };
    let base = s[anchor];
    let scores: Vec<f64> = s.iter().map(|x| x - base).collect();
    let std_errors = standard_errors(&scores, w, anchor)?;
    Ok(ScoreVector { items: w.items.clone(), scores, std_errors, anchor })
}

fn gradient_norm(s: &[f64], w: &WinMatrix) -> f64 {
    gradient(s, w).iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Square roots of the diagonal of the inverse reduced information, with the
/// anchor row and column removed.
fn standard_errors(s: &[f64], w: &WinMatrix, anchor: usize) -> Result<Vec<f64>, AnalyticsError> {
    let m = w.len();
    let info = observed_information(s, w);
    let keep: Vec<usize> = (0..m).filter(|&i| i != anchor).collect();
    let reduced = DMatrix::from_fn(m - 1, m - 1, |a, b| info[(keep[a], keep[b])]);
    let inv = reduced
        .cholesky()
        .ok_or_else(|| AnalyticsError::Malformed("information matrix is not positive definite".into()))?
        .inverse();
    let mut se = vec![0.0; m];
    for (a, &i) in keep.iter().enumerate() {
        se[i] = inv[(a, a)].sqrt();
    }
    Ok(se)
}

/// The MLE exists iff the directed "beats" graph is strongly connected.
fn check_identifiable(w: &WinMatrix) -> Result<(), AnalyticsError> {
    let m = w.len();
    let mut ug = UnGraph::<(), ()>::new_undirected();
    let nodes: Vec<_> = (0..m).map(|_| ug.add_node(())).collect();
    for i in 0..m {
        for j in (i + 1)..m {
            if w.games(i, j) > 0 {
                ug.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let components = sorted_components(kosaraju_scc(&ug).into_iter().map(|c| c.into_iter().map(|n| n.index()).collect()));
    if components.len() > 1 {
        return Err(AnalyticsError::Disconnected { components });
    }

    let mut dg = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..m).map(|_| dg.add_node(())).collect();
    for i in 0..m {
        for j in 0..m {
            if w.get(i, j) > 0 {
                dg.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let sccs = sorted_components(kosaraju_scc(&dg).into_iter().map(|c| c.into_iter().map(|n| n.index()).collect()));
    if sccs.len() == 1 {
        return Ok(());
    }
    let mut label = vec![0; m];
    for (k, c) in sccs.iter().enumerate() {
        for &i in c {
            label[i] = k;
        }
    }
    let (mut above, mut below) = (Vec::new(), Vec::new());
    for c in &sccs {
        let k = label[c[0]];
        let loses_out = c.iter().any(|&i| (0..m).any(|j| label[j] != k && w.get(j, i) > 0));
        let wins_out = c.iter().any(|&i| (0..m).any(|j| label[j] != k && w.get(i, j) > 0));
        if !loses_out {
            above.extend(c);
        }
        if !wins_out {
            below.extend(c);
        }
    }
    above.sort_unstable();
    below.sort_unstable();
    Err(AnalyticsError::Degenerate { above, below })
}

fn sorted_components(it: impl Iterator<Item = Vec<usize>>) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = it
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    out.sort();
    out
}
