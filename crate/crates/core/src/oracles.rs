//! Slow reference implementations for tests. Each one follows the textbook
//! procedure step by step and shares no code with the fast versions.

use std::collections::BTreeMap;

use crate::cell_cluster::NeighborStats;
use crate::dot_detect::Dot;

/// Pairwise cell clustering with explicit cell creation, joining and
/// merging, followed by singleton cells for unlinked dots. Cells are sorted
/// and ordered by first index.
pub fn cluster_pairwise(dots: &[Dot], hor_max: f64, ver_max: f64) -> Vec<Vec<usize>> {
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let find = |cells: &Vec<Vec<usize>>, d: usize| cells.iter().position(|c| c.contains(&d));
    for i in 0..dots.len() {
        for j in i + 1..dots.len() {
            let h = (dots[i].cx - dots[j].cx).abs();
            let v = (dots[i].cy - dots[j].cy).abs();
            if !(h <= hor_max && v <= ver_max) {
                continue;
            }
            match (find(&cells, i), find(&cells, j)) {
                (None, None) => cells.push(vec![i, j]),
                (Some(w), None) => cells[w].push(j),
                (None, Some(w)) => cells[w].push(i),
                (Some(w), Some(x)) if w == x => {}
                (Some(w), Some(x)) => {
                    let moved = std::mem::take(&mut cells[x]);
                    cells[w].extend(moved);
                    cells.remove(x);
                }
            }
        }
    }
    for i in 0..dots.len() {
        if find(&cells, i).is_none() {
            cells.push(vec![i]);
        }
    }
    for c in &mut cells {
        c.sort_unstable();
    }
    cells.sort();
    cells
}

/// Nearest neighbour of every dot by checking all others. City-block
/// distance, ties to the smaller `(cy, cx)`, then the smaller index.
pub fn nearest_brute(dots: &[Dot]) -> NeighborStats {
    let n = dots.len();
    let mut stats = NeighborStats {
        hor_near: vec![0.0; n],
        ver_near: vec![0.0; n],
        neighbor: vec![0; n],
    };
    for i in 0..n {
        let mut best: Option<usize> = None;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = |k: usize| (dots[i].cx - dots[k].cx).abs() + (dots[i].cy - dots[k].cy).abs();
            let better = match best {
                None => true,
                Some(b) => {
                    d(j) < d(b)
                        || (d(j) == d(b)
                            && (dots[j].cy < dots[b].cy
                                || (dots[j].cy == dots[b].cy && dots[j].cx < dots[b].cx)))
                }
            };
            if better {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            stats.hor_near[i] = (dots[i].cx - dots[j].cx).abs();
            stats.ver_near[i] = (dots[i].cy - dots[j].cy).abs();
            stats.neighbor[i] = j;
        }
    }
    stats
}

/// Between-class variance when pixels below `t` form one class, computed
/// from the raw pixels.
pub fn between_class_variance(pixels: &[u8], t: u16) -> f64 {
    let (lo, hi): (Vec<f64>, Vec<f64>) = {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for &p in pixels {
            if (p as u16) < t {
                lo.push(p as f64);
            } else {
                hi.push(p as f64);
            }
        }
        (lo, hi)
    };
    if lo.is_empty() || hi.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (w0, w1) = (lo.len() as f64, hi.len() as f64);
    w0 * w1 * (mean(&lo) - mean(&hi)).powi(2)
}

/// Every threshold in `1..=255` whose between-class variance is maximal,
/// up to a relative `1e-9`.
pub fn otsu_candidates(pixels: &[u8]) -> Vec<u8> {
    let v: Vec<f64> = (1..=255u16)
        .map(|t| between_class_variance(pixels, t))
        .collect();
    let best = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Vec::new();
    }
    (1..=255u16)
        .zip(&v)
        .filter(|(_, &x)| (best - x).abs() <= 1e-9 * best.abs().max(1.0))
        .map(|(t, _)| t as u8)
        .collect()
}

/// `(actual, predicted) -> count` by visiting every label pair for every item.
pub fn confusion_tally(pred: &[String], truth: &[String]) -> BTreeMap<(String, String), u64> {
    let mut labels: Vec<&String> = pred.iter().chain(truth).collect();
    labels.sort();
    labels.dedup();
    let mut out = BTreeMap::new();
    for a in &labels {
        for p in &labels {
            let n = truth
                .iter()
                .zip(pred)
                .filter(|(t, q)| t == a && q == p)
                .count() as u64;
            if n > 0 {
                out.insert(((*a).clone(), (*p).clone()), n);
            }
        }
    }
    out
}

/// Greedy matching by repeatedly taking the globally closest free pair.
pub fn match_greedy_brute(
    pred: &[(f64, f64)],
    truth: &[(f64, f64)],
    tol: f64,
) -> Vec<(usize, usize)> {
    let (mut pu, mut tu) = (vec![false; pred.len()], vec![false; truth.len()]);
    let mut pairs = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, p) in pred.iter().enumerate() {
            for (j, t) in truth.iter().enumerate() {
                if pu[i] || tu[j] {
                    continue;
                }
                let d = ((p.0 - t.0).powi(2) + (p.1 - t.1).powi(2)).sqrt();
                if d <= tol && best.is_none_or(|b| d < b.0) {
                    best = Some((d, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                pu[i] = true;
                tu[j] = true;
                pairs.push((i, j));
            }
            None => break,
        }
    }
    pairs.sort_unstable();
    pairs
}
