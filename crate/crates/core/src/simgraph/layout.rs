//! Kamada-Kawai style layout: minimizes the stress
//! `Σ (1/d²)(|p_i - p_j| - d)²` over graph-distance pairs, one node at a
//! time. Each node move minimizes a quadratic majorizer of the stress in
//! that node's coordinates, so the energy never increases.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HomogeneityGraph;

/// Horizontal gap between packed components.
const COMPONENT_GAP: f64 = 1.0;
const JITTER: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    /// `(label, x, y)` in graph node order.
    pub positions: Vec<(String, f64, f64)>,
    /// Total stress before the first sweep and after each sweep.
    pub energies: Vec<f64>,
}

impl Layout {
    pub fn get(&self, label: &str) -> Option<(f64, f64)> {
        self.positions
            .iter()
            .find(|(l, _, _)| l == label)
            .map(|&(_, x, y)| (x, y))
    }
}

fn components(adj: &[Vec<usize>], order: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for &start in order {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                    queue.push_back(u);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Shortest-path distances within one component (indices local to `comp`).
fn distances(adj: &[Vec<usize>], comp: &[usize]) -> Vec<Vec<f64>> {
    let local: std::collections::HashMap<usize, usize> =
        comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let k = comp.len();
    let mut d = vec![vec![f64::INFINITY; k]; k];
    for (src, &v) in comp.iter().enumerate() {
        d[src][src] = 0.0;
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            let dx = d[src][local[&x]];
            for &u in &adj[x] {
                let lu = local[&u];
                if d[src][lu].is_infinite() {
                    d[src][lu] = dx + 1.0;
                    queue.push_back(u);
                }
            }
        }
    }
    d
}

fn component_stress(pos: &[(f64, f64)], dist: &[Vec<f64>]) -> f64 {
    let mut e = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let d = dist[i][j];
            let len = (pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1);
            e += (len - d).powi(2) / (d * d);
        }
    }
    e
}

/// Stress of a laid-out graph, summed over connected pairs.
pub fn stress(graph: &HomogeneityGraph, layout: &Layout) -> f64 {
    let adj = graph.adjacency();
    let order: Vec<usize> = (0..graph.nodes().len()).collect();
    components(&adj, &order)
        .iter()
        .map(|comp| {
            let pos: Vec<(f64, f64)> = comp
                .iter()
                .map(|&v| (layout.positions[v].1, layout.positions[v].2))
                .collect();
            component_stress(&pos, &distances(&adj, comp))
        })
        .sum()
}

fn sweep(pos: &mut [(f64, f64)], dist: &[Vec<f64>]) {
    let k = pos.len();
    for i in 0..k {
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = dist[i][j];
            let w = 1.0 / (d * d);
            let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
            let len = dx.hypot(dy);
            let (ux, uy) = if len > 0.0 { (dx / len, dy / len) } else { (0.0, 0.0) };
            sx += w * (pos[j].0 + d * ux);
            sy += w * (pos[j].1 + d * uy);
            sw += w;
        }
        if sw > 0.0 {
            pos[i] = (sx / sw, sy / sw);
        }
    }
}

/// Lays out each connected component separately, then packs components
/// left to right, largest first. Deterministic for a given seed and
/// independent of node insertion order.
pub fn kamada_kawai_layout(graph: &HomogeneityGraph, iterations: usize, seed: u64) -> Layout {
    let labels = graph.nodes();
    let adj = graph.adjacency();
    let mut by_label: Vec<usize> = (0..labels.len()).collect();
    by_label.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    let mut comps = components(&adj, &by_label);
    for c in comps.iter_mut() {
        c.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| labels[a[0]].cmp(&labels[b[0]])));

    let iterations = iterations.max(1);
    let mut energies = vec![0.0; iterations + 1];
    let mut placed = vec![(0.0, 0.0); labels.len()];
    let mut cursor = 0.0;
    for (ci, comp) in comps.iter().enumerate() {
        let k = comp.len();
        let dist = distances(&adj, comp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(ci as u64));
        let radius = (k as f64 / std::f64::consts::TAU).max(0.5);
        let mut pos: Vec<(f64, f64)> = (0..k)
            .map(|i| {
                let angle = std::f64::consts::TAU * i as f64 / k as f64;
                let jx: f64 = rng.gen_range(-JITTER..JITTER);
                let jy: f64 = rng.gen_range(-JITTER..JITTER);
                (radius * angle.cos() + jx, radius * angle.sin() + jy)
            })
            .collect();
        if k == 1 {
            pos[0] = (0.0, 0.0);
        }
        let mut current = component_stress(&pos, &dist);
        energies[0] += current;
        for e in energies.iter_mut().skip(1) {
            let before = pos.clone();
            sweep(&mut pos, &dist);
            let next = component_stress(&pos, &dist);
            // Reject a sweep that raises the stress.
            if next > current {
                pos = before;
            } else {
                current = next;
            }
            *e += current;
        }
        let min_x = pos.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let max_x = pos.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let mid_y = {
            let lo = pos.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = pos.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            (lo + hi) / 2.0
        };
        for (&v, &(x, y)) in comp.iter().zip(&pos) {
            placed[v] = (x - min_x + cursor, y - mid_y);
        }
        cursor += (max_x - min_x) + COMPONENT_GAP;
    }
    Layout {
        positions: labels
            .iter()
            .zip(placed)
            .map(|(l, (x, y))| (l.clone(), x, y))
            .collect(),
        energies,
    }
}

fn coord(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// `label,x,y` rows with six decimals.
pub fn layout_csv(layout: &Layout) -> String {
    let mut out = String::from("label,x,y\n");
    for (label, x, y) in &layout.positions {
        let _ = writeln!(out, "{},{},{}", crate::tables::csv_field(label), coord(*x), coord(*y));
    }
    out
}
