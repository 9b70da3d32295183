//! Integrated upper bounds `d(p, q) ≤ inf_γ ∫ F_upper(γ, γ')` over a lattice path graph.

use std::collections::{BTreeMap, HashSet};

use nalgebra::DVector;
use petgraph::algo::{astar, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::domain::DomainSpec;
use super::upper::{royden_upper, UpperConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Lattice spacing of the neighbor graph.
    pub spacing: f64,
    /// Spacing of the sublattice carrying chord endpoints; a multiple of `spacing`,
    /// so refining the lattice keeps every chord.
    pub anchor_spacing: f64,
    pub chords: usize,
    pub chord_seed: u64,
    pub max_chord: f64,
    /// Terminals are joined to every lattice node within this radius.
    pub connect_radius: f64,
    /// Relative tolerance of the adaptive Simpson rule along each edge.
    pub quad_tol: f64,
    pub max_depth: usize,
    /// Membership samples per edge.
    pub segment_samples: usize,
    pub threads: usize,
    pub upper: UpperConfig,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            spacing: 0.05,
            anchor_spacing: 0.2,
            chords: 400,
            chord_seed: 7,
            max_chord: 0.8,
            connect_radius: 0.2,
            quad_tol: 1e-7,
            max_depth: 14,
            segment_samples: 8,
            threads: 0,
            upper: UpperConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PathGraph {
    pub nodes: Vec<DVector<f64>>,
    pub graph: UnGraph<usize, f64>,
    /// Indices of the extra terminal nodes, in the order given.
    pub terminals: Vec<NodeIndex>,
    pub chords: usize,
    pub spacing: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceResult {
    pub upper: f64,
    pub path: Vec<Vec<f64>>,
    pub nodes: usize,
    pub edges: usize,
}

/// `∫₀¹ F_upper(a + t(b − a), b − a) dt` by adaptive Simpson.
pub fn edge_weight(dom: &DomainSpec, a: &DVector<f64>, b: &DVector<f64>, cfg: &GraphConfig) -> Result<f64> {
    let dir = b - a;
    let f = |t: f64| -> Result<f64> { Ok(royden_upper(dom, &(a + &dir * t), &dir, &cfg.upper)?.value) };
    let (f0, fm, f1) = (f(0.0)?, f(0.5)?, f(1.0)?);
    let whole = (f0 + 4.0 * fm + f1) / 6.0;
    if !whole.is_finite() {
        return Ok(f64::INFINITY);
    }
    simpson(&f, 0.0, 1.0, f0, fm, f1, whole, cfg.quad_tol * whole.abs(), cfg.max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: usize) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (f(0.5 * (a + m))?, f(0.5 * (m + b))?);
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * lm + fm);
    let right = h / 12.0 * (fm + 4.0 * rm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(f, a, m, fa, lm, fm, left, 0.5 * tol, depth - 1)? + simpson(f, m, b, fm, rm, fb, right, 0.5 * tol, depth - 1)?)
}

fn segment_inside(dom: &DomainSpec, a: &DVector<f64>, b: &DVector<f64>, samples: usize) -> bool {
    (0..=samples.max(1)).all(|k| dom.contains(&(a + (b - a) * (k as f64 / samples.max(1) as f64))))
}

/// Weights for `pairs`, computed on `cfg.threads` threads (0: all available).
fn weights(dom: &DomainSpec, nodes: &[DVector<f64>], pairs: &[(usize, usize)], cfg: &GraphConfig) -> Result<Vec<f64>> {
    let threads = if cfg.threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cfg.threads
    };
    let chunk = pairs.len().div_ceil(threads.max(1)).max(1);
    let results: Vec<Result<Vec<f64>>> = std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&(i, j)| edge_weight(dom, &nodes[i], &nodes[j], cfg)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("edge worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(pairs.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Lattice graph of `Ω` with chords and the given terminal points.
pub fn build_path_graph(dom: &DomainSpec, terminals: &[DVector<f64>], cfg: &GraphConfig) -> Result<PathGraph> {
    if !(cfg.spacing > 0.0) || !(cfg.anchor_spacing >= cfg.spacing) {
        return Err(Error::Config("graph needs 0 < spacing ≤ anchor_spacing".into()));
    }
    let ratio = cfg.anchor_spacing / cfg.spacing;
    let m = ratio.round() as i64;
    if (ratio - m as f64).abs() > 1e-9 {
        return Err(Error::Config("anchor_spacing must be an integer multiple of spacing".into()));
    }
    for t in terminals {
        if !dom.contains(t) {
            return Err(Error::Argument(format!("{:?} is not in Ω", t.as_slice())));
        }
    }
    let n = dom.dim();
    let h = cfg.spacing;
    let lattice = dom.interior_lattice(h)?;
    let key = |x: &DVector<f64>| -> Vec<i64> { (0..n).map(|i| ((x[i] - dom.origin[i]) / h).round() as i64).collect() };
    let index: BTreeMap<Vec<i64>, usize> = lattice.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
    let mut nodes = lattice.clone();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    // neighbor offsets, one of each ± pair
    let mut offsets = Vec::new();
    for code in 0..3i64.pow(n as u32) {
        let mut c = code;
        let off: Vec<i64> = (0..n)
            .map(|_| {
                let d = c % 3 - 1;
                c /= 3;
                d
            })
            .collect();
        if off.iter().find(|&&d| d != 0).is_some_and(|&d| d > 0) {
            offsets.push(off);
        }
    }
    for (k, i) in &index {
        for off in &offsets {
            let nk: Vec<i64> = k.iter().zip(off).map(|(a, b)| a + b).collect();
            if let Some(&j) = index.get(&nk) {
                if segment_inside(dom, &nodes[*i], &nodes[j], cfg.segment_samples) {
                    pairs.push((*i, j));
                }
            }
        }
    }
    // chords between anchor nodes, in anchor-lattice order
    let anchors: Vec<usize> = index
        .iter()
        .filter(|(k, _)| k.iter().all(|c| c.rem_euclid(m) == 0))
        .map(|(_, &i)| i)
        .collect();
    let mut seen: HashSet<(usize, usize)> = pairs.iter().copied().collect();
    let mut chords = 0;
    if anchors.len() >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.chord_seed);
        for _ in 0..cfg.chords {
            let (a, b) = (anchors[rng.random_range(0..anchors.len())], anchors[rng.random_range(0..anchors.len())]);
            let (a, b) = (a.min(b), a.max(b));
            if a == b || seen.contains(&(a, b)) || (&nodes[a] - &nodes[b]).norm() > cfg.max_chord {
                continue;
            }
            if segment_inside(dom, &nodes[a], &nodes[b], cfg.segment_samples * 4) {
                seen.insert((a, b));
                pairs.push((a, b));
                chords += 1;
            }
        }
    }
    let mut term_ids = Vec::new();
    for t in terminals {
        // a terminal sitting on a lattice node reuses it
        if let Some(&i) = index.get(&key(t)) {
            if (&nodes[i] - t).norm() <= 1e-14 * (1.0 + t.norm()) {
                term_ids.push(i);
                continue;
            }
        }
        if let Some(&i) = term_ids.iter().find(|&&i| (&nodes[i] - t).norm() == 0.0) {
            term_ids.push(i);
            continue;
        }
        let id = nodes.len();
        nodes.push(t.clone());
        term_ids.push(id);
        for j in 0..id {
            let d = (&nodes[j] - t).norm();
            if d > 0.0 && d <= cfg.connect_radius && segment_inside(dom, &nodes[j], t, cfg.segment_samples) {
                pairs.push((j, id));
            }
        }
    }
    let w = weights(dom, &nodes, &pairs, cfg)?;
    let mut graph = UnGraph::with_capacity(nodes.len(), pairs.len());
    for i in 0..nodes.len() {
        graph.add_node(i);
    }
    for ((i, j), wt) in pairs.iter().zip(w) {
        if wt.is_finite() && wt > 0.0 {
            graph.add_edge(NodeIndex::new(*i), NodeIndex::new(*j), wt);
        }
    }
    Ok(PathGraph {
        nodes,
        graph,
        terminals: term_ids.into_iter().map(NodeIndex::new).collect(),
        chords,
        spacing: h,
    })
}

impl PathGraph {
    /// Shortest path between two nodes.
    pub fn shortest(&self, a: NodeIndex, b: NodeIndex) -> Result<(f64, Vec<NodeIndex>)> {
        astar(&self.graph, a, |x| x == b, |e| *e.weight(), |_| 0.0).ok_or_else(|| {
            Error::Connectivity(format!(
                "{:?} and {:?} are not connected in the sample graph",
                self.nodes[a.index()].as_slice(),
                self.nodes[b.index()].as_slice()
            ))
        })
    }

    /// Distances from `a` to every reachable node (`∞` elsewhere).
    pub fn distances_from(&self, a: NodeIndex) -> Vec<f64> {
        let d = dijkstra(&self.graph, a, None, |e| *e.weight());
        (0..self.nodes.len())
            .map(|i| d.get(&NodeIndex::new(i)).copied().unwrap_or(f64::INFINITY))
            .collect()
    }
}

/// Upper bound on the Kobayashi distance between `p` and `q`.
pub fn kobayashi_distance(dom: &DomainSpec, p: &DVector<f64>, q: &DVector<f64>, cfg: &GraphConfig) -> Result<DistanceResult> {
    if (p - q).norm() == 0.0 {
        if !dom.contains(p) {
            return Err(Error::Argument(format!("{:?} is not in Ω", p.as_slice())));
        }
        return Ok(DistanceResult {
            upper: 0.0,
            path: vec![p.as_slice().to_vec()],
            nodes: 1,
            edges: 0,
        });
    }
    let g = build_path_graph(dom, &[p.clone(), q.clone()], cfg)?;
    let (cost, path) = g.shortest(g.terminals[0], g.terminals[1])?;
    Ok(DistanceResult {
        upper: cost,
        path: path.iter().map(|i| g.nodes[i.index()].as_slice().to_vec()).collect(),
        nodes: g.graph.node_count(),
        edges: g.graph.edge_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn poincare_distance_on_the_disc() {
        let dom = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0).unwrap();
        let cfg = GraphConfig { spacing: 0.1, ..Default::default() };
        let d = kobayashi_distance(&dom, &v(&[0.0, 0.0]), &v(&[0.5, 0.0]), &cfg).unwrap();
        let exact = 0.5f64.atanh();
        assert!((d.upper / exact - 1.0).abs() < 0.03, "{} {exact}", d.upper);
        assert!(d.upper >= exact * (1.0 - 1e-6));
        let back = kobayashi_distance(&dom, &v(&[0.5, 0.0]), &v(&[0.0, 0.0]), &cfg).unwrap();
        assert!((d.upper - back.upper).abs() < 1e-9);
        assert_eq!(kobayashi_distance(&dom, &v(&[0.2, 0.1]), &v(&[0.2, 0.1]), &cfg).unwrap().upper, 0.0);
    }

    #[test]
    fn refinement_never_increases_the_distance() {
        let dom = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0).unwrap();
        let (p, q) = (v(&[-0.33, 0.41]), v(&[0.52, -0.27]));
        let coarse = GraphConfig { spacing: 0.1, ..Default::default() };
        let fine = GraphConfig { spacing: 0.05, ..Default::default() };
        let dc = kobayashi_distance(&dom, &p, &q, &coarse).unwrap().upper;
        let df = kobayashi_distance(&dom, &p, &q, &fine).unwrap().upper;
        assert!(df <= dc * (1.0 + 1e-9), "{df} {dc}");
        // the Poincaré distance is a lower bound for every path
        let z = |a: &DVector<f64>| nalgebra::Complex::new(a[0], a[1]);
        let (zp, zq) = (z(&p), z(&q));
        let exact = ((zp - zq) / (nalgebra::Complex::new(1.0, 0.0) - zp.conj() * zq)).norm().atanh();
        assert!(df >= exact * (1.0 - 1e-6) && df < exact * 1.05, "{df} {exact}");
    }

    #[test]
    fn isolated_terminal_is_a_connectivity_error() {
        let dom = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0).unwrap();
        let cfg = GraphConfig { spacing: 0.2, anchor_spacing: 0.2, connect_radius: 0.01, ..Default::default() };
        let r = kobayashi_distance(&dom, &v(&[0.05, 0.05]), &v(&[0.5, 0.1]), &cfg);
        assert!(matches!(r, Err(Error::Connectivity(_))));
        assert!(matches!(kobayashi_distance(&dom, &v(&[2.0, 0.0]), &v(&[0.0, 0.0]), &cfg), Err(Error::Argument(_))));
    }
}
