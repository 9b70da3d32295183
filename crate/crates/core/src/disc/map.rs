//! Discretized maps from the unit disc into a chart and their functionals.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::DiscGrid;
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// A map `𝔻 → chart`, stored component-wise on the nodes of a [`DiscGrid`],
/// with its discrete differential.
#[derive(Clone, Debug)]
pub struct DiscMap {
    grid: Arc<DiscGrid>,
    comps: Vec<Vec<f64>>,
    dx: Vec<Vec<f64>>,
    dy: Vec<Vec<f64>>,
}

impl DiscMap {
    pub fn new(grid: Arc<DiscGrid>, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Argument("disc map needs at least one component".into()));
        }
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::Argument(format!(
                    "component has {} values, grid has {} nodes",
                    c.len(),
                    grid.len()
                )));
            }
            if let Some(k) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite value at node {k}")));
            }
        }
        let (dx, dy) = comps.iter().map(|c| grid.gradient(c)).unzip();
        Ok(Self {
            grid,
            comps,
            dx,
            dy,
        })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn<F>(grid: Arc<DiscGrid>, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> DVector<f64>,
    {
        let mut comps = vec![vec![0.0; grid.len()]; dim];
        for k in 0..grid.len() {
            let (x, y) = grid.xy(k);
            let v = f(x, y);
            if v.len() != dim {
                return Err(Error::Argument(format!(
                    "map returned {} components, expected {dim}",
                    v.len()
                )));
            }
            for i in 0..dim {
                comps[i][k] = v[i];
            }
        }
        Self::new(grid, comps)
    }

    /// The affine disc `ζ ↦ p + x v₁ + y v₂`.
    pub fn affine(grid: Arc<DiscGrid>, jet: &Jet1) -> Result<Self> {
        let (p, v1, v2) = (&jet.center, &jet.v1, &jet.v2);
        Self::from_fn(grid, p.len(), |x, y| p + v1 * x + v2 * y)
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn point(&self, k: usize) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.comps.iter().map(|c| c[k]))
    }

    pub fn ux(&self, k: usize) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.dx.iter().map(|c| c[k]))
    }

    pub fn uy(&self, k: usize) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.dy.iter().map(|c| c[k]))
    }

    /// The 2×n Jacobian at node `k` (rows `u_x`, `u_y`).
    pub fn differential(&self, k: usize) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(2, n, |a, i| if a == 0 { self.dx[i][k] } else { self.dy[i][k] })
    }

    pub fn center(&self) -> DVector<f64> {
        self.point(0)
    }

    /// Fails with a domain error at the first node outside the chart box.
    pub fn check_inside(&self, chart: &Chart) -> Result<()> {
        if chart.dim() != self.dim() {
            return Err(Error::Argument(format!(
                "map has {} components, chart dimension is {}",
                self.dim(),
                chart.dim()
            )));
        }
        for k in 0..self.grid.len() {
            let x = self.point(k);
            if !chart.contains(x.as_slice()) {
                return Err(Error::domain(x.as_slice(), format!("disc node {k} outside box")));
            }
        }
        Ok(())
    }

    /// `ζ ↦ u(φ(ζ))` resampled on `grid` by interpolation.
    pub fn precompose<F>(&self, grid: Arc<DiscGrid>, phi: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> (f64, f64),
    {
        let its: Vec<_> = self.comps.iter().map(|c| self.grid.interpolator(c)).collect();
        let mut comps = vec![vec![0.0; grid.len()]; self.dim()];
        for k in 0..grid.len() {
            let (x, y) = grid.xy(k);
            let (a, b) = phi(x, y);
            if a.hypot(b) > 1.0 + 1e-9 {
                return Err(Error::Argument(format!(
                    "reparametrization leaves the disc at node {k}"
                )));
            }
            for (i, it) in its.iter().enumerate() {
                comps[i][k] = it.eval(a, b);
            }
        }
        Self::new(grid, comps)
    }

    /// `u(λ ζ)` for `0 < λ ≤ 1`; exact on the grid when `λ = 1`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Argument(format!("dilation must lie in (0, 1], got {lambda}")));
        }
        if lambda == 1.0 {
            return Ok(self.clone());
        }
        self.precompose(self.grid.clone(), |x, y| (lambda * x, lambda * y))
    }

    /// Writes `r,theta,u_1..u_n` with a header row and 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["r".to_string(), "theta".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("u_{i}")));
        w.write_record(&header)?;
        for k in 0..self.grid.len() {
            let mut row = vec![
                format!("{:.16e}", self.grid.radius(k)),
                format!("{:.16e}", self.grid.theta(k)),
            ];
            row.extend(self.comps.iter().map(|c| format!("{:.16e}", c[k])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a map written by [`DiscMap::write_csv`] on the given grid.
    pub fn read_csv<R: Read>(grid: Arc<DiscGrid>, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || &header[0] != "r" || &header[1] != "theta" {
            return Err(Error::Config("disc CSV header must start with r,theta".into()));
        }
        let n = header.len() - 2;
        let mut comps = vec![Vec::with_capacity(grid.len()); n];
        for rec in rdr.records() {
            let rec = rec?;
            for i in 0..n {
                let v: f64 = rec[i + 2]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad number {:?}: {e}", &rec[i + 2])))?;
                comps[i].push(v);
            }
        }
        Self::new(grid, comps)
    }
}

/// A center point and a g-orthogonal pair of tangent vectors of equal g-norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet1 {
    pub center: DVector<f64>,
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
}

impl Jet1 {
    pub fn new(chart: &Chart, center: DVector<f64>, v1: DVector<f64>, v2: DVector<f64>) -> Result<Self> {
        let g = chart.metric_at(&center)?;
        let (a, b, c) = (v1.dot(&(&g * &v1)), v1.dot(&(&g * &v2)), v2.dot(&(&g * &v2)));
        let scale = a.max(c);
        if !(scale > 0.0) || a * c - b * b <= 1e-20 * scale * scale {
            return Err(Error::Argument("jet frame does not span a 2-plane".into()));
        }
        if b.abs() > 1e-10 * scale || (a - c).abs() > 1e-10 * scale {
            return Err(Error::Argument(format!(
                "jet frame must be g-orthogonal with equal norms (g(v1,v2)={b:e}, |v1|²={a}, |v2|²={c})"
            )));
        }
        Ok(Self { center, v1, v2 })
    }

    /// g-orthonormalizes `(a, b)` at `center` (Gram–Schmidt) and scales to g-norm `scale`.
    pub fn from_plane(
        chart: &Chart,
        center: DVector<f64>,
        a: &DVector<f64>,
        b: &DVector<f64>,
        scale: f64,
    ) -> Result<Self> {
        let g = chart.metric_at(&center)?;
        let ip = |x: &DVector<f64>, y: &DVector<f64>| x.dot(&(&g * y));
        let na = ip(a, a).sqrt();
        if !(na > 0.0) {
            return Err(Error::Argument("zero tangent vector".into()));
        }
        let e1 = a / na;
        let w = b - &e1 * ip(&e1, b);
        let nw = ip(&w, &w).sqrt();
        if !(nw > 1e-12 * ip(b, b).sqrt()) {
            return Err(Error::Argument("tangent vectors are parallel".into()));
        }
        let e2 = w / nw;
        Ok(Self {
            center,
            v1: e1 * scale,
            v2: e2 * scale,
        })
    }

    /// Common g-norm of the frame vectors.
    pub fn scale(&self, chart: &Chart) -> Result<f64> {
        chart.norm_at(&self.center, &self.v1)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

fn inner(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(&(g * b))
}

/// First fundamental form `(E, F, G)` of `u` at every node.
pub fn first_fundamental_form(chart: &Chart, u: &DiscMap) -> Result<Vec<(f64, f64, f64)>> {
    u.check_inside(chart)?;
    (0..u.grid.len())
        .map(|k| {
            let g = chart.metric_at(&u.point(k))?;
            let (a, b) = (u.ux(k), u.uy(k));
            Ok((inner(&g, &a, &a), inner(&g, &a, &b), inner(&g, &b, &b)))
        })
        .collect()
}

/// `∫ |du|²_g dm`.
pub fn energy(chart: &Chart, u: &DiscMap) -> Result<f64> {
    let eg: Vec<f64> = first_fundamental_form(chart, u)?
        .into_iter()
        .map(|(e, _, g)| e + g)
        .collect();
    Ok(u.grid.integrate(&eg))
}

/// `∫ sqrt(EG − F²) dm`.
pub fn area(chart: &Chart, u: &DiscMap) -> Result<f64> {
    let fff = first_fundamental_form(chart, u)?;
    let mut dens = Vec::with_capacity(fff.len());
    for (k, (e, f, g)) in fff.into_iter().enumerate() {
        let det = e * g - f * f;
        if !(det > 1e-14 * (e + g) * (e + g)) || e + g == 0.0 {
            return Err(Error::Immersion {
                node: k,
                detail: format!("det of induced metric {det:e}"),
            });
        }
        dens.push(det.sqrt());
    }
    Ok(u.grid.integrate(&dens))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConformalityReport {
    /// Max over non-degenerate nodes of `(|E − G| + 2|F|)/(E + G)`.
    pub defect: f64,
    pub worst_node: usize,
    /// Nodes skipped because `E + G` vanished.
    pub degenerate_nodes: usize,
}

pub fn conformality_report(chart: &Chart, u: &DiscMap) -> Result<ConformalityReport> {
    let fff = first_fundamental_form(chart, u)?;
    let scale = fff.iter().map(|(e, _, g)| e + g).fold(0.0, f64::max);
    let mut rep = ConformalityReport {
        defect: 0.0,
        worst_node: 0,
        degenerate_nodes: 0,
    };
    for (k, (e, f, g)) in fff.into_iter().enumerate() {
        let s = e + g;
        if !(s > 1e-12 * scale) {
            rep.degenerate_nodes += 1;
            continue;
        }
        let d = ((e - g).abs() + 2.0 * f.abs()) / s;
        if d > rep.defect {
            rep.defect = d;
            rep.worst_node = k;
        }
    }
    Ok(rep)
}

pub fn conformality_defect(chart: &Chart, u: &DiscMap) -> Result<f64> {
    Ok(conformality_report(chart, u)?.defect)
}

/// `Δu^i + Γ^i_jk(u)(u_x^j u_x^k + u_y^j u_y^k)` at interior nodes (zero on the boundary ring).
pub fn harmonic_residual(chart: &Chart, u: &DiscMap) -> Result<Vec<DVector<f64>>> {
    u.check_inside(chart)?;
    let n = u.dim();
    let laps: Vec<Vec<f64>> = u.comps.iter().map(|c| u.grid.laplacian(c)).collect();
    let flat = chart.is_flat();
    (0..u.grid.len())
        .map(|k| {
            if u.grid.is_boundary(k) {
                return Ok(DVector::zeros(n));
            }
            let mut r = DVector::from_iterator(n, laps.iter().map(|l| l[k]));
            if !flat {
                let gamma = chart.christoffel_at(&u.point(k))?;
                let (a, b) = (u.ux(k), u.uy(k));
                r += gamma.contract(a.as_slice(), a.as_slice());
                r += gamma.contract(b.as_slice(), b.as_slice());
            }
            Ok(r)
        })
        .collect()
}

/// Sup over nodes of the Euclidean norm of [`harmonic_residual`].
pub fn harmonic_residual_sup(chart: &Chart, u: &DiscMap) -> Result<f64> {
    Ok(harmonic_residual(chart, u)?
        .iter()
        .map(|r| r.norm())
        .fold(0.0, f64::max))
}

/// `∇²ρ(u)(u_x, u_x) + ∇²ρ(u)(u_y, u_y)` at `node`, which equals `Δ(ρ∘u)` there
/// when `u` is harmonic. Fails if the harmonic residual at `node` exceeds `tol`.
pub fn laplacian_of_composition(
    chart: &Chart,
    rho: &dyn ScalarField,
    u: &DiscMap,
    node: usize,
    tol: f64,
) -> Result<f64> {
    if node >= u.grid.len() || u.grid.is_boundary(node) {
        return Err(Error::Argument(format!("node {node} is not an interior node")));
    }
    let x = u.point(node);
    let mut res = DVector::from_iterator(
        u.dim(),
        u.comps.iter().map(|c| u.grid.laplacian(c)[node]),
    );
    let (a, b) = (u.ux(node), u.uy(node));
    if !chart.is_flat() {
        let gamma = chart.christoffel_at(&x)?;
        res += gamma.contract(a.as_slice(), a.as_slice());
        res += gamma.contract(b.as_slice(), b.as_slice());
    }
    let r = res.norm();
    if r > tol {
        return Err(Error::Precondition(format!(
            "harmonic residual {r:e} at node {node} exceeds {tol:e}"
        )));
    }
    let h = chart.hessian_at(rho, &x)?;
    Ok(h.apply(&a, &a) + h.apply(&b, &b))
}

/// `ρ∘u` at every node.
pub fn compose(rho: &dyn ScalarField, u: &DiscMap) -> Result<Vec<f64>> {
    (0..u.grid.len()).map(|k| rho.value(&u.point(k))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubharmonicityReport {
    pub min_laplacian: f64,
    pub tolerance: f64,
    pub violating_nodes: Vec<usize>,
    pub pass: bool,
}

/// Passes iff the discrete Laplacian is `≥ −τ` at all interior nodes,
/// `τ = 1e−6·(sup|field| + 1)`.
pub fn subharmonicity_check(grid: &DiscGrid, field: &[f64]) -> SubharmonicityReport {
    let sup = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = 1e-6 * (sup + 1.0);
    let lap = grid.laplacian(field);
    let mut min_laplacian = f64::INFINITY;
    let mut violating_nodes = Vec::new();
    for (k, l) in lap.iter().enumerate().take(grid.interior_count()) {
        min_laplacian = min_laplacian.min(*l);
        if *l < -tolerance {
            violating_nodes.push(k);
        }
    }
    SubharmonicityReport {
        min_laplacian,
        tolerance,
        pass: violating_nodes.is_empty(),
        violating_nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Linear, NormSquared};
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use std::f64::consts::PI;

    fn grid() -> Arc<DiscGrid> {
        DiscGrid::new(32, 64).unwrap()
    }

    fn map3(f: impl Fn(f64, f64) -> [f64; 3]) -> DiscMap {
        DiscMap::from_fn(grid(), 3, |x, y| DVector::from_row_slice(&f(x, y))).unwrap()
    }

    #[test]
    fn residuals_of_harmonic_and_nonharmonic_maps() {
        let c = Chart::euclidean(3, 2.0);
        let inc = map3(|x, y| [x, y, 0.0]);
        assert!(harmonic_residual_sup(&c, &inc).unwrap() < 1e-10);
        let h = map3(|x, y| [x * x - y * y, 2.0 * x * y, 0.0]);
        assert!(harmonic_residual_sup(&c, &h).unwrap() < 1e-9);
        let q = map3(|x, _| [x * x, 0.0, 0.0]);
        let r = harmonic_residual(&c, &q).unwrap();
        for k in 0..q.grid().interior_count() {
            assert_relative_eq!(r[k][0], 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn energy_area_conformality_examples() {
        let c = Chart::euclidean(3, 3.0);
        let inc = map3(|x, y| [x, y, 0.0]);
        assert_relative_eq!(energy(&c, &inc).unwrap(), 2.0 * PI, epsilon = 1e-10);
        assert_relative_eq!(area(&c, &inc).unwrap(), PI, epsilon = 1e-10);
        assert!(conformality_defect(&c, &inc).unwrap() < 1e-12);
        let konst = map3(|_, _| [0.1, 0.2, 0.3]);
        assert!(energy(&c, &konst).unwrap() < 1e-25);
        assert!(matches!(area(&c, &konst), Err(Error::Immersion { .. })));
        let big = map3(|x, y| [2.0 * x, 2.0 * y, 0.0]);
        assert_relative_eq!(energy(&c, &big).unwrap(), 8.0 * PI, epsilon = 1e-10);
        assert_relative_eq!(area(&c, &big).unwrap(), 4.0 * PI, epsilon = 1e-10);
        let flip = map3(|x, y| [x, -y, 0.0]);
        assert!(conformality_defect(&c, &flip).unwrap() < 1e-12);
        let ell = map3(|x, y| [2.0 * x, y, 0.0]);
        assert_relative_eq!(area(&c, &ell).unwrap(), 2.0 * PI, epsilon = 1e-10);
        assert_relative_eq!(energy(&c, &ell).unwrap() / 2.0, 2.5 * PI, epsilon = 1e-10);
        assert_relative_eq!(conformality_defect(&c, &ell).unwrap(), 0.6, epsilon = 1e-10);
    }

    #[test]
    fn laplacian_of_composition_examples() {
        let c = Chart::euclidean(3, 2.0);
        let inc = map3(|x, y| [x, y, 0.0]);
        let v = laplacian_of_composition(&c, &NormSquared::centered(3), &inc, 0, 1e-8).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-10);
        let h = map3(|x, y| [x * x - y * y, 2.0 * x * y, x]);
        let lin = Linear::new(dvector![1.0, -2.0, 0.5], 0.3);
        for node in [0, 5, 400] {
            let v = laplacian_of_composition(&c, &lin, &h, node, 1e-6).unwrap();
            assert_eq!(v, 0.0);
        }
        let q = map3(|x, _| [x * x, 0.0, 0.0]);
        assert!(matches!(
            laplacian_of_composition(&c, &lin, &q, 0, 1e-6),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn scaling_law_is_exact_for_harmonic_polynomials() {
        let c = Chart::euclidean(3, 2.0);
        let rho = NormSquared::centered(3);
        let f = |x: f64, y: f64| [x + 0.3 * (x * x - y * y), y + 0.6 * x * y, 0.2 * x];
        let base = laplacian_of_composition(&c, &rho, &map3(f), 0, 1e-8).unwrap();
        for lambda in [0.5, 0.25, 0.8] {
            let scaled = map3(|x, y| f(lambda * x, lambda * y));
            let v = laplacian_of_composition(&c, &rho, &scaled, 0, 1e-8).unwrap();
            assert!((v - lambda * lambda * base).abs() < 1e-8);
        }
    }

    #[test]
    fn subharmonicity_examples() {
        let g = grid();
        let r = subharmonicity_check(&g, &g.sample(|x, y| x * x + y * y));
        assert!(r.pass);
        assert_relative_eq!(r.min_laplacian, 4.0, epsilon = 1e-8);
        let r = subharmonicity_check(&g, &g.sample(|x, y| -x * x - y * y));
        assert!(!r.pass);
        assert_eq!(r.violating_nodes.len(), g.interior_count());
        let r = subharmonicity_check(&g, &g.sample(|x, _| x));
        assert!(r.pass);
        assert!(r.min_laplacian.abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let u = map3(|x, y| [x, y * 0.5, x * y]);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,theta,u_1,u_2,u_3\n"));
        let back = DiscMap::read_csv(grid(), &buf[..]).unwrap();
        assert_eq!(back.components(), u.components());
    }

    #[test]
    fn jet_validation() {
        let c = Chart::euclidean(3, 1.0);
        let p = dvector![0.0, 0.0, 0.0];
        assert!(Jet1::new(&c, p.clone(), dvector![1.0, 0.0, 0.0], dvector![0.0, 1.0, 0.0]).is_ok());
        assert!(Jet1::new(&c, p.clone(), dvector![1.0, 0.0, 0.0], dvector![0.0, 2.0, 0.0]).is_err());
        assert!(Jet1::new(&c, p.clone(), dvector![1.0, 0.0, 0.0], dvector![1.0, 0.0, 0.0]).is_err());
        let j = Jet1::from_plane(&c, p, &dvector![1.0, 1.0, 0.0], &dvector![0.0, 1.0, 1.0], 0.5).unwrap();
        assert_relative_eq!(j.v1.dot(&j.v2), 0.0, epsilon = 1e-14);
        assert_relative_eq!(j.v2.norm(), 0.5, epsilon = 1e-14);
    }
}
