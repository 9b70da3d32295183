//! Built-in metric kinds and their JSON description.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Chart, MetricField};
use crate::error::{Error, Result};

/// `{"dim": n, "box": [[lo, hi], ...], "metric": {"kind": ..., "params": {...}}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub dim: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub metric: MetricSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum MetricSpec {
    Euclidean {},
    Conformal {
        gradient: Vec<f64>,
    },
    Diagonal {
        constant: Vec<f64>,
        quadratic: Vec<Vec<f64>>,
    },
    PerturbedEuclidean {
        amplitude: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        width: Option<f64>,
    },
    ConstantCurvature {
        curvature: f64,
    },
}

impl ChartSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("chart definition: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("chart spec serializes")
    }

    pub fn build(&self) -> Result<Chart> {
        if self.bounds.len() != self.dim {
            return Err(Error::Config(format!(
                "box has {} intervals, dim is {}",
                self.bounds.len(),
                self.dim
            )));
        }
        let field = self.metric.field(self.dim)?;
        Chart::new(self.bounds.iter().map(|b| (b[0], b[1])).collect(), field)
    }
}

impl MetricSpec {
    pub fn field(&self, dim: usize) -> Result<Arc<dyn MetricField>> {
        let len_check = |what: &str, len: usize| {
            if len == dim {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} has length {len}, dim is {dim}")))
            }
        };
        Ok(match self {
            MetricSpec::Euclidean {} => Arc::new(Euclidean { dim }),
            MetricSpec::Conformal { gradient } => {
                len_check("gradient", gradient.len())?;
                Arc::new(Conformal {
                    gradient: gradient.clone(),
                })
            }
            MetricSpec::Diagonal {
                constant,
                quadratic,
            } => {
                len_check("constant", constant.len())?;
                len_check("quadratic", quadratic.len())?;
                for row in quadratic {
                    len_check("quadratic row", row.len())?;
                }
                Arc::new(Diagonal {
                    constant: constant.clone(),
                    quadratic: quadratic.clone(),
                })
            }
            MetricSpec::PerturbedEuclidean {
                amplitude,
                center,
                width,
            } => {
                let center = center.clone().unwrap_or_else(|| vec![0.0; dim]);
                len_check("center", center.len())?;
                let width = width.unwrap_or(1.0);
                if !(width > 0.0) {
                    return Err(Error::Config(format!("width must be positive, got {width}")));
                }
                Arc::new(PerturbedEuclidean::new(dim, *amplitude, center, width))
            }
            MetricSpec::ConstantCurvature { curvature } => Arc::new(ConstantCurvature {
                dim,
                curvature: *curvature,
            }),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Euclidean {
    pub dim: usize,
}

impl MetricField for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }
    fn tensor(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim))
    }
    fn derivatives(&self, _x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some(Ok(vec![DMatrix::zeros(self.dim, self.dim); self.dim]))
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn spec(&self) -> Option<MetricSpec> {
        Some(MetricSpec::Euclidean {})
    }
}

/// `g = exp(2 c·x) I`.
#[derive(Clone, Debug)]
pub struct Conformal {
    pub gradient: Vec<f64>,
}

impl Conformal {
    fn factor(&self, x: &DVector<f64>) -> f64 {
        (2.0 * self.gradient.iter().zip(x.iter()).map(|(c, v)| c * v).sum::<f64>()).exp()
    }
}

impl MetricField for Conformal {
    fn dim(&self) -> usize {
        self.gradient.len()
    }
    fn tensor(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::identity(n, n) * self.factor(x))
    }
    fn derivatives(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let n = self.dim();
        let f = self.factor(x);
        Some(Ok(self
            .gradient
            .iter()
            .map(|c| DMatrix::identity(n, n) * (2.0 * c * f))
            .collect()))
    }
    fn is_constant(&self) -> bool {
        self.gradient.iter().all(|c| *c == 0.0)
    }
    fn spec(&self) -> Option<MetricSpec> {
        Some(MetricSpec::Conformal {
            gradient: self.gradient.clone(),
        })
    }
}

/// `g_ii = c_i + Σ_j q_ij x_j²`, off-diagonal entries zero.
#[derive(Clone, Debug)]
pub struct Diagonal {
    pub constant: Vec<f64>,
    pub quadratic: Vec<Vec<f64>>,
}

impl MetricField for Diagonal {
    fn dim(&self) -> usize {
        self.constant.len()
    }
    fn tensor(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.constant[i]
                    + self.quadratic[i]
                        .iter()
                        .zip(x.iter())
                        .map(|(q, v)| q * v * v)
                        .sum::<f64>()
            } else {
                0.0
            }
        }))
    }
    fn derivatives(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let n = self.dim();
        Some(Ok((0..n)
            .map(|k| {
                DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        2.0 * self.quadratic[i][k] * x[k]
                    } else {
                        0.0
                    }
                })
            })
            .collect()))
    }
    fn is_constant(&self) -> bool {
        self.quadratic.iter().flatten().all(|q| *q == 0.0)
    }
    fn spec(&self) -> Option<MetricSpec> {
        Some(MetricSpec::Diagonal {
            constant: self.constant.clone(),
            quadratic: self.quadratic.clone(),
        })
    }
}

/// `g = I + a·exp(−|x−c|²/w²)·P` with `P_ii = 1`, `P_ij = 1/2`.
#[derive(Clone, Debug)]
pub struct PerturbedEuclidean {
    amplitude: f64,
    center: Vec<f64>,
    width: f64,
    pattern: DMatrix<f64>,
}

impl PerturbedEuclidean {
    pub fn new(dim: usize, amplitude: f64, center: Vec<f64>, width: f64) -> Self {
        assert_eq!(center.len(), dim);
        let pattern = DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.5 });
        Self {
            amplitude,
            center,
            width,
            pattern,
        }
    }

    fn bump(&self, x: &DVector<f64>) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(v, c)| (v - c) * (v - c))
            .sum();
        (-d2 / (self.width * self.width)).exp()
    }
}

impl MetricField for PerturbedEuclidean {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn tensor(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::identity(n, n) + &self.pattern * (self.amplitude * self.bump(x)))
    }
    fn derivatives(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let b = self.amplitude * self.bump(x);
        let w2 = self.width * self.width;
        Some(Ok((0..self.dim())
            .map(|k| &self.pattern * (b * (-2.0 * (x[k] - self.center[k]) / w2)))
            .collect()))
    }
    fn is_constant(&self) -> bool {
        self.amplitude == 0.0
    }
    fn spec(&self) -> Option<MetricSpec> {
        Some(MetricSpec::PerturbedEuclidean {
            amplitude: self.amplitude,
            center: Some(self.center.clone()),
            width: Some(self.width),
        })
    }
}

/// `g = 4 (1 + K|x|²)^{-2} I`, the stereographic model of curvature `K`.
#[derive(Clone, Debug)]
pub struct ConstantCurvature {
    pub dim: usize,
    pub curvature: f64,
}

impl ConstantCurvature {
    fn denominator(&self, x: &DVector<f64>) -> Result<f64> {
        let d = 1.0 + self.curvature * x.norm_squared();
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::domain(x.as_slice(), "outside the model of constant curvature"))
        }
    }
}

impl MetricField for ConstantCurvature {
    fn dim(&self) -> usize {
        self.dim
    }
    fn tensor(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let d = self.denominator(x)?;
        Ok(DMatrix::identity(self.dim, self.dim) * (4.0 / (d * d)))
    }
    fn derivatives(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some(self.denominator(x).map(|d| {
            let c = -16.0 * self.curvature / (d * d * d);
            (0..self.dim)
                .map(|k| DMatrix::identity(self.dim, self.dim) * (c * x[k]))
                .collect()
        }))
    }
    fn is_constant(&self) -> bool {
        self.curvature == 0.0
    }
    fn spec(&self) -> Option<MetricSpec> {
        Some(MetricSpec::ConstantCurvature {
            curvature: self.curvature,
        })
    }
}

/// Metric of the affine chart `y ↦ o + M y`, scaled: `factor · Mᵀ g(o + M y) M`.
#[derive(Clone, Debug)]
pub struct AffinePullback {
    base: Chart,
    origin: DVector<f64>,
    m: DMatrix<f64>,
    mt: DMatrix<f64>,
    factor: f64,
}

impl AffinePullback {
    pub fn new(base: Chart, origin: DVector<f64>, m: DMatrix<f64>, factor: f64) -> Self {
        let mt = m.transpose();
        Self {
            base,
            origin,
            m,
            mt,
            factor,
        }
    }

    pub fn to_base(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.m * y
    }
}

impl MetricField for AffinePullback {
    fn dim(&self) -> usize {
        self.m.ncols()
    }
    fn tensor(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.base.metric_at(&self.to_base(y))?;
        Ok(&self.mt * g * &self.m * self.factor)
    }
    fn derivatives(&self, y: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        if !self.base.is_flat() && self.base.field().derivatives(&self.origin).is_none() {
            return None;
        }
        let n = self.dim();
        Some(self.base.metric_derivatives(&self.to_base(y)).map(|dg| {
            (0..n)
                .map(|k| {
                    let mut s = DMatrix::zeros(n, n);
                    for (mm, d) in dg.iter().enumerate() {
                        let c = self.m[(mm, k)];
                        if c != 0.0 {
                            s += d * c;
                        }
                    }
                    &self.mt * s * &self.m * self.factor
                })
                .collect()
        }))
    }
    fn is_constant(&self) -> bool {
        self.base.is_flat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn json_round_trip_for_every_kind() {
        let docs = [
            r#"{"dim":2,"box":[[-1,1],[-1,1]],"metric":{"kind":"euclidean","params":{}}}"#,
            r#"{"dim":2,"box":[[-2,2],[-2,2]],"metric":{"kind":"conformal","params":{"gradient":[1,0]}}}"#,
            r#"{"dim":2,"box":[[0.5,4],[-2,2]],"metric":{"kind":"diagonal","params":{"constant":[1,0],"quadratic":[[0,0],[1,0]]}}}"#,
            r#"{"dim":3,"box":[[-2,2],[-2,2],[-2,2]],"metric":{"kind":"perturbed_euclidean","params":{"amplitude":0.05}}}"#,
            r#"{"dim":3,"box":[[-0.9,0.9],[-0.9,0.9],[-0.9,0.9]],"metric":{"kind":"constant_curvature","params":{"curvature":-1}}}"#,
        ];
        for doc in docs {
            let spec = ChartSpec::from_json(doc).unwrap();
            let chart = spec.build().unwrap();
            let again = ChartSpec::from_json(&chart.spec().unwrap().to_json()).unwrap();
            let c2 = again.build().unwrap();
            let x = DVector::from_iterator(spec.dim, spec.bounds.iter().map(|b| 0.3 * b[0] + 0.7 * b[1]));
            assert_eq!(chart.metric_at(&x).unwrap(), c2.metric_at(&x).unwrap());
        }
    }

    #[test]
    fn unknown_kind_and_bad_lengths_are_config_errors() {
        let bad = [
            r#"{"dim":2,"box":[[-1,1],[-1,1]],"metric":{"kind":"kahler","params":{}}}"#,
            r#"{"dim":2,"box":[[-1,1]],"metric":{"kind":"euclidean","params":{}}}"#,
            r#"{"dim":2,"box":[[-1,1],[-1,1]],"metric":{"kind":"conformal","params":{"gradient":[1]}}}"#,
        ];
        for doc in bad {
            let r = ChartSpec::from_json(doc).and_then(|s| s.build());
            assert!(matches!(r, Err(Error::Config(_))), "{doc}");
        }
    }

    #[test]
    fn hyperbolic_model_values() {
        let c = ConstantCurvature {
            dim: 2,
            curvature: -1.0,
        };
        let g = c.tensor(&dvector![0.5, 0.0]).unwrap();
        assert_relative_eq!(g[(0, 0)], 4.0 / 0.5625, epsilon = 1e-14);
        assert!(c.tensor(&dvector![1.0, 0.5]).is_err());
    }

    #[test]
    fn affine_pullback_of_scaled_metric() {
        let chart = Chart::new(
            vec![(-2.0, 2.0); 2],
            Arc::new(Diagonal {
                constant: vec![4.0, 4.0],
                quadratic: vec![vec![0.0; 2]; 2],
            }),
        )
        .unwrap();
        let p = chart
            .affine_pullback(&dvector![1.0, 0.0], &(DMatrix::identity(2, 2) * 0.5), 1.0)
            .unwrap();
        assert_relative_eq!(p.bounds()[0].1, 2.0);
        assert_relative_eq!(p.metric_at(&dvector![0.0, 0.0]).unwrap(), DMatrix::identity(2, 2));
    }
}
