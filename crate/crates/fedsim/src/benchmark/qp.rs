//! Distributed quadratic programming benchmark.
//!
//! Each component i carries an SPD matrix A_i and vector b_i with local
//! objective `f_i(x) = 1/2 x'A_i x + b_i'x`. The global optimum has the
//! closed form `x* = -(sum A_i)^-1 (sum b_i)`, which serves as the
//! convergence oracle for every algorithm.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamVector;
use crate::rng::{self, tag};
use crate::sgd::Objective;

/// Minimum admissible eigenvalue for a component matrix.
pub const EPSILON_SPD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpConfig {
    /// Number of quadratic components (the natural client count).
    pub num_components: usize,
    pub dim: usize,
    /// Eigenvalues are drawn log-uniformly from [1, conditioning].
    #[serde(default = "default_conditioning")]
    pub conditioning: f64,
    pub seed: u64,
}

fn default_conditioning() -> f64 {
    5.0
}

#[derive(Clone, Debug)]
pub struct QpComponent {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl QpComponent {
    /// `grad f_i(x) = A_i x + b_i`
    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) + self.b.dot(x)
    }
}

#[derive(Clone, Debug)]
pub struct QpSpec {
    pub dim: usize,
    pub components: Vec<QpComponent>,
}

impl QpSpec {
    /// Closed-form optimum of `sum_i f_i`.
    pub fn optimum(&self) -> Result<DVector<f64>> {
        let mut a_sum = DMatrix::<f64>::zeros(self.dim, self.dim);
        let mut b_sum = DVector::<f64>::zeros(self.dim);
        for comp in &self.components {
            a_sum += &comp.a;
            b_sum += &comp.b;
        }
        a_sum
            .lu()
            .solve(&(-b_sum))
            .ok_or_else(|| Error::Config("qp: singular aggregate matrix".into()))
    }

    /// Mean objective value over all components.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let n = self.components.len() as f64;
        self.components.iter().map(|c| c.value(x)).sum::<f64>() / n
    }

    /// Largest eigenvalue of the mean component matrix; `lr < 2 / lambda_max`
    /// keeps one-step-per-round gradient descent stable.
    pub fn mean_matrix_lambda_max(&self) -> f64 {
        let n = self.components.len() as f64;
        let mut mean = DMatrix::<f64>::zeros(self.dim, self.dim);
        for comp in &self.components {
            mean += &comp.a;
        }
        mean /= n;
        mean.symmetric_eigen().eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config("qp: needs at least one component".into()));
        }
        for (i, comp) in self.components.iter().enumerate() {
            if comp.a.nrows() != self.dim || comp.a.ncols() != self.dim || comp.b.len() != self.dim
            {
                return Err(Error::Shape(format!("qp component {i} has wrong dimensions")));
            }
            let sym_err = (&comp.a - comp.a.transpose()).abs().max();
            if sym_err > 1e-9 {
                return Err(Error::Config(format!(
                    "qp component {i} is not symmetric (max asymmetry {sym_err})"
                )));
            }
            let min_eig = comp
                .a
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < EPSILON_SPD {
                return Err(Error::Config(format!(
                    "qp component {i} min eigenvalue {min_eig} < {EPSILON_SPD}"
                )));
            }
        }
        Ok(())
    }
}

pub fn gen_qp(cfg: &QpConfig) -> Result<QpSpec> {
    if cfg.num_components == 0 || cfg.dim == 0 {
        return Err(Error::Config("qp: num_components and dim must be >= 1".into()));
    }
    if cfg.conditioning < 1.0 {
        return Err(Error::Config(format!(
            "qp: conditioning must be >= 1, got {}",
            cfg.conditioning
        )));
    }
    let d = cfg.dim;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut components = Vec::with_capacity(cfg.num_components);
    for i in 0..cfg.num_components {
        let a = if cfg.conditioning == 1.0 {
            // log-uniform on a point: all eigenvalues are exactly 1
            DMatrix::identity(d, d)
        } else {
            let mut mstream = rng::stream(cfg.seed, tag::BENCH, i as u64, 1);
            let raw = DMatrix::from_fn(d, d, |_, _| std_normal.sample(&mut mstream));
            let q = raw.qr().q();
            let ln_cond = cfg.conditioning.ln();
            let eigs =
                DVector::from_fn(d, |_, _| mstream.random_range(0.0..ln_cond).exp());
            let scaled = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
            // enforce exact symmetry against rounding
            (&scaled + scaled.transpose()) * 0.5
        };
        let mut bstream = rng::stream(cfg.seed, tag::BENCH, i as u64, 2);
        let b = DVector::from_fn(d, |_, _| std_normal.sample(&mut bstream));
        components.push(QpComponent { a, b });
    }
    let spec = QpSpec { dim: d, components };
    spec.validate()?;
    Ok(spec)
}

/// A client's owned QP components, as an SGD objective over component ids.
#[derive(Clone, Debug)]
pub struct QuadraticData {
    pub dim: usize,
    pub components: Vec<QpComponent>,
}

impl Objective for QuadraticData {
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.components.len()
    }

    fn loss(&self, params: &ParamVector, sample_ids: &[usize]) -> Result<f64> {
        let x = DVector::from_column_slice(params.values());
        let n = sample_ids.len() as f64;
        Ok(sample_ids.iter().map(|&i| self.components[i].value(&x)).sum::<f64>() / n)
    }

    fn gradient(&self, params: &ParamVector, sample_ids: &[usize]) -> Result<ParamVector> {
        let x = DVector::from_column_slice(params.values());
        let mut g = DVector::zeros(self.dim);
        for &i in sample_ids {
            g += self.components[i].grad(&x);
        }
        g /= sample_ids.len() as f64;
        Ok(ParamVector::from_vec(g.data.into()))
    }
}
