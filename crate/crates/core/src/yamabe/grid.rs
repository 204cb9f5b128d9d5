use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Discrete Fourier differentiation.
    Spectral,
    /// Fourth-order central differences.
    FiniteDifference4,
}

/// Node values of `u` on the circle of length `L`, sampled at `t_j = jL/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGrid {
    length: f64,
    scheme: Scheme,
    values: DVector<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

impl PeriodicGrid {
    pub fn new(length: f64, values: Vec<f64>, scheme: Scheme) -> Result<Self> {
        let n = values.len();
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Domain(format!("circle length must be positive, got {length}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("node count must be a power of two >= 8, got {n}")));
        }
        if let Some(j) = values.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Positivity { point: vec![j as f64 * length / n as f64], value: values[j] });
        }
        let (d1, d2) = match scheme {
            Scheme::Spectral => spectral_matrices(n, length),
            Scheme::FiniteDifference4 => fd4_matrices(n, length),
        };
        Ok(PeriodicGrid { length, scheme, values: DVector::from_vec(values), d1, d2 })
    }

    pub fn from_fn(length: f64, nodes: usize, scheme: Scheme, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = length / nodes as f64;
        Self::new(length, (0..nodes).map(|j| f(j as f64 * h)).collect(), scheme)
    }

    pub fn constant(length: f64, nodes: usize, scheme: Scheme, c: f64) -> Result<Self> {
        Self::new(length, vec![c; nodes], scheme)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.length / self.len() as f64;
        (0..self.len()).map(|j| j as f64 * h).collect()
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    // both operators annihilate constants; shifting by u₀ keeps that exact in floating point
    fn centered(&self) -> DVector<f64> {
        self.values.add_scalar(-self.values[0])
    }

    pub fn first_derivative(&self) -> DVector<f64> {
        &self.d1 * self.centered()
    }

    pub fn second_derivative(&self) -> DVector<f64> {
        &self.d2 * self.centered()
    }

    /// Same grid and operators with new node values.
    pub fn with_values(&self, values: DVector<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::Domain("node count mismatch".into()));
        }
        if let Some(j) = values.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Positivity { point: vec![self.nodes()[j]], value: values[j] });
        }
        Ok(PeriodicGrid { values, ..self.clone() })
    }

    /// Rotate node values by `shift` positions: `u'_j = u_{j−shift}`.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.len();
        let values = DVector::from_fn(n, |j, _| self.values[(j + n - shift % n) % n]);
        PeriodicGrid { values, ..self.clone() }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_node,u")?;
        for (t, u) in self.nodes().iter().zip(self.values.iter()) {
            writeln!(out, "{t:e},{u:e}")?;
        }
        Ok(())
    }
}

fn spectral_matrices(n: usize, length: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = 2.0 * PI / n as f64;
    let s = 2.0 * PI / length;
    let mut d1 = DMatrix::zeros(n, n);
    let mut d2 = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                d2[(j, k)] = (-PI * PI / (3.0 * h * h) - 1.0 / 6.0) * s * s;
            } else {
                let d = (j + n - k) % n;
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                let x = d as f64 * h / 2.0;
                d1[(j, k)] = 0.5 * sign / x.tan() * s;
                d2[(j, k)] = -0.5 * sign / x.sin().powi(2) * s * s;
            }
        }
    }
    (d1, d2)
}

fn fd4_matrices(n: usize, length: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = length / n as f64;
    let mut d1 = DMatrix::zeros(n, n);
    let mut d2 = DMatrix::zeros(n, n);
    for j in 0..n {
        let at = |o: isize| ((j as isize + o).rem_euclid(n as isize)) as usize;
        for (o, c) in [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)] {
            d1[(j, at(o))] += c / (12.0 * h);
        }
        for (o, c) in [(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)] {
            d2[(j, at(o))] += c / (12.0 * h * h);
        }
    }
    (d1, d2)
}
