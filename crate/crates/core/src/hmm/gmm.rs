use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// One diagonal Gaussian with its mixture weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ComponentRepr", into = "ComponentRepr")]
pub struct Component {
    weight: f64,
    mean: Vec<f64>,
    variance: Vec<f64>,
    // ln w − ½ Σ ln(2π v_d)
    log_const: f64,
    inv_var: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ComponentRepr {
    weight: f64,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl From<ComponentRepr> for Component {
    fn from(r: ComponentRepr) -> Self {
        Component::new(r.weight, r.mean, r.variance)
    }
}

impl From<Component> for ComponentRepr {
    fn from(c: Component) -> Self {
        ComponentRepr {
            weight: c.weight,
            mean: c.mean,
            variance: c.variance,
        }
    }
}

impl Component {
    pub fn new(weight: f64, mean: Vec<f64>, variance: Vec<f64>) -> Self {
        let log_const = weight.ln() - 0.5 * variance.iter().map(|v| LN_2PI + v.ln()).sum::<f64>();
        let inv_var = variance.iter().map(|v| 1.0 / v).collect();
        Self {
            weight,
            mean,
            variance,
            log_const,
            inv_var,
        }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// `ln w + ln N(x; μ, diag v)`; `-inf` for zero weight.
    pub fn weighted_log_density(&self, x: &[f64]) -> f64 {
        if self.weight <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let quad: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.inv_var)
            .map(|((x, m), iv)| (x - m) * (x - m) * iv)
            .sum();
        self.log_const - 0.5 * quad
    }
}

/// Emitting HMM state: a Gaussian mixture plus its self-loop probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmState {
    pub loop_prob: f64,
    pub components: Vec<Component>,
}

impl HmmState {
    /// Best component and its score under the max approximation.
    pub fn best_component(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, c) in self.components.iter().enumerate() {
            let s = c.weighted_log_density(x);
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }

    pub fn log_emission(&self, x: &[f64]) -> f64 {
        self.best_component(x).1
    }

    pub fn log_loop(&self) -> f64 {
        self.loop_prob.ln()
    }

    pub fn log_forward(&self) -> f64 {
        (1.0 - self.loop_prob).ln()
    }

    pub fn check(&self, dim: usize, floor: &[f64]) -> Result<()> {
        if !(self.loop_prob > 0.0 && self.loop_prob < 1.0) {
            return Err(Error::invalid(format!("loop probability {} outside (0,1)", self.loop_prob)));
        }
        if self.components.is_empty() {
            return Err(Error::invalid("state without mixture components"));
        }
        let total: f64 = self.components.iter().map(Component::weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights sum to {total}")));
        }
        for c in &self.components {
            if c.mean.len() != dim || c.variance.len() != dim {
                return Err(Error::Shape(format!("component dimension differs from {dim}")));
            }
            if c.weight < 0.0 || !c.mean.iter().all(|m| m.is_finite()) {
                return Err(Error::invalid("bad component weight or mean"));
            }
            if c.variance.iter().zip(floor).any(|(v, f)| !(v.is_finite() && v >= f)) {
                return Err(Error::invalid("variance below floor"));
            }
        }
        Ok(())
    }
}

/// Sufficient statistics for one component.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ComponentStats {
    pub count: f64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl ComponentStats {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn merge(&mut self, other: &ComponentStats) {
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    /// ML mean and floored variance. Requires `count > 0`.
    pub fn estimate(&self, floor: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mean: Vec<f64> = self.sum.iter().map(|s| s / self.count).collect();
        let var = self
            .sum_sq
            .iter()
            .zip(&mean)
            .zip(floor)
            .map(|((q, m), f)| (q / self.count - m * m).max(*f))
            .collect();
        (mean, var)
    }
}
