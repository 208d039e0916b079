#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{Matrix, Vector};

/// A moment `f(x)` whose filtered mean is being estimated.
pub trait MomentFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> Vector;
    /// `∫ f(x) N(x; mean, cov) dx` when it has a closed form.
    fn conditional(&self, mean: &Vector, cov: &Matrix) -> Option<Vector>;
}

/// `f(x) = x`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl MomentFunction for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, x: &Vector) -> Vector {
        x.clone()
    }

    fn conditional(&self, mean: &Vector, _cov: &Matrix) -> Option<Vector> {
        Some(mean.clone())
    }
}

/// `f(x) = c`.
#[derive(Debug, Clone)]
pub struct Constant(pub Vector);

impl MomentFunction for Constant {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn eval(&self, _x: &Vector) -> Vector {
        self.0.clone()
    }

    fn conditional(&self, _mean: &Vector, _cov: &Matrix) -> Option<Vector> {
        Some(self.0.clone())
    }
}

/// `f(x) = β₀ + β₁ x²` on a scalar state: the next-step ARCH variance.
#[derive(Debug, Clone, Copy)]
pub struct ArchVariance {
    pub beta0: f64,
    pub beta1: f64,
}

impl MomentFunction for ArchVariance {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &Vector) -> Vector {
        Vector::from_element(1, self.beta0 + self.beta1 * x[0] * x[0])
    }

    fn conditional(&self, mean: &Vector, cov: &Matrix) -> Option<Vector> {
        let m = mean[0];
        Some(Vector::from_element(1, self.beta0 + self.beta1 * (m * m + cov[(0, 0)])))
    }
}

/// `f(x) = β exp(x/2)` on a scalar state: the SV observation scale. The
/// conditional form is the Gaussian MGF `E[e^{X/2}] = e^{m/2 + P/8}`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledExpHalf {
    pub beta: f64,
}

impl MomentFunction for ScaledExpHalf {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &Vector) -> Vector {
        Vector::from_element(1, self.beta * (0.5 * x[0]).exp())
    }

    fn conditional(&self, mean: &Vector, cov: &Matrix) -> Option<Vector> {
        Some(Vector::from_element(
            1,
            self.beta * (0.5 * mean[0] + cov[(0, 0)] / 8.0).exp(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn mc_check<F: MomentFunction>(f: &F, m: f64, p: f64) {
        let mut rng = RngStream::new(5);
        let n = 200_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let x = Vector::from_element(1, m + p.sqrt() * rng.standard_normal());
            let v = f.eval(&x)[0];
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = f
            .conditional(&Vector::from_element(1, m), &Matrix::from_element(1, 1, p))
            .unwrap()[0];
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn closed_forms_match_sampling() {
        mc_check(&Identity(1), 0.7, 2.0);
        mc_check(&ArchVariance { beta0: 1.0, beta1: 0.1 }, -0.4, 1.5);
        mc_check(&ScaledExpHalf { beta: 0.6 }, 0.3, 0.5);
    }
}
