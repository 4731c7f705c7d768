/// `eps * (d ln(1/eps))^(1/d)`.
pub fn sigma(epsilon: f64, dim: usize) -> f64 {
    epsilon * (dim as f64 * (1.0 / epsilon).ln()).powf(1.0 / dim as f64)
}

/// Interaction and partition scales along a decreasing sequence of `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSchedule {
    pub beta: f64,
    pub dim: usize,
    pub epsilons: Vec<f64>,
}

impl ScaleSchedule {
    pub fn new(beta: f64, dim: usize, epsilons: Vec<f64>) -> Self {
        ScaleSchedule { beta, dim, epsilons }
    }

    /// `beta * sigma(eps)`.
    pub fn s(&self, epsilon: f64) -> f64 {
        self.beta * sigma(epsilon, self.dim)
    }

    /// `s(eps) / (4 sqrt(d))`, the scale of the coarse partition.
    pub fn s_coarse(&self, epsilon: f64) -> f64 {
        self.s(epsilon) / (4.0 * (self.dim as f64).sqrt())
    }

    /// The schedule whose `s` is this schedule's `s_coarse`.
    pub fn coarse(&self) -> ScaleSchedule {
        ScaleSchedule {
            beta: self.beta / (4.0 * (self.dim as f64).sqrt()),
            ..self.clone()
        }
    }

    pub fn largest_s(&self) -> f64 {
        self.epsilons.iter().map(|&e| self.s(e)).fold(0.0, f64::max)
    }
}
