use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Two zero-mean Gaussians: a narrow spike (weight `pi`) and a wide slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub pi: f64,
    pub sigma_spike: f64,
    pub sigma_slab: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            pi: 0.5,
            sigma_spike: 0.25,
            sigma_slab: 1.0,
        }
    }
}

impl PriorConfig {
    pub fn new(pi: f64, sigma_spike: f64, sigma_slab: f64) -> Result<Self> {
        let p = Self {
            pi,
            sigma_spike,
            sigma_slab,
        };
        p.validate()?;
        Ok(p)
    }

    /// Degenerate mixture whose two components coincide: a plain `N(0, sigma^2)`.
    pub fn single_gaussian(sigma: f64) -> Self {
        Self {
            pi: 0.5,
            sigma_spike: sigma,
            sigma_slab: sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::invalid(format!(
                "prior pi must lie in (0, 1), got {}",
                self.pi
            )));
        }
        if !(self.sigma_spike > 0.0 && self.sigma_slab > 0.0) {
            return Err(Error::invalid("prior scales must be positive"));
        }
        if self.sigma_spike >= self.sigma_slab {
            return Err(Error::invalid(format!(
                "spike scale {} must be smaller than slab scale {}",
                self.sigma_spike, self.sigma_slab
            )));
        }
        Ok(())
    }

    fn component_logs(&self, w: f64) -> (f64, f64) {
        let a = self.pi.ln() + normal_log_pdf(w, self.sigma_spike);
        let b = (1.0 - self.pi).ln() + normal_log_pdf(w, self.sigma_slab);
        (a, b)
    }

    pub fn log_density(&self, w: f64) -> f64 {
        let (a, b) = self.component_logs(w);
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    }

    /// `(log p(w), d log p(w) / dw)` in one pass.
    pub fn log_density_and_grad(&self, w: f64) -> (f64, f64) {
        let (a, b) = self.component_logs(w);
        let m = a.max(b);
        let ea = (a - m).exp();
        let eb = (b - m).exp();
        let z = ea + eb;
        let ra = ea / z;
        let rb = eb / z;
        let grad = -w
            * (ra / (self.sigma_spike * self.sigma_spike)
                + rb / (self.sigma_slab * self.sigma_slab));
        (m + z.ln(), grad)
    }
}

fn normal_log_pdf(w: f64, sigma: f64) -> f64 {
    let z = w / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_mixture_is_standard_normal() {
        let p = PriorConfig::single_gaussian(1.0);
        assert!((p.log_density(0.0) + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((p.log_density(0.0) + 0.9189).abs() < 1e-4);
        assert!((p.log_density(1.3) - (-0.5 * 1.69 - LN_SQRT_2PI)).abs() < 1e-14);
    }

    #[test]
    fn default_mixture_at_zero() {
        // 0.5 * N(0; 0, 0.25^2) + 0.5 * N(0; 0, 1)
        let spike_pdf = 1.0 / (0.25 * (2.0 * std::f64::consts::PI).sqrt());
        let slab_pdf = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((spike_pdf - 1.59577).abs() < 1e-5 && (slab_pdf - 0.39894).abs() < 1e-5);
        let expected = (0.5 * spike_pdf + 0.5 * slab_pdf).ln();
        let got = PriorConfig::default().log_density(0.0);
        assert!((got - expected).abs() < 1e-14);
        assert!((got + 0.002648).abs() < 1e-6, "{got}");
    }

    #[test]
    fn validation() {
        assert!(PriorConfig::new(0.5, 0.25, 1.0).is_ok());
        assert!(PriorConfig::new(0.0, 0.25, 1.0).is_err());
        assert!(PriorConfig::new(0.5, 1.0, 1.0).is_err());
        assert!(PriorConfig::new(0.5, -0.1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn symmetric(w in -10.0f64..10.0) {
            let p = PriorConfig::default();
            prop_assert_eq!(p.log_density(w), p.log_density(-w));
        }

        #[test]
        fn gradient_matches_finite_difference(w in -4.0f64..4.0, pi in 0.05f64..0.95) {
            let p = PriorConfig::new(pi, 0.3, 1.7).unwrap();
            let h = 1e-6;
            let fd = (p.log_density(w + h) - p.log_density(w - h)) / (2.0 * h);
            let (v, g) = p.log_density_and_grad(w);
            prop_assert!((v - p.log_density(w)).abs() < 1e-14);
            prop_assert!((g - fd).abs() < 1e-6 * (1.0 + g.abs()));
        }
    }
}
