use crate::error::invalid;
use crate::Result;

/// Which feedback terms the router uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Rate mismatch plus mean-queue feedback, weighted by `b`.
    WithQueue,
    /// Rate mismatch only, aiming at a fraction `gamma` of capacity.
    WithoutQueue,
}

impl Variant {
    /// Short kebab-case name used in reports and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Variant::WithQueue => "with-queue",
            Variant::WithoutQueue => "without-queue",
        }
    }
}

/// Parameters of the single-bottleneck fluid model.
///
/// `b` is only read by [`Variant::WithQueue`] and `gamma` only by
/// [`Variant::WithoutQueue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    /// Rate-mismatch gain.
    pub a: f64,
    /// Queue-feedback gain.
    pub b: f64,
    /// Link capacity (rate units).
    pub capacity: f64,
    /// Common round-trip delay.
    pub tau: f64,
    /// Exogenous bifurcation parameter; scales the whole right-hand side.
    pub kappa: f64,
    /// Target utilization when queue feedback is absent.
    pub gamma: f64,
    /// Traffic variability in the mean-queue approximation.
    pub sigma2: f64,
    /// Feedback variant.
    pub variant: Variant,
}

impl FluidParams {
    /// Queue-feedback model with `kappa = 1` and unit variability.
    pub fn with_queue(a: f64, b: f64, capacity: f64, tau: f64) -> Self {
        FluidParams {
            a,
            b,
            capacity,
            tau,
            kappa: 1.0,
            gamma: 1.0,
            sigma2: 1.0,
            variant: Variant::WithQueue,
        }
    }

    /// Rate-mismatch-only model with `kappa = 1`.
    pub fn without_queue(a: f64, gamma: f64, capacity: f64, tau: f64) -> Self {
        FluidParams {
            a,
            b: 0.0,
            capacity,
            tau,
            kappa: 1.0,
            gamma,
            sigma2: 1.0,
            variant: Variant::WithoutQueue,
        }
    }

    /// Same parameters at a different value of the bifurcation parameter.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// Checks every range constraint relevant to the selected variant.
    pub fn validate(&self) -> Result<()> {
        positive("a", self.a)?;
        positive("capacity", self.capacity)?;
        positive("tau", self.tau)?;
        positive("kappa", self.kappa)?;
        positive("sigma2", self.sigma2)?;
        match self.variant {
            Variant::WithQueue => {
                if !(self.b >= 0.0) || !self.b.is_finite() {
                    return Err(invalid("b", "must be finite and >= 0"));
                }
            }
            Variant::WithoutQueue => {
                if !(self.gamma > 0.0 && self.gamma <= 1.0) {
                    return Err(invalid("gamma", "must lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be finite and > 0"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn rejects_negative_b() {
        let p = FluidParams::with_queue(1.0, -0.1, 10.0, 1.0);
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "b", .. })
        ));
    }

    #[test]
    fn gamma_ignored_with_queue() {
        let mut p = FluidParams::with_queue(1.0, 0.5, 10.0, 1.0);
        p.gamma = 7.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn rejects_gamma_out_of_range() {
        for g in [0.0, -0.5, 1.0001, f64::NAN] {
            let p = FluidParams::without_queue(1.0, g, 10.0, 1.0);
            assert!(p.validate().is_err(), "gamma {g}");
        }
        assert!(FluidParams::without_queue(1.0, 1.0, 10.0, 1.0)
            .validate()
            .is_ok());
    }
}
