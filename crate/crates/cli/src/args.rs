use clap::{Args, ValueEnum};
use rcp_core::fluid_model::b_for_utilization;
use rcp_core::{FluidParams, Variant};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{opt, F17};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    WithQueue,
    WithoutQueue,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::WithQueue => Variant::WithQueue,
            VariantArg::WithoutQueue => Variant::WithoutQueue,
        }
    }
}

/// Flags describing one fluid model.
#[derive(Debug, Clone, Args)]
pub struct FluidArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Rate-mismatch gain.
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    /// Queue gain (queue variant).
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Target equilibrium utilization, converted to `b` (queue variant).
    #[arg(long = "rho-star", conflicts_with = "b", allow_negative_numbers = true)]
    pub rho_star: Option<f64>,
    /// Target utilization (queue-free variant).
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Link capacity.
    #[arg(long = "C", allow_negative_numbers = true)]
    pub capacity: f64,
    /// Round-trip delay.
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub kappa: f64,
    /// Traffic variability in the mean-queue term.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma2: f64,
}

/// Flag values as given, echoed into reports.
#[derive(Debug, Serialize)]
pub struct InputsEcho {
    pub variant: VariantArg,
    pub a: F17,
    pub b: Option<F17>,
    pub rho_star: Option<F17>,
    pub gamma: Option<F17>,
    #[serde(rename = "C")]
    pub capacity: F17,
    pub tau: F17,
    pub kappa: F17,
    pub sigma2: F17,
}

impl FluidArgs {
    pub fn params(&self) -> Result<FluidParams> {
        let p = match self.variant {
            VariantArg::WithQueue => {
                if self.gamma.is_some() {
                    return Err(CliError::flag(
                        "--gamma",
                        "only used by --variant without-queue",
                    ));
                }
                let b = match (self.b, self.rho_star) {
                    (Some(b), None) => b,
                    (None, Some(rho)) => {
                        if !(self.sigma2 > 0.0) {
                            return Err(CliError::flag("--sigma2", "must be > 0"));
                        }
                        b_for_utilization(rho)? / self.sigma2
                    }
                    (None, None) => {
                        return Err(CliError::flag(
                            "--b",
                            "the queue variant needs --b or --rho-star",
                        ))
                    }
                    (Some(_), Some(_)) => {
                        return Err(CliError::flag("--rho-star", "cannot be combined with --b"))
                    }
                };
                FluidParams {
                    sigma2: self.sigma2,
                    ..FluidParams::with_queue(self.a, b, self.capacity, self.tau)
                }
            }
            VariantArg::WithoutQueue => {
                if self.b.is_some() {
                    return Err(CliError::flag("--b", "only used by --variant with-queue"));
                }
                if self.rho_star.is_some() {
                    return Err(CliError::flag(
                        "--rho-star",
                        "only used by --variant with-queue",
                    ));
                }
                let gamma = self.gamma.ok_or_else(|| {
                    CliError::flag("--gamma", "the queue-free variant needs --gamma")
                })?;
                FluidParams {
                    sigma2: self.sigma2,
                    ..FluidParams::without_queue(self.a, gamma, self.capacity, self.tau)
                }
            }
        }
        .with_kappa(self.kappa);
        p.validate()?;
        Ok(p)
    }

    pub fn echo(&self) -> InputsEcho {
        InputsEcho {
            variant: self.variant,
            a: F17(self.a),
            b: opt(self.b),
            rho_star: opt(self.rho_star),
            gamma: opt(self.gamma),
            capacity: F17(self.capacity),
            tau: F17(self.tau),
            kappa: F17(self.kappa),
            sigma2: F17(self.sigma2),
        }
    }
}
