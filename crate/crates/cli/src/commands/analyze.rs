use std::path::PathBuf;

use rcp_core::fluid_model::equilibrium;
use rcp_core::hopf::hopf_report;
use rcp_core::linear_analysis::{
    convergence_rate, kappa_c_closed_form, robust_stability, stability,
};
use rcp_core::Variant;
use serde::Serialize;

use crate::args::{FluidArgs, InputsEcho};
use crate::error::Result;
use crate::output::{f17s, opt, Provenance, Sink, F17, SCHEMA};

pub const FILE: &str = "analysis.json";

#[derive(Debug, Serialize)]
pub struct EquilibriumOut {
    pub rate: F17,
    pub utilization: F17,
    /// `b` actually used, after any conversion from `--rho-star`.
    pub b: Option<F17>,
}

#[derive(Debug, Serialize)]
pub struct StabilityOut {
    pub stable: bool,
    pub margin: F17,
    pub kappa_c: F17,
    pub kappa_c_closed_form: Option<F17>,
    pub effective_gain: F17,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceOut {
    pub sigma: F17,
    pub branch: &'static str,
    pub candidates: Vec<F17>,
}

#[derive(Debug, Serialize)]
pub struct HopfOut {
    pub kappa_c: F17,
    pub mu2: F17,
    pub mu2_closed_form: Option<F17>,
    pub criticality: &'static str,
    pub amplitude_coefficient: Option<F17>,
}

/// Everything `analyze` knows about one parameter set.
#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub inputs: InputsEcho,
    pub equilibrium: EquilibriumOut,
    pub stability: StabilityOut,
    pub convergence: ConvergenceOut,
    pub robust: bool,
    pub hopf: HopfOut,
    pub provenance: Provenance,
}

pub fn analysis_report(args: &FluidArgs) -> Result<AnalysisReport> {
    let p = args.params()?;
    let eq = equilibrium(&p)?;
    let st = stability(&p)?;
    let closed = match p.variant {
        // the closed form assumes unit variability
        Variant::WithQueue if p.sigma2 == 1.0 => Some(kappa_c_closed_form(p.a, p.b)?),
        _ => None,
    };
    let conv = convergence_rate(st.effective_gain, p.tau)?;
    let hopf = hopf_report(&p)?;
    Ok(AnalysisReport {
        schema: SCHEMA,
        inputs: args.echo(),
        equilibrium: EquilibriumOut {
            rate: F17(eq.rate),
            utilization: F17(eq.utilization),
            b: (p.variant == Variant::WithQueue).then_some(F17(p.b)),
        },
        stability: StabilityOut {
            stable: st.stable,
            margin: F17(st.margin),
            kappa_c: F17(st.kappa_c),
            kappa_c_closed_form: opt(closed),
            effective_gain: F17(st.effective_gain),
        },
        convergence: ConvergenceOut {
            sigma: F17(conv.sigma),
            branch: conv.branch.name(),
            candidates: f17s(&conv.candidates),
        },
        robust: robust_stability(&p)?,
        hopf: HopfOut {
            kappa_c: F17(hopf.kappa_c),
            mu2: F17(hopf.mu2),
            mu2_closed_form: opt(hopf.mu2_closed_form),
            criticality: hopf.criticality.name(),
            amplitude_coefficient: opt(hopf.amplitude_coefficient),
        },
        provenance: Provenance::new(None),
    })
}

pub fn run(args: &FluidArgs, out: Option<PathBuf>) -> Result<()> {
    let report = analysis_report(args)?;
    let sink = Sink::new(out)?;
    sink.json(FILE, true, &report)
}
