use std::fs;
use std::path::PathBuf;

use clap::Args;
use rcp_core::packet_sim::{
    oscillation_metrics, run as simulate, PacketSimConfig, DEFAULT_UPDATES_PER_RTT,
};
use serde::{Deserialize, Serialize};

use crate::args::VariantArg;
use crate::error::{CliError, Result};
use crate::output::{fmt17, opt, Provenance, Sink, F17, SCHEMA};

pub const TRACE_FILE: &str = "packet_trace.csv";
pub const SUMMARY_FILE: &str = "packet_summary.json";

/// Fraction of the trace used for the oscillation metrics.
const TAIL_FRACTION: f64 = 0.5;

/// Packet-simulator settings. Every field may also come from a flat TOML file
/// given with `--config`, using the same names with underscores; flags win.
///
/// Times are in milliseconds, rates in bytes per millisecond (1 Gbps is
/// 125000) and sizes in bytes.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Queue gain; defaults to 0.005.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Target utilization without queue feedback; defaults to 0.95.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Link capacity in bytes/ms; defaults to 1 Gbps.
    #[arg(long = "C", allow_negative_numbers = true)]
    #[serde(rename = "C")]
    pub capacity: Option<f64>,
    /// Defaults to 100.
    #[arg(long = "n-sources")]
    pub n_sources: Option<u32>,
    /// Round-trip time in ms; defaults to 100.
    #[arg(long, allow_negative_numbers = true)]
    pub rtt: Option<f64>,
    /// Defaults to 1000 bytes.
    #[arg(long = "packet-size", allow_negative_numbers = true)]
    pub packet_size: Option<f64>,
    /// Rate-update period in ms; defaults to rtt / 50.
    #[arg(long = "control-interval", allow_negative_numbers = true)]
    pub control_interval: Option<f64>,
    /// Simulated time in ms; defaults to 20000.
    #[arg(long, allow_negative_numbers = true)]
    pub duration: Option<f64>,
    /// Defaults to 1.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop-tail buffer in packets; unlimited when absent.
    #[arg(long = "buffer-limit")]
    pub buffer_limit: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl PacketArgs {
    /// Fields set here take precedence over `base`.
    fn over(&self, base: PacketArgs) -> PacketArgs {
        PacketArgs {
            config: self.config.clone(),
            variant: self.variant.or(base.variant),
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            gamma: self.gamma.or(base.gamma),
            capacity: self.capacity.or(base.capacity),
            n_sources: self.n_sources.or(base.n_sources),
            rtt: self.rtt.or(base.rtt),
            packet_size: self.packet_size.or(base.packet_size),
            control_interval: self.control_interval.or(base.control_interval),
            duration: self.duration.or(base.duration),
            seed: self.seed.or(base.seed),
            buffer_limit: self.buffer_limit.or(base.buffer_limit),
            out: self.out.clone(),
        }
    }

    /// Resolves the file, the flags and the defaults into a checked config.
    pub fn resolve(&self) -> Result<PacketSimConfig> {
        let merged = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let file: PacketArgs = toml::from_str(&text).map_err(|e| CliError::Config {
                    path: path.display().to_string(),
                    source: Box::new(e),
                })?;
                self.over(file)
            }
            None => self.clone(),
        };
        let variant = merged
            .variant
            .ok_or_else(|| CliError::flag("--variant", "required (flag or config file)"))?;
        let a = merged
            .a
            .ok_or_else(|| CliError::flag("--a", "required (flag or config file)"))?;
        let d = PacketSimConfig::new(variant.into(), a);
        let rtt = merged.rtt.unwrap_or(d.rtt);
        let cfg = PacketSimConfig {
            b: merged.b.unwrap_or(d.b),
            gamma: merged.gamma.unwrap_or(d.gamma),
            capacity: merged.capacity.unwrap_or(d.capacity),
            n_sources: merged.n_sources.unwrap_or(d.n_sources),
            rtt,
            packet_size: merged.packet_size.unwrap_or(d.packet_size),
            control_interval: merged
                .control_interval
                .unwrap_or(rtt / DEFAULT_UPDATES_PER_RTT),
            duration: merged.duration.unwrap_or(d.duration),
            seed: merged.seed.unwrap_or(d.seed),
            buffer_limit: merged.buffer_limit,
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Serialize)]
struct ConfigEcho {
    variant: &'static str,
    a: F17,
    b: Option<F17>,
    gamma: Option<F17>,
    #[serde(rename = "C")]
    capacity: F17,
    n_sources: u32,
    rtt: F17,
    packet_size: F17,
    control_interval: F17,
    duration: F17,
    seed: u64,
    buffer_limit: Option<u64>,
}

#[derive(Debug, Serialize)]
struct CountersOut {
    generated: u64,
    served: u64,
    queued_final: u64,
    dropped: u64,
    conserved: bool,
}

#[derive(Debug, Serialize)]
struct MetricsOut {
    tail_fraction: F17,
    rate_amplitude: F17,
    /// Rate amplitude over the equilibrium per-flow rate of the fluid model.
    relative_rate_amplitude: F17,
    queue_amplitude: F17,
    mean_rate: F17,
    mean_utilization: F17,
}

#[derive(Debug, Serialize)]
struct PacketSummary {
    schema: u32,
    config: ConfigEcho,
    equilibrium_rate: F17,
    counters: CountersOut,
    /// Absent when the run is too short to measure.
    metrics: Option<MetricsOut>,
    provenance: Provenance,
}

pub fn run(args: &PacketArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let trace = simulate(&cfg)?;
    let per_flow = cfg.equilibrium_load()? / cfg.n_sources as f64;
    let metrics = match oscillation_metrics(&trace, TAIL_FRACTION) {
        Ok(m) => Some(MetricsOut {
            tail_fraction: F17(TAIL_FRACTION),
            rate_amplitude: F17(m.rate_amplitude),
            relative_rate_amplitude: F17(m.rate_amplitude / per_flow),
            queue_amplitude: F17(m.queue_amplitude),
            mean_rate: F17(m.mean_rate),
            mean_utilization: F17(m.mean_utilization),
        }),
        Err(rcp_core::Error::WindowTooShort(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let with_queue = cfg.variant == rcp_core::Variant::WithQueue;
    let c = trace.counters;
    let summary = PacketSummary {
        schema: SCHEMA,
        config: ConfigEcho {
            variant: cfg.variant.name(),
            a: F17(cfg.a),
            b: opt(with_queue.then_some(cfg.b)),
            gamma: opt((!with_queue).then_some(cfg.gamma)),
            capacity: F17(cfg.capacity),
            n_sources: cfg.n_sources,
            rtt: F17(cfg.rtt),
            packet_size: F17(cfg.packet_size),
            control_interval: F17(cfg.control_interval),
            duration: F17(cfg.duration),
            seed: cfg.seed,
            buffer_limit: cfg.buffer_limit,
        },
        equilibrium_rate: F17(per_flow),
        counters: CountersOut {
            generated: c.generated,
            served: c.served,
            queued_final: c.queued_final,
            dropped: c.dropped,
            conserved: c.conserved(),
        },
        metrics,
        provenance: Provenance::new(Some(cfg.seed)),
    };
    let sink = Sink::new(args.out.clone())?;
    let rows = (0..trace.times.len()).map(|i| {
        vec![
            fmt17(trace.times[i]),
            trace.queue_packets[i].to_string(),
            fmt17(trace.rate_bytes_per_ms[i]),
        ]
    });
    sink.csv(TRACE_FILE, true, &["t_ms", "queue_pkts", "rate_Bpms"], rows)?;
    sink.json(SUMMARY_FILE, false, &summary)
}
