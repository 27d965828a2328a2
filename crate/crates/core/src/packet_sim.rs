//! Discrete-event simulation of one RCP router fed by Poisson sources.
//!
//! The router serves a FIFO queue at link capacity and recomputes the
//! advertised per-flow rate `R` every control interval. A new `R` reaches the
//! sources half a round trip later and their packets need another half round
//! trip to reach the router, so the router sees arrivals driven by the rate it
//! advertised one full `rtt` earlier. Propagation is deterministic, so the
//! simulation generates packets directly at the router with that lag.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::invalid;
use crate::fluid_model::equilibrium;
use crate::{Error, FluidParams, Result, Variant};

/// 1 Gbps in bytes per millisecond.
pub const GBPS: f64 = 125_000.0;

/// Rate updates per round trip unless configured otherwise. Coarser updates
/// add effective loop delay: at ten per rtt the onset of oscillation sits
/// about 8% below the fluid prediction without queue feedback, at fifty it is
/// within 3%.
pub const DEFAULT_UPDATES_PER_RTT: f64 = 50.0;

/// Simulation settings. Times are in milliseconds, sizes in bytes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSimConfig {
    /// Link capacity in bytes/ms.
    pub capacity: f64,
    /// Number of Poisson sources.
    pub n_sources: u32,
    /// Common round-trip time.
    pub rtt: f64,
    /// Rate-mismatch gain.
    pub a: f64,
    /// Queue gain (with queue feedback).
    pub b: f64,
    /// Target utilization (without queue feedback).
    pub gamma: f64,
    /// Packet size.
    pub packet_size: f64,
    /// Time between rate updates at the router.
    pub control_interval: f64,
    /// Simulated time.
    pub duration: f64,
    /// PRNG seed.
    pub seed: u64,
    /// Feedback variant.
    pub variant: Variant,
    /// Buffer size in packets, including the one in service.
    pub buffer_limit: Option<u64>,
}

impl PacketSimConfig {
    /// 1 Gbps, 100 sources, 100 ms rtt, `b = 0.005`, `gamma = 0.95`,
    /// 1000-byte packets, 20 s of simulated time and
    /// [`DEFAULT_UPDATES_PER_RTT`] rate updates per rtt.
    pub fn new(variant: Variant, a: f64) -> Self {
        let rtt = 100.0;
        PacketSimConfig {
            capacity: GBPS,
            n_sources: 100,
            rtt,
            a,
            b: 0.005,
            gamma: 0.95,
            packet_size: 1000.0,
            control_interval: rtt / DEFAULT_UPDATES_PER_RTT,
            duration: 20_000.0,
            seed: 1,
            variant,
            buffer_limit: None,
        }
    }

    /// Checks the documented invariants.
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.capacity) {
            return Err(invalid("capacity", "must be finite and > 0"));
        }
        if self.n_sources == 0 {
            return Err(invalid("n_sources", "must be >= 1"));
        }
        if !positive(self.rtt) {
            return Err(invalid("rtt", "must be finite and > 0"));
        }
        if !positive(self.a) {
            return Err(invalid("a", "must be finite and > 0"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(invalid("b", "must be finite and >= 0"));
        }
        if self.variant == Variant::WithQueue && self.b == 0.0 {
            return Err(invalid("b", "must be > 0 with queue feedback"));
        }
        if self.variant == Variant::WithoutQueue && !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid("gamma", "must lie in (0, 1]"));
        }
        if !positive(self.packet_size) {
            return Err(invalid("packet_size", "must be finite and > 0"));
        }
        if !positive(self.control_interval) {
            return Err(invalid("control_interval", "must be finite and > 0"));
        }
        if !positive(self.duration) {
            return Err(invalid("duration", "must be finite and > 0"));
        }
        if self.buffer_limit == Some(0) {
            return Err(invalid("buffer_limit", "must be >= 1"));
        }
        Ok(())
    }

    /// Equilibrium aggregate rate of the matching fluid model, bytes/ms.
    pub fn equilibrium_load(&self) -> Result<f64> {
        let fluid = match self.variant {
            Variant::WithQueue => FluidParams::with_queue(self.a, self.b, self.capacity, self.rtt),
            Variant::WithoutQueue => {
                FluidParams::without_queue(self.a, self.gamma, self.capacity, self.rtt)
            }
        };
        Ok(equilibrium(&fluid)?.rate)
    }
}

/// Packet counters. `generated = served + queued_final + dropped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Packets that reached the router.
    pub generated: u64,
    /// Packets that finished service.
    pub served: u64,
    /// Packets in the buffer (including service) at the end.
    pub queued_final: u64,
    /// Packets refused by a full buffer.
    pub dropped: u64,
}

impl Counters {
    /// Whether the conservation identity holds.
    pub fn conserved(&self) -> bool {
        self.generated == self.served + self.queued_final + self.dropped
    }
}

/// Router state sampled after every rate update.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketTrace {
    /// Configuration that produced the trace.
    pub config: PacketSimConfig,
    /// Sample times.
    pub times: Vec<f64>,
    /// Backlog in packets, including the one in service.
    pub queue_packets: Vec<u64>,
    /// Advertised per-flow rate in bytes/ms.
    pub rate_bytes_per_ms: Vec<f64>,
    /// Cumulative bytes served.
    pub served_bytes: Vec<f64>,
    /// End-of-run counters.
    pub counters: Counters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Service,
    Control,
    Delivery,
    Arrival,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    source: u32,
    epoch: u64,
}

impl Event {
    fn key(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.source.cmp(&other.source))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed: BinaryHeap is a max-heap and we want the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key(self)
    }
}

struct Source {
    rng: ChaCha8Rng,
}

impl Source {
    /// Exponential variate with the given mean.
    fn exp(&mut self, mean: f64) -> f64 {
        // Uniform on (0, 1], so the log is finite.
        let u = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        -mean * libm::log(u)
    }
}

/// Runs the simulation.
pub fn run(config: &PacketSimConfig) -> Result<PacketTrace> {
    config.validate()?;
    let cfg = *config;
    let n = cfg.n_sources as usize;
    let c = cfg.capacity;
    let dt = cfg.control_interval;
    let service_time = cfg.packet_size / c;
    let r_min = c / (1e6 * n as f64);
    let target = match cfg.variant {
        Variant::WithQueue => c,
        Variant::WithoutQueue => cfg.gamma * c,
    };
    let gain = cfg.a * dt / (cfg.rtt * target);

    let mut rate = (cfg.equilibrium_load()? / n as f64).clamp(r_min, c);
    // Rate the sources are currently driven by (lags `rate` by one rtt).
    let mut source_rate = rate;
    let mut epoch = 0u64;

    let mut sources: Vec<Source> = (0..n)
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(id as u64);
            Source { rng }
        })
        .collect();

    let mut heap = BinaryHeap::new();
    let mean_gap = |r: f64| cfg.packet_size / r;
    for (id, src) in sources.iter_mut().enumerate() {
        heap.push(Event {
            time: src.exp(mean_gap(source_rate)),
            kind: Kind::Arrival,
            source: id as u32,
            epoch,
        });
    }
    let mut updates = 1u64;
    heap.push(Event {
        time: dt,
        kind: Kind::Control,
        source: 0,
        epoch: 0,
    });
    // Advertised rates waiting to reach the sources, oldest first.
    let mut in_flight: alloc::collections::VecDeque<f64> = alloc::collections::VecDeque::new();

    let mut counters = Counters::default();
    let mut queue = 0u64;
    let mut arrived_bytes = 0.0;
    let mut served_bytes = 0.0;

    let samples = libm::floor(cfg.duration / dt) as usize + 1;
    let mut trace = PacketTrace {
        config: cfg,
        times: Vec::with_capacity(samples),
        queue_packets: Vec::with_capacity(samples),
        rate_bytes_per_ms: Vec::with_capacity(samples),
        served_bytes: Vec::with_capacity(samples),
        counters,
    };
    trace.times.push(0.0);
    trace.queue_packets.push(0);
    trace.rate_bytes_per_ms.push(rate);
    trace.served_bytes.push(0.0);

    while let Some(ev) = heap.pop() {
        if ev.time > cfg.duration {
            break;
        }
        match ev.kind {
            Kind::Service => {
                queue -= 1;
                counters.served += 1;
                served_bytes += cfg.packet_size;
                if queue > 0 {
                    heap.push(Event {
                        time: ev.time + service_time,
                        kind: Kind::Service,
                        source: 0,
                        epoch: 0,
                    });
                }
            }
            Kind::Arrival => {
                if ev.epoch != epoch {
                    continue;
                }
                counters.generated += 1;
                arrived_bytes += cfg.packet_size;
                if cfg.buffer_limit.is_some_and(|limit| queue >= limit) {
                    counters.dropped += 1;
                } else {
                    queue += 1;
                    if queue == 1 {
                        heap.push(Event {
                            time: ev.time + service_time,
                            kind: Kind::Service,
                            source: 0,
                            epoch: 0,
                        });
                    }
                }
                let src = &mut sources[ev.source as usize];
                heap.push(Event {
                    time: ev.time + src.exp(mean_gap(source_rate)),
                    kind: Kind::Arrival,
                    source: ev.source,
                    epoch,
                });
            }
            Kind::Control => {
                let load = arrived_bytes / dt;
                arrived_bytes = 0.0;
                let mismatch = match cfg.variant {
                    Variant::WithQueue => c - load - cfg.b * c * queue as f64,
                    Variant::WithoutQueue => target - load,
                };
                rate = (rate * (1.0 + gain * mismatch)).clamp(r_min, c);
                in_flight.push_back(rate);
                heap.push(Event {
                    time: ev.time + cfg.rtt,
                    kind: Kind::Delivery,
                    source: 0,
                    epoch: 0,
                });
                trace.times.push(ev.time);
                trace.queue_packets.push(queue);
                trace.rate_bytes_per_ms.push(rate);
                trace.served_bytes.push(served_bytes);
                updates += 1;
                heap.push(Event {
                    time: updates as f64 * dt,
                    kind: Kind::Control,
                    source: 0,
                    epoch: 0,
                });
            }
            Kind::Delivery => {
                source_rate = in_flight.pop_front().expect("delivery without update");
                // Exponential gaps are memoryless, so every source can simply
                // redraw its next arrival at the new rate.
                epoch += 1;
                for (id, src) in sources.iter_mut().enumerate() {
                    heap.push(Event {
                        time: ev.time + src.exp(mean_gap(source_rate)),
                        kind: Kind::Arrival,
                        source: id as u32,
                        epoch,
                    });
                }
            }
        }
    }

    counters.queued_final = queue;
    trace.counters = counters;
    Ok(trace)
}

/// Oscillation summary of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationMetrics {
    /// Half peak-to-trough of the rtt-smoothed advertised rate, bytes/ms.
    pub rate_amplitude: f64,
    /// Half peak-to-trough of the rtt-smoothed queue, packets.
    pub queue_amplitude: f64,
    /// Mean of the smoothed rate over the tail, bytes/ms.
    pub mean_rate: f64,
    /// Served bytes over capacity across the tail.
    pub mean_utilization: f64,
}

/// Amplitudes over the last `tail_fraction` of the trace after a centred
/// one-rtt moving average.
pub fn oscillation_metrics(trace: &PacketTrace, tail_fraction: f64) -> Result<OscillationMetrics> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(invalid("tail_fraction", "must lie in (0, 1]"));
    }
    let cfg = &trace.config;
    let len = trace.times.len();
    if len < 2 || trace.times[len - 1] < 20.0 * cfg.rtt {
        return Err(Error::WindowTooShort("trace must span more than 20 rtts"));
    }
    let step = trace.times[1] - trace.times[0];
    let window = (libm::round(cfg.rtt / step) as usize).max(1);
    let count = (libm::ceil(tail_fraction * len as f64) as usize).min(len);
    if count <= window {
        return Err(Error::WindowTooShort("tail shorter than one rtt"));
    }
    let start = len - count;

    let queue: Vec<f64> = trace.queue_packets.iter().map(|&q| q as f64).collect();
    let swing = |xs: &[f64]| {
        let smoothed = moving_average(&xs[start..], window);
        let (lo, hi) = smoothed
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let mean = smoothed.iter().sum::<f64>() / smoothed.len() as f64;
        (0.5 * (hi - lo), mean)
    };
    let (rate_amplitude, mean_rate) = swing(&trace.rate_bytes_per_ms);
    let (queue_amplitude, _) = swing(&queue);

    let elapsed = trace.times[len - 1] - trace.times[start];
    let served = trace.served_bytes[len - 1] - trace.served_bytes[start];
    Ok(OscillationMetrics {
        rate_amplitude,
        queue_amplitude,
        mean_rate,
        mean_utilization: served / (cfg.capacity * elapsed),
    })
}

/// Means over every full window of `w` consecutive samples.
fn moving_average(xs: &[f64], w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len().saturating_sub(w) + 1);
    let mut acc: f64 = xs[..w].iter().sum();
    out.push(acc / w as f64);
    for i in w..xs.len() {
        acc += xs[i] - xs[i - w];
        out.push(acc / w as f64);
    }
    out
}
