use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::distributions::Sampler;
use crate::model::{derive_quantities, CycleType, Discipline, Leg, ModelParams, LEGS, QUEUES};

/// Queue length used for saturated queues; never incremented or decremented.
pub const SATURATED: u64 = u64::MAX;

/// Steps allowed without the clock moving before the run is declared stuck.
const STALL_LIMIT: u64 = 10_000_000;

/// What the server is doing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Serving { station: usize },
    Walking { leg: Leg },
}

/// The Markov state of the system plus the clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub clock: f64,
    /// Customers per queue; [`SATURATED`] for saturated queues.
    pub q: [u64; QUEUES],
    /// Absolute time of each queue's next arrival (infinite when saturated).
    pub next_arrival: [f64; QUEUES],
    pub activity: Activity,
    pub activity_start: f64,
    pub activity_end: f64,
    /// Station being served or walked toward.
    pub station: usize,
    /// Set when queue 2 was found empty; the next cycle is then reduced.
    pub skip_queue2: bool,
    /// Services this visit (limited) or arrivals during this visit (gated).
    pub visit_count: u64,
    pub cycle_type: CycleType,
    /// Cycles completed since the start, warmup included.
    pub cycle_index: u64,
}

impl SimState {
    pub fn residual_arrival(&self, k: usize) -> f64 {
        self.next_arrival[k] - self.clock
    }

    pub fn residual_service(&self) -> f64 {
        match self.activity {
            Activity::Serving { .. } => self.activity_end - self.clock,
            Activity::Walking { .. } => 0.0,
        }
    }

    pub fn residual_walk(&self) -> f64 {
        match self.activity {
            Activity::Walking { .. } => self.activity_end - self.clock,
            Activity::Serving { .. } => 0.0,
        }
    }
}

/// Cumulative processes since the last reset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CumulativeRecord {
    /// Busy time per station.
    pub busy: [f64; QUEUES],
    /// Walking time per leg.
    pub walking: [f64; LEGS],
    pub services: [u64; QUEUES],
    pub walks: [u64; LEGS],
    pub empty_visits: [u64; QUEUES],
    /// Standard cycles whose queue-2 visit served at least one customer.
    pub queue2_service_visits: u64,
    pub cycles_total: u64,
    pub cycles_reduced: u64,
    /// Integral of each queue length over time (zero for saturated queues).
    pub queue_area: [f64; QUEUES],
    pub start: f64,
    pub elapsed: f64,
}

impl CumulativeRecord {
    fn starting_at(clock: f64) -> Self {
        Self { start: clock, ..Self::default() }
    }

    pub fn accounted_time(&self) -> f64 {
        self.busy.iter().sum::<f64>() + self.walking.iter().sum::<f64>()
    }

    /// Componentwise `self - earlier`, for batch statistics.
    pub fn since(&self, earlier: &Self) -> Self {
        Self {
            busy: [0, 1, 2].map(|k| self.busy[k] - earlier.busy[k]),
            walking: [0, 1, 2, 3].map(|j| self.walking[j] - earlier.walking[j]),
            services: [0, 1, 2].map(|k| self.services[k] - earlier.services[k]),
            walks: [0, 1, 2, 3].map(|j| self.walks[j] - earlier.walks[j]),
            empty_visits: [0, 1, 2].map(|k| self.empty_visits[k] - earlier.empty_visits[k]),
            queue2_service_visits: self.queue2_service_visits - earlier.queue2_service_visits,
            cycles_total: self.cycles_total - earlier.cycles_total,
            cycles_reduced: self.cycles_reduced - earlier.cycles_reduced,
            queue_area: [0, 1, 2].map(|k| self.queue_area[k] - earlier.queue_area[k]),
            start: earlier.start + earlier.elapsed,
            elapsed: self.elapsed - earlier.elapsed,
        }
    }
}

/// One processed event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Arrival { queue: usize },
    ServiceCompletion { station: usize },
    WalkCompletion { leg: Leg },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Arrival { .. } => "arrival",
            Event::ServiceCompletion { .. } => "service",
            Event::WalkCompletion { .. } => "walk",
        }
    }

    /// One-based station the event happened at (destination for walks).
    pub fn station(&self) -> usize {
        match *self {
            Event::Arrival { queue } => queue + 1,
            Event::ServiceCompletion { station } => station + 1,
            Event::WalkCompletion { leg } => leg.destination() + 1,
        }
    }
}

/// Receives every event after it has been applied.
pub trait Observer {
    fn on_event(&mut self, _event: &Event, _state: &SimState, _record: &CumulativeRecord) {}
}

impl Observer for () {}

/// Random-number stream layout: interarrival 0..3, service 3..6, switch-over 6..10.
const SERVICE_STREAM: usize = QUEUES;
const SWITCHOVER_STREAM: usize = 2 * QUEUES;
const STREAMS: usize = 2 * QUEUES + LEGS;

/// Event-driven simulator of the polling system.
#[derive(Debug, Clone)]
pub struct Simulator {
    discipline: Discipline,
    limits: [u64; QUEUES],
    saturated: [bool; QUEUES],
    interarrival: [Option<Sampler>; QUEUES],
    service: [Sampler; QUEUES],
    switchover: [Sampler; LEGS],
    rngs: [ChaCha8Rng; STREAMS],
    state: SimState,
    record: CumulativeRecord,
    queue2_served: bool,
    stalled_steps: u64,
}

impl Simulator {
    /// Validate `params` and place the server at station 1 at the start of a
    /// standard cycle with every non-saturated queue empty.
    pub fn new(params: &ModelParams, seed: u64) -> Result<Self, SimError> {
        derive_quantities(params)?;
        let sampler = |s: &crate::DistributionSpec| s.sampler().expect("validated");
        let rngs = std::array::from_fn(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            rng
        });
        let mut sim =
            Self {
                discipline: params.discipline,
                limits: params.limits.0.map(u64::from),
                saturated: params.saturated,
                interarrival: [0, 1, 2].map(|k| {
                    if params.saturated[k] {
                        None
                    } else {
                        params.interarrival[k].as_ref().map(sampler)
                    }
                }),
                service: params.service.each_ref().map(sampler),
                switchover: params.switchover.each_ref().map(sampler),
                rngs,
                state: SimState {
                    clock: 0.0,
                    q: params.saturated.map(|s| if s { SATURATED } else { 0 }),
                    next_arrival: [f64::INFINITY; QUEUES],
                    activity: Activity::Walking { leg: Leg::ThreeToOne },
                    activity_start: 0.0,
                    activity_end: 0.0,
                    station: 0,
                    skip_queue2: false,
                    visit_count: 0,
                    cycle_type: CycleType::Standard,
                    cycle_index: 0,
                },
                record: CumulativeRecord::default(),
                queue2_served: false,
                stalled_steps: 0,
            };
        for k in 0..QUEUES {
            if sim.interarrival[k].is_some() {
                sim.state.next_arrival[k] = sim.draw_interarrival(k)?;
            }
        }
        sim.begin_visit(0)?;
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn record(&self) -> &CumulativeRecord {
        &self.record
    }

    /// Discard everything recorded so far; measurement restarts now.
    pub fn reset_record(&mut self) {
        self.record = CumulativeRecord::starting_at(self.state.clock);
    }

    #[inline]
    fn draw(&mut self, stream: usize, sampler: Sampler) -> Result<f64, SimError> {
        let x = match sampler.constant() {
            Some(v) => v,
            None => sampler.sample(self.rngs[stream].sample(Open01)),
        };
        if x.is_finite() && x >= 0.0 {
            Ok(x)
        } else {
            Err(SimError::NonFiniteSample { stream, value: x })
        }
    }

    fn draw_interarrival(&mut self, k: usize) -> Result<f64, SimError> {
        let s = self.interarrival[k].expect("queue has an input stream");
        let x = self.draw(k, s)?;
        Ok(self.state.clock + x)
    }

    fn start(&mut self, activity: Activity, duration: f64) {
        self.state.activity = activity;
        self.state.activity_start = self.state.clock;
        self.state.activity_end = self.state.clock + duration;
    }

    fn start_service(&mut self, station: usize) -> Result<(), SimError> {
        let d = self.draw(SERVICE_STREAM + station, self.service[station])?;
        self.state.station = station;
        self.start(Activity::Serving { station }, d);
        Ok(())
    }

    fn start_walk(&mut self, leg: Leg) -> Result<(), SimError> {
        let d = self.draw(SWITCHOVER_STREAM + leg.index(), self.switchover[leg.index()])?;
        self.state.station = leg.destination();
        self.state.visit_count = 0;
        self.start(Activity::Walking { leg }, d);
        Ok(())
    }

    /// Walk onward from `station` along the current cycle's route.
    fn depart(&mut self, station: usize) -> Result<(), SimError> {
        let leg = match station {
            0 => match self.state.cycle_type {
                CycleType::Standard => Leg::OneToTwo,
                CycleType::Reduced => {
                    self.state.skip_queue2 = false;
                    Leg::OneToThree
                }
            },
            1 => Leg::TwoToThree,
            _ => Leg::ThreeToOne,
        };
        self.start_walk(leg)
    }

    fn begin_visit(&mut self, station: usize) -> Result<(), SimError> {
        self.state.station = station;
        self.state.visit_count = 0;
        if self.state.q[station] == 0 {
            self.record.empty_visits[station] += 1;
            if station == 1 {
                self.state.skip_queue2 = true;
            }
            return self.depart(station);
        }
        if station == 1 {
            self.queue2_served = false;
        }
        self.start_service(station)
    }

    fn finish_service(&mut self, station: usize) -> Result<(), SimError> {
        if !self.saturated[station] {
            self.state.q[station] -= 1;
        }
        self.record.services[station] += 1;
        if station == 1 && !self.queue2_served {
            self.queue2_served = true;
            self.record.queue2_service_visits += 1;
        }
        let q = self.state.q[station];
        let more = match self.discipline {
            Discipline::Limited => {
                self.state.visit_count += 1;
                q > 0 && self.state.visit_count < self.limits[station]
            }
            // visit_count holds the arrivals since the gate closed
            Discipline::Gated => q > self.state.visit_count,
            Discipline::Exhaustive => q > 0,
        };
        if more {
            self.start_service(station)
        } else {
            self.depart(station)
        }
    }

    fn finish_walk(&mut self, leg: Leg) -> Result<(), SimError> {
        self.record.walks[leg.index()] += 1;
        if leg == Leg::ThreeToOne {
            self.state.cycle_index += 1;
            self.record.cycles_total += 1;
            if self.state.cycle_type == CycleType::Reduced {
                self.record.cycles_reduced += 1;
            }
            self.state.cycle_type = if self.state.skip_queue2 { CycleType::Reduced } else { CycleType::Standard };
        }
        self.begin_visit(leg.destination())
    }

    fn advance_to(&mut self, t: f64) -> Result<(), SimError> {
        let dt = t - self.state.clock;
        if dt > 0.0 {
            for k in 0..QUEUES {
                if !self.saturated[k] {
                    self.record.queue_area[k] += self.state.q[k] as f64 * dt;
                }
            }
            self.state.clock = t;
            self.stalled_steps = 0;
        } else {
            self.stalled_steps += 1;
            if self.stalled_steps > STALL_LIMIT {
                return Err(SimError::Stalled { clock: t });
            }
        }
        self.record.elapsed = self.state.clock - self.record.start;
        Ok(())
    }

    /// Process the next event. The server's event wins ties with arrivals;
    /// simultaneous arrivals are taken in queue order.
    pub fn step<O: Observer>(&mut self, observer: &mut O) -> Result<Event, SimError> {
        let mut t = self.state.activity_end;
        let mut arrival = None;
        for k in 0..QUEUES {
            if self.state.next_arrival[k] < t {
                t = self.state.next_arrival[k];
                arrival = Some(k);
            }
        }
        self.advance_to(t)?;
        let event = match arrival {
            Some(k) => {
                self.state.q[k] += 1;
                let visiting = matches!(self.state.activity, Activity::Serving { station } if station == k);
                if self.discipline == Discipline::Gated && visiting {
                    self.state.visit_count += 1;
                }
                self.state.next_arrival[k] = self.draw_interarrival(k)?;
                Event::Arrival { queue: k }
            }
            None => {
                let duration = self.state.activity_end - self.state.activity_start;
                match self.state.activity {
                    Activity::Serving { station } => {
                        self.record.busy[station] += duration;
                        self.finish_service(station)?;
                        Event::ServiceCompletion { station }
                    }
                    Activity::Walking { leg } => {
                        self.record.walking[leg.index()] += duration;
                        self.finish_walk(leg)?;
                        Event::WalkCompletion { leg }
                    }
                }
            }
        };
        observer.on_event(&event, &self.state, &self.record);
        Ok(event)
    }

    /// Step until `cycles` cycles (warmup included) have completed.
    pub fn run_until_cycle<O: Observer>(&mut self, cycles: u64, observer: &mut O) -> Result<(), SimError> {
        while self.state.cycle_index < cycles {
            self.step(observer)?;
        }
        Ok(())
    }
}
