//! Event-by-event dynamics of the limited processor sharing server.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{InputProcess, ServiceRateCurve};
use crate::policy::ControlPolicy;

/// Residuals closer than this to the minimum finish together.
pub const TIE_TOL: f64 = 1e-12;
const REBASE_AT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Tag(f64);

impl Eq for Tag {}

impl PartialOrd for Tag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tag {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    Arrival,
    /// Number of jobs that finished at this instant (ties and zero-size jobs).
    Departure(usize),
}

/// Snapshot of the queue.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub clock: f64,
    /// Remaining work of every job in service, ascending.
    pub in_service: Vec<f64>,
    /// Sizes waiting in FCFS order.
    pub queue: Vec<f64>,
    pub next_arrival: f64,
    pub workload: f64,
}

/// Admission counters used to check the policy rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdmissionStats {
    pub max_on_arrival: usize,
    pub max_on_departure: usize,
    /// Events where rounding gave a zero target with jobs present.
    pub zero_target_guards: u64,
}

/// Each in-service job carries a finish tag on a shared virtual clock that
/// advances at the per-job rate `mu(Z)/Z`; residual = tag - virtual time.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    curve: &'a ServiceRateCurve,
    input: &'a InputProcess,
    policy: &'a ControlPolicy,
    m: f64,
    m_e: f64,
    arrivals_rng: ChaCha8Rng,
    sizes_rng: ChaCha8Rng,
    clock: f64,
    virtual_time: f64,
    tags: BinaryHeap<Reverse<Tag>>,
    queue: VecDeque<f64>,
    next_arrival: f64,
    workload: f64,
    work_arrived: f64,
    work_drained: f64,
    admissions: AdmissionStats,
}

impl<'a> Simulator<'a> {
    pub fn new(curve: &'a ServiceRateCurve, input: &'a InputProcess, policy: &'a ControlPolicy, seed: u64) -> Self {
        let mut arrivals_rng = ChaCha8Rng::seed_from_u64(seed);
        arrivals_rng.set_stream(0);
        let mut sizes_rng = ChaCha8Rng::seed_from_u64(seed);
        sizes_rng.set_stream(1);
        let mut sim = Self {
            curve,
            input,
            policy,
            m: input.m(),
            m_e: input.m_e(),
            arrivals_rng,
            sizes_rng,
            clock: 0.0,
            virtual_time: 0.0,
            tags: BinaryHeap::new(),
            queue: VecDeque::new(),
            next_arrival: f64::INFINITY,
            workload: 0.0,
            work_arrived: 0.0,
            work_drained: 0.0,
            admissions: AdmissionStats::default(),
        };
        sim.next_arrival = sim.draw_interarrival();
        sim
    }

    /// Replaces the current contents with the given residuals and queue.
    pub fn load_state(&mut self, in_service: &[f64], queue: &[f64]) {
        self.virtual_time = 0.0;
        self.tags = in_service.iter().map(|&r| Reverse(Tag(r))).collect();
        self.queue = queue.iter().copied().collect();
        self.workload = in_service.iter().sum::<f64>() + queue.iter().sum::<f64>();
        self.work_arrived += self.workload;
    }

    fn draw_interarrival(&mut self) -> f64 {
        match self.input.interarrival() {
            Some(d) => self.clock + d.sample(&mut self.arrivals_rng),
            None => f64::INFINITY,
        }
    }

    #[inline]
    pub fn clock(&self) -> f64 {
        self.clock
    }

    #[inline]
    pub fn in_service(&self) -> usize {
        self.tags.len()
    }

    #[inline]
    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    #[inline]
    pub fn headcount(&self) -> usize {
        self.tags.len() + self.queue.len()
    }

    /// Incrementally maintained workload.
    #[inline]
    pub fn workload(&self) -> f64 {
        self.workload
    }

    /// Workload summed from scratch over residuals and queued sizes.
    pub fn workload_recomputed(&self) -> f64 {
        self.tags.iter().map(|t| (t.0 .0 - self.virtual_time).max(0.0)).sum::<f64>() + self.queue.iter().sum::<f64>()
    }

    pub fn work_arrived(&self) -> f64 {
        self.work_arrived
    }

    /// Total work removed, `∫ mu(Z(t)) dt`.
    pub fn work_drained(&self) -> f64 {
        self.work_drained
    }

    pub fn admissions(&self) -> AdmissionStats {
        self.admissions
    }

    pub fn state(&self) -> SystemState {
        let mut in_service: Vec<f64> = self.tags.iter().map(|t| t.0 .0 - self.virtual_time).collect();
        in_service.sort_by(f64::total_cmp);
        SystemState {
            clock: self.clock,
            in_service,
            queue: self.queue.iter().copied().collect(),
            next_arrival: self.next_arrival,
            workload: self.workload,
        }
    }

    /// Time until the next event, its kind, and the total service rate until then.
    #[inline]
    pub fn peek(&self) -> Option<(f64, bool, f64)> {
        let z = self.tags.len();
        let to_arrival = self.next_arrival - self.clock;
        if z == 0 {
            return to_arrival.is_finite().then_some((to_arrival, true, 0.0));
        }
        let rate = self.curve.rate(z);
        let per_job = rate / z as f64;
        let min_tag = self.tags.peek().unwrap().0 .0;
        let to_departure = ((min_tag - self.virtual_time) / per_job).max(0.0);
        if to_arrival < to_departure {
            Some((to_arrival, true, rate))
        } else {
            Some((to_departure, false, rate))
        }
    }

    /// Advances to the next event and applies the admission rule. Returns
    /// `None` when no event will ever occur.
    pub fn step(&mut self) -> Option<Event> {
        let (dt, is_arrival, rate) = self.peek()?;
        let z = self.tags.len();
        self.clock += dt;
        if z > 0 {
            let drained = rate * dt;
            self.virtual_time += drained / z as f64;
            self.workload = (self.workload - drained).max(0.0);
            self.work_drained += drained;
        }
        let event = if is_arrival {
            self.clock = self.next_arrival;
            self.on_arrival();
            self.next_arrival = self.draw_interarrival();
            Event::Arrival
        } else {
            // snap onto the finishing tag so residuals never go negative
            self.virtual_time = self.tags.peek().unwrap().0 .0;
            Event::Departure(0)
        };
        let finished = self.settle();
        if self.tags.is_empty() {
            self.virtual_time = 0.0;
            if self.queue.is_empty() {
                self.workload = 0.0;
            }
        } else if self.virtual_time > REBASE_AT {
            self.rebase();
        }
        Some(match event {
            Event::Departure(_) => Event::Departure(finished),
            e => e,
        })
    }

    fn rebase(&mut self) {
        let v = self.virtual_time;
        let tags = std::mem::take(&mut self.tags);
        self.tags = tags.into_iter().map(|Reverse(Tag(t))| Reverse(Tag(t - v))).collect();
        self.virtual_time = 0.0;
    }

    /// Departs every job whose residual is within the tie tolerance, one at a
    /// time, applying the departure rule after each.
    fn settle(&mut self) -> usize {
        let mut finished = 0;
        while let Some(&Reverse(Tag(t))) = self.tags.peek() {
            if t - self.virtual_time > TIE_TOL {
                break;
            }
            self.tags.pop();
            finished += 1;
            self.on_departure();
        }
        finished
    }

    fn admit(&mut self, n: usize) -> usize {
        let mut admitted = 0;
        while admitted < n {
            let Some(size) = self.queue.pop_front() else { break };
            self.tags.push(Reverse(Tag(self.virtual_time + size)));
            admitted += 1;
        }
        admitted
    }

    fn target(&mut self, proxy: f64, jobs_present: bool) -> usize {
        match self.policy {
            ControlPolicy::Static(k) => *k,
            ControlPolicy::Dynamic(table) => {
                let k = table.lookup(proxy) as usize;
                if k == 0 && jobs_present {
                    if self.admissions.zero_target_guards == 0 {
                        warn!("rounded policy targets 0 jobs at proxy workload {proxy}; serving 1 instead");
                    }
                    self.admissions.zero_target_guards += 1;
                    1
                } else {
                    k
                }
            }
        }
    }

    fn on_arrival(&mut self) {
        let size = self.input.jobsize().sample(&mut self.sizes_rng);
        let (z, q) = (self.tags.len(), self.queue.len());
        self.queue.push_back(size);
        self.workload += size;
        self.work_arrived += size;
        let proxy = self.m_e * z as f64 + self.m * (q as f64 + 1.0);
        let admitted = if self.target(proxy, true) > z { self.admit(1) } else { 0 };
        self.admissions.max_on_arrival = self.admissions.max_on_arrival.max(admitted);
    }

    /// Departure rule for one finished job; `Z(t-)` is the count including it.
    fn on_departure(&mut self) {
        let z_before = self.tags.len() + 1;
        let q = self.queue.len();
        let admitted = match self.policy {
            ControlPolicy::Static(k) => {
                let free = k.saturating_sub(z_before - 1);
                self.admit(free)
            }
            ControlPolicy::Dynamic(_) => {
                let proxy = self.m_e * (z_before - 1) as f64 + self.m * q as f64;
                let k = self.target(proxy, z_before - 1 + q > 0);
                let want = (k + 1).saturating_sub(z_before).min(2);
                self.admit(want)
            }
        };
        self.admissions.max_on_departure = self.admissions.max_on_departure.max(admitted);
    }
}
