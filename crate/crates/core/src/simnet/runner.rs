use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::network::Network;
use super::queue::{EventQueue, SimClock, SimEvent};
use crate::config::{Dataset, ScenarioConfig};
use crate::consensus::{BlockId, BlockRecord, BlockStore, Committee, LeaderSchedule, Message, Replica, Step, View};
use crate::error::{Error, Result};
use crate::governance::{end_of_epoch, geodec_lite_verify, ContractCall, ContractState, EpochReport, JailState};
use crate::metrics::{LivelinessRecord, ValidatorId, ValidatorProfile};

const LEADER_STREAM: u64 = 1;
const NETWORK_STREAM: u64 = 2;

/// What happened during one epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub index: usize,
    pub start_ms: f64,
    pub end_ms: f64,
    pub active: Vec<ValidatorId>,
    /// B(E): blocks whose first commit fell inside the epoch.
    pub blocks_committed: u64,
    /// B(E, v): those of the blocks above whose certificate carries v's vote.
    pub signed: BTreeMap<ValidatorId, u64>,
    pub first_view: View,
    pub highest_view: View,
    pub timeouts: u64,
    pub dropped_messages: u64,
    pub protocol_violations: u64,
    pub discarded_votes: u64,
    pub safety_violations: u64,
    pub events: u64,
    /// Running FNV-1a hash over every delivered event so far.
    pub trace_hash: u64,
    pub report: EpochReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub validators: Vec<ValidatorProfile>,
    pub epochs: Vec<EpochLog>,
}

/// Runs `cfg.epoch_count` epochs and returns one log per epoch.
pub fn run_epochs(cfg: &ScenarioConfig, dataset: &Dataset) -> Result<Vec<EpochLog>> {
    simulate(cfg, dataset).map(|o| o.epochs)
}

/// Like [`run_epochs`], also returning the validator roster.
pub fn simulate(cfg: &ScenarioConfig, dataset: &Dataset) -> Result<RunOutput> {
    cfg.validate()?;
    let validators = dataset.validators(&cfg.distribution)?;
    let mut sim = Sim::new(cfg, &validators, dataset)?;
    let mut epochs = Vec::with_capacity(cfg.epoch_count);
    for idx in 0..cfg.epoch_count {
        let end = sim.clock.epoch_end(idx as u64);
        while sim.queue.peek_time().is_some_and(|t| t < end) {
            let ev = sim.queue.pop().expect("peeked");
            sim.deliver(ev)?;
        }
        sim.clock.advance(end);
        epochs.push(sim.close_epoch(idx)?);
        if idx + 1 < cfg.epoch_count {
            sim.open_epoch()?;
        }
    }
    Ok(RunOutput { validators, epochs })
}

#[derive(Debug, Default)]
struct Tally {
    blocks: u64,
    signed: BTreeMap<ValidatorId, u64>,
    first_view: View,
    timeouts: u64,
    dropped: u64,
    events: u64,
    safety: u64,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    validators: &'a [ValidatorProfile],
    replicas: Vec<Replica>,
    store: BlockStore,
    schedule: LeaderSchedule,
    net: Network,
    queue: EventQueue,
    clock: SimClock,
    leader_rng: ChaCha8Rng,
    active: BTreeSet<ValidatorId>,
    timer_armed: Vec<bool>,
    /// Globally committed chain, indexed by height.
    chain: Vec<BlockId>,
    epoch_start: f64,
    contract: ContractState,
    jail: JailState,
    tally: Tally,
    hash: u64,
    seen_violations: u64,
    seen_discards: u64,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig, validators: &'a [ValidatorProfile], dataset: &Dataset) -> Result<Self> {
        let mut leader_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        leader_rng.set_stream(LEADER_STREAM);
        let mut net_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        net_rng.set_stream(NETWORK_STREAM);
        let net = Network::new(
            validators,
            &dataset.matrix,
            cfg.processing_delay_ms,
            cfg.jitter_ms,
            cfg.vote_race,
            net_rng,
        )?;
        let active: BTreeSet<ValidatorId> = validators.iter().map(|v| v.id).collect();
        let mut order: Vec<ValidatorId> = active.iter().copied().collect();
        order.shuffle(&mut leader_rng);
        let schedule = LeaderSchedule::new(Committee::new(1, order)?);
        let mut sim = Sim {
            cfg,
            validators,
            replicas: validators.iter().map(|v| Replica::new(v.id, cfg.timeout_ms)).collect(),
            store: BlockStore::new(),
            schedule,
            net,
            queue: EventQueue::new(),
            clock: SimClock::new(cfg.delta_ms),
            leader_rng,
            active,
            timer_armed: vec![false; validators.len()],
            chain: vec![BlockId::GENESIS],
            epoch_start: 0.0,
            contract: ContractState::default(),
            jail: JailState::default(),
            tally: Tally {
                first_view: 1,
                ..Tally::default()
            },
            hash: 0xcbf2_9ce4_8422_2325,
            seen_violations: 0,
            seen_discards: 0,
        };
        for id in sim.active.clone() {
            sim.arm_timer(id);
        }
        sim.nominate_minorities()?;
        let first = sim.schedule.leader(1);
        let mut step = Step::default();
        sim.replicas[first.0 as usize].try_propose(1, 0.0, &mut sim.store, &sim.schedule, &mut step);
        sim.apply(first, step)?;
        Ok(sim)
    }

    fn arm_timer(&mut self, id: ValidatorId) {
        let i = id.0 as usize;
        if !self.timer_armed[i] {
            self.timer_armed[i] = true;
            let at = self.replicas[i].timeout_deadline.max(self.clock.now);
            self.queue.push(at, u64::from(id.0), id, id, Message::Timer);
        }
    }

    fn mix(&mut self, ev: &SimEvent) {
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let words = [
            ev.deliver_at.to_bits(),
            u64::from(ev.sender.0),
            u64::from(ev.recipient.0),
            u64::from(ev.payload.kind()),
        ];
        for w in words {
            for b in w.to_le_bytes() {
                self.hash ^= u64::from(b);
                self.hash = self.hash.wrapping_mul(PRIME);
            }
        }
    }

    /// Whether `id` still acts in `view`: active validators do, and so do
    /// validators removed at the last boundary for views their old committee
    /// still governs.
    fn serves(&self, id: ValidatorId, view: View) -> bool {
        self.active.contains(&id) || self.schedule.committee_for(view).contains(id)
    }

    fn deliver(&mut self, ev: SimEvent) -> Result<()> {
        self.clock.advance(ev.deliver_at);
        self.tally.events += 1;
        self.mix(&ev);
        let now = self.clock.now;
        let r = ev.recipient;
        let i = r.0 as usize;
        let step = match ev.payload {
            Message::Timer => return self.on_timer(r),
            Message::Proposal(block) => {
                if !self.serves(r, block.view) {
                    self.tally.dropped += 1;
                    return Ok(());
                }
                self.replicas[i].on_proposal(&block, now, &self.store, &self.schedule)
            }
            Message::Vote(vote) => {
                if !self.serves(r, vote.view + 1) {
                    self.tally.dropped += 1;
                    return Ok(());
                }
                self.replicas[i].on_vote(vote, now, &mut self.store, &self.schedule)
            }
            Message::NewView(nv) => {
                if !self.serves(r, nv.view) {
                    self.tally.dropped += 1;
                    return Ok(());
                }
                self.replicas[i].on_new_view(nv, now, &mut self.store, &self.schedule)
            }
        };
        self.apply(r, step)
    }

    fn on_timer(&mut self, id: ValidatorId) -> Result<()> {
        let i = id.0 as usize;
        self.timer_armed[i] = false;
        if !self.active.contains(&id) {
            return Ok(());
        }
        let now = self.clock.now;
        if now >= self.replicas[i].timeout_deadline {
            self.tally.timeouts += 1;
            log::trace!("{id} timed out in view {}", self.replicas[i].current_view);
            let step = self.replicas[i].on_timeout(now, &self.schedule);
            self.apply(id, step)?;
        }
        self.arm_timer(id);
        Ok(())
    }

    fn apply(&mut self, from: ValidatorId, step: Step) -> Result<()> {
        let now = self.clock.now;
        if let Some(block) = step.proposal {
            let msg = Message::Proposal(Rc::clone(&block));
            let members = self.schedule.committee_for(block.view).order.clone();
            self.net.broadcast(&mut self.queue, now, from, &members, &msg)?;
        }
        for (to, vote) in step.votes {
            self.net.send(&mut self.queue, now, from, to, Message::Vote(vote))?;
        }
        for (to, nv) in step.new_views {
            self.net.send(&mut self.queue, now, from, to, Message::NewView(nv))?;
        }
        for block in step.committed {
            self.on_commit(&block)?;
        }
        Ok(())
    }

    fn on_commit(&mut self, block: &Rc<BlockRecord>) -> Result<()> {
        let h = block.height as usize;
        if h < self.chain.len() {
            if self.chain[h] != block.id {
                self.tally.safety += 1;
                log::error!(
                    "conflicting commit at height {h}: {:?} vs {:?}",
                    self.chain[h],
                    block.id
                );
            }
            return Ok(());
        }
        if h > self.chain.len() {
            return Err(Error::InvariantViolation(format!(
                "commit at height {h} skips height {}",
                self.chain.len()
            )));
        }
        self.chain.push(block.id);
        let qc = self
            .store
            .cert(block.id)
            .ok_or_else(|| Error::InvariantViolation(format!("committed block {:?} has no certificate", block.id)))?;
        self.tally.blocks += 1;
        for v in &qc.voters {
            *self.tally.signed.entry(*v).or_insert(0) += 1;
        }
        if block.view >= self.tally.first_view && !block.calls.is_empty() {
            self.apply_calls(block)?;
        }
        if h.is_multiple_of(64) {
            self.store.prune(block.height);
        }
        Ok(())
    }

    fn apply_calls(&mut self, block: &BlockRecord) -> Result<()> {
        for &call in &block.calls {
            let fresh =
                matches!(call, ContractCall::Nominate { caller } if !self.contract.nominations.contains(&caller));
            if let Err(e) = self.contract.apply(call, &self.active) {
                log::debug!("{e}");
                continue;
            }
            if let (true, ContractCall::Nominate { caller }) = (fresh, call) {
                let serving = self.serving();
                if geodec_lite_verify(caller, &serving)? {
                    for &w in &self.active {
                        if w != caller {
                            self.replicas[w.0 as usize].mempool.push(ContractCall::Vouch {
                                voucher: w,
                                nominee: caller,
                            });
                        }
                    }
                }
            }
        }
        let proposer = &mut self.replicas[block.proposer.0 as usize];
        proposer.mempool.retain(|c| !block.calls.contains(c));
        Ok(())
    }

    fn serving(&self) -> Vec<ValidatorProfile> {
        self.validators
            .iter()
            .filter(|v| self.active.contains(&v.id))
            .cloned()
            .collect()
    }

    fn nominate_minorities(&mut self) -> Result<()> {
        if !self.cfg.solution_enabled {
            return Ok(());
        }
        let serving = self.serving();
        for v in &serving {
            if geodec_lite_verify(v.id, &serving)? {
                self.replicas[v.id.0 as usize]
                    .mempool
                    .push(ContractCall::Nominate { caller: v.id });
            }
        }
        Ok(())
    }

    fn close_epoch(&mut self, index: usize) -> Result<EpochLog> {
        let tally = std::mem::take(&mut self.tally);
        let records = self
            .active
            .iter()
            .map(|&v| LivelinessRecord::new(v, tally.signed.get(&v).copied().unwrap_or(0), tally.blocks))
            .collect::<Result<Vec<_>>>()?;
        let outcome = end_of_epoch(
            index,
            self.validators,
            &self.active,
            &records,
            &mut self.contract,
            &mut self.jail,
            &self.cfg.epoch_config(),
        )?;
        let violations: u64 = self.replicas.iter().map(|r| r.protocol_violations).sum();
        let discards: u64 = self.replicas.iter().map(|r| r.discarded_votes).sum();
        let log = EpochLog {
            index,
            start_ms: self.epoch_start,
            end_ms: self.clock.now,
            active: self.active.iter().copied().collect(),
            blocks_committed: tally.blocks,
            signed: tally.signed,
            first_view: tally.first_view,
            highest_view: self.replicas.iter().map(|r| r.current_view).max().unwrap_or(0),
            timeouts: tally.timeouts,
            dropped_messages: tally.dropped,
            protocol_violations: violations - self.seen_violations,
            discarded_votes: discards - self.seen_discards,
            safety_violations: tally.safety,
            events: tally.events,
            trace_hash: self.hash,
            report: outcome.report,
        };
        self.seen_violations = violations;
        self.seen_discards = discards;
        self.active = outcome.next_active;
        Ok(log)
    }

    fn open_epoch(&mut self) -> Result<()> {
        let now = self.clock.now;
        self.epoch_start = now;
        let mut order: Vec<ValidatorId> = self.active.iter().copied().collect();
        order.shuffle(&mut self.leader_rng);
        let first_view = self.replicas.iter().map(|r| r.current_view).max().unwrap_or(0) + 2;
        self.schedule.push(Committee::new(first_view, order)?)?;
        self.tally.first_view = first_view;
        for r in &mut self.replicas {
            r.mempool.clear();
        }
        for id in self.active.clone() {
            let i = id.0 as usize;
            if !self.timer_armed[i] {
                self.replicas[i].rearm(now);
                self.arm_timer(id);
            }
        }
        self.nominate_minorities()
    }
}
