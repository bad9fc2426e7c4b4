use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use super::{BlockId, BlockRecord, BlockStore, LeaderSchedule, NewView, QuorumCertificate, View, Vote};
use crate::governance::ContractCall;
use crate::metrics::ValidatorId;

/// Everything a handler wants the network and the run loop to do.
#[derive(Debug, Default)]
pub struct Step {
    /// A new block to broadcast to every other validator.
    pub proposal: Option<Rc<BlockRecord>>,
    /// A certificate sealed by this replica.
    pub sealed: Option<QuorumCertificate>,
    /// `(recipient, vote)` pairs.
    pub votes: Vec<(ValidatorId, Vote)>,
    pub new_views: Vec<(ValidatorId, NewView)>,
    /// Blocks this replica committed, oldest first.
    pub committed: Vec<Rc<BlockRecord>>,
}

#[derive(Debug, Default)]
struct VoteSet {
    view: View,
    voters: Vec<ValidatorId>,
}

/// Per-validator protocol state.
#[derive(Debug)]
pub struct Replica {
    pub id: ValidatorId,
    pub current_view: View,
    pub highest_qc: QuorumCertificate,
    pub locked_qc: QuorumCertificate,
    pub last_voted_view: View,
    pub last_proposed_view: View,
    pub committed_height: u64,
    pub committed_block: BlockId,
    pub timeout_deadline: f64,
    pub timeout_ms: f64,
    /// Contract calls this validator keeps proposing until they commit.
    pub mempool: Vec<ContractCall>,
    pub protocol_violations: u64,
    pub discarded_votes: u64,
    pending_votes: HashMap<BlockId, VoteSet>,
    new_views: BTreeMap<View, BTreeSet<ValidatorId>>,
}

impl Replica {
    pub fn new(id: ValidatorId, timeout_ms: f64) -> Self {
        Self {
            id,
            current_view: 0,
            highest_qc: QuorumCertificate::genesis(),
            locked_qc: QuorumCertificate::genesis(),
            last_voted_view: 0,
            last_proposed_view: 0,
            committed_height: 0,
            committed_block: BlockId::GENESIS,
            timeout_deadline: timeout_ms,
            timeout_ms,
            mempool: Vec::new(),
            protocol_violations: 0,
            discarded_votes: 0,
            pending_votes: HashMap::new(),
            new_views: BTreeMap::new(),
        }
    }

    fn enter_view(&mut self, view: View, now: f64) {
        if view > self.current_view {
            self.current_view = view;
        }
        self.timeout_deadline = now + self.timeout_ms;
    }

    /// Resets the pacemaker, e.g. when a validator rejoins after jail.
    pub fn rearm(&mut self, now: f64) {
        self.timeout_deadline = now + self.timeout_ms;
    }

    /// Records a certificate: bumps the highest QC, moves the lock to the
    /// two-chain head, and applies the three-chain commit rule.
    pub fn process_qc(&mut self, qc: &QuorumCertificate, store: &BlockStore) -> Vec<Rc<BlockRecord>> {
        if qc.view > self.highest_qc.view {
            self.highest_qc = qc.clone();
        }
        let Some(certified) = store.get(qc.block) else {
            return Vec::new();
        };
        if certified.justify.view > self.locked_qc.view {
            self.locked_qc = certified.justify.clone();
        }
        self.three_chain_commit(qc, store)
    }

    /// Commits the head of a three-chain of consecutive-view certified
    /// blocks ending at `qc`, together with any uncommitted ancestors.
    pub fn three_chain_commit(&mut self, qc: &QuorumCertificate, store: &BlockStore) -> Vec<Rc<BlockRecord>> {
        let chain = (|| {
            let b2 = store.get(qc.block)?;
            let b1 = store.get(b2.justify.block)?;
            let b0 = store.get(b1.justify.block)?;
            let consecutive =
                b2.parent == b1.id && b1.parent == b0.id && b2.view == b1.view + 1 && b1.view == b0.view + 1;
            consecutive.then(|| Rc::clone(b0))
        })();
        let Some(head) = chain else {
            return Vec::new();
        };
        if head.height <= self.committed_height {
            return Vec::new();
        }
        let mut out = vec![Rc::clone(&head)];
        let mut cursor = head.parent;
        while let Some(b) = store.get(cursor) {
            if b.height <= self.committed_height {
                break;
            }
            out.push(Rc::clone(b));
            cursor = b.parent;
        }
        out.reverse();
        self.committed_height = head.height;
        self.committed_block = head.id;
        out
    }

    fn extends(&self, block: &BlockRecord, ancestor: &QuorumCertificate, store: &BlockStore) -> bool {
        let mut cursor = block.parent;
        loop {
            if cursor == ancestor.block {
                return true;
            }
            match store.get(cursor) {
                Some(b) if b.view > ancestor.view => cursor = b.parent,
                _ => return false,
            }
        }
    }

    /// Safety rule: vote only for blocks extending the lock, unless the
    /// block's justification is newer than the lock.
    pub fn is_safe(&self, block: &BlockRecord, store: &BlockStore) -> bool {
        block.justify.view > self.locked_qc.view || self.extends(block, &self.locked_qc, store)
    }

    pub fn on_proposal(
        &mut self,
        block: &Rc<BlockRecord>,
        now: f64,
        store: &BlockStore,
        schedule: &LeaderSchedule,
    ) -> Step {
        let mut step = Step::default();
        if !block.is_well_formed() || schedule.leader(block.view) != block.proposer {
            self.protocol_violations += 1;
            log::debug!("{}: dropping malformed block {:?}", self.id, block.id);
            return step;
        }
        step.committed = self.process_qc(&block.justify, store);
        if block.view >= self.current_view && block.view > self.last_voted_view && self.is_safe(block, store) {
            self.last_voted_view = block.view;
            self.enter_view(block.view, now);
            step.votes.push((
                schedule.leader(block.view + 1),
                Vote {
                    block: block.id,
                    view: block.view,
                    voter: self.id,
                },
            ));
        }
        step
    }

    /// Collects a vote as leader of `vote.view + 1`. The certificate is sealed
    /// with exactly the first quorum of distinct voters; later votes are
    /// discarded.
    pub fn on_vote(&mut self, vote: Vote, now: f64, store: &mut BlockStore, schedule: &LeaderSchedule) -> Step {
        let mut step = Step::default();
        if schedule.leader(vote.view + 1) != self.id {
            return step;
        }
        let committee = schedule.committee_for(vote.view);
        if !committee.contains(vote.voter) {
            return step;
        }
        if vote.view <= self.highest_qc.view {
            self.discarded_votes += 1;
            return step;
        }
        let set = self.pending_votes.entry(vote.block).or_insert_with(|| VoteSet {
            view: vote.view,
            voters: Vec::with_capacity(committee.quorum),
        });
        if set.voters.contains(&vote.voter) {
            return step;
        }
        set.voters.push(vote.voter);
        if set.voters.len() < committee.quorum {
            return step;
        }
        let set = self.pending_votes.remove(&vote.block).expect("present");
        let qc = QuorumCertificate {
            block: vote.block,
            view: set.view,
            voters: set.voters,
        };
        store.certify(qc.clone());
        step.committed = self.process_qc(&qc, store);
        let horizon = self.highest_qc.view;
        self.pending_votes.retain(|_, s| s.view > horizon);
        self.try_propose(qc.view + 1, now, store, schedule, &mut step);
        step.sealed = Some(qc);
        step
    }

    pub fn on_new_view(&mut self, msg: NewView, now: f64, store: &mut BlockStore, schedule: &LeaderSchedule) -> Step {
        let mut step = Step::default();
        if schedule.leader(msg.view) != self.id || msg.view <= self.last_proposed_view {
            return step;
        }
        let committee = schedule.committee_for(msg.view);
        if !committee.contains(msg.sender) {
            return step;
        }
        if msg.high_qc.view > self.highest_qc.view {
            step.committed = self.process_qc(&msg.high_qc, store);
        }
        let senders = self.new_views.entry(msg.view).or_default();
        senders.insert(msg.sender);
        if senders.len() >= committee.quorum {
            self.new_views.retain(|&v, _| v > msg.view);
            self.try_propose(msg.view, now, store, schedule, &mut step);
        }
        step
    }

    /// Gives up on the awaited proposal: moves one view ahead and asks the
    /// following leader to propose from this replica's highest QC.
    pub fn on_timeout(&mut self, now: f64, schedule: &LeaderSchedule) -> Step {
        self.current_view += 1;
        self.timeout_deadline = now + self.timeout_ms;
        let target_view = self.current_view + 1;
        Step {
            new_views: vec![(
                schedule.leader(target_view),
                NewView {
                    view: target_view,
                    high_qc: self.highest_qc.clone(),
                    sender: self.id,
                },
            )],
            ..Step::default()
        }
    }

    /// Proposes at `view` on top of the highest QC, voting for it at once.
    pub fn try_propose(
        &mut self,
        view: View,
        now: f64,
        store: &mut BlockStore,
        schedule: &LeaderSchedule,
        step: &mut Step,
    ) {
        if schedule.leader(view) != self.id
            || view <= self.last_proposed_view
            || view < self.current_view
            || view <= self.highest_qc.view
        {
            return;
        }
        let Some(parent) = store.get(self.highest_qc.block) else {
            return;
        };
        let height = parent.height + 1;
        let block = BlockRecord {
            id: store.next_id(),
            view,
            height,
            proposer: self.id,
            parent: self.highest_qc.block,
            justify: self.highest_qc.clone(),
            calls: self.mempool.clone(),
        };
        let block = store.insert(block);
        self.last_proposed_view = view;
        self.last_voted_view = view;
        self.enter_view(view, now);
        step.votes.push((
            schedule.leader(view + 1),
            Vote {
                block: block.id,
                view,
                voter: self.id,
            },
        ));
        step.proposal = Some(block);
    }
}
