//! Chained HotStuff replica logic.
//!
//! Replicas are plain state machines: every handler takes the current
//! simulated instant and returns a [`Step`] describing the messages to send
//! and the blocks that became committed. Blocks and certificates carry no
//! cryptography; ids are opaque counters handed out by the [`BlockStore`].

mod replica;
mod store;

use std::collections::BTreeSet;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

pub use replica::{Replica, Step};
pub use store::BlockStore;

use crate::error::{Error, Result};
use crate::governance::ContractCall;
use crate::metrics::{quorum_cardinality, ValidatorId};

pub type View = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockId(pub u64);

impl BlockId {
    pub const GENESIS: BlockId = BlockId(0);
}

/// Votes of exactly one quorum for one block, in the order they arrived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumCertificate {
    pub block: BlockId,
    pub view: View,
    pub voters: Vec<ValidatorId>,
}

impl QuorumCertificate {
    pub fn genesis() -> Self {
        Self {
            block: BlockId::GENESIS,
            view: 0,
            voters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub id: BlockId,
    pub view: View,
    pub height: u64,
    pub proposer: ValidatorId,
    pub parent: BlockId,
    pub justify: QuorumCertificate,
    pub calls: Vec<ContractCall>,
}

impl BlockRecord {
    pub fn genesis() -> Self {
        Self {
            id: BlockId::GENESIS,
            view: 0,
            height: 0,
            proposer: ValidatorId(0),
            parent: BlockId::GENESIS,
            justify: QuorumCertificate::genesis(),
            calls: Vec::new(),
        }
    }

    /// `view > justify.view` and the parent is the certified block.
    pub fn is_well_formed(&self) -> bool {
        self.view > self.justify.view && self.parent == self.justify.block
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub block: BlockId,
    pub view: View,
    pub voter: ValidatorId,
}

/// Sent on timeout to the leader of `view`, carrying the sender's highest QC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewView {
    pub view: View,
    pub high_qc: QuorumCertificate,
    pub sender: ValidatorId,
}

#[derive(Debug, Clone)]
pub enum Message {
    Proposal(Rc<BlockRecord>),
    Vote(Vote),
    NewView(NewView),
    /// Local pacemaker wake-up; never crosses the network.
    Timer,
}

impl Message {
    pub fn kind(&self) -> u8 {
        match self {
            Message::Proposal(_) => 1,
            Message::Vote(_) => 2,
            Message::NewView(_) => 3,
            Message::Timer => 4,
        }
    }
}

/// `⌈2n/3⌉` for a BFT validator set of at least four.
pub fn quorum_size(n: usize) -> Result<usize> {
    if n < 4 {
        return Err(Error::Domain(format!("quorum needs at least 4 validators, got {n}")));
    }
    Ok(quorum_cardinality(n))
}

/// Round-robin over a per-epoch permutation: `order[(view - 1) mod |order|]`.
pub fn leader_of(view: View, order: &[ValidatorId]) -> ValidatorId {
    let n = order.len() as u64;
    order[((view + n - 1) % n) as usize]
}

/// The validator set in charge from `first_view` on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Committee {
    pub first_view: View,
    pub members: BTreeSet<ValidatorId>,
    pub order: Vec<ValidatorId>,
    pub quorum: usize,
}

impl Committee {
    pub fn new(first_view: View, order: Vec<ValidatorId>) -> Result<Self> {
        let members: BTreeSet<ValidatorId> = order.iter().copied().collect();
        if members.len() != order.len() {
            return Err(Error::Config("leader order contains duplicates".into()));
        }
        Ok(Self {
            first_view,
            quorum: quorum_size(members.len())?,
            members,
            order,
        })
    }

    pub fn contains(&self, v: ValidatorId) -> bool {
        self.members.contains(&v)
    }
}

/// Committees indexed by the first view they govern.
#[derive(Debug, Clone)]
pub struct LeaderSchedule {
    committees: Vec<Committee>,
}

impl LeaderSchedule {
    pub fn new(initial: Committee) -> Self {
        Self {
            committees: vec![initial],
        }
    }

    pub fn push(&mut self, next: Committee) -> Result<()> {
        let last = self.committees.last().expect("schedule is never empty");
        if next.first_view <= last.first_view {
            return Err(Error::InvariantViolation(format!(
                "committee switch at view {} does not follow {}",
                next.first_view, last.first_view
            )));
        }
        self.committees.push(next);
        Ok(())
    }

    pub fn committee_for(&self, view: View) -> &Committee {
        let idx = self.committees.partition_point(|c| c.first_view <= view);
        &self.committees[idx.saturating_sub(1)]
    }

    pub fn leader(&self, view: View) -> ValidatorId {
        leader_of(view, &self.committee_for(view).order)
    }

    pub fn latest(&self) -> &Committee {
        self.committees.last().expect("schedule is never empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<ValidatorId> {
        v.iter().copied().map(ValidatorId).collect()
    }

    #[test]
    fn quorum_sizes() {
        assert_eq!(quorum_size(16).unwrap(), 11);
        assert_eq!(quorum_size(4).unwrap(), 3);
        assert_eq!(quorum_size(64).unwrap(), 43);
        assert!(quorum_size(3).is_err());
    }

    #[test]
    fn leader_rotation_wraps() {
        let order = ids(&[3, 1, 2]);
        assert_eq!(leader_of(1, &order), ValidatorId(3));
        assert_eq!(leader_of(4, &order), ValidatorId(3));
        let led: BTreeSet<_> = (7..10).map(|v| leader_of(v, &order)).collect();
        assert_eq!(led.len(), 3);
    }

    #[test]
    fn schedule_switches_committee() {
        let mut s = LeaderSchedule::new(Committee::new(1, ids(&[0, 1, 2, 3])).unwrap());
        s.push(Committee::new(10, ids(&[4, 5, 6, 7, 8])).unwrap()).unwrap();
        assert_eq!(s.committee_for(9).quorum, 3);
        assert_eq!(s.committee_for(10).quorum, 4);
        assert_eq!(s.leader(10), leader_of(10, &ids(&[4, 5, 6, 7, 8])));
        assert!(s.push(Committee::new(5, ids(&[0, 1, 2, 3])).unwrap()).is_err());
    }
}
