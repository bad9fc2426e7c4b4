use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use super::{BlockId, BlockRecord, QuorumCertificate};

/// Blocks shared by every replica of one simulation run, plus the QC that
/// certified each of them.
///
/// Blocks far below the committed tip are pruned; callers treat a missing
/// block as already finalized history.
#[derive(Debug)]
pub struct BlockStore {
    blocks: HashMap<BlockId, Rc<BlockRecord>>,
    certs: HashMap<BlockId, QuorumCertificate>,
    arrival: VecDeque<(u64, BlockId)>,
    next_id: u64,
    retain: u64,
}

impl Default for BlockStore {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockStore {
    pub fn new() -> Self {
        let genesis = Rc::new(BlockRecord::genesis());
        let mut blocks = HashMap::new();
        blocks.insert(genesis.id, genesis);
        let mut certs = HashMap::new();
        certs.insert(BlockId::GENESIS, QuorumCertificate::genesis());
        Self {
            blocks,
            certs,
            arrival: VecDeque::new(),
            next_id: 1,
            retain: 256,
        }
    }

    pub fn next_id(&mut self) -> BlockId {
        let id = BlockId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn insert(&mut self, block: BlockRecord) -> Rc<BlockRecord> {
        let block = Rc::new(block);
        self.arrival.push_back((block.height, block.id));
        self.blocks.insert(block.id, Rc::clone(&block));
        block
    }

    pub fn get(&self, id: BlockId) -> Option<&Rc<BlockRecord>> {
        self.blocks.get(&id)
    }

    pub fn certify(&mut self, qc: QuorumCertificate) {
        self.certs.insert(qc.block, qc);
    }

    pub fn cert(&self, id: BlockId) -> Option<&QuorumCertificate> {
        self.certs.get(&id)
    }

    /// Drops blocks well below `committed_height`.
    pub fn prune(&mut self, committed_height: u64) {
        let floor = committed_height.saturating_sub(self.retain);
        while let Some(&(h, id)) = self.arrival.front() {
            if h >= floor {
                break;
            }
            self.arrival.pop_front();
            self.blocks.remove(&id);
            self.certs.remove(&id);
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}
