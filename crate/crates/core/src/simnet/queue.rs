use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::consensus::Message;
use crate::metrics::ValidatorId;

/// A message scheduled for delivery.
///
/// Events pop in `(deliver_at, race, seq)` order. `race` settles arrivals at
/// the same instant; `seq` is unique and keeps the order total.
#[derive(Debug, Clone)]
pub struct SimEvent {
    pub deliver_at: f64,
    pub race: u64,
    pub seq: u64,
    pub sender: ValidatorId,
    pub recipient: ValidatorId,
    pub payload: Message,
}

impl SimEvent {
    fn key(&self, other: &Self) -> Ordering {
        self.deliver_at
            .total_cmp(&other.deliver_at)
            .then(self.race.cmp(&other.race))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimEvent {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key(self)
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        deliver_at: f64,
        race: u64,
        sender: ValidatorId,
        recipient: ValidatorId,
        payload: Message,
    ) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent {
            deliver_at,
            race,
            seq,
            sender,
            recipient,
            payload,
        });
        seq
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.deliver_at)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Virtual time in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub now: f64,
    pub epoch_start: f64,
    pub epoch_len: f64,
}

impl SimClock {
    pub fn new(epoch_len: f64) -> Self {
        Self {
            now: 0.0,
            epoch_start: 0.0,
            epoch_len,
        }
    }

    pub fn advance(&mut self, to: f64) {
        debug_assert!(to >= self.now, "clock moved backwards: {} -> {to}", self.now);
        self.now = self.now.max(to);
    }

    pub fn epoch_index(&self) -> u64 {
        ((self.now - self.epoch_start) / self.epoch_len).floor() as u64
    }

    pub fn epoch_end(&self, index: u64) -> f64 {
        self.epoch_start + (index + 1) as f64 * self.epoch_len
    }
}
