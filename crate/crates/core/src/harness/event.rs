//! Deterministic event queue: earliest time first, ties broken by insertion
//! order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::Scalar;

use super::ClassicalMessage;

/// What happens when an event fires.
#[derive(Debug, Clone)]
pub enum EventKind<T: Scalar> {
    /// Charlie prepares and sends the pair budget through the noisy channel.
    DistributePairs,
    /// Both parties execute purification round `round` (1-based) on their
    /// local schedules and send each other the outcome bits.
    StartRound { round: u32 },
    /// A classical message reaches its receiver.
    Deliver(ClassicalMessage<T>),
    /// Alice measures her halves in her `|±⟩` basis at the pre-agreed local
    /// time and sends Bob the outcome list.
    AliceQcsMeasure,
}

#[derive(Debug, Clone)]
pub struct Event<T: Scalar> {
    pub time: T,
    pub seq: u64,
    pub kind: EventKind<T>,
}

#[derive(Debug)]
struct HeapEntry<T: Scalar>(Event<T>);

impl<T: Scalar> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for HeapEntry<T> {}

impl<T: Scalar> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for HeapEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the earliest (time, seq) pops
        // first.  Event times are validated finite on push.
        let time = self
            .0
            .time
            .partial_cmp(&other.0.time)
            .expect("finite event times");
        time.then(self.0.seq.cmp(&other.0.seq)).reverse()
    }
}

/// Priority queue over events with FIFO tie-breaking.
#[derive(Debug)]
pub struct EventQueue<T: Scalar> {
    heap: BinaryHeap<HeapEntry<T>>,
    next_seq: u64,
}

impl<T: Scalar> EventQueue<T> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }

    pub fn push(&mut self, time: T, kind: EventKind<T>) {
        assert!(time.is_finite(), "event time must be finite");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry(Event { time, seq, kind }));
    }

    pub fn pop(&mut self) -> Option<Event<T>> {
        self.heap.pop().map(|e| e.0)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}

impl<T: Scalar> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}
