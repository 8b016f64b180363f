//! Bounded FIFO of calls waiting for a service to come back.

use std::collections::VecDeque;

use serde::Serialize;

pub const DEFAULT_CAPACITY: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PendingCall {
    pub id: u64,
    pub operation: String,
    pub enqueued_at: u64,
}

#[derive(Debug, Clone)]
pub struct ProxyQueue {
    capacity: usize,
    timeout: Option<u64>,
    calls: VecDeque<PendingCall>,
    next_id: u64,
    rejected: u64,
    expired: u64,
}

impl Default for ProxyQueue {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY, None)
    }
}

impl ProxyQueue {
    /// `timeout` is in logical time units; `None` keeps calls until flushed.
    pub fn new(capacity: usize, timeout: Option<u64>) -> Self {
        Self {
            capacity,
            timeout,
            calls: VecDeque::new(),
            next_id: 0,
            rejected: 0,
            expired: 0,
        }
    }

    /// Queues a call. Returns its id, or `None` when the queue is full.
    pub fn push(&mut self, operation: impl Into<String>, at: u64) -> Option<u64> {
        if self.calls.len() >= self.capacity {
            self.rejected += 1;
            return None;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.calls.push_back(PendingCall {
            id,
            operation: operation.into(),
            enqueued_at: at,
        });
        Some(id)
    }

    /// Drops and returns the calls that waited longer than the timeout at `now`.
    pub fn expire(&mut self, now: u64) -> Vec<PendingCall> {
        let Some(timeout) = self.timeout else {
            return Vec::new();
        };
        let mut out = Vec::new();
        while let Some(front) = self.calls.front() {
            if now.saturating_sub(front.enqueued_at) <= timeout {
                break;
            }
            out.extend(self.calls.pop_front());
        }
        self.expired += out.len() as u64;
        out
    }

    /// Empties the queue in arrival order.
    pub fn drain(&mut self) -> Vec<PendingCall> {
        self.calls.drain(..).collect()
    }

    pub fn len(&self) -> usize {
        self.calls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn expired(&self) -> u64 {
        self.expired
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_and_fifo() {
        let mut q = ProxyQueue::new(2, None);
        assert_eq!(q.push("a", 0), Some(0));
        assert_eq!(q.push("b", 1), Some(1));
        assert_eq!(q.push("c", 2), None);
        assert_eq!(q.rejected(), 1);
        let ops: Vec<_> = q.drain().into_iter().map(|c| c.operation).collect();
        assert_eq!(ops, ["a", "b"]);
        assert!(q.is_empty());
    }

    #[test]
    fn timeout_expires_oldest_first() {
        let mut q = ProxyQueue::new(8, Some(10));
        q.push("a", 0);
        q.push("b", 5);
        q.push("c", 9);
        assert!(q.expire(10).is_empty());
        let gone: Vec<_> = q.expire(16).into_iter().map(|c| c.operation).collect();
        assert_eq!(gone, ["a", "b"]);
        assert_eq!(q.len(), 1);
        assert_eq!(q.expired(), 2);
    }

    #[test]
    fn no_timeout_keeps_everything() {
        let mut q = ProxyQueue::default();
        q.push("a", 0);
        assert!(q.expire(u64::MAX).is_empty());
        assert_eq!(q.capacity(), DEFAULT_CAPACITY);
    }
}
