//! Bounded FIFO windows with replacement accounting.
//!
//! A [`SlidingWindow`] keeps the most recent `capacity` items in arrival
//! order and counts appends since the last mark, which drives the
//! train-when-p%-replaced gate in the engine.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A bounded FIFO buffer. Appending to a full window evicts the oldest item.
#[derive(Debug, Clone)]
pub struct SlidingWindow<T> {
    items: VecDeque<T>,
    capacity: usize,
    appended_since_mark: usize,
}

impl<T> SlidingWindow<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("window capacity must be positive".into()));
        }
        Ok(Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
            appended_since_mark: 0,
        })
    }

    /// Append `item` at the tail, evicting the head if the window is full.
    pub fn append(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
        self.appended_since_mark += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends observed since the last [`mark_reset`](Self::mark_reset).
    pub fn appended_since_mark(&self) -> usize {
        self.appended_since_mark
    }

    /// Fraction of the capacity replaced since the last mark. Can exceed 1.
    pub fn replaced_fraction(&self) -> f64 {
        self.appended_since_mark as f64 / self.capacity as f64
    }

    /// Zero the replacement counter, typically right after a training event.
    pub fn mark_reset(&mut self) {
        self.appended_since_mark = 0;
    }

    /// Drop all items and reset the counter. Capacity is preserved.
    pub fn clear(&mut self) {
        self.items.clear();
        self.appended_since_mark = 0;
    }

    /// Items oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}

impl<T: Clone> SlidingWindow<T> {
    /// Snapshot of the contents, oldest first.
    pub fn to_vec(&self) -> Vec<T> {
        self.items.iter().cloned().collect()
    }
}
