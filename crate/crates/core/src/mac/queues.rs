use std::collections::{BTreeMap, VecDeque};

use crate::mac::{Frame, Priority};
use crate::medium::NodeId;

#[derive(Debug, Clone)]
pub struct FifoQueue {
    items: VecDeque<Frame>,
    capacity: usize,
}

impl FifoQueue {
    pub fn new(capacity: usize) -> Self {
        FifoQueue {
            items: VecDeque::new(),
            capacity,
        }
    }

    /// Hands the frame back when the queue is full.
    pub fn push(&mut self, frame: Frame) -> Result<(), Frame> {
        if self.items.len() >= self.capacity {
            return Err(frame);
        }
        self.items.push_back(frame);
        Ok(())
    }

    pub fn front(&self) -> Option<&Frame> {
        self.items.front()
    }

    pub fn front_mut(&mut self) -> Option<&mut Frame> {
        self.items.front_mut()
    }

    pub fn pop(&mut self) -> Option<Frame> {
        self.items.pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn drain(&mut self) -> Vec<Frame> {
        self.items.drain(..).collect()
    }
}

/// Per-destination sub-queues with two priority classes and one shared capacity.
#[derive(Debug, Clone)]
pub struct CfpQueues {
    per_dest: BTreeMap<NodeId, [VecDeque<Frame>; 2]>,
    capacity: usize,
    len: usize,
}

fn class(p: Priority) -> usize {
    match p {
        Priority::High => 0,
        Priority::Regular => 1,
    }
}

impl CfpQueues {
    pub fn new(capacity: usize) -> Self {
        CfpQueues {
            per_dest: BTreeMap::new(),
            capacity,
            len: 0,
        }
    }

    pub fn push(&mut self, frame: Frame) -> Result<(), Frame> {
        let Some(dest) = frame.dest else {
            return Err(frame);
        };
        if self.len >= self.capacity {
            return Err(frame);
        }
        self.per_dest.entry(dest).or_default()[class(frame.priority)].push_back(frame);
        self.len += 1;
        Ok(())
    }

    pub fn front(&self, dest: NodeId) -> Option<&Frame> {
        self.per_dest
            .get(&dest)
            .and_then(|q| q[0].front().or(q[1].front()))
    }

    pub fn front_mut(&mut self, dest: NodeId) -> Option<&mut Frame> {
        let q = self.per_dest.get_mut(&dest)?;
        if q[0].is_empty() {
            q[1].front_mut()
        } else {
            q[0].front_mut()
        }
    }

    pub fn remove(&mut self, dest: NodeId, id: u64) -> Option<Frame> {
        let q = self.per_dest.get_mut(&dest)?;
        for sub in q.iter_mut() {
            if let Some(pos) = sub.iter().position(|f| f.id == id) {
                self.len -= 1;
                return sub.remove(pos);
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn len_for(&self, dest: NodeId) -> usize {
        self.per_dest
            .get(&dest)
            .map_or(0, |q| q[0].len() + q[1].len())
    }

    pub fn drain(&mut self) -> Vec<Frame> {
        self.len = 0;
        std::mem::take(&mut self.per_dest)
            .into_values()
            .flat_map(|[a, b]| a.into_iter().chain(b))
            .collect()
    }
}
