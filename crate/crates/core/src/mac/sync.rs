#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncEvent {
    None,
    Desynchronized,
    Resynchronized,
}

/// Missed-beacon counter of a child node.
#[derive(Debug, Clone)]
pub struct BeaconTracker {
    threshold: u32,
    missed: u32,
    synced: bool,
}

impl BeaconTracker {
    pub fn new(threshold: u32) -> Self {
        BeaconTracker {
            threshold,
            missed: 0,
            synced: true,
        }
    }

    pub fn is_synced(&self) -> bool {
        self.synced
    }

    pub fn missed(&self) -> u32 {
        self.missed
    }

    pub fn on_beacon(&mut self, heard: bool) -> SyncEvent {
        if heard {
            self.missed = 0;
            if !self.synced {
                self.synced = true;
                return SyncEvent::Resynchronized;
            }
            return SyncEvent::None;
        }
        self.missed += 1;
        if self.synced && self.missed >= self.threshold {
            self.synced = false;
            return SyncEvent::Desynchronized;
        }
        SyncEvent::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_misses_then_beacon() {
        let mut t = BeaconTracker::new(4);
        for _ in 0..3 {
            assert_eq!(t.on_beacon(false), SyncEvent::None);
        }
        assert_eq!(t.on_beacon(true), SyncEvent::None);
        assert_eq!(t.missed(), 0);
        assert!(t.is_synced());
    }

    #[test]
    fn fourth_miss_desyncs() {
        let mut t = BeaconTracker::new(4);
        for _ in 0..3 {
            t.on_beacon(false);
        }
        assert_eq!(t.on_beacon(false), SyncEvent::Desynchronized);
        assert_eq!(t.on_beacon(false), SyncEvent::None);
        assert_eq!(t.on_beacon(true), SyncEvent::Resynchronized);
    }
}
