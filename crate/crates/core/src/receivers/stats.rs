use std::collections::VecDeque;
use std::ops::{Add, AddAssign, Sub, SubAssign};

/// Sufficient statistics of a hypothesized bit sequence over a window:
/// how many slots are hypothesized 1 (`n_on`) and 0 (`n_off`), and the
/// photon counts summed over each class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct WindowStats {
    pub n_on: u64,
    pub r_on: u64,
    pub n_off: u64,
    pub r_off: u64,
}

impl WindowStats {
    pub fn new(n_on: u64, r_on: u64, n_off: u64, r_off: u64) -> Self {
        WindowStats {
            n_on,
            r_on,
            n_off,
            r_off,
        }
    }

    /// Statistics of a single slot carrying `bit` with `count` photons.
    #[inline]
    pub fn slot(bit: u8, count: u32) -> Self {
        if bit == 1 {
            WindowStats::new(1, count as u64, 0, 0)
        } else {
            WindowStats::new(0, 0, 1, count as u64)
        }
    }

    /// Statistics of a full hypothesis over aligned `bits` and `counts`.
    pub fn from_sequence(bits: &[u8], counts: &[u32]) -> Self {
        bits.iter()
            .zip(counts)
            .fold(WindowStats::default(), |acc, (&b, &c)| acc + WindowStats::slot(b, c))
    }

    pub fn len(&self) -> u64 {
        self.n_on + self.n_off
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multiplies every count by `c` (the slot numbers are unchanged).
    pub fn scale_counts(&self, c: u64) -> Self {
        WindowStats::new(self.n_on, self.r_on * c, self.n_off, self.r_off * c)
    }
}

impl Add for WindowStats {
    type Output = WindowStats;
    #[inline]
    fn add(self, o: WindowStats) -> WindowStats {
        WindowStats::new(
            self.n_on + o.n_on,
            self.r_on + o.r_on,
            self.n_off + o.n_off,
            self.r_off + o.r_off,
        )
    }
}

impl AddAssign for WindowStats {
    #[inline]
    fn add_assign(&mut self, o: WindowStats) {
        *self = *self + o;
    }
}

impl Sub for WindowStats {
    type Output = WindowStats;
    #[inline]
    fn sub(self, o: WindowStats) -> WindowStats {
        WindowStats::new(
            self.n_on - o.n_on,
            self.r_on - o.r_on,
            self.n_off - o.n_off,
            self.r_off - o.r_off,
        )
    }
}

impl SubAssign for WindowStats {
    #[inline]
    fn sub_assign(&mut self, o: WindowStats) {
        *self = *self - o;
    }
}

/// Fixed-capacity FIFO of counts with a running sum.
#[derive(Debug, Clone, Default)]
pub struct CountRing {
    capacity: usize,
    items: VecDeque<u32>,
    sum: u64,
}

impl CountRing {
    pub fn new(capacity: usize) -> Self {
        CountRing {
            capacity,
            items: VecDeque::with_capacity(capacity + 1),
            sum: 0,
        }
    }

    /// Appends `count`, evicting and returning the oldest entry when full.
    /// With zero capacity the count is dropped.
    pub fn push(&mut self, count: u32) -> Option<u32> {
        if self.capacity == 0 {
            return None;
        }
        self.items.push_back(count);
        self.sum += count as u64;
        if self.items.len() > self.capacity {
            let old = self.items.pop_front().expect("non-empty");
            self.sum -= old as u64;
            Some(old)
        } else {
            None
        }
    }

    pub fn sum(&self) -> u64 {
        self.sum
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().copied()
    }

    /// Sum recomputed from the stored entries.
    pub fn recomputed_sum(&self) -> u64 {
        self.items.iter().map(|&c| c as u64).sum()
    }
}

/// Selective store: the most recent 0-detected and 1-detected counts, kept in
/// separate rings so neither class can be starved out of the window.
#[derive(Debug, Clone, Default)]
pub struct DetectedStore {
    pub buf0: CountRing,
    pub buf1: CountRing,
}

impl DetectedStore {
    pub fn new(cap0: usize, cap1: usize) -> Self {
        DetectedStore {
            buf0: CountRing::new(cap0),
            buf1: CountRing::new(cap1),
        }
    }

    /// Records a firm decision; returns the evicted count of that class.
    pub fn push(&mut self, bit: u8, count: u32) -> Option<u32> {
        if bit == 1 {
            self.buf1.push(count)
        } else {
            self.buf0.push(count)
        }
    }

    #[inline]
    pub fn stats(&self) -> WindowStats {
        WindowStats::new(
            self.buf1.len() as u64,
            self.buf1.sum(),
            self.buf0.len() as u64,
            self.buf0.sum(),
        )
    }

    pub fn is_consistent(&self) -> bool {
        self.buf0.sum() == self.buf0.recomputed_sum() && self.buf1.sum() == self.buf1.recomputed_sum()
    }
}
