/// Allocator for persistent label ids `1..=capacity`.
///
/// Ids are handed out lowest first. Once all are taken, the id seen least
/// recently is recycled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRegistry {
    first_seen: Vec<Option<usize>>,
    last_seen: Vec<Option<usize>>,
}

impl LabelRegistry {
    pub fn new(capacity: usize) -> Self {
        Self {
            first_seen: vec![None; capacity],
            last_seen: vec![None; capacity],
        }
    }

    pub fn capacity(&self) -> usize {
        self.first_seen.len()
    }

    pub fn is_allocated(&self, label: u32) -> bool {
        self.slot(label).is_some_and(|s| self.first_seen[s].is_some())
    }

    /// Allocated ids in ascending order.
    pub fn live(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.capacity()).filter(|&s| self.first_seen[s].is_some()).map(|s| s as u32 + 1)
    }

    pub fn last_seen(&self, label: u32) -> Option<usize> {
        self.slot(label).and_then(|s| self.last_seen[s])
    }

    /// Frames since allocation (or recycling), `None` for unknown ids.
    pub fn lifetime(&self, label: u32, frame: usize) -> Option<usize> {
        self.slot(label).and_then(|s| self.first_seen[s]).map(|f| frame.saturating_sub(f))
    }

    /// Marks `label` as observed at `frame`.
    pub fn touch(&mut self, label: u32, frame: usize) {
        if let Some(s) = self.slot(label) {
            self.first_seen[s].get_or_insert(frame);
            self.last_seen[s] = Some(frame);
        }
    }

    /// New id at `frame`, never one listed in `in_use`. Returns `None` only
    /// when every id is in use.
    pub fn allocate(&mut self, frame: usize, in_use: &[u32]) -> Option<u32> {
        let free = (0..self.capacity()).find(|&s| self.first_seen[s].is_none());
        let slot = free.or_else(|| {
            (0..self.capacity())
                .filter(|&s| !in_use.contains(&(s as u32 + 1)))
                .min_by_key(|&s| (self.last_seen[s], s))
        })?;
        self.first_seen[slot] = Some(frame);
        self.last_seen[slot] = Some(frame);
        Some(slot as u32 + 1)
    }

    fn slot(&self, label: u32) -> Option<usize> {
        (label >= 1 && (label as usize) <= self.capacity()).then(|| label as usize - 1)
    }
}
