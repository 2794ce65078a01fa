use std::collections::{HashMap, VecDeque};

pub const DEFAULT_CACHE_CAPACITY: usize = 10_000;

/// What a classify response offered, kept for feedback validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offer {
    pub query: String,
    pub candidates: Vec<String>,
}

/// Bounded map from query id to offer; the oldest entry is evicted first.
#[derive(Debug)]
pub struct CandidateCache {
    capacity: usize,
    order: VecDeque<String>,
    entries: HashMap<String, Offer>,
}

impl CandidateCache {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        CandidateCache {
            capacity,
            order: VecDeque::with_capacity(capacity),
            entries: HashMap::with_capacity(capacity),
        }
    }

    pub fn insert(&mut self, query_id: String, offer: Offer) {
        if self.entries.insert(query_id.clone(), offer).is_some() {
            return;
        }
        self.order.push_back(query_id);
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
    }

    pub fn get(&self, query_id: &str) -> Option<&Offer> {
        self.entries.get(query_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(q: &str) -> Offer {
        Offer {
            query: q.into(),
            candidates: vec!["a".into()],
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut cache = CandidateCache::new(2);
        cache.insert("1".into(), offer("one"));
        cache.insert("2".into(), offer("two"));
        cache.insert("3".into(), offer("three"));
        assert_eq!(cache.len(), 2);
        assert!(cache.get("1").is_none());
        assert_eq!(cache.get("3").unwrap().query, "three");
    }

    #[test]
    fn lookups_do_not_refresh() {
        let mut cache = CandidateCache::new(2);
        cache.insert("1".into(), offer("one"));
        cache.insert("2".into(), offer("two"));
        assert!(cache.get("1").is_some());
        cache.insert("3".into(), offer("three"));
        assert!(cache.get("1").is_none());
        assert!(cache.get("2").is_some());
    }
}
