/// Fixed-capacity bitset over entity indices of one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntitySet {
    words: Vec<u64>,
    capacity: usize,
}

impl EntitySet {
    pub fn empty(capacity: usize) -> Self {
        EntitySet { words: vec![0; capacity.div_ceil(64)], capacity }
    }

    pub fn full(capacity: usize) -> Self {
        let mut s = Self::empty(capacity);
        for i in 0..capacity {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(capacity: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(capacity);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.capacity);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.capacity && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        iter_words(self.words.iter().copied())
    }

    /// Indices in both `self` and `other`.
    pub fn iter_and<'a>(&'a self, other: &'a EntitySet) -> impl Iterator<Item = usize> + 'a {
        iter_words(self.words.iter().zip(&other.words).map(|(a, b)| a & b))
    }

    pub fn intersection_len(&self, other: &EntitySet) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn difference(&self, other: &EntitySet) -> EntitySet {
        EntitySet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(), capacity: self.capacity }
    }

    pub fn is_subset(&self, other: &EntitySet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &EntitySet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &EntitySet) -> EntitySet {
        EntitySet { words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(), capacity: self.capacity }
    }
}

fn iter_words(words: impl Iterator<Item = u64>) -> impl Iterator<Item = usize> {
    words.enumerate().flat_map(|(wi, mut w)| {
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let bit = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(wi * 64 + bit)
        })
    })
}
