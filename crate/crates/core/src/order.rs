//! Transitively closed relations over dense indices.

/// Reachability matrix kept transitively closed on every insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Closure {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Closure {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Closure { n, words, bits: vec![0; n * words] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Adds a fresh index with no relations and returns it.
    pub fn grow(&mut self) -> usize {
        let n = self.n + 1;
        let words = n.div_ceil(64).max(1);
        if words != self.words {
            let mut bits = vec![0; n * words];
            for i in 0..self.n {
                bits[i * words..i * words + self.words].copy_from_slice(self.row(i));
            }
            self.bits = bits;
            self.words = words;
        } else {
            self.bits.extend(std::iter::repeat_n(0, words));
        }
        self.n = n;
        n - 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn get(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    fn set(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
    }

    /// Pairs that would become related if `a → b` were added, excluding existing ones.
    pub fn new_pairs(&self, a: usize, b: usize) -> Vec<(usize, usize)> {
        let before: Vec<usize> = (0..self.n).filter(|&x| x == a || self.get(x, a)).collect();
        let after: Vec<usize> = (0..self.n).filter(|&y| y == b || self.get(b, y)).collect();
        let mut out = Vec::new();
        for &x in &before {
            for &y in &after {
                if !self.get(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Inserts `a → b` and closes transitively.
    pub fn insert(&mut self, a: usize, b: usize) {
        for (x, y) in self.new_pairs(a, b) {
            self.set(x, y);
        }
    }

    pub fn has_cycle(&self) -> bool {
        (0..self.n).any(|i| self.get(i, i))
    }

    /// Covering pairs: `a → b` with nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if self.get(a, b) && !(0..self.n).any(|m| self.get(a, m) && self.get(m, b)) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// A linear extension preferring lower indices, or `None` on a cycle.
    pub fn linearize(&self) -> Option<Vec<usize>> {
        let mut done = vec![false; self.n];
        let mut out = Vec::with_capacity(self.n);
        while out.len() < self.n {
            let next = (0..self.n).find(|&i| !done[i] && (0..self.n).all(|j| done[j] || j == i || !self.get(j, i)))?;
            if self.get(next, next) {
                return None;
            }
            done[next] = true;
            out.push(next);
        }
        Some(out)
    }
}
