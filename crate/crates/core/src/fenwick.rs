//! Fenwick (binary indexed) tree over counts, used for inversion counting and
//! for order-statistic slot selection in the permutation sampler.

#[derive(Clone, Debug)]
pub(crate) struct Fenwick {
    tree: Vec<u32>,
    len: usize,
    mask: usize,
}

impl Fenwick {
    /// Tree over positions `1..=len`, all counts zero.
    pub(crate) fn zeros(len: usize) -> Self {
        let mut mask = 1;
        while mask * 2 <= len {
            mask *= 2;
        }
        Fenwick {
            tree: vec![0; len + 1],
            len,
            mask,
        }
    }

    /// Tree over positions `1..=len`, all counts one. Built in O(len).
    pub(crate) fn ones(len: usize) -> Self {
        let mut f = Self::zeros(len);
        for i in 1..=len {
            f.tree[i] += 1;
            let parent = i + (i & i.wrapping_neg());
            if parent <= len {
                f.tree[parent] += f.tree[i];
            }
        }
        f
    }

    pub(crate) fn add(&mut self, mut pos: usize, delta: i32) {
        debug_assert!(pos >= 1 && pos <= self.len);
        while pos <= self.len {
            self.tree[pos] = self.tree[pos].wrapping_add_signed(delta);
            pos += pos & pos.wrapping_neg();
        }
    }

    /// Sum of counts over `1..=pos`.
    pub(crate) fn prefix_sum(&self, mut pos: usize) -> u32 {
        let mut sum = 0;
        while pos > 0 {
            sum += self.tree[pos];
            pos &= pos - 1;
        }
        sum
    }

    /// Smallest position `p` with `prefix_sum(p) >= k`, for `k >= 1`.
    /// Requires that such a position exists.
    pub(crate) fn select(&self, k: u32) -> usize {
        debug_assert!(k >= 1);
        let mut pos = 0;
        let mut rem = k;
        let mut bit = self.mask;
        while bit > 0 {
            let next = pos + bit;
            if next <= self.len && self.tree[next] < rem {
                pos = next;
                rem -= self.tree[next];
            }
            bit >>= 1;
        }
        debug_assert!(pos < self.len);
        pos + 1
    }
}
