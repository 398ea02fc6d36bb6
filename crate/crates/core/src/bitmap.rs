//! Fixed-length row bitmaps backed by `u64` words.

const WORD: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn zeros(len: usize) -> Self {
        Bitmap {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Bitmap {
            words: vec![u64::MAX; len.div_ceil(WORD)],
            len,
        };
        b.clear_tail();
        b
    }

    pub fn from_rows(len: usize, rows: impl IntoIterator<Item = usize>) -> Self {
        let mut b = Bitmap::zeros(len);
        for r in rows {
            b.insert(r);
        }
        b
    }

    /// Rebuilds a bitmap from raw words; bits past `len` are cleared.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Option<Self> {
        if words.len() != len.div_ceil(WORD) {
            return None;
        }
        words.shrink_to_fit();
        let mut b = Bitmap { words, len };
        b.clear_tail();
        Some(b)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Panics if `row >= len`.
    pub fn insert(&mut self, row: usize) {
        assert!(
            row < self.len,
            "row {row} out of range for bitmap of {}",
            self.len
        );
        self.words[row / WORD] |= 1 << (row % WORD);
    }

    pub fn contains(&self, row: usize) -> bool {
        row < self.len && self.words[row / WORD] & (1 << (row % WORD)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and_assign(&mut self, other: &Bitmap) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn or_assign(&mut self, other: &Bitmap) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * WORD + tz)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_masks_tail() {
        let b = Bitmap::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert!(b.contains(69));
        assert!(!b.contains(70));
    }

    #[test]
    fn iter_ones_roundtrips_rows() {
        let rows = vec![0, 3, 63, 64, 127, 128];
        let b = Bitmap::from_rows(130, rows.iter().copied());
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), rows);
    }

    #[test]
    fn from_words_rejects_wrong_length() {
        assert!(Bitmap::from_words(65, vec![0]).is_none());
        let b = Bitmap::from_words(65, vec![u64::MAX, u64::MAX]).unwrap();
        assert_eq!(b.count_ones(), 65);
    }
}
