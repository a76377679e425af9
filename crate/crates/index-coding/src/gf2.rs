//! Dense GF(2) linear algebra on u64-packed bit rows.
//!
//! Small helper used by the decodability checks: rows are XOR-combined,
//! and the central query is whether a target vector lies in the span of a
//! set of rows (returning the combination when it does).

/// A vector over GF(2) with a fixed number of columns, packed into u64 words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitVec {
    cols: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(cols: usize) -> Self {
        BitVec {
            cols,
            words: vec![0; cols.div_ceil(64)],
        }
    }

    /// Unit vector e_i.
    pub fn unit(cols: usize, i: usize) -> Self {
        let mut v = Self::zeros(cols);
        v.set(i, true);
        v
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(cols: usize, idx: I) -> Self {
        let mut v = Self::zeros(cols);
        for i in idx {
            // repeated indices cancel, matching XOR semantics
            v.set(i, !v.get(i));
        }
        v
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.cols);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.cols);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.cols, other.cols);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit, if any.
    pub fn first_set(&self) -> Option<usize> {
        for (w, word) in self.words.iter().enumerate() {
            if *word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
        }
        None
    }
}

/// Incremental row basis in row-echelon form over GF(2).
///
/// Each inserted row is tracked together with the set of original row
/// indices that were XORed to produce it, so span queries can report the
/// combination of input rows reproducing the target.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    cols: usize,
    /// (pivot column, reduced row, combination of original row ids)
    rows: Vec<(usize, BitVec, Vec<usize>)>,
    next_id: usize,
}

impl SpanBasis {
    pub fn new(cols: usize) -> Self {
        SpanBasis {
            cols,
            rows: Vec::new(),
            next_id: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Insert a row; returns the id assigned to it. Dependent rows are
    /// accepted (they simply do not extend the basis).
    pub fn insert(&mut self, row: BitVec) -> usize {
        debug_assert_eq!(row.cols(), self.cols);
        let id = self.next_id;
        self.next_id += 1;
        let mut r = row;
        let mut combo = vec![id];
        for (pivot, basis_row, basis_combo) in &self.rows {
            if r.get(*pivot) {
                r.xor_assign(basis_row);
                combo.extend_from_slice(basis_combo);
            }
        }
        if let Some(pivot) = r.first_set() {
            normalize_combo(&mut combo);
            self.rows.push((pivot, r, combo));
        }
        id
    }

    /// If `target` lies in the span, return the ids of the inserted rows
    /// whose XOR equals it (even multiplicity cancelled out).
    pub fn solve(&self, target: &BitVec) -> Option<Vec<usize>> {
        debug_assert_eq!(target.cols(), self.cols);
        let mut t = target.clone();
        let mut combo: Vec<usize> = Vec::new();
        for (pivot, row, row_combo) in &self.rows {
            if t.get(*pivot) {
                t.xor_assign(row);
                combo.extend_from_slice(row_combo);
            }
        }
        if t.is_zero() {
            normalize_combo(&mut combo);
            Some(combo)
        } else {
            None
        }
    }

    pub fn contains(&self, target: &BitVec) -> bool {
        self.solve(target).is_some()
    }
}

/// Keep each row id iff it appears an odd number of times.
fn normalize_combo(combo: &mut Vec<usize>) {
    combo.sort_unstable();
    let mut out = Vec::with_capacity(combo.len());
    let mut i = 0;
    while i < combo.len() {
        let mut j = i;
        while j < combo.len() && combo[j] == combo[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(combo[i]);
        }
        i = j;
    }
    *combo = out;
}
