//! The {0,1} transition-constraint matrix viewed as a digraph over symbols
//! {1..K}: trimming to the standing assumption (every row and every column
//! keeps a 1), admissibility checks, and streaming enumeration of admissible
//! and cyclically-closed words.
//!
//! Enumeration never materializes the word set: counts grow geometrically
//! with the length, so callers get a visitor or a lazy iterator.

use serde::Serialize;

use crate::error::{Error, Result};

/// A finite admissible word over {1..K}, 1-based symbols.
pub type Word = Vec<usize>;

/// K-by-K matrix of zeros and ones declaring which symbol transitions are
/// admissible. `entries[i*k + j] == 1` means symbol `i+1` may be followed by
/// symbol `j+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constraint {
    k: usize,
    entries: Vec<u8>,
}

/// Result of [`Constraint::trim`]: the surviving original symbols (1-based,
/// ascending) and the induced sub-constraint.
#[derive(Clone, Debug)]
pub struct Trimmed {
    pub kept: Vec<usize>,
    pub constraint: Constraint,
}

impl Constraint {
    pub fn new(k: usize, entries: Vec<u8>) -> Result<Self> {
        if k == 0 {
            return Err(Error::BadConstraintShape("size zero".into()));
        }
        if entries.len() != k * k {
            return Err(Error::BadConstraintShape(format!(
                "expected {} entries, got {}",
                k * k,
                entries.len()
            )));
        }
        if entries.iter().any(|&e| e > 1) {
            return Err(Error::BadConstraintEntry);
        }
        Ok(Constraint { k, entries })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::BadConstraintShape(format!(
                "ragged rows in a {k}-symbol constraint"
            )));
        }
        Constraint::new(k, rows.concat())
    }

    pub fn all_ones(k: usize) -> Self {
        Constraint {
            k,
            entries: vec![1; k * k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether symbol `from` may be followed by symbol `to` (both 1-based).
    #[inline]
    pub fn allows(&self, from: usize, to: usize) -> bool {
        debug_assert!(from >= 1 && from <= self.k && to >= 1 && to <= self.k);
        self.entries[(from - 1) * self.k + (to - 1)] == 1
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.k)
            .map(|i| self.entries[i * self.k..(i + 1) * self.k].to_vec())
            .collect()
    }

    /// Iteratively removes symbols whose row or column is all zero until a
    /// fixpoint. The result satisfies the standing assumption (every row and
    /// every column of the surviving submatrix has a 1). Errs when nothing
    /// survives, i.e. no bi-infinite admissible sequence exists.
    pub fn trim(&self) -> Result<Trimmed> {
        let mut alive = vec![true; self.k];
        loop {
            let mut changed = false;
            for i in 0..self.k {
                if !alive[i] {
                    continue;
                }
                let row_empty = (0..self.k)
                    .all(|j| !alive[j] || self.entries[i * self.k + j] == 0);
                let col_empty = (0..self.k)
                    .all(|j| !alive[j] || self.entries[j * self.k + i] == 0);
                if row_empty || col_empty {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let kept: Vec<usize> = (0..self.k).filter(|&i| alive[i]).map(|i| i + 1).collect();
        if kept.is_empty() {
            return Err(Error::EmptyAfterTrim);
        }
        let r = kept.len();
        let mut entries = Vec::with_capacity(r * r);
        for &i in &kept {
            for &j in &kept {
                entries.push(self.entries[(i - 1) * self.k + (j - 1)]);
            }
        }
        Ok(Trimmed {
            kept,
            constraint: Constraint { k: r, entries },
        })
    }

    pub fn is_trimmed(&self) -> bool {
        (0..self.k).all(|i| {
            (0..self.k).any(|j| self.entries[i * self.k + j] == 1)
                && (0..self.k).any(|j| self.entries[j * self.k + i] == 1)
        })
    }

    /// Number of admissible words of length `n`, i.e. the sum of all entries
    /// of the (n-1)-th integer power of the constraint matrix.
    pub fn count_words(&self, n: usize) -> u128 {
        assert!(n >= 1);
        self.int_power(n - 1).iter().sum()
    }

    /// Number of cyclically-closed admissible words of length `n`, i.e. the
    /// trace of the n-th integer power of the constraint matrix.
    pub fn count_periodic_words(&self, n: usize) -> u128 {
        assert!(n >= 1);
        let p = self.int_power(n);
        (0..self.k).map(|i| p[i * self.k + i]).sum()
    }

    fn int_power(&self, n: usize) -> Vec<u128> {
        let k = self.k;
        let mut acc: Vec<u128> = vec![0; k * k];
        for i in 0..k {
            acc[i * k + i] = 1;
        }
        for _ in 0..n {
            let mut next = vec![0u128; k * k];
            for i in 0..k {
                for l in 0..k {
                    let a = acc[i * k + l];
                    if a == 0 {
                        continue;
                    }
                    for j in 0..k {
                        next[i * k + j] += a * self.entries[l * k + j] as u128;
                    }
                }
            }
            acc = next;
        }
        acc
    }
}

/// True iff every adjacent pair of symbols is an admissible transition.
/// Length-1 words are vacuously admissible.
pub fn is_admissible(word: &[usize], c: &Constraint) -> Result<bool> {
    if word.is_empty() {
        return Err(Error::InvalidParameter("empty word".into()));
    }
    for &s in word {
        if s < 1 || s > c.k() {
            return Err(Error::SymbolOutOfRange { symbol: s, k: c.k() });
        }
    }
    Ok(word.windows(2).all(|w| c.allows(w[0], w[1])))
}

/// True iff the word is admissible and its last-to-first transition is also
/// admissible, so it generates a periodic switching law.
pub fn closes_cycle(word: &[usize], c: &Constraint) -> Result<bool> {
    Ok(is_admissible(word, c)? && c.allows(word[word.len() - 1], word[0]))
}

/// Visits every admissible word of length `n` exactly once, in lexicographic
/// order, reusing one buffer. Dead-end prefixes are backtracked, so this is
/// correct on untrimmed constraints too.
pub fn for_each_word<F: FnMut(&[usize])>(c: &Constraint, n: usize, mut f: F) {
    assert!(n >= 1);
    let mut buf = Vec::with_capacity(n);
    dfs_words(c, n, &mut buf, &mut f);
}

fn dfs_words<F: FnMut(&[usize])>(c: &Constraint, n: usize, buf: &mut Vec<usize>, f: &mut F) {
    if buf.len() == n {
        f(buf);
        return;
    }
    let last = buf.last().copied();
    for s in 1..=c.k() {
        if last.map_or(true, |p| c.allows(p, s)) {
            buf.push(s);
            dfs_words(c, n, buf, f);
            buf.pop();
        }
    }
}

/// Visits every cyclically-closed word of length `n` in lexicographic order.
/// With `dedupe_rotations`, only the lexicographically minimal rotation of
/// each cyclic class is visited; valid whenever the consumer only cares
/// about quantities invariant under cyclic rotation (spectral radii of the
/// word products are, since rho(AB) = rho(BA)).
pub fn for_each_periodic_word<F: FnMut(&[usize])>(
    c: &Constraint,
    n: usize,
    dedupe_rotations: bool,
    mut f: F,
) {
    for_each_word(c, n, |w| {
        if c.allows(w[w.len() - 1], w[0]) && (!dedupe_rotations || is_minimal_rotation(w)) {
            f(w);
        }
    });
}

/// Lazy iterator over admissible words of length `n` (lexicographic).
pub fn words<'a>(c: &'a Constraint, n: usize) -> Words<'a> {
    assert!(n >= 1);
    Words {
        c,
        n,
        word: Vec::with_capacity(n),
        primed: false,
        done: false,
    }
}

/// Lazy iterator over cyclically-closed words of length `n`.
pub fn periodic_words<'a>(c: &'a Constraint, n: usize, dedupe_rotations: bool) -> PeriodicWords<'a> {
    PeriodicWords {
        inner: words(c, n),
        dedupe_rotations,
    }
}

pub struct Words<'a> {
    c: &'a Constraint,
    n: usize,
    word: Vec<usize>,
    primed: bool,
    done: bool,
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let mut lower = if self.primed {
            // advance past the word just yielded
            match self.word.pop() {
                Some(last) => last + 1,
                None => {
                    self.done = true;
                    return None;
                }
            }
        } else {
            self.primed = true;
            1
        };
        loop {
            let prev = self.word.last().copied();
            let next = (lower..=self.c.k()).find(|&s| prev.map_or(true, |p| self.c.allows(p, s)));
            match next {
                Some(s) => {
                    self.word.push(s);
                    lower = 1;
                    if self.word.len() == self.n {
                        return Some(self.word.clone());
                    }
                }
                None => match self.word.pop() {
                    Some(p) => lower = p + 1,
                    None => {
                        self.done = true;
                        return None;
                    }
                },
            }
        }
    }
}

pub struct PeriodicWords<'a> {
    inner: Words<'a>,
    dedupe_rotations: bool,
}

impl Iterator for PeriodicWords<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        loop {
            let w = self.inner.next()?;
            if self.inner.c.allows(w[w.len() - 1], w[0])
                && (!self.dedupe_rotations || is_minimal_rotation(&w))
            {
                return Some(w);
            }
        }
    }
}

/// Whether `w` is lexicographically minimal among its cyclic rotations.
fn is_minimal_rotation(w: &[usize]) -> bool {
    let n = w.len();
    for r in 1..n {
        for i in 0..n {
            let a = w[(r + i) % n];
            let b = w[i];
            if a < b {
                return false;
            }
            if a > b {
                break;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cons(rows: &[&[u8]]) -> Constraint {
        Constraint::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn lcg(seed: &mut u64) -> u64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        *seed >> 33
    }

    fn random_constraint(k: usize, seed: &mut u64) -> Constraint {
        Constraint::new(k, (0..k * k).map(|_| (lcg(seed) % 5 < 3) as u8).collect()).unwrap()
    }

    #[test]
    fn trim_examples() {
        let t = cons(&[&[1, 1], &[0, 0]]).trim().unwrap();
        assert_eq!(t.kept, vec![1]);
        assert_eq!(t.constraint, cons(&[&[1]]));

        let full = Constraint::all_ones(3);
        let t = full.trim().unwrap();
        assert_eq!(t.kept, vec![1, 2, 3]);
        assert_eq!(t.constraint, full);

        assert!(matches!(
            cons(&[&[0, 1], &[0, 0]]).trim(),
            Err(Error::EmptyAfterTrim)
        ));
    }

    #[test]
    fn admissibility_examples() {
        let c = cons(&[&[0, 1], &[1, 0]]);
        assert!(is_admissible(&[1, 2], &c).unwrap());
        assert!(!is_admissible(&[1, 1], &c).unwrap());
        assert!(is_admissible(&[2], &c).unwrap());
        assert!(matches!(
            is_admissible(&[3], &c),
            Err(Error::SymbolOutOfRange { .. })
        ));
        assert!(closes_cycle(&[1, 2], &c).unwrap());
        assert!(!closes_cycle(&[1], &c).unwrap());
    }

    #[test]
    fn word_enumeration_examples() {
        let c = cons(&[&[0, 1], &[1, 0]]);
        let all: Vec<Word> = words(&c, 2).collect();
        assert_eq!(all, vec![vec![1, 2], vec![2, 1]]);
        let per: Vec<Word> = periodic_words(&c, 2, false).collect();
        assert_eq!(per, vec![vec![1, 2], vec![2, 1]]);
        let deduped: Vec<Word> = periodic_words(&c, 2, true).collect();
        assert_eq!(deduped, vec![vec![1, 2]]);
        assert_eq!(periodic_words(&c, 1, false).count(), 0);
        assert_eq!(c.count_periodic_words(1), 0);
        assert_eq!(words(&c, 1).count(), 2);
    }

    #[test]
    fn visitor_and_iterator_agree() {
        let mut seed = 9u64;
        for _ in 0..20 {
            let c = random_constraint(3, &mut seed);
            for n in 1..=5 {
                let mut visited = Vec::new();
                for_each_word(&c, n, |w| visited.push(w.to_vec()));
                let iterated: Vec<Word> = words(&c, n).collect();
                assert_eq!(visited, iterated);
            }
        }
    }

    #[test]
    fn counts_match_integer_matrix_powers() {
        let mut seed = 1234u64;
        for _ in 0..40 {
            let k = 2 + (lcg(&mut seed) % 3) as usize; // K in 2..=4
            let c = random_constraint(k, &mut seed);
            for n in 1..=8 {
                let mut count = 0u128;
                for_each_word(&c, n, |_| count += 1);
                assert_eq!(count, c.count_words(n), "word count, k={k} n={n}");

                let mut pcount = 0u128;
                for_each_periodic_word(&c, n, false, |_| pcount += 1);
                assert_eq!(pcount, c.count_periodic_words(n), "cycle count, k={k} n={n}");
            }
        }
    }

    #[test]
    fn periodic_words_close_and_dedupe_covers_classes() {
        let mut seed = 555u64;
        for _ in 0..20 {
            let c = random_constraint(4, &mut seed);
            for n in 1..=6 {
                let mut reps = Vec::new();
                for_each_periodic_word(&c, n, true, |w| {
                    assert!(closes_cycle(w, &c).unwrap());
                    reps.push(w.to_vec());
                });
                // Every closed word's minimal rotation must appear exactly once
                // among the deduped representatives.
                let mut classes = std::collections::BTreeSet::new();
                for_each_periodic_word(&c, n, false, |w| {
                    let min = (0..w.len())
                        .map(|r| {
                            let mut v = w.to_vec();
                            v.rotate_left(r);
                            v
                        })
                        .min()
                        .unwrap();
                    classes.insert(min);
                });
                let rep_set: std::collections::BTreeSet<_> = reps.iter().cloned().collect();
                assert_eq!(rep_set.len(), reps.len(), "duplicate representative");
                assert_eq!(rep_set, classes);
            }
        }
    }

    #[test]
    fn trimmed_words_always_extend() {
        let mut seed = 777u64;
        let mut tried = 0;
        while tried < 15 {
            let c = random_constraint(3, &mut seed);
            let Ok(t) = c.trim() else { continue };
            tried += 1;
            let c = t.constraint;
            for n in 1..=5 {
                for_each_word(&c, n, |w| {
                    let extends = (1..=c.k()).any(|s| c.allows(w[n - 1], s));
                    assert!(extends, "word {w:?} cannot extend under trimmed constraint");
                });
            }
        }
    }

    #[test]
    fn minimal_rotation_detection() {
        assert!(is_minimal_rotation(&[1, 2, 2]));
        assert!(!is_minimal_rotation(&[2, 1, 2]));
        assert!(!is_minimal_rotation(&[2, 2, 1]));
        assert!(is_minimal_rotation(&[1, 2, 1, 2]));
        assert!(!is_minimal_rotation(&[2, 1, 2, 1]));
        assert!(is_minimal_rotation(&[3]));
    }
}
