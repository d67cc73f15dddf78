//! Alphabets, finite words, and right-rooted (suffix-closed) tree families.
//!
//! A [`Word`] is a finite sequence of symbol indices stored **root-outward**:
//! `symbols[0]` is the outermost symbol — the one applied last when the word
//! acts on a point by prepending — and dropping `symbols[0]` yields the
//! parent word. A finite set of words is **right-rooted** when it contains
//! the empty word and is closed under taking parents. Such a set describes a
//! tree hanging off a root: the empty word is the root, and each word is
//! attached to the word obtained by removing its outermost symbol.
//!
//! An [`Alphabet`] may carry a fixed-point-free involution pairing each
//! symbol with its inverse. The pairing is always `i <-> i ^ 1`, the layout
//! used for symmetric free-group generators: symbol `2i` is the generator
//! `b_i` and symbol `2i + 1` is its inverse. A word is *reduced* when no
//! symbol is immediately followed by its inverse.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dense symbol index into an [`Alphabet`].
pub type Symbol = u32;

/// Errors from word and tree construction.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    /// An operation needed an involution (or a valid symbol) the alphabet
    /// does not have.
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    /// A word set does not form a right-rooted tree.
    #[error("invalid word set: {0}")]
    InvalidWordSet(String),
}

/// A finite symbol alphabet `0..size`, optionally with the fixed-point-free
/// involution `i <-> i ^ 1` marking symbol pairs as mutual inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    size: u32,
    involution: bool,
}

impl Alphabet {
    /// An alphabet of `size` symbols with no inverse pairing.
    ///
    /// # Panics
    /// Panics if `size` is zero.
    #[must_use]
    pub fn plain(size: usize) -> Self {
        assert!(size > 0, "alphabet must have at least one symbol");
        Self {
            size: size as u32,
            involution: false,
        }
    }

    /// The symmetric generator alphabet of the free group of the given rank:
    /// `2 * rank` symbols with `2i` and `2i + 1` paired as inverses.
    ///
    /// # Panics
    /// Panics if `rank` is zero.
    #[must_use]
    pub fn free_group(rank: usize) -> Self {
        assert!(rank > 0, "free group rank must be positive");
        Self {
            size: (2 * rank) as u32,
            involution: true,
        }
    }

    /// Number of symbols.
    #[must_use]
    pub fn size(&self) -> usize {
        self.size as usize
    }

    /// Whether the alphabet carries the inverse involution.
    #[must_use]
    pub fn has_involution(&self) -> bool {
        self.involution
    }

    /// The inverse of `s` under the involution, if the alphabet has one.
    #[must_use]
    pub fn inverse(&self, s: Symbol) -> Option<Symbol> {
        (self.involution && s < self.size).then_some(s ^ 1)
    }

    /// Whether `s` is a valid symbol index.
    #[must_use]
    pub fn contains(&self, s: Symbol) -> bool {
        s < self.size
    }

    /// Iterator over all symbols in increasing order.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        0..self.size
    }
}

/// A finite word over some alphabet, stored root-outward.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<Symbol>,
}

impl Word {
    /// The empty word.
    #[must_use]
    pub fn empty() -> Self {
        Self::default()
    }

    /// A word from an explicit symbol sequence (outermost symbol first).
    #[must_use]
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self { symbols }
    }

    /// Word length.
    #[must_use]
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Whether this is the empty word.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The symbol sequence, outermost first.
    #[must_use]
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// The outermost symbol (`symbols[0]`), if any.
    #[must_use]
    pub fn outer_symbol(&self) -> Option<Symbol> {
        self.symbols.first().copied()
    }

    /// The root-adjacent symbol — the **last** stored symbol, i.e. the one
    /// next to the point the word is applied to.
    #[must_use]
    pub fn root_symbol(&self) -> Option<Symbol> {
        self.symbols.last().copied()
    }

    /// The word with `s` prepended as the new outermost symbol.
    #[must_use]
    pub fn prepend(&self, s: Symbol) -> Self {
        let mut symbols = Vec::with_capacity(self.symbols.len() + 1);
        symbols.push(s);
        symbols.extend_from_slice(&self.symbols);
        Self { symbols }
    }

    /// The parent word (outermost symbol dropped); `None` for the empty word.
    #[must_use]
    pub fn parent(&self) -> Option<Self> {
        if self.symbols.is_empty() {
            None
        } else {
            Some(Self {
                symbols: self.symbols[1..].to_vec(),
            })
        }
    }

    /// The word `s ⌢ self` after free cancellation at the interface: when
    /// `s` is the inverse of the current outermost symbol the two cancel,
    /// otherwise `s` is prepended. On alphabets without involution this is
    /// plain prepending.
    #[must_use]
    pub fn prepend_reduced(&self, s: Symbol, alphabet: &Alphabet) -> Self {
        match (alphabet.inverse(s), self.outer_symbol()) {
            (Some(inv), Some(outer)) if inv == outer => {
                self.parent().expect("outer symbol implies non-empty word")
            }
            _ => self.prepend(s),
        }
    }

    /// Concatenation `self ⌢ other` (self outermost).
    #[must_use]
    pub fn concat(&self, other: &Word) -> Self {
        let mut symbols = Vec::with_capacity(self.len() + other.len());
        symbols.extend_from_slice(&self.symbols);
        symbols.extend_from_slice(&other.symbols);
        Self { symbols }
    }

    /// Whether all symbols are valid for `alphabet`.
    #[must_use]
    pub fn valid_for(&self, alphabet: &Alphabet) -> bool {
        self.symbols.iter().all(|&s| alphabet.contains(s))
    }

    /// Whether no symbol is adjacent to its inverse (always true for
    /// alphabets without involution).
    #[must_use]
    pub fn is_reduced(&self, alphabet: &Alphabet) -> bool {
        if !alphabet.has_involution() {
            return true;
        }
        self.symbols.windows(2).all(|w| w[1] != (w[0] ^ 1))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return write!(f, "e");
        }
        let mut first = true;
        for s in &self.symbols {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

impl From<&[Symbol]> for Word {
    fn from(symbols: &[Symbol]) -> Self {
        Self::new(symbols.to_vec())
    }
}

/// Whether `words` (as a set) contains the empty word and is closed under
/// dropping outermost symbols.
#[must_use]
pub fn is_right_rooted(words: &[Word]) -> bool {
    let set: HashSet<&Word> = words.iter().collect();
    if !set.contains(&Word::empty()) {
        return false;
    }
    words.iter().all(|w| match w.parent() {
        None => true,
        Some(p) => set.contains(&p),
    })
}

/// A right-rooted tree: a suffix-closed finite set of words containing the
/// empty word, stored in level order (by length, lexicographic within each
/// level) with parent and child links.
#[derive(Debug, Clone)]
pub struct RightRootedTree {
    words: Vec<Word>,
    parent: Vec<usize>,
    children: Vec<Vec<(Symbol, usize)>>,
    level_start: Vec<usize>,
    index: HashMap<Word, usize>,
    height: usize,
}

impl RightRootedTree {
    /// Builds a tree from an arbitrary word collection.
    ///
    /// Duplicates are merged. Fails with [`WordError::InvalidWordSet`] if
    /// the set does not contain the empty word or is not suffix-closed.
    pub fn from_words(words: Vec<Word>) -> Result<Self, WordError> {
        let mut words: Vec<Word> = {
            let set: HashSet<Word> = words.into_iter().collect();
            set.into_iter().collect()
        };
        words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        if words.first().map(Word::is_empty) != Some(true) {
            return Err(WordError::InvalidWordSet(
                "the empty word (root) is missing".into(),
            ));
        }
        let index: HashMap<Word, usize> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut parent = vec![0usize; words.len()];
        let mut children: Vec<Vec<(Symbol, usize)>> = vec![Vec::new(); words.len()];
        for (i, w) in words.iter().enumerate() {
            if let Some(p) = w.parent() {
                let pi = *index.get(&p).ok_or_else(|| {
                    WordError::InvalidWordSet(format!("word {w} lacks its parent {p}"))
                })?;
                parent[i] = pi;
                children[pi].push((w.outer_symbol().expect("non-root has a symbol"), i));
            }
        }
        for ch in &mut children {
            ch.sort_by_key(|&(s, _)| s);
        }
        let height = words.last().map_or(0, Word::len);
        let mut level_start = Vec::with_capacity(height + 2);
        let mut level = 0usize;
        level_start.push(0);
        for (i, w) in words.iter().enumerate() {
            while w.len() > level {
                level += 1;
                level_start.push(i);
            }
        }
        level_start.push(words.len());
        Ok(Self {
            words,
            parent,
            children,
            level_start,
            index,
            height,
        })
    }

    /// All words in level order.
    #[must_use]
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// Number of words (including the root).
    #[must_use]
    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// Always false: a tree contains at least the root.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Maximum word length.
    #[must_use]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Index range of the words at `level`.
    #[must_use]
    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        if level > self.height {
            return 0..0;
        }
        self.level_start[level]..self.level_start[level + 1]
    }

    /// The word at `index` (level order).
    #[must_use]
    pub fn word(&self, index: usize) -> &Word {
        &self.words[index]
    }

    /// Index of the parent of the word at `index` (the root is its own
    /// parent).
    #[must_use]
    pub fn parent_index(&self, index: usize) -> usize {
        self.parent[index]
    }

    /// Children of the word at `index` as `(outer symbol, child index)`,
    /// sorted by symbol.
    #[must_use]
    pub fn children_of(&self, index: usize) -> &[(Symbol, usize)] {
        &self.children[index]
    }

    /// Whether `word` belongs to the tree.
    #[must_use]
    pub fn contains(&self, word: &Word) -> bool {
        self.index.contains_key(word)
    }

    /// Index of `word`, if present.
    #[must_use]
    pub fn position(&self, word: &Word) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Largest symbol used anywhere in the tree, if any word is non-empty.
    #[must_use]
    pub fn max_symbol(&self) -> Option<Symbol> {
        self.words
            .iter()
            .flat_map(|w| w.symbols().iter().copied())
            .max()
    }

    /// A short deterministic label (word count and height) for reports.
    #[must_use]
    pub fn label(&self) -> String {
        format!("t{}h{}", self.len(), self.height)
    }
}

/// Whether prepending `s` to `w` keeps the word admissible under the given
/// constraints: reduced means `s` must not cancel against the current
/// outermost symbol; `forbid_root` constrains only the root-adjacent symbol
/// (so it binds exactly when `w` is empty).
fn prepend_allowed(
    alphabet: &Alphabet,
    w: &Word,
    s: Symbol,
    reduced: bool,
    forbid_root: Option<Symbol>,
) -> bool {
    if reduced {
        if let Some(outer) = w.outer_symbol() {
            if outer ^ 1 == s {
                return false;
            }
        }
    }
    let _ = alphabet;
    if w.is_empty() {
        if let Some(f) = forbid_root {
            if s == f {
                return false;
            }
        }
    }
    true
}

fn check_constraints(
    alphabet: &Alphabet,
    reduced: bool,
    forbid_first: Option<Symbol>,
) -> Result<(), WordError> {
    if reduced && !alphabet.has_involution() {
        return Err(WordError::InvalidAlphabet(
            "reduced words need an involution alphabet".into(),
        ));
    }
    if let Some(f) = forbid_first {
        if !alphabet.has_involution() {
            return Err(WordError::InvalidAlphabet(
                "forbid_first needs an involution alphabet".into(),
            ));
        }
        if !alphabet.contains(f) {
            return Err(WordError::InvalidAlphabet(format!(
                "forbidden symbol {f} is outside the alphabet"
            )));
        }
    }
    Ok(())
}

/// The complete tree of all admissible words of length at most `n`:
/// every word over `alphabet`, optionally restricted to reduced words,
/// optionally excluding words whose root-adjacent symbol is `forbid_first`.
///
/// With an involution alphabet, `reduced = true`, and
/// `forbid_first = Some(inverse of a)`, this is the ball of radius `n` of
/// reduced words that may be prepended at a point whose first symbol is `a`.
pub fn complete_tree(
    alphabet: &Alphabet,
    n: usize,
    reduced: bool,
    forbid_first: Option<Symbol>,
) -> Result<RightRootedTree, WordError> {
    check_constraints(alphabet, reduced, forbid_first)?;
    let mut words = vec![Word::empty()];
    let mut level = vec![Word::empty()];
    for _ in 0..n {
        // Children of a lexicographically sorted level, generated with the
        // prepended symbol as the outer loop, come out sorted as well.
        let mut next = Vec::with_capacity(level.len() * alphabet.size());
        for s in alphabet.symbols() {
            for w in &level {
                if prepend_allowed(alphabet, w, s, reduced, forbid_first) {
                    next.push(w.prepend(s));
                }
            }
        }
        words.extend_from_slice(&next);
        level = next;
        if level.is_empty() {
            break;
        }
    }
    RightRootedTree::from_words(words)
}

/// A pseudo-random right-rooted tree grown by repeatedly prepending a random
/// admissible symbol to a random extendable word, until `target_word_count`
/// words exist (or no word can be extended). Deterministic in `seed`.
///
/// # Panics
/// Panics if `target_word_count` is zero.
pub fn random_tree(
    alphabet: &Alphabet,
    max_height: usize,
    target_word_count: usize,
    seed: u64,
    reduced: bool,
    forbid_first: Option<Symbol>,
) -> Result<RightRootedTree, WordError> {
    assert!(target_word_count >= 1, "a tree has at least its root");
    check_constraints(alphabet, reduced, forbid_first)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = vec![Word::empty()];
    let mut present: HashSet<Word> = words.iter().cloned().collect();
    while words.len() < target_word_count {
        // A word is extendable when it is short enough and at least one
        // admissible prepend is not yet present.
        let missing_of = |w: &Word| -> Vec<Symbol> {
            if w.len() >= max_height {
                return Vec::new();
            }
            alphabet
                .symbols()
                .filter(|&s| {
                    prepend_allowed(alphabet, w, s, reduced, forbid_first)
                        && !present.contains(&w.prepend(s))
                })
                .collect()
        };
        let extendable: Vec<usize> = (0..words.len())
            .filter(|&i| !missing_of(&words[i]).is_empty())
            .collect();
        if extendable.is_empty() {
            break;
        }
        let wi = extendable[rng.gen_range(0..extendable.len())];
        let missing = missing_of(&words[wi]);
        let s = missing[rng.gen_range(0..missing.len())];
        let new = words[wi].prepend(s);
        present.insert(new.clone());
        words.push(new);
    }
    RightRootedTree::from_words(words)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent word enumeration by radix counting, for count oracles.
    fn brute_force_count(
        alphabet: &Alphabet,
        n: usize,
        reduced: bool,
        forbid_first: Option<Symbol>,
    ) -> usize {
        let k = alphabet.size();
        let mut total = 1; // empty word
        for len in 1..=n {
            let mut digits = vec![0usize; len];
            loop {
                let word: Vec<Symbol> = digits.iter().map(|&d| d as Symbol).collect();
                let mut ok = true;
                if reduced {
                    ok &= word.windows(2).all(|w| w[1] != (w[0] ^ 1));
                }
                if let Some(f) = forbid_first {
                    ok &= *word.last().unwrap() != f;
                }
                if ok {
                    total += 1;
                }
                let mut pos = 0;
                loop {
                    if pos == len {
                        break;
                    }
                    digits[pos] += 1;
                    if digits[pos] < k {
                        break;
                    }
                    digits[pos] = 0;
                    pos += 1;
                }
                if pos == len {
                    break;
                }
            }
        }
        total
    }

    #[test]
    fn alphabet_involution_pairs_symbols() {
        let a = Alphabet::free_group(2);
        assert_eq!(a.size(), 4);
        assert_eq!(a.inverse(0), Some(1));
        assert_eq!(a.inverse(1), Some(0));
        assert_eq!(a.inverse(2), Some(3));
        assert_eq!(Alphabet::plain(3).inverse(0), None);
    }

    #[test]
    fn word_storage_is_root_outward() {
        let w = Word::empty().prepend(2).prepend(1).prepend(0);
        assert_eq!(w.symbols(), &[0, 1, 2]);
        assert_eq!(w.outer_symbol(), Some(0));
        assert_eq!(w.root_symbol(), Some(2));
        assert_eq!(w.parent().unwrap().symbols(), &[1, 2]);
        assert_eq!(w.to_string(), "0.1.2");
        assert_eq!(Word::empty().to_string(), "e");
    }

    #[test]
    fn reduction_checks_adjacent_inverses() {
        let a = Alphabet::free_group(2);
        assert!(Word::new(vec![0, 0, 2]).is_reduced(&a));
        assert!(!Word::new(vec![0, 1]).is_reduced(&a));
        assert!(!Word::new(vec![2, 3]).is_reduced(&a));
        assert!(Word::new(vec![1, 0]).is_reduced(&Alphabet::plain(2)));
    }

    #[test]
    fn reduced_prepend_cancels_inverse_pairs() {
        let a = Alphabet::free_group(2);
        let y = Word::new(vec![1, 2, 2]);
        // Prepending symbol 0 onto a word starting with its inverse cancels.
        assert_eq!(y.prepend_reduced(0, &a), Word::new(vec![2, 2]));
        // A non-inverse symbol is prepended as usual.
        assert_eq!(y.prepend_reduced(3, &a), Word::new(vec![3, 1, 2, 2]));
        // Without an involution nothing ever cancels.
        let p = Alphabet::plain(4);
        assert_eq!(y.prepend_reduced(0, &p), Word::new(vec![0, 1, 2, 2]));
        // Acting with a full word composes letter by letter, outermost last:
        // (b·a)·(a⁻¹bb) = b·bb = bbb.
        let w = Word::new(vec![2, 0]);
        let mut acted = y.clone();
        for &s in w.symbols().iter().rev() {
            acted = acted.prepend_reduced(s, &a);
        }
        assert_eq!(acted, Word::new(vec![2, 2, 2]));
    }

    #[test]
    fn right_rooted_recognizes_suffix_closure() {
        let w = |s: &[Symbol]| Word::new(s.to_vec());
        assert!(is_right_rooted(&[w(&[])]));
        assert!(is_right_rooted(&[w(&[]), w(&[0]), w(&[1, 0])]));
        assert!(!is_right_rooted(&[w(&[]), w(&[1, 0])]));
        assert!(!is_right_rooted(&[w(&[0])]));
    }

    #[test]
    fn complete_tree_of_height_zero_is_the_root() {
        let t = complete_tree(&Alphabet::plain(2), 0, false, None).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.height(), 0);
        assert!(t.contains(&Word::empty()));
    }

    #[test]
    fn complete_binary_tree_counts() {
        let t = complete_tree(&Alphabet::plain(2), 2, false, None).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.height(), 2);
    }

    #[test]
    fn reduced_ball_count_for_rank_two() {
        // Reduced words of length <= 2 over 4 symbols whose root-adjacent
        // symbol is not the inverse of symbol 0: levels 1 + 3 + 9.
        let a = Alphabet::free_group(2);
        let t = complete_tree(&a, 2, true, Some(1)).unwrap();
        assert_eq!(t.len(), 13);
    }

    #[test]
    fn complete_tree_counts_match_brute_force() {
        for size in [2usize, 3, 4] {
            let a = Alphabet::plain(size);
            for n in 0..=5 {
                let t = complete_tree(&a, n, false, None).unwrap();
                assert_eq!(t.len(), brute_force_count(&a, n, false, None));
                let expect: usize = (0..=n).map(|k| size.pow(k as u32)).sum();
                assert_eq!(t.len(), expect);
            }
        }
        for rank in [2usize, 3] {
            let a = Alphabet::free_group(rank);
            for n in 0..=5 {
                let t = complete_tree(&a, n, true, Some(1)).unwrap();
                assert_eq!(t.len(), brute_force_count(&a, n, true, Some(1)));
                let expect: usize = (0..=n).map(|k| (2 * rank - 1).pow(k as u32)).sum();
                assert_eq!(t.len(), expect);
            }
        }
    }

    #[test]
    fn complete_tree_levels_are_sorted_lexicographically() {
        let t = complete_tree(&Alphabet::free_group(2), 3, true, None).unwrap();
        for level in 0..=t.height() {
            let r = t.level_range(level);
            let words = &t.words()[r];
            let mut sorted = words.to_vec();
            sorted.sort();
            assert_eq!(words, &sorted[..]);
        }
    }

    #[test]
    fn parent_links_drop_the_outer_symbol() {
        let t = complete_tree(&Alphabet::plain(3), 3, false, None).unwrap();
        for i in 1..t.len() {
            let p = t.parent_index(i);
            assert_eq!(t.word(p), &t.word(i).parent().unwrap());
        }
        for (i, _) in t.words().iter().enumerate() {
            for &(s, ci) in t.children_of(i) {
                assert_eq!(t.word(ci).outer_symbol(), Some(s));
                assert_eq!(t.parent_index(ci), i);
            }
        }
    }

    #[test]
    fn constraints_require_involution() {
        let plain = Alphabet::plain(2);
        assert!(matches!(
            complete_tree(&plain, 2, true, None),
            Err(WordError::InvalidAlphabet(_))
        ));
        assert!(matches!(
            complete_tree(&plain, 2, false, Some(0)),
            Err(WordError::InvalidAlphabet(_))
        ));
        assert!(matches!(
            complete_tree(&Alphabet::free_group(2), 2, true, Some(9)),
            Err(WordError::InvalidAlphabet(_))
        ));
    }

    #[test]
    fn from_words_rejects_broken_sets() {
        let w = |s: &[Symbol]| Word::new(s.to_vec());
        assert!(matches!(
            RightRootedTree::from_words(vec![w(&[0])]),
            Err(WordError::InvalidWordSet(_))
        ));
        assert!(matches!(
            RightRootedTree::from_words(vec![w(&[]), w(&[0, 1])]),
            Err(WordError::InvalidWordSet(_))
        ));
    }

    #[test]
    fn random_tree_height_zero_is_the_root() {
        let t = random_tree(&Alphabet::plain(5), 0, 1, 7, false, None).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn random_tree_reaches_target_and_is_valid() {
        let a = Alphabet::plain(2);
        let t = random_tree(&a, 3, 5, 1, false, None).unwrap();
        assert_eq!(t.len(), 5);
        assert!(is_right_rooted(t.words()));

        let fg = Alphabet::free_group(2);
        let t = random_tree(&fg, 4, 20, 3, true, None).unwrap();
        assert_eq!(t.len(), 20);
        assert!(is_right_rooted(t.words()));
        assert!(t.words().iter().all(|w| w.is_reduced(&fg)));
    }

    #[test]
    fn random_tree_is_deterministic_in_seed() {
        let a = Alphabet::free_group(3);
        let t1 = random_tree(&a, 5, 40, 11, true, None).unwrap();
        let t2 = random_tree(&a, 5, 40, 11, true, None).unwrap();
        assert_eq!(t1.words(), t2.words());
        let t3 = random_tree(&a, 5, 40, 12, true, None).unwrap();
        assert_ne!(t1.words(), t3.words());
    }

    #[test]
    fn random_tree_saturates_when_alphabet_is_exhausted() {
        // Height 1 over two symbols caps at 3 words no matter the target.
        let t = random_tree(&Alphabet::plain(2), 1, 10, 5, false, None).unwrap();
        assert_eq!(t.len(), 3);
    }
}
