//! Free-group word algebra over a fixed basis of rank `r`.
//!
//! Letters are nonzero signed integers: `k` is the k-th positive generator
//! (1-based), `-k` its inverse. The ASCII rendering maps generator `1..=26`
//! to `a..=z` and inverses to `A..=Z`, so `"Aba"` reads as a⁻¹·b·a.

use crate::error::WordError;
use std::fmt;

/// A signed generator index. Never zero; magnitude at most the ambient rank.
pub type Letter = i32;

/// Freely reduce a signed-letter sequence in place (single stack pass).
pub fn reduce_letters(letters: impl IntoIterator<Item = Letter>) -> Vec<Letter> {
    let mut stack: Vec<Letter> = Vec::new();
    for l in letters {
        if let Some(&top) = stack.last() {
            if top == -l {
                stack.pop();
                continue;
            }
        }
        stack.push(l);
    }
    stack
}

/// A freely reduced word in the free group of rank `rank`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    rank: usize,
    letters: Vec<Letter>,
}

impl Word {
    /// Build a word from raw letters, reducing them.
    pub fn reduce(rank: usize, letters: impl IntoIterator<Item = Letter>) -> Result<Self, WordError> {
        let raw: Vec<Letter> = letters.into_iter().collect();
        for &l in &raw {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(WordError::LetterOutOfRange(l, rank));
            }
        }
        Ok(Word { rank, letters: reduce_letters(raw) })
    }

    pub fn identity(rank: usize) -> Self {
        Word { rank, letters: Vec::new() }
    }

    /// The single-letter word for generator `gen` (1-based, may be negative).
    pub fn letter(rank: usize, gen: Letter) -> Self {
        debug_assert!(gen != 0 && gen.unsigned_abs() as usize <= rank);
        Word { rank, letters: vec![gen] }
    }

    /// Parse ASCII syntax: lowercase = generator, uppercase = inverse,
    /// whitespace ignored. Rejects ranks beyond what the letters name.
    pub fn parse(rank: usize, text: &str) -> Result<Self, WordError> {
        let mut letters = Vec::new();
        for c in text.chars() {
            if c.is_whitespace() {
                continue;
            }
            let l = match c {
                'a'..='z' => (c as i32 - 'a' as i32) + 1,
                'A'..='Z' => -((c as i32 - 'A' as i32) + 1),
                _ => return Err(WordError::LetterOutOfRange(0, rank)),
            };
            letters.push(l);
        }
        Word::reduce(rank, letters)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    /// Product `self · other`, reduced.
    pub fn times(&self, other: &Word) -> Word {
        debug_assert_eq!(self.rank, other.rank);
        Word {
            rank: self.rank,
            letters: reduce_letters(self.letters.iter().chain(other.letters.iter()).copied()),
        }
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n >= 0 { self.clone() } else { self.inverse() };
        let mut out = Word::identity(self.rank);
        for _ in 0..n.unsigned_abs() {
            out = out.times(&base);
        }
        out
    }

    /// `self · w · self⁻¹`.
    pub fn conjugate(&self, w: &Word) -> Word {
        self.times(w).times(&self.inverse())
    }

    /// Splits off the maximal conjugation layer: `w = conj · core · conj⁻¹`
    /// with `core` cyclically reduced (empty `core` only for the identity).
    pub fn conjugation_split(&self) -> (Word, Word) {
        let mut i = 0usize;
        let mut j = self.letters.len();
        while j - i >= 2 && self.letters[i] == -self.letters[j - 1] {
            i += 1;
            j -= 1;
        }
        let conj = Word { rank: self.rank, letters: self.letters[..i].to_vec() };
        let core = Word { rank: self.rank, letters: self.letters[i..j].to_vec() };
        (conj, core)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => f != -l,
            _ => true,
        }
    }

    /// Cyclic reduction: returns `(c, conj)` with `self = conj · c · conj⁻¹`
    /// and `c` the canonical rotation of the cyclic core.
    pub fn cyclic_reduce(&self) -> (CyclicWord, Word) {
        let (conj, core) = self.conjugation_split();
        let (cyc, rot) = CyclicWord::from_reduced(core.clone());
        // core = rot_k(canonical); canonical = s·t, core = t·s with |t| = n-k.
        // conj · core · conj⁻¹ = (conj·t⁻¹-free form) — recompute directly:
        // core = u·canonical·u⁻¹ where u is the prefix of core of length rot.
        let u = Word { rank: self.rank, letters: core.letters[..rot].to_vec() };
        (cyc, conj.times(&u))
    }

    /// Exact exponent `k` with `z^k == self`, if one exists. `z` nontrivial
    /// unless `self` is too.
    pub fn exponent_of(&self, z: &Word) -> Option<i64> {
        if self.is_empty() {
            return Some(0);
        }
        if z.is_empty() {
            return None;
        }
        let (_, zc) = z.conjugation_split();
        if zc.is_empty() {
            return None; // z trivial handled above; z = c·c⁻¹ impossible reduced
        }
        let (_, sc) = self.conjugation_split();
        if sc.len() % zc.len() != 0 {
            return None;
        }
        let k = (sc.len() / zc.len()) as i64;
        if &z.pow(k) == self {
            return Some(k);
        }
        if &z.pow(-k) == self {
            return Some(-k);
        }
        None
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "-");
        }
        for &l in &self.letters {
            let idx = (l.unsigned_abs() - 1) as u8;
            let c = if l > 0 { b'a' + idx } else { b'A' + idx };
            write!(f, "{}", c as char)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A conjugacy class of a nontrivial cyclically reduced word, stored in the
/// lexicographically least rotation. Equality is conjugacy-class equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord {
    rank: usize,
    letters: Vec<Letter>,
}

impl CyclicWord {
    /// Canonical rotation of an already cyclically reduced word. Also returns
    /// the rotation offset `k`: `input = rot_k(canonical)` meaning
    /// `input = u · canonical · u⁻¹` for `u` = prefix of input of length k᾿...
    /// precisely: `canonical` read starting at position `k` of the input.
    fn from_reduced(w: Word) -> (CyclicWord, usize) {
        let n = w.letters.len();
        if n == 0 {
            return (CyclicWord { rank: w.rank, letters: vec![] }, 0);
        }
        let mut best = 0usize;
        for s in 1..n {
            for i in 0..n {
                let a = w.letters[(s + i) % n];
                let b = w.letters[(best + i) % n];
                match a.cmp(&b) {
                    std::cmp::Ordering::Less => {
                        best = s;
                        break;
                    }
                    std::cmp::Ordering::Greater => break,
                    std::cmp::Ordering::Equal => {}
                }
            }
        }
        let letters: Vec<Letter> = (0..n).map(|i| w.letters[(best + i) % n]).collect();
        (CyclicWord { rank: w.rank, letters }, best)
    }

    /// The cyclic word of `w` (cyclically reduces first).
    pub fn of(w: &Word) -> CyclicWord {
        w.cyclic_reduce().0
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Canonical form of the inverse class.
    pub fn inverse(&self) -> CyclicWord {
        let w = Word {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        };
        CyclicWord::from_reduced(w).0
    }

    /// A linear word representing this class.
    pub fn as_word(&self) -> Word {
        Word { rank: self.rank, letters: self.letters.clone() }
    }

    /// Least-period primitive root: returns `(root, exponent)` with
    /// `root^exponent = self` and `exponent` maximal (≥ 1).
    pub fn primitive_root(&self) -> Result<(CyclicWord, u32), WordError> {
        let n = self.letters.len();
        if n == 0 {
            return Err(WordError::EmptyRoot);
        }
        for d in 1..=n {
            if n % d != 0 {
                continue;
            }
            if (0..n).all(|i| self.letters[i] == self.letters[(i + d) % n]) {
                let root = CyclicWord { rank: self.rank, letters: self.letters[..d].to_vec() };
                return Ok((root, (n / d) as u32));
            }
        }
        unreachable!("period n always works");
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.as_word(), f)
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Conjugacy test with certificate: `Some(w)` with `w·u·w⁻¹ = v`.
pub fn are_conjugate(u: &Word, v: &Word) -> Option<Word> {
    if u.rank() != v.rank() {
        return None;
    }
    let (cu, pu) = u.cyclic_reduce();
    let (cv, pv) = v.cyclic_reduce();
    if cu != cv {
        return None;
    }
    // u = pu·c·pu⁻¹ and v = pv·c·pv⁻¹ for the shared canonical core c,
    // so (pv·pu⁻¹)·u·(pv·pu⁻¹)⁻¹ = v.
    let w = pv.times(&pu.inverse());
    debug_assert_eq!(w.conjugate(u), *v);
    Some(w)
}

/// Primitive root of a nontrivial word: `root^exp = w` with `exp` maximal.
/// The root carries the conjugation layer of `w`.
pub fn primitive_root(w: &Word) -> Result<(Word, u32), WordError> {
    if w.is_empty() {
        return Err(WordError::EmptyRoot);
    }
    let (conj, core) = w.conjugation_split();
    let n = core.len();
    for d in 1..=n {
        if n % d != 0 {
            continue;
        }
        if (0..n - d).all(|i| core.letters()[i] == core.letters()[i + d]) {
            let root_core = Word { rank: w.rank(), letters: core.letters()[..d].to_vec() };
            let root = conj.times(&root_core).times(&conj.inverse());
            return Ok((root, (n / d) as u32));
        }
    }
    unreachable!()
}

/// An automorphism of the free group of rank `r`, stored as reduced images of
/// the positive generators. Construction validates that the images form a
/// basis by computing the inverse via Nielsen reduction.
#[derive(Clone, PartialEq, Eq)]
pub struct FreeAutomorphism {
    rank: usize,
    images: Vec<Word>,
    inverse_images: Vec<Word>,
}

impl FreeAutomorphism {
    pub fn new(rank: usize, images: Vec<Word>) -> Result<Self, WordError> {
        if images.len() != rank {
            return Err(WordError::RankMismatch(images.len(), rank));
        }
        for w in &images {
            if w.rank() != rank {
                return Err(WordError::RankMismatch(w.rank(), rank));
            }
        }
        let inverse_images = invert_images(rank, &images)?;
        Ok(FreeAutomorphism { rank, images, inverse_images })
    }

    pub fn identity(rank: usize) -> Self {
        let images: Vec<Word> = (1..=rank as i32).map(|i| Word::letter(rank, i)).collect();
        FreeAutomorphism { rank, images: images.clone(), inverse_images: images }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image_of(&self, gen: Letter) -> Word {
        let w = &self.images[(gen.unsigned_abs() - 1) as usize];
        if gen > 0 {
            w.clone()
        } else {
            w.inverse()
        }
    }

    /// Apply to a word: substitute images, reduce.
    pub fn apply(&self, w: &Word) -> Result<Word, WordError> {
        if w.rank() != self.rank {
            return Err(WordError::RankMismatch(w.rank(), self.rank));
        }
        let mut letters = Vec::with_capacity(w.len() * 2);
        for &l in w.letters() {
            let img = &self.images[(l.unsigned_abs() - 1) as usize];
            if l > 0 {
                letters.extend_from_slice(img.letters());
            } else {
                letters.extend(img.letters().iter().rev().map(|&x| -x));
            }
        }
        Word::reduce(self.rank, letters)
    }

    /// `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &FreeAutomorphism) -> Result<FreeAutomorphism, WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch(self.rank, other.rank));
        }
        let images: Result<Vec<Word>, _> = other.images.iter().map(|w| self.apply(w)).collect();
        let inverse_images: Result<Vec<Word>, _> =
            self.inverse_images.iter().map(|w| other.apply_inverse(w)).collect();
        Ok(FreeAutomorphism { rank: self.rank, images: images?, inverse_images: inverse_images? })
    }

    fn apply_inverse(&self, w: &Word) -> Result<Word, WordError> {
        let mut letters = Vec::with_capacity(w.len() * 2);
        for &l in w.letters() {
            let img = &self.inverse_images[(l.unsigned_abs() - 1) as usize];
            if l > 0 {
                letters.extend_from_slice(img.letters());
            } else {
                letters.extend(img.letters().iter().rev().map(|&x| -x));
            }
        }
        Word::reduce(self.rank, letters)
    }

    pub fn invert(&self) -> FreeAutomorphism {
        FreeAutomorphism {
            rank: self.rank,
            images: self.inverse_images.clone(),
            inverse_images: self.images.clone(),
        }
    }

    pub fn pow(&self, n: i64) -> FreeAutomorphism {
        let base = if n >= 0 { self.clone() } else { self.invert() };
        let mut out = FreeAutomorphism::identity(self.rank);
        for _ in 0..n.unsigned_abs() {
            out = out.compose(&base).expect("equal ranks");
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, w)| w.letters() == [(i + 1) as Letter])
    }

    /// Inner-automorphism test with certificate: `Some(w)` means
    /// `self(x) = w·x·w⁻¹` for every basis letter `x`.
    ///
    /// Candidate conjugators come from the solution set of the first basis
    /// equation — a coset of the centralizer ⟨x₁⟩ — truncated at the maximum
    /// image length, which bounds any valid conjugator.
    pub fn is_inner(&self) -> Option<Word> {
        if self.rank == 0 {
            return Some(Word::identity(0));
        }
        if self.rank == 1 {
            return if self.is_identity() { Some(Word::identity(1)) } else { None };
        }
        let x1 = Word::letter(self.rank, 1);
        let img1 = &self.images[0];
        let c = are_conjugate(&x1, img1)?;
        let max_len = self.images.iter().map(Word::len).max().unwrap_or(0) as i64;
        let bound = max_len + c.len() as i64 + 1;
        for k in -bound..=bound {
            let cand = c.times(&x1.pow(k));
            if cand.len() as i64 > max_len {
                continue;
            }
            if self
                .images
                .iter()
                .enumerate()
                .all(|(i, img)| cand.conjugate(&Word::letter(self.rank, (i + 1) as Letter)) == *img)
            {
                return Some(cand);
            }
        }
        None
    }

    /// Abelianization reduced mod 3: row `i` holds the exponent sums of the
    /// image of generator `i+1`.
    pub fn mod3_matrix(&self) -> Mod3Matrix {
        let r = self.rank;
        let mut m = Mod3Matrix::zero(r);
        for (i, w) in self.images.iter().enumerate() {
            for &l in w.letters() {
                let j = (l.unsigned_abs() - 1) as usize;
                let delta = if l > 0 { 1 } else { 2 };
                m.entries[i * r + j] = (m.entries[i * r + j] + delta) % 3;
            }
        }
        m
    }

    /// Least k ≥ 1 with `mod3_matrix(self)^k = I`; divides |GL(r, Z/3)|.
    pub fn unipotent_power(&self) -> u64 {
        let m = self.mod3_matrix();
        let mut acc = m.clone();
        let mut k = 1u64;
        let order_bound = crate::dichotomy::gl3_order(self.rank as u64);
        while !acc.is_identity() {
            acc = acc.times(&m);
            k += 1;
            assert!(
                k <= order_bound.max(1),
                "matrix order exceeds |GL(r,3)|; matrix not invertible?"
            );
        }
        k
    }
}

impl fmt::Debug for FreeAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(i, w)| format!("{} -> {}", Word::letter(self.rank, (i + 1) as Letter), w))
            .collect();
        write!(f, "[{}]", body.join("; "))
    }
}

/// r×r matrix over Z/3Z.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Mod3Matrix {
    rank: usize,
    entries: Vec<u8>,
}

impl Mod3Matrix {
    pub fn zero(rank: usize) -> Self {
        Mod3Matrix { rank, entries: vec![0; rank * rank] }
    }

    pub fn identity(rank: usize) -> Self {
        let mut m = Self::zero(rank);
        for i in 0..rank {
            m.entries[i * rank + i] = 1;
        }
        m
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.rank + j]
    }

    pub fn times(&self, other: &Mod3Matrix) -> Mod3Matrix {
        let r = self.rank;
        assert_eq!(r, other.rank);
        let mut out = Mod3Matrix::zero(r);
        for i in 0..r {
            for k in 0..r {
                let a = self.entries[i * r + k];
                if a == 0 {
                    continue;
                }
                for j in 0..r {
                    out.entries[i * r + j] =
                        (out.entries[i * r + j] + a * other.entries[k * r + j]) % 3;
                }
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        *self == Mod3Matrix::identity(self.rank)
    }

    /// Determinant mod 3 by Gaussian elimination.
    pub fn det(&self) -> u8 {
        let r = self.rank;
        let mut m = self.entries.clone();
        let mut det = 1u8;
        for col in 0..r {
            let pivot = (col..r).find(|&i| m[i * r + col] != 0);
            let Some(p) = pivot else { return 0 };
            if p != col {
                for j in 0..r {
                    m.swap(p * r + j, col * r + j);
                }
                det = (3 - det) % 3;
            }
            let inv = if m[col * r + col] == 1 { 1 } else { 2 }; // inverses mod 3
            det = det * m[col * r + col] % 3;
            for i in (col + 1)..r {
                let factor = m[i * r + col] * inv % 3;
                if factor == 0 {
                    continue;
                }
                for j in 0..r {
                    m[i * r + j] = (m[i * r + j] + (3 - factor) * m[col * r + j]) % 3;
                }
            }
        }
        det
    }
}

/// Expressions of the standard basis letters in terms of the images, i.e.
/// the inverse automorphism, or `NotAnAutomorphism` when the tuple is not a
/// basis. Uses folded subgroup graphs with history (constructive membership),
/// which is complete; a surjective endomorphism of a free group of finite
/// rank is an automorphism, so spanning suffices.
pub fn invert_images(rank: usize, images: &[Word]) -> Result<Vec<Word>, WordError> {
    if images.len() != rank {
        return Err(WordError::NotAnAutomorphism);
    }
    crate::stallings::express_letters(rank, images).ok_or(WordError::NotAnAutomorphism)
}
