//! Reduced words in a free group F_k and endomorphisms given by generator
//! images.
//!
//! Letters are nonzero signed indices: `+i` is the i-th generator (1-based),
//! `-i` its inverse. Words are freely reduced on construction and every
//! operation keeps them that way, so equality of words is equality in the
//! group.

mod stallings;

pub use stallings::SubgroupGraph;

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreeGroupError {
    #[error("letter {letter} is out of range for rank {rank}")]
    IndexOutOfRange { letter: i32, rank: usize },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("an endomorphism needs at least one generator")]
    EmptyRank,
}

/// Free reduction of a letter sequence (no rank checks).
pub(crate) fn reduce_letters(letters: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last().is_some_and(|&last| last == -l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// A freely reduced word over the generators of F_rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    rank: usize,
    letters: Vec<i32>,
}

impl Word {
    /// Reduce a raw letter sequence; the unique reduced form of the input.
    pub fn reduced(rank: usize, letters: &[i32]) -> Result<Word, FreeGroupError> {
        for &l in letters {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(FreeGroupError::IndexOutOfRange { letter: l, rank });
            }
        }
        Ok(Word {
            rank,
            letters: reduce_letters(letters),
        })
    }

    pub fn identity(rank: usize) -> Word {
        Word {
            rank,
            letters: Vec::new(),
        }
    }

    pub fn generator(rank: usize, index: usize) -> Result<Word, FreeGroupError> {
        Word::reduced(rank, &[index as i32])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn mul(&self, other: &Word) -> Result<Word, FreeGroupError> {
        if self.rank != other.rank {
            return Err(FreeGroupError::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Word {
            rank: self.rank,
            letters: reduce_letters(&letters),
        })
    }

    pub fn inverse(&self) -> Word {
        Word {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    /// Render with the given single-character generator names.
    pub fn to_text(&self, names: &[char]) -> String {
        if self.letters.is_empty() {
            return "1".to_string();
        }
        let mut s = String::new();
        for &l in &self.letters {
            let idx = l.unsigned_abs() as usize - 1;
            let name = names.get(idx).copied().unwrap_or('?');
            s.push(name);
            if l < 0 {
                s.push_str("^-1");
            }
        }
        s
    }
}

pub(crate) fn default_names(rank: usize) -> Vec<char> {
    (0..rank).map(|i| (b'a' + i as u8) as char).collect()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text(&default_names(self.rank)))
    }
}

/// An endomorphism of F_k, given by the images w_1, ..., w_k of the
/// generators. The folded graph of the image subgroup is computed once on
/// first use and cached; injectivity is equivalent to that subgroup having
/// rank k.
#[derive(Debug, Clone)]
pub struct Endo {
    rank: usize,
    images: Vec<Word>,
    graph: OnceLock<SubgroupGraph>,
}

impl PartialEq for Endo {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.images == other.images
    }
}

impl Eq for Endo {}

impl Endo {
    pub fn new(images: Vec<Word>) -> Result<Endo, FreeGroupError> {
        let rank = images.len();
        if rank == 0 {
            return Err(FreeGroupError::EmptyRank);
        }
        for w in &images {
            if w.rank() != rank {
                return Err(FreeGroupError::RankMismatch {
                    left: rank,
                    right: w.rank(),
                });
            }
        }
        Ok(Endo {
            rank,
            images,
            graph: OnceLock::new(),
        })
    }

    pub fn identity(rank: usize) -> Result<Endo, FreeGroupError> {
        let images = (1..=rank)
            .map(|i| Word::generator(rank, i))
            .collect::<Result<Vec<_>, _>>()?;
        Endo::new(images)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, index: usize) -> &Word {
        &self.images[index]
    }

    /// Substitute each letter x_i^s by w_i^s and reduce.
    pub fn apply(&self, w: &Word) -> Result<Word, FreeGroupError> {
        if w.rank() != self.rank {
            return Err(FreeGroupError::RankMismatch {
                left: self.rank,
                right: w.rank(),
            });
        }
        let mut letters = Vec::new();
        for &l in w.letters() {
            let img = &self.images[l.unsigned_abs() as usize - 1];
            if l > 0 {
                letters.extend_from_slice(img.letters());
            } else {
                letters.extend(img.letters().iter().rev().map(|&x| -x));
            }
        }
        Ok(Word {
            rank: self.rank,
            letters: reduce_letters(&letters),
        })
    }

    /// The composition self . inner: x -> self(inner(x)).
    pub fn compose(&self, inner: &Endo) -> Result<Endo, FreeGroupError> {
        if self.rank != inner.rank {
            return Err(FreeGroupError::RankMismatch {
                left: self.rank,
                right: inner.rank,
            });
        }
        let images = inner
            .images
            .iter()
            .map(|w| self.apply(w))
            .collect::<Result<Vec<_>, _>>()?;
        Endo::new(images)
    }

    /// n-fold composition power; n = 0 gives the identity endomorphism.
    pub fn power(&self, n: u64) -> Endo {
        let mut acc = Endo::identity(self.rank).expect("rank >= 1");
        for _ in 0..n {
            acc = self.compose(&acc).expect("ranks match");
        }
        acc
    }

    /// Exponent-sum matrix: entry (i, j) is the exponent sum of x_{j+1} in
    /// the image of x_{i+1}. The flag is true when the matrix is zero, i.e.
    /// every image lies in the derived subgroup.
    pub fn abelianization(&self) -> (Vec<Vec<i64>>, bool) {
        let mut m = vec![vec![0i64; self.rank]; self.rank];
        for (i, w) in self.images.iter().enumerate() {
            for &l in w.letters() {
                let j = l.unsigned_abs() as usize - 1;
                m[i][j] += l.signum() as i64;
            }
        }
        let all_zero = m.iter().all(|row| row.iter().all(|&e| e == 0));
        (m, all_zero)
    }

    /// Folded graph of the image subgroup ⟨w_1, ..., w_k⟩.
    pub fn image_graph(&self) -> &SubgroupGraph {
        self.graph
            .get_or_init(|| SubgroupGraph::new(&self.images).expect("images share one rank"))
    }

    /// Rank of the image subgroup.
    pub fn image_rank(&self) -> usize {
        self.image_graph().subgroup_rank()
    }

    /// An endomorphism of F_k is injective exactly when its image has rank k.
    pub fn is_injective(&self) -> bool {
        self.image_rank() == self.rank
    }

    /// If w lies in the image subgroup, return the preimage word v with
    /// self(v) = w.
    pub fn image_preimage(&self, w: &Word) -> Option<Word> {
        let expr = self.image_graph().membership(w)?;
        Some(Word {
            rank: self.rank,
            letters: expr,
        })
    }

    pub fn to_text(&self, names: &[char]) -> String {
        self.images
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let name = names.get(i).copied().unwrap_or('?');
                format!("{}->{}", name, w.to_text(names))
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Endo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text(&default_names(self.rank)))
    }
}

/// Membership of w in the subgroup generated by `gens`: on success, a
/// reduced expression in the generators (signed 1-based indices into
/// `gens`) whose expansion freely reduces to w.
pub fn membership(gens: &[Word], w: &Word) -> Result<Option<Vec<i32>>, FreeGroupError> {
    let graph = SubgroupGraph::new(gens)?;
    if w.rank() != graph.ambient_rank() {
        return Err(FreeGroupError::RankMismatch {
            left: graph.ambient_rank(),
            right: w.rank(),
        });
    }
    Ok(graph.membership(w))
}

/// Expand an expression over `gens` (signed 1-based indices) into a word.
pub fn expand_expression(gens: &[Word], expr: &[i32]) -> Result<Word, FreeGroupError> {
    let rank = gens.first().map_or(0, |g| g.rank());
    let mut acc = Word::identity(rank);
    for &e in expr {
        let g = &gens[e.unsigned_abs() as usize - 1];
        let factor = if e > 0 { g.clone() } else { g.inverse() };
        acc = acc.mul(&factor)?;
    }
    Ok(acc)
}
