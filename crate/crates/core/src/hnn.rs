//! Elements of the mapping torus HNN_phi(F_k) = <F_k, t | t x t^-1 = phi(x)>
//! and their canonical normal forms.
//!
//! For injective phi every element can be written t^-m u t^n with m, n >= 0
//! and u a reduced word; the form is canonical once we forbid m > 0, n > 0
//! with u in the image of phi (otherwise a t^-1 ... t pair could still be
//! absorbed). Two words are equal in the group exactly when their normal
//! forms agree componentwise, which decides the word problem.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::freegroup::{Endo, FreeGroupError, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HnnError {
    #[error("the endomorphism is not injective; the mapping torus machinery requires it")]
    NonInjective,
    #[error("the two words are attached to different endomorphisms")]
    EndoMismatch,
    #[error(transparent)]
    FreeGroup(#[from] FreeGroupError),
}

/// One letter of a mapping-torus word: a base-group letter (signed 1-based
/// generator index) or the stable letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HnnLetter {
    Gen(i32),
    T,
    TInv,
}

impl HnnLetter {
    pub fn inverse(self) -> HnnLetter {
        match self {
            HnnLetter::Gen(l) => HnnLetter::Gen(-l),
            HnnLetter::T => HnnLetter::TInv,
            HnnLetter::TInv => HnnLetter::T,
        }
    }
}

/// A word over the base-group generators and the stable letter, attached to
/// its endomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnnWord {
    endo: Arc<Endo>,
    letters: Vec<HnnLetter>,
}

impl HnnWord {
    pub fn new(endo: Arc<Endo>, letters: Vec<HnnLetter>) -> Result<HnnWord, HnnError> {
        for &l in &letters {
            if let HnnLetter::Gen(g) = l {
                if g == 0 || g.unsigned_abs() as usize > endo.rank() {
                    return Err(HnnError::FreeGroup(FreeGroupError::IndexOutOfRange {
                        letter: g,
                        rank: endo.rank(),
                    }));
                }
            }
        }
        Ok(HnnWord { endo, letters })
    }

    pub fn identity(endo: Arc<Endo>) -> HnnWord {
        HnnWord {
            endo,
            letters: Vec::new(),
        }
    }

    /// Embed a base-group word.
    pub fn from_word(endo: Arc<Endo>, w: &Word) -> HnnWord {
        HnnWord {
            endo,
            letters: w.letters().iter().map(|&l| HnnLetter::Gen(l)).collect(),
        }
    }

    pub fn endo(&self) -> &Arc<Endo> {
        &self.endo
    }

    pub fn letters(&self) -> &[HnnLetter] {
        &self.letters
    }

    pub fn inverse(&self) -> HnnWord {
        HnnWord {
            endo: self.endo.clone(),
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| l.inverse())
                .collect(),
        }
    }

    pub fn concat(&self, other: &HnnWord) -> Result<HnnWord, HnnError> {
        if self.endo.as_ref() != other.endo.as_ref() {
            return Err(HnnError::EndoMismatch);
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(HnnWord {
            endo: self.endo.clone(),
            letters,
        })
    }

    /// Left-to-right normalization: a base letter x contributes phi^n(x) to
    /// u, t raises n, and t^-1 either lowers n or (at n = 0) raises m while
    /// replacing u by phi(u). Finally t^-1 ... t pairs are absorbed while u
    /// stays in the image of phi; each absorption lowers m + n, so the loop
    /// terminates.
    pub fn normal_form(&self) -> Result<NormalForm, HnnError> {
        if !self.endo.is_injective() {
            return Err(HnnError::NonInjective);
        }
        let rank = self.endo.rank();
        let mut m: u64 = 0;
        let mut u = Word::identity(rank);
        let mut n: u64 = 0;
        let mut powers: Vec<Endo> = vec![Endo::identity(rank)?];
        for &l in &self.letters {
            match l {
                HnnLetter::Gen(g) => {
                    while powers.len() <= n as usize {
                        let next = self.endo.compose(powers.last().expect("nonempty"))?;
                        powers.push(next);
                    }
                    let img = powers[n as usize].image(g.unsigned_abs() as usize - 1);
                    let img = if g > 0 { img.clone() } else { img.inverse() };
                    u = u.mul(&img)?;
                }
                HnnLetter::T => n += 1,
                HnnLetter::TInv => {
                    if n > 0 {
                        n -= 1;
                    } else {
                        m += 1;
                        u = self.endo.apply(&u)?;
                    }
                }
            }
        }
        while m > 0 && n > 0 {
            match self.endo.image_preimage(&u) {
                Some(pre) => {
                    u = pre;
                    m -= 1;
                    n -= 1;
                }
                None => break,
            }
        }
        Ok(NormalForm { m, u, n })
    }

    /// Word-problem equality via normal forms.
    pub fn equal(&self, other: &HnnWord) -> Result<bool, HnnError> {
        if self.endo.as_ref() != other.endo.as_ref() {
            return Err(HnnError::EndoMismatch);
        }
        Ok(self.normal_form()? == other.normal_form()?)
    }

    pub fn to_text(&self, names: &[char]) -> String {
        if self.letters.is_empty() {
            return "1".to_string();
        }
        self.letters
            .iter()
            .map(|l| match l {
                HnnLetter::Gen(g) => {
                    let idx = g.unsigned_abs() as usize - 1;
                    let name = names.get(idx).copied().unwrap_or('?');
                    if *g > 0 {
                        name.to_string()
                    } else {
                        format!("{name}^-1")
                    }
                }
                HnnLetter::T => "t".to_string(),
                HnnLetter::TInv => "t^-1".to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for HnnWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<char> = (0..self.endo.rank())
            .map(|i| (b'a' + i as u8) as char)
            .collect();
        write!(f, "{}", self.to_text(&names))
    }
}

/// The canonical representation t^-m u t^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub m: u64,
    pub u: Word,
    pub n: u64,
}

impl NormalForm {
    pub fn is_identity(&self) -> bool {
        self.m == 0 && self.n == 0 && self.u.is_identity()
    }

    /// Expand back into a mapping-torus word t^-m u t^n.
    pub fn to_hnn_word(&self, endo: Arc<Endo>) -> HnnWord {
        let mut letters = Vec::new();
        for _ in 0..self.m {
            letters.push(HnnLetter::TInv);
        }
        letters.extend(self.u.letters().iter().map(|&l| HnnLetter::Gen(l)));
        for _ in 0..self.n {
            letters.push(HnnLetter::T);
        }
        HnnWord {
            endo,
            letters,
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(m={}, u={}, n={})", self.m, self.u, self.n)
    }
}
