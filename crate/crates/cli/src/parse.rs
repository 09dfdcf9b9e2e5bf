//! Text formats: the endomorphism DSL `a->ab, b->ba`, word and
//! mapping-torus element syntax, and the JSON form of integer matrices.
//!
//! Generator names are single letters a..z, assigned indices by first
//! appearance on a left-hand side. Words concatenate letters with optional
//! `^-1`; whitespace is ignored; `1` denotes the empty word. Mapping-torus
//! elements additionally use `t` / `t^-1` for the stable letter, so an
//! endomorphism that defines a generator named `t` cannot be used with
//! them.

use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::Value;
use thiserror::Error;
use torsep::{Endo, HnnLetter, HnnWord, Mat2, MatTuple, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("generator '{0}' has no image (missing \"->\")")]
    MissingImage(char),
    #[error("generator '{0}' is used but never given an image")]
    UnknownGenerator(char),
    #[error("generator '{0}' receives two images")]
    DuplicateImage(char),
    #[error("generator 't' collides with the stable letter")]
    ReservedName,
    #[error("bad matrix JSON: {0}")]
    BadMatrix(String),
}

/// An endomorphism together with its user-facing generator names.
#[derive(Debug, Clone)]
pub struct NamedEndo {
    pub endo: Arc<Endo>,
    pub names: Vec<char>,
}

impl NamedEndo {
    pub fn endo_text(&self) -> String {
        self.endo.to_text(&self.names)
    }

    pub fn word_text(&self, w: &Word) -> String {
        w.to_text(&self.names)
    }

    pub fn element_text(&self, w: &HnnWord) -> String {
        w.to_text(&self.names)
    }
}

/// Signed-index tokens over the given names; `t` maps to index 0 when
/// `allow_t` is set (encoded as i32::MAX / -i32::MAX sentinels).
fn tokenize(text: &str, names: &[char], allow_t: bool) -> Result<Vec<i32>, ParseError> {
    let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if stripped == "1" {
        return Ok(Vec::new());
    }
    let chars: Vec<char> = stripped.chars().collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        pos += 1;
        let index = if allow_t && c == 't' {
            i32::MAX
        } else {
            match names.iter().position(|&n| n == c) {
                Some(i) => (i + 1) as i32,
                None if c.is_ascii_lowercase() => {
                    return Err(ParseError::UnknownGenerator(c))
                }
                _ => {
                    return Err(ParseError::Syntax(format!(
                        "unexpected character '{c}' in \"{text}\""
                    )))
                }
            }
        };
        let inverted = chars[pos..].starts_with(&['^', '-', '1']);
        if inverted {
            pos += 3;
        } else if chars.get(pos) == Some(&'^') {
            return Err(ParseError::Syntax(format!(
                "only ^-1 is a valid exponent, in \"{text}\""
            )));
        }
        out.push(if inverted { -index } else { index });
    }
    Ok(out)
}

/// Parse `name -> word (, name -> word)*`; every generator must receive
/// exactly one image and every letter used must be defined.
pub fn parse_endo(text: &str) -> Result<NamedEndo, ParseError> {
    let mut names: Vec<char> = Vec::new();
    let mut bodies: Vec<String> = Vec::new();
    for clause in text.split(',') {
        let Some((lhs, rhs)) = clause.split_once("->") else {
            let name = clause.trim().chars().next().unwrap_or('?');
            return Err(ParseError::MissingImage(name));
        };
        let lhs: Vec<char> = lhs.chars().filter(|c| !c.is_whitespace()).collect();
        if lhs.len() != 1 || !lhs[0].is_ascii_lowercase() {
            return Err(ParseError::Syntax(format!(
                "left-hand side must be a single generator letter, got \"{}\"",
                lhs.iter().collect::<String>()
            )));
        }
        if names.contains(&lhs[0]) {
            return Err(ParseError::DuplicateImage(lhs[0]));
        }
        names.push(lhs[0]);
        bodies.push(rhs.to_string());
    }
    if names.is_empty() {
        return Err(ParseError::Syntax("empty endomorphism".into()));
    }
    let rank = names.len();
    let images = bodies
        .iter()
        .map(|body| {
            let letters = tokenize(body, &names, false)?;
            Word::reduced(rank, &letters)
                .map_err(|e| ParseError::Syntax(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let endo = Endo::new(images).map_err(|e| ParseError::Syntax(e.to_string()))?;
    Ok(NamedEndo {
        endo: Arc::new(endo),
        names,
    })
}

pub fn parse_word(text: &str, named: &NamedEndo) -> Result<Word, ParseError> {
    let letters = tokenize(text, &named.names, false)?;
    Word::reduced(named.endo.rank(), &letters).map_err(|e| ParseError::Syntax(e.to_string()))
}

pub fn parse_hnn_word(text: &str, named: &NamedEndo) -> Result<HnnWord, ParseError> {
    if named.names.contains(&'t') {
        return Err(ParseError::ReservedName);
    }
    let tokens = tokenize(text, &named.names, true)?;
    let letters = tokens
        .into_iter()
        .map(|l| {
            if l == i32::MAX {
                HnnLetter::T
            } else if l == -i32::MAX {
                HnnLetter::TInv
            } else {
                HnnLetter::Gen(l)
            }
        })
        .collect();
    HnnWord::new(named.endo.clone(), letters).map_err(|e| ParseError::Syntax(e.to_string()))
}

fn parse_entry(v: &Value) -> Result<BigInt, ParseError> {
    match v {
        Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| ParseError::BadMatrix(format!("not an integer: {s:?}"))),
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| ParseError::BadMatrix(format!("not an integer: {n}"))),
        other => Err(ParseError::BadMatrix(format!(
            "entry must be a decimal string, got {other}"
        ))),
    }
}

/// [[a, b], [c, d]] with decimal-string (or small integer) entries.
pub fn parse_matrix(v: &Value) -> Result<Mat2<BigInt>, ParseError> {
    let rows = v
        .as_array()
        .filter(|r| r.len() == 2)
        .ok_or_else(|| ParseError::BadMatrix("expected [[a,b],[c,d]]".into()))?;
    let mut entries = Vec::with_capacity(4);
    for row in rows {
        let cols = row
            .as_array()
            .filter(|c| c.len() == 2)
            .ok_or_else(|| ParseError::BadMatrix("expected [[a,b],[c,d]]".into()))?;
        for e in cols {
            entries.push(parse_entry(e)?);
        }
    }
    Ok(Mat2::new(
        entries[0].clone(),
        entries[1].clone(),
        entries[2].clone(),
        entries[3].clone(),
    ))
}

/// A list of matrices, one per generator.
pub fn parse_tuple(text: &str) -> Result<MatTuple<BigInt>, ParseError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ParseError::BadMatrix(format!("invalid JSON: {e}")))?;
    let list = v
        .as_array()
        .ok_or_else(|| ParseError::BadMatrix("expected a list of matrices".into()))?;
    if list.is_empty() {
        return Err(ParseError::BadMatrix("tuple must be nonempty".into()));
    }
    let mats = list.iter().map(parse_matrix).collect::<Result<Vec<_>, _>>()?;
    Ok(MatTuple::new(mats))
}

pub fn matrix_json(m: &Mat2<BigInt>) -> Value {
    serde_json::json!([
        [m.a.to_string(), m.b.to_string()],
        [m.c.to_string(), m.d.to_string()]
    ])
}

pub fn tuple_json(t: &MatTuple<BigInt>) -> Value {
    Value::Array(t.mats.iter().map(matrix_json).collect())
}
