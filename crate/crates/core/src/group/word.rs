//! Word syntax: letters `a`, `b`, ... with uppercase for inverses, optional
//! `^k` exponents, separators ` `, `*`, `.`, and raw syllables `<f|c_1,...>`.
//! `1`, `id` and the empty string denote the identity.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{GroupElement, GroupOracle};
use crate::error::{Error, Result};

pub(super) fn parse(oracle: &GroupOracle, word: &str) -> Result<GroupElement> {
    let err = |reason: &str| Error::MalformedWord { word: word.to_string(), reason: reason.to_string() };
    let w = word.trim();
    if w.is_empty() || w == "1" || w == "id" {
        return Ok(GroupElement::identity());
    }
    let chars: Vec<char> = w.chars().collect();
    let mut i = 0;
    let mut out = GroupElement::identity();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '*' || c == '.' {
            i += 1;
            continue;
        }
        let atom = if c == '<' {
            let end = chars[i..].iter().position(|&c| c == '>').ok_or_else(|| err("unclosed `<`"))? + i;
            let body: String = chars[i + 1..end].iter().collect();
            i = end + 1;
            let (f, coords) = body.split_once('|').ok_or_else(|| err("syllable needs `|`"))?;
            let f: usize = f.trim().parse().map_err(|_| err("bad factor index"))?;
            if f >= oracle.factors().len() {
                return Err(err("factor index out of range"));
            }
            let coords: Vec<i64> = coords
                .split(',')
                .map(|t| t.trim().parse::<i64>())
                .collect::<core::result::Result<_, _>>()
                .map_err(|_| err("bad coordinate"))?;
            if coords.len() != oracle.factors()[f].rank() {
                return Err(err("coordinate count does not match the factor rank"));
            }
            oracle.syllable(f, &coords)
        } else if c.is_ascii_alphabetic() {
            let mut name = String::new();
            name.push(c.to_ascii_lowercase());
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                name.push(chars[i]);
                i += 1;
            }
            let g = oracle.letter(&name).ok_or_else(|| err("unknown letter"))?;
            if c.is_ascii_uppercase() {
                oracle.inverse(&g)
            } else {
                g
            }
        } else {
            return Err(err("unexpected character"));
        };
        let mut exp = 1i64;
        if i < chars.len() && chars[i] == '^' {
            i += 1;
            let start = i;
            if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                i += 1;
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = chars[start..i].iter().collect();
            exp = t.parse().map_err(|_| err("bad exponent"))?;
        }
        out = oracle.multiply(&out, &power_fast(oracle, &atom, exp));
    }
    Ok(out)
}

/// Powers of a single syllable are scalar multiples of its coordinates.
fn power_fast(oracle: &GroupOracle, g: &GroupElement, n: i64) -> GroupElement {
    let syl: Vec<(usize, &[i64])> = oracle.syllables(g).collect();
    if syl.len() == 1 {
        let (f, v) = syl[0];
        let scaled: Vec<i64> = v.iter().map(|c| c * n).collect();
        return oracle.syllable(f, &scaled);
    }
    oracle.power(g, n)
}
