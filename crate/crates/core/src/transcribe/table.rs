//! Grade-1 English Braille table and the number/capital sign context machine.
//!
//! A cell is a 6-bit mask with bit `2·Y + X` set for a raised dot in column
//! `X` (0 left, 1 right) and row `Y` (0 top to 2 bottom). In standard dot
//! numbering dots 1-3 run down the left column and dots 4-6 down the right.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Table symbol of the number sign (dots 3-4-5-6).
pub const NUMBER_SIGN: char = '#';
/// Table symbol of the capital sign (dot 6).
pub const CAPITAL_SIGN: char = '^';
/// Output character for cells with no table entry.
pub const UNKNOWN: char = '?';

/// Bit index of the dot at column `x`, row `y`.
pub const fn dot_bit(x: u8, y: u8) -> u8 {
    2 * y + x
}

/// Mask from standard dot numbers 1-6.
pub fn mask_from_dots(dots: &[u8]) -> u8 {
    dots.iter().fold(0, |m, &d| {
        assert!((1..=6).contains(&d), "dot number {d} out of range");
        let (x, y) = ((d - 1) / 3, (d - 1) % 3);
        m | 1 << dot_bit(x, y)
    })
}

pub fn mask_from_code(code: &BTreeSet<(u8, u8)>) -> u8 {
    code.iter().fold(0, |m, &(x, y)| m | 1 << dot_bit(x, y))
}

/// The `<X, Y>` positions of a mask, in `(x, y)` order.
pub fn code_from_mask(mask: u8) -> BTreeSet<(u8, u8)> {
    (0..3u8)
        .flat_map(|y| (0..2u8).map(move |x| (x, y)))
        .filter(|&(x, y)| mask & (1 << dot_bit(x, y)) != 0)
        .collect()
}

const GRADE1: &[(char, &[u8])] = &[
    ('a', &[1]),
    ('b', &[1, 2]),
    ('c', &[1, 4]),
    ('d', &[1, 4, 5]),
    ('e', &[1, 5]),
    ('f', &[1, 2, 4]),
    ('g', &[1, 2, 4, 5]),
    ('h', &[1, 2, 5]),
    ('i', &[2, 4]),
    ('j', &[2, 4, 5]),
    ('k', &[1, 3]),
    ('l', &[1, 2, 3]),
    ('m', &[1, 3, 4]),
    ('n', &[1, 3, 4, 5]),
    ('o', &[1, 3, 5]),
    ('p', &[1, 2, 3, 4]),
    ('q', &[1, 2, 3, 4, 5]),
    ('r', &[1, 2, 3, 5]),
    ('s', &[2, 3, 4]),
    ('t', &[2, 3, 4, 5]),
    ('u', &[1, 3, 6]),
    ('v', &[1, 2, 3, 6]),
    ('w', &[2, 4, 5, 6]),
    ('x', &[1, 3, 4, 6]),
    ('y', &[1, 3, 4, 5, 6]),
    ('z', &[1, 3, 5, 6]),
    (',', &[2]),
    (';', &[2, 3]),
    (':', &[2, 5]),
    ('.', &[2, 5, 6]),
    ('!', &[2, 3, 5]),
    ('?', &[2, 3, 6]),
    ('\'', &[3]),
    ('-', &[3, 6]),
    (NUMBER_SIGN, &[3, 4, 5, 6]),
    (CAPITAL_SIGN, &[6]),
];

/// Bidirectional mask/symbol map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrailleTable {
    by_mask: [Option<char>; 64],
    by_symbol: BTreeMap<char, u8>,
}

impl Default for BrailleTable {
    fn default() -> Self {
        Self::grade1()
    }
}

impl BrailleTable {
    pub fn grade1() -> Self {
        let mut by_mask = [None; 64];
        let mut by_symbol = BTreeMap::new();
        for &(ch, dots) in GRADE1 {
            let m = mask_from_dots(dots);
            debug_assert!(by_mask[m as usize].is_none(), "duplicate mask for {ch}");
            by_mask[m as usize] = Some(ch);
            by_symbol.insert(ch, m);
        }
        Self { by_mask, by_symbol }
    }

    pub fn symbol(&self, mask: u8) -> Option<char> {
        self.by_mask.get(mask as usize).copied().flatten()
    }

    pub fn mask(&self, symbol: char) -> Option<u8> {
        self.by_symbol.get(&symbol).copied()
    }

    /// All `(symbol, mask)` entries in symbol order.
    pub fn entries(&self) -> impl Iterator<Item = (char, u8)> + '_ {
        self.by_symbol.iter().map(|(&c, &m)| (c, m))
    }

    /// Cells spelling one word (no whitespace). Capitals get a capital sign
    /// and digit runs a leading number sign. `offset` is the index of the
    /// word's first character in the full text, used in error reports.
    pub fn encode_word(&self, word: &str, offset: usize) -> Result<Vec<u8>> {
        let mut cells = Vec::new();
        let mut number_mode = false;
        for (k, ch) in word.chars().enumerate() {
            let index = offset + k;
            let unsupported = || Error::UnsupportedText { ch, index };
            if let Some(d) = ch.to_digit(10) {
                if !number_mode {
                    cells.push(self.by_symbol[&NUMBER_SIGN]);
                    number_mode = true;
                }
                let letter = if d == 0 {
                    'j'
                } else {
                    (b'a' + d as u8 - 1) as char
                };
                cells.push(self.by_symbol[&letter]);
                continue;
            }
            if ch.is_ascii_uppercase() {
                number_mode = false;
                cells.push(self.by_symbol[&CAPITAL_SIGN]);
                cells.push(self.by_symbol[&ch.to_ascii_lowercase()]);
                continue;
            }
            if ch == NUMBER_SIGN || ch == CAPITAL_SIGN {
                return Err(unsupported());
            }
            // A lowercase a-j right after digits would read back as a digit.
            if number_mode && ('a'..='j').contains(&ch) {
                return Err(unsupported());
            }
            let m = self.mask(ch).ok_or_else(unsupported)?;
            number_mode = false;
            cells.push(m);
        }
        Ok(cells)
    }
}

/// One position of a transcribed line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// A cell with its table symbol, or `None` if it could not be read.
    Cell(Option<char>),
    Space,
}

/// Applies the number and capital signs and renders text. Lines are joined
/// with `\n`; both signs lapse at a space or line end.
pub fn decode_lines(lines: &[Vec<Slot>]) -> String {
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let (mut number_mode, mut capital) = (false, false);
        for slot in line {
            match *slot {
                Slot::Space => {
                    number_mode = false;
                    capital = false;
                    out.push(' ');
                }
                Slot::Cell(None) => {
                    number_mode = false;
                    capital = false;
                    out.push(UNKNOWN);
                }
                Slot::Cell(Some(NUMBER_SIGN)) => number_mode = true,
                Slot::Cell(Some(CAPITAL_SIGN)) => {
                    number_mode = false;
                    capital = true;
                }
                Slot::Cell(Some(c)) => {
                    if number_mode && ('a'..='j').contains(&c) {
                        let d = (c as u8 - b'a' + 1) % 10;
                        out.push((b'0' + d) as char);
                        continue;
                    }
                    number_mode = false;
                    if capital {
                        out.push(c.to_ascii_uppercase());
                        capital = false;
                    } else {
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slots(t: &BrailleTable, text: &str) -> Vec<Slot> {
        let mut v = Vec::new();
        for (i, w) in text.split(' ').enumerate() {
            if i > 0 {
                v.push(Slot::Space);
            }
            for m in t.encode_word(w, 0).unwrap() {
                v.push(Slot::Cell(t.symbol(m)));
            }
        }
        v
    }

    #[test]
    fn a_and_l_masks() {
        let t = BrailleTable::grade1();
        assert_eq!(t.mask('a'), Some(1 << dot_bit(0, 0)));
        assert_eq!(
            t.mask('l'),
            Some(1 << dot_bit(0, 0) | 1 << dot_bit(0, 1) | 1 << dot_bit(0, 2))
        );
        assert_eq!(t.symbol(t.mask('l').unwrap()), Some('l'));
        assert_eq!(t.symbol(0), None);
    }

    #[test]
    fn table_is_injective() {
        let t = BrailleTable::grade1();
        let masks: BTreeSet<u8> = t.entries().map(|(_, m)| m).collect();
        assert_eq!(masks.len(), t.entries().count());
        assert!(masks.iter().all(|&m| m != 0 && m < 64));
    }

    #[test]
    fn code_mask_roundtrip() {
        for m in 0..64u8 {
            assert_eq!(mask_from_code(&code_from_mask(m)), m);
        }
        assert_eq!(
            code_from_mask(mask_from_dots(&[1, 2, 3])),
            [(0, 0), (0, 1), (0, 2)].into_iter().collect()
        );
    }

    #[test]
    fn text_roundtrip_with_signs() {
        let t = BrailleTable::grade1();
        for text in [
            "hello world",
            "The Year 1984, page 12.",
            "x-ray 3D",
            "don't!",
        ] {
            assert_eq!(decode_lines(&[slots(&t, text)]), text);
        }
    }

    #[test]
    fn digit_then_a_to_j_is_rejected() {
        let t = BrailleTable::grade1();
        assert!(matches!(
            t.encode_word("3a", 10),
            Err(Error::UnsupportedText { ch: 'a', index: 11 })
        ));
        assert!(t.encode_word("3k", 0).is_ok());
        assert!(t.encode_word("tab\t", 0).is_err());
    }

    #[test]
    fn unknown_cell_prints_placeholder() {
        assert_eq!(
            decode_lines(&[vec![Slot::Cell(Some('a')), Slot::Cell(None)]]),
            "a?"
        );
    }
}
