//! Character-offset helpers. Offsets everywhere in this crate count Unicode
//! scalar values, while `str` indexing is by byte.

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    if text.is_ascii() {
        text.len()
    } else {
        text.chars().count()
    }
}

/// Byte index of the `char_idx`-th scalar, or `None` past the end.
/// `char_idx == char_len(text)` maps to `text.len()`.
pub fn byte_index(text: &str, char_idx: usize) -> Option<usize> {
    if text.is_ascii() {
        return (char_idx <= text.len()).then_some(char_idx);
    }
    if char_idx == 0 {
        return Some(0);
    }
    let mut seen = 0;
    for (b, _) in text.char_indices() {
        if seen == char_idx {
            return Some(b);
        }
        seen += 1;
    }
    (seen == char_idx).then_some(text.len())
}

/// Slice `text` by scalar offsets `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let b0 = byte_index(text, start)?;
    let b1 = b0 + byte_index(&text[b0..], end - start)?;
    Some(&text[b0..b1])
}

/// Converts byte offsets into scalar offsets in one forward walk.
///
/// Queries must be non-decreasing for the walk to stay linear; earlier
/// offsets restart from the beginning.
pub struct ByteToChar<'a> {
    text: &'a str,
    ascii: bool,
    byte: usize,
    chars: usize,
}

impl<'a> ByteToChar<'a> {
    pub fn new(text: &'a str) -> Self {
        ByteToChar {
            text,
            ascii: text.is_ascii(),
            byte: 0,
            chars: 0,
        }
    }

    pub fn convert(&mut self, byte: usize) -> usize {
        if self.ascii {
            return byte;
        }
        if byte < self.byte {
            self.byte = 0;
            self.chars = 0;
        }
        self.chars += self.text[self.byte..byte].chars().count();
        self.byte = byte;
        self.chars
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_scalar() {
        let s = "naïve café";
        assert_eq!(char_len(s), 10);
        assert_eq!(char_slice(s, 6, 10), Some("café"));
        assert_eq!(char_slice(s, 0, 5), Some("naïve"));
        assert_eq!(char_slice(s, 10, 10), Some(""));
        assert_eq!(char_slice(s, 3, 11), None);
        assert_eq!(char_slice(s, 4, 3), None);
    }

    #[test]
    fn byte_to_char_walks_forward() {
        let s = "é1é2";
        let mut conv = ByteToChar::new(s);
        assert_eq!(conv.convert(2), 1);
        assert_eq!(conv.convert(5), 3);
        assert_eq!(conv.convert(0), 0);
        assert_eq!(conv.convert(s.len()), 4);
    }
}
