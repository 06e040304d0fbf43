//! The shared 37-class ordering.
//!
//! Index 0 is background for the character maps and end-of-sequence for the
//! attention decoder; indices 1..=36 are `0-9` followed by `a-z` in both.

pub const ALPHABET: &str = "0123456789abcdefghijklmnopqrstuvwxyz";
pub const NUM_CHARS: usize = 36;
/// Character classes plus background / EOS.
pub const NUM_CLASSES: usize = NUM_CHARS + 1;
pub const BACKGROUND: usize = 0;
pub const EOS: usize = 0;

/// Class index (1..=36) of an alphanumeric character, case-insensitive.
pub fn class_of(c: char) -> Option<usize> {
    let c = c.to_ascii_lowercase();
    match c {
        '0'..='9' => Some(c as usize - '0' as usize + 1),
        'a'..='z' => Some(c as usize - 'a' as usize + 11),
        _ => None,
    }
}

/// Character for a class index in 1..=36.
pub fn char_of(class: usize) -> Option<char> {
    (1..=NUM_CHARS)
        .contains(&class)
        .then(|| ALPHABET.as_bytes()[class - 1] as char)
}

/// Lowercases and drops everything outside `[0-9a-z]`.
pub fn normalize(s: &str) -> String {
    s.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_class() {
        for class in 1..=NUM_CHARS {
            assert_eq!(class_of(char_of(class).unwrap()), Some(class));
        }
        assert_eq!(class_of('0'), Some(1));
        assert_eq!(class_of('a'), Some(11));
        assert_eq!(class_of('Z'), Some(36));
        assert_eq!(class_of('-'), None);
        assert_eq!(char_of(0), None);
        assert_eq!(char_of(37), None);
    }

    #[test]
    fn normalizes() {
        assert_eq!(normalize("Hello, World-42!"), "helloworld42");
        assert_eq!(normalize("###"), "");
    }
}
