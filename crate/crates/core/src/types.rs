//! Identifier newtypes shared across the crate.

use core::fmt;

/// Opaque user identifier as found in the input files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u64);

/// Opaque artist identifier as found in the input files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArtistId(pub u64);

/// ISO 3166-1 alpha-2 country code: exactly two uppercase ASCII letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    /// Accepts exactly two uppercase ASCII letters, rejects everything else.
    pub fn parse(s: &str) -> Option<Self> {
        let bytes = s.as_bytes();
        if bytes.len() == 2 && bytes.iter().all(|b| b.is_ascii_uppercase()) {
            Some(CountryCode([bytes[0], bytes[1]]))
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        // Invariant: always two ASCII uppercase letters.
        core::str::from_utf8(&self.0).unwrap_or("??")
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ArtistId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn country_code_accepts_two_uppercase_letters() {
        assert_eq!(CountryCode::parse("FI").unwrap().as_str(), "FI");
        assert!(CountryCode::parse("fi").is_none());
        assert!(CountryCode::parse("F").is_none());
        assert!(CountryCode::parse("FIN").is_none());
        assert!(CountryCode::parse("F1").is_none());
        assert!(CountryCode::parse("").is_none());
    }
}
