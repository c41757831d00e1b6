//! Pre-tokenized sentences.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token {index} is empty")]
    Empty { index: usize },
    #[error("token {index} ({token:?}) contains whitespace")]
    Whitespace { index: usize, token: String },
}

/// A whitespace-tokenized sentence.
///
/// Tokens are surface strings taken verbatim from the corpus. None is empty
/// and none contains whitespace, so joining with a single space and splitting
/// again is lossless.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self, TokenError> {
        for (index, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(TokenError::Empty { index });
            }
            if token.chars().any(char::is_whitespace) {
                return Err(TokenError::Whitespace { index, token: token.clone() });
            }
        }
        Ok(TokenSeq(tokens))
    }

    pub fn empty() -> Self {
        TokenSeq(Vec::new())
    }

    /// Splits on runs of whitespace. Always valid.
    pub fn from_whitespace(text: &str) -> Self {
        TokenSeq(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    /// Builds a sequence from tokens that are already known to be valid,
    /// e.g. slices of another `TokenSeq`.
    pub(crate) fn from_valid(tokens: Vec<String>) -> Self {
        debug_assert!(TokenSeq::new(tokens.clone()).is_ok());
        TokenSeq(tokens)
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = TokenError;

    fn try_from(tokens: Vec<String>) -> Result<Self, TokenError> {
        TokenSeq::new(tokens)
    }
}

impl TryFrom<Vec<&str>> for TokenSeq {
    type Error = TokenError;

    fn try_from(tokens: Vec<&str>) -> Result<Self, TokenError> {
        TokenSeq::new(tokens.into_iter().map(str::to_owned).collect())
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(seq: TokenSeq) -> Vec<String> {
        seq.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
