//! Vocabulary, token sequences and attack instances.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub type TokenId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    size: usize,
    display: Option<Vec<String>>,
}

impl Vocabulary {
    pub fn new(size: usize) -> Result<Arc<Self>> {
        if size < 2 {
            return Err(Error::VocabTooSmall(size));
        }
        Ok(Arc::new(Self {
            size,
            display: None,
        }))
    }

    /// Vocabulary whose size is the length of `table`; `table[id]` is the text of `id`.
    pub fn with_display(table: Vec<String>) -> Result<Arc<Self>> {
        if table.len() < 2 {
            return Err(Error::VocabTooSmall(table.len()));
        }
        Ok(Arc::new(Self {
            size: table.len(),
            display: Some(table),
        }))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn check(&self, id: TokenId) -> Result<()> {
        if (id as usize) < self.size {
            Ok(())
        } else {
            Err(Error::InvalidToken {
                id,
                vocab_size: self.size,
            })
        }
    }

    /// Text for `id`: the display table entry if one exists, else `<id>`.
    pub fn text(&self, id: TokenId) -> String {
        match &self.display {
            Some(t) => t[id as usize].clone(),
            None => format!("<{id}>"),
        }
    }

    pub fn render(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .map(|&id| self.text(id))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A nonempty sequence of ids, all valid under `vocab`.
#[derive(Clone)]
pub struct TokenSeq {
    tokens: Vec<TokenId>,
    vocab: Arc<Vocabulary>,
}

impl TokenSeq {
    pub fn new(tokens: Vec<TokenId>, vocab: Arc<Vocabulary>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        for &t in &tokens {
            vocab.check(t)?;
        }
        Ok(Self { tokens, vocab })
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_tokens(self) -> Vec<TokenId> {
        self.tokens
    }

    /// Copy of `self` with `position` replaced by `token`.
    pub fn substitute(&self, position: usize, token: TokenId) -> Result<TokenSeq> {
        if position >= self.tokens.len() {
            return Err(Error::IndexOutOfRange {
                index: position,
                len: self.tokens.len(),
            });
        }
        self.vocab.check(token)?;
        let mut tokens = self.tokens.clone();
        tokens[position] = token;
        Ok(TokenSeq {
            tokens,
            vocab: Arc::clone(&self.vocab),
        })
    }

    pub fn hamming(&self, other: &TokenSeq) -> usize {
        self.tokens
            .iter()
            .zip(&other.tokens)
            .filter(|(a, b)| a != b)
            .count()
            + self.tokens.len().abs_diff(other.tokens.len())
    }
}

impl PartialEq for TokenSeq {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.vocab.size() == other.vocab.size()
    }
}

impl Eq for TokenSeq {}

impl fmt::Debug for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.tokens)
    }
}

/// How the initial suffix is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuffixInit {
    Constant(TokenId),
    Random,
}

impl Default for SuffixInit {
    fn default() -> Self {
        SuffixInit::Constant(0)
    }
}

/// Prompt `x`, adversarial suffix `s` and target continuation `y`. The scored
/// input is `x ++ s ++ y`; the loss covers the positions of `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackInstance {
    prompt: TokenSeq,
    suffix: TokenSeq,
    target: TokenSeq,
}

impl AttackInstance {
    pub fn new(prompt: TokenSeq, suffix: TokenSeq, target: TokenSeq) -> Result<Self> {
        let v = prompt.vocab().size();
        if suffix.vocab().size() != v || target.vocab().size() != v {
            return Err(Error::Shape(
                "prompt, suffix and target use different vocabularies".into(),
            ));
        }
        Ok(Self {
            prompt,
            suffix,
            target,
        })
    }

    pub fn prompt(&self) -> &TokenSeq {
        &self.prompt
    }

    pub fn suffix(&self) -> &TokenSeq {
        &self.suffix
    }

    pub fn target(&self) -> &TokenSeq {
        &self.target
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        self.prompt.vocab()
    }

    pub fn suffix_positions(&self) -> Range<usize> {
        let start = self.prompt.len();
        start..start + self.suffix.len()
    }

    pub fn target_positions(&self) -> Range<usize> {
        let start = self.prompt.len() + self.suffix.len();
        start..start + self.target.len()
    }

    /// Full input `x ++ s ++ y`.
    pub fn input_ids(&self) -> Vec<TokenId> {
        self.input_ids_with(self.suffix.tokens())
    }

    /// `x ++ suffix ++ y` for an arbitrary suffix of the same length.
    pub fn input_ids_with(&self, suffix: &[TokenId]) -> Vec<TokenId> {
        let mut ids =
            Vec::with_capacity(self.prompt.len() + suffix.len() + self.target.len());
        ids.extend_from_slice(self.prompt.tokens());
        ids.extend_from_slice(suffix);
        ids.extend_from_slice(self.target.tokens());
        ids
    }

    pub fn total_len(&self) -> usize {
        self.prompt.len() + self.suffix.len() + self.target.len()
    }

    /// The same instance with the suffix replaced. The suffix length is fixed
    /// for the life of a run.
    pub fn with_suffix(&self, suffix: TokenSeq) -> Result<Self> {
        if suffix.len() != self.suffix.len() {
            return Err(Error::Shape(format!(
                "suffix length {} differs from instance suffix length {}",
                suffix.len(),
                self.suffix.len()
            )));
        }
        Ok(Self {
            prompt: self.prompt.clone(),
            suffix,
            target: self.target.clone(),
        })
    }
}

pub fn make_instance(
    prompt: TokenSeq,
    suffix_len: usize,
    target: TokenSeq,
    init: SuffixInit,
    rng: &mut SeededRng,
) -> Result<AttackInstance> {
    if suffix_len == 0 {
        return Err(Error::Shape("suffix length must be at least 1".into()));
    }
    let vocab = Arc::clone(prompt.vocab());
    let tokens = match init {
        SuffixInit::Constant(tok) => {
            vocab.check(tok)?;
            vec![tok; suffix_len]
        }
        SuffixInit::Random => (0..suffix_len)
            .map(|_| rng.below(vocab.size()) as TokenId)
            .collect(),
    };
    let suffix = TokenSeq::new(tokens, vocab)?;
    AttackInstance::new(prompt, suffix, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ids: &[TokenId], v: &Arc<Vocabulary>) -> TokenSeq {
        TokenSeq::new(ids.to_vec(), Arc::clone(v)).unwrap()
    }

    #[test]
    fn vocab_needs_two_tokens() {
        assert_eq!(Vocabulary::new(1).unwrap_err(), Error::VocabTooSmall(1));
        assert!(Vocabulary::new(2).is_ok());
    }

    #[test]
    fn seq_rejects_bad_ids() {
        let v = Vocabulary::new(4).unwrap();
        let err = TokenSeq::new(vec![1, 4], v.clone()).unwrap_err();
        assert_eq!(err, Error::InvalidToken { id: 4, vocab_size: 4 });
        assert_eq!(TokenSeq::new(vec![], v).unwrap_err(), Error::EmptySequence);
    }

    #[test]
    fn constant_fill_instance() {
        let v = Vocabulary::new(8).unwrap();
        let mut rng = SeededRng::new(0);
        let inst = make_instance(
            seq(&[3, 7], &v),
            4,
            seq(&[1], &v),
            SuffixInit::Constant(5),
            &mut rng,
        )
        .unwrap();
        assert_eq!(inst.suffix().tokens(), &[5, 5, 5, 5]);
        assert_eq!(inst.suffix_positions(), 2..6);
        assert_eq!(inst.input_ids(), vec![3, 7, 5, 5, 5, 5, 1]);
        assert_eq!(inst.target_positions(), 6..7);
    }

    #[test]
    fn suffix_len_one() {
        let v = Vocabulary::new(8).unwrap();
        let mut rng = SeededRng::new(0);
        let inst = make_instance(
            seq(&[3], &v),
            1,
            seq(&[1], &v),
            SuffixInit::Constant(2),
            &mut rng,
        )
        .unwrap();
        assert_eq!(inst.suffix().len(), 1);
    }

    #[test]
    fn random_init_golden() {
        let v = Vocabulary::new(8).unwrap();
        let mut rng = SeededRng::new(42);
        let inst = make_instance(
            seq(&[3, 7], &v),
            4,
            seq(&[1], &v),
            SuffixInit::Random,
            &mut rng,
        )
        .unwrap();
        assert_eq!(inst.suffix().tokens(), &GOLDEN_RANDOM_SUFFIX);
    }

    const GOLDEN_RANDOM_SUFFIX: [TokenId; 4] = [1, 0, 4, 2];

    #[test]
    fn invalid_init_token_is_named() {
        let v = Vocabulary::new(8).unwrap();
        let mut rng = SeededRng::new(0);
        let err = make_instance(
            seq(&[3], &v),
            2,
            seq(&[1], &v),
            SuffixInit::Constant(9),
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(err, Error::InvalidToken { id: 9, vocab_size: 8 });
        assert!(err.to_string().contains('9'));
    }

    #[test]
    fn substitute_examples() {
        let v = Vocabulary::new(8).unwrap();
        let s = seq(&[5, 5, 5], &v);
        assert_eq!(s.substitute(1, 2).unwrap().tokens(), &[5, 2, 5]);
        assert_eq!(s.substitute(0, 5).unwrap(), s);
        assert_eq!(s.tokens(), &[5, 5, 5]);
        let t = seq(&[1, 2, 3, 4], &v);
        assert_eq!(t.substitute(3, 0).unwrap().tokens(), &[1, 2, 3, 0]);
        assert_eq!(
            t.substitute(4, 0).unwrap_err(),
            Error::IndexOutOfRange { index: 4, len: 4 }
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn substitute_moves_at_most_one(
                ids in proptest::collection::vec(0u32..16, 1..12),
                pos_seed in any::<usize>(),
                tok in 0u32..16,
            ) {
                let v = Vocabulary::new(16).unwrap();
                let s = TokenSeq::new(ids, v).unwrap();
                let pos = pos_seed % s.len();
                let t = s.substitute(pos, tok).unwrap();
                prop_assert!(s.hamming(&t) <= 1);
                prop_assert_eq!(t.tokens()[pos], tok);
            }
        }
    }
}
