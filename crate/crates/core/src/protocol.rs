//! Prover/verifier plumbing shared by every scheme: transcripts, cost
//! accounting and the single-pass runner.

use alloc::vec::Vec;
use core::ops::Add;

use crate::error::Reject;

/// Where an annotation chunk sits relative to the stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Start,
    /// After the update with this 0-based index.
    Interleaved(u64),
    End,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub position: Position,
    pub payload: Vec<u8>,
}

/// Bits charged for the length prefix (and, implicitly, the position tag).
pub const CHUNK_PREFIX_BITS: u64 = 64;

impl Chunk {
    pub fn bits(&self) -> u64 {
        CHUNK_PREFIX_BITS + 8 * self.payload.len() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token<U> {
    Update(U),
    Annotation(Chunk),
}

/// Everything that crossed the prover-verifier channel, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript<U> {
    pub tokens: Vec<Token<U>>,
}

impl<U> Default for Transcript<U> {
    fn default() -> Self {
        Self { tokens: Vec::new() }
    }
}

impl<U> Transcript<U> {
    pub fn hcost_bits(&self) -> u64 {
        self.chunks().map(Chunk::bits).sum()
    }

    pub fn chunks(&self) -> impl Iterator<Item = &Chunk> {
        self.tokens.iter().filter_map(|t| match t {
            Token::Annotation(c) => Some(c),
            Token::Update(_) => None,
        })
    }

    fn annotate(&mut self, position: Position, payload: Vec<u8>) {
        self.tokens.push(Token::Annotation(Chunk { position, payload }));
    }
}

/// Verifier working memory: field words plus machine words (counters, hash parameters).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Space {
    pub field_words: u64,
    pub aux_words: u64,
    pub field_bits: u32,
}

impl Space {
    pub fn field(words: u64, field_bits: u32) -> Self {
        Self { field_words: words, aux_words: 0, field_bits }
    }

    pub fn aux(words: u64) -> Self {
        Self { field_words: 0, aux_words: words, field_bits: 0 }
    }

    pub fn words(&self) -> u64 {
        self.field_words + self.aux_words
    }

    pub fn bits(&self) -> u64 {
        self.field_words * self.field_bits as u64 + self.aux_words * 64
    }
}

impl Add for Space {
    type Output = Space;

    fn add(self, o: Space) -> Space {
        Space {
            field_words: self.field_words + o.field_words,
            aux_words: self.aux_words + o.aux_words,
            field_bits: self.field_bits.max(o.field_bits),
        }
    }
}

impl core::iter::Sum for Space {
    fn sum<I: Iterator<Item = Space>>(iter: I) -> Space {
        iter.fold(Space::default(), Add::add)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Cost {
    pub hcost_bits: u64,
    pub vcost_words: u64,
    pub vcost_bits: u64,
}

impl Cost {
    /// Public coins count toward both annotation and verifier space.
    pub fn charge_public_coins(&mut self, words: u64, bits: u64) {
        self.hcost_bits += bits;
        self.vcost_words += words;
        self.vcost_bits += bits;
    }
}

/// Prover behaviour selectable from the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Honest,
    TamperProof,
    WrongAnswer,
    FalseCollisionList,
    OmittedHeavyHitter,
    FakeWitness,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Honest,
        Strategy::TamperProof,
        Strategy::WrongAnswer,
        Strategy::FalseCollisionList,
        Strategy::OmittedHeavyHitter,
        Strategy::FakeWitness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Honest => "honest",
            Strategy::TamperProof => "tamper-proof-polynomial",
            Strategy::WrongAnswer => "wrong-answer",
            Strategy::FalseCollisionList => "false-collision-list",
            Strategy::OmittedHeavyHitter => "omitted-heavy-hitter",
            Strategy::FakeWitness => "fake-witness",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn is_honest(self) -> bool {
        self == Strategy::Honest
    }
}

impl core::fmt::Display for Strategy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// A streaming verifier. It reads annotation bytes only at the start and end
/// unless it overrides [`StreamVerifier::interleaved`].
pub trait StreamVerifier {
    type Update;
    type Output;

    fn start(&mut self, annotation: &[u8]) -> Result<(), Reject>;
    fn update(&mut self, update: &Self::Update) -> Result<(), Reject>;
    fn interleaved(&mut self, _index: u64, _annotation: &[u8]) -> Result<(), Reject> {
        Err(Reject::Malformed("unexpected interleaved annotation"))
    }
    fn finish(self, annotation: &[u8]) -> Result<Self::Output, Reject>;
    fn space(&self) -> Space;
}

/// A prover that sees the stream one update at a time. A prescient prover is
/// the same thing built with the whole stream in hand.
pub trait StreamProver {
    type Update;

    fn start(&mut self) -> Vec<u8>;
    fn observe(&mut self, _update: &Self::Update) -> Option<Vec<u8>> {
        None
    }
    fn finish(&mut self) -> Vec<u8>;
}

#[derive(Clone, Debug)]
pub struct Execution<O, U> {
    pub outcome: Result<O, Reject>,
    pub transcript: Transcript<U>,
    pub cost: Cost,
}

/// One pass: start annotation, the stream with any interleaved chunks, end annotation.
pub fn execute<V, P, U>(mut verifier: V, mut prover: P, stream: &[U]) -> Execution<V::Output, U>
where
    V: StreamVerifier<Update = U>,
    P: StreamProver<Update = U>,
    U: Clone,
{
    let mut transcript = Transcript::default();
    let mut peak = Space::default();
    let outcome = (|| {
        let start = prover.start();
        let started = verifier.start(&start);
        transcript.annotate(Position::Start, start);
        started?;
        peak = verifier.space();
        for (i, u) in stream.iter().enumerate() {
            transcript.tokens.push(Token::Update(u.clone()));
            verifier.update(u)?;
            if let Some(chunk) = prover.observe(u) {
                let res = verifier.interleaved(i as u64, &chunk);
                transcript.annotate(Position::Interleaved(i as u64), chunk);
                res?;
            }
        }
        peak = max_space(peak, verifier.space());
        let end = prover.finish();
        let out = verifier.finish(&end);
        transcript.annotate(Position::End, end);
        out
    })();
    let cost = Cost { hcost_bits: transcript.hcost_bits(), vcost_words: peak.words(), vcost_bits: peak.bits() };
    Execution { outcome, transcript, cost }
}

fn max_space(a: Space, b: Space) -> Space {
    if b.words() > a.words() {
        b
    } else {
        a
    }
}

/// Feeds a recorded transcript to a fresh verifier.
pub fn replay<V, U>(mut verifier: V, transcript: &Transcript<U>) -> Result<V::Output, Reject>
where
    V: StreamVerifier<Update = U>,
{
    let mut end: &[u8] = &[];
    for token in &transcript.tokens {
        match token {
            Token::Update(u) => verifier.update(u)?,
            Token::Annotation(Chunk { position: Position::Start, payload }) => verifier.start(payload)?,
            Token::Annotation(Chunk { position: Position::Interleaved(i), payload }) => verifier.interleaved(*i, payload)?,
            Token::Annotation(Chunk { position: Position::End, payload }) => end = payload,
        }
    }
    verifier.finish(end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Summer {
        total: i64,
    }

    impl StreamVerifier for Summer {
        type Update = i64;
        type Output = i64;

        fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
            if a.is_empty() {
                Ok(())
            } else {
                Err(Reject::Malformed("expected empty start"))
            }
        }

        fn update(&mut self, u: &i64) -> Result<(), Reject> {
            self.total += u;
            Ok(())
        }

        fn finish(self, a: &[u8]) -> Result<i64, Reject> {
            let claim = i64::from_be_bytes(a.try_into().map_err(|_| Reject::Malformed("claim"))?);
            if claim == self.total {
                Ok(claim)
            } else {
                Err(Reject::Inconsistent("sum"))
            }
        }

        fn space(&self) -> Space {
            Space::aux(1)
        }
    }

    struct Claimer {
        seen: i64,
        lie: i64,
    }

    impl StreamProver for Claimer {
        type Update = i64;

        fn start(&mut self) -> Vec<u8> {
            vec![]
        }

        fn observe(&mut self, u: &i64) -> Option<Vec<u8>> {
            self.seen += u;
            None
        }

        fn finish(&mut self) -> Vec<u8> {
            (self.seen + self.lie).to_be_bytes().to_vec()
        }
    }

    #[test]
    fn honest_run_and_replay() {
        let stream = [3i64, 4, -2];
        let run = execute(Summer { total: 0 }, Claimer { seen: 0, lie: 0 }, &stream);
        assert_eq!(run.outcome, Ok(5));
        // two chunks: empty start, 8-byte end
        assert_eq!(run.cost.hcost_bits, 2 * CHUNK_PREFIX_BITS + 64);
        assert_eq!(run.cost.vcost_words, 1);
        assert_eq!(replay(Summer { total: 0 }, &run.transcript), Ok(5));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(Strategy::parse(s.name()), Some(s));
        }
        assert_eq!(Strategy::parse("nope"), None);
    }

    #[test]
    fn lying_prover_rejected() {
        let run = execute(Summer { total: 0 }, Claimer { seen: 0, lie: 1 }, &[1i64]);
        assert_eq!(run.outcome, Err(Reject::Inconsistent("sum")));
    }
}
