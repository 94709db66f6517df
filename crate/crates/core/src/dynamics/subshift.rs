use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{BranchSystem, Preimage};
use crate::error::{Error, Result};

/// A finite word `w₀w₁…w_{L−1}` standing for every sequence that starts with it.
///
/// Integrands are cylinder functions, so a word of working length `L` carries
/// all the information an operation consuming at most `L` symbols needs.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn leading(&self) -> Option<u8> {
        self.0.first().copied()
    }

    pub fn prepend(&self, symbol: u8) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(symbol);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Parse `"0:1:0"` (or `"010"` for alphabets below ten).
    pub fn parse(text: &str) -> Result<Word> {
        let text = text.trim();
        let parts: Vec<&str> = if text.contains(':') {
            text.split(':').collect()
        } else {
            text.split("").filter(|s| !s.is_empty()).collect()
        };
        parts
            .iter()
            .map(|p| p.trim().parse::<u8>().map_err(|_| Error::InvalidPoint(format!("bad word {text:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(":"))
    }
}

/// One-sided subshift of finite type.
///
/// `transitions[a][b]` is true iff `a` may immediately precede `b`. The map is
/// the shift (drop the first symbol); branch labels at `x` are the symbols `j`
/// with `transitions[j][x₀]`, ascending, and branch `j` prepends `j`.
#[derive(Clone, PartialEq, Eq)]
pub struct Subshift {
    transitions: Vec<Vec<bool>>,
    sample_length: usize,
}

impl fmt::Debug for Subshift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .transitions
            .iter()
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect();
        write!(f, "Subshift[{}]", rows.join(","))
    }
}

impl Subshift {
    /// Rows and columns must all be nonzero, so the shift is onto and every
    /// symbol has a predecessor.
    pub fn new(transitions: Vec<Vec<u8>>) -> Result<Self> {
        let a = transitions.len();
        if a == 0 || a > 256 {
            return Err(Error::InvalidInput(format!("alphabet size {a} outside 1..=256")));
        }
        let mut t = vec![vec![false; a]; a];
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != a {
                return Err(Error::InvalidInput(format!("transition row {i} has length {}, expected {a}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                t[i][j] = match v {
                    0 => false,
                    1 => true,
                    _ => return Err(Error::InvalidInput(format!("transition entry [{i}][{j}] = {v} is not 0/1"))),
                };
            }
        }
        for i in 0..a {
            if !t[i].iter().any(|&b| b) {
                return Err(Error::InvalidInput(format!("transition row {i} is zero")));
            }
            if !(0..a).any(|j| t[j][i]) {
                return Err(Error::InvalidInput(format!("transition column {i} is zero")));
            }
        }
        Ok(Subshift { transitions: t, sample_length: 8 })
    }

    pub fn full(alphabet: usize) -> Self {
        Subshift::new(vec![vec![1; alphabet]; alphabet]).expect("full shift is valid")
    }

    pub fn golden_mean() -> Self {
        Subshift::new(vec![vec![1, 1], vec![1, 0]]).expect("golden mean shift is valid")
    }

    /// Working length of words produced by [`BranchSystem::sample_points`].
    pub fn with_sample_length(mut self, len: usize) -> Self {
        self.sample_length = len.max(1);
        self
    }

    pub fn alphabet(&self) -> usize {
        self.transitions.len()
    }

    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.transitions[a as usize][b as usize]
    }

    pub fn transition_matrix(&self) -> Vec<Vec<u8>> {
        self.transitions.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect()
    }

    /// Number of symbols allowed before `b` (column sum).
    pub fn predecessors(&self, b: u8) -> usize {
        (0..self.alphabet()).filter(|&j| self.transitions[j][b as usize]).count()
    }

    /// Every admissible word of the given length, in lexicographic order.
    pub fn words(&self, len: usize) -> Vec<Word> {
        if len == 0 {
            return vec![Word(Vec::new())];
        }
        let mut out: Vec<Word> = (0..self.alphabet() as u8).map(|a| Word(vec![a])).collect();
        for _ in 1..len {
            let mut next = Vec::new();
            for w in &out {
                let last = *w.0.last().unwrap();
                for b in 0..self.alphabet() as u8 {
                    if self.allowed(last, b) {
                        let mut v = w.0.clone();
                        v.push(b);
                        next.push(Word(v));
                    }
                }
            }
            out = next;
        }
        out
    }
}

impl BranchSystem for Subshift {
    type Point = Word;

    fn family(&self) -> &'static str {
        "subshift"
    }

    fn degree(&self) -> usize {
        (0..self.alphabet() as u8).map(|b| self.predecessors(b)).max().unwrap_or(0)
    }

    fn validate(&self, x: &Word) -> Result<()> {
        if x.is_empty() {
            return Err(Error::WordTooShort { len: 0, needed: 1 });
        }
        let a = self.alphabet();
        if let Some(&s) = x.0.iter().find(|&&s| s as usize >= a) {
            return Err(Error::InvalidPoint(format!("symbol {s} outside alphabet of size {a}")));
        }
        for pair in x.0.windows(2) {
            if !self.allowed(pair[0], pair[1]) {
                return Err(Error::InvalidPoint(format!(
                    "word {x:?} contains forbidden transition {}→{}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }

    fn forward(&self, x: &Word) -> Result<Word> {
        if x.len() < 2 {
            return Err(Error::WordTooShort { len: x.len(), needed: 2 });
        }
        self.validate(x)?;
        Ok(Word(x.0[1..].to_vec()))
    }

    fn preimages(&self, x: &Word) -> Result<Vec<Preimage<Word>>> {
        self.validate(x)?;
        let lead = x.0[0];
        Ok((0..self.alphabet() as u8)
            .filter(|&j| self.allowed(j, lead))
            .enumerate()
            .map(|(label, j)| Preimage::simple(label, x.prepend(j)))
            .collect())
    }

    fn branch_count(&self, x: &Word) -> Result<usize> {
        let lead = x.leading().ok_or(Error::WordTooShort { len: 0, needed: 1 })?;
        Ok(self.predecessors(lead))
    }

    fn sample_points(&self, count: usize, rng: &mut ChaCha20Rng) -> Vec<Word> {
        let a = self.alphabet();
        (0..count)
            .map(|_| {
                let mut v = vec![rng.gen_range(0..a) as u8];
                while v.len() < self.sample_length {
                    let last = *v.last().unwrap();
                    let next: Vec<u8> = (0..a as u8).filter(|&b| self.allowed(last, b)).collect();
                    v.push(next[rng.gen_range(0..next.len())]);
                }
                Word(v)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn shift_drops_first_symbol() {
        let sys = Subshift::golden_mean();
        let y = sys.forward(&Word::new(vec![0, 1, 0])).unwrap();
        assert_eq!(y, Word::new(vec![1, 0]));
    }

    #[test]
    fn short_and_invalid_words() {
        let sys = Subshift::golden_mean();
        assert_eq!(sys.forward(&Word::new(vec![1])), Err(Error::WordTooShort { len: 1, needed: 2 }));
        assert!(matches!(sys.forward(&Word::new(vec![1, 1, 0])), Err(Error::InvalidPoint(_))));
        assert!(matches!(sys.validate(&Word::new(vec![2])), Err(Error::InvalidPoint(_))));
    }

    #[test]
    fn single_preimage_when_one_predecessor() {
        let sys = Subshift::golden_mean();
        let pre = sys.preimages(&Word::new(vec![1, 0])).unwrap();
        assert_eq!(pre, vec![Preimage::simple(0, Word::new(vec![0, 1, 0]))]);
    }

    #[test]
    fn degenerate_matrices_rejected() {
        assert!(Subshift::new(vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(Subshift::new(vec![vec![0, 0], vec![1, 1]]).is_err());
        assert!(Subshift::new(vec![vec![1, 2], vec![1, 1]]).is_err());
        assert!(Subshift::new(vec![vec![1]]).is_ok());
    }

    #[test]
    fn completeness_and_partition() {
        let mut g = rng::stream(3, 0);
        for sys in [Subshift::golden_mean(), Subshift::full(3)] {
            for x in sys.sample_points(300, &mut g) {
                let pre = sys.preimages(&x).unwrap();
                assert_eq!(pre.len(), sys.predecessors(x.symbols()[0]));
                for p in &pre {
                    assert_eq!(sys.forward(&p.point).unwrap(), x);
                }
                let hits = sys.preimages(&sys.forward(&x).unwrap()).unwrap().iter().filter(|p| p.point == x).count();
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn word_enumeration_counts() {
        let sys = Subshift::golden_mean();
        let counts: Vec<usize> = (1..=6).map(|n| sys.words(n).len()).collect();
        assert_eq!(counts, vec![2, 3, 5, 8, 13, 21]);
    }

    #[test]
    fn parse_words() {
        assert_eq!(Word::parse("010").unwrap(), Word::new(vec![0, 1, 0]));
        assert_eq!(Word::parse("0:12:3").unwrap(), Word::new(vec![0, 12, 3]));
    }
}
