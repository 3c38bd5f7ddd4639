//! Deterministic lexical similarity used when no external model is
//! configured.

use std::collections::{HashMap, HashSet};

use super::{ModelError, Scorer};

/// `0.5 * token Jaccard + 0.5 * character-trigram cosine`, both computed on
/// lowercased text with every non-alphanumeric character (dots and
/// underscores included) treated as a word break.
#[derive(Debug, Default, Clone, Copy)]
pub struct LexicalScorer;

impl LexicalScorer {
    pub fn similarity(a: &str, b: &str) -> f64 {
        let (ta, tb) = (tokens(a), tokens(b));
        if ta.is_empty() || tb.is_empty() {
            return 0.0;
        }
        0.5 * jaccard(&ta, &tb) + 0.5 * cosine(&trigrams(&ta), &trigrams(&tb))
    }
}

impl Scorer for LexicalScorer {
    fn score_batch(&self, question: &str, candidates: &[String]) -> Result<Vec<f64>, ModelError> {
        Ok(candidates.iter().map(|c| Self::similarity(question, c)).collect())
    }
}

fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: HashSet<&String> = a.iter().collect();
    let b: HashSet<&String> = b.iter().collect();
    a.intersection(&b).count() as f64 / a.union(&b).count() as f64
}

/// Trigram counts over the space-joined tokens, padded so one-letter words
/// still contribute.
fn trigrams(tokens: &[String]) -> HashMap<[char; 3], u64> {
    let text: Vec<char> = format!(" {} ", tokens.join(" ")).chars().collect();
    let mut out = HashMap::new();
    for w in text.windows(3) {
        *out.entry([w[0], w[1], w[2]]).or_insert(0) += 1;
    }
    out
}

fn cosine(a: &HashMap<[char; 3], u64>, b: &HashMap<[char; 3], u64>) -> f64 {
    let dot: u64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na: u64 = a.values().map(|x| x * x).sum();
    let nb: u64 = b.values().map(|x| x * x).sum();
    if na == 0 || nb == 0 {
        return 0.0;
    }
    dot as f64 / ((na * nb) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_similarity_is_one() {
        for q in ["Strong lyrics is the description of which video game rating?", "a", "x y x"] {
            assert_eq!(LexicalScorer::similarity(q, q), 1.0);
        }
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(LexicalScorer::similarity("video game", ""), 0.0);
        assert_eq!(LexicalScorer::similarity("", "video game"), 0.0);
        assert_eq!(LexicalScorer::similarity("video", "..."), 0.0);
    }

    #[test]
    fn separators_split_names() {
        assert_eq!(tokens("cvg.computer_game_rating"), ["cvg", "computer", "game", "rating"]);
    }

    #[test]
    fn symmetric_and_bounded() {
        let pairs = [("who wrote dune", "book.author.works_written"), ("abc", "abd"), ("rating", "rating rating")];
        for (a, b) in pairs {
            let s = LexicalScorer::similarity(a, b);
            assert!((0.0..=1.0).contains(&s));
            assert_eq!(s, LexicalScorer::similarity(b, a));
        }
    }
}
