//! Tokenization shared by the hashing embedder, the rule-based seeker and the
//! offline stand-in model.

use std::collections::HashSet;
use std::sync::LazyLock;

/// Common English function words plus the fixed phrasing of templated
/// dialogue turns, so that only attribute words survive [`content_tokens`].
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as",
    "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by",
    "can", "could", "did", "do", "does", "doing", "don", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "let", "me", "more",
    "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or",
    "other", "our", "out", "over", "own", "s", "same", "she", "should", "so", "some", "such", "t",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those",
    "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what", "when",
    "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
    // dialogue template vocabulary
    "ve", "ll", "m", "d", "re", "like", "want", "need", "needs", "prefer", "something", "looking",
    "products", "product", "item", "items", "fit", "fits", "none", "work", "works", "information",
    "expected", "price", "range", "thanks", "thank", "yes", "okay", "ok", "really", "sure",
    "that's", "anything", "else", "specific", "requirements", "particular", "interested", "buy",
    "purchase", "decided", "great", "choice", "recommend", "recommendation", "here", "might",
    "consider", "considering", "highly", "instead", "one", "think", "tell", "know", "much",
    "please", "also", "pay", "paying", "doesn", "isn", "still", "quite", "fine", "good", "get",
    "go", "make", "made", "feel", "feels", "right", "see", "clear", "comparison", "details",
    "detail", "compare", "buyers", "customers", "others", "say", "says", "said", "usually",
    "before", "carefully", "trust", "opinion", "opinions", "reviews", "review", "rating",
    "ratings", "have", "has", "had", "worth", "extra", "money", "check", "sounds", "match",
    "show", "budget", "bit", "lot",
];

static STOPWORD_SET: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| STOPWORDS.iter().copied().collect());

/// Lowercased alphanumeric runs.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn is_stopword(token: &str) -> bool {
    STOPWORD_SET.contains(token)
}

/// Tokens that are neither stopwords nor pure numbers.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokens(text)
        .into_iter()
        .filter(|t| !is_stopword(t) && !t.chars().all(|c| c.is_ascii_digit()))
        .collect()
}

/// Content tokens in first-occurrence order without repeats.
pub fn keywords(text: &str, extra_stopwords: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    content_tokens(text)
        .into_iter()
        .filter(|t| !extra_stopwords.iter().any(|s| s == t))
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Joins words as `a`, `a and b`, `a, b and c`.
pub fn join_words(words: &[String]) -> String {
    match words {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_and_filters() {
        assert_eq!(tokens("Soft, COTTON t-shirt!"), vec!["soft", "cotton", "t", "shirt"]);
        assert_eq!(
            content_tokens("I prefer soft and breathable cotton, 100 percent"),
            vec!["soft", "breathable", "cotton", "percent"]
        );
    }

    #[test]
    fn keywords_dedupe_in_order() {
        let k = keywords("warm wool, warm and cozy wool", &["cozy".to_string()]);
        assert_eq!(k, vec!["warm", "wool"]);
    }

    #[test]
    fn joins() {
        let w: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(join_words(&w), "a, b and c");
        assert_eq!(join_words(&w[..1]), "a");
    }
}
