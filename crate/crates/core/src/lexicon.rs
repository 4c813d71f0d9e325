//! Lexicons (strong / weak / generic) and edit-distance transcription
//! correction, optionally weighted by decoder character probabilities.
//!
//! Weighted cost scheme: substituting emitted position `i` by candidate char
//! `c` costs `1 − p_i(c)` (0 on an exact match), deleting position `i` costs
//! `p_i(emitted char)`, and inserting any candidate char costs 1. With one-hot
//! rows this reduces to plain Levenshtein distance.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::annotation::ImageId;
use crate::error::{Error, Result};
use crate::metrics::{normalize_transcription, NormalizationPolicy};

/// Candidate words whose length differs from the prediction by more than
/// this many characters are skipped during lexicon search.
pub const LENGTH_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LexiconMode {
    #[default]
    None,
    /// Per-image vocabulary (typically 100 words per image).
    Strong,
    /// One vocabulary covering all words in the evaluated set.
    Weak,
    /// A large general vocabulary (on the order of 90K words).
    Generic,
}

impl LexiconMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LexiconMode::None => "none",
            LexiconMode::Strong => "strong",
            LexiconMode::Weak => "weak",
            LexiconMode::Generic => "generic",
        }
    }
}

impl fmt::Display for LexiconMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexiconMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(LexiconMode::None),
            "strong" => Ok(LexiconMode::Strong),
            "weak" => Ok(LexiconMode::Weak),
            "generic" => Ok(LexiconMode::Generic),
            other => Err(format!("unknown lexicon mode `{other}`")),
        }
    }
}

/// A loaded word list. Words are normalized with the active
/// [`NormalizationPolicy`] at load time and de-duplicated preserving first
/// occurrence, which fixes tie-breaking order.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub mode: LexiconMode,
    pub global_words: Vec<String>,
    pub per_image_words: BTreeMap<ImageId, Vec<String>>,
}

impl Lexicon {
    pub fn from_words<I, S>(mode: LexiconMode, words: I, policy: &NormalizationPolicy) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Lexicon {
            mode,
            global_words: normalize_words(words, policy),
            per_image_words: BTreeMap::new(),
        }
    }

    pub fn with_image_words<I, S>(
        mut self,
        image_id: impl Into<ImageId>,
        words: I,
        policy: &NormalizationPolicy,
    ) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.per_image_words
            .insert(image_id.into(), normalize_words(words, policy));
        self
    }

    /// Word list applicable to an image: per-image in strong mode, the
    /// global list otherwise.
    pub fn words_for(&self, image_id: &ImageId) -> Result<&[String]> {
        match self.mode {
            LexiconMode::None => Err(Error::LexiconModeNone),
            LexiconMode::Strong => self
                .per_image_words
                .get(image_id)
                .map(|w| w.as_slice())
                .ok_or_else(|| Error::MissingImageLexicon { image_id: image_id.to_string() }),
            _ => Ok(&self.global_words),
        }
    }
}

fn normalize_words<I, S>(words: I, policy: &NormalizationPolicy) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for word in words {
        let w = normalize_transcription(word.as_ref(), policy);
        if w.is_empty() {
            continue;
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Loads a lexicon from word-per-line files. Strong mode reads per-image
/// vocabularies from either a directory of `<image_id>.txt` files or a JSON
/// map `{"image_id": ["word", ...]}`.
pub fn load_lexicon(
    mode: LexiconMode,
    global_sources: &[impl AsRef<Path>],
    per_image_source: Option<&Path>,
    policy: &NormalizationPolicy,
) -> Result<Lexicon> {
    let mut all_words: Vec<String> = Vec::new();
    for path in global_sources {
        let text = fs::read_to_string(path.as_ref())?;
        all_words.extend(
            text.lines()
                .map(|l| l.trim_end_matches('\r').trim().to_string())
                .filter(|l| !l.is_empty()),
        );
    }
    let mut lexicon = Lexicon::from_words(mode, all_words, policy);

    if let Some(source) = per_image_source {
        if source.is_dir() {
            let mut entries: Vec<_> = fs::read_dir(source)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.extension().map_or(false, |e| e == "txt"))
                .collect();
            entries.sort();
            for path in entries {
                let image_id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_default();
                let text = fs::read_to_string(&path)?;
                let words: Vec<String> = text
                    .lines()
                    .map(|l| l.trim_end_matches('\r').trim().to_string())
                    .filter(|l| !l.is_empty())
                    .collect();
                lexicon = lexicon.with_image_words(image_id, words, policy);
            }
        } else {
            let bytes = fs::read(source)?;
            let map: Value = serde_json::from_slice(&bytes)
                .map_err(|e| crate::jsonfmt::json_parse_error(e, &bytes))?;
            let Value::Object(map) = map else {
                return Err(Error::Schema {
                    message: "per-image lexicon JSON must be an object".into(),
                });
            };
            for (image_id, words_value) in map {
                let Value::Array(items) = words_value else {
                    return Err(Error::Schema {
                        message: format!("per-image lexicon for `{image_id}` must be an array"),
                    });
                };
                let words: Vec<String> = items
                    .into_iter()
                    .map(|v| match v {
                        Value::String(s) => Ok(s),
                        _ => Err(Error::Schema {
                            message: format!("per-image lexicon for `{image_id}` contains a non-string"),
                        }),
                    })
                    .collect::<Result<_>>()?;
                lexicon = lexicon.with_image_words(image_id, words, policy);
            }
        }
    }

    Ok(lexicon)
}

/// Levenshtein distance with unit insert/delete/substitute costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// Per-decoding-step probability vectors over an ordered alphabet.
///
/// Row `i` holds the decoder's distribution at the step that emitted the
/// `i`-th transcription character. Characters absent from the alphabet get
/// probability 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CharProbMatrix {
    alphabet: Vec<char>,
    rows: Vec<Vec<f64>>,
    index: HashMap<char, usize>,
}

impl CharProbMatrix {
    pub fn new(alphabet: Vec<char>, rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(Error::CharProbInvalid {
                    message: format!(
                        "row {i} has {} entries for an alphabet of {}",
                        row.len(),
                        alphabet.len()
                    ),
                });
            }
            let mut sum = 0.0;
            for &p in row {
                if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                    return Err(Error::CharProbInvalid {
                        message: format!("row {i} has probability {p} outside [0, 1]"),
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::CharProbInvalid {
                    message: format!("row {i} sums to {sum}, expected 1 within 1e-6"),
                });
            }
        }
        let index = alphabet.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(CharProbMatrix { alphabet, rows, index })
    }

    /// One-hot matrix putting probability 1 on each emitted character.
    pub fn one_hot(text: &str) -> Self {
        let mut alphabet: Vec<char> = Vec::new();
        let mut index: HashMap<char, usize> = HashMap::new();
        for c in text.chars() {
            index.entry(c).or_insert_with(|| {
                alphabet.push(c);
                alphabet.len() - 1
            });
        }
        let rows = text
            .chars()
            .map(|c| {
                let mut row = vec![0.0; alphabet.len()];
                row[index[&c]] = 1.0;
                row
            })
            .collect();
        CharProbMatrix { alphabet, rows, index }
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, row: usize, c: char) -> f64 {
        match self.index.get(&c) {
            Some(&col) => self.rows[row][col],
            None => 0.0,
        }
    }
}

/// Weighted edit distance from an emitted transcription (with per-step
/// probabilities) to a candidate word. See the module docs for the cost
/// scheme; the result is 0 when the strings are equal and never negative.
pub fn weighted_edit_distance(pred: &str, probs: &CharProbMatrix, candidate: &str) -> Result<f64> {
    let pred_chars: Vec<char> = pred.chars().collect();
    if probs.row_count() != pred_chars.len() {
        return Err(Error::CharProbRowCount {
            rows: probs.row_count(),
            chars: pred_chars.len(),
        });
    }
    let cand_chars: Vec<char> = candidate.chars().collect();
    let n = pred_chars.len();
    let m = cand_chars.len();

    let delete_cost: Vec<f64> = pred_chars
        .iter()
        .enumerate()
        .map(|(i, &c)| probs.prob(i, c))
        .collect();

    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64).collect();
    let mut cur = vec![0.0f64; m + 1];
    for i in 1..=n {
        cur[0] = prev[0] + delete_cost[i - 1];
        for j in 1..=m {
            let sub = if pred_chars[i - 1] == cand_chars[j - 1] {
                0.0
            } else {
                1.0 - probs.prob(i - 1, cand_chars[j - 1])
            };
            cur[j] = (prev[j - 1] + sub)
                .min(prev[j] + delete_cost[i - 1])
                .min(cur[j - 1] + 1.0);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Finds the lexicon word with minimal (weighted) edit distance from the
/// prediction.
///
/// Weak and generic modes reject the best word when
/// `cost / max(len(pred), len(best))` exceeds `reject_threshold`, keeping the
/// original transcription (`None` is returned). Strong mode always
/// substitutes. Ties break by word-list order.
pub fn best_match(
    pred: &str,
    probs: Option<&CharProbMatrix>,
    lexicon: &Lexicon,
    image_id: &ImageId,
    reject_threshold: f64,
) -> Result<Option<String>> {
    let words = lexicon.words_for(image_id)?;
    let pred_len = pred.chars().count();

    let in_window =
        |w: &String| w.chars().count().abs_diff(pred_len) <= LENGTH_WINDOW;
    let mut candidates: Vec<&String> = words.iter().filter(|w| in_window(w)).collect();
    if candidates.is_empty() && lexicon.mode == LexiconMode::Strong {
        // Strong mode substitutes unconditionally; fall back to the full
        // list when the length window filtered everything out.
        candidates = words.iter().collect();
    }

    let mut best: Option<(&String, f64)> = None;
    for word in candidates {
        let cost = match probs {
            Some(p) => weighted_edit_distance(pred, p, word)?,
            None => edit_distance(pred, word) as f64,
        };
        if best.map_or(true, |(_, c)| cost < c) {
            best = Some((word, cost));
        }
    }

    let Some((word, cost)) = best else { return Ok(None) };
    if lexicon.mode == LexiconMode::Strong {
        return Ok(Some(word.clone()));
    }
    let scale = pred_len.max(word.chars().count()).max(1) as f64;
    if cost / scale > reject_threshold {
        Ok(None)
    } else {
        Ok(Some(word.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> NormalizationPolicy {
        NormalizationPolicy::default()
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("kitten", "kitten"), 0);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("flaw", "lawn"), 2);
    }

    #[test]
    fn wed_is_zero_on_identity() {
        let probs = CharProbMatrix::new(
            vec!['A', 'B'],
            vec![vec![0.5, 0.5], vec![0.1, 0.9]],
        )
        .unwrap();
        assert_eq!(weighted_edit_distance("AB", &probs, "AB").unwrap(), 0.0);
    }

    #[test]
    fn wed_prefers_cheap_substitution() {
        // p(A)=0.6, p(B)=0.4; substituting A->B costs 1-0.4=0.6, which beats
        // delete (0.6) + insert (1.0).
        let probs = CharProbMatrix::new(vec!['A', 'B'], vec![vec![0.6, 0.4]]).unwrap();
        let cost = weighted_edit_distance("A", &probs, "B").unwrap();
        assert!((cost - 0.6).abs() <= 1e-12);
    }

    #[test]
    fn wed_one_hot_equals_levenshtein() {
        let probs = CharProbMatrix::one_hot("HELLO");
        for cand in ["HELLO", "HELP", "WORLD", "", "HELLOO", "HLLO"] {
            let wed = weighted_edit_distance("HELLO", &probs, cand).unwrap();
            let lev = edit_distance("HELLO", cand) as f64;
            assert!((wed - lev).abs() <= 1e-9, "{cand}: {wed} vs {lev}");
        }
    }

    #[test]
    fn wed_unknown_candidate_chars_cost_full_substitution() {
        let probs = CharProbMatrix::new(vec!['A'], vec![vec![1.0]]).unwrap();
        // 'Z' is not in the alphabet: substitution costs 1 - 0 = 1.
        assert_eq!(weighted_edit_distance("A", &probs, "Z").unwrap(), 1.0);
    }

    #[test]
    fn wed_rejects_row_count_mismatch() {
        let probs = CharProbMatrix::one_hot("AB");
        assert!(matches!(
            weighted_edit_distance("ABC", &probs, "AB"),
            Err(Error::CharProbRowCount { rows: 2, chars: 3 })
        ));
    }

    #[test]
    fn char_prob_matrix_validates_rows() {
        assert!(CharProbMatrix::new(vec!['A'], vec![vec![0.5, 0.5]]).is_err());
        assert!(CharProbMatrix::new(vec!['A', 'B'], vec![vec![0.7, 0.7]]).is_err());
        assert!(CharProbMatrix::new(vec!['A', 'B'], vec![vec![1.2, -0.2]]).is_err());
    }

    #[test]
    fn lexicon_load_dedupes_and_normalizes() {
        let lex = Lexicon::from_words(
            LexiconMode::Generic,
            ["door,", "DOOR", "hotel", "door"],
            &policy(),
        );
        assert_eq!(lex.global_words, vec!["DOOR".to_string(), "HOTEL".to_string()]);
    }

    #[test]
    fn best_match_picks_closest_word() {
        let lex = Lexicon::from_words(LexiconMode::Generic, ["HELLO", "WORLD"], &policy());
        let got = best_match("HELL0", None, &lex, &ImageId::new("img"), 0.5).unwrap();
        assert_eq!(got.as_deref(), Some("HELLO"));
    }

    #[test]
    fn best_match_keeps_word_already_in_lexicon() {
        let lex = Lexicon::from_words(LexiconMode::Weak, ["HELLO", "WORLD"], &policy());
        let got = best_match("WORLD", None, &lex, &ImageId::new("img"), 0.0).unwrap();
        assert_eq!(got.as_deref(), Some("WORLD"));
    }

    #[test]
    fn zero_threshold_rejects_out_of_lexicon_words() {
        let lex = Lexicon::from_words(LexiconMode::Generic, ["HELLO"], &policy());
        let got = best_match("HELLOX", None, &lex, &ImageId::new("img"), 0.0).unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn strong_mode_always_substitutes_and_requires_image() {
        let lex = Lexicon::from_words(LexiconMode::Strong, Vec::<&str>::new(), &policy())
            .with_image_words("img", ["ALPHA"], &policy());
        let got = best_match("ZZZZZZZZZ", None, &lex, &ImageId::new("img"), 0.0).unwrap();
        assert_eq!(got.as_deref(), Some("ALPHA"));

        assert!(matches!(
            best_match("X", None, &lex, &ImageId::new("unknown"), 0.0),
            Err(Error::MissingImageLexicon { .. })
        ));
    }

    #[test]
    fn mode_none_is_an_error() {
        let lex = Lexicon::from_words(LexiconMode::None, ["A"], &policy());
        assert!(matches!(
            best_match("A", None, &lex, &ImageId::new("img"), 0.5),
            Err(Error::LexiconModeNone)
        ));
    }

    #[test]
    fn length_window_prunes_far_lengths() {
        let lex = Lexicon::from_words(LexiconMode::Generic, ["A", "ABCDEFGHIJKL"], &policy());
        // Both words are outside the +/-4 window of a 7-char prediction,
        // so nothing qualifies.
        let got = best_match("ABCDEFG", None, &lex, &ImageId::new("img"), 10.0).unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn adding_a_word_never_increases_min_cost() {
        let image = ImageId::new("img");
        let small = Lexicon::from_words(LexiconMode::Weak, ["HOUSE"], &policy());
        let bigger = Lexicon::from_words(LexiconMode::Weak, ["HOUSE", "HORSE"], &policy());
        let cost = |lex: &Lexicon| {
            let word = best_match("HORSA", None, lex, &image, 1.0).unwrap().unwrap();
            edit_distance("HORSA", &word)
        };
        assert!(cost(&bigger) <= cost(&small));
    }
}
