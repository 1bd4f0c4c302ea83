//! Cloze construction from first-person policy sentences.
//!
//! A first-person pronoun (`we`, `our`, `I`) followed within two words by a
//! verb, auxiliary or adverb marks an opinion-bearing phrase. The phrase
//! starts at that word and runs through further auxiliaries and adverbs up
//! to and including the first main verb. Each phrase is replaced by
//! [`BLANK`]; the untouched sentence is the answer.
//!
//! The default [`LexiconTagger`] works from fixed word lists:
//!
//! * auxiliaries: forms of be/have/do, modals and their negated contractions;
//! * adverbs: a short list plus any word ending in `-ly` that is not on the
//!   `-ly` exception list (family, supply, ...);
//! * verbs: a list of base forms, matched after stripping `-s`, `-es`,
//!   `-ies`, `-ed`, `-ied`, `-ing` (with `e`-restoration and doubled final
//!   consonants), plus common irregular past forms;
//! * the word right after a determiner or possessive (`the`, `a`, `our`,
//!   ...) is read as a noun unless it is an adverb.

use super::PromptError;

pub const BLANK: &str = "____";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    FirstPerson,
    Verb,
    Auxiliary,
    Adverb,
    Other,
}

/// Tags a sentence given as words with surrounding punctuation removed.
pub trait PosTagger: Sync {
    fn tag(&self, words: &[&str]) -> Result<Vec<Tag>, PromptError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconTagger;

const FIRST_PERSON: &[&str] = &["we", "our", "i"];

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "our", "my", "your", "their", "his", "her", "its", "this", "these", "those",
    "every", "each",
];

const AUXILIARIES: &[&str] = &[
    "am",
    "are",
    "is",
    "was",
    "were",
    "be",
    "been",
    "being",
    "have",
    "has",
    "had",
    "do",
    "does",
    "did",
    "will",
    "would",
    "shall",
    "should",
    "can",
    "could",
    "may",
    "might",
    "must",
    "cannot",
    "don't",
    "doesn't",
    "didn't",
    "won't",
    "wouldn't",
    "can't",
    "couldn't",
    "shouldn't",
    "haven't",
    "hasn't",
    "aren't",
    "isn't",
    "we'll",
    "we're",
    "we've",
];

const ADVERBS: &[&str] = &[
    "not", "never", "always", "also", "still", "already", "often", "once", "again", "together",
    "just", "even", "now", "soon", "ever", "further", "first", "best", "well",
];

const LY_NOUNS: &[&str] = &[
    "family", "supply", "apply", "reply", "rely", "ally", "rally", "italy", "july", "assembly",
    "holy", "ugly", "early", "only", "lonely", "friendly", "likely", "costly", "elderly",
    "monopoly", "anomaly", "belly", "jelly", "bully", "fly", "comply", "multiply", "imply",
];

const VERBS: &[&str] = &[
    "achieve",
    "address",
    "advance",
    "affirm",
    "agree",
    "aim",
    "allow",
    "amend",
    "applaud",
    "apply",
    "approve",
    "back",
    "believe",
    "bring",
    "build",
    "call",
    "care",
    "celebrate",
    "champion",
    "change",
    "choose",
    "combat",
    "comply",
    "commit",
    "condemn",
    "confront",
    "continue",
    "create",
    "cut",
    "defend",
    "deliver",
    "demand",
    "deny",
    "deserve",
    "eliminate",
    "embrace",
    "empower",
    "encourage",
    "end",
    "endorse",
    "enforce",
    "ensure",
    "establish",
    "expand",
    "expect",
    "favor",
    "favour",
    "fight",
    "find",
    "fix",
    "fund",
    "get",
    "give",
    "grow",
    "guarantee",
    "help",
    "hold",
    "honor",
    "hope",
    "improve",
    "increase",
    "insist",
    "intend",
    "invest",
    "keep",
    "know",
    "lead",
    "learn",
    "lower",
    "maintain",
    "make",
    "modernize",
    "need",
    "oppose",
    "pass",
    "pay",
    "pledge",
    "preserve",
    "prevent",
    "prioritize",
    "promise",
    "promote",
    "propose",
    "protect",
    "provide",
    "pursue",
    "raise",
    "rebuild",
    "recognize",
    "reaffirm",
    "reduce",
    "reform",
    "reject",
    "rely",
    "remain",
    "remember",
    "repeal",
    "replace",
    "require",
    "respect",
    "restore",
    "return",
    "safeguard",
    "say",
    "secure",
    "see",
    "seek",
    "serve",
    "share",
    "stand",
    "stop",
    "strengthen",
    "strive",
    "support",
    "take",
    "think",
    "trust",
    "understand",
    "uphold",
    "urge",
    "value",
    "want",
    "welcome",
    "win",
    "work",
];

const IRREGULAR: &[&str] = &[
    "built",
    "brought",
    "chose",
    "chosen",
    "fought",
    "found",
    "gave",
    "given",
    "got",
    "grew",
    "grown",
    "held",
    "kept",
    "knew",
    "known",
    "led",
    "made",
    "paid",
    "said",
    "saw",
    "seen",
    "sought",
    "stood",
    "strove",
    "taken",
    "took",
    "thought",
    "understood",
    "won",
];

fn is_adverb(w: &str) -> bool {
    ADVERBS.contains(&w) || (w.len() >= 5 && w.ends_with("ly") && !LY_NOUNS.contains(&w))
}

fn is_verb(w: &str) -> bool {
    if VERBS.contains(&w) || IRREGULAR.contains(&w) {
        return true;
    }
    let mut stems: Vec<String> = Vec::new();
    for (suffix, repl) in [
        ("ies", "y"),
        ("ied", "y"),
        ("es", ""),
        ("s", ""),
        ("ed", ""),
        ("d", ""),
        ("ing", ""),
        ("ing", "e"),
    ] {
        if let Some(stem) = w.strip_suffix(suffix) {
            if stem.len() >= 2 {
                stems.push(format!("{stem}{repl}"));
                let b = stem.as_bytes();
                if (suffix == "ed" || suffix == "ing")
                    && b.len() >= 3
                    && b[b.len() - 1] == b[b.len() - 2]
                {
                    stems.push(stem[..stem.len() - 1].to_string());
                }
            }
        }
    }
    stems.iter().any(|s| VERBS.contains(&s.as_str()))
}

impl PosTagger for LexiconTagger {
    fn tag(&self, words: &[&str]) -> Result<Vec<Tag>, PromptError> {
        let lower: Vec<String> = words
            .iter()
            .map(|w| w.to_lowercase().replace('\u{2019}', "'"))
            .collect();
        Ok(lower
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let w = w.as_str();
                let after_det = i > 0 && DETERMINERS.contains(&lower[i - 1].as_str());
                if FIRST_PERSON.contains(&w) {
                    Tag::FirstPerson
                } else if is_adverb(w) {
                    Tag::Adverb
                } else if after_det {
                    Tag::Other
                } else if AUXILIARIES.contains(&w) {
                    Tag::Auxiliary
                } else if is_verb(w) {
                    Tag::Verb
                } else {
                    Tag::Other
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cloze {
    pub cloze: String,
    /// The original sentence.
    pub answer: String,
    /// Removed phrases, in sentence order.
    pub blanks: Vec<String>,
}

struct Word {
    /// Byte range of the word without surrounding punctuation.
    start: usize,
    end: usize,
    /// Punctuation directly after the word.
    closes: bool,
}

fn split_words(s: &str) -> Vec<Word> {
    let mut words = Vec::new();
    let mut offset = 0;
    for token in s.split_inclusive(char::is_whitespace) {
        let raw = token.trim_end();
        let lead = raw.len() - raw.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
        let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if !core.is_empty() {
            words.push(Word {
                start: offset + lead,
                end: offset + lead + core.len(),
                closes: lead + core.len() < raw.len(),
            });
        }
        offset += token.len();
    }
    words
}

/// Builds the cloze with the given tagger. Sentences containing an
/// underscore yield `None`.
pub fn cloze_with<T: PosTagger + ?Sized>(
    sentence: &str,
    tagger: &T,
) -> Result<Option<Cloze>, PromptError> {
    if sentence.trim().is_empty() || sentence.contains('_') {
        return Ok(None);
    }
    let words = split_words(sentence);
    let cores: Vec<&str> = words.iter().map(|w| &sentence[w.start..w.end]).collect();
    let tags = tagger.tag(&cores)?;
    if tags.len() != cores.len() {
        return Err(PromptError::TaggerUnavailable(format!(
            "tagger returned {} tags for {} words",
            tags.len(),
            cores.len()
        )));
    }
    let opens = |t: Tag| matches!(t, Tag::Verb | Tag::Auxiliary | Tag::Adverb);
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for i in 0..words.len() {
        if tags[i] != Tag::FirstPerson || words[i].closes {
            continue;
        }
        let Some(start) = (i + 1..words.len().min(i + 3)).find(|&j| opens(tags[j])) else {
            continue;
        };
        if spans.last().is_some_and(|&(_, e)| start <= e) {
            continue;
        }
        let mut end = start;
        while tags[end] != Tag::Verb
            && !words[end].closes
            && end + 1 < words.len()
            && opens(tags[end + 1])
        {
            end += 1;
        }
        spans.push((start, end));
    }
    if spans.is_empty() {
        return Ok(None);
    }
    let mut cloze = String::with_capacity(sentence.len());
    let mut blanks = Vec::with_capacity(spans.len());
    let mut at = 0;
    for (s, e) in spans {
        let (a, b) = (words[s].start, words[e].end);
        cloze.push_str(&sentence[at..a]);
        cloze.push_str(BLANK);
        blanks.push(sentence[a..b].to_string());
        at = b;
    }
    cloze.push_str(&sentence[at..]);
    Ok(Some(Cloze {
        cloze,
        answer: sentence.to_string(),
        blanks,
    }))
}

/// Cloze under the default lexicon tagger.
pub fn cloze_from_sentence(sentence: &str) -> Option<Cloze> {
    cloze_with(sentence, &LexiconTagger).expect("lexicon tagger is infallible")
}

/// Puts the phrases back into the blanks. `None` if the counts differ.
pub fn fill_cloze(cloze: &str, blanks: &[String]) -> Option<String> {
    let parts: Vec<&str> = cloze.split(BLANK).collect();
    if parts.len() != blanks.len() + 1 {
        return None;
    }
    let mut out = parts[0].to_string();
    for (b, p) in blanks.iter().zip(&parts[1..]) {
        out.push_str(b);
        out.push_str(p);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blanked(s: &str) -> Option<(String, Vec<String>)> {
        cloze_from_sentence(s).map(|c| (c.cloze, c.blanks))
    }

    #[test]
    fn possessive_then_verb() {
        let (c, b) = blanked("Our plan protects families").unwrap();
        assert_eq!(c, "Our plan ____ families");
        assert_eq!(b, ["protects"]);
    }

    #[test]
    fn appendix_sentence() {
        let s = "We support amending the Antiquities Act of 1906 to establish Congress' right to approve the designation of national monuments.";
        let c = cloze_from_sentence(s).unwrap();
        assert!(c
            .cloze
            .starts_with("We ____ amending the Antiquities Act of 1906 to establish Congress"));
        assert_eq!(c.blanks, ["support"]);
        assert_eq!(c.answer, s);
    }

    #[test]
    fn auxiliary_and_adverb_runs() {
        assert_eq!(
            blanked("We will strongly oppose new taxes.").unwrap().0,
            "We ____ new taxes."
        );
        assert_eq!(
            blanked("We will strongly oppose new taxes.").unwrap().1,
            ["will strongly oppose"]
        );
        // punctuation closes the phrase
        assert_eq!(
            blanked("We firmly, always defend it").unwrap().1,
            ["firmly"]
        );
        // window of two words after the pronoun
        assert_eq!(blanked("We in Congress fully support it"), None);
        assert_eq!(blanked("I, for one, support it"), None);
    }

    #[test]
    fn every_match_is_blanked() {
        let (c, b) = blanked("We believe in jobs and our party fights for them.").unwrap();
        assert_eq!(c, "We ____ in jobs and our party ____ for them.");
        assert_eq!(b, ["believe", "fights"]);
    }

    #[test]
    fn skipped_sentences() {
        assert_eq!(blanked("The economy grew last year."), None);
        assert_eq!(blanked("We ____ this."), None);
        assert_eq!(blanked("Our nation and our people"), None);
        assert_eq!(blanked(""), None);
    }

    #[test]
    fn lexicon_inflections() {
        for w in [
            "protects",
            "supported",
            "stopping",
            "approves",
            "defending",
            "rallies",
            "fought",
            "carries",
        ] {
            let expect = w != "rallies" && w != "carries";
            assert_eq!(is_verb(w), expect, "{w}");
        }
        assert!(is_adverb("strongly"));
        assert!(!is_adverb("family"));
    }

    struct Broken;
    impl PosTagger for Broken {
        fn tag(&self, _: &[&str]) -> Result<Vec<Tag>, PromptError> {
            Err(PromptError::TaggerUnavailable("offline".into()))
        }
    }

    #[test]
    fn tagger_failure_surfaces() {
        assert_eq!(
            cloze_with("We support it", &Broken),
            Err(PromptError::TaggerUnavailable("offline".into()))
        );
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "we", "We", "our", "I", "will", "strongly", "support", "protects", "the", "plan",
            "families", "not", "jobs", "fought", "continue", "and", "for", "taxes", "always",
            "have", "\"free\"", "(new)", "x-ray", "don't", "—", "1906",
        ])
        .prop_map(String::from)
    }

    proptest! {
        #[test]
        fn fill_restores_sentence(words in prop::collection::vec((word(), prop::sample::select(vec!["", ",", ".", ";", "!"])), 1..14),
                                  sep in prop::sample::select(vec![" ", "  ", "\t"])) {
            let s = words.iter().map(|(w, p)| format!("{w}{p}")).collect::<Vec<_>>().join(sep);
            if let Some(c) = cloze_from_sentence(&s) {
                prop_assert_eq!(fill_cloze(&c.cloze, &c.blanks), Some(s.clone()));
                prop_assert_eq!(c.cloze.matches(BLANK).count(), c.blanks.len());
                prop_assert_eq!(&c.answer, &s);
            }
        }
    }
}
