//! Orthographic pre-tokenisation.

/// Whitespace separates words; each punctuation mark is a word of its own;
/// a clitic marker starts a new word. Hyphens are ordinary word characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationRules {
    pub punctuation: Vec<char>,
    pub clitic_marker: Option<char>,
}

impl Default for SegmentationRules {
    fn default() -> Self {
        SegmentationRules {
            punctuation: ".,!?;:\"()[]{}".chars().collect(),
            clitic_marker: Some('\''),
        }
    }
}

impl SegmentationRules {
    fn is_punct(&self, c: char) -> bool {
        self.punctuation.contains(&c)
    }
}

pub fn pretokenise(text: &str, rules: &SegmentationRules) -> Vec<String> {
    let mut words = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if rules.is_punct(c) {
                if !current.is_empty() {
                    words.push(std::mem::take(&mut current));
                }
                words.push(c.to_string());
            } else if Some(c) == rules.clitic_marker {
                if !current.is_empty() {
                    words.push(std::mem::take(&mut current));
                }
                current.push(c);
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
    }
    words
}

/// Canonical text form: words joined by single spaces.
pub fn normalise(words: &[String]) -> String {
    words.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(s: &str) -> Vec<String> {
        pretokenise(s, &SegmentationRules::default())
    }

    #[test]
    fn question_with_clitic() {
        assert_eq!(
            seg("How do you compute a word's probability?"),
            ["How", "do", "you", "compute", "a", "word", "'s", "probability", "?"]
        );
    }

    #[test]
    fn empty_and_runs_of_spaces() {
        assert!(seg("").is_empty());
        assert!(seg("  \t\n").is_empty());
        assert_eq!(seg("a  b"), ["a", "b"]);
    }

    #[test]
    fn hyphenated_forms_stay_whole() {
        assert_eq!(seg("editor-in-chief."), ["editor-in-chief", "."]);
    }

    proptest! {
        #[test]
        fn normal_form_is_a_fixed_point(s in "[a-c' ?.,-]{0,30}") {
            let words = seg(&s);
            prop_assert_eq!(seg(&normalise(&words)), words.clone());
            prop_assert!(words.iter().all(|w| !w.is_empty() && !w.contains(' ')));
        }
    }
}
