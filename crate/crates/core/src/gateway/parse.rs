//! Strict parsers for model completions.
//!
//! Every parser either returns a value that is actually present in the text
//! or fails. Nothing defaults.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no allowed choice in {0:?}")]
    UnparseableChoice(String),
    #[error("no bracketed items found")]
    NoItemsFound,
    #[error("expected a 0/1 digit in {0:?}")]
    UnparseableDigit(String),
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Single characters in `text` that stand alone, i.e. are not part of a word.
fn standalone_chars(text: &str) -> impl Iterator<Item = char> + '_ {
    let chars: Vec<char> = text.chars().collect();
    (0..chars.len()).filter_map(move |i| {
        let c = chars[i];
        let before_ok = i == 0 || !is_word(chars[i - 1]);
        let after_ok = i + 1 == chars.len() || !is_word(chars[i + 1]);
        (before_ok && after_ok).then_some(c)
    })
}

/// Find the first standalone option letter from `allowed`.
///
/// Accepts `"B"`, `"b"`, `"A."`, `" a. Yes"`, `"Answer: (C)"`. An
/// uppercase match anywhere wins over a lowercase one, so an English article
/// "a" in a rationale does not shadow a later "B".
pub fn parse_letter_choice(text: &str, allowed: &[char]) -> Result<char, ParseError> {
    let allowed: Vec<char> = allowed.iter().map(|c| c.to_ascii_uppercase()).collect();
    if let Some(c) = standalone_chars(text).find(|c| allowed.contains(c)) {
        return Ok(c);
    }
    standalone_chars(text)
        .map(|c| c.to_ascii_uppercase())
        .find(|c| allowed.contains(c))
        .ok_or_else(|| ParseError::UnparseableChoice(text.to_string()))
}

/// Extract the contents of every `<...>` pair, in order.
///
/// With a separator, text without any bracket pair is split on it instead and
/// each piece stripped of stray brackets. Items never contain `<` or `>`.
pub fn parse_bracketed(text: &str, separator: Option<&str>) -> Result<Vec<String>, ParseError> {
    let mut items = Vec::new();
    let mut open: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match c {
            '<' => open = Some(i + 1),
            '>' => {
                if let Some(start) = open.take() {
                    let item = text[start..i].trim();
                    if !item.is_empty() {
                        items.push(item.to_string());
                    }
                }
            }
            _ => {}
        }
    }
    if items.is_empty() {
        if let Some(sep) = separator.filter(|s| !s.is_empty() && text.contains(*s)) {
            items = text
                .split(sep)
                .map(|piece| piece.replace(['<', '>'], "").trim().to_string())
                .filter(|piece| !piece.is_empty())
                .collect();
        }
    }
    if items.is_empty() {
        Err(ParseError::NoItemsFound)
    } else {
        Ok(items)
    }
}

/// Parse a binary rating: the first standalone digit, which must be 0 or 1.
pub fn parse_binary_digit(text: &str) -> Result<bool, ParseError> {
    match standalone_chars(text).find(char::is_ascii_digit) {
        Some('0') => Ok(false),
        Some('1') => Ok(true),
        _ => Err(ParseError::UnparseableDigit(text.to_string())),
    }
}

/// Split a chain-of-thought completion into reasoning and its final letter.
///
/// The letter is read after the last `Answer:` marker, or from the last
/// non-empty line when no marker is present. Reasoning is everything before.
pub fn parse_reasoned_choice(text: &str, allowed: &[char]) -> Result<(String, char), ParseError> {
    let lower = text.to_lowercase();
    if let Some(pos) = lower.rfind("answer:") {
        let letter = parse_letter_choice(&text[pos + "answer:".len()..], allowed)?;
        return Ok((text[..pos].trim().to_string(), letter));
    }
    let trimmed = text.trim_end();
    let (head, last) = match trimmed.rfind('\n') {
        Some(nl) => (&trimmed[..nl], &trimmed[nl + 1..]),
        None => ("", trimmed),
    };
    let letter = parse_letter_choice(last, allowed)?;
    Ok((head.trim().to_string(), letter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const AB: [char; 2] = ['A', 'B'];

    #[test]
    fn letter_choice_examples() {
        assert_eq!(parse_letter_choice("B", &AB), Ok('B'));
        assert_eq!(parse_letter_choice(" a. Yes", &AB), Ok('A'));
        assert_eq!(
            parse_letter_choice("Yes", &AB),
            Err(ParseError::UnparseableChoice("Yes".into()))
        );
        assert!(parse_letter_choice("", &AB).is_err());
        assert!(parse_letter_choice("maybe", &AB).is_err());
        assert_eq!(parse_letter_choice("(C)", &['A', 'B', 'C']), Ok('C'));
        assert!(parse_letter_choice("E", &['A', 'B', 'C']).is_err());
        assert_eq!(
            parse_letter_choice("I think a careful reading gives B.", &AB),
            Ok('B')
        );
    }

    #[test]
    fn bracketed_examples() {
        assert_eq!(
            parse_bracketed("rationale... <q1> <q2>", None).unwrap(),
            vec!["q1", "q2"]
        );
        assert_eq!(parse_bracketed("<a>||<b>", Some("||")).unwrap(), vec!["a", "b"]);
        assert_eq!(parse_bracketed("a || b", Some("||")).unwrap(), vec!["a", "b"]);
        assert_eq!(
            parse_bracketed("no brackets here", None),
            Err(ParseError::NoItemsFound)
        );
        assert_eq!(parse_bracketed("<>  < >", None), Err(ParseError::NoItemsFound));
        assert_eq!(parse_bracketed("<<x>", None).unwrap(), vec!["x"]);
    }

    #[test]
    fn digits() {
        assert_eq!(parse_binary_digit("1"), Ok(true));
        assert_eq!(parse_binary_digit(" 0\n"), Ok(false));
        assert!(matches!(
            parse_binary_digit("2"),
            Err(ParseError::UnparseableDigit(_))
        ));
        assert!(parse_binary_digit("10").is_err());
        assert!(parse_binary_digit("yes").is_err());
    }

    #[test]
    fn reasoned_choice() {
        let abc = ['A', 'B', 'C'];
        assert_eq!(
            parse_reasoned_choice("steps... Answer: A", &abc).unwrap(),
            ("steps...".to_string(), 'A')
        );
        let (reason, letter) = parse_reasoned_choice("Step 1.\nStep 2.\nB", &abc).unwrap();
        assert_eq!((reason.as_str(), letter), ("Step 1.\nStep 2.", 'B'));
        assert_eq!(
            parse_reasoned_choice("Answer: B", &abc).unwrap(),
            (String::new(), 'B')
        );
        assert!(parse_reasoned_choice("I refuse. Answer: maybe", &abc).is_err());
    }

    proptest! {
        #[test]
        fn bracketed_items_never_contain_delimiters(text in ".{0,80}") {
            if let Ok(items) = parse_bracketed(&text, Some("||")) {
                for item in items {
                    prop_assert!(!item.contains('<') && !item.contains('>'));
                }
            }
        }

        #[test]
        fn single_letter_token_always_parses(
            prefix in "[ \n\t.:(\\-]{0,4}",
            suffix in "[ \n\t.:)\\-]{0,4}",
            option_text in prop_oneof![Just(""), Just(" Yes"), Just(". No")],
            idx in 0usize..3,
            lower in any::<bool>(),
        ) {
            let allowed = ['A', 'B', 'C'];
            let letter = allowed[idx];
            let shown = if lower { letter.to_ascii_lowercase() } else { letter };
            let text = format!("{prefix}{shown}{suffix}{option_text}");
            prop_assert_eq!(parse_letter_choice(&text, &allowed), Ok(letter));
        }
    }
}
