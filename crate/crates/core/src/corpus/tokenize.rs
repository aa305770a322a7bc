use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use crate::{Error, Result};

pub const URL_TOKEN: &str = "<url>";
pub const MENTION_TOKEN: &str = "<mention>";

pub trait Tokenizer: Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Whitespace tokenizer with punctuation stripping and URL/mention sentinels.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnicodeTokenizer;

impl Tokenizer for UnicodeTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize_default(text)
    }
}

/// Splits on Unicode whitespace, strips leading and trailing punctuation,
/// lowercases, and collapses URLs to `<url>` and `@name` mentions to
/// `<mention>`. Empty tokens are dropped.
pub fn tokenize_default(text: &str) -> Vec<String> {
    text.split_whitespace().filter_map(normalize_token).collect()
}

fn normalize_token(raw: &str) -> Option<String> {
    let core = raw
        .trim_start_matches(|c: char| is_punctuation(c) && c != '@')
        .trim_end_matches(is_punctuation);
    let lower = core.to_ascii_lowercase();
    if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
        return Some(URL_TOKEN.to_string());
    }
    if let Some(name) = core.strip_prefix('@') {
        if !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Some(MENTION_TOKEN.to_string());
        }
    }
    let stripped = raw.trim_matches(is_punctuation);
    if stripped.is_empty() {
        None
    } else {
        Some(stripped.to_lowercase())
    }
}

/// ASCII punctuation plus the common Unicode punctuation blocks
/// (Latin-1, General Punctuation, CJK, fullwidth forms).
fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}'
            | '\u{3014}'..='\u{301F}'
            | '\u{30FB}'
            | '\u{FF01}'..='\u{FF0F}'
            | '\u{FF1A}'..='\u{FF20}'
            | '\u{FF3B}'..='\u{FF40}'
            | '\u{FF5B}'..='\u{FF65}')
}

/// Tokenizer backed by an external program run through `sh -c`.
///
/// The program receives one text per line on stdin (embedded newlines are
/// replaced by spaces) and must print one line of space-separated tokens per
/// input line, in order.
#[derive(Debug, Clone)]
pub struct ExternalTokenizer {
    command: String,
}

impl ExternalTokenizer {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalTokenizer {
            command: command.into(),
        }
    }

    pub fn tokenize_batch(&self, texts: &[&str]) -> Result<Vec<Vec<String>>> {
        let runtime = |msg: String| Error::Runtime(format!("tokenizer command '{}': {msg}", self.command));
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| runtime(e.to_string()))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let input: String = texts
            .iter()
            .map(|t| {
                let mut line = t.replace(['\n', '\r'], " ");
                line.push('\n');
                line
            })
            .collect();
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));

        let stdout = child.stdout.take().expect("piped stdout");
        let mut out = Vec::with_capacity(texts.len());
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(|e| runtime(e.to_string()))?;
            out.push(line.split_whitespace().map(str::to_string).collect());
        }
        writer
            .join()
            .map_err(|_| runtime("stdin writer panicked".into()))?
            .map_err(|e| runtime(e.to_string()))?;
        let status = child.wait().map_err(|e| runtime(e.to_string()))?;
        if !status.success() {
            return Err(runtime(format!("exited with {status}")));
        }
        if out.len() != texts.len() {
            return Err(runtime(format!(
                "produced {} lines for {} inputs",
                out.len(),
                texts.len()
            )));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize_default("").is_empty());
        assert!(tokenize_default("   \t\n").is_empty());
    }

    #[test]
    fn strips_punctuation_and_lowercases() {
        assert_eq!(tokenize_default("Hello, World!"), ["hello", "world"]);
        assert_eq!(tokenize_default("don't (stop)"), ["don't", "stop"]);
        assert_eq!(tokenize_default("... !!"), Vec::<String>::new());
    }

    #[test]
    fn collapses_urls_and_mentions() {
        assert_eq!(tokenize_default("see https://x.example now"), ["see", "<url>", "now"]);
        assert_eq!(
            tokenize_default("(http://a.b/c?d=1), www.foo.org @Bob: hi"),
            ["<url>", "<url>", "<mention>", "hi"]
        );
        // a bare @ is punctuation, not a mention
        assert_eq!(tokenize_default("a @ b"), ["a", "b"]);
    }

    #[test]
    fn leaves_uncased_scripts_alone() {
        assert_eq!(tokenize_default("今日は 晴れ。"), ["今日は", "晴れ"]);
        assert_eq!(tokenize_default("「東京」"), ["東京"]);
        assert_eq!(tokenize_default("ÉCOLE Straße"), ["école", "straße"]);
    }

    #[test]
    fn matches_whitespace_split_on_plain_words() {
        let text = "a b c d";
        let oracle: Vec<&str> = text.split(' ').collect();
        assert_eq!(tokenize_default(text), oracle);
    }

    #[test]
    fn external_command_round_trip() {
        let tok = ExternalTokenizer::new("cat");
        let out = tok.tokenize_batch(&["a b", "c\nd e", ""]).unwrap();
        assert_eq!(out, vec![vec!["a", "b"], vec!["c", "d", "e"], vec![]]);
        assert!(ExternalTokenizer::new("exit 3").tokenize_batch(&["x"]).is_err());
    }

    proptest! {
        #[test]
        fn tokens_are_nonempty_and_whitespace_free(text in "\\PC{0,80}") {
            for token in tokenize_default(&text) {
                prop_assert!(!token.is_empty());
                prop_assert!(!token.chars().any(char::is_whitespace));
            }
        }
    }
}
