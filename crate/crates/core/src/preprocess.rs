//! Tweet cleaning: URL removal and user-mention replacement.

use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::{Dataset, LabeledExample};
use crate::error::{Error, Result};

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S*").expect("url pattern"));
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("mention pattern"));

pub const DEFAULT_PLACEHOLDER: &str = "$MENTION$";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessPolicy {
    remove_urls: bool,
    replace_mentions: bool,
    placeholder: String,
}

impl Default for PreprocessPolicy {
    fn default() -> Self {
        Self {
            remove_urls: true,
            replace_mentions: true,
            placeholder: DEFAULT_PLACEHOLDER.to_owned(),
        }
    }
}

impl PreprocessPolicy {
    /// The placeholder must be non-empty (when used) and must not itself
    /// contain a URL or a mention, otherwise cleaning would not be idempotent.
    pub fn new(
        remove_urls: bool,
        replace_mentions: bool,
        placeholder: impl Into<String>,
    ) -> Result<Self> {
        let placeholder = placeholder.into();
        if replace_mentions {
            if placeholder.is_empty() {
                return Err(Error::Config("mention placeholder is empty".into()));
            }
            if URL.is_match(&placeholder) || MENTION.is_match(&placeholder) {
                return Err(Error::Config(format!(
                    "mention placeholder `{placeholder}` matches a cleaning pattern"
                )));
            }
        }
        Ok(Self {
            remove_urls,
            replace_mentions,
            placeholder,
        })
    }

    /// Pass-through policy used for raw-input corpora such as Marathi.
    pub fn raw() -> Self {
        Self {
            remove_urls: false,
            replace_mentions: false,
            placeholder: DEFAULT_PLACEHOLDER.to_owned(),
        }
    }

    pub fn remove_urls(&self) -> bool {
        self.remove_urls
    }

    pub fn replace_mentions(&self) -> bool {
        self.replace_mentions
    }

    pub fn placeholder(&self) -> &str {
        &self.placeholder
    }
}

/// Applies the policy. Text on which no rule fires is returned untouched;
/// otherwise each URL deletion leaves a single space and the result is
/// trimmed.
pub fn clean(text: &str, policy: &PreprocessPolicy) -> String {
    let url_hit = policy.remove_urls && URL.is_match(text);
    let mention_hit = policy.replace_mentions && MENTION.is_match(text);
    if !url_hit && !mention_hit {
        return text.to_owned();
    }
    let mut out = if url_hit {
        remove_urls(text)
    } else {
        text.to_owned()
    };
    if mention_hit {
        out = MENTION
            .replace_all(&out, regex::NoExpand(&policy.placeholder))
            .into_owned();
    }
    out.trim().to_owned()
}

fn remove_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest_start = 0;
    for m in URL.find_iter(text) {
        out.push_str(&text[rest_start..m.start()]);
        rest_start = m.end();
        // Collapse the whitespace on both sides of the hole into one space.
        let trimmed_len = out.trim_end().len();
        out.truncate(trimmed_len);
        let after = &text[rest_start..];
        rest_start += after.len() - after.trim_start().len();
        if !out.is_empty() && rest_start < text.len() {
            out.push(' ');
        }
    }
    out.push_str(&text[rest_start..]);
    out
}

/// Cleans every text; ids, labels and order are preserved.
pub fn clean_dataset(d: &Dataset, policy: &PreprocessPolicy) -> Dataset {
    let examples = d
        .iter()
        .map(|e| LabeledExample {
            text: clean(&e.text, policy),
            ..e.clone()
        })
        .collect();
    Dataset::new(examples, d.source(), d.split()).expect("ids unchanged, still unique")
}

/// True when `text` still contains something the URL rule would remove.
pub fn has_url(text: &str) -> bool {
    URL.is_match(text)
}

/// True when `text` still contains a raw user mention.
pub fn has_mention(text: &str) -> bool {
    MENTION.is_match(text)
}
