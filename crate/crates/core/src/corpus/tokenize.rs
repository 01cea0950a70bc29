//! Whitespace tokenizer and the CJK ingest filter.

/// Splits on whitespace and trims punctuation from token edges.
///
/// A leading `#` or `@` is kept so hashtags and mentions survive. Case is
/// preserved; hashtag matching lowercases on its own.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let token = trim_token(raw);
            (!token.is_empty()).then(|| token.to_string())
        })
        .collect()
}

fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2026}' | '\u{00A1}' | '\u{00BF}'
        )
}

fn trim_token(raw: &str) -> &str {
    let trimmed = raw.trim_end_matches(is_edge_punct);
    // leading punctuation goes, unless it is the sigil of a hashtag or mention
    let mut start = trimmed.len();
    for (i, c) in trimmed.char_indices() {
        if c == '#' || c == '@' || !is_edge_punct(c) {
            start = i;
            break;
        }
    }
    &trimmed[start..]
}

/// Returns `true` if the code point belongs to the Hiragana, Katakana or Han
/// script blocks.
pub fn is_cjk_char(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x309F          // Hiragana
        | 0x30A0..=0x30FF        // Katakana
        | 0x31F0..=0x31FF        // Katakana phonetic extensions
        | 0xFF65..=0xFF9F        // halfwidth Katakana
        | 0x1B000..=0x1B16F      // kana supplement / extended
        | 0x2E80..=0x2FDF        // CJK and Kangxi radicals
        | 0x3005 | 0x3007        // ideographic iteration mark, number zero
        | 0x3021..=0x3029        // Hangzhou numerals
        | 0x3038..=0x303B
        | 0x3400..=0x4DBF        // extension A
        | 0x4E00..=0x9FFF        // unified ideographs
        | 0xF900..=0xFAFF        // compatibility ideographs
        | 0x20000..=0x323AF      // extensions B..H and compatibility supplement
    )
}

/// Keep-predicate for ingestion: `false` iff the text contains any Katakana,
/// Hiragana or Han character.
pub fn filter_cjk(text: &str) -> bool {
    !text.chars().any(is_cjk_char)
}
