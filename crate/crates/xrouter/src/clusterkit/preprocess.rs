//! Tokenization and normalization of prompt text.

/// Replacement token for purely numeric tokens.
pub const NUM_TOKEN: &str = "<num>";

/// Tokenize `text` into lowercased tokens.
///
/// Tokens are maximal runs of at least two alphanumeric characters. Tokens
/// found in `stopwords` (a sorted list) are dropped and tokens consisting
/// entirely of digits are replaced by [`NUM_TOKEN`]. The literal `<num>`
/// itself is recognized as a token, which makes the function idempotent on
/// its own output rendered back as text.
pub fn preprocess(text: &str, stopwords: &[&str]) -> Vec<String> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        // Pass the sentinel through unchanged so preprocess(render(preprocess(x))) = preprocess(x).
        if chars[i] == '<' && matches_num_token(&chars[i..]) {
            tokens.push(NUM_TOKEN.to_string());
            i += NUM_TOKEN.len();
            continue;
        }
        if chars[i].is_alphanumeric() {
            let start = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            if i - start >= 2 {
                let token: String = chars[start..i].iter().flat_map(|c| c.to_lowercase()).collect();
                if token.chars().all(|c| c.is_numeric()) {
                    tokens.push(NUM_TOKEN.to_string());
                } else if stopwords.binary_search(&token.as_str()).is_err() {
                    tokens.push(token);
                }
            }
        } else {
            i += 1;
        }
    }
    tokens
}

fn matches_num_token(rest: &[char]) -> bool {
    let lit: Vec<char> = NUM_TOKEN.chars().collect();
    rest.len() >= lit.len() && rest[..lit.len()] == lit[..]
}
