//! Boolean keyword queries for harvesting posts about a topic.

use crate::error::{Error, Result};

/// Expands a topic's keywords into a disjunction of conjunctions.
///
/// With `n` keywords the query ORs together the conjunction of all `n`
/// keywords and every conjunction of `n - 1` of them. Clauses are ordered by
/// size, largest first, and within a size by the positions of their keywords
/// in the input. A single keyword is returned bare.
///
/// ```
/// let q = rumorflow::query::build_query(&["hillary", "destroy", "syria"]).unwrap();
/// assert_eq!(
///     q,
///     "((hillary AND destroy AND syria) OR (hillary AND destroy) OR (hillary AND syria) OR (destroy AND syria))"
/// );
/// ```
pub fn build_query<S: AsRef<str>>(keywords: &[S]) -> Result<String> {
    let words = normalize_keywords(keywords)?;
    let n = words.len();
    if n == 1 {
        return Ok(words[0].clone());
    }
    let mut clauses = vec![words.iter().map(String::as_str).collect::<Vec<_>>()];
    // Dropping keyword `skip` from the full set, for skip = n-1 down to 0,
    // yields the (n-1)-subsets in lexicographic order of positions.
    for skip in (0..n).rev() {
        clauses.push(
            words
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, w)| w.as_str())
                .collect(),
        );
    }
    let rendered: Vec<String> = clauses
        .iter()
        .map(|c| format!("({})", c.join(" AND ")))
        .collect();
    Ok(format!("({})", rendered.join(" OR ")))
}

/// Lowercases and trims keywords, dropping repeats after the first
/// occurrence.
pub fn normalize_keywords<S: AsRef<str>>(keywords: &[S]) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::with_capacity(keywords.len());
    for k in keywords {
        let k = k.as_ref().trim().to_lowercase();
        if k.is_empty() {
            return Err(Error::invalid("keywords", "blank keyword"));
        }
        if k.chars().any(char::is_whitespace) {
            return Err(Error::invalid(
                "keywords",
                format!("`{k}` contains whitespace"),
            ));
        }
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("keyword list"));
    }
    Ok(out)
}
