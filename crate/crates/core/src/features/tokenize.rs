/// Lowercased alphanumeric runs of at least two characters, in order.
///
/// Everything that is not alphanumeric separates tokens, so `"don't"` yields
/// `["don"]` and single letters disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| run.chars().count() >= 2)
        .map(|run| run.to_lowercase())
        .collect()
}
