//! Display-time anonymization of URL-, email- and phone-shaped tokens.

use std::borrow::Cow;

/// Masks a token if it looks like a URL, an email address or a phone
/// number. URLs and emails keep their top-level domain (`***.com`).
pub fn redact(token: &str) -> Cow<'_, str> {
    if is_url(token) || is_email(token) {
        return Cow::Owned(match top_level_domain(token) {
            Some(tld) => format!("***.{tld}"),
            None => "***".to_string(),
        });
    }
    if is_phone(token) {
        return Cow::Borrowed("***");
    }
    Cow::Borrowed(token)
}

fn is_url(t: &str) -> bool {
    let lower = t.to_ascii_lowercase();
    lower.contains("://") || lower.starts_with("www.")
}

fn is_email(t: &str) -> bool {
    match t.split_once('@') {
        Some((user, host)) => {
            !user.is_empty() && host.contains('.') && !host.starts_with('.') && !host.ends_with('.')
        }
        None => false,
    }
}

/// At least ten digits, only phone punctuation, and some separator or a
/// leading `+` (plain long numbers stay visible).
fn is_phone(t: &str) -> bool {
    let digits = t.chars().filter(char::is_ascii_digit).count();
    let allowed = t
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | '(' | ')' | ' '));
    let separated = t.starts_with('+') || t.chars().any(|c| matches!(c, '-' | '.' | '(' | ')' | ' '));
    allowed && separated && digits >= 10
}

fn top_level_domain(t: &str) -> Option<&str> {
    let host = match t.split_once("://") {
        Some((_, rest)) => rest,
        None => t.rsplit_once('@').map(|(_, h)| h).unwrap_or(t),
    };
    let host = host.split(['/', '?', '#', ':']).next().unwrap_or(host);
    let tld = host.rsplit_once('.')?.1;
    (!tld.is_empty() && tld.chars().all(|c| c.is_ascii_alphabetic())).then_some(tld)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_sensitive_shapes() {
        assert_eq!(redact("http://x.org"), "***.org");
        assert_eq!(redact("https://example.com/path?q=1"), "***.com");
        assert_eq!(redact("www.site.net"), "***.net");
        assert_eq!(redact("someone@mail.co.uk"), "***.uk");
        assert_eq!(redact("555-123-4567"), "***");
        assert_eq!(redact("+44 20 7946 0958"), "***");
    }

    #[test]
    fn leaves_ordinary_tokens() {
        for t in ["paris", "1977-2010", "24-14", ".301", "f.c.", "@", "9-for-13", "1234567890"] {
            assert_eq!(redact(t), t);
        }
    }
}
