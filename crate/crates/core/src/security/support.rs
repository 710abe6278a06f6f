use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::redirect::Policy;

use crate::qc::{ids, CheckResult};

pub const DEFAULT_SUPPORT_TIMEOUT: Duration = Duration::from_secs(30);

pub fn check_support_channel(url: Option<&str>) -> CheckResult {
    check_support_channel_with_timeout(url, DEFAULT_SUPPORT_TIMEOUT)
}

/// QC_SUPPORT_1: a GET on the tracker URL must answer 2xx or 3xx. Redirects
/// are not followed; a redirect already proves the tracker answers.
pub fn check_support_channel_with_timeout(url: Option<&str>, timeout: Duration) -> CheckResult {
    let Some(url) = url else {
        return CheckResult::not_applicable(ids::QC_SUPPORT_1, "no support URL configured");
    };
    let started = Instant::now();
    let result = match url::Url::parse(url) {
        Err(e) => CheckResult::fail(ids::QC_SUPPORT_1, format!("invalid URL {url}: {e}")),
        Ok(parsed) if !matches!(parsed.scheme(), "http" | "https") => {
            CheckResult::fail(ids::QC_SUPPORT_1, format!("unsupported scheme in {url}"))
        }
        Ok(_) => {
            let client = Client::builder().redirect(Policy::none()).timeout(timeout).build();
            match client.map(|c| c.get(url).send()) {
                Err(e) => CheckResult::fail(ids::QC_SUPPORT_1, format!("HTTP client: {e}")),
                Ok(Err(e)) => CheckResult::fail(ids::QC_SUPPORT_1, format!("{url}: {}", error_chain(&e))),
                Ok(Ok(resp)) => {
                    let status = resp.status();
                    let detail = format!("{url}: status {}", status.as_u16());
                    if status.is_success() || status.is_redirection() {
                        CheckResult::ok(ids::QC_SUPPORT_1, detail)
                    } else {
                        CheckResult::fail(ids::QC_SUPPORT_1, detail)
                    }
                }
            }
        }
    };
    result.with_duration(started.elapsed().as_secs_f64())
}

fn error_chain(err: &dyn std::error::Error) -> String {
    let mut parts = vec![err.to_string()];
    let mut source = err.source();
    while let Some(e) = source {
        parts.push(e.to_string());
        source = e.source();
    }
    parts.join(": ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qc::CheckStatus;

    #[test]
    fn unset_url_is_not_applicable() {
        assert_eq!(check_support_channel(None).status, CheckStatus::NotApplicable);
    }

    #[test]
    fn malformed_url_fails() {
        let r = check_support_channel(Some("not a url"));
        assert_eq!(r.status, CheckStatus::Fail);
        let r = check_support_channel(Some("ftp://example.org/"));
        assert_eq!(r.status, CheckStatus::Fail);
    }
}
