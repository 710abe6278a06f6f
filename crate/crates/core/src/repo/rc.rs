//! Release-candidate closure check over fetched repositories.

use std::fmt::Write as _;

use serde_json::json;

use super::closure::compute_closure;
use super::evr::Flavor;
use super::fetch::{fetch_repo_metadata_with, FetchOptions};
use super::package::{RepoIndex, UnmetDependency};
use super::RepoError;
use crate::qc::Verdict;

#[derive(Debug, Clone)]
pub struct RcSummary {
    pub flavor: Flavor,
    pub candidate: String,
    pub base: Vec<String>,
    pub unmet: Vec<UnmetDependency>,
    /// (repository, error) for every source that could not be read.
    pub fetch_errors: Vec<(String, String)>,
    pub verdict: Verdict,
}

impl RcSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "release-candidate check ({})", self.flavor);
        let _ = writeln!(out, "candidate: {}", self.candidate);
        for b in &self.base {
            let _ = writeln!(out, "base: {b}");
        }
        for (repo, err) in &self.fetch_errors {
            let _ = writeln!(out, "repository unavailable: {repo}: {err}");
        }
        for u in &self.unmet {
            let _ = writeln!(
                out,
                "unmet: {} requires {} (searched: {})",
                u.requiring,
                u.constraint,
                u.searched_repos.join(", ")
            );
        }
        let _ = writeln!(out, "unmet dependencies: {}", self.unmet.len());
        let _ = writeln!(out, "VERDICT: {}", self.verdict);
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "flavor": self.flavor.label(),
            "candidate": self.candidate,
            "base": self.base,
            "unmet": self.unmet.iter().map(|u| json!({
                "requiring": u.requiring.to_string(),
                "constraint": u.constraint.to_string(),
                "searched_repos": u.searched_repos,
            })).collect::<Vec<_>>(),
            "errors": self.fetch_errors.iter().map(|(r, e)| json!({
                "repository": r,
                "error": e,
            })).collect::<Vec<_>>(),
            "verdict": self.verdict.label(),
        })
    }
}

/// Fetches every source concurrently, preserving input order.
pub(crate) fn fetch_all(
    sources: &[String],
    flavor: Flavor,
    options: &FetchOptions,
) -> Vec<Result<RepoIndex, RepoError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = sources
            .iter()
            .map(|s| scope.spawn(move || fetch_repo_metadata_with(s, flavor, options)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("repository fetch thread panicked"))
            .collect()
    })
}

pub fn rc_check(candidate_url: &str, base_urls: &[String], flavor: Flavor) -> RcSummary {
    rc_check_with(candidate_url, base_urls, flavor, &FetchOptions::default())
}

/// Fails closed: any unreadable repository makes the verdict Fail without
/// computing a closure over the partial union.
pub fn rc_check_with(candidate_url: &str, base_urls: &[String], flavor: Flavor, options: &FetchOptions) -> RcSummary {
    let mut sources = vec![candidate_url.to_string()];
    sources.extend(base_urls.iter().cloned());
    let fetched = fetch_all(&sources, flavor, options);

    let mut indexes = Vec::new();
    let mut fetch_errors = Vec::new();
    for (source, result) in sources.iter().zip(fetched) {
        match result {
            Ok(index) => indexes.push(index),
            Err(e) => fetch_errors.push((source.clone(), e.to_string())),
        }
    }

    let mut summary = RcSummary {
        flavor,
        candidate: candidate_url.to_string(),
        base: base_urls.to_vec(),
        unmet: Vec::new(),
        fetch_errors,
        verdict: Verdict::Fail,
    };
    if !summary.fetch_errors.is_empty() {
        return summary;
    }
    let (candidate, base) = indexes.split_first().expect("candidate index present");
    match compute_closure(candidate, base) {
        Ok(unmet) => {
            summary.verdict = if unmet.is_empty() { Verdict::Ok } else { Verdict::Fail };
            summary.unmet = unmet;
        }
        Err(e) => summary.fetch_errors.push((candidate_url.to_string(), e.to_string())),
    }
    summary
}
