//! Synthetic inputs shared by the benchmarks.

use qcgate_core::repo::{Dependency, Evr, Flavor, Package, Relation, RepoIndex, VersionConstraint};

/// Deterministic version strings with epochs, tildes and alphabetic parts.
pub fn version_corpus(n: usize) -> Vec<String> {
    let tails = ["", "~rc1", ".a", "+git2", ".10", "_beta", ".0.1"];
    (0..n)
        .map(|i| {
            let epoch = if i % 7 == 0 { "1:" } else { "" };
            format!("{epoch}{}.{}{}-{}", i % 5, (i * 31) % 17, tails[i % tails.len()], i % 4 + 1)
        })
        .collect()
}

/// A candidate of `n` packages requiring chains into a base of `n` libraries.
/// Every `unmet_every`th candidate carries one requirement nothing provides.
pub fn closure_repos(flavor: Flavor, n: usize, unmet_every: usize) -> (RepoIndex, RepoIndex) {
    let evr = |s: &str| Evr::parse(s, flavor);
    let base: Vec<Package> = (0..n)
        .map(|i| {
            let mut p = Package::new(format!("lib{i}"), evr(&format!("2.{}-1", i % 9)), "x86_64");
            p.provides.push(VersionConstraint::any(format!("lib{i}.so.1()(64bit)")));
            p.ensure_self_provide();
            p
        })
        .collect();
    let candidate: Vec<Package> = (0..n)
        .map(|i| {
            let mut p = Package::new(format!("app{i}"), evr("1.0-1"), "x86_64");
            p.requires.push(Dependency::single(VersionConstraint::versioned(
                format!("lib{}", (i * 7) % n),
                Relation::Ge,
                evr("2.0"),
            )));
            p.requires.push(Dependency::single(VersionConstraint::any(format!("lib{}.so.1()(64bit)", (i * 3) % n))));
            if i > 0 {
                p.requires.push(Dependency::single(VersionConstraint::versioned(
                    format!("app{}", i - 1),
                    Relation::Eq,
                    evr("1.0-1"),
                )));
            }
            if unmet_every > 0 && i % unmet_every == 0 {
                p.requires.push(Dependency::single(VersionConstraint::any(format!("missing{i}"))));
            }
            p.ensure_self_provide();
            p
        })
        .collect();
    (RepoIndex::new(flavor, "candidate", candidate), RepoIndex::new(flavor, "base", base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcgate_core::repo::compute_closure;

    #[test]
    fn seeded_unmet_count() {
        let (cand, base) = closure_repos(Flavor::Rpm, 100, 10);
        assert_eq!(compute_closure(&cand, &[base]).unwrap().len(), 10);
    }

    #[test]
    fn corpus_is_deterministic() {
        assert_eq!(version_corpus(50), version_corpus(50));
    }
}
