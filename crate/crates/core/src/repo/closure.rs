//! Capability-level dependency closure over a union of repositories.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::evr::{Evr, Flavor, Relation, VersionConstraint};
use super::package::{Package, RepoIndex, UnmetDependency};
use super::vercmp::rpmvercmp;
use super::RepoError;

fn compare_for_match(provided: &Evr, required: &Evr, flavor: Flavor) -> Ordering {
    match flavor {
        Flavor::Deb => provided.compare(required, flavor),
        // A side without a release matches any release of the other side.
        Flavor::Rpm => {
            let ord = provided
                .epoch
                .cmp(&required.epoch)
                .then_with(|| rpmvercmp(&provided.version, &required.version));
            if ord != Ordering::Equal || provided.release.is_empty() || required.release.is_empty() {
                ord
            } else {
                rpmvercmp(&provided.release, &required.release)
            }
        }
    }
}

/// Whether the range of `provided` overlaps the range demanded by `required`.
pub fn satisfies(provided: &VersionConstraint, required: &VersionConstraint, flavor: Flavor) -> bool {
    if provided.name != required.name {
        return false;
    }
    let Some(req_evr) = &required.evr else {
        return true;
    };
    let Some(prov_evr) = &provided.evr else {
        // RPM treats an unversioned provide as "every version"; Debian
        // virtual packages never satisfy a versioned dependency.
        return flavor == Flavor::Rpm;
    };
    let p = provided.relation;
    let r = required.relation;
    let less = |rel: Relation| matches!(rel, Relation::Lt | Relation::Le);
    let greater = |rel: Relation| matches!(rel, Relation::Gt | Relation::Ge);
    let equal = |rel: Relation| matches!(rel, Relation::Le | Relation::Eq | Relation::Ge);
    match compare_for_match(prov_evr, req_evr, flavor) {
        Ordering::Less => greater(p) || less(r),
        Ordering::Greater => less(p) || greater(r),
        Ordering::Equal => (equal(p) && equal(r)) || (less(p) && less(r)) || (greater(p) && greater(r)),
    }
}

pub fn is_arch_independent(arch: &str) -> bool {
    matches!(arch, "noarch" | "all")
}

pub fn arch_compatible(requiring: &str, providing: &str) -> bool {
    requiring == providing || is_arch_independent(requiring) || is_arch_independent(providing)
}

struct Index<'a> {
    provides: HashMap<&'a str, Vec<(&'a str, &'a VersionConstraint)>>,
    files: HashMap<&'a str, Vec<&'a str>>,
}

impl<'a> Index<'a> {
    fn build(packages: impl Iterator<Item = &'a Package>) -> Self {
        let mut provides: HashMap<&str, Vec<(&str, &VersionConstraint)>> = HashMap::new();
        let mut files: HashMap<&str, Vec<&str>> = HashMap::new();
        for pkg in packages {
            for p in &pkg.provides {
                provides
                    .entry(p.name.as_str())
                    .or_default()
                    .push((pkg.architecture.as_str(), p));
            }
            for f in &pkg.file_list {
                files.entry(f.as_str()).or_default().push(pkg.architecture.as_str());
            }
        }
        Index { provides, files }
    }

    fn satisfied(&self, arch: &str, req: &VersionConstraint, flavor: Flavor) -> bool {
        let by_provide = self.provides.get(req.name.as_str()).is_some_and(|list| {
            list.iter()
                .any(|(prov_arch, prov)| arch_compatible(arch, prov_arch) && satisfies(prov, req, flavor))
        });
        by_provide
            || (req.name.starts_with('/')
                && !req.is_versioned()
                && self
                    .files
                    .get(req.name.as_str())
                    .is_some_and(|archs| archs.iter().any(|a| arch_compatible(arch, a))))
    }
}

/// Every hard requirement in `candidate ∪ base_repos` that nothing in the
/// union satisfies, ordered by (requiring name, constraint name).
pub fn compute_closure(candidate: &RepoIndex, base_repos: &[RepoIndex]) -> Result<Vec<UnmetDependency>, RepoError> {
    let flavor = candidate.flavor;
    if let Some(other) = base_repos.iter().find(|r| r.flavor != flavor) {
        return Err(RepoError::FlavorMismatch {
            expected: flavor,
            found: other.flavor,
            url: other.base_url.clone(),
        });
    }
    let union: Vec<&RepoIndex> = std::iter::once(candidate).chain(base_repos).collect();
    let searched: Vec<String> = union.iter().map(|r| r.base_url.clone()).collect();
    let index = Index::build(union.iter().flat_map(|r| r.packages.iter()));

    let mut unmet = Vec::new();
    for pkg in union.iter().flat_map(|r| r.packages.iter()) {
        for dep in &pkg.requires {
            let ok = dep
                .alternatives
                .iter()
                .any(|alt| index.satisfied(&pkg.architecture, alt, flavor));
            if !ok {
                unmet.push(UnmetDependency {
                    requiring: pkg.id(),
                    constraint: dep.clone(),
                    searched_repos: searched.clone(),
                });
            }
        }
    }
    unmet.sort_by(|a, b| {
        (a.requiring.name.as_str(), a.constraint.primary_name())
            .cmp(&(b.requiring.name.as_str(), b.constraint.primary_name()))
            .then_with(|| a.requiring.cmp(&b.requiring))
            .then_with(|| a.constraint.to_string().cmp(&b.constraint.to_string()))
    });
    unmet.dedup();
    Ok(unmet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repo::package::Dependency;

    fn ge(name: &str, v: &str) -> VersionConstraint {
        VersionConstraint::versioned(name, Relation::Ge, Evr::parse_rpm(v))
    }

    fn eq(name: &str, v: &str) -> VersionConstraint {
        VersionConstraint::versioned(name, Relation::Eq, Evr::parse_rpm(v))
    }

    #[test]
    fn satisfies_examples() {
        assert!(satisfies(&VersionConstraint::any("libB"), &VersionConstraint::any("libB"), Flavor::Rpm));
        assert!(!satisfies(&eq("a", "0.9"), &ge("a", "1.0"), Flavor::Rpm));
        assert!(satisfies(&VersionConstraint::any("a"), &ge("a", "1.0"), Flavor::Rpm));
        assert!(!satisfies(&VersionConstraint::any("a"), &ge("a", "1.0"), Flavor::Deb));
        assert!(!satisfies(&VersionConstraint::any("b"), &VersionConstraint::any("a"), Flavor::Rpm));
    }

    #[test]
    fn release_less_requirement_matches_any_release() {
        assert!(satisfies(&eq("a", "1.0-3.el7"), &eq("a", "1.0"), Flavor::Rpm));
        assert!(!satisfies(&eq("a", "1.0-3.el7"), &eq("a", "1.0-4.el7"), Flavor::Rpm));
    }

    /// Brute force over sample points: two ranges overlap iff some probe
    /// version lies in both. Probes at k and k.5 cover every gap between
    /// the integer bounds used below.
    #[test]
    fn overlap_matches_brute_force() {
        let relations = [Relation::Lt, Relation::Le, Relation::Eq, Relation::Ge, Relation::Gt];
        let probes: Vec<Evr> = (0..=10)
            .flat_map(|k| [format!("{k}"), format!("{k}.5")])
            .map(|v| Evr::new(0, v, "1"))
            .collect();
        let admits = |rel: Relation, bound: &Evr, x: &Evr| rel.admits(x.compare(bound, Flavor::Rpm));
        for flavor in [Flavor::Rpm, Flavor::Deb] {
            for pr in relations {
                for rr in relations {
                    for pv in 1..=9 {
                        for rv in 1..=9 {
                            let pe = Evr::new(0, pv.to_string(), "1");
                            let re = Evr::new(0, rv.to_string(), "1");
                            let expected = probes.iter().any(|x| admits(pr, &pe, x) && admits(rr, &re, x));
                            let got = satisfies(
                                &VersionConstraint::versioned("a", pr, pe.clone()),
                                &VersionConstraint::versioned("a", rr, re.clone()),
                                flavor,
                            );
                            assert_eq!(got, expected, "{pr:?} {pv} vs {rr:?} {rv} ({flavor})");
                        }
                    }
                }
            }
        }
    }

    fn pkg(name: &str, arch: &str, requires: &[&str]) -> Package {
        let mut p = Package::new(name, Evr::new(0, "1.0", "1"), arch);
        p.requires = requires
            .iter()
            .map(|r| Dependency::single(VersionConstraint::any(*r)))
            .collect();
        p
    }

    #[test]
    fn closure_examples() {
        let candidate = RepoIndex::new(Flavor::Rpm, "cand", vec![pkg("A", "x86_64", &["libB"])]);
        let unmet = compute_closure(&candidate, &[]).unwrap();
        assert_eq!(unmet.len(), 1);
        assert_eq!(unmet[0].requiring.name, "A");
        assert_eq!(unmet[0].constraint.primary_name(), "libB");
        assert_eq!(unmet[0].searched_repos, vec!["cand".to_string()]);

        let mut b = pkg("B", "x86_64", &[]);
        b.provides.push(VersionConstraint::any("libB"));
        let base = RepoIndex::new(Flavor::Rpm, "base", vec![b]);
        assert!(compute_closure(&candidate, std::slice::from_ref(&base)).unwrap().is_empty());

        let empty = RepoIndex::new(Flavor::Rpm, "cand", vec![]);
        assert!(compute_closure(&empty, &[base]).unwrap().is_empty());
    }

    #[test]
    fn file_requirements_and_arch() {
        let mut shell = pkg("bash", "x86_64", &[]);
        shell.file_list.push("/bin/sh".into());
        let a = pkg("A", "x86_64", &["/bin/sh"]);
        let i686 = pkg("C", "i686", &["/bin/sh"]);
        let noarch = pkg("D", "noarch", &["/bin/sh"]);
        let repo = RepoIndex::new(Flavor::Rpm, "r", vec![shell, a, i686, noarch]);
        let unmet = compute_closure(&repo, &[]).unwrap();
        assert_eq!(unmet.len(), 1);
        assert_eq!(unmet[0].requiring.name, "C");
    }

    #[test]
    fn flavor_mismatch_is_rejected() {
        let a = RepoIndex::new(Flavor::Rpm, "a", vec![]);
        let b = RepoIndex::new(Flavor::Deb, "b", vec![]);
        assert!(matches!(compute_closure(&a, &[b]), Err(RepoError::FlavorMismatch { .. })));
    }

    #[test]
    fn ordering_is_deterministic() {
        let repo = RepoIndex::new(
            Flavor::Rpm,
            "r",
            vec![pkg("z", "x86_64", &["m2", "m1"]), pkg("a", "x86_64", &["q"])],
        );
        let unmet = compute_closure(&repo, &[]).unwrap();
        let keys: Vec<_> = unmet
            .iter()
            .map(|u| (u.requiring.name.clone(), u.constraint.primary_name().to_string()))
            .collect();
        assert_eq!(
            keys,
            vec![("a".into(), "q".into()), ("z".into(), "m1".into()), ("z".into(), "m2".into())]
        );
    }
}
