use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::evr::{Evr, Flavor, Relation, VersionConstraint};

/// One hard dependency. RPM entries have a single alternative; DEB
/// `a | b` groups have several, any one of which satisfies the group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dependency {
    pub alternatives: Vec<VersionConstraint>,
}

impl Dependency {
    pub fn single(constraint: VersionConstraint) -> Self {
        Dependency {
            alternatives: vec![constraint],
        }
    }

    pub fn group(alternatives: Vec<VersionConstraint>) -> Self {
        Dependency { alternatives }
    }

    /// Name of the first alternative; the sort key for unmet reports.
    pub fn primary_name(&self) -> &str {
        self.alternatives.first().map(|c| c.name.as_str()).unwrap_or("")
    }
}

impl fmt::Display for Dependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, alt) in self.alternatives.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{alt}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PackageId {
    pub name: String,
    pub evr: String,
    pub arch: String,
}

impl fmt::Display for PackageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}.{}", self.name, self.evr, self.arch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Package {
    pub name: String,
    pub evr: Evr,
    pub architecture: String,
    /// Always contains the self-provide `name = evr`.
    pub provides: Vec<VersionConstraint>,
    pub requires: Vec<Dependency>,
    /// Absolute paths shipped by the package, as listed in primary metadata.
    pub file_list: Vec<String>,
    pub license: Option<String>,
}

impl Package {
    pub fn new(name: impl Into<String>, evr: Evr, architecture: impl Into<String>) -> Self {
        let mut pkg = Package {
            name: name.into(),
            evr,
            architecture: architecture.into(),
            provides: Vec::new(),
            requires: Vec::new(),
            file_list: Vec::new(),
            license: None,
        };
        pkg.ensure_self_provide();
        pkg
    }

    pub fn self_provide(&self) -> VersionConstraint {
        VersionConstraint::versioned(self.name.clone(), Relation::Eq, self.evr.clone())
    }

    /// Adds `name = evr` to the provides unless an identical entry is present.
    pub fn ensure_self_provide(&mut self) {
        let own = self.self_provide();
        if !self.provides.contains(&own) {
            self.provides.insert(0, own);
        }
    }

    pub fn id(&self) -> PackageId {
        PackageId {
            name: self.name.clone(),
            evr: self.evr.to_string(),
            arch: self.architecture.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepoIndex {
    pub flavor: Flavor,
    pub base_url: String,
    pub packages: Vec<Package>,
    pub fetched_at: DateTime<Utc>,
}

impl RepoIndex {
    pub fn new(flavor: Flavor, base_url: impl Into<String>, packages: Vec<Package>) -> Self {
        RepoIndex {
            flavor,
            base_url: base_url.into(),
            packages,
            fetched_at: Utc::now(),
        }
    }

    /// Concatenates several indexes of one flavor into a single index.
    pub fn merged(flavor: Flavor, label: impl Into<String>, parts: &[RepoIndex]) -> Self {
        let packages = parts.iter().flat_map(|r| r.packages.iter().cloned()).collect();
        RepoIndex::new(flavor, label, packages)
    }
}

/// A requirement that no package in the searched union satisfies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnmetDependency {
    pub requiring: PackageId,
    pub constraint: Dependency,
    pub searched_repos: Vec<String>,
}

impl fmt::Display for UnmetDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} requires {}", self.requiring, self.constraint)
    }
}
