use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::vercmp::{compare_versions_deb, compare_versions_rpm};

/// Package-manager family; selects the version grammar and comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Rpm,
    Deb,
}

impl Flavor {
    pub fn label(self) -> &'static str {
        match self {
            Flavor::Rpm => "rpm",
            Flavor::Deb => "deb",
        }
    }

    /// Guesses the flavor from an operating-system label such as `centos7`
    /// or `ubuntu16.04`.
    pub fn for_os(os: &str) -> Flavor {
        let os = os.to_ascii_lowercase();
        if ["debian", "ubuntu", "deb"].iter().any(|p| os.starts_with(p)) {
            Flavor::Deb
        } else {
            Flavor::Rpm
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rpm" => Ok(Flavor::Rpm),
            "deb" => Ok(Flavor::Deb),
            other => Err(format!("unknown flavor '{other}' (expected rpm or deb)")),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Epoch, version and release of a package or capability.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Evr {
    pub epoch: u64,
    pub version: String,
    /// Empty for unversioned-release provides and native DEB packages.
    pub release: String,
}

impl Evr {
    pub fn new(epoch: u64, version: impl Into<String>, release: impl Into<String>) -> Self {
        Evr {
            epoch,
            version: version.into(),
            release: release.into(),
        }
    }

    /// Parses `[epoch:]version[-release]` where the release is everything
    /// after the first hyphen (RPM forbids hyphens inside version and release).
    pub fn parse_rpm(s: &str) -> Self {
        let (epoch, rest) = split_epoch(s);
        let (version, release) = rest.split_once('-').unwrap_or((rest, ""));
        Evr::new(epoch, version, release)
    }

    /// Parses `[epoch:]upstream[-revision]` where the revision follows the
    /// last hyphen.
    pub fn parse_deb(s: &str) -> Self {
        let (epoch, rest) = split_epoch(s);
        let (version, release) = rest.rsplit_once('-').unwrap_or((rest, ""));
        Evr::new(epoch, version, release)
    }

    pub fn parse(s: &str, flavor: Flavor) -> Self {
        match flavor {
            Flavor::Rpm => Evr::parse_rpm(s),
            Flavor::Deb => Evr::parse_deb(s),
        }
    }

    pub fn compare(&self, other: &Evr, flavor: Flavor) -> Ordering {
        match flavor {
            Flavor::Rpm => compare_versions_rpm(self, other),
            Flavor::Deb => compare_versions_deb(self, other),
        }
    }
}

fn split_epoch(s: &str) -> (u64, &str) {
    match s.split_once(':') {
        Some((e, rest)) if !e.is_empty() && e.bytes().all(|b| b.is_ascii_digit()) => {
            (e.parse().unwrap_or(0), rest)
        }
        _ => (0, s),
    }
}

impl fmt::Display for Evr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.epoch != 0 {
            write!(f, "{}:", self.epoch)?;
        }
        f.write_str(&self.version)?;
        if !self.release.is_empty() {
            write!(f, "-{}", self.release)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Any,
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    fn less(self) -> bool {
        matches!(self, Relation::Lt | Relation::Le)
    }

    fn greater(self) -> bool {
        matches!(self, Relation::Gt | Relation::Ge)
    }

    fn equal(self) -> bool {
        matches!(self, Relation::Le | Relation::Eq | Relation::Ge)
    }

    /// Whether `ordering` (of some version relative to the bound) lies in the range.
    pub fn admits(self, ordering: Ordering) -> bool {
        match ordering {
            Ordering::Less => self.less() || self == Relation::Any,
            Ordering::Equal => self.equal() || self == Relation::Any,
            Ordering::Greater => self.greater() || self == Relation::Any,
        }
    }

    pub fn rpm_flag(self) -> Option<&'static str> {
        Some(match self {
            Relation::Any => return None,
            Relation::Lt => "LT",
            Relation::Le => "LE",
            Relation::Eq => "EQ",
            Relation::Ge => "GE",
            Relation::Gt => "GT",
        })
    }

    pub fn from_rpm_flag(flag: &str) -> Option<Relation> {
        Some(match flag {
            "LT" => Relation::Lt,
            "LE" => Relation::Le,
            "EQ" => Relation::Eq,
            "GE" => Relation::Ge,
            "GT" => Relation::Gt,
            _ => return None,
        })
    }

    pub fn deb_operator(self) -> Option<&'static str> {
        Some(match self {
            Relation::Any => return None,
            Relation::Lt => "<<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">>",
        })
    }

    /// Accepts the obsolete `<` and `>` spellings, which mean `<=` and `>=`.
    pub fn from_deb_operator(op: &str) -> Option<Relation> {
        Some(match op {
            "<<" => Relation::Lt,
            "<=" | "<" => Relation::Le,
            "=" => Relation::Eq,
            ">=" | ">" => Relation::Ge,
            ">>" => Relation::Gt,
            _ => return None,
        })
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relation::Any => "",
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        };
        f.write_str(s)
    }
}

/// A named capability with an optional version bound. Used for both sides
/// of a dependency: requirements and provides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VersionConstraint {
    pub name: String,
    pub relation: Relation,
    /// Present iff `relation` is not `Any`.
    pub evr: Option<Evr>,
}

impl VersionConstraint {
    pub fn any(name: impl Into<String>) -> Self {
        VersionConstraint {
            name: name.into(),
            relation: Relation::Any,
            evr: None,
        }
    }

    /// A bounded constraint; `Relation::Any` drops the version.
    pub fn versioned(name: impl Into<String>, relation: Relation, evr: Evr) -> Self {
        let evr = (relation != Relation::Any).then_some(evr);
        VersionConstraint {
            name: name.into(),
            relation,
            evr,
        }
    }

    pub fn is_versioned(&self) -> bool {
        self.evr.is_some()
    }
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.evr {
            Some(evr) => write!(f, "{} {} {}", self.name, self.relation, evr),
            None => f.write_str(&self.name),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let e = Evr::parse_rpm("1:2.0-3.el7");
        assert_eq!(e, Evr::new(1, "2.0", "3.el7"));
        assert_eq!(e.to_string(), "1:2.0-3.el7");
        assert_eq!(Evr::parse_rpm("2.0").to_string(), "2.0");

        let d = Evr::parse_deb("2:1.0-rc-1ubuntu2");
        assert_eq!(d, Evr::new(2, "1.0-rc", "1ubuntu2"));
        assert_eq!(Evr::parse_deb("0:1.0").to_string(), "1.0");
    }

    #[test]
    fn relation_table() {
        assert!(Relation::Ge.admits(Ordering::Equal));
        assert!(Relation::Ge.admits(Ordering::Greater));
        assert!(!Relation::Ge.admits(Ordering::Less));
        assert!(!Relation::Lt.admits(Ordering::Equal));
        assert!(Relation::Any.admits(Ordering::Less));
        assert_eq!(Relation::from_deb_operator(">"), Some(Relation::Ge));
        assert!(VersionConstraint::versioned("a", Relation::Any, Evr::default()).evr.is_none());
    }

    #[test]
    fn flavor_for_os() {
        assert_eq!(Flavor::for_os("centos7"), Flavor::Rpm);
        assert_eq!(Flavor::for_os("sl6"), Flavor::Rpm);
        assert_eq!(Flavor::for_os("ubuntu16.04"), Flavor::Deb);
        assert_eq!(Flavor::for_os("Debian-squeeze"), Flavor::Deb);
    }
}
