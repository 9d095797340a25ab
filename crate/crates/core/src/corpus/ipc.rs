use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A structured International Patent Classification symbol such as
/// `B60L 11/18`: section `B`, class `60`, subclass `L`, main group `11`,
/// subgroup `18`.
///
/// The subgroup keeps its digits verbatim because `11/18` and `11/180` are
/// different subgroups.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IpcCode {
    pub section: char,
    pub class: u8,
    pub subclass: char,
    pub group: u16,
    pub subgroup: String,
}

/// Hierarchy depth used when comparing two codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpcLevel {
    Section,
    Class,
    Subclass,
    Group,
    Subgroup,
}

impl IpcLevel {
    pub fn name(self) -> &'static str {
        match self {
            IpcLevel::Section => "section",
            IpcLevel::Class => "class",
            IpcLevel::Subclass => "subclass",
            IpcLevel::Group => "group",
            IpcLevel::Subgroup => "subgroup",
        }
    }
}

impl IpcCode {
    /// Prefix of the symbol down to `level`, e.g. `B60L` for the subclass.
    pub fn key(&self, level: IpcLevel) -> String {
        match level {
            IpcLevel::Section => self.section.to_string(),
            IpcLevel::Class => format!("{}{:02}", self.section, self.class),
            IpcLevel::Subclass => format!("{}{:02}{}", self.section, self.class, self.subclass),
            IpcLevel::Group => format!("{}{:02}{} {}", self.section, self.class, self.subclass, self.group),
            IpcLevel::Subgroup => self.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpcParseError(pub String);

impl fmt::Display for IpcParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid IPC symbol {:?}", self.0)
    }
}

impl std::error::Error for IpcParseError {}

impl FromStr for IpcCode {
    type Err = IpcParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || IpcParseError(s.to_string());
        let trimmed = s.trim();
        let head: Vec<char> = trimmed.chars().take(4).collect();
        if head.len() < 4 {
            return Err(err());
        }
        let section = head[0];
        if !('A'..='H').contains(&section) {
            return Err(err());
        }
        if !head[1].is_ascii_digit() || !head[2].is_ascii_digit() {
            return Err(err());
        }
        let class = (head[1] as u8 - b'0') * 10 + (head[2] as u8 - b'0');
        let subclass = head[3];
        if !subclass.is_ascii_uppercase() {
            return Err(err());
        }
        // head is four ASCII chars, so byte offset 4 is a boundary
        let rest = trimmed[4..].trim_start();
        let (group, subgroup) = rest.split_once('/').ok_or_else(err)?;
        if group.is_empty()
            || group.len() > 4
            || !group.bytes().all(|b| b.is_ascii_digit())
            || subgroup.is_empty()
            || !subgroup.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        Ok(IpcCode {
            section,
            class,
            subclass,
            group: group.parse().map_err(|_| err())?,
            subgroup: subgroup.to_string(),
        })
    }
}

impl fmt::Display for IpcCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:02}{} {}/{}", self.section, self.class, self.subclass, self.group, self.subgroup)
    }
}

impl Serialize for IpcCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IpcCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_five_levels() {
        let code: IpcCode = "B60L 11/18".parse().unwrap();
        assert_eq!(code.section, 'B');
        assert_eq!(code.class, 60);
        assert_eq!(code.subclass, 'L');
        assert_eq!(code.group, 11);
        assert_eq!(code.subgroup, "18");
        assert_eq!(code.to_string(), "B60L 11/18");
    }

    #[test]
    fn keys_per_level() {
        let code: IpcCode = "H01M 8/04".parse().unwrap();
        assert_eq!(code.key(IpcLevel::Section), "H");
        assert_eq!(code.key(IpcLevel::Class), "H01");
        assert_eq!(code.key(IpcLevel::Subclass), "H01M");
        assert_eq!(code.key(IpcLevel::Group), "H01M 8");
        assert_eq!(code.key(IpcLevel::Subgroup), "H01M 8/04");
    }

    #[test]
    fn subgroup_digits_are_significant() {
        let a: IpcCode = "B60L 11/18".parse().unwrap();
        let b: IpcCode = "B60L 11/180".parse().unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn accepts_compact_layout() {
        let code: IpcCode = "B60L11/18".parse().unwrap();
        assert_eq!(code.to_string(), "B60L 11/18");
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "B60", "Z60L 1/00", "B6XL 1/00", "B60l 1/00", "B60L 11", "B60L /18", "B60L 1a/2"] {
            assert!(bad.parse::<IpcCode>().is_err(), "{bad}");
        }
    }
}
