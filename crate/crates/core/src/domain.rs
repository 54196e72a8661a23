//! Category registry and domain knowledge shipped with the crate.
//!
//! The table lists every room, object and receptacle name together with the
//! containment relations they allow. It drives scene generation, graph
//! construction, task sampling and argument aliasing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

const BUILTIN_TABLE: &str = include_str!("../data/domain.toml");
pub const DOMAIN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoomKind {
    Kitchen,
    Bathroom,
    Bedroom,
    Livingroom,
}

impl RoomKind {
    pub const ALL: [RoomKind; 4] = [
        RoomKind::Kitchen,
        RoomKind::Bathroom,
        RoomKind::Bedroom,
        RoomKind::Livingroom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoomKind::Kitchen => "kitchen",
            RoomKind::Bathroom => "bathroom",
            RoomKind::Bedroom => "bedroom",
            RoomKind::Livingroom => "livingroom",
        }
    }

    /// Capitalized room name used as the header of scene descriptions.
    pub fn title(self) -> &'static str {
        match self {
            RoomKind::Kitchen => "Kitchen",
            RoomKind::Bathroom => "Bathroom",
            RoomKind::Bedroom => "Bedroom",
            RoomKind::Livingroom => "Livingroom",
        }
    }
}

impl fmt::Display for RoomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoomKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kitchen" => Ok(RoomKind::Kitchen),
            "bathroom" => Ok(RoomKind::Bathroom),
            "bedroom" => Ok(RoomKind::Bedroom),
            "livingroom" | "living_room" => Ok(RoomKind::Livingroom),
            other => Err(DomainError::UnsupportedRoom(other.to_string())),
        }
    }
}

/// Effect an appliance applies to its contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Appliance {
    Heat,
    Cool,
    Clean,
}

impl Appliance {
    pub const ALL: [Appliance; 3] = [Appliance::Heat, Appliance::Cool, Appliance::Clean];

    pub fn as_str(self) -> &'static str {
        match self {
            Appliance::Heat => "heat",
            Appliance::Cool => "cool",
            Appliance::Clean => "clean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryInfo {
    pub name: String,
    pub display: String,
    pub pickupable: bool,
    pub receptacle: bool,
    pub openable: bool,
    pub toggleable: bool,
    pub sliceable: bool,
    pub appliance: Option<Appliance>,
    pub treat: Vec<Appliance>,
    /// Surface height for fixtures; zero for pickupables.
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomInventory {
    pub required: Vec<String>,
    pub optional: Vec<String>,
    pub pickupables: Vec<String>,
}

/// Category registry plus the relation table used to infuse knowledge into
/// scene graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainKnowledge {
    pub schema_version: u32,
    pub categories: BTreeMap<String, CategoryInfo>,
    /// receptacle category -> categories it may contain
    pub compatibility: BTreeMap<String, BTreeSet<String>>,
    pub rooms: BTreeMap<RoomKind, RoomInventory>,
    pub aliases: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct RawTable {
    schema_version: u32,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    fixtures: BTreeMap<String, RawFixture>,
    pickupables: BTreeMap<String, RawPickupable>,
    compatibility: BTreeMap<String, Vec<String>>,
    rooms: BTreeMap<String, RawRoom>,
}

#[derive(Deserialize)]
struct RawFixture {
    height: f64,
    #[serde(default)]
    receptacle: bool,
    #[serde(default)]
    openable: bool,
    #[serde(default)]
    toggleable: bool,
    appliance: Option<Appliance>,
}

#[derive(Deserialize)]
struct RawPickupable {
    display: String,
    #[serde(default)]
    receptacle: bool,
    #[serde(default)]
    sliceable: bool,
    #[serde(default)]
    treat: Vec<Appliance>,
}

#[derive(Deserialize)]
struct RawRoom {
    required: Vec<String>,
    optional: Vec<String>,
    pickupables: Vec<String>,
}

impl DomainKnowledge {
    /// The table bundled with the crate, parsed once.
    pub fn builtin() -> &'static DomainKnowledge {
        static TABLE: OnceLock<DomainKnowledge> = OnceLock::new();
        TABLE.get_or_init(|| {
            DomainKnowledge::from_toml(BUILTIN_TABLE).expect("bundled domain table is valid")
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, DomainError> {
        let raw: RawTable =
            toml::from_str(text).map_err(|e| DomainError::Parse(e.to_string()))?;
        if raw.schema_version != DOMAIN_SCHEMA_VERSION {
            return Err(DomainError::SchemaVersion(raw.schema_version));
        }
        let mut categories = BTreeMap::new();
        for (name, f) in raw.fixtures {
            categories.insert(
                name.clone(),
                CategoryInfo {
                    display: name.clone(),
                    name,
                    pickupable: false,
                    receptacle: f.receptacle,
                    openable: f.openable,
                    toggleable: f.toggleable,
                    sliceable: false,
                    appliance: f.appliance,
                    treat: Vec::new(),
                    height: f.height,
                },
            );
        }
        for (name, p) in raw.pickupables {
            if categories.contains_key(&name) {
                return Err(DomainError::Duplicate(name));
            }
            categories.insert(
                name.clone(),
                CategoryInfo {
                    name,
                    display: p.display,
                    pickupable: true,
                    receptacle: p.receptacle,
                    openable: false,
                    toggleable: false,
                    sliceable: p.sliceable,
                    appliance: None,
                    treat: p.treat,
                    height: 0.0,
                },
            );
        }
        let known = |c: &str| -> Result<(), DomainError> {
            if categories.contains_key(c) {
                Ok(())
            } else {
                Err(DomainError::UnknownCategory(c.to_string()))
            }
        };
        let mut compatibility = BTreeMap::new();
        for (recep, contents) in raw.compatibility {
            known(&recep)?;
            for c in &contents {
                known(c)?;
            }
            compatibility.insert(recep, contents.into_iter().collect::<BTreeSet<_>>());
        }
        let mut rooms = BTreeMap::new();
        for (name, r) in raw.rooms {
            let kind: RoomKind = name.parse()?;
            for c in r.required.iter().chain(&r.optional).chain(&r.pickupables) {
                known(c)?;
            }
            rooms.insert(
                kind,
                RoomInventory { required: r.required, optional: r.optional, pickupables: r.pickupables },
            );
        }
        for target in raw.aliases.values() {
            known(target)?;
        }
        Ok(DomainKnowledge {
            schema_version: raw.schema_version,
            categories,
            compatibility,
            rooms,
            aliases: raw.aliases,
        })
    }

    pub fn category(&self, name: &str) -> Option<&CategoryInfo> {
        self.categories.get(name)
    }

    /// Maps a surface name to its registered category, if any.
    pub fn canonical(&self, name: &str) -> Option<&str> {
        if let Some((k, _)) = self.categories.get_key_value(name) {
            return Some(k.as_str());
        }
        self.aliases.get(name).map(|s| s.as_str())
    }

    /// Alias-normalized name; unknown names are returned unchanged.
    pub fn normalize<'a>(&'a self, name: &'a str) -> &'a str {
        self.canonical(name).unwrap_or(name)
    }

    pub fn can_contain(&self, receptacle: &str, content: &str) -> bool {
        self.compatibility
            .get(receptacle)
            .is_some_and(|set| set.contains(content))
    }

    pub fn room(&self, kind: RoomKind) -> Option<&RoomInventory> {
        self.rooms.get(&kind)
    }

    /// Fixture category hosting the given appliance effect.
    pub fn appliance_category(&self, appliance: Appliance) -> Option<&str> {
        self.categories
            .values()
            .find(|c| c.appliance == Some(appliance))
            .map(|c| c.name.as_str())
    }

    pub fn display_name<'a>(&'a self, category: &'a str) -> &'a str {
        self.categories
            .get(category)
            .map(|c| c.display.as_str())
            .unwrap_or(category)
    }

    /// Name used for a category inside plan arguments: the display name when
    /// it is a single word that resolves back to the category, otherwise the
    /// category itself.
    pub fn plan_symbol<'a>(&'a self, category: &'a str) -> &'a str {
        let display = self.display_name(category);
        if !display.contains(char::is_whitespace) && self.canonical(display) == Some(category) {
            display
        } else {
            category
        }
    }

    /// Resolves a display name (possibly several words) back to a category.
    pub fn from_display(&self, display: &str) -> Option<&str> {
        self.categories
            .values()
            .find(|c| c.display == display)
            .map(|c| c.name.as_str())
            .or_else(|| self.canonical(display))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_is_consistent() {
        let dk = DomainKnowledge::builtin();
        assert_eq!(dk.schema_version, DOMAIN_SCHEMA_VERSION);
        assert_eq!(dk.rooms.len(), 4);
        assert_eq!(dk.appliance_category(Appliance::Heat), Some("microwave"));
        assert_eq!(dk.appliance_category(Appliance::Cool), Some("fridge"));
        assert_eq!(dk.appliance_category(Appliance::Clean), Some("sink"));
        // every pickupable listed in a room fits at least one fixture of that room
        for (kind, room) in &dk.rooms {
            for p in &room.pickupables {
                assert!(
                    room.required.iter().chain(&room.optional).any(|f| dk.can_contain(f, p)),
                    "{p} has no fixture in {kind}"
                );
            }
        }
    }

    #[test]
    fn aliases_resolve() {
        let dk = DomainKnowledge::builtin();
        assert_eq!(dk.normalize("soap"), "soapbar");
        assert_eq!(dk.normalize("soapbar"), "soapbar");
        assert_eq!(dk.normalize("unicorn"), "unicorn");
        assert_eq!(dk.from_display("soap"), Some("soapbar"));
    }

    #[test]
    fn rejects_unknown_reference() {
        let bad = r#"
schema_version = 1
[fixtures]
sink = { height = 0.8, receptacle = true }
[pickupables]
[compatibility]
sink = ["ghost"]
[rooms]
"#;
        assert!(matches!(
            DomainKnowledge::from_toml(bad),
            Err(DomainError::UnknownCategory(c)) if c == "ghost"
        ));
    }
}
