//! Class registry: the ordered class table every map is validated against.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{DataError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub id: u8,
    pub name: String,
    pub has_instances: bool,
    pub is_road: bool,
    pub is_traffic_participant: bool,
}

impl ClassDef {
    fn stuff(id: u8, name: &str) -> ClassDef {
        ClassDef {
            id,
            name: name.to_string(),
            has_instances: false,
            is_road: false,
            is_traffic_participant: false,
        }
    }

    fn road(id: u8, name: &str) -> ClassDef {
        ClassDef {
            is_road: true,
            ..ClassDef::stuff(id, name)
        }
    }

    fn participant(id: u8, name: &str) -> ClassDef {
        ClassDef {
            has_instances: true,
            is_traffic_participant: true,
            ..ClassDef::stuff(id, name)
        }
    }
}

/// Ordered class table. IDs are contiguous from 0 and stay below the ignore
/// value 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRegistry {
    classes: Vec<ClassDef>,
}

impl ClassRegistry {
    pub fn new(classes: Vec<ClassDef>) -> Result<ClassRegistry> {
        if classes.is_empty() {
            return Err(DataError::Registry("no classes".into()));
        }
        if classes.len() >= 255 {
            return Err(DataError::Registry(format!(
                "{} classes clash with the ignore value 255",
                classes.len()
            )));
        }
        for (i, c) in classes.iter().enumerate() {
            if c.id as usize != i {
                return Err(DataError::Registry(format!(
                    "ids must be contiguous from 0: position {i} holds id {}",
                    c.id
                )));
            }
            if c.name.is_empty() || c.name.contains('\t') || c.name.contains('\n') {
                return Err(DataError::Registry(format!(
                    "class {i} has an invalid name {:?}",
                    c.name
                )));
            }
            if c.is_traffic_participant && !c.has_instances {
                return Err(DataError::Registry(format!(
                    "class '{}' is a traffic participant but has no instances",
                    c.name
                )));
            }
        }
        Ok(ClassRegistry { classes })
    }

    /// The 21-class traffic-monitoring registry: the 16 retained Cityscapes
    /// classes in trainId order, the three road-indication classes at 16-18,
    /// then motorcycle and bicycle.
    pub fn default_tsp() -> ClassRegistry {
        ClassRegistry::new(vec![
            ClassDef::road(0, "road"),
            ClassDef::stuff(1, "sidewalk"),
            ClassDef::stuff(2, "building"),
            ClassDef::stuff(3, "wall"),
            ClassDef::stuff(4, "fence"),
            ClassDef::stuff(5, "pole"),
            ClassDef::stuff(6, "traffic light"),
            ClassDef::stuff(7, "traffic sign"),
            ClassDef::stuff(8, "vegetation"),
            ClassDef::stuff(9, "terrain"),
            ClassDef::stuff(10, "sky"),
            ClassDef::participant(11, "person"),
            ClassDef::participant(12, "rider"),
            ClassDef::participant(13, "car"),
            ClassDef::participant(14, "truck"),
            ClassDef::participant(15, "bus"),
            ClassDef::stuff(16, "crosswalk"),
            ClassDef::stuff(17, "driving indication"),
            ClassDef::stuff(18, "lane"),
            ClassDef::participant(19, "motorcycle"),
            ClassDef::participant(20, "bicycle"),
        ])
        .expect("default registry is valid")
    }

    /// Tiny 4-class registry for toy training runs.
    pub fn toy4() -> ClassRegistry {
        ClassRegistry::new(vec![
            ClassDef::stuff(0, "background"),
            ClassDef::road(1, "road"),
            ClassDef::participant(2, "car"),
            ClassDef::participant(3, "person"),
        ])
        .expect("toy registry is valid")
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn get(&self, id: u8) -> Option<&ClassDef> {
        self.classes.get(id as usize)
    }

    pub fn by_name(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn contains(&self, id: u8) -> bool {
        (id as usize) < self.classes.len()
    }

    pub fn has_instances(&self, id: u8) -> bool {
        self.get(id).is_some_and(|c| c.has_instances)
    }

    pub fn is_participant(&self, id: u8) -> bool {
        self.get(id).is_some_and(|c| c.is_traffic_participant)
    }

    pub fn participants(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.iter().filter(|c| c.is_traffic_participant)
    }

    pub fn instance_classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.iter().filter(|c| c.has_instances)
    }

    pub fn road_ids(&self) -> Vec<u8> {
        self.classes
            .iter()
            .filter(|c| c.is_road)
            .map(|c| c.id)
            .collect()
    }

    /// Human participant classes: person and rider. Every other participant
    /// counts as a vehicle.
    pub fn is_human(&self, id: u8) -> bool {
        self.get(id)
            .is_some_and(|c| c.is_traffic_participant && (c.name == "person" || c.name == "rider"))
    }

    // ── text table (one line: id<TAB>name<TAB>flags) ─────────────────────────

    /// Flags: `i` has_instances, `r` is_road, `t` traffic participant,
    /// `-` when none apply.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            let mut flags = String::new();
            if c.has_instances {
                flags.push('i');
            }
            if c.is_road {
                flags.push('r');
            }
            if c.is_traffic_participant {
                flags.push('t');
            }
            if flags.is_empty() {
                flags.push('-');
            }
            writeln!(out, "{}\t{}\t{}", c.id, c.name, flags).expect("string write");
        }
        out
    }

    pub fn from_table(table: &str) -> Result<ClassRegistry> {
        let mut classes = Vec::new();
        for (lineno, line) in table.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (id, name, flags) = match (parts.next(), parts.next(), parts.next(), parts.next())
            {
                (Some(id), Some(name), Some(flags), None) => (id, name, flags),
                _ => {
                    return Err(DataError::Registry(format!(
                        "line {}: expected id<TAB>name<TAB>flags",
                        lineno + 1
                    )))
                }
            };
            let id: u8 = id.parse().map_err(|_| {
                DataError::Registry(format!("line {}: bad id {id:?}", lineno + 1))
            })?;
            let mut def = ClassDef::stuff(id, name);
            for f in flags.chars() {
                match f {
                    'i' => def.has_instances = true,
                    'r' => def.is_road = true,
                    't' => def.is_traffic_participant = true,
                    '-' => {}
                    other => {
                        return Err(DataError::Registry(format!(
                            "line {}: unknown flag {other:?}",
                            lineno + 1
                        )))
                    }
                }
            }
            classes.push(def);
        }
        ClassRegistry::new(classes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_table()).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ClassRegistry> {
        let table = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        ClassRegistry::from_table(&table)
    }
}
