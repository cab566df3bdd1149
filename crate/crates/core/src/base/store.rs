use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BaseError, ConstraintBase};
use crate::dsl::{parse_document, serialize_constraint, serialize_meta, Item};
use crate::identify::IdentificationResult;

const FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Index {
    format: u32,
    version: u64,
    identification_version: u64,
    constraints: Vec<Entry>,
    #[serde(default)]
    meta_constraints: Vec<Entry>,
    #[serde(default)]
    identification: Vec<IdentificationResult>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    id: String,
    file: String,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> BaseError + '_ {
    move |source| BaseError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn constraint_file(id: &str) -> String {
    format!("constraints/{id}.iupc")
}

fn read_index(dir: &Path) -> Result<Option<Index>, BaseError> {
    let path = dir.join("index.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map(Some).map_err(|e| BaseError::Syntax {
        file: path.display().to_string(),
        message: e.to_string(),
    })
}

impl ConstraintBase {
    pub fn load(dir: impl AsRef<Path>) -> Result<ConstraintBase, BaseError> {
        let dir = dir.as_ref();
        let index = read_index(dir)?.ok_or_else(|| BaseError::Io {
            path: dir.join("index.json").display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "index.json not found"),
        })?;
        if index.format != FORMAT {
            return Err(BaseError::Syntax {
                file: dir.join("index.json").display().to_string(),
                message: format!("unsupported format {}", index.format),
            });
        }
        let mut base = ConstraintBase::new();
        let read_item = |entry: &Entry| -> Result<Item, BaseError> {
            let path: PathBuf = dir.join(&entry.file);
            let text = fs::read_to_string(&path).map_err(io(&path))?;
            let file = path.display().to_string();
            let mut items = parse_document(&text).map_err(|source| BaseError::Dsl { file: file.clone(), source })?;
            match (items.len(), items.pop()) {
                (1, Some(item)) if item.id() == entry.id => Ok(item),
                _ => Err(BaseError::Syntax {
                    file,
                    message: format!("expected exactly the item {}", entry.id),
                }),
            }
        };
        for entry in &index.constraints {
            match read_item(entry)? {
                Item::Constraint(c) => {
                    base.insert(c)?;
                }
                _ => {
                    return Err(BaseError::Syntax {
                        file: entry.file.clone(),
                        message: "expected a constraint".into(),
                    })
                }
            }
        }
        for entry in &index.meta_constraints {
            match read_item(entry)? {
                Item::Meta(m) => base.insert_meta(m)?,
                _ => {
                    return Err(BaseError::Syntax {
                        file: entry.file.clone(),
                        message: "expected a meta constraint".into(),
                    })
                }
            }
        }
        base.identification = index
            .identification
            .into_iter()
            .filter(|r| base.constraints.contains_key(&r.rule))
            .map(|r| (r.rule.clone(), r))
            .collect();
        base.version = index.version;
        base.identification_version = index.identification_version;
        base.loaded_version = index.version;
        Ok(base)
    }

    /// Writes the base. Fails when another writer saved since this copy was
    /// loaded.
    pub fn save(&mut self, dir: impl AsRef<Path>) -> Result<(), BaseError> {
        let dir = dir.as_ref();
        if let Some(existing) = read_index(dir)? {
            if existing.version > self.loaded_version {
                return Err(BaseError::VersionConflict {
                    on_disk: existing.version,
                    loaded: self.loaded_version,
                });
            }
        }
        let cdir = dir.join("constraints");
        fs::create_dir_all(&cdir).map_err(io(&cdir))?;
        if let Ok(entries) = fs::read_dir(&cdir) {
            for e in entries.flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "iupc") {
                    fs::remove_file(&p).map_err(io(&p))?;
                }
            }
        }
        let mut index = Index {
            format: FORMAT,
            version: self.version,
            identification_version: self.identification_version,
            constraints: Vec::new(),
            meta_constraints: Vec::new(),
            identification: self.identification.values().cloned().collect(),
        };
        for c in self.constraints.values() {
            let file = constraint_file(&c.id);
            let path = dir.join(&file);
            fs::write(&path, serialize_constraint(c)).map_err(io(&path))?;
            index.constraints.push(Entry { id: c.id.clone(), file });
        }
        for m in self.meta_constraints.values() {
            let file = constraint_file(&m.id);
            let path = dir.join(&file);
            fs::write(&path, serialize_meta(m)).map_err(io(&path))?;
            index.meta_constraints.push(Entry { id: m.id.clone(), file });
        }
        let path = dir.join("index.json");
        let mut text = serde_json::to_string_pretty(&index).expect("index serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io(&path))?;
        self.loaded_version = self.version;
        Ok(())
    }
}
