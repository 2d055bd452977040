use std::collections::BTreeMap;

use super::KexprError;

/// Reserved name for the structure sheaf; always parses to the unit class.
pub const UNIT_NAME: &str = "O";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Line,
    Bundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolEntry {
    pub kind: SymbolKind,
    pub rank: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MorphismDecl {
    pub rel_dim: u32,
}

/// Declared line and bundle symbols plus the morphisms that det_rf atoms
/// refer to. Declaring a morphism `f` of relative dimension `n` also
/// declares its sheaf of relative differentials `Omega_f` (rank `n`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: BTreeMap<String, SymbolEntry>,
    morphisms: BTreeMap<String, MorphismDecl>,
}

pub fn omega_name(morphism: &str) -> String {
    format!("Omega_{}", morphism)
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '.')
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_line(&mut self, name: &str) -> Result<(), KexprError> {
        self.insert(name, SymbolEntry { kind: SymbolKind::Line, rank: 1 })
    }

    pub fn declare_bundle(&mut self, name: &str, rank: u64) -> Result<(), KexprError> {
        if rank == 0 {
            return Err(KexprError::InvalidRank { name: name.to_string(), rank });
        }
        self.insert(name, SymbolEntry { kind: SymbolKind::Bundle, rank })
    }

    /// Declares a morphism and its relative differentials `Omega_<name>`.
    /// `Omega` is the one bundle allowed to have rank 0 (an etale morphism).
    pub fn declare_morphism(&mut self, name: &str, rel_dim: u32) -> Result<(), KexprError> {
        if !is_valid_name(name) {
            return Err(KexprError::BadName(name.to_string()));
        }
        if let Some(existing) = self.morphisms.get(name) {
            if existing.rel_dim != rel_dim {
                return Err(KexprError::RankConflict {
                    name: name.to_string(),
                    existing: existing.rel_dim as u64,
                    requested: rel_dim as u64,
                });
            }
            return Ok(());
        }
        self.morphisms.insert(name.to_string(), MorphismDecl { rel_dim });
        self.insert_unchecked(
            &omega_name(name),
            SymbolEntry { kind: SymbolKind::Bundle, rank: rel_dim as u64 },
        )
    }

    /// Inserts a symbol without the rank >= 1 check. Used for derived
    /// symbols (pullbacks of `Omega`) that inherit a possibly-zero rank.
    pub fn insert_unchecked(&mut self, name: &str, entry: SymbolEntry) -> Result<(), KexprError> {
        if !is_valid_name(name) || name == UNIT_NAME {
            return Err(KexprError::BadName(name.to_string()));
        }
        match self.symbols.get(name) {
            Some(existing) if *existing != entry => Err(KexprError::RankConflict {
                name: name.to_string(),
                existing: existing.rank,
                requested: entry.rank,
            }),
            Some(_) => Ok(()),
            None => {
                self.symbols.insert(name.to_string(), entry);
                Ok(())
            }
        }
    }

    fn insert(&mut self, name: &str, entry: SymbolEntry) -> Result<(), KexprError> {
        if name == UNIT_NAME {
            return Err(KexprError::Reserved(name.to_string()));
        }
        self.insert_unchecked(name, entry)
    }

    pub fn get(&self, name: &str) -> Option<SymbolEntry> {
        self.symbols.get(name).copied()
    }

    pub fn rank_of(&self, name: &str) -> Option<u64> {
        self.get(name).map(|e| e.rank)
    }

    pub fn morphism(&self, name: &str) -> Option<MorphismDecl> {
        self.morphisms.get(name).copied()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, SymbolEntry)> {
        self.symbols.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn morphisms(&self) -> impl Iterator<Item = (&str, MorphismDecl)> {
        self.morphisms.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Merges `other` into `self`, failing on any conflicting declaration.
    pub fn extend(&mut self, other: &SymbolTable) -> Result<(), KexprError> {
        for (name, entry) in other.symbols() {
            self.insert_unchecked(name, entry)?;
        }
        for (name, decl) in other.morphisms() {
            if let Some(existing) = self.morphisms.get(name) {
                if existing.rel_dim != decl.rel_dim {
                    return Err(KexprError::RankConflict {
                        name: name.to_string(),
                        existing: existing.rel_dim as u64,
                        requested: decl.rel_dim as u64,
                    });
                }
            } else {
                self.morphisms.insert(name.to_string(), decl);
            }
        }
        Ok(())
    }

    /// Parses a line-oriented declaration block; `;` and newlines both end
    /// a declaration:
    ///
    /// ```text
    /// line L;
    /// bundle E rank 2;
    /// morphism f dim 1;   # comments run to end of line
    /// ```
    pub fn parse_declarations(text: &str) -> Result<SymbolTable, KexprError> {
        let mut table = SymbolTable::new();
        table.apply_declarations(text)?;
        Ok(table)
    }

    pub fn apply_declarations(&mut self, text: &str) -> Result<(), KexprError> {
        let stripped: String = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .collect::<Vec<_>>()
            .join("\n");
        let mut offset = 0;
        for stmt in stripped.split([';', '\n']) {
            let pos = offset;
            offset += stmt.len() + 1;
            let words: Vec<&str> = stmt.split_whitespace().collect();
            if words.is_empty() {
                continue;
            }
            self.apply_declaration(&words).map_err(|e| match e {
                KexprError::Syntax { message, .. } => KexprError::Syntax { pos, message },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Applies one declaration given as whitespace-separated words.
    pub fn apply_declaration(&mut self, words: &[&str]) -> Result<(), KexprError> {
        let bad = |msg: &str| KexprError::Syntax { pos: 0, message: msg.to_string() };
        match words {
            ["line", name] => self.declare_line(name),
            ["bundle", name, "rank", r] => {
                let rank = r.parse::<u64>().map_err(|_| bad("rank must be a positive integer"))?;
                self.declare_bundle(name, rank)
            }
            ["morphism", name, "dim", d] => {
                let dim = d.parse::<u32>().map_err(|_| bad("dim must be a non-negative integer"))?;
                self.declare_morphism(name, dim)
            }
            _ => Err(bad(&format!("unrecognised declaration `{}`", words.join(" ")))),
        }
        .and_then(|()| {
            if let Some(name) = words.get(1) {
                if !is_valid_name(name) {
                    return Err(KexprError::BadName(name.to_string()));
                }
            }
            Ok(())
        })
    }

    pub fn is_declaration(stmt: &str) -> bool {
        matches!(
            stmt.split_whitespace().next(),
            Some("line") | Some("bundle") | Some("morphism")
        ) && stmt.split_whitespace().nth(1).is_some_and(|w| !w.starts_with('('))
    }

    /// Renders the table in the declaration format (morphism-derived
    /// `Omega_*` symbols are implied and omitted).
    pub fn render_declarations(&self) -> String {
        let mut out = String::new();
        for (name, decl) in &self.morphisms {
            out.push_str(&format!("morphism {} dim {};\n", name, decl.rel_dim));
        }
        for (name, entry) in &self.symbols {
            if self.morphisms.keys().any(|m| omega_name(m) == *name) {
                continue;
            }
            match entry.kind {
                SymbolKind::Line => out.push_str(&format!("line {};\n", name)),
                SymbolKind::Bundle => {
                    out.push_str(&format!("bundle {} rank {};\n", name, entry.rank))
                }
            }
        }
        out
    }
}
