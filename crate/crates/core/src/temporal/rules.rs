use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TemporalType;
use crate::error::{Error, Result};

/// The compiled-in rule grammar.
pub const DEFAULT_RULES: &str = include_str!("../../rules/default.toml");

const MAX_MACRO_DEPTH: usize = 16;

/// One rule as written in a rule file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDef {
    pub rule_id: String,
    #[serde(rename = "type")]
    pub kind: TemporalType,
    #[serde(default)]
    pub priority: i32,
    pub pattern: String,
    /// Member of the date family used for salient date detection.
    #[serde(default)]
    pub salient_date: bool,
    #[serde(default)]
    pub case_sensitive: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RuleFile {
    #[serde(default)]
    pub macros: BTreeMap<String, String>,
    pub rules: Vec<RuleDef>,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub def: RuleDef,
    pub order: usize,
    pub(crate) regex: Regex,
}

impl Rule {
    pub fn regex(&self) -> &Regex {
        &self.regex
    }
}

/// An ordered, compiled, immutable set of temporal rules.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Rule>,
    fingerprint: String,
}

impl RuleSet {
    /// The compiled-in default grammar, built once per process.
    pub fn builtin() -> &'static RuleSet {
        static BUILTIN: OnceLock<RuleSet> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            RuleSet::from_toml_str(DEFAULT_RULES).expect("built-in rule file is valid")
        })
    }

    pub fn from_toml_str(source: &str) -> Result<Self> {
        let file: RuleFile = toml::from_str(source).map_err(|e| Error::Rules(e.to_string()))?;
        Self::compile(file, source.as_bytes())
    }

    pub fn from_json_str(source: &str) -> Result<Self> {
        let file: RuleFile =
            serde_json::from_str(source).map_err(|e| Error::Rules(e.to_string()))?;
        Self::compile(file, source.as_bytes())
    }

    /// Loads a rule file; `.json` is read as JSON, anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&source),
            _ => Self::from_toml_str(&source),
        }
    }

    pub fn compile(file: RuleFile, source: &[u8]) -> Result<Self> {
        if file.rules.is_empty() {
            return Err(Error::Rules("rule file defines no rules".into()));
        }
        let macro_ref = Regex::new(r"\{([A-Z][A-Z0-9_]*)\}").expect("static regex");
        let mut seen = std::collections::HashSet::new();
        let mut rules = Vec::with_capacity(file.rules.len());
        for (order, def) in file.rules.into_iter().enumerate() {
            if !seen.insert(def.rule_id.clone()) {
                return Err(Error::Rules(format!("duplicate rule_id {:?}", def.rule_id)));
            }
            let expanded = expand_macros(&def.pattern, &file.macros, &macro_ref)
                .map_err(|m| Error::Rules(format!("rule {:?}: {m}", def.rule_id)))?;
            let flags = if def.case_sensitive { "" } else { "(?i)" };
            let regex = Regex::new(&format!("{flags}(?:{expanded})"))
                .map_err(|e| Error::Rules(format!("rule {:?}: {e}", def.rule_id)))?;
            rules.push(Rule { def, order, regex });
        }
        Ok(RuleSet {
            rules,
            fingerprint: hex_digest(source),
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn get(&self, rule_id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.def.rule_id == rule_id)
    }

    /// SHA-256 of the rule source the set was compiled from.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn is_salient_date(&self, rule_id: &str) -> bool {
        self.get(rule_id).is_some_and(|r| r.def.salient_date)
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::builtin().clone()
    }
}

fn expand_macros(
    pattern: &str,
    macros: &BTreeMap<String, String>,
    macro_ref: &Regex,
) -> std::result::Result<String, String> {
    let mut current = pattern.to_owned();
    for _ in 0..MAX_MACRO_DEPTH {
        if !macro_ref.is_match(&current) {
            return Ok(current);
        }
        let mut missing = None;
        let next = macro_ref.replace_all(&current, |caps: &regex::Captures<'_>| {
            match macros.get(&caps[1]) {
                Some(body) => body.clone(),
                None => {
                    missing.get_or_insert_with(|| caps[1].to_owned());
                    String::new()
                }
            }
        });
        if let Some(name) = missing {
            return Err(format!("unknown macro {{{name}}}"));
        }
        current = next.into_owned();
    }
    Err("macro expansion too deep (cycle?)".into())
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
