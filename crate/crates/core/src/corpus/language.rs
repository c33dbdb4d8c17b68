use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tree_sitter::Language as Grammar;

/// Source languages with a bundled grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    Java,
    Python,
    C,
    Cpp,
    JavaScript,
    Php,
}

impl Language {
    pub const ALL: [Language; 6] = [
        Language::Java,
        Language::Python,
        Language::C,
        Language::Cpp,
        Language::JavaScript,
        Language::Php,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::Java => "Java",
            Language::Python => "Python",
            Language::C => "C",
            Language::Cpp => "C++",
            Language::JavaScript => "JavaScript",
            Language::Php => "PHP",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "java" => Some(Language::Java),
            "py" => Some(Language::Python),
            "c" | "h" => Some(Language::C),
            "cc" | "cpp" | "cxx" | "hpp" | "hh" | "hxx" => Some(Language::Cpp),
            "js" | "mjs" | "cjs" => Some(Language::JavaScript),
            "php" => Some(Language::Php),
            _ => None,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Option<Self> {
        path.as_ref()
            .extension()
            .and_then(|e| e.to_str())
            .and_then(Self::from_extension)
    }

    pub fn grammar(self) -> Grammar {
        match self {
            Language::Java => tree_sitter_java::LANGUAGE.into(),
            Language::Python => tree_sitter_python::LANGUAGE.into(),
            Language::C => tree_sitter_c::LANGUAGE.into(),
            Language::Cpp => tree_sitter_cpp::LANGUAGE.into(),
            Language::JavaScript => tree_sitter_javascript::LANGUAGE.into(),
            Language::Php => tree_sitter_php::LANGUAGE_PHP.into(),
        }
    }

    /// Named, visible node kinds declared by the grammar.
    pub fn declared_tags(self) -> BTreeSet<String> {
        let grammar = self.grammar();
        (0..grammar.node_kind_count() as u16)
            .filter(|&id| {
                grammar.node_kind_is_named(id)
                    && grammar.node_kind_is_visible(id)
                    && !grammar.node_kind_is_supertype(id)
            })
            .filter_map(|id| grammar.node_kind_for_id(id))
            .filter(|kind| *kind != "ERROR")
            .map(str::to_owned)
            .collect()
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown language `{0}`")]
pub struct UnknownLanguage(pub String);

impl FromStr for Language {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            "c" => Ok(Language::C),
            "c++" | "cpp" => Ok(Language::Cpp),
            "javascript" | "js" => Ok(Language::JavaScript),
            "php" => Ok(Language::Php),
            _ => Err(UnknownLanguage(s.to_owned())),
        }
    }
}
