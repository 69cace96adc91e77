//! Bundled protocols with their expected verdicts.
//!
//! The sources live in the top-level `corpus/` directory; each starts with
//! `// name:` and `// expected:` header lines.

use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Expected {
    Implementable,
    SendValidity,
    ReceiveValidity,
}

impl Expected {
    pub fn as_str(self) -> &'static str {
        match self {
            Expected::Implementable => "implementable",
            Expected::SendValidity => "send-validity",
            Expected::ReceiveValidity => "receive-validity",
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Expected {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "implementable" => Ok(Expected::Implementable),
            "send-validity" => Ok(Expected::SendValidity),
            "receive-validity" => Ok(Expected::ReceiveValidity),
            other => Err(format!("unknown expected verdict `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub file: &'static str,
    pub source: &'static str,
    pub expected: Expected,
}

/// Reads `// key: value` from the leading comment block of a source.
pub fn header(source: &str, key: &str) -> Option<String> {
    source
        .lines()
        .map(str::trim)
        .take_while(|l| l.starts_with("//"))
        .filter_map(|l| l.trim_start_matches('/').trim().split_once(':'))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim().to_string())
}

macro_rules! corpus_file {
    ($file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/", $file))
    };
}

pub const ODD_EVEN: &str = corpus_file!("odd_even.gt");
pub const G_R: &str = corpus_file!("gr.gt");
pub const G_R_PRIME: &str = corpus_file!("gr_prime.gt");
pub const G_S: &str = corpus_file!("gs.gt");
pub const G_S_PRIME: &str = corpus_file!("gs_prime.gt");
pub const G_FOLD: &str = corpus_file!("g_fold.gt");
pub const G_UNF: &str = corpus_file!("g_unf.gt");
pub const TWO_BUYER: &str = corpus_file!("two_buyer.gt");
pub const TWO_BUYER_LOOP: &str = corpus_file!("two_buyer_loop.gt");
pub const MIXED_CHOICE: &str = corpus_file!("mixed_choice.gt");
pub const FINAL_RECEIVE: &str = corpus_file!("final_receive.gt");

/// Every bundled protocol, in benchmark order.
pub const ENTRIES: &[CorpusEntry] = &[
    CorpusEntry {
        name: "Odd-even",
        file: "odd_even.gt",
        source: ODD_EVEN,
        expected: Expected::Implementable,
    },
    CorpusEntry {
        name: "G_r",
        file: "gr.gt",
        source: G_R,
        expected: Expected::ReceiveValidity,
    },
    CorpusEntry {
        name: "G'_r",
        file: "gr_prime.gt",
        source: G_R_PRIME,
        expected: Expected::Implementable,
    },
    CorpusEntry {
        name: "G_s",
        file: "gs.gt",
        source: G_S,
        expected: Expected::SendValidity,
    },
    CorpusEntry {
        name: "G'_s",
        file: "gs_prime.gt",
        source: G_S_PRIME,
        expected: Expected::Implementable,
    },
    CorpusEntry {
        name: "G_fold",
        file: "g_fold.gt",
        source: G_FOLD,
        expected: Expected::Implementable,
    },
    CorpusEntry {
        name: "G_unf",
        file: "g_unf.gt",
        source: G_UNF,
        expected: Expected::Implementable,
    },
    CorpusEntry {
        name: "Two buyers",
        file: "two_buyer.gt",
        source: TWO_BUYER,
        expected: Expected::Implementable,
    },
    CorpusEntry {
        name: "Two buyers, repeated negotiation",
        file: "two_buyer_loop.gt",
        source: TWO_BUYER_LOOP,
        expected: Expected::Implementable,
    },
    CorpusEntry {
        name: "Mixed choice",
        file: "mixed_choice.gt",
        source: MIXED_CHOICE,
        expected: Expected::SendValidity,
    },
    CorpusEntry {
        name: "Optional notification",
        file: "final_receive.gt",
        source: FINAL_RECEIVE,
        expected: Expected::Implementable,
    },
];

pub fn find(name: &str) -> Option<&'static CorpusEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name || e.file == name || e.file.trim_end_matches(".gt") == name)
}
