use serde::{Deserialize, Serialize};

/// Tri-state outcome of a windowed check. Finite windows cannot prove
/// asymptotic statements, so "verified" always means verified on the window
/// and "refuted" always carries witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "verified-on-window")]
    VerifiedOnWindow,
    #[serde(rename = "refuted-with-witness")]
    RefutedWithWitness,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn is_verified(self) -> bool {
        self == Verdict::VerifiedOnWindow
    }
    pub fn is_refuted(self) -> bool {
        self == Verdict::RefutedWithWitness
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::VerifiedOnWindow => "verified-on-window",
            Verdict::RefutedWithWitness => "refuted-with-witness",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Outcome of a dyadic-ladder trend reading for integrals and decay rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendVerdict {
    #[serde(rename = "divergent-trend")]
    Divergent,
    #[serde(rename = "convergent-trend")]
    Convergent,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for TrendVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TrendVerdict::Divergent => "divergent-trend",
            TrendVerdict::Convergent => "convergent-trend",
            TrendVerdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}
