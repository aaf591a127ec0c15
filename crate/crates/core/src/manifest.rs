//! Vocabulary manifests: the special tokens a fitted tokenizer adds to a
//! language-model vocabulary.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::calendar::{abs_vocab, rel_vocab};
use crate::codec::simple::ByteToken;
use crate::error::{Error, Result};
use crate::template::STRUCTURAL_TOKENS;
use crate::tokenizer::{Strategy, TokenizerSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabManifest {
    /// Structural tokens first, then strategy tokens, in a fixed order.
    pub tokens: Vec<String>,
    /// Size of each token category.
    pub counts: BTreeMap<String, usize>,
}

impl VocabManifest {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens beyond the structural set.
    pub fn strategy_tokens(&self) -> &[String] {
        &self.tokens[STRUCTURAL_TOKENS.len()..]
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

pub fn build_manifest(spec: &TokenizerSpec) -> Result<VocabManifest> {
    spec.validate().map_err(|e| Error::Unfitted(e.to_string()))?;
    let mut groups: Vec<(String, Vec<String>)> = vec![(
        "structural".into(),
        STRUCTURAL_TOKENS.iter().map(|t| t.to_string()).collect(),
    )];
    match &spec.strategy {
        Strategy::Numeric { .. } => {}
        Strategy::Byte {} => groups.push(("byte".into(), ByteToken::all().map(ByteToken::literal).collect())),
        Strategy::CalAbs {
            resolution,
            year_lo,
            year_hi,
        } => groups.extend(
            abs_vocab(*resolution, *year_lo, *year_hi)
                .into_iter()
                .map(|(f, toks)| (f.to_string(), toks)),
        ),
        Strategy::CalRel { resolution } => {
            groups.extend(rel_vocab(*resolution).into_iter().map(|(f, toks)| (f.to_string(), toks)))
        }
        Strategy::ScaleBin(bins) => groups.push(("bin".into(), bins.literals())),
        Strategy::Rsq(rsq) => groups.extend(rsq.levels.iter().map(|cb| {
            (
                format!("L{}", cb.level),
                (0..cb.len()).map(|i| cb.literal(i)).collect(),
            )
        })),
    }

    let mut seen = HashSet::new();
    let mut tokens = Vec::new();
    let mut counts = BTreeMap::new();
    for (name, toks) in groups {
        counts.insert(name, toks.len());
        for t in toks {
            if !seen.insert(t.clone()) {
                return Err(Error::Internal(format!("duplicate manifest token {t}")));
            }
            tokens.push(t);
        }
    }
    Ok(VocabManifest { tokens, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::calendar::Resolution;
    use crate::codec::quant::{Codebook, RsqSpec};
    use crate::dataset::TimeUnit;
    use crate::transforms::Scale;

    fn spec(strategy: Strategy) -> TokenizerSpec {
        TokenizerSpec::new(strategy, TimeUnit::Day).unwrap()
    }

    #[test]
    fn byte_manifest() {
        let m = build_manifest(&spec(Strategy::Byte {})).unwrap();
        assert_eq!(m.len(), 260);
        assert_eq!(m.tokens[0], "<|begin_of_event|>");
        assert_eq!(m.tokens[4], "<|byte_000|>");
        assert_eq!(m.counts["byte"], 256);
    }

    #[test]
    fn numeric_manifest_is_structural_only() {
        let m = build_manifest(&spec(Strategy::Numeric { precision: 6 })).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.strategy_tokens().is_empty());
    }

    #[test]
    fn rsq_manifest_counts_all_levels() {
        let levels = (0..4)
            .map(|level| Codebook {
                level,
                centroids: (0..64).map(f64::from).collect(),
            })
            .collect();
        let m = build_manifest(&spec(Strategy::Rsq(RsqSpec {
            scale: Scale::log10(),
            levels,
        })))
        .unwrap();
        assert_eq!(m.strategy_tokens().len(), 256);
        assert_eq!(m.strategy_tokens()[64], "<|L1_000|>");
    }

    #[test]
    fn calendar_manifests() {
        let abs = build_manifest(&spec(Strategy::CalAbs {
            resolution: Resolution::Second,
            year_lo: 2020,
            year_hi: 2024,
        }))
        .unwrap();
        assert_eq!(abs.strategy_tokens().len(), 5 + 12 + 31 + 24 + 60 + 60);
        let rel = build_manifest(&spec(Strategy::CalRel {
            resolution: Resolution::Day,
        }))
        .unwrap();
        assert_eq!(rel.counts["year"], 100);
        assert_eq!(rel.counts["month"], 13);
    }

    #[test]
    fn unfitted_spec_rejected() {
        let bad = TokenizerSpec {
            strategy: Strategy::Rsq(RsqSpec {
                scale: Scale::Linear,
                levels: vec![],
            }),
            unit: TimeUnit::Day,
        };
        assert!(matches!(build_manifest(&bad), Err(Error::Unfitted(_))));
    }

    #[test]
    fn deterministic_bytes() {
        let s = spec(Strategy::CalRel {
            resolution: Resolution::Second,
        });
        assert_eq!(
            build_manifest(&s).unwrap().to_json().unwrap(),
            build_manifest(&s).unwrap().to_json().unwrap()
        );
    }
}
