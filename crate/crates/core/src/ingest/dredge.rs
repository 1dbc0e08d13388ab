use std::collections::{BTreeMap, BTreeSet};

use regex::RegexSetBuilder;
use serde::{Deserialize, Serialize};

use super::SerpResult;
use crate::error::{Error, Result};

/// Number of search results kept per query.
pub const SERP_DEPTH: u32 = 10;

/// A phrase occurrence inside one text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DredgeMention {
    pub phrase: usize,
    pub text: usize,
}

/// Finds phrase occurrences that start a text, follow whitespace, or follow
/// `#`. Matching is case-insensitive. Returned pairs index into the inputs.
pub fn filter_dredge_mentions<S: AsRef<str>, P: AsRef<str>>(
    texts: &[S],
    phrases: &[P],
) -> Result<Vec<DredgeMention>> {
    if phrases.is_empty() {
        return Ok(Vec::new());
    }
    let patterns: Vec<String> = phrases
        .iter()
        .map(|p| format!(r"(?:^|[\s#]){}", regex::escape(p.as_ref())))
        .collect();
    let set = RegexSetBuilder::new(&patterns)
        .case_insensitive(true)
        .size_limit(1 << 28)
        .build()
        .map_err(|e| Error::Config(format!("dredge phrase patterns: {e}")))?;
    let mut out = Vec::new();
    for (ti, text) in texts.iter().enumerate() {
        for pi in set.matches(text.as_ref()).iter() {
            out.push(DredgeMention { phrase: pi, text: ti });
        }
    }
    Ok(out)
}

/// A query kept because its target domain ranked within the result depth.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RetainedQuery {
    pub phrase: String,
    pub targets: BTreeSet<String>,
}

/// Keeps the queries for which the target domain itself appears among the
/// top results. A query harvested for several targets keeps only the
/// targets that ranked.
pub fn retain_ranking_queries(serp: &[SerpResult]) -> Result<Vec<RetainedQuery>> {
    let mut ranked: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for row in serp {
        if !(1..=SERP_DEPTH).contains(&row.rank) {
            return Err(Error::Data(format!(
                "SERP rank {} for `{}` outside 1..={SERP_DEPTH}",
                row.rank, row.query
            )));
        }
        if row.result_domain == row.target_domain {
            ranked.entry(&row.query).or_default().insert(row.target_domain.clone());
        }
    }
    Ok(ranked
        .into_iter()
        .map(|(phrase, targets)| RetainedQuery {
            phrase: phrase.to_string(),
            targets,
        })
        .collect())
}

/// SERP rows belonging to a retained (query, target) pair.
pub fn retained_rows<'a>(serp: &'a [SerpResult], retained: &[RetainedQuery]) -> Vec<&'a SerpResult> {
    let keep: BTreeSet<(&str, &str)> = retained
        .iter()
        .flat_map(|q| q.targets.iter().map(move |t| (q.phrase.as_str(), t.as_str())))
        .collect();
    serp.iter()
        .filter(|r| keep.contains(&(r.query.as_str(), r.target_domain.as_str())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerpCandidate {
    pub domain: String,
    pub occurrences: usize,
    /// Queries whose results contained this domain.
    pub queries: BTreeSet<String>,
}

/// Unlabeled result domains with their SERP occurrence counts, sorted by
/// domain id. Domains seen fewer than `min_occurrences` times are dropped.
pub fn build_serp_candidates<'a>(
    rows: impl IntoIterator<Item = &'a SerpResult>,
    labeled: &BTreeSet<String>,
    min_occurrences: usize,
) -> Vec<SerpCandidate> {
    let mut acc: BTreeMap<&str, (usize, BTreeSet<String>)> = BTreeMap::new();
    for r in rows {
        if labeled.contains(&r.result_domain) {
            continue;
        }
        let e = acc.entry(&r.result_domain).or_default();
        e.0 += 1;
        e.1.insert(r.query.clone());
    }
    acc.into_iter()
        .filter(|(_, (n, _))| *n >= min_occurrences)
        .map(|(d, (occurrences, queries))| SerpCandidate {
            domain: d.to_string(),
            occurrences,
            queries,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(q: &str, t: &str, rank: u32, r: &str) -> SerpResult {
        SerpResult::new(q, t, rank, r).unwrap()
    }

    #[test]
    fn mention_boundaries() {
        let texts = [
            "psychic attack is real",
            "xpsychic attack",
            "beware #fallcabal videos",
            "a PSYCHIC ATTACK again",
            "tab\tpsychic attack",
        ];
        let hits = filter_dredge_mentions(&texts, &["psychic attack", "fallcabal"]).unwrap();
        assert_eq!(
            hits,
            vec![
                DredgeMention { phrase: 0, text: 0 },
                DredgeMention { phrase: 1, text: 2 },
                DredgeMention { phrase: 0, text: 3 },
                DredgeMention { phrase: 0, text: 4 },
            ]
        );
    }

    #[test]
    fn phrases_with_regex_metacharacters_are_literal() {
        let hits = filter_dredge_mentions(&["see project s.a.t.a.n. now", "project sxaxtxaxnx"], &["project s.a.t.a.n."]).unwrap();
        assert_eq!(hits, vec![DredgeMention { phrase: 0, text: 0 }]);
    }

    #[test]
    fn retention() {
        let mut serp = vec![row("q1", "t.com", 3, "t.com"), row("q1", "t.com", 1, "a.com")];
        serp.extend((1..=10).map(|r| row("q2", "t.com", r, &format!("x{r}.com"))));
        let kept = retain_ranking_queries(&serp).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].phrase, "q1");
        let bad = vec![SerpResult {
            rank: 11,
            ..row("q", "t.com", 1, "t.com")
        }];
        assert!(matches!(retain_ranking_queries(&bad), Err(Error::Data(_))));
    }

    #[test]
    fn retention_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut serp = Vec::new();
        let mut planted = BTreeSet::new();
        for q in 0..50 {
            let target = format!("t{}.com", q % 5);
            let hit_rank = if q % 7 == 1 { Some(rng.gen_range(1..=10)) } else { None };
            if hit_rank.is_some() {
                planted.insert(format!("query {q}"));
            }
            for rank in 1..=10 {
                let result = if Some(rank) == hit_rank { target.clone() } else { format!("r{}.com", rng.gen_range(0..30)) };
                serp.push(row(&format!("query {q}"), &target, rank, &result));
            }
        }
        assert_eq!(planted.len(), 7);
        // oracle: plain scan over every row
        let mut oracle = BTreeSet::new();
        for r in &serp {
            if r.rank <= 10 && r.result_domain == r.target_domain {
                oracle.insert(r.query.clone());
            }
        }
        let kept: BTreeSet<String> = retain_ranking_queries(&serp).unwrap().into_iter().map(|q| q.phrase).collect();
        assert_eq!(kept, oracle);
        assert_eq!(kept, planted);
    }

    #[test]
    fn candidates() {
        let labeled: BTreeSet<String> = ["t.com", "a.com"].map(String::from).into();
        let all_labeled = vec![row("q", "t.com", 1, "t.com"), row("q", "t.com", 2, "a.com")];
        assert!(build_serp_candidates(&all_labeled, &labeled, 1).is_empty());

        let rows: Vec<SerpResult> = [
            ("q1", "t.com", 1, "t.com"),
            ("q1", "t.com", 2, "b.com"),
            ("q1", "t.com", 3, "c.com"),
            ("q1", "t.com", 4, "d.com"),
            ("q1", "t.com", 5, "a.com"),
            ("q2", "t.com", 1, "b.com"),
            ("q2", "t.com", 2, "t.com"),
            ("q2", "t.com", 3, "e.com"),
            ("q2", "t.com", 4, "c.com"),
            ("q2", "t.com", 5, "f.com"),
            ("q3", "t.com", 1, "b.com"),
            ("q3", "t.com", 2, "g.com"),
            ("q3", "t.com", 3, "t.com"),
            ("q3", "t.com", 4, "e.com"),
            ("q3", "t.com", 5, "h.com"),
            ("q4", "t.com", 1, "t.com"),
            ("q4", "t.com", 2, "b.com"),
            ("q4", "t.com", 3, "i.com"),
            ("q4", "t.com", 4, "a.com"),
            ("q4", "t.com", 5, "c.com"),
        ]
        .iter()
        .map(|&(q, t, r, d)| row(q, t, r, d))
        .collect();
        // hand tally of unlabeled result domains
        let tally = [("b.com", 4), ("c.com", 3), ("d.com", 1), ("e.com", 2), ("f.com", 1), ("g.com", 1), ("h.com", 1), ("i.com", 1)];
        let got: Vec<(String, usize)> = build_serp_candidates(&rows, &labeled, 1)
            .into_iter()
            .map(|c| (c.domain, c.occurrences))
            .collect();
        let want: Vec<(String, usize)> = tally.iter().map(|&(d, n)| (d.to_string(), n)).collect();
        assert_eq!(got, want);
        let filtered: Vec<String> = build_serp_candidates(&rows, &labeled, 2).into_iter().map(|c| c.domain).collect();
        assert_eq!(filtered, vec!["b.com", "c.com", "e.com"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn retained_words_have_ranking_rows(
                raw in proptest::collection::vec((0u8..8, 0u8..3, 1u32..=10, 0u8..5), 0..60)
            ) {
                let serp: Vec<SerpResult> = raw.iter()
                    .map(|&(q, t, r, d)| row(&format!("q{q}"), &format!("d{t}.com"), r, &format!("d{d}.com")))
                    .collect();
                for word in retain_ranking_queries(&serp).unwrap() {
                    for t in &word.targets {
                        prop_assert!(serp.iter().any(|r| r.query == word.phrase && &r.target_domain == t
                            && &r.result_domain == t && r.rank <= SERP_DEPTH));
                    }
                }
            }
        }
    }
}
