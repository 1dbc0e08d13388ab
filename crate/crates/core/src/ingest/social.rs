use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::SocialMention;

/// Minimum-support thresholds for cleaning the social stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocialFilterRules {
    /// Users need at least this many distinct observed tweets.
    pub min_user_tweets: usize,
    /// Tweets need at least this many total observations (original + reposts).
    pub min_tweet_observations: u64,
    /// Domains need links from at least this many distinct users.
    pub min_domain_users: usize,
    /// Users need links to at least this many distinct domains.
    pub min_user_domains: usize,
}

impl Default for SocialFilterRules {
    fn default() -> Self {
        Self {
            min_user_tweets: 10,
            min_tweet_observations: 3,
            min_domain_users: 2,
            min_user_domains: 2,
        }
    }
}

/// Applies the four cleaning rules in order, repeating until no row is
/// removed. Rows whose domain is outside `domains` (or whose user is outside
/// `users`, when given) are dropped first.
///
/// A tweet's observation count sums, over distinct posting users, the largest
/// count recorded for that (user, tweet) pair, so a tweet linking several
/// domains is not counted once per domain.
pub fn filter_social_stream(
    mentions: &[SocialMention],
    users: Option<&BTreeSet<String>>,
    domains: &BTreeSet<String>,
    rules: SocialFilterRules,
) -> Vec<SocialMention> {
    let mut rows: Vec<&SocialMention> = mentions
        .iter()
        .filter(|m| domains.contains(&m.domain) && users.is_none_or(|u| u.contains(&m.user)))
        .collect();

    loop {
        let before = rows.len();

        let mut tweets_per_user: HashMap<&str, HashSet<&str>> = HashMap::new();
        for m in &rows {
            tweets_per_user.entry(&m.user).or_default().insert(&m.tweet_id);
        }
        rows.retain(|m| tweets_per_user[m.user.as_str()].len() >= rules.min_user_tweets);

        let mut per_pair: HashMap<(&str, &str), u64> = HashMap::new();
        for m in &rows {
            let c = per_pair.entry((&m.tweet_id, &m.user)).or_insert(0);
            *c = (*c).max(m.count);
        }
        let mut observations: HashMap<&str, u64> = HashMap::new();
        for ((tweet, _), c) in per_pair {
            *observations.entry(tweet).or_insert(0) += c;
        }
        rows.retain(|m| observations[m.tweet_id.as_str()] >= rules.min_tweet_observations);

        let mut users_per_domain: HashMap<&str, HashSet<&str>> = HashMap::new();
        for m in &rows {
            users_per_domain.entry(&m.domain).or_default().insert(&m.user);
        }
        rows.retain(|m| users_per_domain[m.domain.as_str()].len() >= rules.min_domain_users);

        let mut domains_per_user: HashMap<&str, HashSet<&str>> = HashMap::new();
        for m in &rows {
            domains_per_user.entry(&m.user).or_default().insert(&m.domain);
        }
        rows.retain(|m| domains_per_user[m.user.as_str()].len() >= rules.min_user_domains);

        if rows.len() == before {
            break;
        }
    }
    let mut out: Vec<SocialMention> = rows.into_iter().cloned().collect();
    out.sort();
    out
}

/// Distinct (user, domain) pairs with summed observation counts.
pub fn user_domain_weights(rows: &[SocialMention]) -> BTreeMap<(String, String), u64> {
    let mut m = BTreeMap::new();
    for r in rows {
        *m.entry((r.user.clone(), r.domain.clone())).or_insert(0) += r.count;
    }
    m
}
