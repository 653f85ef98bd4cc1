//! Generalized entanglement-ranking-based link matching.
//!
//! All links of a round are merged into one list sorted by descending
//! `p_no_error`. The head of the list is paired with the first link further
//! down that belongs to a different client it is allowed to connect to.
//! Both are removed and the scan restarts from the new head. A head with no
//! admissible partner left is discarded, since unused links never carry over
//! to the next round.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::RankedLink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub u32);

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unordered client pairs the switch is asked to connect.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConnectionSet {
    allowed: BTreeSet<(ClientId, ClientId)>,
}

impl ConnectionSet {
    pub fn new(pairs: impl IntoIterator<Item = (ClientId, ClientId)>) -> Result<Self> {
        let mut allowed = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::Domain(format!("client {a} cannot connect to itself")));
            }
            allowed.insert((a.min(b), a.max(b)));
        }
        Ok(Self { allowed })
    }

    /// Every client connected to `hub`.
    pub fn star(hub: ClientId, spokes: impl IntoIterator<Item = ClientId>) -> Result<Self> {
        Self::new(spokes.into_iter().map(|c| (c, hub)))
    }

    pub fn allows(&self, a: ClientId, b: ClientId) -> bool {
        a != b && self.allowed.contains(&(a.min(b), a.max(b)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (ClientId, ClientId)> + '_ {
        self.allowed.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    pub fn involves(&self, c: ClientId) -> bool {
        self.allowed.iter().any(|&(a, b)| a == c || b == c)
    }
}

/// One client's ranked links for the current round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientRound {
    pub client: ClientId,
    pub links: Vec<RankedLink>,
}

/// A link identified by its owner, its rank within the owner's round
/// (0-based) and its generation index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkRef {
    pub client: ClientId,
    pub rank: usize,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    /// Pairs in the order they were formed.
    pub pairs: Vec<(LinkRef, LinkRef)>,
    pub unmatched: Vec<LinkRef>,
}

impl Matching {
    /// Pairs oriented lower client first and sorted, for order-free comparison.
    pub fn normalized(&self) -> (Vec<(LinkRef, LinkRef)>, Vec<LinkRef>) {
        let mut pairs: Vec<_> = self
            .pairs
            .iter()
            .map(|&(a, b)| if a.client <= b.client { (a, b) } else { (b, a) })
            .collect();
        pairs.sort();
        let mut unmatched = self.unmatched.clone();
        unmatched.sort();
        (pairs, unmatched)
    }

    /// Checks the structural invariants against `connections`.
    pub fn validate(&self, connections: &ConnectionSet) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.pairs {
            if a.client == b.client {
                return Err(Error::Domain(format!("same-client pair on client {}", a.client)));
            }
            if !connections.allows(a.client, b.client) {
                return Err(Error::Domain(format!("pair {}-{} is not an allowed connection", a.client, b.client)));
            }
            for l in [a, b] {
                if !seen.insert((l.client, l.index)) {
                    return Err(Error::Domain(format!("link {:?} used twice", l)));
                }
            }
        }
        for l in &self.unmatched {
            if !seen.insert((l.client, l.index)) {
                return Err(Error::Domain(format!("link {:?} used twice", l)));
            }
        }
        Ok(())
    }
}

struct Entry {
    link: LinkRef,
    p_no_error: f64,
}

/// Merges the rounds of several clients into one list, best first. Ties go
/// to the lower client id, then the lower generation index.
fn merge(rounds: &[&ClientRound]) -> Vec<Entry> {
    let mut merged: Vec<Entry> = rounds
        .iter()
        .flat_map(|r| {
            r.links.iter().enumerate().map(move |(rank, l)| Entry {
                link: LinkRef {
                    client: r.client,
                    rank,
                    index: l.index,
                },
                p_no_error: l.outcome.p_no_error,
            })
        })
        .collect();
    merged.sort_by(|a, b| {
        b.p_no_error
            .total_cmp(&a.p_no_error)
            .then(a.link.client.cmp(&b.link.client))
            .then(a.link.index.cmp(&b.link.index))
    });
    merged
}

pub fn germ_match(rounds: &[ClientRound], connections: &ConnectionSet) -> Matching {
    let refs: Vec<&ClientRound> = rounds.iter().collect();
    let merged = merge(&refs);
    let mut alive = vec![true; merged.len()];
    let mut matching = Matching::default();
    let mut head = 0;
    loop {
        while head < merged.len() && !alive[head] {
            head += 1;
        }
        if head == merged.len() {
            break;
        }
        alive[head] = false;
        let a = merged[head].link;
        let partner = (head + 1..merged.len())
            .find(|&i| alive[i] && connections.allows(a.client, merged[i].link.client));
        match partner {
            Some(i) => {
                alive[i] = false;
                matching.pairs.push((a, merged[i].link));
            }
            None => matching.unmatched.push(a),
        }
    }
    matching
}

/// Data-center specialization: the data center's links are ranked on their
/// own, everyone else's links together, and the two lists are paired rank by
/// rank.
pub fn match_datacenter(dc: &ClientRound, clients: &[ClientRound]) -> Matching {
    let refs: Vec<&ClientRound> = clients.iter().collect();
    let merged = merge(&refs);
    let dc_links = merge(&[dc]);
    let n = merged.len().min(dc_links.len());
    let mut matching = Matching::default();
    for r in 0..n {
        matching.pairs.push((merged[r].link, dc_links[r].link));
    }
    matching.unmatched.extend(merged[n..].iter().map(|e| e.link));
    matching.unmatched.extend(dc_links[n..].iter().map(|e| e.link));
    matching
}
