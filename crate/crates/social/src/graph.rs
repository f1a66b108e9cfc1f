//! Social graph construction: per-user correspondent degrees drawn from the
//! reference distribution, reciprocal stub matching biased toward mined
//! relationships, synthesized international numbers, and a planted
//! interaction-propensity rank over each phonebook.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;

use cdrkit_core::config::SocialConfig;
use cdrkit_core::io::IoError;
use cdrkit_refdata::RefStats;

use crate::identity::PhoneIdentity;
use crate::relationships::Relationships;
use crate::SocialError;

/// Correspondent categories, by interaction direction with the owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    /// Local correspondent with traffic both ways.
    Both,
    /// Local correspondent the owner only initiates toward.
    Out,
    /// Local correspondent who only initiates toward the owner.
    In,
    /// International number; always a leaf in the graph.
    Inter,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Both, Category::Out, Category::In, Category::Inter];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Both => "both",
            Category::Out => "out",
            Category::In => "in",
            Category::Inter => "inter",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Degrees {
    pub inter: u32,
    pub out: u32,
    pub incoming: u32,
    pub both: u32,
}

impl Degrees {
    pub fn total(&self) -> u32 {
        self.inter + self.out + self.incoming + self.both
    }
}

/// Draw each user's correspondent count from the reference distribution and
/// split it across categories by the reference category shares.
pub fn sample_degrees(stats: &RefStats, n_users: u32, rng: &mut impl Rng) -> Vec<Degrees> {
    let mut shares = stats.category_means;
    let total: f64 = shares.iter().sum();
    if total <= 0.0 {
        shares = [0.0, 0.0, 0.0, 1.0];
    }
    let cum: Vec<f64> = shares
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let top = *cum.last().unwrap();

    (0..n_users)
        .map(|_| {
            let count = stats.sample_corr_count(rng);
            let mut d = Degrees::default();
            for _ in 0..count {
                let u = rng.gen::<f64>() * top;
                match cum.iter().position(|&c| u < c).unwrap_or(3) {
                    0 => d.inter += 1,
                    1 => d.out += 1,
                    2 => d.incoming += 1,
                    _ => d.both += 1,
                }
            }
            d
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhonebookEntry {
    pub category: Category,
    pub correspondent: String,
    /// Local peer user id; None for international numbers.
    pub peer: Option<u32>,
    /// 1-based; the highest rank is the most-contacted correspondent.
    pub rank: u32,
}

#[derive(Debug, Default)]
pub struct GraphAudit {
    /// Requested degrees after parity repair; the audit baseline.
    pub requested: Vec<Degrees>,
    /// Category degree decrements needed to make the stub sums matchable.
    pub parity_repairs: u32,
    /// Stubs left unmatched after all passes, dropped from the graph.
    pub dropped_stubs: u32,
    /// How often the partner drawn from the preferred relationship category
    /// was available, vs. falling back to any open user.
    pub preferred_hits: u64,
    pub preferred_draws: u64,
}

pub struct SocialGraph {
    pub phonebooks: Vec<Vec<PhonebookEntry>>,
    pub audit: GraphAudit,
}

/// Relationship preference drawn per stub: friend, colleague, neighbor, any.
fn preference(cfg: &SocialConfig, rng: &mut impl Rng) -> usize {
    let w = [cfg.select_friend, cfg.select_colleague, cfg.select_neighbor, cfg.select_other];
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return 3;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        acc += wi;
        if u < acc {
            return i;
        }
    }
    3
}

/// Random edge splits tried before a stranded stub is given up on.
const REWIRE_ATTEMPTS: usize = 200;

struct Matcher<'a> {
    rel: &'a Relationships,
    /// Open stubs per user for the category being matched; in the one-way
    /// pass these are the incoming stubs.
    open: Vec<u32>,
    /// Already-connected pairs across all categories (no duplicate edges).
    connected: Vec<BTreeSet<u32>>,
}

impl Matcher<'_> {
    fn connect(&mut self, a: u32, b: u32) {
        self.connected[a as usize].insert(b);
        self.connected[b as usize].insert(a);
    }

    fn disconnect(&mut self, a: u32, b: u32) {
        self.connected[a as usize].remove(&b);
        self.connected[b as usize].remove(&a);
    }

    fn is_conn(&self, a: u32, b: u32) -> bool {
        self.connected[a as usize].contains(&b)
    }

    fn eligible(&self, u: u32, candidates: &[u32]) -> Vec<u32> {
        candidates
            .iter()
            .copied()
            .filter(|&v| v != u && self.open[v as usize] > 0 && !self.is_conn(u, v))
            .collect()
    }

    fn open_holders_except(&self, u: u32) -> Vec<u32> {
        (0..self.open.len() as u32)
            .filter(|&v| v != u && self.open[v as usize] > 0)
            .collect()
    }

    /// Partner for one of u's stubs, preferring the drawn relationship kind
    /// and falling back to the whole open population.
    fn pick(
        &self,
        u: u32,
        cfg: &SocialConfig,
        audit: &mut GraphAudit,
        rng: &mut impl Rng,
    ) -> Option<u32> {
        let pref = preference(cfg, rng);
        audit.preferred_draws += 1;
        let preferred: Vec<u32> = match pref {
            0 => self.eligible(u, &self.rel.friends_of(u).iter().copied().collect::<Vec<_>>()),
            1 => self.eligible(u, &self.rel.colleagues_of(u)),
            2 => self.eligible(u, &self.rel.neighbors_of(u)),
            _ => Vec::new(),
        };
        let pool = if !preferred.is_empty() {
            audit.preferred_hits += 1;
            preferred
        } else {
            if pref == 3 {
                audit.preferred_hits += 1;
            }
            let all: Vec<u32> = (0..self.open.len() as u32).collect();
            let fallback = self.eligible(u, &all);
            if fallback.is_empty() {
                return None;
            }
            fallback
        };
        Some(pool[rng.gen_range(0..pool.len())])
    }

    /// u and v hold open stubs but cannot pair (already connected). Split an
    /// existing undirected edge (a,b) into (u,a) and (v,b).
    fn rewire_both(
        &mut self,
        u: u32,
        v: u32,
        edges: &mut Vec<(u32, u32)>,
        rng: &mut impl Rng,
    ) -> bool {
        for _ in 0..REWIRE_ATTEMPTS {
            if edges.is_empty() {
                return false;
            }
            let k = rng.gen_range(0..edges.len());
            let (mut a, mut b) = edges[k];
            if rng.gen::<bool>() {
                std::mem::swap(&mut a, &mut b);
            }
            if a == u || a == v || b == u || b == v || self.is_conn(u, a) || self.is_conn(v, b) {
                continue;
            }
            edges.swap_remove(k);
            self.disconnect(a, b);
            self.connect(u, a);
            self.connect(v, b);
            edges.push((u, a));
            edges.push((v, b));
            return true;
        }
        false
    }

    /// u alone holds the remaining stubs. Absorb an existing edge: (a,b)
    /// becomes (u,a) and (u,b), consuming two of u's stubs.
    fn self_rewire_both(&mut self, u: u32, edges: &mut Vec<(u32, u32)>, rng: &mut impl Rng) -> bool {
        for _ in 0..REWIRE_ATTEMPTS {
            if edges.is_empty() {
                return false;
            }
            let k = rng.gen_range(0..edges.len());
            let (a, b) = edges[k];
            if a == u || b == u || self.is_conn(u, a) || self.is_conn(u, b) {
                continue;
            }
            edges.swap_remove(k);
            self.disconnect(a, b);
            self.connect(u, a);
            self.connect(u, b);
            edges.push((u, a));
            edges.push((u, b));
            return true;
        }
        false
    }

    /// Directed variant: (a→b) becomes (u→b) and (a→v), consuming u's
    /// outgoing stub and v's incoming stub.
    fn rewire_directed(
        &mut self,
        u: u32,
        v: u32,
        edges: &mut Vec<(u32, u32)>,
        rng: &mut impl Rng,
    ) -> bool {
        for _ in 0..REWIRE_ATTEMPTS {
            if edges.is_empty() {
                return false;
            }
            let k = rng.gen_range(0..edges.len());
            let (a, b) = edges[k];
            if b == u || a == v || self.is_conn(u, b) || self.is_conn(a, v) {
                continue;
            }
            edges.swap_remove(k);
            self.disconnect(a, b);
            self.connect(u, b);
            self.connect(a, v);
            edges.push((u, b));
            edges.push((a, v));
            return true;
        }
        false
    }

    /// (a→b) becomes (u→b) and (a→u): pairs u's own outgoing and incoming
    /// stubs off through a third edge.
    fn self_rewire_directed(
        &mut self,
        u: u32,
        edges: &mut Vec<(u32, u32)>,
        rng: &mut impl Rng,
    ) -> bool {
        for _ in 0..REWIRE_ATTEMPTS {
            if edges.is_empty() {
                return false;
            }
            let k = rng.gen_range(0..edges.len());
            let (a, b) = edges[k];
            if a == u || b == u || self.is_conn(u, b) || self.is_conn(a, u) {
                continue;
            }
            edges.swap_remove(k);
            self.disconnect(a, b);
            self.connect(u, b);
            self.connect(a, u);
            edges.push((u, b));
            edges.push((a, u));
            return true;
        }
        false
    }
}

/// Decrement one random positive entry so `sums` can be matched; logged.
fn repair<F: Fn(&mut Degrees) -> &mut u32>(
    degrees: &mut [Degrees],
    field: F,
    times: u64,
    audit: &mut GraphAudit,
    rng: &mut impl Rng,
) {
    for _ in 0..times {
        let holders: Vec<usize> = degrees
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                let mut d = **d;
                *field(&mut d) > 0
            })
            .map(|(i, _)| i)
            .collect();
        if holders.is_empty() {
            return;
        }
        let pick = holders[rng.gen_range(0..holders.len())];
        *field(&mut degrees[pick]) -= 1;
        audit.parity_repairs += 1;
    }
}

fn fresh_foreign_number(
    cfg: &SocialConfig,
    used: &mut BTreeSet<String>,
    rng: &mut impl Rng,
) -> String {
    loop {
        let mcc = &cfg.foreign_mccs[rng.gen_range(0..cfg.foreign_mccs.len())];
        let candidate = format!("{mcc}{:02}{:05}", rng.gen_range(0..100), rng.gen_range(0..100_000));
        if used.insert(candidate.clone()) {
            return candidate;
        }
    }
}

pub fn build_graph(
    degrees: &[Degrees],
    relationships: &Relationships,
    identities: &[PhoneIdentity],
    cfg: &SocialConfig,
    rng: &mut impl Rng,
) -> Result<SocialGraph, SocialError> {
    let n = degrees.len();
    if relationships.n_users() != n || identities.len() != n {
        return Err(SocialError::SizeMismatch {
            degrees: n,
            relationships: relationships.n_users(),
            identities: identities.len(),
        });
    }
    if cfg.foreign_mccs.is_empty() {
        return Err(SocialError::NoForeignMccs);
    }

    let mut audit = GraphAudit::default();
    let mut req: Vec<Degrees> = degrees.to_vec();

    // Both-ways stubs pair among themselves, so their sum must be even; each
    // outgoing stub consumes exactly one incoming stub elsewhere.
    let sum_both: u64 = req.iter().map(|d| d.both as u64).sum();
    repair(&mut req, |d| &mut d.both, sum_both % 2, &mut audit, rng);
    loop {
        let sum_out: u64 = req.iter().map(|d| d.out as u64).sum();
        let sum_in: u64 = req.iter().map(|d| d.incoming as u64).sum();
        if sum_out == sum_in {
            break;
        }
        if sum_out > sum_in {
            repair(&mut req, |d| &mut d.out, sum_out - sum_in, &mut audit, rng);
        } else {
            repair(&mut req, |d| &mut d.incoming, sum_in - sum_out, &mut audit, rng);
        }
    }

    let mut books: Vec<Vec<PhonebookEntry>> = vec![Vec::new(); n];
    let mut connected: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    let mut both_edges: Vec<(u32, u32)> = Vec::new();
    let mut one_way_edges: Vec<(u32, u32)> = Vec::new();

    // Reciprocal both-ways edges.
    {
        let mut m = Matcher {
            rel: relationships,
            open: req.iter().map(|d| d.both).collect(),
            connected,
        };
        for u in 0..n as u32 {
            while m.open[u as usize] > 0 {
                if let Some(v) = m.pick(u, cfg, &mut audit, rng) {
                    m.open[u as usize] -= 1;
                    m.open[v as usize] -= 1;
                    m.connect(u, v);
                    both_edges.push((u, v));
                    continue;
                }
                // Every remaining stub holder is already a correspondent of
                // u (or is u itself): split an existing edge instead.
                let holders = m.open_holders_except(u);
                let rewired = if holders.is_empty() {
                    m.open[u as usize] >= 2 && {
                        let ok = m.self_rewire_both(u, &mut both_edges, rng);
                        if ok {
                            m.open[u as usize] -= 2;
                        }
                        ok
                    }
                } else {
                    let v = holders[rng.gen_range(0..holders.len())];
                    let ok = m.rewire_both(u, v, &mut both_edges, rng);
                    if ok {
                        m.open[u as usize] -= 1;
                        m.open[v as usize] -= 1;
                    }
                    ok
                };
                if !rewired {
                    audit.dropped_stubs += m.open[u as usize];
                    m.open[u as usize] = 0;
                }
            }
        }
        connected = m.connected;
    }

    // One-way edges: u's outgoing stub consumes v's incoming stub.
    {
        let mut m = Matcher {
            rel: relationships,
            open: req.iter().map(|d| d.incoming).collect(),
            connected,
        };
        for u in 0..n as u32 {
            let mut remaining = req[u as usize].out;
            while remaining > 0 {
                if let Some(v) = m.pick(u, cfg, &mut audit, rng) {
                    remaining -= 1;
                    m.open[v as usize] -= 1;
                    m.connect(u, v);
                    one_way_edges.push((u, v));
                    continue;
                }
                let holders = m.open_holders_except(u);
                let rewired = if holders.is_empty() {
                    m.open[u as usize] > 0 && {
                        let ok = m.self_rewire_directed(u, &mut one_way_edges, rng);
                        if ok {
                            remaining -= 1;
                            m.open[u as usize] -= 1;
                        }
                        ok
                    }
                } else {
                    let v = holders[rng.gen_range(0..holders.len())];
                    let ok = m.rewire_directed(u, v, &mut one_way_edges, rng);
                    if ok {
                        remaining -= 1;
                        m.open[v as usize] -= 1;
                    }
                    ok
                };
                if !rewired {
                    audit.dropped_stubs += remaining;
                    remaining = 0;
                }
            }
        }
        // Incoming stubs nobody consumed (possible only after drops above).
        audit.dropped_stubs += m.open.iter().sum::<u32>();
    }

    for &(u, v) in &both_edges {
        push_pair(&mut books, identities, u, v, Category::Both, Category::Both);
    }
    for &(u, v) in &one_way_edges {
        push_pair(&mut books, identities, u, v, Category::Out, Category::In);
    }

    // International correspondents: fresh foreign numbers, leaves by
    // construction.
    let mut used: BTreeSet<String> = identities.iter().map(|i| i.phone.clone()).collect();
    for (u, r) in req.iter().enumerate() {
        for _ in 0..r.inter {
            let number = fresh_foreign_number(cfg, &mut used, rng);
            books[u].push(PhonebookEntry {
                category: Category::Inter,
                correspondent: number,
                peer: None,
                rank: 0,
            });
        }
    }

    assign_ranks(&mut books, cfg.zipf_exponent, rng);
    audit.requested = req;
    Ok(SocialGraph { phonebooks: books, audit })
}

fn push_pair(
    books: &mut [Vec<PhonebookEntry>],
    identities: &[PhoneIdentity],
    u: u32,
    v: u32,
    cat_u: Category,
    cat_v: Category,
) {
    books[u as usize].push(PhonebookEntry {
        category: cat_u,
        correspondent: identities[v as usize].phone.clone(),
        peer: Some(v),
        rank: 0,
    });
    books[v as usize].push(PhonebookEntry {
        category: cat_v,
        correspondent: identities[u as usize].phone.clone(),
        peer: Some(u),
        rank: 0,
    });
}

/// Plant the contact-frequency order: entries sorted by category closeness
/// (both, out, in, inter) get position weights 1/(i+1)^s, and a weighted
/// random permutation turns the weights into ranks. The most-contacted
/// correspondent carries the highest rank.
fn assign_ranks(books: &mut [Vec<PhonebookEntry>], exponent: f64, rng: &mut impl Rng) {
    for book in books.iter_mut() {
        book.sort_by(|a, b| {
            (a.category, &a.correspondent).cmp(&(b.category, &b.correspondent))
        });
        let n = book.len();
        // Sampling key u^(1/w) realizes weight-proportional order without
        // replacement; larger keys come first.
        let mut keyed: Vec<(f64, usize)> = book
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let w = 1.0 / ((i + 1) as f64).powf(exponent);
                (rng.gen::<f64>().max(1e-300).powf(1.0 / w), i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for (order, (_, idx)) in keyed.into_iter().enumerate() {
            book[idx].rank = (n - order) as u32;
        }
        book.sort_by_key(|e| std::cmp::Reverse(e.rank));
    }
}

pub const PHONEBOOK_HEADER: &str = "phone,category,correspondent_phone,rank";

pub fn write_phonebooks(
    path: &Path,
    identities: &[PhoneIdentity],
    books: &[Vec<PhonebookEntry>],
) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut f = std::io::BufWriter::new(file);
    let werr = |e| IoError::io(path, e);
    writeln!(f, "{PHONEBOOK_HEADER}").map_err(werr)?;
    for (u, book) in books.iter().enumerate() {
        for e in book {
            writeln!(
                f,
                "{},{},{},{}",
                identities[u].phone,
                e.category.as_str(),
                e.correspondent,
                e.rank
            )
            .map_err(werr)?;
        }
    }
    f.flush().map_err(werr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhonebookRow {
    pub category: Category,
    pub correspondent: String,
    pub rank: u32,
}

/// Phonebook rows grouped by owner phone, ranks descending per owner.
pub fn read_phonebooks(path: &Path) -> Result<BTreeMap<String, Vec<PhonebookRow>>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut out: BTreeMap<String, Vec<PhonebookRow>> = BTreeMap::new();
    for (ln, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        let line = line.trim_end();
        let bad = |msg: String| IoError::parse(path, ln + 1, msg);
        if ln == 0 {
            if line != PHONEBOOK_HEADER {
                return Err(bad(format!("expected header `{PHONEBOOK_HEADER}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let [phone, cat, corr, rank] = parts[..] else {
            return Err(bad("expected 4 fields".into()));
        };
        let category = Category::parse(cat).ok_or_else(|| bad(format!("bad category `{cat}`")))?;
        let rank: u32 = rank.parse().map_err(|_| bad(format!("bad rank `{rank}`")))?;
        out.entry(phone.to_string()).or_default().push(PhonebookRow {
            category,
            correspondent: corr.to_string(),
            rank,
        });
    }
    for rows in out.values_mut() {
        rows.sort_by_key(|r| std::cmp::Reverse(r.rank));
    }
    Ok(out)
}
