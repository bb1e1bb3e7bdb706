//! Seeded synthetic snapshot generation.
//!
//! Day `t` announces `B(t) = round(base + trend * t + noise)` country prefixes.
//! Active drop events keep a fraction `1 - magnitude` of them on every peer and
//! leave the rest on peer 0 alone; raise events (negative magnitude) add
//! prefixes announced by every peer.

use std::fmt::Write as _;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use ipnet::Ipv4Net;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UPSTREAMS: [u32; 4] = [3561, 174, 3549, 3257];
const TRANSIT_AS: u32 = 9498;
const FIRST_ORIGIN_AS: u32 = 45528;
const ORIGIN_AS_COUNT: u32 = 4;
const FOREIGN_ORIGIN_AS: u32 = 2914;
const FIRST_PEER_AS: u32 = 64512;
/// /24 blocks available inside 10.0.0.0/8.
const MAX_PREFIXES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Step,
    Spike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedEvent {
    /// 0-based day index.
    pub start: usize,
    pub duration: usize,
    /// Fraction removed from the common pool; negative values add prefixes.
    pub magnitude: f64,
    pub kind: EventKind,
}

impl InjectedEvent {
    pub fn covers(&self, day: usize) -> bool {
        day >= self.start && day < self.start + self.duration
    }
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 1, 1).unwrap()
}

fn default_country() -> String {
    "IN".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub days: usize,
    pub peers: usize,
    pub base: f64,
    #[serde(default)]
    pub trend: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub events: Vec<InjectedEvent>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
    #[serde(default = "default_country")]
    pub country: String,
    /// Prefixes of another country, announced by every peer on every day.
    #[serde(default)]
    pub foreign_prefixes: usize,
}

impl FixtureSpec {
    pub fn new(days: usize, peers: usize, base: f64) -> Self {
        FixtureSpec {
            days,
            peers,
            base,
            trend: 0.0,
            noise_sigma: 0.0,
            events: Vec::new(),
            seed: 0,
            start_date: default_start_date(),
            country: default_country(),
            foreign_prefixes: 0,
        }
    }

    /// Reads a TOML spec.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.days == 0 || self.peers == 0 {
            return bad("fixture needs at least one day and one peer".into());
        }
        if self.peers > 250 {
            return bad(format!(
                "{} peers exceed the 250 next-hop addresses",
                self.peers
            ));
        }
        if !(self.base.is_finite() && self.base >= 0.0) || !self.trend.is_finite() {
            return bad("base and trend must be finite, base non-negative".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!(
                "noise sigma {} must be non-negative",
                self.noise_sigma
            ));
        }
        if self.country.len() != 2 || !self.country.bytes().all(|b| b.is_ascii_uppercase()) {
            return bad(format!(
                "country code {:?} is not two uppercase letters",
                self.country
            ));
        }
        for e in &self.events {
            if e.duration == 0
                || !e.magnitude.is_finite()
                || e.magnitude > 1.0
                || e.magnitude < -10.0
            {
                return bad(format!("invalid injected event {e:?}"));
            }
        }
        if self.foreign_prefixes > MAX_PREFIXES {
            return bad(format!(
                "{} foreign prefixes exceed {MAX_PREFIXES}",
                self.foreign_prefixes
            ));
        }
        Ok(())
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + Days::new(day as u64)
    }
}

fn country_prefix(i: usize) -> Ipv4Net {
    Ipv4Net::new(Ipv4Addr::from(0x0A00_0000u32 + ((i as u32) << 8)), 24).unwrap()
}

fn foreign_prefix(i: usize) -> Ipv4Net {
    Ipv4Net::new(Ipv4Addr::from(0x0B00_0000u32 + ((i as u32) << 8)), 24).unwrap()
}

fn next_hop(peer: usize) -> Ipv4Addr {
    Ipv4Addr::new(192, 0, 2, peer as u8 + 1)
}

/// Country prefix counts per day: `(announced by every peer, peer 0 only)`.
pub fn daily_pools(spec: &FixtureSpec) -> Result<Vec<(usize, usize)>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise =
        Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    (0..spec.days)
        .map(|t| {
            let b = (spec.base + spec.trend * t as f64 + noise.sample(&mut rng))
                .round()
                .max(0.0);
            let mut common = b;
            let mut extra = 0.0;
            for e in spec.events.iter().filter(|e| e.covers(t)) {
                if e.magnitude >= 0.0 {
                    common *= 1.0 - e.magnitude;
                } else {
                    extra += b * -e.magnitude;
                }
            }
            let common = common.round() as usize;
            let total = b as usize;
            let all = common + extra.round() as usize;
            let only_first = total - common.min(total);
            if all + only_first > MAX_PREFIXES {
                return Err(Error::InvalidInput(format!(
                    "day {t} needs {} prefixes, more than {MAX_PREFIXES}",
                    all + only_first
                )));
            }
            Ok((all, only_first))
        })
        .collect()
}

/// Canonical-TSV text of every day, in date order.
pub fn render_fixture(spec: &FixtureSpec) -> Result<Vec<(NaiveDate, String)>> {
    let pools = daily_pools(spec)?;
    // "\t<next hop>\t<peer AS> <upstream> " per peer
    let peer_cols: Vec<String> = (0..spec.peers)
        .map(|p| {
            format!(
                "\t{}\t{} {} ",
                next_hop(p),
                FIRST_PEER_AS + p as u32,
                UPSTREAMS[p % UPSTREAMS.len()]
            )
        })
        .collect();
    let foreign: Vec<String> = (0..spec.foreign_prefixes)
        .map(|i| foreign_prefix(i).to_string())
        .collect();
    Ok(pools
        .into_iter()
        .enumerate()
        .map(|(t, (all, only_first))| {
            let mut text = String::with_capacity((all * spec.peers + only_first) * 48);
            for i in 0..all + only_first {
                let prefix = country_prefix(i).to_string();
                let tail = format!(
                    "{TRANSIT_AS} {}\n",
                    FIRST_ORIGIN_AS + i as u32 % ORIGIN_AS_COUNT
                );
                let peers = if i < all { spec.peers } else { 1 };
                for cols in &peer_cols[..peers] {
                    text.push_str(&prefix);
                    text.push_str(cols);
                    text.push_str(&tail);
                }
            }
            for prefix in &foreign {
                for cols in &peer_cols {
                    text.push_str(prefix);
                    text.push_str(cols);
                    let _ = writeln!(text, "{FOREIGN_ORIGIN_AS}");
                }
            }
            (spec.date(t), text)
        })
        .collect())
}

/// Delegated-stats text listing the fixture's country and foreign ASNs.
pub fn delegation_text(spec: &FixtureSpec) -> String {
    let foreign = if spec.country == "JP" { "US" } else { "JP" };
    format!(
        "2|apnic|20121231|3|19830613|20121231|+1000\n\
         apnic|*|asn|*|3|summary\n\
         apnic|{c}|asn|{TRANSIT_AS}|1|19950101|allocated\n\
         apnic|{c}|asn|{FIRST_ORIGIN_AS}|{ORIGIN_AS_COUNT}|20090101|allocated\n\
         apnic|{foreign}|asn|{FOREIGN_ORIGIN_AS}|1|19970101|allocated\n",
        c = spec.country
    )
}

/// Paths written by [`generate_fixture`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureFiles {
    pub snapshots: Vec<PathBuf>,
    pub delegation: PathBuf,
}

pub const DELEGATION_FILE_NAME: &str = "delegated.txt";

/// Writes `<date>.tsv` snapshots and a delegation file into `dir`.
pub fn generate_fixture(spec: &FixtureSpec, dir: &Path) -> Result<FixtureFiles> {
    let days = render_fixture(spec)?;
    fs::create_dir_all(dir)?;
    let mut snapshots = Vec::with_capacity(days.len());
    for (date, text) in days {
        let path = dir.join(format!("{}.tsv", date.format("%Y-%m-%d")));
        fs::write(&path, text)?;
        snapshots.push(path);
    }
    let delegation = dir.join(DELEGATION_FILE_NAME);
    fs::write(&delegation, delegation_text(spec))?;
    Ok(FixtureFiles {
        snapshots,
        delegation,
    })
}
