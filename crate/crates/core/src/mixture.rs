//! Proportional interleaving of example streams.
//!
//! The schedule is deterministic: after `n` items every component `i` has
//! contributed within one item of `n * w_i / sum(w)`. Items within a
//! component keep their file order unless shuffling is requested.

use std::collections::HashSet;
use std::fs::File;
use std::io::BufReader;
use std::iter::Peekable;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::jsonl::{self, JsonlReader};
use crate::mask::{sentence_seed, MaskedExample};

/// A positive rational weight. Accepts integers, decimals and `p/q` strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Weight(pub Ratio<u64>);

impl Weight {
    pub fn integer(n: u64) -> Self {
        Weight(Ratio::from_integer(n))
    }
}

impl FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Mixture(format!("invalid weight {s:?}"));
        let ratio = if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let denom = 10u64.pow(frac.len() as u32);
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            let numer = int
                .checked_mul(denom)
                .and_then(|v| v.checked_add(frac))
                .ok_or_else(bad)?;
            Ratio::new(numer, denom)
        } else {
            Ratio::<u64>::from_str(s).map_err(|_| bad())?
        };
        if ratio == Ratio::from_integer(0) {
            return Err(Error::Mixture(format!(
                "weight must be positive, got {s:?}"
            )));
        }
        Ok(Weight(ratio))
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Str(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Int(n) => n.to_string(),
            Raw::Float(f) => f.to_string(),
            Raw::Str(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixMode {
    /// Stop as soon as a scheduled component has nothing left.
    #[default]
    Exact,
    /// Cycle finished components until every component has been emitted in full.
    Exhaust,
}

impl FromStr for MixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MixMode::Exact),
            "exhaust" => Ok(MixMode::Exhaust),
            other => Err(Error::Mixture(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixComponent {
    pub name: String,
    pub path: PathBuf,
    /// Defaults to the component's example count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Weight>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixComponent>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: MixMode,
    /// Drop examples whose (inputs, targets) pair was already emitted.
    #[serde(default)]
    pub dedup_inputs: bool,
    /// Shuffle each component under the seed. Loads components into memory.
    #[serde(default)]
    pub shuffle: bool,
}

impl MixtureSpec {
    /// Reads a TOML spec. Relative component paths resolve against the
    /// spec's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: MixtureSpec = toml::from_str(&text)
            .map_err(|e| Error::Mixture(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for c in &mut spec.components {
            if c.path.is_relative() {
                c.path = base.join(&c.path);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Mixture("at least one component is required".into()));
        }
        let mut names = HashSet::new();
        for c in &self.components {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Mixture(format!(
                    "duplicate component name {:?}",
                    c.name
                )));
            }
        }
        Ok(())
    }
}

/// Deadline-ordered apportionment schedule over integer weights.
///
/// At step `n` a component is eligible while its count is below
/// `n * w_i / W`; among eligible components the one whose next item is due
/// earliest (smallest `(count + 1) / w_i`) is chosen, lowest index on ties.
/// Every prefix stays strictly within one item of its exact share.
#[derive(Debug, Clone)]
pub struct Apportionment {
    weights: Vec<u128>,
    total: u128,
    counts: Vec<u128>,
    step: u128,
    active: Vec<bool>,
}

impl Apportionment {
    pub fn new(weights: &[u128]) -> Result<Self> {
        if weights.is_empty() || weights.contains(&0) {
            return Err(Error::Mixture(
                "weights must be non-empty and positive".into(),
            ));
        }
        let total = weights
            .iter()
            .try_fold(0u128, |acc, &w| acc.checked_add(w))
            .ok_or_else(|| Error::Mixture("weights overflow".into()))?;
        Ok(Apportionment {
            weights: weights.to_vec(),
            total,
            counts: vec![0; weights.len()],
            step: 0,
            active: vec![true; weights.len()],
        })
    }

    /// Integer weights proportional to the given rationals.
    pub fn from_ratios(weights: &[Weight]) -> Result<Self> {
        let overflow = || Error::Mixture("weights too large to combine exactly".into());
        let lcm = weights.iter().try_fold(1u128, |acc, w| {
            let d = *w.0.denom() as u128;
            let g = gcd(acc, d);
            acc.checked_mul(d / g).ok_or_else(overflow)
        })?;
        let ints = weights
            .iter()
            .map(|w| {
                (*w.0.numer() as u128)
                    .checked_mul(lcm / *w.0.denom() as u128)
                    .ok_or_else(overflow)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&ints)
    }

    pub fn counts(&self) -> &[u128] {
        &self.counts
    }

    /// Removes a component from future slots; remaining shares renormalise.
    pub fn retire(&mut self, idx: usize) {
        if self.active[idx] {
            self.active[idx] = false;
            self.total -= self.weights[idx];
            self.step = 0;
            for (i, c) in self.counts.iter_mut().enumerate() {
                if self.active[i] {
                    *c = 0;
                }
            }
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Iterator for Apportionment {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        self.step += 1;
        let mut best: Option<usize> = None;
        for i in 0..self.weights.len() {
            if !self.active[i] || self.counts[i] * self.total >= self.step * self.weights[i] {
                continue;
            }
            best = match best {
                // (c_i + 1) / w_i < (c_b + 1) / w_b
                Some(b)
                    if (self.counts[i] + 1) * self.weights[b]
                        >= (self.counts[b] + 1) * self.weights[i] =>
                {
                    Some(b)
                }
                _ => Some(i),
            };
        }
        let chosen = best.expect("some component is always behind its share");
        self.counts[chosen] += 1;
        Some(chosen)
    }
}

type ExampleReader = JsonlReader<BufReader<File>, MaskedExample>;

enum Source {
    Stream(Peekable<ExampleReader>),
    Memory(std::vec::IntoIter<MaskedExample>, Vec<MaskedExample>),
}

struct ComponentState {
    name: String,
    path: PathBuf,
    source: Source,
    finished_once: bool,
}

impl ComponentState {
    fn open(component: &MixComponent, shuffle_seed: Option<u64>) -> Result<Self> {
        let source = match shuffle_seed {
            None => {
                let mut reader = JsonlReader::open(&component.path)?.peekable();
                if reader.peek().is_none() {
                    return Err(Error::EmptyComponent(component.name.clone()));
                }
                Source::Stream(reader)
            }
            Some(seed) => {
                let mut items: Vec<MaskedExample> = jsonl::read_all(&component.path)?;
                if items.is_empty() {
                    return Err(Error::EmptyComponent(component.name.clone()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(sentence_seed(seed, &component.name));
                items.shuffle(&mut rng);
                Source::Memory(items.clone().into_iter(), items)
            }
        };
        Ok(ComponentState {
            name: component.name.clone(),
            path: component.path.clone(),
            source,
            finished_once: false,
        })
    }

    fn pull(&mut self) -> Option<Result<MaskedExample>> {
        match &mut self.source {
            Source::Stream(r) => r.next().map(|item| item.map(|(_, ex)| ex)),
            Source::Memory(it, _) => it.next().map(Ok),
        }
    }

    fn is_drained(&mut self) -> bool {
        match &mut self.source {
            Source::Stream(r) => r.peek().is_none(),
            Source::Memory(it, _) => it.len() == 0,
        }
    }

    fn rewind(&mut self) -> Result<()> {
        match &mut self.source {
            Source::Stream(r) => *r = JsonlReader::open(&self.path)?.peekable(),
            Source::Memory(it, all) => *it = all.clone().into_iter(),
        }
        Ok(())
    }
}

/// Counts non-blank lines, i.e. records, in a jsonl file.
pub fn count_records(path: &Path) -> Result<u64> {
    use std::io::BufRead;
    let mut n = 0;
    for line in jsonl::open(path)?.lines() {
        if !line.map_err(|e| Error::io(path, e))?.trim().is_empty() {
            n += 1;
        }
    }
    Ok(n)
}

/// The interleaved stream produced by [`mix`].
pub struct Mixer {
    components: Vec<ComponentState>,
    schedule: Apportionment,
    mode: MixMode,
    seen: Option<HashSet<[u8; 16]>>,
    done: bool,
    /// Duplicates dropped so far.
    pub duplicates: u64,
}

impl Mixer {
    pub fn component_names(&self) -> Vec<&str> {
        self.components.iter().map(|c| c.name.as_str()).collect()
    }

    fn is_new(&mut self, ex: &MaskedExample) -> bool {
        let Some(seen) = &mut self.seen else {
            return true;
        };
        let mut h = Sha256::new();
        h.update(ex.inputs.as_bytes());
        h.update([0]);
        h.update(ex.targets.as_bytes());
        let key: [u8; 16] = h.finalize()[..16].try_into().expect("digest is 32 bytes");
        seen.insert(key)
    }

    fn next_item(&mut self) -> Option<Result<MaskedExample>> {
        loop {
            if self.done {
                return None;
            }
            let Some(i) = self.schedule.next() else {
                self.done = true;
                return None;
            };
            loop {
                if self.components[i].is_drained() {
                    if self.mode == MixMode::Exact {
                        self.done = true;
                        return None;
                    }
                    if self.seen.is_some() {
                        // Every repeat would be dropped as a duplicate.
                        self.schedule.retire(i);
                        break;
                    }
                    if let Err(e) = self.components[i].rewind() {
                        self.done = true;
                        return Some(Err(e));
                    }
                }
                let item = match self.components[i].pull()? {
                    Ok(item) => item,
                    Err(e) => {
                        self.done = true;
                        return Some(Err(e));
                    }
                };
                if self.components[i].is_drained() {
                    self.components[i].finished_once = true;
                    if self.mode == MixMode::Exhaust
                        && self.components.iter().all(|c| c.finished_once)
                    {
                        self.done = true;
                    }
                }
                if self.is_new(&item) {
                    return Some(Ok(item));
                }
                self.duplicates += 1;
                if self.done {
                    return None;
                }
            }
        }
    }
}

impl Iterator for Mixer {
    type Item = Result<MaskedExample>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_item()
    }
}

/// Opens every component and returns the interleaved stream.
pub fn mix(spec: &MixtureSpec) -> Result<Mixer> {
    spec.validate()?;
    let mut weights = Vec::with_capacity(spec.components.len());
    for c in &spec.components {
        weights.push(match c.weight {
            Some(w) => w,
            None => match count_records(&c.path)? {
                0 => return Err(Error::EmptyComponent(c.name.clone())),
                n => Weight::integer(n),
            },
        });
    }
    let components = spec
        .components
        .iter()
        .map(|c| ComponentState::open(c, spec.shuffle.then_some(spec.seed)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Mixer {
        components,
        schedule: Apportionment::from_ratios(&weights)?,
        mode: spec.mode,
        seen: spec.dedup_inputs.then(HashSet::new),
        done: false,
        duplicates: 0,
    })
}

/// Mixes into a jsonl file and returns the number of examples written.
pub fn mix_to_path(spec: &MixtureSpec, out: &Path) -> Result<u64> {
    let mut writer = jsonl::create(out)?;
    for item in mix(spec)? {
        writer.write(&item?)?;
    }
    let n = writer.written();
    writer.finish()?;
    Ok(n)
}
