//! River crossing with agent/actor couples.
//!
//! `N` couples start on the left bank with the boat. An actor may never be in
//! the same place as a foreign agent unless its own agent is also there. The
//! boat holds at most `k` people and never crosses empty.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ConfigError, MoveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Agent,
    Actor,
}

/// One traveler, identified as `A_i` (agent of couple `i`) or `a_i` (actor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Person {
    pub couple: u32,
    pub role: Role,
}

impl Person {
    pub fn agent(couple: u32) -> Self {
        Person { couple, role: Role::Agent }
    }

    pub fn actor(couple: u32) -> Self {
        Person { couple, role: Role::Actor }
    }
}

impl fmt::Display for Person {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.role {
            Role::Agent => 'A',
            Role::Actor => 'a',
        };
        write!(f, "{letter}_{}", self.couple)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a person id: {0:?} (expected A_<i> or a_<i> with i >= 1)")]
pub struct PersonIdError(pub String);

impl FromStr for Person {
    type Err = PersonIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PersonIdError(s.to_string());
        let (letter, index) = s.split_once('_').ok_or_else(err)?;
        let role = match letter {
            "A" => Role::Agent,
            "a" => Role::Actor,
            _ => return Err(err()),
        };
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) || index.starts_with('0') {
            return Err(err());
        }
        let couple = index.parse().map_err(|_| err())?;
        Ok(Person { couple, role })
    }
}

impl Serialize for Person {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Person {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyScope {
    BanksOnly,
    #[default]
    BanksAndBoat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRiverConfig")]
pub struct RiverConfig {
    n_pairs: usize,
    boat_capacity: usize,
    safety_scope: SafetyScope,
}

#[derive(Deserialize)]
struct RawRiverConfig {
    n_pairs: usize,
    boat_capacity: usize,
    #[serde(default)]
    safety_scope: SafetyScope,
}

impl TryFrom<RawRiverConfig> for RiverConfig {
    type Error = ConfigError;

    fn try_from(raw: RawRiverConfig) -> Result<Self, Self::Error> {
        RiverConfig::with_scope(raw.n_pairs, raw.boat_capacity, raw.safety_scope)
    }
}

impl RiverConfig {
    pub fn new(n_pairs: usize, boat_capacity: usize) -> Result<Self, ConfigError> {
        Self::with_scope(n_pairs, boat_capacity, SafetyScope::default())
    }

    pub fn with_scope(n_pairs: usize, boat_capacity: usize, safety_scope: SafetyScope) -> Result<Self, ConfigError> {
        if n_pairs == 0 {
            return Err(ConfigError::Invalid("River needs at least one couple".into()));
        }
        if boat_capacity == 0 {
            return Err(ConfigError::Invalid("boat capacity must be at least 1".into()));
        }
        Ok(Self { n_pairs, boat_capacity, safety_scope })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn boat_capacity(&self) -> usize {
        self.boat_capacity
    }

    pub fn safety_scope(&self) -> SafetyScope {
        self.safety_scope
    }

    pub fn persons(&self) -> impl Iterator<Item = Person> {
        (1..=self.n_pairs as u32).flat_map(|i| [Person::agent(i), Person::actor(i)])
    }

    pub fn initial_state(&self) -> RiverState {
        let all = CoupleSet::full(self.n_pairs);
        RiverState { agents_left: all.clone(), actors_left: all, boat: Side::Left }
    }

    pub fn goal_state(&self) -> RiverState {
        RiverState { agents_left: CoupleSet::default(), actors_left: CoupleSet::default(), boat: Side::Right }
    }

    pub fn is_goal(&self, state: &RiverState) -> bool {
        state.agents_left.is_empty() && state.actors_left.is_empty()
    }

    fn knows(&self, p: &Person) -> bool {
        p.couple >= 1 && p.couple as usize <= self.n_pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Set of couple indices (1-based) packed into words; trailing zero words are
/// trimmed so equal sets compare and hash equal regardless of history.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct CoupleSet {
    words: Vec<u64>,
}

impl CoupleSet {
    fn full(n: usize) -> Self {
        let mut set = CoupleSet::default();
        for i in 1..=n as u32 {
            set.insert(i);
        }
        set
    }

    fn slot(couple: u32) -> (usize, u64) {
        let bit = couple as usize - 1;
        (bit / 64, 1u64 << (bit % 64))
    }

    fn insert(&mut self, couple: u32) {
        let (w, mask) = Self::slot(couple);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= mask;
    }

    fn remove(&mut self, couple: u32) {
        let (w, mask) = Self::slot(couple);
        if let Some(word) = self.words.get_mut(w) {
            *word &= !mask;
        }
        self.trim();
    }

    fn contains(&self, couple: u32) -> bool {
        let (w, mask) = Self::slot(couple);
        self.words.get(w).is_some_and(|word| word & mask != 0)
    }

    fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    fn complement_within(&self, n: usize) -> CoupleSet {
        let mut out = CoupleSet::full(n);
        for (o, w) in out.words.iter_mut().zip(&self.words) {
            *o &= !w;
        }
        out.trim();
        out
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            (0..64u32).filter(move |b| word & (1u64 << b) != 0).map(move |b| wi as u32 * 64 + b + 1)
        })
    }

    /// Smallest couple in `self` that is not in `other`.
    fn first_not_in(&self, other: &CoupleSet) -> Option<u32> {
        for (wi, &word) in self.words.iter().enumerate() {
            let rest = word & !other.words.get(wi).copied().unwrap_or(0);
            if rest != 0 {
                return Some(wi as u32 * 64 + rest.trailing_zeros() + 1);
            }
        }
        None
    }
}

/// First actor left with a foreign agent and without its own agent, if any.
fn unsafe_actor(agents: &CoupleSet, actors: &CoupleSet) -> Option<Person> {
    if agents.is_empty() {
        return None;
    }
    actors.first_not_in(agents).map(Person::actor)
}

/// True iff every actor in the group either has its own agent present or
/// shares the group with no agent at all.
pub fn is_safe<'a>(group: impl IntoIterator<Item = &'a Person>) -> bool {
    let mut agents = CoupleSet::default();
    let mut actors = CoupleSet::default();
    for p in group {
        if p.couple == 0 {
            continue;
        }
        match p.role {
            Role::Agent => agents.insert(p.couple),
            Role::Actor => actors.insert(p.couple),
        }
    }
    unsafe_actor(&agents, &actors).is_none()
}

/// Who is on the left bank and where the boat is. The right bank is the
/// complement of the left bank within the instance's persons.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RiverState {
    agents_left: CoupleSet,
    actors_left: CoupleSet,
    boat: Side,
}

impl RiverState {
    pub fn boat(&self) -> Side {
        self.boat
    }

    pub fn is_left(&self, p: &Person) -> bool {
        match p.role {
            Role::Agent => self.agents_left.contains(p.couple),
            Role::Actor => self.actors_left.contains(p.couple),
        }
    }

    pub fn side_of(&self, p: &Person) -> Side {
        if self.is_left(p) {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Left-bank roster in canonical `(couple, role)` order.
    pub fn left_bank(&self) -> Vec<Person> {
        merge_roster(&self.agents_left, &self.actors_left)
    }

    pub fn right_bank(&self, config: &RiverConfig) -> Vec<Person> {
        let n = config.n_pairs;
        merge_roster(&self.agents_left.complement_within(n), &self.actors_left.complement_within(n))
    }

    fn bank(&self, side: Side, config: &RiverConfig) -> Vec<Person> {
        match side {
            Side::Left => self.left_bank(),
            Side::Right => self.right_bank(config),
        }
    }

    /// Pure transition: the travelers cross and the boat changes side.
    pub fn apply(&self, mv: &RiverMove, config: &RiverConfig) -> Result<RiverState, MoveError> {
        let travelers = &mv.travelers;
        if travelers.is_empty() {
            return Err(MoveError::EmptyBoat);
        }
        if travelers.len() > config.boat_capacity {
            return Err(MoveError::Overloaded { travelers: travelers.len(), capacity: config.boat_capacity });
        }
        if let Some(p) = travelers.iter().find(|p| !config.knows(p)) {
            return Err(MoveError::UnknownPerson(*p));
        }
        if let Some(p) = travelers.iter().find(|p| self.side_of(p) != self.boat) {
            return Err(MoveError::WrongSide(*p));
        }

        let mut boat_agents = CoupleSet::default();
        let mut boat_actors = CoupleSet::default();
        let mut next = self.clone();
        for p in travelers {
            let (boat_set, left_set) = match p.role {
                Role::Agent => (&mut boat_agents, &mut next.agents_left),
                Role::Actor => (&mut boat_actors, &mut next.actors_left),
            };
            boat_set.insert(p.couple);
            match self.boat {
                Side::Left => left_set.remove(p.couple),
                Side::Right => left_set.insert(p.couple),
            }
        }
        next.boat = self.boat.opposite();

        if config.safety_scope == SafetyScope::BanksAndBoat {
            if let Some(actor) = unsafe_actor(&boat_agents, &boat_actors) {
                return Err(MoveError::SafetyViolation { actor, location: "boat".into() });
            }
        }
        if let Some(actor) = unsafe_actor(&next.agents_left, &next.actors_left) {
            return Err(MoveError::SafetyViolation { actor, location: "left bank".into() });
        }
        let n = config.n_pairs;
        let right_agents = next.agents_left.complement_within(n);
        let right_actors = next.actors_left.complement_within(n);
        if let Some(actor) = unsafe_actor(&right_agents, &right_actors) {
            return Err(MoveError::SafetyViolation { actor, location: "right bank".into() });
        }
        Ok(next)
    }

    /// Every legal move. Travelers are listed in `(couple, role)` order and
    /// subsets are ordered by size, then lexicographically.
    pub fn legal_moves(&self, config: &RiverConfig) -> Vec<RiverMove> {
        let here = self.bank(self.boat, config);
        let mut moves = Vec::new();
        for size in 1..=config.boat_capacity.min(here.len()) {
            for combo in here.iter().copied().combinations(size) {
                let mv = RiverMove::new(combo);
                if self.apply(&mv, config).is_ok() {
                    moves.push(mv);
                }
            }
        }
        moves
    }

    /// Bank rosters plus boat side, e.g. `Left: A_1 a_1` / `Right: (empty)` / `Boat: left`.
    pub fn render(&self, config: &RiverConfig) -> String {
        let roster = |people: Vec<Person>| {
            if people.is_empty() {
                "(empty)".to_string()
            } else {
                people.iter().map(Person::to_string).join(" ")
            }
        };
        let boat = match self.boat {
            Side::Left => "left",
            Side::Right => "right",
        };
        format!("Left: {}\nRight: {}\nBoat: {boat}", roster(self.left_bank()), roster(self.right_bank(config)))
    }

    /// Builds a state from an explicit left-bank roster.
    pub fn from_left_bank(left: impl IntoIterator<Item = Person>, boat: Side) -> Self {
        let mut agents_left = CoupleSet::default();
        let mut actors_left = CoupleSet::default();
        for p in left {
            if p.couple == 0 {
                continue;
            }
            match p.role {
                Role::Agent => agents_left.insert(p.couple),
                Role::Actor => actors_left.insert(p.couple),
            }
        }
        RiverState { agents_left, actors_left, boat }
    }
}

fn merge_roster(agents: &CoupleSet, actors: &CoupleSet) -> Vec<Person> {
    let mut people: Vec<Person> = agents.iter().map(Person::agent).chain(actors.iter().map(Person::actor)).collect();
    people.sort();
    people
}

#[derive(Serialize, Deserialize)]
struct RiverStateRepr {
    left: Vec<Person>,
    boat: Side,
}

impl Serialize for RiverState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RiverStateRepr { left: self.left_bank(), boat: self.boat }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RiverState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RiverStateRepr::deserialize(deserializer)?;
        Ok(RiverState::from_left_bank(repr.left, repr.boat))
    }
}

/// The set of people rowing across in one trip.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RiverMove {
    pub travelers: BTreeSet<Person>,
}

impl RiverMove {
    pub fn new(travelers: impl IntoIterator<Item = Person>) -> Self {
        RiverMove { travelers: travelers.into_iter().collect() }
    }
}

impl fmt::Display for RiverMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.travelers.iter().map(|p| format!("\"{p}\"")).join(", "))
    }
}

impl Serialize for RiverMove {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(&self.travelers)
    }
}

impl<'de> Deserialize<'de> for RiverMove {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let people = Vec::<Person>::deserialize(deserializer)?;
        let set: BTreeSet<Person> = people.iter().copied().collect();
        if set.len() != people.len() {
            return Err(D::Error::custom("a person appears twice in one crossing"));
        }
        Ok(RiverMove { travelers: set })
    }
}
