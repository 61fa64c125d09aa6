//! Brute-force model of the reduced sandbox schema.
//!
//! The model evaluates both restrictions directly over in-memory rows with SQL
//! three-valued logic, without going through any SQL text. Its verdicts are
//! what the rewritten statements must reproduce.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use secss_core::Snapshot;

pub const NAMES: [&str; 6] = ["Loys", "Ana", "Miha", "O'Neil", "Eva", "Zed"];
pub const EMSO: [&str; 6] = [
    "100898450000",
    "150606500001",
    "090303500002",
    "010101500003",
    "121212500004",
    "999999999999",
];
pub const TOYS: [&str; 6] = ["ball", "squirrel", "kite", "teddy bear", "drum", "yoyo"];
pub const CHEST_IDS: [&str; 6] = ["15", "16", "17", "18", "19", "20"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Child {
    pub name: String,
    pub emso: String,
    pub age: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toy {
    pub toy: String,
    pub age_limit: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chest {
    pub id: String,
    pub toy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: Option<String>,
    pub toy: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct World {
    pub children: Vec<Child>,
    pub toys: Vec<Toy>,
    pub chest: Vec<Chest>,
    pub sandbox: Vec<Slot>,
}

fn maybe<T>(rng: &mut impl Rng, p_null: f64, v: T) -> Option<T> {
    (!rng.gen_bool(p_null)).then_some(v)
}

fn pick<'a>(rng: &mut impl Rng, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

impl World {
    /// At most five rows per table. The last pool entries never become
    /// children or toys, so requests can also name things that do not exist.
    pub fn generate(rng: &mut impl Rng) -> World {
        let n = rng.gen_range(0..=5);
        let mut names = NAMES[..5].to_vec();
        names.shuffle(rng);
        let mut codes = EMSO[..5].to_vec();
        codes.shuffle(rng);
        let children = (0..n)
            .map(|i| Child {
                name: names[i].to_string(),
                emso: codes[i].to_string(),
                age: {
                    let v = rng.gen_range(0..=10);
                    maybe(rng, 0.1, v)
                },
            })
            .collect();

        let n = rng.gen_range(0..=5);
        let mut toys: Vec<&str> = TOYS[..5].to_vec();
        toys.shuffle(rng);
        let toys = toys[..n]
            .iter()
            .map(|t| Toy {
                toy: t.to_string(),
                age_limit: {
                    let v = rng.gen_range(0..=10);
                    maybe(rng, 0.1, v)
                },
            })
            .collect();

        let n = rng.gen_range(0..=5);
        let mut ids = CHEST_IDS[..5].to_vec();
        ids.shuffle(rng);
        let chest = ids[..n]
            .iter()
            .map(|id| {
                let toy = pick(rng, &TOYS).to_string();
                Chest {
                    id: id.to_string(),
                    toy: maybe(rng, 0.1, toy),
                }
            })
            .collect();

        let n = rng.gen_range(0..=5);
        let sandbox = (0..n)
            .map(|_| {
                let name = pick(rng, &NAMES).to_string();
                let toy = pick(rng, &TOYS).to_string();
                Slot {
                    name: maybe(rng, 0.1, name),
                    toy: maybe(rng, 0.15, toy),
                }
            })
            .collect();
        World {
            children,
            toys,
            chest,
            sandbox,
        }
    }

    /// INSERT statements reproducing this state in the `playground` schema.
    pub fn sql(&self) -> String {
        let mut out = String::new();
        for c in &self.children {
            out.push_str(&format!(
                "INSERT INTO playground.children (name, emšo, age) VALUES ({}, {}, {});\n",
                lit(Some(&c.name)),
                lit(Some(&c.emso)),
                num(c.age)
            ));
        }
        for t in &self.toys {
            out.push_str(&format!(
                "INSERT INTO playground.toys (toy, ageLimit) VALUES ({}, {});\n",
                lit(Some(&t.toy)),
                num(t.age_limit)
            ));
        }
        for c in &self.chest {
            out.push_str(&format!(
                "INSERT INTO playground.toychest (id, toy) VALUES ({}, {});\n",
                lit(Some(&c.id)),
                lit(c.toy.as_deref())
            ));
        }
        for s in &self.sandbox {
            out.push_str(&format!(
                "INSERT INTO playground.sandbox (name, toy) VALUES ({}, {});\n",
                lit(s.name.as_deref()),
                lit(s.toy.as_deref())
            ));
        }
        out
    }

    /// The state as the backend reports it: every table, rows sorted, values as text.
    pub fn snapshot(&self) -> Snapshot {
        let sorted = |mut rows: Vec<Vec<Option<String>>>| {
            rows.sort();
            rows
        };
        let mut s = Snapshot::new();
        s.insert(
            "children".into(),
            sorted(
                self.children
                    .iter()
                    .map(|c| {
                        vec![
                            Some(c.name.clone()),
                            Some(c.emso.clone()),
                            c.age.map(|a| a.to_string()),
                        ]
                    })
                    .collect(),
            ),
        );
        s.insert(
            "sandbox".into(),
            sorted(
                self.sandbox
                    .iter()
                    .map(|r| vec![r.name.clone(), r.toy.clone()])
                    .collect(),
            ),
        );
        s.insert(
            "toychest".into(),
            sorted(
                self.chest
                    .iter()
                    .map(|c| vec![Some(c.id.clone()), c.toy.clone()])
                    .collect(),
            ),
        );
        s.insert(
            "toys".into(),
            sorted(
                self.toys
                    .iter()
                    .map(|t| vec![Some(t.toy.clone()), t.age_limit.map(|a| a.to_string())])
                    .collect(),
            ),
        );
        s
    }

    fn age_of(&self, name: Option<&str>) -> Option<i64> {
        let name = name?;
        self.children.iter().find(|c| c.name == name)?.age
    }

    /// Toys the named child is old enough for (the suitableAge sub-query).
    fn suitable(&self, name: Option<&str>) -> Vec<Option<String>> {
        let Some(age) = self.age_of(name) else {
            return Vec::new();
        };
        self.toys
            .iter()
            .filter(|t| t.age_limit.is_some_and(|l| l < age))
            .map(|t| Some(t.toy.clone()))
            .collect()
    }

    /// Toys currently in the sandbox (the toyInUse sub-query).
    fn in_use(&self) -> Vec<Option<String>> {
        self.sandbox.iter().map(|s| s.toy.clone()).collect()
    }
}

fn lit(v: Option<&str>) -> String {
    match v {
        Some(s) => format!("'{}'", s.replace('\'', "''")),
        None => "NULL".into(),
    }
}

fn num(v: Option<i64>) -> String {
    v.map_or("NULL".into(), |n| n.to_string())
}

/// `v IN set` under three-valued logic: `None` is UNKNOWN.
pub fn sql_in(v: Option<&str>, set: &[Option<String>]) -> Option<bool> {
    if set.is_empty() {
        return Some(false);
    }
    let v = v?;
    if set.iter().any(|s| s.as_deref() == Some(v)) {
        Some(true)
    } else if set.iter().any(Option::is_none) {
        None
    } else {
        Some(false)
    }
}

pub fn sql_not_in(v: Option<&str>, set: &[Option<String>]) -> Option<bool> {
    sql_in(v, set).map(|b| !b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    /// `INSERT INTO sandbox (name, toy) VALUES (...)`, optionally with columns swapped.
    Insert {
        name: String,
        toy: Option<String>,
        swapped: bool,
    },
    /// `UPDATE sandbox SET toy = ... WHERE name = ...`
    UpdateByName { name: String, toy: String },
    /// `UPDATE sandbox SET toy = ... WHERE toy = ...`; the child is derived from the matched rows.
    UpdateByToy { toy: String, old: String },
    /// The joined form with a sub-query value.
    UpdateJoin { emso: String, chest_id: String },
    /// Writes a field without write permission.
    RenameSlot { name: String, old: String },
    /// Omits the column a restriction needs.
    InsertToyOnly { toy: String },
}

impl Request {
    pub fn sql(&self) -> String {
        match self {
            Request::Insert {
                name,
                toy,
                swapped: false,
            } => format!(
                "INSERT INTO sandbox (name, toy) VALUES ({}, {});",
                lit(Some(name)),
                lit(toy.as_deref())
            ),
            Request::Insert {
                name,
                toy,
                swapped: true,
            } => format!(
                "INSERT INTO sandbox (toy, name) VALUES ({}, {});",
                lit(toy.as_deref()),
                lit(Some(name))
            ),
            Request::UpdateByName { name, toy } => format!(
                "UPDATE sandbox SET toy = {} WHERE name = {};",
                lit(Some(toy)),
                lit(Some(name))
            ),
            Request::UpdateByToy { toy, old } => format!(
                "UPDATE sandbox SET toy = {} WHERE toy = {};",
                lit(Some(toy)),
                lit(Some(old))
            ),
            Request::UpdateJoin { emso, chest_id } => format!(
                "UPDATE sandbox s LEFT JOIN children c ON s.name = c.name \
                 SET s.toy = (SELECT t.toy FROM toychest t WHERE t.id = {}) WHERE c.emšo = {};",
                lit(Some(chest_id)),
                lit(Some(emso))
            ),
            Request::RenameSlot { name, old } => format!(
                "UPDATE sandbox SET name = {} WHERE toy = {};",
                lit(Some(name)),
                lit(Some(old))
            ),
            Request::InsertToyOnly { toy } => {
                format!("INSERT INTO sandbox (toy) VALUES ({});", lit(Some(toy)))
            }
        }
    }

    pub fn random(rng: &mut impl Rng) -> Request {
        let name = pick(rng, &NAMES).to_string();
        let toy = pick(rng, &TOYS).to_string();
        Request::with(rng, name, toy)
    }

    /// Like [`Request::random`], but usually names a child and a toy that exist in `world`,
    /// so the restrictions decide more often than the missing rows do.
    pub fn random_in(rng: &mut impl Rng, world: &World) -> Request {
        let mut name = pick(rng, &NAMES).to_string();
        let mut toy = pick(rng, &TOYS).to_string();
        if rng.gen_bool(0.7) {
            if let Some(c) = world.children.choose(rng) {
                name = c.name.clone();
            }
            if let Some(t) = world.toys.choose(rng) {
                toy = t.toy.clone();
            }
        }
        Request::with(rng, name, toy)
    }

    fn with(rng: &mut impl Rng, name: String, toy: String) -> Request {
        match rng.gen_range(0..10) {
            0..=2 => Request::Insert {
                name,
                toy: maybe(rng, 0.1, toy),
                swapped: rng.gen_bool(0.3),
            },
            3..=4 => Request::UpdateByName { name, toy },
            5..=6 => Request::UpdateJoin {
                emso: pick(rng, &EMSO).to_string(),
                chest_id: pick(rng, &CHEST_IDS).to_string(),
            },
            7 => Request::UpdateByToy {
                toy,
                old: pick(rng, &TOYS).to_string(),
            },
            8 => Request::RenameSlot { name, old: toy },
            _ => Request::InsertToyOnly { toy },
        }
    }
}

/// What the rules say must happen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Executed; `permitted` is the restriction outcome, `state` the resulting rows.
    Applied {
        permitted: bool,
        affected: usize,
        state: World,
    },
    /// Refused before or during execution; nothing changes.
    Rejected,
}

impl World {
    fn update_rows(
        &self,
        name_var: Option<&str>,
        toy_var: Option<&str>,
        matches: impl Fn(&Slot) -> bool,
    ) -> Verdict {
        let permitted = sql_in(toy_var, &self.suitable(name_var)) == Some(true)
            && sql_not_in(toy_var, &self.in_use()) == Some(true);
        if !permitted {
            return Verdict::Applied {
                permitted,
                affected: 0,
                state: self.clone(),
            };
        }
        let mut state = self.clone();
        let mut affected = 0;
        for slot in &mut state.sandbox {
            if matches(slot) {
                slot.toy = toy_var.map(String::from);
                affected += 1;
            }
        }
        Verdict::Applied {
            permitted,
            affected,
            state,
        }
    }

    pub fn verdict(&self, req: &Request) -> Verdict {
        match req {
            Request::Insert { name, toy, .. } => {
                let permitted = sql_in(toy.as_deref(), &self.suitable(Some(name))) == Some(true);
                let mut state = self.clone();
                if permitted {
                    state.sandbox.push(Slot {
                        name: Some(name.clone()),
                        toy: toy.clone(),
                    });
                }
                Verdict::Applied {
                    permitted,
                    affected: usize::from(permitted),
                    state,
                }
            }
            Request::UpdateByName { name, toy } => {
                self.update_rows(Some(name), Some(toy), |s| s.name.as_deref() == Some(name))
            }
            Request::UpdateByToy { toy, old } => {
                let hit = |s: &Slot| s.toy.as_deref() == Some(old.as_str());
                let names: BTreeSet<Option<&str>> = self
                    .sandbox
                    .iter()
                    .filter(|s| hit(s))
                    .map(|s| s.name.as_deref())
                    .collect();
                if names.len() > 1 {
                    // the derived variable would need one child but the rows name several
                    return Verdict::Rejected;
                }
                let name = names.into_iter().next().flatten();
                self.update_rows(name, Some(toy), hit)
            }
            Request::UpdateJoin { emso, chest_id } => {
                let child = self.children.iter().find(|c| &c.emso == emso);
                let name = child.map(|c| c.name.as_str());
                let toy = self
                    .chest
                    .iter()
                    .find(|c| &c.id == chest_id)
                    .and_then(|c| c.toy.as_deref());
                self.update_rows(name, toy, |s| {
                    child.is_some_and(|c| s.name.as_deref() == Some(c.name.as_str()))
                })
            }
            Request::RenameSlot { .. } | Request::InsertToyOnly { .. } => Verdict::Rejected,
        }
    }
}
