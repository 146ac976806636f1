//! Line-oriented scenario format.
//!
//! ```text
//! # comment
//! [section]          scenario, topology, state, schedule, observe,
//!                    reservoir.<k>, target.<name>
//! key = value
//! ```
//!
//! Numbers are products and quotients of decimal literals and `pi`, with an
//! optional leading minus (`0.1*pi/0.05`). States are `bloch <theta> <phi>`
//! in radians; inside a state the two angles must not contain spaces.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::dynamics::{CollisionMode, CollisionSchedule, Metric, SteadyParams, DEFAULT_TOL, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::network::{QnnTopology, ReservoirSpec, TargetKind, TargetState};
use crate::state::PureBlochState;

use super::{msg, ScenarioConfig, Schedule, TimeGrid};

const DEFAULT_NAME: &str = "scenario";

struct Entry<'a> {
    key: &'a str,
    value: &'a str,
    line: usize,
}

struct Section<'a> {
    name: &'a str,
    line: usize,
    entries: Vec<Entry<'a>>,
}

fn lex(text: &str) -> Result<Vec<Section<'_>>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Syntax {
                    line,
                    msg: "section header is missing ']'".into(),
                })?
                .trim();
            let ok = !name.is_empty()
                && name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '+' | '-'));
            if !ok {
                return Err(Error::Syntax {
                    line,
                    msg: format!("bad section name {name:?}"),
                });
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Syntax {
            line,
            msg: format!("expected `key = value` or `[section]`, found {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Syntax {
                line,
                msg: format!("bad key {key:?}"),
            });
        }
        if value.is_empty() {
            return Err(Error::Syntax {
                line,
                msg: format!("key {key:?} has no value"),
            });
        }
        let section = sections.last_mut().ok_or_else(|| Error::Syntax {
            line,
            msg: "key outside of any section".into(),
        })?;
        section.entries.push(Entry { key, value, line });
    }
    Ok(sections)
}

/// Keys of one section; anything not taken by the builder is an error.
struct Table<'a> {
    section: String,
    entries: Vec<Entry<'a>>,
    taken: Vec<bool>,
}

impl<'a> Table<'a> {
    fn new(section: Section<'a>) -> Result<Self> {
        for (i, e) in section.entries.iter().enumerate() {
            if section.entries[..i].iter().any(|p| p.key == e.key) {
                return Err(Error::semantic(
                    format!("{}.{}", section.name, e.key),
                    format!("duplicate key (line {})", e.line),
                ));
            }
        }
        let n = section.entries.len();
        Ok(Table {
            section: section.name.to_string(),
            entries: section.entries,
            taken: vec![false; n],
        })
    }

    fn empty(section: &str) -> Self {
        Table {
            section: section.to_string(),
            entries: Vec::new(),
            taken: Vec::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.section)
    }

    fn raw(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.taken[i] = true;
        Some((self.entries[i].value, self.entries[i].line))
    }

    fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    fn required(&mut self, key: &str) -> Result<(&'a str, usize)> {
        self.raw(key)
            .ok_or_else(|| Error::semantic(self.path(key), "missing required key"))
    }

    fn convert<T>(
        &self,
        key: &str,
        (value, line): (&str, usize),
        f: impl FnOnce(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        f(value).map_err(|m| Error::Syntax {
            line,
            msg: format!("{}: {m}", self.path(key)),
        })
    }

    fn get<T>(&mut self, key: &str, f: impl FnOnce(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.raw(key) {
            Some(v) => self.convert(key, v, f).map(Some),
            None => Ok(None),
        }
    }

    fn need<T>(&mut self, key: &str, f: impl FnOnce(&str) -> std::result::Result<T, String>) -> Result<T> {
        let v = self.required(key)?;
        self.convert(key, v, f)
    }

    fn forbid(&self, keys: &[&str], why: &str) -> Result<()> {
        match keys.iter().find(|k| self.has(k)) {
            Some(k) => Err(Error::semantic(self.path(k), why.to_string())),
            None => Ok(()),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.iter().zip(&self.taken).find(|(_, &t)| !t) {
            Some((e, _)) => Err(Error::semantic(
                format!("{}.{}", self.section, e.key),
                format!("unknown key (line {})", e.line),
            )),
            None => Ok(()),
        }
    }
}

/// Evaluates `[-] atom (('*' | '/') atom)*` where an atom is a decimal literal or `pi`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (negative, body) = match compact.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, compact.as_str()),
    };
    if body.is_empty() {
        return Err(format!("bad number {s:?}"));
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let atom = atom(&rest[..end]).ok_or_else(|| format!("bad number {s:?}"))?;
        value = if op == '*' { value * atom } else { value / atom };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    let value = if negative { -value } else { value };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn atom(s: &str) -> Option<f64> {
    if s == "pi" {
        return Some(PI);
    }
    // Keeps `inf`, `nan` and friends out.
    if !s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        return None;
    }
    s.parse().ok()
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split(',').map(|item| f(item.trim())).collect()
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, found {s:?}"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, found {s:?}")),
    }
}

fn parse_state(s: &str) -> std::result::Result<PureBlochState, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    match parts.as_slice() {
        ["bloch", theta, phi] => {
            let theta = parse_number(theta)?;
            let phi = parse_number(phi)?;
            PureBlochState::new(theta, phi).map_err(msg)
        }
        _ => Err(format!("expected `bloch <theta> <phi>`, found {s:?}")),
    }
}

fn parse_ident(s: &str) -> std::result::Result<String, String> {
    if super::valid_name(s) {
        Ok(s.to_string())
    } else {
        Err(format!("bad name {s:?}"))
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut named: BTreeMap<&str, Section> = BTreeMap::new();
    let mut reservoirs: BTreeMap<usize, Section> = BTreeMap::new();
    let mut targets: BTreeMap<&str, Section> = BTreeMap::new();
    for section in lex(text)? {
        let name = section.name;
        let dup = || Error::semantic(name, format!("duplicate section (line {})", section.line));
        if let Some(k) = name.strip_prefix("reservoir.") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::semantic(name, "reservoir sections are named reservoir.<index>"))?;
            if reservoirs.contains_key(&k) {
                return Err(dup());
            }
            reservoirs.insert(k, section);
        } else if let Some(t) = name.strip_prefix("target.") {
            if !super::valid_target_name(t) {
                return Err(Error::semantic(name, "bad target name"));
            }
            if targets.contains_key(t) {
                return Err(dup());
            }
            targets.insert(t, section);
        } else if matches!(name, "scenario" | "topology" | "state" | "schedule" | "observe") {
            if named.contains_key(name) {
                return Err(dup());
            }
            named.insert(name, section);
        } else {
            return Err(Error::semantic(name, "unknown section"));
        }
    }
    let mut table = |name: &str| -> Result<Table> {
        match named.remove(name) {
            Some(s) => Table::new(s),
            None => Ok(Table::empty(name)),
        }
    };

    let mut scenario = table("scenario")?;
    let name = scenario.get("name", parse_ident)?.unwrap_or_else(|| DEFAULT_NAME.to_string());
    scenario.finish()?;

    let mut topo = table("topology")?;
    let omega = topo.get("omega", parse_number)?.unwrap_or(1.0);
    let couplings = topo.need("couplings", |s| parse_list(s, parse_number))?;
    topo.finish()?;
    let topology = QnnTopology::new(omega, couplings).map_err(|e| Error::semantic("topology", msg(e)))?;

    let mut st = table("state")?;
    let mut initial_states = Vec::with_capacity(topology.n_system_sites());
    for i in 0..topology.n_inputs() {
        initial_states.push(st.need(&format!("input.{i}"), parse_state)?);
    }
    initial_states.push(st.need("output", parse_state)?);
    st.finish()?;

    let mut specs = Vec::with_capacity(reservoirs.len());
    for (k, section) in reservoirs {
        let mut r = Table::new(section)?;
        let node = r.need("node", parse_usize)?;
        let unit_state = r.need("state", parse_state)?;
        let j_su = r.need("j_su", parse_number)?;
        r.finish()?;
        specs.push(
            ReservoirSpec::new(node, unit_state, j_su).map_err(|e| Error::semantic(format!("reservoir.{k}"), msg(e)))?,
        );
    }

    let mut sch = table("schedule")?;
    let mode = sch.need("mode", |s| Ok(s.to_string()))?;
    let schedule = match mode.as_str() {
        "closed" => {
            sch.forbid(
                &["tau", "n_collisions", "free_terms", "j_uu", "tau_uu"],
                "not allowed for closed evolution",
            )?;
            Schedule::Closed(TimeGrid {
                t_max: sch.need("t_max", parse_number)?,
                dt: sch.need("dt", parse_number)?,
            })
        }
        "markov" | "non_markov" => {
            sch.forbid(&["t_max", "dt"], "only allowed for closed evolution")?;
            let collision_mode = if mode == "markov" {
                sch.forbid(&["j_uu", "tau_uu"], "only allowed for non_markov runs")?;
                CollisionMode::Markov
            } else {
                CollisionMode::NonMarkov {
                    j_uu: sch.need("j_uu", parse_number)?,
                    tau_uu: sch.need("tau_uu", parse_number)?,
                }
            };
            Schedule::Collision(CollisionSchedule {
                mode: collision_mode,
                tau: sch.need("tau", parse_number)?,
                n_collisions: sch.need("n_collisions", parse_usize)?,
                free_terms: sch.get("free_terms", parse_bool)?.unwrap_or(true),
            })
        }
        other => {
            return Err(Error::semantic(
                "schedule.mode",
                format!("expected closed, markov or non_markov, found {other:?}"),
            ))
        }
    };
    sch.finish()?;

    let mut obs = table("observe")?;
    let raw_metrics = obs.need("metrics", |s| parse_list(s, |m| Ok(m.to_string())))?;
    let tracked = raw_metrics
        .iter()
        .map(|m| Metric::parse(m))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::semantic("observe.metrics", msg(e)))?;
    let steady = SteadyParams {
        window: obs.get("window", parse_usize)?.unwrap_or(DEFAULT_WINDOW),
        tol: obs.get("tol", parse_number)?.unwrap_or(DEFAULT_TOL),
    };
    obs.finish()?;

    let mut target_states = BTreeMap::new();
    for (name, section) in targets {
        let mut t = Table::new(section)?;
        let kind = t.need("kind", |s| match s {
            "mixture" => Ok(TargetKind::Mixture),
            "superposition" => Ok(TargetKind::Superposition),
            _ => Err(format!("expected mixture or superposition, found {s:?}")),
        })?;
        let states = t.need("states", |s| parse_list(s, parse_state))?;
        let weights = t.need("weights", |s| parse_list(s, parse_number))?;
        t.finish()?;
        let path = format!("target.{name}");
        if states.len() != weights.len() {
            return Err(Error::semantic(
                path,
                format!("{} states but {} weights", states.len(), weights.len()),
            ));
        }
        let target = TargetState::new(kind, states.into_iter().zip(weights).collect())
            .map_err(|e| Error::semantic(path, msg(e)))?;
        target_states.insert(name.to_string(), target);
    }

    let config = ScenarioConfig {
        name,
        topology,
        initial_states,
        reservoirs: specs,
        schedule,
        targets: target_states,
        tracked,
        steady,
    };
    config.validate()?;
    Ok(config)
}

/// Shortest representation that parses back to the same bits.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn state(s: &PureBlochState) -> String {
    format!("bloch {} {}", num(s.theta()), num(s.phi()))
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

/// Writes every field explicitly, defaults included.
pub fn serialize_scenario(c: &ScenarioConfig) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "[scenario]\nname = {}\n", c.name);
    let _ = writeln!(
        w,
        "[topology]\nomega = {}\ncouplings = {}\n",
        num(c.topology.omega()),
        join(c.topology.couplings(), |x| num(*x))
    );
    let _ = writeln!(w, "[state]");
    let (inputs, output) = c.initial_states.split_at(c.initial_states.len().saturating_sub(1));
    for (i, s) in inputs.iter().enumerate() {
        let _ = writeln!(w, "input.{i} = {}", state(s));
    }
    if let Some(s) = output.first() {
        let _ = writeln!(w, "output = {}", state(s));
    }
    let _ = writeln!(w);
    for (k, r) in c.reservoirs.iter().enumerate() {
        let _ = writeln!(
            w,
            "[reservoir.{k}]\nnode = {}\nstate = {}\nj_su = {}\n",
            r.node,
            state(&r.unit_state),
            num(r.j_su)
        );
    }
    let _ = writeln!(w, "[schedule]");
    match &c.schedule {
        Schedule::Closed(g) => {
            let _ = writeln!(w, "mode = closed\nt_max = {}\ndt = {}", num(g.t_max), num(g.dt));
        }
        Schedule::Collision(s) => {
            match s.mode {
                CollisionMode::Markov => {
                    let _ = writeln!(w, "mode = markov");
                }
                CollisionMode::NonMarkov { j_uu, tau_uu } => {
                    let _ = writeln!(w, "mode = non_markov\nj_uu = {}\ntau_uu = {}", num(j_uu), num(tau_uu));
                }
            }
            let _ = writeln!(
                w,
                "tau = {}\nn_collisions = {}\nfree_terms = {}",
                num(s.tau),
                s.n_collisions,
                s.free_terms
            );
        }
    }
    let _ = writeln!(
        w,
        "\n[observe]\nmetrics = {}\nwindow = {}\ntol = {}",
        join(&c.tracked, |m| m.to_string()),
        c.steady.window,
        num(c.steady.tol)
    );
    for (name, t) in &c.targets {
        let kind = match t.kind() {
            TargetKind::Mixture => "mixture",
            TargetKind::Superposition => "superposition",
        };
        let _ = writeln!(
            w,
            "\n[target.{name}]\nkind = {kind}\nstates = {}\nweights = {}",
            join(t.components(), |(s, _)| state(s)),
            join(t.components(), |(_, p)| num(*p))
        );
    }
    out
}
