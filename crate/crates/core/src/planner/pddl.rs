use std::collections::BTreeMap;
use std::fmt;

use super::search::{fixture_at, root_category};
use super::task::TaskSpec;
use crate::domain::DomainKnowledge;
use crate::error::PddlError;
use crate::world::{StateFlag, SubtaskCondition, WorldState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn atom(s: &str) -> Sexp {
        Sexp::Atom(s.to_string())
    }

    fn list(items: impl IntoIterator<Item = Sexp>) -> Sexp {
        Sexp::List(items.into_iter().collect())
    }

    /// `(head a b ...)` from plain atoms.
    fn fact(head: &str, args: &[&str]) -> Sexp {
        Sexp::list(std::iter::once(Sexp::atom(head)).chain(args.iter().map(|a| Sexp::atom(a))))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }

    /// Head atom of a list.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses every top-level expression; `;` starts a line comment.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, PddlError> {
    let mut stack: Vec<Vec<Sexp>> = vec![vec![]];
    let mut atom = String::new();
    let flush = |atom: &mut String, stack: &mut Vec<Vec<Sexp>>| {
        if !atom.is_empty() {
            let a = std::mem::take(atom).to_ascii_lowercase();
            stack.last_mut().expect("root frame").push(Sexp::Atom(a));
        }
    };
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                flush(&mut atom, &mut stack);
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => {
                flush(&mut atom, &mut stack);
                stack.push(vec![]);
            }
            ')' => {
                flush(&mut atom, &mut stack);
                if stack.len() < 2 {
                    return Err(PddlError::Unbalanced);
                }
                let done = stack.pop().expect("checked");
                stack.last_mut().expect("checked").push(Sexp::List(done));
            }
            c if c.is_whitespace() => flush(&mut atom, &mut stack),
            c => atom.push(c),
        }
    }
    flush(&mut atom, &mut stack);
    if stack.len() != 1 {
        return Err(PddlError::Unbalanced);
    }
    Ok(stack.pop().expect("root frame"))
}

const ACTIONS: &str = r#"
  (:action goto
    :parameters (?from - object ?to - object)
    :precondition (and (agent-at ?from) (fixture ?to))
    :effect (and (not (agent-at ?from)) (agent-at ?to)))
  (:action pickup
    :parameters (?o - object ?f - object)
    :precondition (and (pickupable ?o) (hand-empty) (located ?o ?f) (agent-at ?f))
    :effect (and (holding ?o) (not (hand-empty))
                 (forall (?r - object) (when (in ?o ?r) (not (in ?o ?r))))))
  (:action put
    :parameters (?o - object ?r - object ?f - object)
    :precondition (and (holding ?o) (receptacle ?r) (can-contain ?r ?o) (located ?r ?f) (agent-at ?f))
    :effect (and (in ?o ?r) (located ?o ?f) (hand-empty) (not (holding ?o))))
  (:action heat
    :parameters (?o - object ?a - object)
    :precondition (and (holding ?o) (heater ?a) (agent-at ?a))
    :effect (hot ?o))
  (:action cool
    :parameters (?o - object ?a - object)
    :precondition (and (holding ?o) (cooler ?a) (agent-at ?a))
    :effect (cold ?o))
  (:action clean
    :parameters (?o - object ?a - object)
    :precondition (and (holding ?o) (cleaner ?a) (agent-at ?a))
    :effect (clean ?o))
  (:action slice
    :parameters (?o - object ?f - object)
    :precondition (and (sliceable ?o) (located ?o ?f) (agent-at ?f) (not (holding ?o)))
    :effect (sliced ?o))
  (:action toggle
    :parameters (?x - object)
    :precondition (and (toggleable ?x) (agent-at ?x))
    :effect (and (when (is-on ?x) (not (is-on ?x))) (when (not (is-on ?x)) (is-on ?x))))
"#;

/// The fixed household domain, with one type per registered category.
pub fn domain_pddl() -> String {
    let dk = DomainKnowledge::builtin();
    let types: Vec<&str> = dk.categories.keys().map(String::as_str).collect();
    format!(
        "(define (domain household)\n  (:requirements :adl)\n  (:types {} - object)\n  (:predicates\n    \
         (agent-at ?x - object) (holding ?o - object) (hand-empty)\n    \
         (in ?o - object ?r - object) (located ?o - object ?f - object)\n    \
         (pickupable ?x - object) (receptacle ?x - object) (fixture ?x - object)\n    \
         (sliceable ?x - object) (toggleable ?x - object) (can-contain ?r - object ?o - object)\n    \
         (heater ?a - object) (cooler ?a - object) (cleaner ?a - object)\n    \
         (hot ?x - object) (cold ?x - object) (clean ?x - object) (sliced ?x - object)\n    \
         (is-on ?x - object) (opened ?x - object))\n{ACTIONS})\n",
        types.join(" ")
    )
}

fn flag_predicate(flag: StateFlag) -> &'static str {
    match flag {
        StateFlag::Clean => "clean",
        StateFlag::Hot => "hot",
        StateFlag::Cold => "cold",
        StateFlag::Sliced => "sliced",
        StateFlag::ToggledOn => "is-on",
        StateFlag::Open => "opened",
    }
}

fn predicate_flag(p: &str) -> Option<StateFlag> {
    [StateFlag::Clean, StateFlag::Hot, StateFlag::Cold, StateFlag::Sliced, StateFlag::ToggledOn, StateFlag::Open]
        .into_iter()
        .find(|f| flag_predicate(*f) == p)
}

fn typed(vars: &[(&str, &str)]) -> Sexp {
    Sexp::list(vars.iter().flat_map(|(v, t)| [Sexp::atom(v), Sexp::atom("-"), Sexp::atom(t)]))
}

fn exists(vars: &[(&str, &str)], body: Sexp) -> Sexp {
    Sexp::list([Sexp::atom("exists"), typed(vars), body])
}

fn goal_expr(c: &SubtaskCondition) -> Sexp {
    match c {
        SubtaskCondition::Placed { object, receptacle, count } if *count >= 2 => {
            let xs: Vec<String> = (1..=*count).map(|i| format!("?x{i}")).collect();
            let ys: Vec<String> = (1..=*count).map(|i| format!("?y{i}")).collect();
            let mut vars: Vec<(&str, &str)> = xs.iter().map(|x| (x.as_str(), object.as_str())).collect();
            vars.extend(ys.iter().map(|y| (y.as_str(), receptacle.as_str())));
            let mut body = vec![Sexp::atom("and")];
            body.extend(xs.iter().zip(&ys).map(|(x, y)| Sexp::fact("in", &[x, y])));
            for i in 0..xs.len() {
                for j in i + 1..xs.len() {
                    body.push(Sexp::list([Sexp::atom("not"), Sexp::fact("=", &[&xs[i], &xs[j]])]));
                }
            }
            exists(&vars, Sexp::List(body))
        }
        SubtaskCondition::Placed { object, receptacle, .. } => {
            exists(&[("?x", object), ("?y", receptacle)], Sexp::fact("in", &["?x", "?y"]))
        }
        SubtaskCondition::Holding { object } => exists(&[("?x", object)], Sexp::fact("holding", &["?x"])),
        SubtaskCondition::StateIs { object, flag, value } => {
            let f = Sexp::fact(flag_predicate(*flag), &["?x"]);
            let body = if *value { f } else { Sexp::list([Sexp::atom("not"), f]) };
            exists(&[("?x", object)], body)
        }
        SubtaskCondition::AgentNear { object } => exists(&[("?x", object)], Sexp::fact("agent-at", &["?x"])),
    }
}

/// Problem file for a task in a given state.
pub fn problem_pddl(task: &TaskSpec, state: &WorldState, name: &str) -> String {
    let dk = DomainKnowledge::builtin();
    let mut init: Vec<Sexp> = Vec::new();
    if let Some(f) = fixture_at(state) {
        init.push(Sexp::fact("agent-at", &[f]));
    }
    match &state.held {
        Some(h) => init.push(Sexp::fact("holding", &[h])),
        None => init.push(Sexp::fact("hand-empty", &[])),
    }
    for o in &state.objects {
        let id = o.id.as_str();
        let caps = [
            (o.caps.pickupable, "pickupable"),
            (o.caps.receptacle, "receptacle"),
            (!o.caps.pickupable, "fixture"),
            (o.caps.sliceable, "sliceable"),
            (o.caps.toggleable, "toggleable"),
        ];
        init.extend(caps.iter().filter(|c| c.0).map(|c| Sexp::fact(c.1, &[id])));
        match dk.category(&o.category).and_then(|c| c.appliance) {
            Some(crate::domain::Appliance::Heat) => init.push(Sexp::fact("heater", &[id])),
            Some(crate::domain::Appliance::Cool) => init.push(Sexp::fact("cooler", &[id])),
            Some(crate::domain::Appliance::Clean) => init.push(Sexp::fact("cleaner", &[id])),
            None => {}
        }
        if let Some(p) = &o.parent {
            init.push(Sexp::fact("in", &[id, p]));
        }
        if o.caps.pickupable && state.held.as_deref() != Some(id) {
            let root = state.objects.iter().find(|r| {
                !r.caps.pickupable && Some(r.category.as_str()) == root_category(state, id) && state.is_ancestor(&r.id, id)
            });
            if let Some(r) = root {
                init.push(Sexp::fact("located", &[id, &r.id]));
            }
        } else if !o.caps.pickupable {
            init.push(Sexp::fact("located", &[id, id]));
        }
        let st = &o.status;
        for (on, flag) in [
            (st.is_clean, StateFlag::Clean),
            (st.is_hot, StateFlag::Hot),
            (st.is_cold, StateFlag::Cold),
            (st.is_sliced, StateFlag::Sliced),
            (st.is_toggled_on, StateFlag::ToggledOn),
            (st.is_open, StateFlag::Open),
        ] {
            if on {
                init.push(Sexp::fact(flag_predicate(flag), &[id]));
            }
        }
    }
    for r in state.objects.iter().filter(|r| r.caps.receptacle) {
        for o in state.objects.iter().filter(|o| o.caps.pickupable && dk.can_contain(&r.category, &o.category)) {
            init.push(Sexp::fact("can-contain", &[&r.id, &o.id]));
        }
    }
    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for o in &state.objects {
        by_type.entry(&o.category).or_default().push(&o.id);
    }
    let objects: Vec<String> =
        by_type.iter().map(|(t, ids)| format!("{} - {t}", ids.join(" "))).collect();
    let goal: Vec<String> = task.goal_conditions.iter().map(|c| goal_expr(c).to_string()).collect();
    let init: Vec<String> = init.iter().map(Sexp::to_string).collect();
    format!(
        "(define (problem {name})\n  (:domain household)\n  (:objects\n    {})\n  (:init\n    {})\n  (:goal (and\n    {})))\n",
        objects.join("\n    "),
        init.join("\n    "),
        goal.join("\n    ")
    )
}

/// Parsed contents of a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParts {
    /// Object name and its type.
    pub objects: Vec<(String, String)>,
    pub init: Vec<Sexp>,
    pub goal: Vec<SubtaskCondition>,
}

fn structure(msg: &str) -> PddlError {
    PddlError::Structure(msg.to_string())
}

fn parse_typed(list: &[Sexp]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending = Vec::new();
    let mut it = list.iter();
    while let Some(s) = it.next() {
        let a = s.as_atom().ok_or_else(|| structure("typed list holds a list"))?;
        if a == "-" {
            let t = it.next().and_then(Sexp::as_atom).ok_or_else(|| structure("missing type"))?;
            out.extend(pending.drain(..).map(|n: String| (n, t.to_string())));
        } else {
            pending.push(a.to_string());
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

fn parse_goal(e: &Sexp) -> Result<SubtaskCondition, PddlError> {
    let l = e.as_list().filter(|_| e.head() == Some("exists")).ok_or_else(|| structure("goal is not exists"))?;
    let [_, vars, body] = l else { return Err(structure("exists arity")) };
    let vars: BTreeMap<String, String> =
        parse_typed(vars.as_list().ok_or_else(|| structure("exists variables"))?)?.into_iter().collect();
    let ty = |v: &Sexp| -> Result<String, PddlError> {
        v.as_atom().and_then(|v| vars.get(v)).cloned().ok_or_else(|| structure("unbound variable"))
    };
    let items = body.as_list().ok_or_else(|| structure("goal body"))?;
    match body.head() {
        Some("and") => {
            let ins: Vec<&Sexp> = items[1..].iter().filter(|s| s.head() == Some("in")).collect();
            let first = ins.first().and_then(|s| s.as_list()).ok_or_else(|| structure("empty conjunction"))?;
            Ok(SubtaskCondition::Placed { object: ty(&first[1])?, receptacle: ty(&first[2])?, count: ins.len() })
        }
        Some("in") if items.len() == 3 => {
            Ok(SubtaskCondition::Placed { object: ty(&items[1])?, receptacle: ty(&items[2])?, count: 1 })
        }
        Some("holding") if items.len() == 2 => Ok(SubtaskCondition::Holding { object: ty(&items[1])? }),
        Some("agent-at") if items.len() == 2 => Ok(SubtaskCondition::AgentNear { object: ty(&items[1])? }),
        Some("not") if items.len() == 2 => match parse_goal(&Sexp::list([l[0].clone(), l[1].clone(), items[1].clone()]))? {
            SubtaskCondition::StateIs { object, flag, .. } => Ok(SubtaskCondition::StateIs { object, flag, value: false }),
            _ => Err(structure("negated goal")),
        },
        Some(p) if items.len() == 2 => {
            let flag = predicate_flag(p).ok_or_else(|| structure("unknown goal predicate"))?;
            Ok(SubtaskCondition::StateIs { object: ty(&items[1])?, flag, value: true })
        }
        _ => Err(structure("unrecognized goal")),
    }
}

/// Reads back the objects, initial facts and goal conditions of a problem.
pub fn parse_problem(text: &str) -> Result<ProblemParts, PddlError> {
    let top = parse_sexps(text)?;
    let def = top.first().filter(|s| s.head() == Some("define")).ok_or_else(|| structure("no define"))?;
    let mut parts = ProblemParts { objects: vec![], init: vec![], goal: vec![] };
    for sec in &def.as_list().expect("define is a list")[1..] {
        let items = sec.as_list().ok_or_else(|| structure("section"))?;
        match sec.head() {
            Some(":objects") => parts.objects = parse_typed(&items[1..])?,
            Some(":init") => parts.init = items[1..].to_vec(),
            Some(":goal") => {
                let g = items.get(1).ok_or_else(|| structure("empty goal"))?;
                let conj = if g.head() == Some("and") { &g.as_list().expect("list")[1..] } else { std::slice::from_ref(g) };
                parts.goal = conj.iter().map(parse_goal).collect::<Result<_, _>>()?;
            }
            _ => {}
        }
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sexp_parser_balances() {
        let v = parse_sexps("(a (b c) ; note\n d)").unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "(a (b c) d)");
        assert_eq!(parse_sexps("(a"), Err(PddlError::Unbalanced));
        assert_eq!(parse_sexps("a)"), Err(PddlError::Unbalanced));
    }

    #[test]
    fn domain_parses() {
        let d = parse_sexps(&domain_pddl()).unwrap();
        let actions = d[0].as_list().unwrap().iter().filter(|s| s.head() == Some(":action")).count();
        assert_eq!(actions, 8);
    }

    #[test]
    fn goal_expressions_round_trip() {
        for c in [
            SubtaskCondition::placed("apple", "countertop"),
            SubtaskCondition::Placed { object: "apple".into(), receptacle: "plate".into(), count: 2 },
            SubtaskCondition::Holding { object: "book".into() },
            SubtaskCondition::state("floorlamp", StateFlag::ToggledOn),
            SubtaskCondition::StateIs { object: "mug".into(), flag: StateFlag::Hot, value: false },
            SubtaskCondition::AgentNear { object: "sink".into() },
        ] {
            let text = goal_expr(&c).to_string();
            assert_eq!(parse_goal(&parse_sexps(&text).unwrap()[0]).unwrap(), c, "{text}");
        }
    }
}
