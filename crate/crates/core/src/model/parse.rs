//! Line-oriented model format.
//!
//! ```text
//! robot <name>
//! gravity <gx> <gy> <gz>
//! link <name> parent <parent|world> joint <revolute|prismatic|floating> axis <x y z> xyz <x y z> rpy <r p y>
//! inertia <link> mass <m> com <x y z> ixx <v> iyy <v> izz <v> ixy <v> ixz <v> iyz <v>
//! endeffector <name> link <link> xyz <x y z> rpy <r p y>
//! limits <link> lower <v> upper <v> velocity <v>
//! ```
//!
//! `#` starts a comment. Inertia moments are taken about the centre of mass
//! with axes parallel to the link frame.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{
    EndEffector, InertiaParams, Joint, JointKind, JointLimits, Link, Placement, RobotModel,
    DEFAULT_GRAVITY,
};
use crate::error::{Error, ParseError, Result};

struct RawLink {
    line: usize,
    name: String,
    parent: Option<String>,
    joint: Joint,
}

struct RawEndEffector {
    line: usize,
    name: String,
    link: String,
    placement: Placement,
}

struct Tokens<'a> {
    line: usize,
    iter: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
}

impl<'a> Tokens<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse(ParseError {
            line: self.line,
            message: message.into(),
        })
    }

    fn word(&mut self, what: &str) -> Result<&'a str> {
        self.iter
            .next()
            .ok_or_else(|| self.err(format!("missing {what}")))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.iter.next() {
            Some(w) if w == kw => Ok(()),
            Some(w) => Err(self.err(format!("expected '{kw}', found '{w}'"))),
            None => Err(self.err(format!("expected '{kw}'"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let w = self.word(what)?;
        let v: f64 = w
            .parse()
            .map_err(|_| self.err(format!("invalid number '{w}' for {what}")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite value for {what}")));
        }
        Ok(v)
    }

    fn vec3(&mut self, what: &str) -> Result<[f64; 3]> {
        Ok([self.number(what)?, self.number(what)?, self.number(what)?])
    }

    fn keyed_vec3(&mut self, kw: &str) -> Result<[f64; 3]> {
        self.keyword(kw)?;
        self.vec3(kw)
    }

    fn keyed_number(&mut self, kw: &str) -> Result<f64> {
        self.keyword(kw)?;
        self.number(kw)
    }

    fn placement(&mut self) -> Result<Placement> {
        Ok(Placement {
            xyz: self.keyed_vec3("xyz")?,
            rpy: self.keyed_vec3("rpy")?,
        })
    }

    fn finish(&mut self) -> Result<()> {
        match self.iter.next() {
            None => Ok(()),
            Some(w) => Err(self.err(format!("unexpected trailing token '{w}'"))),
        }
    }
}

/// Parses and validates a model description.
pub fn parse_model(text: &str) -> Result<RobotModel> {
    let mut name = None;
    let mut gravity = None;
    let mut links: Vec<RawLink> = Vec::new();
    let mut inertias: HashMap<String, (usize, InertiaParams)> = HashMap::new();
    let mut limits: HashMap<String, (usize, JointLimits)> = HashMap::new();
    let mut ees: Vec<RawEndEffector> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut t = Tokens {
            line: idx + 1,
            iter: content.split_whitespace().peekable(),
        };
        let Some(head) = t.iter.next() else { continue };
        match head {
            "robot" => {
                if name.is_some() {
                    return Err(t.err("duplicate 'robot' line"));
                }
                name = Some(t.word("robot name")?.to_string());
            }
            "gravity" => {
                if gravity.is_some() {
                    return Err(t.err("duplicate 'gravity' line"));
                }
                gravity = Some(t.vec3("gravity")?);
            }
            "link" => {
                let link_name = t.word("link name")?.to_string();
                t.keyword("parent")?;
                let parent = match t.word("parent name")? {
                    "world" => None,
                    p => Some(p.to_string()),
                };
                t.keyword("joint")?;
                let kind = match t.word("joint type")? {
                    "revolute" => JointKind::Revolute,
                    "prismatic" => JointKind::Prismatic,
                    "floating" => JointKind::Floating,
                    other => return Err(t.err(format!("unknown joint type '{other}'"))),
                };
                let axis = t.keyed_vec3("axis")?;
                let placement = t.placement()?;
                links.push(RawLink {
                    line: t.line,
                    name: link_name,
                    parent,
                    joint: Joint {
                        kind,
                        axis,
                        placement,
                    },
                });
            }
            "inertia" => {
                let link = t.word("link name")?.to_string();
                let mass = t.keyed_number("mass")?;
                let com = t.keyed_vec3("com")?;
                let mut moments = [0.0; 6];
                for (slot, kw) in moments
                    .iter_mut()
                    .zip(["ixx", "iyy", "izz", "ixy", "ixz", "iyz"])
                {
                    *slot = t.keyed_number(kw)?;
                }
                if inertias.contains_key(&link) {
                    return Err(t.err(format!("second inertia line for '{link}'")));
                }
                inertias.insert(link, (t.line, InertiaParams { mass, com, moments }));
            }
            "endeffector" => {
                let ee_name = t.word("end-effector name")?.to_string();
                t.keyword("link")?;
                let link = t.word("link name")?.to_string();
                let placement = t.placement()?;
                ees.push(RawEndEffector {
                    line: t.line,
                    name: ee_name,
                    link,
                    placement,
                });
            }
            "limits" => {
                let link = t.word("link name")?.to_string();
                let lower = t.keyed_number("lower")?;
                let upper = t.keyed_number("upper")?;
                let velocity = t.keyed_number("velocity")?;
                if limits.contains_key(&link) {
                    return Err(t.err(format!("second limits line for '{link}'")));
                }
                limits.insert(
                    link,
                    (
                        t.line,
                        JointLimits {
                            lower,
                            upper,
                            velocity,
                        },
                    ),
                );
            }
            other => return Err(t.err(format!("unknown directive '{other}'"))),
        }
        t.finish()?;
    }

    let index: HashMap<&str, usize> = links
        .iter()
        .enumerate()
        .map(|(i, l)| (l.name.as_str(), i))
        .collect();
    if index.len() != links.len() {
        let dup = links
            .iter()
            .enumerate()
            .find(|(i, l)| index[l.name.as_str()] != *i)
            .unwrap()
            .1;
        return Err(Error::Validation(format!(
            "duplicate link name '{}' (line {})",
            dup.name, dup.line
        )));
    }
    for l in &links {
        if let Some(p) = &l.parent {
            if !index.contains_key(p.as_str()) {
                return Err(Error::Validation(format!(
                    "link '{}' (line {}) has unknown parent '{p}'",
                    l.name, l.line
                )));
            }
        }
    }
    detect_cycle(&links, &index)?;

    let mut out = Vec::with_capacity(links.len());
    for (i, l) in links.iter().enumerate() {
        let parent = match &l.parent {
            None => None,
            Some(p) => {
                let pi = index[p.as_str()];
                if pi >= i {
                    return Err(Error::Validation(format!(
                        "link '{}' (line {}) appears before its parent '{p}'",
                        l.name, l.line
                    )));
                }
                Some(pi)
            }
        };
        let inertia = inertias
            .remove(&l.name)
            .ok_or_else(|| Error::Validation(format!("link '{}' has no inertia line", l.name)))?
            .1;
        out.push(Link {
            name: l.name.clone(),
            parent,
            joint: l.joint,
            inertia,
            limits: limits.remove(&l.name).map(|(_, v)| v),
        });
    }
    if let Some((link, (line, _))) = inertias.into_iter().min_by_key(|(_, (line, _))| *line) {
        return Err(Error::Validation(format!(
            "inertia on line {line} names unknown link '{link}'"
        )));
    }
    if let Some((link, (line, _))) = limits.into_iter().min_by_key(|(_, (line, _))| *line) {
        return Err(Error::Validation(format!(
            "limits on line {line} name unknown link '{link}'"
        )));
    }
    let mut end_effectors = Vec::with_capacity(ees.len());
    for e in ees {
        let link = *index.get(e.link.as_str()).ok_or_else(|| {
            Error::Validation(format!(
                "end-effector '{}' (line {}) names unknown link '{}'",
                e.name, e.line, e.link
            ))
        })?;
        end_effectors.push(EndEffector {
            name: e.name,
            link,
            placement: e.placement,
        });
    }
    RobotModel::new(
        name.unwrap_or_else(|| "robot".into()),
        gravity.unwrap_or(DEFAULT_GRAVITY),
        out,
        end_effectors,
    )
}

fn detect_cycle(links: &[RawLink], index: &HashMap<&str, usize>) -> Result<()> {
    for start in 0..links.len() {
        let mut cur = start;
        for _ in 0..=links.len() {
            match &links[cur].parent {
                None => break,
                Some(p) => cur = index[p.as_str()],
            }
            if cur == start {
                return Err(Error::Validation(format!(
                    "cycle in kinematic tree through '{}'",
                    links[start].name
                )));
            }
        }
    }
    Ok(())
}

/// Writes a model in the format accepted by [`parse_model`]. Numbers use the
/// shortest representation that parses back to the same value.
pub fn write_model(model: &RobotModel) -> String {
    let mut s = String::new();
    let v3 = |v: &[f64; 3]| format!("{} {} {}", v[0], v[1], v[2]);
    let _ = writeln!(s, "robot {}", model.name);
    let _ = writeln!(s, "gravity {}", v3(&model.gravity));
    for l in &model.links {
        let parent = l.parent.map_or("world", |p| model.links[p].name.as_str());
        let j = &l.joint;
        let _ = writeln!(
            s,
            "link {} parent {} joint {} axis {} xyz {} rpy {}",
            l.name,
            parent,
            j.kind,
            v3(&j.axis),
            v3(&j.placement.xyz),
            v3(&j.placement.rpy)
        );
    }
    for l in &model.links {
        let p = &l.inertia;
        let m = &p.moments;
        let _ = writeln!(
            s,
            "inertia {} mass {} com {} ixx {} iyy {} izz {} ixy {} ixz {} iyz {}",
            l.name,
            p.mass,
            v3(&p.com),
            m[0],
            m[1],
            m[2],
            m[3],
            m[4],
            m[5]
        );
    }
    for l in &model.links {
        if let Some(lim) = l.limits {
            let _ = writeln!(
                s,
                "limits {} lower {} upper {} velocity {}",
                l.name, lim.lower, lim.upper, lim.velocity
            );
        }
    }
    for e in &model.end_effectors {
        let _ = writeln!(
            s,
            "endeffector {} link {} xyz {} rpy {}",
            e.name,
            model.links[e.link].name,
            v3(&e.placement.xyz),
            v3(&e.placement.rpy)
        );
    }
    s
}
