use std::collections::BTreeSet;
use std::fmt;

/// Propositional formula over world-state atoms with standpoint wrappers.
///
/// Deontic modalities never appear here; they only head a [`Norm`](super::Norm).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    From(String, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(f: Formula, g: Formula) -> Self {
        Formula::And(Box::new(f), Box::new(g))
    }

    pub fn or(f: Formula, g: Formula) -> Self {
        Formula::Or(Box::new(f), Box::new(g))
    }

    pub fn implies(f: Formula, g: Formula) -> Self {
        Formula::Implies(Box::new(f), Box::new(g))
    }

    pub fn from(stakeholder: impl Into<String>, f: Formula) -> Self {
        Formula::From(stakeholder.into(), Box::new(f))
    }

    /// Every atom name, including those under standpoints.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(name) = f {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Every stakeholder named by a `From(..)` wrapper.
    pub fn stakeholders(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::From(id, _) = f {
                out.insert(id.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(x) | Formula::From(_, x) => x.visit(f),
            Formula::And(x, y) | Formula::Or(x, y) | Formula::Implies(x, y) => {
                x.visit(f);
                y.visit(f);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) => 4,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Canonical printer; minimal parentheses, re-parses to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let own = self.precedence();
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(name) => f.write_str(name),
            Formula::Not(x) => {
                f.write_str("not ")?;
                write_child(f, x, x.precedence() < own)
            }
            Formula::And(x, y) | Formula::Or(x, y) => {
                let op = if matches!(self, Formula::And(..)) {
                    "and"
                } else {
                    "or"
                };
                write_child(f, x, x.precedence() < own)?;
                write!(f, " {op} ")?;
                write_child(f, y, y.precedence() <= own)
            }
            Formula::Implies(x, y) => {
                write_child(f, x, x.precedence() <= own)?;
                f.write_str(" implies ")?;
                write_child(f, y, y.precedence() < own)
            }
            Formula::From(id, x) => write!(f, "From({id}, {x})"),
        }
    }
}
