//! Winning conditions of the reachability sabotage game variants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::{Agent, AgentSet};

use super::formula::{PathFormula, StateFormula};
use super::AtlError;

/// Eager or unwilling runner against a helpful or unhelpful demon, plus the
/// classical demon objective and its dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Eu,
    Eh,
    Uh,
    Uu,
    DemonWin,
    DemonWinDual,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Eu,
        Variant::Eh,
        Variant::Uh,
        Variant::Uu,
        Variant::DemonWin,
        Variant::DemonWinDual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Eu => "eu",
            Variant::Eh => "eh",
            Variant::Uh => "uh",
            Variant::Uu => "uu",
            Variant::DemonWin => "demon_win",
            Variant::DemonWinDual => "demon_win_dual",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = AtlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AtlError::Unsupported(format!("unknown variant \"{s}\"")))
    }
}

/// The coalition formula expressing the variant's winning condition.
pub fn variant_formula(v: Variant) -> StateFormula {
    let r = AgentSet::single(Agent::Runner);
    let d = AgentSet::single(Agent::Demon);
    let eventually = || PathFormula::finally(PathFormula::goal());
    let avoid = || PathFormula::globally(PathFormula::state(StateFormula::negation(StateFormula::goal())));
    match v {
        Variant::Eu => StateFormula::exists(r, eventually()),
        Variant::Eh => StateFormula::exists(AgentSet::RUNNER_DEMON, eventually()),
        Variant::Uh => StateFormula::exists(d, eventually()),
        Variant::Uu => StateFormula::exists(AgentSet::RUNNER_DEMON, avoid()),
        Variant::DemonWin => StateFormula::exists(d, avoid()),
        Variant::DemonWinDual => StateFormula::forall(r, avoid()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_forms() {
        let printed: Vec<String> = Variant::ALL.iter().map(|v| variant_formula(*v).to_string()).collect();
        assert_eq!(
            printed,
            [
                "<<r>> F g",
                "<<r,d>> F g",
                "<<d>> F g",
                "<<r,d>> G !g",
                "<<d>> G !g",
                "[[r]] G !g"
            ]
        );
    }

    #[test]
    fn names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("xx".parse::<Variant>().is_err());
    }
}
