use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{check_id, read_text, write_text};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Classes used to train the audio embedding network.
    ModelTrain,
    ZslTrain,
    ZslValidation,
    ZslTest,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::ModelTrain,
        Role::ZslTrain,
        Role::ZslValidation,
        Role::ZslTest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::ModelTrain => "model-train",
            Role::ZslTrain => "zsl-train",
            Role::ZslValidation => "zsl-validation",
            Role::ZslTest => "zsl-test",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named, pairwise-disjoint class folds plus the roles they play.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawPlan", into = "RawPlan")]
pub struct FoldPlan {
    folds: IndexMap<String, Vec<String>>,
    roles: BTreeMap<Role, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    folds: IndexMap<String, Vec<String>>,
    #[serde(default)]
    roles: BTreeMap<Role, Vec<String>>,
}

impl TryFrom<RawPlan> for FoldPlan {
    type Error = Error;

    fn try_from(raw: RawPlan) -> Result<Self> {
        FoldPlan::new(raw.folds, raw.roles)
    }
}

impl From<FoldPlan> for RawPlan {
    fn from(plan: FoldPlan) -> Self {
        RawPlan {
            folds: plan.folds,
            roles: plan.roles,
        }
    }
}

impl FoldPlan {
    pub fn new(
        folds: IndexMap<String, Vec<String>>,
        roles: BTreeMap<Role, Vec<String>>,
    ) -> Result<Self> {
        let plan = FoldPlan { folds, roles };
        plan.validate()?;
        Ok(plan)
    }

    /// A plan with folds only and no role assignment.
    pub fn from_folds(folds: IndexMap<String, Vec<String>>) -> Result<Self> {
        FoldPlan::new(folds, BTreeMap::new())
    }

    fn validate(&self) -> Result<()> {
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for (name, classes) in &self.folds {
            check_id(name).map_err(|m| Error::invalid("fold plan", format!("fold name: {m}")))?;
            for class in classes {
                check_id(class).map_err(|m| Error::invalid("fold plan", m))?;
                if let Some(prev) = owner.insert(class, name) {
                    return Err(Error::invalid(
                        "fold plan",
                        format!("class `{class}` appears in both `{prev}` and `{name}`; folds must be disjoint"),
                    ));
                }
            }
        }
        for (role, names) in &self.roles {
            let mut seen = HashSet::new();
            for name in names {
                if !self.folds.contains_key(name) {
                    return Err(Error::invalid(
                        "fold plan",
                        format!("role `{role}` references unknown fold `{name}`"),
                    ));
                }
                if !seen.insert(name) {
                    return Err(Error::invalid(
                        "fold plan",
                        format!("role `{role}` lists fold `{name}` twice"),
                    ));
                }
            }
        }
        // Zero-shot test classes must be unseen by the compatibility learner.
        if let Some(test) = self.roles.get(&Role::ZslTest) {
            for role in [Role::ZslTrain, Role::ZslValidation] {
                if let Some(shared) = self
                    .roles
                    .get(&role)
                    .and_then(|names| names.iter().find(|n| test.contains(n)))
                {
                    return Err(Error::invalid(
                        "fold plan",
                        format!("fold `{shared}` is assigned to both `zsl-test` and `{role}`"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn folds(&self) -> &IndexMap<String, Vec<String>> {
        &self.folds
    }

    pub fn roles(&self) -> &BTreeMap<Role, Vec<String>> {
        &self.roles
    }

    pub fn fold(&self, name: &str) -> Option<&[String]> {
        self.folds.get(name).map(Vec::as_slice)
    }

    pub fn role_folds(&self, role: Role) -> Option<&[String]> {
        self.roles.get(&role).map(Vec::as_slice)
    }

    /// Classes of every fold assigned to `role`, in fold order.
    pub fn classes_for(&self, role: Role) -> Result<Vec<String>> {
        let names = self.roles.get(&role).ok_or_else(|| {
            Error::invalid("fold plan", format!("no folds assigned to role `{role}`"))
        })?;
        Ok(names
            .iter()
            .flat_map(|n| self.folds[n.as_str()].iter().cloned())
            .collect())
    }

    /// All classes in fold order.
    pub fn all_classes(&self) -> impl Iterator<Item = &str> {
        self.folds.values().flatten().map(String::as_str)
    }

    /// Replaces the role assignment, revalidating the plan.
    pub fn with_roles(&self, roles: BTreeMap<Role, Vec<String>>) -> Result<FoldPlan> {
        FoldPlan::new(self.folds.clone(), roles)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fold plan serializes");
        s.push('\n');
        s
    }

    pub fn parse_json(text: &str, path: &Path) -> Result<Self> {
        let raw: RawPlan =
            serde_json::from_str(text).map_err(|e| Error::format(path, e.line(), e.to_string()))?;
        FoldPlan::try_from(raw).map_err(|e| Error::format(path, 0, e.to_string()))
    }
}

pub fn read_fold_plan(path: impl AsRef<Path>) -> Result<FoldPlan> {
    let path = path.as_ref();
    FoldPlan::parse_json(&read_text(path)?, path)
}

pub fn write_fold_plan(plan: &FoldPlan, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &plan.to_json())
}
