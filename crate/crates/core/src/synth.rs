//! Synthetic compositions with planted role structure.
//!
//! Each composition is drawn in three steps:
//!
//! 1. an anchor role is chosen uniformly and takes the first template slot;
//! 2. the remaining template slots are filled in passes, where a pass uses
//!    each role at most once. Inside a pass, roles are drawn from the anchor's
//!    affinity restricted to roles not yet used in the pass and still holding
//!    unused agents (uniformly among those when the restricted mass is zero).
//!    With five or fewer roles the first pass therefore places one slot per
//!    role; with more, it places the anchor and four distinct roles;
//! 3. with probability `noise`, a slot's role is instead drawn uniformly
//!    from the roles that still have unused agents.
//!
//! Agents are then drawn uniformly without replacement inside each role.
//! The random source is ChaCha8 seeded from the model's 64-bit seed, so a
//! given model and seed always produce the same dataset.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{agent_key, expand, RawRecord, TeamComposition, TEAM_SIZE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Role {
    pub name: String,
    pub agents: Vec<String>,
    /// Distribution over roles for the slots that follow an anchor of this role.
    pub affinity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub roles: Vec<Role>,
    #[serde(default)]
    pub noise: f64,
    pub num_compositions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_map")]
    pub map: String,
}

fn default_map() -> String {
    "Haven".to_string()
}

impl PlantedModel {
    pub fn validate(&self) -> Result<()> {
        let infeasible = |msg: String| Err(Error::InfeasibleModel(msg));
        let r = self.roles.len();
        if r == 0 {
            return infeasible("no roles".into());
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return infeasible(format!("noise {} outside [0, 1]", self.noise));
        }
        if self.num_compositions == 0 {
            return infeasible("num_compositions must be positive".into());
        }
        let mut seen = HashSet::new();
        for role in &self.roles {
            if role.agents.is_empty() {
                return infeasible(format!("role `{}` has no agents", role.name));
            }
            for agent in &role.agents {
                if agent_key(agent).is_empty() || !seen.insert(agent_key(agent)) {
                    return infeasible(format!("agent `{agent}` is blank or appears twice"));
                }
            }
            if role.affinity.len() != r {
                return infeasible(format!(
                    "role `{}` has {} affinities for {r} roles",
                    role.name,
                    role.affinity.len()
                ));
            }
            let total: f64 = role.affinity.iter().sum();
            if role.affinity.iter().any(|&a| a.is_nan() || a < 0.0) || (total - 1.0).abs() > 1e-9 {
                return infeasible(format!("affinities of role `{}` must be a distribution", role.name));
            }
        }
        if seen.len() < TEAM_SIZE {
            return infeasible(format!("{} agents cannot fill a team of {TEAM_SIZE}", seen.len()));
        }
        Ok(())
    }

    /// Planted role index of every agent, keyed by agent name.
    pub fn role_of(&self, agent: &str) -> Option<usize> {
        let key = agent_key(agent);
        self.roles
            .iter()
            .position(|r| r.agents.iter().any(|a| agent_key(a) == key))
    }
}

fn weighted_pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut target = rng.gen::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if target < w {
            return Some(i);
        }
        target -= w;
        last = Some(i);
    }
    last
}

fn uniform_open(rng: &mut ChaCha8Rng, capacity: &[usize]) -> usize {
    let open: Vec<usize> = (0..capacity.len()).filter(|&r| capacity[r] > 0).collect();
    open[rng.gen_range(0..open.len())]
}

/// One row per composition (`maps_played = 1`), in generation order.
pub fn generate_records(model: &PlantedModel) -> Result<Vec<RawRecord>> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let sizes: Vec<usize> = model.roles.iter().map(|r| r.agents.len()).collect();
    let mut records = Vec::with_capacity(model.num_compositions);

    for n in 0..model.num_compositions {
        let mut capacity = sizes.clone();
        let mut counts = vec![0usize; sizes.len()];
        let anchor = rng.gen_range(0..sizes.len());
        let affinity = &model.roles[anchor].affinity;
        let mut template = vec![anchor];
        let mut spare = sizes.clone();
        spare[anchor] -= 1;
        let mut in_pass = vec![false; sizes.len()];
        in_pass[anchor] = true;
        while template.len() < TEAM_SIZE {
            if (0..sizes.len()).all(|r| in_pass[r] || spare[r] == 0) {
                in_pass.iter_mut().for_each(|u| *u = false);
            }
            let open: Vec<usize> = (0..sizes.len()).filter(|&r| !in_pass[r] && spare[r] > 0).collect();
            let weights: Vec<f64> = (0..sizes.len())
                .map(|r| if open.contains(&r) { affinity[r] } else { 0.0 })
                .collect();
            let role = weighted_pick(&mut rng, &weights).unwrap_or_else(|| open[rng.gen_range(0..open.len())]);
            in_pass[role] = true;
            spare[role] -= 1;
            template.push(role);
        }
        for &planned in &template {
            let role = if model.noise > 0.0 && rng.gen::<f64>() < model.noise {
                uniform_open(&mut rng, &capacity)
            } else if capacity[planned] > 0 {
                planned
            } else {
                uniform_open(&mut rng, &capacity)
            };
            capacity[role] -= 1;
            counts[role] += 1;
        }
        let mut agents = Vec::with_capacity(TEAM_SIZE);
        for (role, &count) in counts.iter().enumerate() {
            let members = &model.roles[role].agents;
            for i in sample(&mut rng, members.len(), count).into_iter() {
                agents.push(members[i].clone());
            }
        }
        agents.sort_by_key(|a| agent_key(a));
        records.push(RawRecord {
            line: n as u64 + 2,
            tournament: "Synthetic".into(),
            stage: format!("seed-{}", model.seed),
            match_type: "planted".into(),
            map: model.map.clone(),
            team: format!("team-{n}"),
            agents,
            wins: 0,
            losses: 0,
            maps_played: 1,
        });
    }
    Ok(records)
}

/// Draws `num_compositions` compositions from the planted model.
pub fn generate(model: &PlantedModel) -> Result<Vec<TeamComposition>> {
    Ok(expand(&generate_records(model)?))
}

/// Convenience constructor: `roles` disjoint roles of `size` agents named
/// `R{role}A{index}`, with affinity `own` on the anchor role and the rest
/// spread evenly.
pub fn symmetric_model(
    roles: usize,
    size: usize,
    own: f64,
    noise: f64,
    num_compositions: usize,
    seed: u64,
) -> PlantedModel {
    let other = if roles > 1 {
        (1.0 - own) / (roles - 1) as f64
    } else {
        0.0
    };
    PlantedModel {
        roles: (0..roles)
            .map(|r| Role {
                name: format!("role{r}"),
                agents: (0..size).map(|i| format!("R{r}A{i}")).collect(),
                affinity: (0..roles).map(|s| if s == r { own } else { other }).collect(),
            })
            .collect(),
        noise,
        num_compositions,
        seed,
        map: default_map(),
    }
}
