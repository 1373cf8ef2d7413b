//! An instance together with every per-agent graph the decomposition needs.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{GeometryError, ShapeModel, SweepConfig};
use crate::instance::AgentSpec;
use crate::map::{distance_field, DistanceField, GridMap};
use crate::relation::{compute_relations, condense, simplify, ConnectivityGraph, RelationTable};
use crate::subgraph::{build_with_model, search_path, Subgraph, SubgraphError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Subgraph(#[from] SubgraphError),
    #[error("agent {agent}: {source}")]
    Shape { agent: usize, source: GeometryError },
    #[error("agent {agent} has no path from start to target even when alone")]
    Unsolvable { agent: usize },
    #[error("agent ids must be 0..n in order")]
    BadIds,
}

#[derive(Clone, Debug)]
pub struct AgentGraphs {
    pub subgraph: Subgraph,
    pub relations: RelationTable,
    pub full: ConnectivityGraph,
    pub simplified: ConnectivityGraph,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub map: Arc<GridMap>,
    pub dfield: Arc<DistanceField>,
    pub agents: Vec<AgentSpec>,
    pub graphs: Vec<AgentGraphs>,
    /// Wall time spent building subgraphs, relations and component graphs.
    pub prep_time: Duration,
}

fn check_ids(agents: &[AgentSpec]) -> Result<(), ProblemError> {
    if agents.iter().enumerate().all(|(i, a)| a.id == i) {
        Ok(())
    } else {
        Err(ProblemError::BadIds)
    }
}

/// Builds every agent's subgraph in parallel and checks each agent can reach its target alone.
pub fn build_subgraphs(map: &GridMap, dfield: &DistanceField, agents: &[AgentSpec], sweep: &SweepConfig) -> Result<Vec<Subgraph>, ProblemError> {
    check_ids(agents)?;
    let graphs: Vec<Subgraph> = agents
        .par_iter()
        .map(|a| {
            let model = ShapeModel::new(a.shape, *sweep).map_err(|source| ProblemError::Shape { agent: a.id, source })?;
            Ok(build_with_model(a, Arc::new(model), map, dfield)?)
        })
        .collect::<Result<_, ProblemError>>()?;
    for sg in &graphs {
        if search_path(sg, &sg.empty_node_set()).is_none() {
            return Err(ProblemError::Unsolvable { agent: sg.agent() });
        }
    }
    Ok(graphs)
}

impl Problem {
    pub fn prepare(map: GridMap, agents: Vec<AgentSpec>, sweep: &SweepConfig) -> Result<Self, ProblemError> {
        let started = Instant::now();
        let dfield = distance_field(&map);
        let subgraphs = build_subgraphs(&map, &dfield, &agents, sweep)?;
        let models: Vec<&ShapeModel> = subgraphs.iter().map(|s| s.model().as_ref()).collect();
        let graphs = subgraphs
            .par_iter()
            .map(|sg| {
                let relations = compute_relations(sg, &agents, &models);
                let full = condense(sg, &relations);
                let simplified = simplify(&full);
                (relations, full, simplified)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .zip(subgraphs.iter().cloned())
            .map(|((relations, full, simplified), subgraph)| AgentGraphs { subgraph, relations, full, simplified })
            .collect();
        Ok(Self {
            map: Arc::new(map),
            dfield: Arc::new(dfield),
            agents,
            graphs,
            prep_time: started.elapsed(),
        })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn subgraph(&self, agent: usize) -> &Subgraph {
        &self.graphs[agent].subgraph
    }

    pub fn subgraphs(&self) -> Vec<&Subgraph> {
        self.graphs.iter().map(|g| &g.subgraph).collect()
    }
}
