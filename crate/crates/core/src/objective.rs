//! Effectiveness functionals over simulation artifacts, with optimization
//! sense and state gradients for the closed-loop controllers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{Cascade, Compartment, EventLog};
use crate::opinion::{opinion_statistics, OpinionState, OpinionTrajectory};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("objective {objective} needs a {expected} artifact, got {got}")]
    ArtifactMismatch { objective: &'static str, expected: &'static str, got: &'static str },
    #[error("objective {0} has no state gradient (not an opinion functional)")]
    NotDifferentiable(&'static str),
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// Mean opinion of the final trajectory state.
    FinalMean,
    /// Population variance of the final trajectory state.
    FinalVariance,
    /// Nodes ever adopted in a cascade.
    Reach,
    /// Max simultaneous infections across cascade rounds.
    PeakInfection,
    /// Number of events in an event log.
    TotalEvents,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Maximize,
    Minimize,
}

/// An effectiveness functional plus the direction an optimizer drives it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub sense: Sense,
}

/// The artifact a functional consumes.
#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    Trajectory(&'a OpinionTrajectory),
    Cascade(&'a Cascade),
    Events(&'a EventLog),
}

impl<'a> Artifact<'a> {
    fn name(&self) -> &'static str {
        match self {
            Artifact::Trajectory(_) => "trajectory",
            Artifact::Cascade(_) => "cascade",
            Artifact::Events(_) => "event log",
        }
    }
}

impl Objective {
    pub fn new(kind: ObjectiveKind, sense: Sense) -> Self {
        Objective { kind, sense }
    }

    pub fn final_mean_max() -> Self {
        Objective::new(ObjectiveKind::FinalMean, Sense::Maximize)
    }

    pub fn final_mean_min() -> Self {
        Objective::new(ObjectiveKind::FinalMean, Sense::Minimize)
    }

    pub fn name(&self) -> &'static str {
        match (self.kind, self.sense) {
            (ObjectiveKind::FinalMean, Sense::Maximize) => "final-mean",
            (ObjectiveKind::FinalMean, Sense::Minimize) => "final-mean-min",
            (ObjectiveKind::FinalVariance, Sense::Maximize) => "final-variance-max",
            (ObjectiveKind::FinalVariance, Sense::Minimize) => "final-variance-min",
            (ObjectiveKind::Reach, _) => "reach",
            (ObjectiveKind::PeakInfection, _) => "peak-infection",
            (ObjectiveKind::TotalEvents, _) => "total-events",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ObjectiveError> {
        use ObjectiveKind::*;
        use Sense::*;
        Ok(match s {
            "final-mean" | "final-mean-max" => Objective::new(FinalMean, Maximize),
            "final-mean-min" => Objective::new(FinalMean, Minimize),
            "final-variance-max" => Objective::new(FinalVariance, Maximize),
            "final-variance-min" => Objective::new(FinalVariance, Minimize),
            "reach" => Objective::new(Reach, Maximize),
            "peak-infection" => Objective::new(PeakInfection, Maximize),
            "total-events" => Objective::new(TotalEvents, Maximize),
            other => return Err(ObjectiveError::UnknownObjective(other.to_string())),
        })
    }

    /// Raw value of e on an artifact; the sense plays no role here.
    pub fn evaluate(&self, artifact: &Artifact) -> Result<f64, ObjectiveError> {
        let mismatch = |expected: &'static str, got: &Artifact| ObjectiveError::ArtifactMismatch {
            objective: self.name(),
            expected,
            got: got.name(),
        };
        match self.kind {
            ObjectiveKind::FinalMean => match artifact {
                Artifact::Trajectory(tr) => Ok(opinion_statistics(tr.final_state()).0),
                other => Err(mismatch("trajectory", other)),
            },
            ObjectiveKind::FinalVariance => match artifact {
                Artifact::Trajectory(tr) => Ok(opinion_statistics(tr.final_state()).1),
                other => Err(mismatch("trajectory", other)),
            },
            ObjectiveKind::Reach => match artifact {
                Artifact::Cascade(c) => Ok(c.adopters() as f64),
                other => Err(mismatch("cascade", other)),
            },
            ObjectiveKind::PeakInfection => match artifact {
                Artifact::Cascade(c) => Ok(c
                    .states
                    .iter()
                    .map(|row| row.iter().filter(|&&s| s == Compartment::Infected).count())
                    .max()
                    .unwrap_or(0) as f64),
                other => Err(mismatch("cascade", other)),
            },
            ObjectiveKind::TotalEvents => match artifact {
                Artifact::Events(log) => Ok(log.events.len() as f64),
                other => Err(mismatch("event log", other)),
            },
        }
    }

    /// Value adjusted so larger is always better for the configured sense.
    pub fn signed(&self, value: f64) -> f64 {
        match self.sense {
            Sense::Maximize => value,
            Sense::Minimize => -value,
        }
    }

    /// Gradient of the signed objective with respect to the current opinion
    /// state: d e / d theta_i for final-mean is 1/n, for final-variance
    /// 2 (theta_i - mean) / n, negated under minimization. These are the
    /// weights the per-step controllers ascend.
    pub fn gradient_weights(&self, state: &OpinionState) -> Result<Vec<f64>, ObjectiveError> {
        let n = state.len() as f64;
        let raw: Vec<f64> = match self.kind {
            ObjectiveKind::FinalMean => vec![1.0 / n; state.len()],
            ObjectiveKind::FinalVariance => {
                let mean = opinion_statistics(state).0;
                state.values().iter().map(|&t| 2.0 * (t - mean) / n).collect()
            }
            _ => return Err(ObjectiveError::NotDifferentiable(self.name())),
        };
        Ok(match self.sense {
            Sense::Maximize => raw,
            Sense::Minimize => raw.into_iter().map(|w| -w).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::Compartment::*;

    #[test]
    fn reach_counts_every_adopter() {
        let cascade = Cascade {
            states: vec![vec![Infected, Infected, Infected]],
            activation_time: vec![Some(0), Some(0), Some(0)],
        };
        let obj = Objective::parse("reach").unwrap();
        assert_eq!(obj.evaluate(&Artifact::Cascade(&cascade)).unwrap(), 3.0);
    }

    #[test]
    fn final_mean_of_constant_trajectory() {
        let state = OpinionState::uniform(4, 0.5).unwrap();
        let tr = OpinionTrajectory { times: vec![0.0], states: vec![state] };
        let obj = Objective::final_mean_max();
        assert_eq!(obj.evaluate(&Artifact::Trajectory(&tr)).unwrap(), 0.5);
    }

    #[test]
    fn peak_infection_scans_the_series() {
        // hand-built compartment series with peak 3 at round 1
        let cascade = Cascade {
            states: vec![
                vec![Infected, Susceptible, Susceptible, Susceptible],
                vec![Infected, Infected, Infected, Susceptible],
                vec![Recovered, Infected, Infected, Infected],
            ],
            activation_time: vec![Some(0), Some(1), Some(1), Some(2)],
        };
        let obj = Objective::parse("peak-infection").unwrap();
        assert_eq!(obj.evaluate(&Artifact::Cascade(&cascade)).unwrap(), 3.0);
    }

    #[test]
    fn artifact_mismatch_is_an_error() {
        let log = EventLog { events: vec![] };
        let obj = Objective::final_mean_max();
        assert!(matches!(
            obj.evaluate(&Artifact::Events(&log)),
            Err(ObjectiveError::ArtifactMismatch { .. })
        ));
    }

    #[test]
    fn gradient_weights_match_hand_derivatives() {
        let state = OpinionState::new(vec![0.2, 0.6]).unwrap();
        let max_mean = Objective::final_mean_max().gradient_weights(&state).unwrap();
        assert_eq!(max_mean, vec![0.5, 0.5]);
        let min_mean = Objective::final_mean_min().gradient_weights(&state).unwrap();
        assert_eq!(min_mean, vec![-0.5, -0.5]);
        let var = Objective::parse("final-variance-max").unwrap().gradient_weights(&state).unwrap();
        // mean 0.4: d var / d theta = 2 (theta_i - 0.4) / 2
        assert!((var[0] - (-0.2)).abs() < 1e-15);
        assert!((var[1] - 0.2).abs() < 1e-15);
        assert!(Objective::parse("reach").unwrap().gradient_weights(&state).is_err());
    }

    #[test]
    fn parse_round_trips() {
        for name in [
            "final-mean",
            "final-mean-min",
            "final-variance-max",
            "final-variance-min",
            "reach",
            "peak-infection",
            "total-events",
        ] {
            let obj = Objective::parse(name).unwrap();
            assert_eq!(obj.name(), name);
        }
        assert!(Objective::parse("nope").is_err());
    }
}
