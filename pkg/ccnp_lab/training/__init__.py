from ccnp_lab.training.episode import TrainingState, epoch_batches, sample_batch, train_episode
from ccnp_lab.training.groups import ParameterGroups
from ccnp_lab.training.run import RunArtifacts, RunSeeds, run_name, train_run

__all__ = [
    "ParameterGroups",
    "RunArtifacts",
    "RunSeeds",
    "TrainingState",
    "epoch_batches",
    "run_name",
    "sample_batch",
    "train_episode",
    "train_run",
]
