import logging
import time
from dataclasses import dataclass, field

import numpy as np

from corpus.dataset import ChunkedDataset, PianoRollDataset, chunk
from network.errors import DataError, DivergenceError
from network.grad import bptt
from network.initialization import init_params, spectral_radius
from network.model import RnnParams, SequenceBatch, ce_loss, evaluate, forward
from network.optim import OptimizerState, step
from network.perturb import norm_penalty, sample_plan

from .config import HyperConfig


def log_event(stage: str, data: dict):
    """
    Logs one harness event with its data.
    Args:
        stage (str): What happened, e.g. "epoch" or "trial".
        data (dict): Values to report.
    Returns:
        None
    """
    logging.info(f"{stage}: {data}")


@dataclass
class EpochRecord:
    epoch: int
    train_ce: float
    valid_ce: float
    spectral_radius: float
    seconds: float


@dataclass
class TrainingTrace:
    """
    Outcome of one training run.
    Attributes:
        records (list[EpochRecord]): One record per epoch, epoch 0 being
            the initialization.
        test_ce (float): Clean-weight test cross-entropy of `params`.
        diverged (bool): Whether training stopped on a non-finite value.
        best_epoch (int): Epoch with the lowest validation cross-entropy.
        params (RnnParams): Parameters of `best_epoch`.
    """
    records: list[EpochRecord] = field(default_factory=list)
    test_ce: float = float("nan")
    diverged: bool = False
    best_epoch: int = 0
    params: RnnParams | None = None

    @property
    def best_valid_ce(self) -> float:
        if not self.records:
            return float("nan")
        return self.records[self.best_epoch].valid_ce


def clean_ce(params: RnnParams, batch: SequenceBatch) -> float:
    return ce_loss(forward(params, batch), batch)


def _run_epoch(
    params: RnnParams,
    state: OptimizerState,
    config: HyperConfig,
    train_batch: SequenceBatch,
    shuffle_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> tuple[RnnParams, OptimizerState]:
    perturbation = config.perturbation
    if perturbation is not None and perturbation.kind == "none":
        perturbation = None
    order = shuffle_rng.permutation(train_batch.n_sequences)
    for start in range(0, len(order), config.batch_size):
        batch = train_batch.select(order[start:start + config.batch_size])
        plan = None
        if perturbation is not None:
            plan = sample_plan(perturbation, params, batch.steps, noise_rng)

        def grad_fn(theta: RnnParams):
            loss, grads = bptt(theta, batch, plan)
            if not np.isfinite(loss):
                raise DivergenceError(f"Training loss became {loss}")
            if config.penalty is not None:
                _, penalty_grads = norm_penalty(theta, config.penalty)
                grads = grads.map(np.add, penalty_grads)
            return grads

        state, params = step(state, params, grad_fn)
    return params, state


def train(
    config: HyperConfig,
    dataset: ChunkedDataset | PianoRollDataset,
    label: str = "train",
) -> TrainingTrace:
    """
    Train one network and keep the parameters of its best validation epoch.
    Every iteration samples a fresh perturbation plan, adds the penalty
    gradient to the data gradient and takes one optimizer step. Each epoch
    records clean train and validation cross-entropy and the spectral
    radius of w_hh. Training stops at max_epochs, after `patience` epochs
    without validation improvement, or on divergence.
    Args:
        config (HyperConfig): The run.
        dataset (ChunkedDataset | PianoRollDataset): Training data; raw
            datasets are chunked with config.chunk_length.
        label (str): Name used in log lines.
    Returns:
        TrainingTrace: Records, best parameters and their test CE. A
        diverged run returns its partial trace.
    Raises:
        DataError: If the train or validation split is empty.
    """
    if isinstance(dataset, PianoRollDataset):
        dataset = chunk(dataset, config.chunk_length)
    if dataset.train.n_sequences == 0 or dataset.valid.n_sequences == 0:
        raise DataError("Training needs non-empty train and validation splits.")

    notes = dataset.train.frame_dim
    params = init_params(config.init, (notes, config.hidden_units, notes))
    shuffle_rng, noise_rng = (
        np.random.default_rng(stream)
        for stream in np.random.SeedSequence(config.seed).spawn(2)
    )
    state = OptimizerState.create(config.optimizer, params)
    start = time.perf_counter()

    def record(epoch: int) -> EpochRecord:
        return EpochRecord(
            epoch=epoch,
            train_ce=clean_ce(params, dataset.train),
            valid_ce=clean_ce(params, dataset.valid),
            spectral_radius=spectral_radius(params.w_hh).radius,
            seconds=time.perf_counter() - start,
        )

    trace = TrainingTrace(records=[record(0)], params=params)
    log_event(label, vars(trace.records[0]))
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        try:
            params, state = _run_epoch(
                params, state, config, dataset.train, shuffle_rng, noise_rng
            )
        except DivergenceError as e:
            logging.warning(f"{label}: diverged in epoch {epoch}: {e}")
            trace.diverged = True
            break
        current = record(epoch)
        if not (np.isfinite(current.train_ce) and np.isfinite(current.valid_ce)):
            logging.warning(f"{label}: non-finite cross-entropy in epoch {epoch}")
            trace.diverged = True
            break
        trace.records.append(current)
        log_event(label, vars(current))
        if current.valid_ce < trace.best_valid_ce:
            trace.best_epoch, trace.params, stale = epoch, params, 0
        else:
            stale += 1
            if stale >= config.patience:
                log_event(label, {"early_stop": epoch, "best_epoch": trace.best_epoch})
                break

    if dataset.test:
        trace.test_ce = evaluate(trace.params, dataset.test)
    log_event(label, {
        "best_epoch": trace.best_epoch,
        "best_valid_ce": trace.best_valid_ce,
        "test_ce": trace.test_ce,
        "diverged": trace.diverged,
    })
    return trace
