"""Training loops for the four model variants."""

import io
import logging
import math
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd

from stormcast_edl.baselines import DeepEnsemble
from stormcast_edl.data import NowcastSample, stack_samples, window
from stormcast_edl.errors import DivergenceError, NumericError, TrainingError
from stormcast_edl.evidential import LambdaSchedule, constrain, nll_loss, total_loss
from stormcast_edl.harness.datasets import prepare_dataset
from stormcast_edl.harness.io import run_dir, write_resolved_config
from stormcast_edl.harness.models import (
    EpochRecord,
    ExperimentConfig,
    TrainingRecord,
    TrainingSection,
    TrainOutcome,
)
from stormcast_edl.harness.transfer import pretrain_transfer
from stormcast_edl.model import Checkpoint, NowcastModel, save_checkpoint
from stormcast_edl.numerics import Adam, GradTape, Tensor, clip_grad_norm, mean_squared_error
from stormcast_edl.utils import atomic_write_bytes, atomic_write_json, atomic_write_text

logger = logging.getLogger(__name__)

Objective = Literal["mse", "evidential"]

MODEL_FILE = "model.npz"
PRETRAIN_FILE = "pretrain.npz"
ENSEMBLE_DIR = "ensemble"


def _objective(
    model: NowcastModel,
    x: np.ndarray,
    y: np.ndarray,
    objective: Objective,
    schedule: Optional[LambdaSchedule],
    step: int,
    rng: Optional[np.random.Generator],
) -> tuple[Tensor, float]:
    out = model.forward(x, dropout_active=rng is not None, rng=rng)
    if objective == "mse":
        return mean_squared_error(out, y), 0.0
    loss = total_loss(constrain(out), y, schedule, step)
    return loss.total, loss.lam


def validation_metric(
    model: NowcastModel, samples: Sequence[NowcastSample], objective: Objective, batch_size: int
) -> float:
    """Mean squared error (deterministic head) or mean NLL (evidential head), dropout off."""
    if not samples:
        return float("nan")
    total, count = 0.0, 0
    for start in range(0, len(samples), batch_size):
        x, y = stack_samples(samples[start : start + batch_size])
        out = model.forward(x)
        if objective == "mse":
            value = mean_squared_error(out, y).item()
        else:
            value = nll_loss(constrain(out), y).item()
        total += value * y.size
        count += y.size
    return total / count


def dump_divergence(
    directory: Union[str, Path], step: int, x: np.ndarray, y: np.ndarray, model: NowcastModel
) -> Path:
    """Save the offending batch and every parameter's L2 norm."""
    arrays = {"history": x, "target": y}
    for name, param in model.named_parameters():
        arrays[f"norm:{name}"] = np.array(np.linalg.norm(param.data))
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    return atomic_write_bytes(Path(directory) / f"divergence_step{step}.npz", buffer.getvalue())


def fit(
    model: NowcastModel,
    train_samples: Sequence[NowcastSample],
    val_samples: Sequence[NowcastSample],
    training: TrainingSection,
    objective: Objective,
    epochs: int,
    seed: int,
    stage: str,
    dump_dir: Union[str, Path],
) -> TrainingRecord:
    """
    Optimise ``model`` in place with Adam and global gradient clipping.

    Batches are shuffled with ``seed``; dropout masks come from the same
    generator when the model has a nonzero dropout rate. With ``patience`` set,
    training stops after that many epochs without validation improvement and
    the best weights are restored.

    Returns:
        TrainingRecord with one entry per completed epoch
    """
    record = TrainingRecord(stage=stage, objective=objective, seed=seed)
    rng = np.random.default_rng(seed)
    if epochs == 0:
        record.rng_state = rng.bit_generator.state
        return record
    if not train_samples:
        raise TrainingError(f"{stage}: no training samples")

    dropout_rng = rng if model.config.dropout_rate > 0.0 else None
    optimizer = Adam(model.parameters(), lr=training.learning_rate)
    steps_per_epoch = math.ceil(len(train_samples) / training.batch_size)
    schedule = training.schedule(steps_per_epoch) if objective == "evidential" else None

    best_metric, best_state, bad_epochs = math.inf, None, 0
    step = 0
    for epoch in range(epochs):
        order = rng.permutation(len(train_samples))
        losses, lam = [], 0.0
        for start in range(0, len(order), training.batch_size):
            batch = [train_samples[i] for i in order[start : start + training.batch_size]]
            x, y = stack_samples(batch)
            try:
                with GradTape() as tape:
                    loss, lam = _objective(model, x, y, objective, schedule, step, dropout_rng)
                grads = tape.backward(loss)
                if not all(np.isfinite(g).all() for g in grads.values()):
                    raise NumericError("non-finite gradient")
            except NumericError as e:
                path = dump_divergence(dump_dir, step, x, y, model)
                logger.error(f"{stage}: loss diverged at step {step}: {e}", exc_info=True)
                raise DivergenceError(
                    f"{stage}: training diverged at step {step} ({e}); diagnostics in {path}",
                    step=step,
                    dump_path=str(path),
                ) from e
            grads, _ = clip_grad_norm(grads, training.grad_clip)
            optimizer.step(grads)
            losses.append(loss.item())
            step += 1

        metric = validation_metric(model, val_samples, objective, training.batch_size)
        record.epochs.append(
            EpochRecord(
                epoch=epoch + 1,
                train_loss=float(np.mean(losses)),
                val_metric=metric,
                lam=lam,
                steps=step,
            )
        )
        logger.info(
            f"{stage} epoch {epoch + 1}/{epochs}: train loss {np.mean(losses):.6f}, "
            f"validation {metric:.6f}, lambda {lam:.4g}"
        )

        if training.patience and not math.isnan(metric):
            if metric < best_metric:
                best_metric, best_state, bad_epochs = metric, model.state_dict(), 0
                record.best_epoch = epoch + 1
            else:
                bad_epochs += 1
                if bad_epochs >= training.patience:
                    logger.info(
                        f"{stage}: early stop after epoch {epoch + 1}, "
                        f"best epoch {record.best_epoch}"
                    )
                    record.stopped_early = True
                    break

    if best_state is not None and record.best_epoch != len(record.epochs):
        model.load_state_dict(best_state)
    record.steps = step
    record.rng_state = rng.bit_generator.state
    return record


def write_loss_curve(record: TrainingRecord, directory: Union[str, Path]) -> Path:
    frame = pd.DataFrame([epoch.model_dump() for epoch in record.epochs])
    if frame.empty:
        frame = pd.DataFrame(columns=list(EpochRecord.model_fields))
    path = Path(directory) / f"loss_{record.stage}.csv"
    return atomic_write_text(path, frame.to_csv(index=False))


def _windows(config: ExperimentConfig, events) -> list[NowcastSample]:
    return window(events, config.model.in_steps, config.model.out_steps, config.data.stride)


def train(config: ExperimentConfig) -> TrainOutcome:
    """
    Train the configured variant and persist its checkpoints, loss curves and resolved config.

    Args:
        config: Experiment configuration

    Returns:
        TrainOutcome naming every checkpoint written
    """
    splits, manifest = prepare_dataset(config.data)
    train_samples = _windows(config, splits.train)
    val_samples = _windows(config, splits.validation)
    directory = run_dir(config)
    write_resolved_config(config, directory)
    atomic_write_json(directory / "dataset_manifest.json", manifest.model_dump())

    training = config.training
    seed = training.seed
    model_config = config.variant_model()
    records: list[TrainingRecord] = []
    checkpoints: list[str] = []
    logger.info(
        f"Training {config.variant} on {len(train_samples)} samples "
        f"({len(val_samples)} validation) for {training.epochs} epochs"
    )

    def run(model: NowcastModel, objective: Objective, epochs: int, seed: int, stage: str) -> None:
        record = fit(
            model, train_samples, val_samples, training, objective, epochs, seed, stage, directory
        )
        records.append(record)

    def persist(model: NowcastModel, variant: str, filename: str) -> None:
        step = sum(r.steps for r in records)
        checkpoint = Checkpoint.from_model(
            model, step=step, rng_state=records[-1].rng_state, variant=variant
        )
        checkpoints.append(str(save_checkpoint(checkpoint, directory / filename)))

    if config.variant == "edl":
        model = NowcastModel(model_config, seed=seed)
        run(model, "evidential", training.epochs, seed, "edl")
        persist(model, "edl", MODEL_FILE)

    elif config.variant == "p-edl":
        pretrain_epochs, finetune_epochs = training.pretrain_split()
        backbone = NowcastModel(model_config.with_head("deterministic"), seed=seed)
        run(backbone, "mse", pretrain_epochs, seed, "pretrain")
        persist(backbone, "pretrain", PRETRAIN_FILE)
        model = pretrain_transfer(backbone, model_config, seed=seed)
        run(model, "evidential", finetune_epochs, seed + 1, "finetune")
        persist(model, "p-edl", MODEL_FILE)

    elif config.variant == "ensemble":
        ensemble = DeepEnsemble.initialize(model_config, config.ensemble, base_seed=seed)
        for index, member in enumerate(ensemble.members):
            run(member, "mse", training.epochs, member.seed, f"member{index:02d}")
        ensemble.save(
            directory / ENSEMBLE_DIR,
            step=sum(r.steps for r in records),
            rng_states=[r.rng_state for r in records],
        )
        checkpoints.append(str(directory / ENSEMBLE_DIR))

    elif config.variant == "mc-dropout":
        if model_config.dropout_rate == 0.0:
            logger.warning("mc-dropout variant trained with dropout_rate 0; its variance will be 0")
        model = NowcastModel(model_config, seed=seed)
        run(model, "mse", training.epochs, seed, "mc-dropout")
        persist(model, "mc-dropout", MODEL_FILE)

    else:
        raise TrainingError(f"Unknown variant: {config.variant}")

    for record in records:
        write_loss_curve(record, directory)
    return TrainOutcome(
        variant=config.variant, run_dir=str(directory), checkpoints=checkpoints, records=records
    )
