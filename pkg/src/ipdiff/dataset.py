"""On-disk dataset layout and solution-pool sampling.

A dataset directory holds ``<stem>.ip`` instance files with matching
``<stem>.pool`` solution pools (as written by ``ipdiff gen`` and
``ipdiff collect``).  Pool sampling weights better objectives higher:
softmax over the min-max-normalized objective in minimization sense.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .instance import MAX, IPInstance, Solution, read_instance, read_pool


@dataclass
class InstanceRecord:
    instance: IPInstance
    pool: list[tuple[Solution, float]]


def load_dataset(directory) -> list[InstanceRecord]:
    directory = Path(directory)
    records = []
    for ip_path in sorted(directory.glob("*.ip")):
        pool_path = ip_path.with_suffix(".pool")
        pool = read_pool(pool_path) if pool_path.exists() else []
        records.append(InstanceRecord(instance=read_instance(ip_path), pool=pool))
    if not records:
        raise FileNotFoundError(f"no *.ip files under {directory}")
    return records


def pool_weights(record: InstanceRecord, eps: float = 1e-8) -> np.ndarray:
    """Sampling probabilities over the pool, better objectives first."""
    if not record.pool:
        raise ValueError(f"instance {record.instance.name} has an empty pool")
    objs = np.array([obj for _, obj in record.pool], dtype=float)
    if record.instance.sense == MAX:
        objs = -objs
    scaled = (objs - objs.min()) / (objs.max() - objs.min() + eps)
    logits = -scaled
    w = np.exp(logits - logits.max())
    return w / w.sum()


def sample_solution(record: InstanceRecord, rng: np.random.Generator) -> Solution:
    idx = rng.choice(len(record.pool), p=pool_weights(record))
    return record.pool[idx][0]
