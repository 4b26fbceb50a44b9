"""Public temporal edge-weight datasets and their reference statistics.

Nothing is downloaded automatically. Fetch the files listed here, place
them in ``$TLGCN_DATA_DIR`` (or pass a path) and compare the counts printed
by ``tlgcn prepare --dataset NAME`` with the reference values.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

DATA_DIR_ENV = "TLGCN_DATA_DIR"


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    url: str
    filename: str
    edges: int
    nodes: int
    density: float
    t_slots: int
    aggregator: str
    index: str = "compact"
    columns: tuple[str, ...] = ("src", "dst", "weight", "time")
    note: str = ""


REGISTRY: dict[str, DatasetInfo] = {
    d.name: d
    for d in (
        DatasetInfo(
            "bitcoin-otc", "https://snap.stanford.edu/data/soc-sign-bitcoinotc.csv.gz",
            "soc-sign-bitcoinotc.csv", 35592, 6005, 0.000986, 64, "last", index="span",
            note="trust ratings in [-10, 10]; node count is the id span 1..6005"),
        DatasetInfo(
            "bitcoin-alpha", "https://snap.stanford.edu/data/soc-sign-bitcoinalpha.csv.gz",
            "soc-sign-bitcoinalpha.csv", 24186, 7604, 0.000418, 64, "last", index="span",
            note="trust ratings in [-10, 10]; node count is the id span 1..7604"),
        DatasetInfo(
            "fb-messages", "https://networkrepository.com/fb-messages.php",
            "fb-messages.edges", 61734, 1899, 0.0171, 80, "sum",
            note="message volume between users of a student social network"),
        DatasetInfo(
            "email", "https://snap.stanford.edu/data/email-Eu-core-temporal.html",
            "email-Eu-core-temporal.txt", 332334, 986, 0.342, 80, "sum",
            columns=("src", "dst", "time"),
            note="each row is one e-mail; weights are counts after aggregation"),
    )
}


def get(name: str) -> DatasetInfo:
    key = name.lower()
    if key not in REGISTRY:
        raise KeyError(f"unknown dataset {name!r}; known: {', '.join(REGISTRY)}")
    return REGISTRY[key]


def locate(name: str, root=None) -> Path | None:
    """Path of the raw file for ``name`` under ``root`` (default ``$TLGCN_DATA_DIR``).

    Accepts the plain file or its ``.gz`` download; returns None if neither exists.
    """
    root = root or os.environ.get(DATA_DIR_ENV)
    if not root:
        return None
    info = get(name)
    for candidate in (Path(root) / info.filename, Path(root) / (info.filename + ".gz")):
        if candidate.exists():
            return candidate
    return None
