"""Dataset-level helpers: file discovery and labeled/unlabeled splits.

Functions:
    discover_sequence_files: Sorted sequence files under a file or directory
    strip_labels: Copy of a sequence without skeletons
    split_labeled_unlabeled: Sequence-level split into a small labeled part
        and an unlabeled remainder

Expected Directory Structure:

    <dataset>/
    ├── seq_000.jsonl      # text sequence files
    ├── seq_001.bin        # binary sequence files
    └── ...                # sidecars (*.stages.jsonl) are skipped

Example:
    >>> files = discover_sequence_files(Path("data/lidar"))
    >>> labeled, unlabeled = split_labeled_unlabeled(sequences, 0.1, SeededRng(3))
"""

from pathlib import Path

from geometry import Frame, Sequence
from seeded_rng import SeededRng

SEQUENCE_SUFFIXES = (".jsonl", ".txt", ".seq", ".bin")
SIDECAR_SUFFIXES = (".stages.jsonl", ".log.jsonl")


def is_sequence_file(path: Path) -> bool:
    name = path.name
    if any(name.endswith(suffix) for suffix in SIDECAR_SUFFIXES):
        return False
    return path.is_file() and path.suffix in SEQUENCE_SUFFIXES


def discover_sequence_files(root: Path) -> list[Path]:
    """A single file is returned as-is; a directory is searched recursively."""
    if root.is_file():
        return [root]
    if not root.exists():
        return []
    return sorted(p for p in root.rglob("*") if is_sequence_file(p))


def strip_labels(seq: Sequence) -> Sequence:
    return seq.with_frames([Frame(t=f.t, cloud=f.cloud) for f in seq.frames])


def split_labeled_unlabeled(
    sequences: list[Sequence],
    labeled_fraction: float,
    rng: SeededRng,
) -> tuple[list[Sequence], list[Sequence]]:
    """Pick round(fraction * N) sequences (at least one) to keep their labels.

    The remaining sequences lose their skeletons. Both lists keep input order.
    """
    if not 0.0 < labeled_fraction <= 1.0:
        raise ValueError(f"labeled_fraction must be within (0, 1], got {labeled_fraction}")
    count = len(sequences)
    if count == 0:
        return [], []
    n_labeled = min(count, max(1, int(round(labeled_fraction * count))))
    chosen = set(rng.child("split").generator().choice(count, size=n_labeled, replace=False).tolist())
    labeled = [seq for i, seq in enumerate(sequences) if i in chosen]
    unlabeled = [strip_labels(seq) for i, seq in enumerate(sequences) if i not in chosen]
    return labeled, unlabeled
