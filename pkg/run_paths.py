from dataclasses import dataclass
from pathlib import Path

from dataset_loader import discover_sequence_files

_SUFFIX_FOR_FORMAT = {"text": ".jsonl", "binary": ".bin"}


@dataclass(frozen=True)
class FilePaths:
    source: Path
    output: Path
    stages: Path


def stage_log_path(output: Path) -> Path:
    return output.with_name(output.name + ".stages.jsonl")


def _output_name(relative: Path, fmt: str) -> Path:
    wanted = _SUFFIX_FOR_FORMAT[fmt]
    if (fmt == "binary") != (relative.suffix == ".bin"):
        return relative.with_suffix(wanted)
    return relative


def build_file_paths(source: Path, output: Path, fmt: str = "text") -> list[FilePaths]:
    """Pair every input sequence file with its output and sidecar path.

    A file input writes to ``output`` as given, or inside it when ``output`` is
    an existing directory. A directory input mirrors each
    file's relative path under the ``output`` directory; the suffix changes
    only when the output format differs from the input's.
    """
    if source.is_file():
        if output.is_dir():
            output = output / _output_name(Path(source.name), fmt)
        return [FilePaths(source=source, output=output, stages=stage_log_path(output))]
    paths = []
    for path in discover_sequence_files(source):
        target = output / _output_name(path.relative_to(source), fmt)
        paths.append(FilePaths(source=path, output=target, stages=stage_log_path(target)))
    return paths
