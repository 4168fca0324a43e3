from pathlib import Path

from caufrac._yaml_utils import DOCUMENT_SUFFIXES
from caufrac.errors import SchemaError


def expand_model_paths(paths: list[Path]) -> list[Path]:
    """Replace directories with the model documents directly inside them"""
    expanded: list[Path] = []
    for path in paths:
        if path.is_dir():
            found = sorted(
                child
                for child in path.iterdir()
                if child.is_file() and child.suffix in DOCUMENT_SUFFIXES
            )
            if not found:
                raise SchemaError(f"No model documents in {path}", str(path))
            expanded.extend(found)
        else:
            expanded.append(path)
    return expanded
