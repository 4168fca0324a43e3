import json
from pathlib import Path
from typing import Any

from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from caufrac.errors import IOWriteError, SchemaError

DOCUMENT_SUFFIXES = (".json", ".yaml", ".yml")


def load_document(path: Path) -> dict[str, Any]:
    """Load a JSON or YAML document into a dictionary.

    JSON is read with the json module so that numbers keep their exact JSON types;
    anything else goes through the ruamel.yaml safe loader.

    """
    if not path.is_file():
        raise SchemaError(f"No such file: {path}", str(path))

    if path.suffix not in DOCUMENT_SUFFIXES:
        raise SchemaError(
            f"Expected '{path.name}' to end with one of {DOCUMENT_SUFFIXES}", str(path)
        )

    try:
        if path.suffix == ".json":
            document = json.loads(path.read_text(encoding="utf-8"))
        else:
            document = YAML(typ="safe").load(path)  # type: ignore
    except (ValueError, YAMLError) as e:
        raise SchemaError(f"Could not parse {path.name}: {e}", str(path)) from None

    if not isinstance(document, dict):
        raise SchemaError(f"Expected a mapping at the top of {path.name}", str(path))

    return document  # type: ignore


def dumps_json(document: Any) -> str:
    """Deterministic JSON text: sorted keys, two space indent, trailing newline."""
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dump_json(document: Any, path: Path) -> None:
    write_text(path, dumps_json(document))


def write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise IOWriteError(f"Could not write {path}: {e}", str(path)) from e


def write_bytes(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise IOWriteError(f"Could not write {path}: {e}", str(path)) from e
