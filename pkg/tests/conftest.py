import logging
import os
import shutil
from pathlib import Path

import pytest
from click.testing import Result
from typer import Typer
from typer.testing import CliRunner

# Prevent pytest from catching exceptions when debugging in vscode so that break on
# exception works correctly (see: https://github.com/pytest-dev/pytest/issues/7409)
if os.getenv("PYTEST_RAISE", "0") == "1":

    @pytest.hookimpl(tryfirst=True)
    def pytest_exception_interact(call):
        raise call.excinfo.value

    @pytest.hookimpl(tryfirst=True)
    def pytest_internalerror(excinfo):
        raise excinfo.value


class Helper:
    @staticmethod
    def assert_output_matches(expected_path: Path, output_path: Path):
        """Compare a file, or every file below a directory, with frozen output."""
        if output_path.is_dir():
            outputs = sorted(p for p in output_path.rglob("*") if p.is_file())
            pairs = [
                (expected_path / p.relative_to(output_path), p) for p in outputs
            ]
        else:
            pairs = [(expected_path, output_path)]

        if os.environ.get("CAUFRAC_REGENERATE_OUTPUT", None):
            # We were asked to regenerate output, so copy output files to expected
            for expected, output in pairs:
                expected.parent.mkdir(parents=True, exist_ok=True)
                shutil.copy(output, expected)

        for expected, output in pairs:
            assert expected.read_text() == output.read_text(), output

    @staticmethod
    def invoke(app: Typer, *args: object) -> Result:
        """Run the CLI, re-raising anything that is not a clean exit."""
        result = CliRunner().invoke(app, [str(arg) for arg in args])
        if result.exception and not isinstance(result.exception, SystemExit):
            raise result.exception
        return result


@pytest.fixture
def helper():
    return Helper


@pytest.fixture(autouse=True)
def reset_logging():
    # The CLI attaches a stderr handler that outlives the CliRunner's streams
    yield
    logger = logging.getLogger("caufrac")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)
