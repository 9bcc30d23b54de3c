import json
import sys
from typing import Optional, TextIO

from pydantic import ValidationError

from mci.core.errors import ConfigError, MciError


def settings_error(exc: ValidationError) -> ConfigError:
    """Wrap an environment validation failure so it reports like any other config error."""
    messages = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()]
    return ConfigError("Invalid MCI_* environment settings", context={"errors": messages})


def report_error(exc: MciError, stream: Optional[TextIO] = None) -> int:
    """Write the one-line JSON diagnostic and return the mapped exit code."""
    target = stream if stream is not None else sys.stderr
    target.write(json.dumps(exc.payload(), default=str) + "\n")
    return exc.exit_code
