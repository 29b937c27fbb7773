"""Run manifests recording how every output was produced."""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from polarhe.exceptions import MalformedInputError

PathLike = Union[str, Path]

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    """Provenance of one command invocation.

    Attributes:
        command (str): Subcommand name
        config (dict): The fully resolved configuration
        inputs (dict): Input paths keyed by role
        outputs (list): Output paths relative to the output directory
        seeds (dict): Every seed the run used
        version (str): Package version
        status (str): ``"running"`` until the outputs are final, then
            ``"complete"``
        wall_clock_seconds (float, optional): Total duration of the run
    """

    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    seeds: Dict[str, int] = field(default_factory=dict)
    version: str = ""
    status: str = "running"
    wall_clock_seconds: Optional[float] = None

    def write(self, directory: PathLike) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True))
        return path

    def complete(self, directory: PathLike, wall_clock_seconds: float) -> Path:
        self.status = "complete"
        self.wall_clock_seconds = wall_clock_seconds
        return self.write(directory)

    @classmethod
    def read(cls, path: PathLike) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        try:
            values = json.loads(path.read_text())
            return cls(**values)
        except (json.JSONDecodeError, TypeError) as err:
            raise MalformedInputError(f"{path}: not a run manifest ({err})") from err

    @staticmethod
    def is_manifest(values: Dict[str, Any]) -> bool:
        """Whether a parsed JSON document is a manifest rather than a config."""

        return {"command", "config", "status"} <= set(values)
