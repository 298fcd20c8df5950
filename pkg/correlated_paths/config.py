"""Experiment configuration: file loading, overrides, schema validation."""

import copy
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import toml

from correlated_paths.choices import OutputFormatChoices, PriorChoices, SignChoices, StartChoices
from correlated_paths.detect import ScanEngine
from correlated_paths.exceptions import ValidationError
from correlated_paths.graph import TorusLattice
from correlated_paths.paths import PathClass
from correlated_paths.utils.general import parse_assignment, set_dotted
from correlated_paths.utils.validators import ExperimentValidator

logger = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).parent / "experiment-config-schema.json"


def load_schema():
    """Return the packaged JSON schema."""
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))


def read_config_file(path):
    """Read a TOML or JSON config file into a dict."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ValidationError(f"Cannot read config file {path}: {err}") from err
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            return toml.loads(text)
        if suffix == ".json":
            return json.loads(text)
    except (toml.TomlDecodeError, json.JSONDecodeError) as err:
        raise ValidationError(f"Cannot parse config file {path}: {err}") from err
    raise ValidationError(f"Config file {path} must end in .toml or .json")


def apply_overrides(data, assignments):
    """Return a copy of ``data`` with every ``dotted.key=value`` assignment applied."""
    data = copy.deepcopy(data)
    for assignment in assignments:
        key, value = parse_assignment(assignment)
        set_dotted(data, key, value)
        logger.debug("Override %s=%r", key, value)
    return data


def _fill_defaults(schema, data):
    """Fill schema defaults into ``data``, creating optional sections on the way."""
    for key, value in schema.get("properties", {}).items():
        if value.get("type") == "object":
            if key not in data and key not in schema.get("required", ()):
                data[key] = {}
            if key in data and isinstance(data[key], dict):
                _fill_defaults(value, data[key])
        elif "default" in value and key not in data:
            data[key] = copy.deepcopy(value["default"])


def validate_schema(data, schema=None):
    """Validate ``data`` against the schema, then fill in defaults; returns the completed copy."""
    schema = schema or load_schema()
    data = copy.deepcopy(data)
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as err:
        key = ".".join(str(part) for part in err.absolute_path) or None
        raise ValidationError(f"Invalid configuration at {key or 'top level'}: {err.message}", key=key) from err
    _fill_defaults(schema, data)
    return data


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: what to simulate, how to test, where to write.

    ``data`` keeps the completed config dict, echoed verbatim into JSON reports.
    """

    data: dict

    @classmethod
    def from_dict(cls, data):
        """Validate a raw dict (schema, then domain checks)."""
        completed = validate_schema(data)
        ExperimentValidator(completed).validate()
        return cls(completed)

    @classmethod
    def load(cls, path=None, overrides=(), seed=None, threads=None, output=None):
        """Read ``path`` (optional), apply overrides and shorthands, and validate."""
        data = read_config_file(path) if path else {}
        assignments = list(overrides)
        for key, value in (("seed", seed), ("threads", threads), ("output", output)):
            if value is not None:
                assignments.append(f"{key}={json.dumps(value)}")
        config = cls.from_dict(apply_overrides(data, assignments))
        logger.info("Loaded experiment config for %s", config.path_class)
        return config

    def to_json(self):
        """Return the completed config dict."""
        return copy.deepcopy(self.data)

    @property
    def seed(self):
        """Master seed."""
        return self.data["seed"]

    @property
    def threads(self):
        """Worker processes."""
        return self.data["threads"]

    @property
    def output(self):
        """Output file stem."""
        return self.data["output"]

    @property
    def formats(self):
        """Requested output formats."""
        return [OutputFormatChoices(value) for value in self.data["formats"]]

    @property
    def lattice(self):
        """The torus lattice."""
        return TorusLattice(self.data["lattice"]["d"], self.data["lattice"]["m"])

    @property
    def path_class(self):
        """The path class; a known start defaults to the origin."""
        section = self.data["path_class"]
        lattice = self.lattice
        start = None
        if StartChoices(section["start"]) == StartChoices.KNOWN:
            start = lattice.encode(section["start_node"] or [0] * lattice.d)
        return PathClass(lattice, section["k"], start=start, oriented=section["oriented"])

    @property
    def sign(self):
        """Pair comparison of the scan test."""
        return SignChoices(self.data["test"]["sign"])

    @property
    def budget(self):
        """Enumeration budget."""
        return self.data["test"]["budget"]

    @property
    def engine(self):
        """Scan engine."""
        return ScanEngine.parse(self.data["test"]["engine"], budget=self.budget)

    @property
    def risk(self):
        """Risk-curve section."""
        return self.data["risk"]

    @property
    def moments(self):
        """Moment-check section."""
        return self.data["moments"]

    @property
    def bounds(self):
        """Lower-bound section."""
        return self.data["bounds"]

    @property
    def prior(self):
        """Prior kind for the lower-bound constructions."""
        return PriorChoices(self.data["bounds"]["prior"])
