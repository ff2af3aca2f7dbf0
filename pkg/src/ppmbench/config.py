"""Pipeline configuration, presets and config-file loading."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

from ppmbench.errors import ConfigError
from ppmbench.log_model import ISO8601, ColumnMapping
from ppmbench.split import REGULAR, STRICT, SplitSpec
from ppmbench.trim import TrimBounds

DEFAULT_TEST_FRACTION = 0.20
DEFAULT_LONG_CASE_CAP = 0.05


@dataclass(frozen=True)
class PipelineConfig:
    input: str | None = None
    case_column: str = "case_id"
    activity_column: str = "activity"
    timestamp_column: str = "timestamp"
    timestamp_format: str = ISO8601
    delimiter: str = ","
    preset: str | None = None
    start_bound: str | None = None
    end_bound: str | None = None
    end_bound_applies_to: str = "end"
    deduplicate: bool = True
    test_fraction: float = DEFAULT_TEST_FRACTION
    remove_long_cases: bool = True
    long_case_cap: float | None = None
    max_duration_days: float | None = None
    split_mode: str = STRICT
    debias_end: bool = True
    debias_test_start: bool = True
    out: str = "benchmark"

    def __post_init__(self) -> None:
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.long_case_cap is not None and not 0 < self.long_case_cap < 1:
            raise ConfigError(f"long_case_cap must lie in (0, 1), got {self.long_case_cap}")
        if self.long_case_cap is not None and self.max_duration_days is not None:
            raise ConfigError("max_duration_days and long_case_cap are mutually exclusive")
        if self.max_duration_days is not None and not self.max_duration_days > 0:
            raise ConfigError("max_duration_days must be positive")
        if self.split_mode not in (REGULAR, STRICT):
            raise ConfigError(f"split_mode must be {REGULAR!r} or {STRICT!r}")
        # validates the bounds early
        self.trim_bounds

    @property
    def mapping(self) -> ColumnMapping:
        return ColumnMapping(
            case_id=self.case_column,
            activity=self.activity_column,
            timestamp=self.timestamp_column,
            timestamp_format=self.timestamp_format,
            delimiter=self.delimiter,
        )

    @property
    def trim_bounds(self) -> TrimBounds:
        return TrimBounds(self.start_bound, self.end_bound, self.end_bound_applies_to)

    @property
    def cap(self) -> float:
        return DEFAULT_LONG_CASE_CAP if self.long_case_cap is None else self.long_case_cap

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.test_fraction, self.split_mode, self.debias_test_start)

    def as_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """SHA-256 over every setting except the output directory."""
        d = self.as_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def updated(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)


CONFIG_KEYS = frozenset(f.name for f in fields(PipelineConfig))


def load_presets() -> dict:
    text = resources.files("ppmbench").joinpath("data/presets.json").read_text(encoding="utf-8")
    return json.loads(text)


def preset_values(name: str) -> dict:
    data = load_presets()
    if name not in data["presets"]:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(data['presets']))}")
    return {**data["defaults"], **data["presets"][name], "preset": name}


def read_config_file(path: str | Path) -> dict:
    try:
        values = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = set(values) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return values


def resolve_config(config_path: str | Path | None = None, preset: str | None = None, **overrides) -> PipelineConfig:
    """Merge preset < config file < explicit overrides; ``None`` overrides are ignored."""
    file_values = read_config_file(config_path) if config_path else {}
    preset = preset or file_values.get("preset")
    values = preset_values(preset) if preset else {}
    values.update(file_values)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if preset:
        values["preset"] = preset
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
