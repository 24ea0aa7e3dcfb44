"""
Run configuration: a flat text file of ``key = value`` lines with dotted keys.

``#`` starts a comment, blank lines are ignored and a key may appear only once
per file. Values given on the command line as ``--key value`` override the
file. See doc/config.md for the key table.
"""

import copy
import logging

from . import SCHEME_KINDS
from .classifiers import (KINDS, PARAMS, PRESETS, ClassifierError,
                          ClassifierSpec, coerce_params)
from .data import FORMATS
from .hierarchy import LINKAGES


log = logging.getLogger(__name__)

PARAMS_PREFIX = "classifier.params."
METHODS = ("divisive", "agglomerative")


class ConfigError(ValueError):
    def __init__(self, key, message):
        super(ConfigError, self).__init__("%s: %s" % (key, message))
        self.key = key


def _str(value):
    value = value.strip()
    if not value:
        raise ValueError("empty value")
    return value


def _bool(value):
    text = value.strip().lower()
    if text in ("true", "yes", "1"):
        return True
    if text in ("false", "no", "0"):
        return False
    raise ValueError("expected true/false/yes/no/1/0, got %r" % value)


def _int_at_least(low):
    def convert(value):
        value = int(value)
        if value < low:
            raise ValueError("must be >= %d" % low)
        return value
    return convert


def _n_jobs(value):
    value = int(value)
    if value == 0:
        raise ValueError("must not be 0")
    return value


def _threshold(value):
    value = float(value)
    if not 0 < value <= 1:
        raise ValueError("must lie in (0, 1]")
    return value


def _choice(*options):
    def convert(value):
        value = value.strip()
        if value not in options:
            raise ValueError("expected one of %s, got %r" %
                             (", ".join(options), value))
        return value
    return convert


def _label_column(value):
    value = _str(value)
    try:
        return int(value)
    except ValueError:
        return value


def _schemes(value):
    items = [item.strip() for item in value.split(",") if item.strip()]
    if items == ["all"]:
        return SCHEME_KINDS
    unknown = [item for item in items if item not in SCHEME_KINDS]
    if unknown or not items:
        raise ValueError("unknown scheme(s) %s; choose from all, %s" %
                         (", ".join(unknown) or "(none)",
                          ", ".join(SCHEME_KINDS)))
    # fc always runs, first, so that learning efficiency is computable
    return tuple(kind for kind in SCHEME_KINDS
                 if kind == "fc" or kind in items)


# key -> (default, converter); None default with required=True below
KEYS = {
    "dataset.path": (None, _str),
    "dataset.format": ("csv", _choice(*FORMATS)),
    "dataset.label_column": (-1, _label_column),
    "dataset.header": (True, _bool),
    "seed": (0, _int_at_least(0)),
    "cv.folds": (5, _int_at_least(2)),
    "cv.n_jobs": (1, _n_jobs),
    "reduce.enabled": (True, _bool),
    "reduce.kind": ("lda", _choice("lda")),
    "reduce.variance_threshold": (0.95, _threshold),
    "hierarchy.method": ("divisive", _choice(*METHODS)),
    "hierarchy.linkage": ("single", _choice(*LINKAGES)),
    "hierarchy.clusterer": ("kmedoids", _choice("kmedoids")),
    "schemes": (SCHEME_KINDS, _schemes),
    "classifier.preset": (None, _choice(*sorted(PRESETS))),
    "classifier.kind": (None, _str),
    "output.dir": ("output", _str),
}

# keys that do not change any computed result
_NOT_ECHOED = ("output.dir", "cv.n_jobs")


class RunConfig:
    """Validated settings of one run, keyed by dotted names."""

    def __init__(self, values, classifier_params):
        self.values = dict(values)
        self.classifier_params = dict(classifier_params)
        self.classifier = self._build_classifier()

    def _build_classifier(self):
        preset = self.values["classifier.preset"]
        kind = self.values["classifier.kind"]
        params = {}
        if preset is not None:
            preset_kind, preset_params = PRESETS[preset]
            if kind is not None and kind != preset_kind:
                raise ConfigError("classifier.kind",
                                  "preset %s uses %s, not %s" %
                                  (preset, preset_kind, kind))
            kind = preset_kind
            params.update(preset_params)
        if kind is None:
            raise ConfigError("classifier.kind",
                              "required (or set classifier.preset)")
        if kind not in KINDS:
            raise ConfigError("classifier.kind", "expected one of %s, got %r"
                              % (", ".join(KINDS), kind))
        params.update(self.classifier_params)
        for name, value in self.classifier_params.items():
            if name not in PARAMS[kind]:
                raise ConfigError(PARAMS_PREFIX + name,
                                  "not a %s hyperparameter" % kind)
            try:
                coerce_params(kind, {name: value})
            except ClassifierError as err:
                raise ConfigError(PARAMS_PREFIX + name, str(err))
        try:
            return ClassifierSpec(kind, params, self.values["seed"])
        except ClassifierError as err:
            raise ConfigError("classifier.kind", str(err))

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self):
        return self.values["seed"]

    @property
    def folds(self):
        return self.values["cv.folds"]

    @property
    def n_jobs(self):
        return self.values["cv.n_jobs"]

    @property
    def reduce_enabled(self):
        return self.values["reduce.enabled"]

    @property
    def variance_threshold(self):
        return self.values["reduce.variance_threshold"]

    @property
    def method(self):
        return self.values["hierarchy.method"]

    @property
    def linkage(self):
        return self.values["hierarchy.linkage"]

    @property
    def schemes(self):
        return self.values["schemes"]

    @property
    def output_dir(self):
        return self.values["output.dir"]

    def replace(self, **changes):
        """Copy with some dotted keys changed; pass keys with dots replaced
        by double underscores, e.g. ``hierarchy__method='agglomerative'``."""
        values = copy.deepcopy(self.values)
        for name, value in changes.items():
            key = name.replace("__", ".")
            if key not in KEYS:
                raise ConfigError(key, "unknown key")
            values[key] = value
        return RunConfig(values, self.classifier_params)

    def echo(self):
        """Effective settings as a flat mapping, without output location or
        worker counts."""
        out = {}
        for key, value in self.values.items():
            if key in _NOT_ECHOED:
                continue
            out[key] = list(value) if isinstance(value, tuple) else value
        out["classifier.kind"] = self.classifier.kind
        for name, value in self.classifier.model_params().items():
            out[PARAMS_PREFIX + name] = value
        return dict(sorted(out.items()))

    def __repr__(self):
        return "<%s %s>" % (self.__class__.__name__,
                            self.values["dataset.path"])


def _parse_lines(text):
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d" % lineno,
                              "expected 'key = value', got %r" % line)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("line %d" % lineno, "missing key")
        if key in entries:
            raise ConfigError(key, "given twice (line %d)" % lineno)
        entries[key] = value
    return entries


def parse_overrides(tokens):
    """Turns leftover ``--key value`` / ``--key=value`` arguments into a
    mapping."""
    overrides = {}
    tokens = list(tokens)
    while tokens:
        token = tokens.pop(0)
        if not token.startswith("--") or len(token) < 3:
            raise ConfigError(token, "unexpected argument")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        elif tokens and not tokens[0].startswith("--"):
            value = tokens.pop(0)
        else:
            raise ConfigError(key, "missing value")
        overrides[key] = value
    return overrides


def parse_config(text="", overrides=None):
    entries = _parse_lines(text or "")
    entries.update(overrides or {})

    values = {}
    classifier_params = {}
    for key, raw in entries.items():
        if key.startswith(PARAMS_PREFIX):
            name = key[len(PARAMS_PREFIX):]
            if not name:
                raise ConfigError(key, "missing hyperparameter name")
            classifier_params[name] = str(raw).strip()
            continue
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        convert = KEYS[key][1]
        try:
            values[key] = convert(str(raw))
        except ValueError as err:
            raise ConfigError(key, str(err))

    for key, (default, _) in KEYS.items():
        values.setdefault(key, default)
    if values["dataset.path"] is None:
        raise ConfigError("dataset.path", "required")

    config = RunConfig(values, classifier_params)
    log.debug("Configuration: %s", config.echo())
    return config


def read_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fp:
            text = fp.read()
    except OSError as err:
        raise ConfigError("config", "cannot read %s (%s)" % (path, err))
    return parse_config(text, overrides)
