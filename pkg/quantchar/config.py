# This source code is licensed under the terms of the MIT license
# found in the "LICENSE" file in the root directory of this source tree.

"""Experiment configuration: a multi-valued INI reader and `ExperimentConfig`.

An experiment file has one section per experiment plus an optional
`[all]` section read first.  A key may be repeated to give a list:

    [grid_law]
    family: normal
    N_list: 10
    N_list: 25     ; repeated keys accumulate
    N_list: 50, 100
"""

from configparser import RawConfigParser
from dataclasses import dataclass, field
import logging

from .errors import ConfigError


logger = logging.getLogger(__name__)


class MultiValueSection(dict):
    """A section dictionary for RawConfigParser that keeps repeated keys.

    While reading, RawConfigParser stores each value as a one-element list
    and appends continuation lines to it; at the end of the read it joins
    every list with newlines.  Storing a list over an existing list extends
    it, so a repeated key ends up as one newline-joined value holding every
    occurrence in file order.
    """

    def __setitem__(self, key, value):
        if isinstance(value, list) and key in self:
            previous = dict.__getitem__(self, key)
            if isinstance(previous, list):
                previous.extend(value)
                return
        dict.__setitem__(self, key, value)


class ExperimentConfigParser(object):
    """A config parser whose getters always return a list of values.

    Missing sections and options give an empty list, so callers never
    have to check for them first.
    """

    def __init__(self, filenames_to_try=()):
        self._cp = RawConfigParser(dict_type=MultiValueSection, strict=False,
                inline_comment_prefixes=(';',))
        if isinstance(filenames_to_try, str):
            filenames_to_try = [filenames_to_try]
        self._filenames_to_try = list(filenames_to_try)

    def read(self, filenames_to_try=()):
        if isinstance(filenames_to_try, str):
            filenames_to_try = [filenames_to_try]
        self._filenames_to_try.extend(filenames_to_try)
        read_ok = self._cp.read(self._filenames_to_try)
        logger.debug("config files read: %s", read_ok)
        return read_ok

    def read_string(self, text):
        self._cp.read_string(text)

    def sections(self):
        return self._cp.sections()

    def options(self, section_name):
        if not self._cp.has_section(section_name):
            return []
        return self._cp.options(section_name)

    def get(self, section_name, option_name):
        option_name = self._cp.optionxform(option_name)
        if section_name is None:
            section_names = self.sections()
        elif isinstance(section_name, str):
            section_names = [section_name]
        else:
            section_names = section_name

        optvals = []
        for name in section_names:
            if not self._cp.has_option(name, option_name):
                continue
            raw = self._cp.get(name, option_name)
            optvals.extend(line.strip() for line in raw.split("\n") if line.strip())
        return optvals

    def getint(self, section_name, option_name):
        return [int(v) for v in self.get(section_name, option_name)]

    def getfloat(self, section_name, option_name):
        return [float(v) for v in self.get(section_name, option_name)]

    def getboolean(self, section_name, option_name):
        return [self._coerce_to_boolean(v) for v in self.get(section_name, option_name)]

    _boolean_states = {'1': True, 'yes': True, 'true': True, 'on': True,
                       '0': False, 'no': False, 'false': False, 'off': False}

    def _coerce_to_boolean(self, optval_str):
        ovs_lower = optval_str.lower()
        if ovs_lower not in self._boolean_states:
            raise ValueError("Not a boolean: %s" % optval_str)
        return self._boolean_states[ovs_lower]


##
## Experiment configuration
##

DEFAULT_CONFIG_FNAME = "quantchar-experiments.cfg"

# Parameter name -> (type, default).  "ints" is a list of integers.
PARAMETERS = {
    "counterexample": {
        "N": (int, 2),
        "n_max": (int, 8),
        "grid_budget": (int, 20000),
        "half_width": (float, 10.0),
        "pitch": (float, 0.25),
        "polish": (int, 5),
        "q22_lattice_budget": (int, 1024),
    },
    "grid_law": {
        "family": (str, "normal"),
        "p": (float, 2.0),
        "N_list": ("ints", [10, 25, 50, 100]),
        "lloyd_iters": (int, 2000),
        "pool_size": (int, 200000),
        "replicates": (int, 1),
    },
    "equivalence": {
        "family": (str, "shrinking-dirac"),
        "N": (int, 2),
        "p": (float, 1.0),
        "n_list": ("ints", [1, 2, 4, 8, 16]),
        "half_width": (float, 4.0),
        "pitch": (float, 0.25),
        "grid_budget": (int, 20000),
    },
}

REQUIRED = {
    "counterexample": ("N", "n_max", "grid_budget", "half_width", "pitch"),
    "grid_law": ("family", "p", "N_list", "lloyd_iters", "pool_size"),
    "equivalence": ("family", "N", "p", "n_list", "half_width", "pitch"),
}

POSITIVE = ("N", "n_max", "grid_budget", "half_width", "pitch", "lloyd_iters", "pool_size",
        "replicates", "q22_lattice_budget")


def _coerce(experiment, name, values):
    kind = PARAMETERS[experiment][name][0]
    if isinstance(values, (str, int, float)):
        values = [values]
    values = list(values)
    try:
        if kind == "ints":
            out = []
            for value in values:
                if isinstance(value, str):
                    out.extend(int(v) for v in value.replace(",", " ").split())
                else:
                    out.append(int(value))
            return out
        if not values:
            raise ConfigError("%s: no value for %s" % (experiment, name))
        # The last occurrence of a scalar key wins.
        return kind(values[-1])
    except ValueError as e:
        raise ConfigError("%s: bad value for %s: %s" % (experiment, name, e))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str = "report.csv"

    def validate(self):
        if self.experiment not in PARAMETERS:
            raise ConfigError("unknown experiment %r (known: %s)"
                    % (self.experiment, ", ".join(sorted(PARAMETERS))))
        known = PARAMETERS[self.experiment]
        unknown = sorted(set(self.parameters) - set(known))
        if unknown:
            raise ConfigError("%s: unknown parameters %s" % (self.experiment, ", ".join(unknown)))
        missing = [k for k in REQUIRED[self.experiment] if k not in self.parameters]
        if missing:
            raise ConfigError("%s: missing required parameters %s"
                    % (self.experiment, ", ".join(missing)))
        for name, value in self.parameters.items():
            kind = known[name][0]
            if kind == "ints":
                if not value or not all(isinstance(v, int) for v in value):
                    raise ConfigError("%s: %s must be a nonempty list of integers, got %r"
                            % (self.experiment, name, value))
                if min(value) < 1:
                    raise ConfigError("%s: %s must be positive, got %r"
                            % (self.experiment, name, value))
                continue
            accepted = (int, float) if kind is float else kind
            if not isinstance(value, accepted) or isinstance(value, bool):
                raise ConfigError("%s: %s must be %s, got %r"
                        % (self.experiment, name, kind.__name__, value))
            if name in POSITIVE and not value > 0:
                raise ConfigError("%s: %s must be positive, got %r"
                        % (self.experiment, name, value))
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer, got %r" % (self.seed,))
        return self


def load_experiment_config(experiment, filenames=(), overrides=None, seed=None,
        output_path=None):
    """Build and validate the configuration of `experiment`.

    Precedence, lowest first: built-in defaults, the `[all]` section, the
    experiment's own section, then `overrides` (name -> value or list).
    """
    if experiment not in PARAMETERS:
        raise ConfigError("unknown experiment %r (known: %s)"
                % (experiment, ", ".join(sorted(PARAMETERS))))
    parser = ExperimentConfigParser()
    parser.read(filenames)

    parameters = {name: default for name, (_, default) in PARAMETERS[experiment].items()}
    file_seed = 0
    for section in ("all", experiment):
        for option in parser.options(section):
            values = parser.get(section, option)
            if option == "seed":
                file_seed = _coerce_seed(values[-1])
                continue
            name = _parameter_name(experiment, option)
            if name is None:
                if section == experiment:
                    raise ConfigError("%s: unknown parameter %r in the config file"
                            % (experiment, option))
                continue
            parameters[name] = _coerce(experiment, name, values)
    for name, value in (overrides or {}).items():
        if value is not None:
            parameters[name] = _coerce(experiment, name, value)

    return ExperimentConfig(experiment, parameters,
            file_seed if seed is None else _coerce_seed(seed),
            output_path or "%s.csv" % experiment).validate()


def _parameter_name(experiment, option):
    # RawConfigParser lowercases option names; parameters keep their case.
    for name in PARAMETERS[experiment]:
        if name.lower() == option:
            return name
    return None


def _coerce_seed(value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError("seed must be an integer, got %r" % (value,))
