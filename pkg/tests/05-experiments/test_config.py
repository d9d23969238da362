import os

import pytest

from quantchar.config import (DEFAULT_CONFIG_FNAME, ExperimentConfig, ExperimentConfigParser,
        load_experiment_config)
from quantchar.errors import ConfigError


SHIPPED_CONFIG = os.path.join(os.path.dirname(__file__), "..", "..", DEFAULT_CONFIG_FNAME)


def write_config(tmp_path, text):
    path = tmp_path / "experiments.cfg"
    path.write_text(text)
    return str(path)


# ExperimentConfigParser

def test_repeated_keys_accumulate():
    cp = ExperimentConfigParser()
    cp.read_string("[grid_law]\nN_list: 10\nN_list: 25\nfamily: normal\nN_list: 50, 100\n")
    assert cp.get("grid_law", "N_list") == ["10", "25", "50, 100"]
    assert cp.get("grid_law", "family") == ["normal"]


def test_getters_span_sections():
    cp = ExperimentConfigParser()
    cp.read_string("[all]\nseed: 3\n[equivalence]\nseed: 5\npitch: 0.5\n")
    assert cp.getint(None, "seed") == [3, 5]
    assert cp.getint(["equivalence", "all"], "seed") == [5, 3]
    assert cp.getfloat("equivalence", "pitch") == [0.5]


def test_missing_sections_and_options_are_empty():
    cp = ExperimentConfigParser()
    cp.read_string("[all]\nseed: 3\n")
    assert cp.options("counterexample") == []
    assert cp.get("counterexample", "N") == []
    assert cp.get("all", "pitch") == []


def test_booleans():
    cp = ExperimentConfigParser()
    cp.read_string("[all]\nflag: yes\nflag: Off\nflag: 1\nbad: maybe\n")
    assert cp.getboolean("all", "flag") == [True, False, True]
    with pytest.raises(ValueError) as excinfo:
        cp.getboolean("all", "bad")
    assert str(excinfo.value) == "Not a boolean: maybe"


def test_inline_comments_are_stripped():
    cp = ExperimentConfigParser()
    cp.read_string("[counterexample]\ngrid_budget: 500    ; per n\n")
    assert cp.getint("counterexample", "grid_budget") == [500]


def test_read_reports_the_files_found(tmp_path):
    path = write_config(tmp_path, "[all]\nseed: 1\n")
    cp = ExperimentConfigParser(str(tmp_path / "missing.cfg"))
    assert cp.read(path) == [path]


# ExperimentConfig

def test_defaults_validate():
    for experiment in ("counterexample", "grid_law", "equivalence"):
        config = load_experiment_config(experiment)
        assert config.seed == 0
        assert config.output_path == "%s.csv" % experiment


@pytest.mark.parametrize("experiment, parameters, seed", [
        ("bogus", {}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 2, "p": 1.0, "n_list": [1],
            "half_width": 4.0, "pitch": 0.25, "colour": "red"}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 2}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 0, "p": 1.0, "n_list": [1],
            "half_width": 4.0, "pitch": 0.25}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 2, "p": 1.0, "n_list": [1, 0],
            "half_width": 4.0, "pitch": 0.25}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 2, "p": 1.0, "n_list": [],
            "half_width": 4.0, "pitch": 0.25}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 2, "p": 1.0, "n_list": [1],
            "half_width": 4.0, "pitch": True}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 2.5, "p": 1.0, "n_list": [1],
            "half_width": 4.0, "pitch": 0.25}, 0),
        ("equivalence", {"family": "shrinking-dirac", "N": 2, "p": 1.0, "n_list": [1],
            "half_width": 4.0, "pitch": 0.25}, -1),
        ("equivalence", {"family": "shrinking-dirac", "N": 2, "p": 1.0, "n_list": [1],
            "half_width": 4.0, "pitch": 0.25}, 2 ** 64),
])
def test_validation_errors(experiment, parameters, seed):
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment, parameters, seed).validate()


def test_float_parameters_accept_integers():
    config = ExperimentConfig("equivalence", {"family": "widening-uniform", "N": 2, "p": 1,
            "n_list": [1, 2], "half_width": 4, "pitch": 1}).validate()
    assert config.parameters["half_width"] == 4


# load_experiment_config

def test_precedence(tmp_path):
    path = write_config(tmp_path, "\n".join([
            "[all]",
            "seed: 7",
            "lloyd_iters: 10",
            "n_max: 3",
            "[grid_law]",
            "family: uniform",
            "lloyd_iters: 20",
            "N_list: 4",
            "N_list: 8, 16",
            "",
    ]))
    config = load_experiment_config("grid_law", [path], {"pool_size": 500, "p": None})
    assert config.seed == 7
    assert config.parameters["family"] == "uniform"
    assert config.parameters["lloyd_iters"] == 20
    assert config.parameters["N_list"] == [4, 8, 16]
    assert config.parameters["pool_size"] == 500
    assert config.parameters["p"] == 2.0
    assert config.parameters["replicates"] == 1


def test_all_section_fills_in_below_the_experiment_section(tmp_path):
    path = write_config(tmp_path, "[all]\npitch: 0.5\n[equivalence]\nN: 1\n")
    config = load_experiment_config("equivalence", [path])
    assert config.parameters["pitch"] == 0.5
    assert config.parameters["N"] == 1


def test_last_scalar_value_wins(tmp_path):
    path = write_config(tmp_path, "[equivalence]\nN: 1\nN: 3\n")
    assert load_experiment_config("equivalence", [path]).parameters["N"] == 3


def test_explicit_seed_and_output_override_the_file(tmp_path):
    path = write_config(tmp_path, "[all]\nseed: 7\n[counterexample]\nseed: 8\n")
    assert load_experiment_config("counterexample", [path]).seed == 8
    config = load_experiment_config("counterexample", [path], seed=11, output_path="rows.csv")
    assert (config.seed, config.output_path) == (11, "rows.csv")


def test_unknown_key_in_the_experiment_section(tmp_path):
    path = write_config(tmp_path, "[equivalence]\ncolour: red\n")
    with pytest.raises(ConfigError):
        load_experiment_config("equivalence", [path])


@pytest.mark.parametrize("text", [
        "[grid_law]\nN_list: 10, ten\n",
        "[grid_law]\nlloyd_iters: many\n",
        "[all]\nseed: x\n",
        "[grid_law]\npool_size: 0\n",
])
def test_bad_values(tmp_path, text):
    with pytest.raises(ConfigError):
        load_experiment_config("grid_law", [write_config(tmp_path, text)])


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        load_experiment_config("bogus")


def test_shipped_config():
    config = load_experiment_config("grid_law", [SHIPPED_CONFIG])
    assert config.parameters["N_list"] == [10, 25, 50, 100]
    assert config.parameters["replicates"] == 3
    config = load_experiment_config("equivalence", [SHIPPED_CONFIG])
    assert config.parameters["n_list"] == [1, 2, 4, 8, 16]
    config = load_experiment_config("counterexample", [SHIPPED_CONFIG])
    assert config.parameters["grid_budget"] == 20000
