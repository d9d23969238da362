import zlib

import numpy
import pytest
import scipy


_QUANTCHAR_SEED_DEFAULT = "20151215"


##
## Add extra information to the test report header.
##

def pytest_report_header(config):
    # https://docs.pytest.org/en/stable/example/simple.html#adding-info-to-test-report-header
    return "numpy %s, scipy %s" % (numpy.__version__, scipy.__version__)


##
## Configure the command-line parser.
##

def pytest_addoption(parser):
    """Add custom command-line options to the command-line parser."""
    quantchar_seed_help = \
            "override the base seed of the randomized tests " + \
            "from the default of '%(default)s'.  Every test derives its own " + \
            "seed from this one and its node id."
    parser.addoption("--quantchar_seed", metavar="SEED",
            default=_QUANTCHAR_SEED_DEFAULT, action="store", dest="quantchar_seed",
            help=quantchar_seed_help)
    parser.addini("quantchar_seed", "base seed of the randomized tests",
            default=_QUANTCHAR_SEED_DEFAULT)


##
## Utility functions
##

def _get_option_value(config, option_name, option_default_value):
    cmdline_option_value = config.getoption(option_name)
    if cmdline_option_value and (cmdline_option_value != option_default_value):
        return cmdline_option_value

    inicfg_option_value = config.getini(option_name)
    if inicfg_option_value and (inicfg_option_value != option_default_value):
        return inicfg_option_value

    return option_default_value


##
## Session fixtures
##

@pytest.fixture(scope="session")
def base_seed(request):
    """Return the base seed for this session.
    This checks for user-specified values in the command-line options first,
    then in the "pytest.ini" file.
    """
    seed = _get_option_value(request.config, "quantchar_seed", _QUANTCHAR_SEED_DEFAULT)
    try:
        seed = int(seed)
    except ValueError:
        request.raiseerror("not an integer seed: %s" % seed)
    print("\nInitializing test session with base seed %d" % seed)
    return seed


##
## Function fixtures
##

@pytest.fixture
def node_seed(base_seed, request):
    """Return a seed that depends only on the base seed and this test's node id."""
    return (base_seed + zlib.crc32(request.node.nodeid.encode("utf-8"))) % (2 ** 32)


@pytest.fixture
def rng(node_seed):
    """Return a numpy Generator seeded for this test."""
    print("\nrandom number seed = %d" % node_seed)
    return numpy.random.default_rng(node_seed)


@pytest.fixture
def tmp_report_path(tmp_path):
    """Return the path of a CSV report inside a fresh temporary directory."""
    return str(tmp_path / "report.csv")
