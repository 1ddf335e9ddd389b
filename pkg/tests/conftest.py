import pytest

from catnet import kernels
from catnet.chem_core import Alphabet, generate_valid_chemistry
from catnet.engine import ReactorConfig
from catnet.kinetics import KineticParams

# small reactor volume so that a few hundred molecules react on a seconds scale
REACTIVE_VOLUME = 1e-18

BACKENDS = kernels.available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def reactive_setup(r=1e-2, seed=1, t_end=60.0, energy=False, **reactor):
    al = Alphabet()
    config = ReactorConfig(t_end=t_end, influx_max_length=3, energy_enabled=energy, **reactor)
    influx = config.influx_sequences(al)
    species = list(dict.fromkeys(config.initial_sequences(al) + influx))
    chem = generate_valid_chemistry(species, influx, r, seed)
    params = KineticParams(volume=REACTIVE_VOLUME)
    return chem, config, params


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, title = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
