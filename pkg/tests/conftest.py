import textwrap

import pytest

TOY_SCENARIO = textwrap.dedent("""\
    name: toy
    model:
      kind: polynomial
      coefficients:
        c1: 1.0
        c3: -1.0
        direction: {c0: 1.0}
    profile:
      kind: gaussian-impulse
      limit: 0.0
      peak: 1.0
    analysis:
      command: tipping
      parameter: rate
      grid: {start: 0.1, stop: 10.0, spacing: log}
    settings:
      bisection_tol: 0.01
      integrator: {rtol: 1.0e-8}
    """)


@pytest.fixture
def toy_text():
    """Cubic fold family with a gaussian pulse, as a scenario document."""
    return TOY_SCENARIO
