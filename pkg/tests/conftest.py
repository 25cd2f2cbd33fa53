import warnings

import pytest

from threescale.model import AssumptionWarning, paper_params


@pytest.fixture(autouse=True)
def _quiet_assumptions():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        yield


@pytest.fixture
def mmo_params():
    # the model's own 1^5 mixed-mode orbit
    return paper_params(alpha=0.75, beta2=0.09)
