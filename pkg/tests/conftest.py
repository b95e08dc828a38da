import numpy as np
import pytest

from evload.clustering import ClusterModel
from evload.ingest import DayType, Journey, VehicleDay
from evload.synth import SynthesisSpec, synthesize_fleet


def make_day(vid="v1", day=0, journeys=()):
    js = tuple(Journey(vid, day, s, e, d, en) for s, e, d, en in journeys)
    return VehicleDay(vid, day, js)


@pytest.fixture(scope="session")
def small_fleet():
    """60-vehicle, 7-day synthetic fleet with charges and sidecar."""
    spec = SynthesisSpec(n_vehicles=60, n_days=7)
    days, charges, sidecar = synthesize_fleet(spec, seed=3)
    return spec, days, charges, sidecar


@pytest.fixture(scope="session")
def toy_model():
    """Cluster model with three well-separated single-slot centroids."""
    centroids = np.zeros((3, 48))
    centroids[0, 16] = 1.0
    centroids[1, 24] = 1.0
    centroids[2, 36] = 1.0
    return ClusterModel(DayType.WEEKDAY, 3, centroids)
