"""Polytopes shipped with the package (all with rational data)."""

import json
from importlib import resources

from ..geometry import polytope_from_dict

# valid simple polytopes; square_pyramid is the non-simple negative control
NAMES = (
    "segment", "segment2", "simplex2", "simplex2_scaled", "simplex3", "square",
    "parallelogram", "quadrilateral", "pentagon", "cube", "box3_scaled", "prism",
)
BOXES = ("segment", "segment2", "square", "cube", "box3_scaled")


def fixture_path(name):
    return resources.files(__name__) / f"{name}.json"


def fixture_dict(name):
    return json.loads(fixture_path(name).read_text())


def load_fixture(name):
    return polytope_from_dict(fixture_dict(name), name=name)
