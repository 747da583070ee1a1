"""Vendored example graphs.

* ``karate.txt``: Zachary's karate club (1977), 34 vertices, 78 edges.
  Originally distributed at http://www-personal.umich.edu/~mejn/netdata/.
* ``lesmis.gml``: character coappearances in Les Miserables (Knuth, 1993),
  77 vertices, weighted. Same source.

The C. Elegans neural network and the URV e-mail graph are not bundled;
pass them on the command line or set ``ORGMOD_CELEGANS`` / ``ORGMOD_EMAIL``
for the slow tests.
"""

from importlib import resources

from ..io import parse_edge_list, parse_gml


def _text(name):
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def karate_path():
    return resources.files(__name__).joinpath("karate.txt")


def les_miserables_path():
    return resources.files(__name__).joinpath("lesmis.gml")


def load_karate():
    return parse_edge_list(_text("karate.txt"))


def load_les_miserables():
    return parse_gml(_text("lesmis.gml"))
