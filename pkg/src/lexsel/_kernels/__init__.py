"""Hot-loop kernels with a compiled core and a pure-Python fallback.

``em_iteration`` and ``edit_distance`` come from the Cython extension when it
was built, otherwise from :mod:`lexsel._kernels._pure`. ``BACKEND`` reports
which one was selected.
"""

from lexsel._kernels import _pure

try:
    from lexsel._kernels import _core
    em_iteration = _core.em_iteration
    edit_distance = _core.edit_distance
    BACKEND = "compiled"
except ImportError:
    _core = None
    em_iteration = _pure.em_iteration
    edit_distance = _pure.edit_distance
    BACKEND = "pure"


def available_backends():
    """Mapping of backend name to kernel module, for parity tests and benchmarks."""
    backends = {"pure": _pure}
    if _core is not None:
        backends["compiled"] = _core
    return backends
