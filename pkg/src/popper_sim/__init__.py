"""Wave-optics simulation of the unfolded Kim-Shih Popper experiment.

Subpackages map onto the building blocks: ``field`` (grids, propagators),
``elements`` (lenses, apertures), ``experiment`` (optical train and
coincidence profiles), ``analysis`` (widths and uncertainty products),
``conditional`` (finite-dimensional conditional-uncertainty checks) and
``cli`` (the ``popper`` command).
"""
from ._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
