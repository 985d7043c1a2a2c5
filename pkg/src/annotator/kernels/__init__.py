"""Hot numeric kernels with a compiled core and a NumPy fallback.

The compiled extension (``_native``, Cython) is preferred when importable;
otherwise the NumPy implementations in ``_python`` are used. Selection can
be forced with the environment variable ``ANNOTATOR_KERNELS`` set to
``native`` or ``python``. ``BACKEND`` names the backend in effect.

Both backends expose the same functions with identical semantics:

- ``floor_coords(xyz, voxel_size)``
- ``point_entropies(probs)``
- ``point_margins(probs)``
- ``argmax_labels(probs)``
- ``bucket_max(values, order, offsets)``
- ``bucket_label_entropy(labels, order, offsets, class_count)``
"""

import os

from . import _python

_forced = os.environ.get("ANNOTATOR_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = _python
    BACKEND = "python"
elif _forced == "native":
    from . import _native as _impl  # noqa: F401  (ImportError is intentional here)

    BACKEND = "native"
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _python
        BACKEND = "python"
    else:
        BACKEND = "native"

floor_coords = _impl.floor_coords
point_entropies = _impl.point_entropies
point_margins = _impl.point_margins
argmax_labels = _impl.argmax_labels
bucket_max = _impl.bucket_max
bucket_label_entropy = _impl.bucket_label_entropy

__all__ = [
    "BACKEND",
    "argmax_labels",
    "bucket_label_entropy",
    "bucket_max",
    "floor_coords",
    "point_entropies",
    "point_margins",
]
