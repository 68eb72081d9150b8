"""Global numerical tolerances.

Defaults can be overridden with the ``MXCONC_TOL`` environment variable,
either a single float (applied to every tolerance) or comma separated
``name=value`` pairs, e.g. ``MXCONC_TOL="unitary=1e-9,hermitian=1e-11"``.
"""

import os

DEFAULTS = {
    "unitary": 1e-10,
    "hermitian": 1e-12,
}

TOL = dict(DEFAULTS)


def _parse(text):
    text = text.strip()
    if not text:
        return {}
    try:
        value = float(text)
    except ValueError:
        pass
    else:
        return {key: value for key in DEFAULTS}
    out = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in DEFAULTS:
            raise ValueError(f"bad MXCONC_TOL entry {item!r}")
        out[key] = float(value)
    return out


def reload():
    """Re-read ``MXCONC_TOL`` and reset the tolerance table."""
    TOL.clear()
    TOL.update(DEFAULTS)
    TOL.update(_parse(os.environ.get("MXCONC_TOL", "")))
    return dict(TOL)


def tol(name):
    return TOL[name]


reload()
