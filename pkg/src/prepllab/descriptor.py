"""JSON family descriptors and the built-in family registry.

A descriptor looks like::

    {
      "label": "quadratic family z^2 + s",
      "degree": 2,
      "numerator":   [["0", "1"], [], ["1"]],
      "denominator": [["1"], [], []],
      "marked_points": {"crit": [["0"], ["1"]]}
    }

``numerator[k]`` is the coefficient of ``X**k * Y**(d-k)`` in ``P`` given as
a list of Gaussian-rational strings indexed by the power of ``s``; likewise
``denominator`` for ``Q``.  A marked point is a pair ``[A, B]`` of such
coefficient lists, the point being ``(A(s) : B(s))``.
"""
from __future__ import annotations

import json
from typing import Dict, Optional, Tuple

from .exact import GaussianRational, ParamPolynomial
from .family import FamilyError, MapFamily, MarkedPoint

__all__ = [
    "DescriptorError",
    "parse_family",
    "parse_descriptor",
    "family_to_descriptor",
    "load_family",
    "builtin_family",
    "parse_marked_point",
]


class DescriptorError(ValueError):
    """Malformed family descriptor; the message names the offending position."""


def _poly(node, where: str) -> ParamPolynomial:
    if isinstance(node, (str, int)):
        node = [node]
    if not isinstance(node, list):
        raise DescriptorError(f"{where}: expected a list of coefficient strings")
    coeffs = []
    for k, c in enumerate(node):
        if not isinstance(c, (str, int)):
            raise DescriptorError(f"{where}[{k}]: expected a string, got {type(c).__name__}")
        try:
            coeffs.append(GaussianRational.parse(str(c)))
        except (ValueError, ZeroDivisionError) as exc:
            raise DescriptorError(f"{where}[{k}]: {exc}") from None
    return ParamPolynomial(coeffs)


def _form(node, d: int, where: str):
    if not isinstance(node, list) or len(node) != d + 1:
        raise DescriptorError(f"{where}: expected a list of {d + 1} coefficient polynomials")
    return [_poly(c, f"{where}[{k}]") for k, c in enumerate(node)]


def parse_descriptor(doc) -> Tuple[MapFamily, Dict[str, MarkedPoint], str]:
    """Parse a descriptor (dict or JSON text) into ``(family, marked_points, label)``."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise DescriptorError(f"invalid JSON at line {exc.lineno} column {exc.colno}: "
                                  f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise DescriptorError("descriptor must be a JSON object")
    for key in ("degree", "numerator", "denominator"):
        if key not in doc:
            raise DescriptorError(f"missing field {key!r}")
    d = doc["degree"]
    if not isinstance(d, int) or isinstance(d, bool):
        raise DescriptorError("degree: expected an integer")
    if d < 2:
        raise DescriptorError(f"degree: must be >= 2, got {d}")
    P = _form(doc["numerator"], d, "numerator")
    Q = _form(doc["denominator"], d, "denominator")
    try:
        fam = MapFamily(P, Q, d)
    except FamilyError as exc:
        raise DescriptorError(str(exc)) from None
    points = {}
    marked = doc.get("marked_points", {})
    if not isinstance(marked, dict):
        raise DescriptorError("marked_points: expected an object")
    for name, pair in marked.items():
        where = f"marked_points.{name}"
        if not isinstance(pair, list) or len(pair) != 2:
            raise DescriptorError(f"{where}: expected [A, B]")
        try:
            points[name] = MarkedPoint(_poly(pair[0], where + "[0]"), _poly(pair[1], where + "[1]"))
        except FamilyError as exc:
            raise DescriptorError(f"{where}: {exc}") from None
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise DescriptorError("label: expected a string")
    return fam, points, label


def parse_family(doc) -> MapFamily:
    return parse_descriptor(doc)[0]


def family_to_descriptor(fam: MapFamily, marked: Optional[Dict[str, MarkedPoint]] = None,
                         label: str = "") -> dict:
    doc = {
        "degree": fam.d,
        "numerator": [c.to_strings() for c in fam.P],
        "denominator": [c.to_strings() for c in fam.Q],
    }
    if marked:
        doc["marked_points"] = {k: [p.A.to_strings(), p.B.to_strings()]
                                for k, p in sorted(marked.items())}
    if label:
        doc["label"] = label
    return doc


# ---------------------------------------------------------------------------
# built-ins


def _unicritical(d: int) -> MapFamily:
    coeffs = [[0, 1]] + [0] * (d - 1) + [1]
    return MapFamily.polynomial(coeffs)


def builtin_family(name: str) -> Tuple[MapFamily, Dict[str, MarkedPoint], str]:
    """Look up ``builtin:<name>``.

    ``z2``                 constant map z^2
    ``quad``               z^2 + s
    ``unicritical:<d>``    z^d + s
    ``quadc:<c>``          constant map z^2 + c, c a Gaussian rational
    ``cheb2``              constant map z^2 - 2
    """
    key = name[len("builtin:"):] if name.startswith("builtin:") else name
    crit = {"crit": MarkedPoint(0)}
    if key == "z2":
        return MapFamily.polynomial([0, 0, 1]), crit, "z^2"
    if key == "quad":
        return MapFamily.polynomial([[0, 1], 0, 1]), crit, "z^2 + s"
    if key == "cheb2":
        return MapFamily.polynomial([-2, 0, 1]), crit, "z^2 - 2"
    if key.startswith("unicritical:"):
        try:
            d = int(key.split(":", 1)[1])
        except ValueError:
            raise DescriptorError(f"bad degree in {name!r}") from None
        if d < 2:
            raise DescriptorError(f"degree must be >= 2 in {name!r}")
        return _unicritical(d), crit, f"z^{d} + s"
    if key.startswith("quadc:"):
        try:
            c = GaussianRational.parse(key.split(":", 1)[1])
        except ValueError as exc:
            raise DescriptorError(f"{name!r}: {exc}") from None
        text = str(c)
        if any(ch in text[1:] for ch in "+-"):
            text = f"+ ({text})"
        else:
            text = f"- {text[1:]}" if text.startswith("-") else f"+ {text}"
        return MapFamily.polynomial([c, 0, 1]), crit, f"z^2 {text}"
    raise DescriptorError(f"unknown built-in family {name!r}")


def load_family(spec: str) -> Tuple[MapFamily, Dict[str, MarkedPoint], str]:
    """``builtin:...`` name or path to a JSON descriptor."""
    if spec.startswith("builtin:"):
        return builtin_family(spec)
    try:
        with open(spec, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DescriptorError(f"cannot read {spec}: {exc.strerror}") from None
    return parse_descriptor(text)


def parse_marked_point(text: str, named: Optional[Dict[str, MarkedPoint]] = None) -> MarkedPoint:
    """``inf``, a descriptor name, or comma-separated coefficients of ``A`` (with ``B = 1``);
    ``A:B`` gives both coordinates, e.g. ``0,1:1`` for ``(s : 1)``."""
    text = text.strip()
    if named and text in named:
        return named[text]
    if text in ("inf", "infinity"):
        return MarkedPoint.infinity()
    try:
        if ":" in text:
            a_txt, b_txt = text.split(":", 1)
            return MarkedPoint(_poly(a_txt.split(","), "point A"), _poly(b_txt.split(","), "point B"))
        return MarkedPoint(_poly(text.split(","), "point"))
    except FamilyError as exc:
        raise DescriptorError(str(exc)) from None
