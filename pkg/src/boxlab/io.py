"""JSON reading and writing for boxes and cost certificates.

Box format::

    {"layout": [[{"in": 2, "out": 2}], [{"in": 2, "out": 2}]],
     "table": {"0,1": {"0,0": "1/2", "1,1": "1/2"}, ...}}

Keys are comma-joined joint inputs and joint outputs, values "num/den" in
lowest terms.  Missing outputs are zero; every joint input must be present.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .box import BoxError, BoxTable, MalformedTableError, SystemLayout, format_fraction
from .cost import CostCertificate


class BoxFormatError(BoxError):
    """The document is not a box in the JSON box format."""


def _parse_key(key: str, cards, what: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in key.split(",")) if key != "" else ()
    except ValueError:
        raise BoxFormatError(f"bad {what} key {key!r}") from None
    if len(values) != len(cards) or any(not 0 <= v < c for v, c in zip(values, cards)):
        raise MalformedTableError(f"{what} key {key!r} out of range for cardinalities {tuple(cards)}")
    return values


def _parse_rational(text) -> Fraction:
    if not isinstance(text, (str, int)) or isinstance(text, bool):
        raise BoxFormatError(f"probabilities must be 'num/den' strings, got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise BoxFormatError(f"bad rational {text!r}") from None


def box_from_dict(data: dict) -> BoxTable:
    if not isinstance(data, dict) or "layout" not in data or "table" not in data:
        raise BoxFormatError("box JSON needs 'layout' and 'table'")
    try:
        layout = SystemLayout.of(data["layout"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BoxFormatError(f"bad layout: {exc}") from None
    table = data["table"]
    if not isinstance(table, dict):
        raise BoxFormatError("'table' must map input keys to output maps")
    probs = np.full(layout.shape, Fraction(0), dtype=object)
    seen = set()
    for key_in, row in table.items():
        xs = _parse_key(key_in, layout.input_shape, "input")
        seen.add(xs)
        if not isinstance(row, dict):
            raise BoxFormatError(f"row {key_in!r} must map output keys to rationals")
        for key_out, value in row.items():
            probs[xs + _parse_key(key_out, layout.output_shape, "output")] = _parse_rational(value)
    missing = [xs for xs in layout.joint_inputs() if xs not in seen]
    if missing:
        raise MalformedTableError(f"no row for joint input {missing[0]}")
    return BoxTable(layout, probs)


def box_to_dict(box: BoxTable) -> dict:
    table = {}
    for xs in box.layout.joint_inputs():
        row = {}
        for idx in zip(*np.nonzero(box.probs[xs] != 0)):
            row[",".join(str(int(v)) for v in idx)] = format_fraction(box.probs[xs][tuple(idx)])
        table[",".join(map(str, xs))] = row
    return {"layout": box.layout.to_json(), "table": table}


def dumps_box(box: BoxTable, indent: int | None = None) -> str:
    return json.dumps(box_to_dict(box), indent=indent)


def loads_box(text: str) -> BoxTable:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BoxFormatError(f"not JSON: {exc}") from None
    return box_from_dict(data)


def read_box(path) -> BoxTable:
    return loads_box(Path(path).read_text())


def write_box(box: BoxTable, path) -> None:
    Path(path).write_text(dumps_box(box, indent=1) + "\n")


def certificate_to_dict(cert: CostCertificate) -> dict:
    return cert.to_json()


def certificate_from_dict(data: dict, shape) -> CostCertificate:
    try:
        return CostCertificate.from_json(data, shape)
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise BoxFormatError(f"bad certificate: {exc}") from None
