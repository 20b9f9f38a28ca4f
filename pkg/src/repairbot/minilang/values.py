"""Runtime values.

Int, Bool, Str and Null map onto Python ``int``, ``bool``, ``str`` and
``None``. Records and arrays are mutable reference objects, like objects in
Java, but compare by deep structural equality.
"""

from __future__ import annotations

from typing import Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class Record:
    __slots__ = ("fields",)

    def __init__(self, fields: dict[str, "Value"] | None = None):
        self.fields = dict(fields or {})

    def __eq__(self, other):
        return isinstance(other, Record) and values_equal(self, other)

    __hash__ = None

    def __repr__(self):
        return "Record(" + ", ".join(f"{k}={v!r}" for k, v in self.fields.items()) + ")"


class Array:
    __slots__ = ("items",)

    def __init__(self, items: list["Value"] | None = None):
        self.items = list(items or [])

    def __eq__(self, other):
        return isinstance(other, Array) and values_equal(self, other)

    __hash__ = None

    def __repr__(self):
        return f"Array({self.items!r})"


Value = Union[int, bool, str, None, Record, Array]


def type_name(v: Value) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, str):
        return "str"
    if isinstance(v, Record):
        return "record"
    return "array"


def is_int(v: Value) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def values_equal(a: Value, b: Value) -> bool:
    if type_name(a) != type_name(b):
        return False
    if isinstance(a, Record):
        if a.fields.keys() != b.fields.keys():
            return False
        return all(values_equal(a.fields[k], b.fields[k]) for k in a.fields)
    if isinstance(a, Array):
        return len(a.items) == len(b.items) and all(
            values_equal(x, y) for x, y in zip(a.items, b.items)
        )
    return a == b


def copy_value(v: Value) -> Value:
    """Deep copy, so snapshots are not affected by later mutation."""
    if isinstance(v, Record):
        return Record({k: copy_value(x) for k, x in v.fields.items()})
    if isinstance(v, Array):
        return Array([copy_value(x) for x in v.items])
    return v


def wrap_int(v: int) -> int:
    v &= 0xFFFFFFFFFFFFFFFF
    return v - (1 << 64) if v > INT_MAX else v


def render(v: Value) -> str:
    """Source-like rendering of a value, used by ``print`` and messages."""
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, (int, str)):
        return str(v)
    if isinstance(v, Record):
        return "{" + ", ".join(f"{k}: {render(x)}" for k, x in v.fields.items()) + "}"
    return "[" + ", ".join(render(x) for x in v.items) + "]"
