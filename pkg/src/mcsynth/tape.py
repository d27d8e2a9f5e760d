"""Minimal gradient tape for the fixed synthesis chain.

Forward operations append nodes with hand-written vector-Jacobian
products; :meth:`GradientTape.backward` walks them once in reverse.
There is no general autodiff here: every adjoint is derived and coded by
hand per operation, the tape only wires them together and enforces the
one-backward-pass lifecycle.
"""

from dataclasses import dataclass
from typing import Callable

from .errors import InvalidStateError


@dataclass
class TapeNode:
    op: str
    out_id: int
    in_ids: tuple
    vjp: Callable  # upstream gradient -> tuple of input gradients (None = no flow)


class GradientTape:
    """Records the forward chain; replayable exactly once."""

    def __init__(self):
        self.nodes = []
        self._ids = {}
        self._keep = []
        self._names = {}
        self._name_objs = {}
        self._next = 0
        self.consumed = False

    def track(self, obj) -> int:
        """Variable id for ``obj`` (by identity), creating a leaf on first sight."""
        key = id(obj)
        vid = self._ids.get(key)
        if vid is None:
            vid = self._next
            self._next += 1
            self._ids[key] = vid
            self._keep.append(obj)
        return vid

    def watch(self, obj, name: str | None = None) -> int:
        vid = self.track(obj)
        if name is not None:
            self._names[name] = vid
            self._name_objs[name] = obj
        return vid

    def var_id(self, obj) -> int | None:
        return self._ids.get(id(obj))

    def named_id(self, name: str) -> int | None:
        return self._names.get(name)

    def named_obj(self, name: str):
        return self._name_objs.get(name)

    def record(self, op: str, output, inputs, vjp) -> int:
        out_id = self.track(output)
        in_ids = tuple(self.track(a) for a in inputs)
        self.nodes.append(TapeNode(op, out_id, in_ids, vjp))
        return out_id

    def last_node(self, op: str) -> TapeNode:
        for node in reversed(self.nodes):
            if node.op == op:
                return node
        raise InvalidStateError(f"no {op!r} operation recorded on this tape")

    def backward(self, seeds: dict) -> dict:
        """Run every adjoint once, seeding output variables from ``seeds``.

        Returns a map of variable id -> accumulated gradient.  A second
        call raises: saved intermediates are only guaranteed valid for
        one pass per recording.
        """
        if self.consumed:
            raise InvalidStateError("gradient tape already consumed by a backward pass")
        self.consumed = True
        grads = dict(seeds)
        for node in reversed(self.nodes):
            g = grads.get(node.out_id)
            if g is None:
                continue
            for vid, gin in zip(node.in_ids, node.vjp(g)):
                if gin is None:
                    continue
                cur = grads.get(vid)
                grads[vid] = gin if cur is None else cur + gin
        return grads
