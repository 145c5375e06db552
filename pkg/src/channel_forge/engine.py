"""Exact density-matrix engine with measurement branching.

The engine holds an ensemble of branches, each a (probability, state,
classical-record) triple over the currently live wires. Measurements split
branches exactly; erasing an outcome is just mixing branches back together.
Wires are addressed through stable integer handles that survive trace-outs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import Channel, ChannelError
from .linalg import as_complex

BRANCH_PROB_FLOOR = 1e-15

MAX_TOTAL_DIMENSION = 4096  # 12 qubits


@dataclass
class Branch:
    prob: float
    rho: np.ndarray
    records: dict = field(default_factory=dict)


def permute_factors(rho: np.ndarray, dims: list[int], perm: list[int]) -> np.ndarray:
    """Reorder tensor factors of a density matrix: new factor i = old factor perm[i]."""
    n = len(dims)
    t = rho.reshape(dims + dims)
    axes = list(perm) + [n + p for p in perm]
    t = t.transpose(axes)
    d = int(np.prod(dims))
    return t.reshape(d, d)


def _apply_matrix(rho: np.ndarray, dims: list[int], op: np.ndarray,
                  axes: list[int], out_dims: list[int], in_dims: list[int]) -> np.ndarray:
    """Return op rho op^dag with op acting on the given tensor axes."""
    n = len(dims)
    k = len(axes)
    t = rho.reshape(dims + dims)
    op_t = op.reshape(tuple(out_dims) + tuple(in_dims))
    in_ax = list(range(k, 2 * k))
    # left multiplication on row axes
    t = np.tensordot(op_t, t, axes=(in_ax, axes))
    t = np.moveaxis(t, list(range(k)), axes)
    # right multiplication (conjugate) on column axes
    col_axes = [n + a for a in axes]
    t = np.tensordot(op_t.conj(), t, axes=(in_ax, col_axes))
    t = np.moveaxis(t, list(range(k)), col_axes)
    new_dims = list(dims)
    for a, d in zip(axes, out_dims):
        new_dims[a] = d
    d_total = int(np.prod(new_dims))
    return t.reshape(d_total, d_total)


class StateEngine:
    """Branching density-matrix simulator over dynamically managed wires."""

    def __init__(self):
        self.dims: list[int] = []
        self.handles: list[int] = []
        self._next_handle = 0
        self.branches: list[Branch] = [Branch(prob=1.0, rho=np.ones((1, 1), dtype=np.complex128))]
        self.measurement_log: list[tuple[str, int, float]] = []

    # -- wire management ---------------------------------------------------

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims)) if self.dims else 1

    def axis_of(self, handle: int) -> int:
        try:
            return self.handles.index(handle)
        except ValueError:
            raise ChannelError(f"wire handle {handle} is not live") from None

    def add_wires(self, dims: list[int], state: np.ndarray | None = None) -> list[int]:
        """Append wires (joint initial state defaults to |0...0>)."""
        d_new = int(np.prod(dims))
        if self.total_dim * d_new > MAX_TOTAL_DIMENSION:
            raise ChannelError(
                f"total dimension {self.total_dim * d_new} exceeds engine cap {MAX_TOTAL_DIMENSION}"
            )
        if state is None:
            state = np.zeros((d_new, d_new), dtype=np.complex128)
            state[0, 0] = 1.0
        else:
            state = as_complex(state)
            if state.shape != (d_new, d_new):
                raise ChannelError(f"initial state shape {state.shape} does not match dims {dims}")
        new_handles = []
        for d in dims:
            self.dims.append(int(d))
            self.handles.append(self._next_handle)
            new_handles.append(self._next_handle)
            self._next_handle += 1
        for b in self.branches:
            b.rho = np.kron(b.rho, state)
        return new_handles

    def trace_out(self, handle: int) -> None:
        ax = self.axis_of(handle)
        n = len(self.dims)
        for b in self.branches:
            t = b.rho.reshape(self.dims + self.dims)
            t = np.trace(t, axis1=ax, axis2=ax + n)
            d = self.total_dim // self.dims[ax]
            b.rho = t.reshape(d, d)
        del self.dims[ax]
        del self.handles[ax]

    # -- operations ---------------------------------------------------------

    def apply_unitary(self, u: np.ndarray, wires: list[int]) -> None:
        u = as_complex(u)
        axes = [self.axis_of(h) for h in wires]
        dims_sub = [self.dims[a] for a in axes]
        d_sub = int(np.prod(dims_sub))
        if u.shape != (d_sub, d_sub):
            raise ChannelError(f"gate shape {u.shape} does not match wire dims {dims_sub}")
        for b in self.branches:
            b.rho = _apply_matrix(b.rho, self.dims, u, axes, dims_sub, dims_sub)

    def apply_kraus(self, kraus: list[np.ndarray], wires: list[int],
                    out_dims: list[int] | None = None) -> None:
        axes = [self.axis_of(h) for h in wires]
        in_dims = [self.dims[a] for a in axes]
        if out_dims is None:
            out_dims = in_dims
        d_in = int(np.prod(in_dims))
        d_out = int(np.prod(out_dims))
        for k in kraus:
            if k.shape != (d_out, d_in):
                raise ChannelError(f"Kraus shape {k.shape} does not match dims ({d_out},{d_in})")
        for b in self.branches:
            acc = None
            for k in kraus:
                term = _apply_matrix(b.rho, self.dims, k, axes, out_dims, in_dims)
                acc = term if acc is None else acc + term
            b.rho = acc
        for a, d in zip(axes, out_dims):
            self.dims[a] = d

    def apply_channel(self, ch: Channel, wires: list[int]) -> None:
        axes = [self.axis_of(h) for h in wires]
        in_dims = [self.dims[a] for a in axes]
        d_in = int(np.prod(in_dims))
        if ch.dim_in != d_in:
            raise ChannelError(f"channel dim_in {ch.dim_in} does not match wire dims {in_dims}")
        if ch.dim_out != ch.dim_in:
            if len(wires) != 1:
                raise ChannelError("dimension-changing channels are limited to a single wire")
            out_dims = [ch.dim_out]
        else:
            out_dims = in_dims
        self.apply_kraus(ch.kraus(), wires, out_dims=out_dims)

    def measure(self, wire: int, register: str, projectors: list[np.ndarray] | None = None) -> None:
        """Projective measurement; branches split per outcome, records updated."""
        ax = self.axis_of(wire)
        d = self.dims[ax]
        if projectors is None:
            projectors = [np.diag((np.arange(d) == k).astype(np.complex128)) for k in range(d)]
        total = np.zeros(len(projectors))
        new_branches = []
        for b in self.branches:
            for outcome, proj in enumerate(projectors):
                rho_o = _apply_matrix(b.rho, self.dims, proj, [ax], [d], [d])
                p = float(np.trace(rho_o).real)
                total[outcome] += b.prob * p
                if b.prob * p > BRANCH_PROB_FLOOR:
                    records = dict(b.records)
                    records[register] = outcome
                    new_branches.append(Branch(prob=b.prob * p, rho=rho_o / p, records=records))
        self.branches = new_branches
        for outcome, p in enumerate(total):
            self.measurement_log.append((register, outcome, float(p)))

    def apply_conditional_unitary(self, u: np.ndarray, wires: list[int],
                                  register: str, value: int) -> None:
        self._check_record(register)
        u = as_complex(u)
        axes = [self.axis_of(h) for h in wires]
        dims_sub = [self.dims[a] for a in axes]
        for b in self.branches:
            if b.records.get(register) == value:
                b.rho = _apply_matrix(b.rho, self.dims, u, axes, dims_sub, dims_sub)

    def apply_conditional_channel(self, ch: Channel, wires: list[int],
                                  register: str, value: int) -> None:
        self._check_record(register)
        axes = [self.axis_of(h) for h in wires]
        in_dims = [self.dims[a] for a in axes]
        if ch.dim_out != ch.dim_in or ch.dim_in != int(np.prod(in_dims)):
            raise ChannelError("conditional channels must be square and match wire dims")
        kraus = ch.kraus()
        for b in self.branches:
            if b.records.get(register) == value:
                acc = None
                for k in kraus:
                    term = _apply_matrix(b.rho, self.dims, k, axes, in_dims, in_dims)
                    acc = term if acc is None else acc + term
                b.rho = acc

    def _check_record(self, register: str) -> None:
        if not any(register == r for r, _, _ in self.measurement_log):
            raise ChannelError(f"condition references unmeasured register {register!r}")

    def reset(self, wire: int) -> None:
        """Reinitialize a wire to |0> via the reset channel."""
        ax = self.axis_of(wire)
        d = self.dims[ax]
        kraus = []
        for k in range(d):
            m = np.zeros((d, d), dtype=np.complex128)
            m[0, k] = 1.0
            kraus.append(m)
        self.apply_kraus(kraus, [wire])

    # -- readout -------------------------------------------------------------

    def mixed_state(self) -> np.ndarray:
        """Exact ensemble average over branches (outcome erasure)."""
        rho = np.zeros_like(self.branches[0].rho)
        for b in self.branches:
            rho += b.prob * b.rho
        return rho

    def branch_summary(self) -> list[tuple[dict, float]]:
        return [(dict(b.records), b.prob) for b in self.branches]

    def reduced_state(self, wires: list[int]) -> np.ndarray:
        """Mixed state reduced to the given wires, in the given order."""
        rho = self.mixed_state()
        axes = [self.axis_of(h) for h in wires]
        keep_sorted = sorted(axes)
        from .linalg import partial_trace

        reduced = partial_trace(rho, self.dims, keep=keep_sorted)
        # reorder kept factors to the requested order
        order = [keep_sorted.index(a) for a in axes]
        kept_dims = [self.dims[a] for a in keep_sorted]
        return permute_factors(reduced, kept_dims, order)
