"""Small-circuit density-matrix simulation and effective-channel extraction.

A :class:`Circuit` is an ordered list of elements over labelled qubit/qudit
wires: unitary gates, channel insertions, projective measurements writing to
classical registers, classically conditioned gates, resets, and trace-outs.
Measurements branch the state exactly; erased outcomes are exact convex
mixtures, so there is no sampling anywhere in the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import Channel, ChannelError, mix, validate_cptp
from .engine import StateEngine, permute_factors
from .linalg import as_complex, max_entangled_ket
from .noise import PAULI_X, PAULI_Y, PAULI_Z

# -- named gates --------------------------------------------------------------


def ry(theta: float) -> np.ndarray:
    """Rotation exp(-i theta Y / 2)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=np.complex128)


def hadamard() -> np.ndarray:
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def cnot() -> np.ndarray:
    """CNOT in (control, target) factor order."""
    m = np.eye(4, dtype=np.complex128)
    m[2:, 2:] = PAULI_X
    return m


def controlled_ry(theta: float) -> np.ndarray:
    """Controlled R_y in (control, target) factor order."""
    m = np.eye(4, dtype=np.complex128)
    m[2:, 2:] = ry(theta)
    return m


def shift_operator(dim: int) -> np.ndarray:
    """Cyclic lowering shift X_D with X_D |j> = |(j-1) mod D>."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        m[(j - 1) % dim, j] = 1.0
    return m


GATE_BUILDERS = {
    "ry": lambda **kw: ry(kw["theta"]),
    "rx": lambda **kw: rx(kw["theta"]),
    "rz": lambda **kw: rz(kw["theta"]),
    "x": lambda **kw: PAULI_X,
    "y": lambda **kw: PAULI_Y,
    "z": lambda **kw: PAULI_Z,
    "h": lambda **kw: hadamard(),
    "cnot": lambda **kw: cnot(),
    "cry": lambda **kw: controlled_ry(kw["theta"]),
    "shift": lambda **kw: shift_operator(kw["dim"]),
}


# -- circuit elements ---------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    unitary: np.ndarray
    wires: tuple[int, ...]
    name: str = ""


@dataclass(frozen=True)
class ChannelOp:
    channel: Channel
    wires: tuple[int, ...]
    is_noise: bool = False
    condition: tuple[str, int] | None = None
    name: str = ""


@dataclass(frozen=True)
class Measure:
    wire: int
    register: str


@dataclass(frozen=True)
class ConditionalGate:
    unitary: np.ndarray
    wires: tuple[int, ...]
    register: str
    value: int
    name: str = ""


@dataclass(frozen=True)
class Reset:
    wire: int


@dataclass(frozen=True)
class TraceOut:
    wire: int


Element = Gate | ChannelOp | Measure | ConditionalGate | Reset | TraceOut


@dataclass
class Circuit:
    """Ordered element list over labelled wires.

    ``data_wires`` marks the wires carrying the simulated channel's data;
    the rest are ancillas implicitly initialized to |0>. Defaults to all
    wires when unset.
    """

    wires: list[tuple[str, int]]
    elements: list = field(default_factory=list)
    data_wires: tuple[int, ...] | None = None

    def wire_dims(self) -> list[int]:
        return [d for _, d in self.wires]

    def data(self) -> tuple[int, ...]:
        return self.data_wires if self.data_wires is not None else tuple(range(len(self.wires)))

    def _check_wires(self, wires: Sequence[int]) -> tuple[int, ...]:
        for w in wires:
            if not 0 <= w < len(self.wires):
                raise ChannelError(f"wire index {w} out of range for {len(self.wires)} wires")
        if len(set(wires)) != len(wires):
            raise ChannelError(f"repeated wire in {wires}")
        return tuple(wires)

    # chainable construction helpers

    def gate(self, unitary: np.ndarray, wires: Sequence[int], name: str = "") -> "Circuit":
        wires = self._check_wires(wires)
        unitary = as_complex(unitary)
        d = int(np.prod([self.wires[w][1] for w in wires]))
        if unitary.shape != (d, d):
            raise ChannelError(f"gate shape {unitary.shape} does not match wires {wires}")
        self.elements.append(Gate(unitary=unitary, wires=wires, name=name))
        return self

    def channel(self, ch: Channel, wires: Sequence[int], name: str = "") -> "Circuit":
        wires = self._check_wires(wires)
        d = int(np.prod([self.wires[w][1] for w in wires]))
        if ch.dim_in != d or ch.dim_out != d:
            raise ChannelError(f"channel dims ({ch.dim_in},{ch.dim_out}) do not match wires {wires}")
        self.elements.append(ChannelOp(channel=ch, wires=wires, name=name))
        return self

    def measure(self, wire: int, register: str) -> "Circuit":
        (wire,) = self._check_wires([wire])
        self.elements.append(Measure(wire=wire, register=register))
        return self

    def conditional_gate(self, unitary: np.ndarray, wires: Sequence[int],
                         register: str, value: int, name: str = "") -> "Circuit":
        wires = self._check_wires(wires)
        if not any(isinstance(el, Measure) and el.register == register for el in self.elements):
            raise ChannelError(f"condition on register {register!r} precedes any measurement of it")
        self.elements.append(ConditionalGate(unitary=as_complex(unitary), wires=wires,
                                             register=register, value=value, name=name))
        return self

    def reset(self, wire: int) -> "Circuit":
        (wire,) = self._check_wires([wire])
        self.elements.append(Reset(wire=wire))
        return self

    def trace_out(self, wire: int) -> "Circuit":
        (wire,) = self._check_wires([wire])
        self.elements.append(TraceOut(wire=wire))
        return self

    def copy(self) -> "Circuit":
        return Circuit(wires=list(self.wires), elements=list(self.elements),
                       data_wires=self.data_wires)


@dataclass
class ProcessResult:
    """Effective channel of a circuit plus the measurement branch log."""

    channel: Channel
    branch_log: list[tuple[dict, float]]


def _run_elements(engine: StateEngine, circuit: Circuit, handle_of: dict[int, int]) -> None:
    for el in circuit.elements:
        if isinstance(el, Gate):
            engine.apply_unitary(el.unitary, [handle_of[w] for w in el.wires])
        elif isinstance(el, ChannelOp):
            handles = [handle_of[w] for w in el.wires]
            if el.condition is None:
                engine.apply_channel(el.channel, handles)
            else:
                engine.apply_conditional_channel(el.channel, handles, *el.condition)
        elif isinstance(el, Measure):
            engine.measure(handle_of[el.wire], el.register)
        elif isinstance(el, ConditionalGate):
            engine.apply_conditional_unitary(el.unitary, [handle_of[w] for w in el.wires],
                                             el.register, el.value)
        elif isinstance(el, Reset):
            engine.reset(handle_of[el.wire])
        elif isinstance(el, TraceOut):
            engine.trace_out(handle_of[el.wire])
            handle_of.pop(el.wire)
        else:
            raise ChannelError(f"unknown circuit element {el!r}")


def _initial_engine(circuit: Circuit, rho_in: np.ndarray | None,
                    data: tuple[int, ...], extra_ref_dims: list[int] | None = None,
                    joint_ket: np.ndarray | None = None):
    """Set up the engine state: rho_in on data wires, |0> ancillas, optional refs.

    When ``joint_ket`` is given it is a pure state over (data wires + refs)
    in that factor order and overrides ``rho_in``.
    """
    dims = circuit.wire_dims()
    n = len(dims)
    ancillas = [w for w in range(n) if w not in data]
    engine = StateEngine()

    ref_dims = extra_ref_dims or []
    # factor order used to build the initial state: data..., refs..., ancillas...
    build_dims = [dims[w] for w in data] + ref_dims + [dims[w] for w in ancillas]
    if joint_ket is not None:
        ket = joint_ket
        for w in ancillas:
            anc = np.zeros(dims[w], dtype=np.complex128)
            anc[0] = 1.0
            ket = np.kron(ket, anc)
        rho0 = np.outer(ket, ket.conj())
    else:
        rho0 = as_complex(rho_in)
        d_data = int(np.prod([dims[w] for w in data])) if data else 1
        if rho0.shape != (d_data, d_data):
            raise ChannelError(f"input state shape {rho0.shape} does not match data wires {data}")
        for w in ancillas:
            anc = np.zeros((dims[w], dims[w]), dtype=np.complex128)
            anc[0, 0] = 1.0
            rho0 = np.kron(rho0, anc)
    # permute factors from build order to engine order (wire index order, refs last)
    build_order = list(data) + [n + i for i in range(len(ref_dims))] + ancillas
    target_order = list(range(n)) + [n + i for i in range(len(ref_dims))]
    perm = [build_order.index(t) for t in target_order]
    rho0 = permute_factors(rho0, build_dims, perm)
    engine_dims = dims + ref_dims
    handles = engine.add_wires(engine_dims, state=rho0)
    handle_of = {w: handles[w] for w in range(n)}
    ref_handles = handles[n:]
    return engine, handle_of, ref_handles


def simulate(circuit: Circuit, rho_in: np.ndarray,
             data_wires: Sequence[int] | None = None) -> np.ndarray:
    """Run the circuit on rho_in (over the data wires; ancillas start |0>).

    Returns the exact mixed state over the wires still live at the end, in
    ascending wire order.
    """
    data = tuple(data_wires) if data_wires is not None else circuit.data()
    engine, handle_of, _ = _initial_engine(circuit, rho_in, data)
    _run_elements(engine, circuit, handle_of)
    live = sorted(handle_of)
    return engine.reduced_state([handle_of[w] for w in live])


def simulate_detailed(circuit: Circuit, rho_in: np.ndarray,
                      data_wires: Sequence[int] | None = None):
    """Like :func:`simulate` but also returns the branch log."""
    data = tuple(data_wires) if data_wires is not None else circuit.data()
    engine, handle_of, _ = _initial_engine(circuit, rho_in, data)
    _run_elements(engine, circuit, handle_of)
    live = sorted(handle_of)
    return engine.reduced_state([handle_of[w] for w in live]), engine.branch_summary()


def extract_channel(circuit: Circuit, data_wires: Sequence[int] | None = None) -> ProcessResult:
    """Effective channel of the circuit on its data wires.

    One half of a maximally entangled state over the data wires is fed
    through the circuit while reference copies stay untouched; the final
    joint state is the (trace-1) Choi state of the effective map. Every
    non-data wire must be traced out by the end of the circuit.
    """
    data = tuple(data_wires) if data_wires is not None else circuit.data()
    dims = circuit.wire_dims()
    data_dims = [dims[w] for w in data]
    d = int(np.prod(data_dims))
    ket = max_entangled_ket(d)
    engine, handle_of, ref_handles = _initial_engine(
        circuit, None, data, extra_ref_dims=data_dims, joint_ket=ket
    )
    _run_elements(engine, circuit, handle_of)
    live = set(handle_of)
    expected = {w: handle_of[w] for w in data if w in handle_of}
    if len(expected) != len(data):
        raise ChannelError("a data wire was traced out; cannot extract a channel on it")
    extra = [w for w in handle_of if w not in data]
    if extra:
        labels = [circuit.wires[w][0] for w in extra]
        raise ChannelError(
            f"ancilla wires {labels} are still live at circuit end; "
            "trace them out before extracting a channel"
        )
    order = [handle_of[w] for w in data] + list(ref_handles)
    choi = engine.reduced_state(order)
    out_dim = choi.shape[0] // d
    ch = Channel.from_choi(choi, dim_in=d, dim_out=out_dim, validate=False)
    report = validate_cptp(ch)
    if not report.passed:
        raise ChannelError(f"extracted map is not CPTP: {report}")
    return ProcessResult(channel=ch, branch_log=engine.branch_summary())


# -- circuit library -----------------------------------------------------------


def build_bitflip_circuit_a(p: float) -> Circuit:
    """Stochastic-X implementation: keep with probability p, flip otherwise.

    The stochastic gate is realized as an exact two-unitary mixture inserted
    as one channel element.
    """
    stochastic_x = mix([Channel.identity(2), Channel.from_unitary(PAULI_X)], [p, 1 - p])
    c = Circuit(wires=[("q0", 2)], data_wires=(0,))
    c.channel(stochastic_x, [0], name="stochastic_x")
    return c


def build_bitflip_circuit_b(p: float) -> Circuit:
    """Ancilla implementation: R_y on the ancilla with sin^2(theta/2) = 1-p,
    then CNOT from ancilla onto the data wire, ancilla traced out."""
    theta = 2 * np.arcsin(np.sqrt(np.clip(1 - p, 0.0, 1.0)))
    c = Circuit(wires=[("q0", 2), ("anc", 2)], data_wires=(0,))
    c.gate(ry(theta), [1], name="ry")
    c.gate(cnot(), [1, 0], name="cnot")
    c.trace_out(1)
    return c


def build_ad_circuit(theta: float, variant: str = "unitary-cnot") -> Circuit:
    """Amplitude-damping circuit with decay sin^2(theta/2).

    "unitary-cnot": controlled-R_y from data onto the ancilla, then CNOT from
    the ancilla back onto the data wire, ancilla traced out. "measure-feedback"
    replaces the CNOT by a measurement of the ancilla and a classically
    conditioned X on the data wire.
    """
    c = Circuit(wires=[("q0", 2), ("anc", 2)], data_wires=(0,))
    c.gate(controlled_ry(theta), [0, 1], name="cry")
    if variant == "unitary-cnot":
        c.gate(cnot(), [1, 0], name="cnot")
    elif variant == "measure-feedback":
        c.measure(1, "m")
        c.conditional_gate(PAULI_X, [0], "m", 1, name="x")
    else:
        raise ChannelError(f"unknown amplitude-damping circuit variant {variant!r}")
    c.trace_out(1)
    return c


# -- serialization --------------------------------------------------------------


def circuit_to_dict(circuit: Circuit) -> dict:
    elements = []
    for el in circuit.elements:
        if isinstance(el, Gate):
            elements.append({"type": "gate", "name": el.name or "matrix",
                             "wires": list(el.wires),
                             "matrix_re": el.unitary.real.tolist(),
                             "matrix_im": el.unitary.imag.tolist()})
        elif isinstance(el, ChannelOp):
            from .channels import channel_to_dict

            entry = {"type": "channel", "wires": list(el.wires),
                     "channel": channel_to_dict(el.channel), "is_noise": el.is_noise}
            if el.name:
                entry["name"] = el.name
            if el.condition is not None:
                entry["condition"] = {"register": el.condition[0], "value": el.condition[1]}
            elements.append(entry)
        elif isinstance(el, Measure):
            elements.append({"type": "measure", "wire": el.wire, "register": el.register})
        elif isinstance(el, ConditionalGate):
            elements.append({"type": "conditional_gate", "name": el.name or "matrix",
                             "wires": list(el.wires), "register": el.register,
                             "value": el.value,
                             "matrix_re": el.unitary.real.tolist(),
                             "matrix_im": el.unitary.imag.tolist()})
        elif isinstance(el, Reset):
            elements.append({"type": "reset", "wire": el.wire})
        elif isinstance(el, TraceOut):
            elements.append({"type": "trace_out", "wire": el.wire})
    return {
        "wires": [{"label": lbl, "dim": dim} for lbl, dim in circuit.wires],
        "data_wires": list(circuit.data()),
        "elements": elements,
    }


def _element_unitary(entry: dict) -> np.ndarray:
    if "matrix_re" in entry:
        return (np.asarray(entry["matrix_re"], dtype=float)
                + 1j * np.asarray(entry.get("matrix_im",
                                            np.zeros_like(entry["matrix_re"])), dtype=float))
    name = entry.get("name", "")
    if name in GATE_BUILDERS:
        params = {k: v for k, v in entry.items()
                  if k not in ("type", "name", "wires", "register", "value")}
        return as_complex(GATE_BUILDERS[name](**params))
    raise ChannelError(f"gate entry needs a known name or an explicit matrix: {entry}")


def circuit_from_dict(data: dict) -> Circuit:
    wires = [(w["label"], int(w["dim"])) for w in data["wires"]]
    dw = tuple(data["data_wires"]) if "data_wires" in data else None
    c = Circuit(wires=wires, data_wires=dw)
    for entry in data.get("elements", []):
        etype = entry["type"]
        if etype == "gate":
            c.gate(_element_unitary(entry), entry["wires"], name=entry.get("name", ""))
        elif etype == "channel":
            if "channel" in entry:
                from .channels import channel_from_dict

                ch = channel_from_dict(entry["channel"])
            else:
                from .noise import channel_by_name

                params = {k: v for k, v in entry.items()
                          if k not in ("type", "name", "wires", "is_noise", "condition")}
                ch = channel_by_name(entry["name"], **params)
            cond = entry.get("condition")
            el = ChannelOp(channel=ch, wires=tuple(entry["wires"]),
                           is_noise=bool(entry.get("is_noise", False)),
                           condition=(cond["register"], cond["value"]) if cond else None,
                           name=entry.get("name", ""))
            c.elements.append(el)
        elif etype == "measure":
            c.measure(entry["wire"], entry["register"])
        elif etype == "conditional_gate":
            c.conditional_gate(_element_unitary(entry), entry["wires"],
                               entry["register"], entry["value"], name=entry.get("name", ""))
        elif etype == "reset":
            c.reset(entry["wire"])
        elif etype == "trace_out":
            c.trace_out(entry["wire"])
        else:
            raise ChannelError(f"unknown circuit element type {etype!r}")
    return c
