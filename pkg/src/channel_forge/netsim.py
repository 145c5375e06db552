"""Event-driven application of channels and measurements to a network state.

A scenario lists named registers grouped into nodes and a time-ordered
event sequence: channel/gate applications, projective measurements that
publish classical messages, operations conditioned on received messages,
and register creation/removal. Time is logical (event order); waiting in a
memory or a channel is modeled as a single pre-composed channel supplied by
the scenario author, so no continuous-time stepping is ever performed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import Channel, ChannelError
from .engine import StateEngine
from .linalg import as_complex, state_fidelity
from .noise import channel_by_name


@dataclass(frozen=True)
class AddRegisters:
    registers: tuple[tuple[str, int], ...]  # (name, dim) pairs
    state: np.ndarray | None = None  # joint initial state, default |0...0>


@dataclass(frozen=True)
class RemoveRegisters:
    names: tuple[str, ...]


@dataclass(frozen=True)
class ApplyGate:
    unitary: np.ndarray
    registers: tuple[str, ...]


@dataclass(frozen=True)
class ApplyChannel:
    channel: Channel
    registers: tuple[str, ...]


@dataclass(frozen=True)
class MeasureRegister:
    register: str
    message: str  # classical message name published with the outcome


@dataclass(frozen=True)
class ConditionalOp:
    message: str
    value: int
    unitary: np.ndarray | None = None
    channel: Channel | None = None
    registers: tuple[str, ...] = ()


Event = AddRegisters | RemoveRegisters | ApplyGate | ApplyChannel | MeasureRegister | ConditionalOp


@dataclass(frozen=True)
class FidelityReport:
    name: str
    registers: tuple[str, ...]
    target_state: np.ndarray


@dataclass(frozen=True)
class StateReport:
    name: str
    registers: tuple[str, ...]


@dataclass
class NetworkScenario:
    """Named-register network scenario.

    ``nodes`` groups register names per node (documentation and validation
    only; dynamics are global). Registers listed in ``initial_registers``
    exist from the start in |0>.
    """

    initial_registers: list[tuple[str, int]] = field(default_factory=list)
    nodes: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    reports: list = field(default_factory=list)


@dataclass
class ScenarioReport:
    fidelities: dict
    states: dict
    branch_log: list
    final_trace: float


class _Registry:
    def __init__(self):
        self.handle_of: dict[str, int] = {}

    def add(self, name: str, handle: int):
        if name in self.handle_of:
            raise ChannelError(f"register {name!r} already exists")
        self.handle_of[name] = handle

    def pop(self, name: str) -> int:
        if name not in self.handle_of:
            raise ChannelError(f"register {name!r} is not live")
        return self.handle_of.pop(name)

    def get(self, names: Sequence[str]) -> list[int]:
        missing = [n for n in names if n not in self.handle_of]
        if missing:
            raise ChannelError(f"events reference dead or unknown registers {missing}")
        return [self.handle_of[n] for n in names]


def run_scenario(scenario: NetworkScenario) -> ScenarioReport:
    """Execute a scenario deterministically and collect its reports.

    Measurements keep exact branches; conditional operations act per
    branch on the recorded messages; reported states and fidelities use
    the exact branch mixture.
    """
    engine = StateEngine()
    reg = _Registry()
    if scenario.initial_registers:
        handles = engine.add_wires([d for _, d in scenario.initial_registers])
        for (name, _), h in zip(scenario.initial_registers, handles):
            reg.add(name, h)

    messages_seen: set[str] = set()
    for ev in scenario.events:
        if isinstance(ev, AddRegisters):
            dims = [d for _, d in ev.registers]
            state = as_complex(ev.state) if ev.state is not None else None
            handles = engine.add_wires(dims, state=state)
            for (name, _), h in zip(ev.registers, handles):
                reg.add(name, h)
        elif isinstance(ev, RemoveRegisters):
            for name in ev.names:
                engine.trace_out(reg.pop(name))
        elif isinstance(ev, ApplyGate):
            engine.apply_unitary(as_complex(ev.unitary), reg.get(ev.registers))
        elif isinstance(ev, ApplyChannel):
            handles = reg.get(ev.registers)
            engine.apply_channel(ev.channel, handles)
        elif isinstance(ev, MeasureRegister):
            engine.measure(reg.get([ev.register])[0], ev.message)
            messages_seen.add(ev.message)
        elif isinstance(ev, ConditionalOp):
            if ev.message not in messages_seen:
                raise ChannelError(f"condition on message {ev.message!r} before it was published")
            handles = reg.get(ev.registers)
            if ev.unitary is not None:
                engine.apply_conditional_unitary(as_complex(ev.unitary), handles,
                                                 ev.message, ev.value)
            elif ev.channel is not None:
                engine.apply_conditional_channel(ev.channel, handles, ev.message, ev.value)
            else:
                raise ChannelError("conditional event carries neither a gate nor a channel")
        else:
            raise ChannelError(f"unknown event {ev!r}")

    fidelities, states = {}, {}
    for rep in scenario.reports:
        handles = reg.get(rep.registers)
        rho = engine.reduced_state(handles)
        if isinstance(rep, FidelityReport):
            fidelities[rep.name] = state_fidelity(rho, as_complex(rep.target_state))
        elif isinstance(rep, StateReport):
            states[rep.name] = rho
        else:
            raise ChannelError(f"unknown report {rep!r}")
    final_trace = float(np.trace(engine.mixed_state()).real) if engine.dims else 1.0
    return ScenarioReport(fidelities=fidelities, states=states,
                         branch_log=engine.branch_summary(), final_trace=final_trace)


@dataclass(frozen=True)
class ResourceEstimate:
    """Qubit accounting for m -> 1 purification over n-qubit states.

    One round consumes m copies of an n-qubit state and stages the output
    while the next batch is produced, so a single step runs on n*m active
    qubits and k rounds require 2*k*n*m in total.
    """

    n: int
    m: int
    k: int

    @property
    def active_qubits(self) -> int:
        return self.n * self.m

    @property
    def qubits_required(self) -> int:
        return 2 * self.k * self.n * self.m


def resource_estimate(n: int, m: int, k: int) -> ResourceEstimate:
    """Resource count for k purification rounds on m copies of n-qubit states."""
    if min(n, m, k) < 1:
        raise ChannelError("n, m, k must be positive integers")
    return ResourceEstimate(n=int(n), m=int(m), k=int(k))


# -- scenario files -------------------------------------------------------------


def _event_from_dict(entry: dict) -> Event:
    etype = entry["type"]
    if etype == "add_registers":
        regs = tuple((r["name"], int(r["dim"])) for r in entry["registers"])
        state = None
        if "state_re" in entry:
            state = (np.asarray(entry["state_re"], dtype=float)
                     + 1j * np.asarray(entry.get("state_im", 0.0 * np.asarray(entry["state_re"])), dtype=float))
        return AddRegisters(registers=regs, state=state)
    if etype == "remove_registers":
        return RemoveRegisters(names=tuple(entry["names"]))
    if etype == "apply_gate":
        from .circuits import GATE_BUILDERS

        if "matrix_re" in entry:
            u = (np.asarray(entry["matrix_re"], dtype=float)
                 + 1j * np.asarray(entry.get("matrix_im", 0.0 * np.asarray(entry["matrix_re"])), dtype=float))
        else:
            params = {k: v for k, v in entry.items() if k not in ("type", "name", "registers")}
            u = GATE_BUILDERS[entry["name"]](**params)
        return ApplyGate(unitary=u, registers=tuple(entry["registers"]))
    if etype == "apply_channel":
        if "channel" in entry:
            from .channels import channel_from_dict

            ch = channel_from_dict(entry["channel"])
        else:
            params = {k: v for k, v in entry.items() if k not in ("type", "name", "registers")}
            ch = channel_by_name(entry["name"], **params)
        return ApplyChannel(channel=ch, registers=tuple(entry["registers"]))
    if etype == "measure":
        return MeasureRegister(register=entry["register"], message=entry["message"])
    if etype == "conditional_gate":
        from .circuits import GATE_BUILDERS

        if "matrix_re" in entry:
            u = (np.asarray(entry["matrix_re"], dtype=float)
                 + 1j * np.asarray(entry.get("matrix_im", 0.0 * np.asarray(entry["matrix_re"])), dtype=float))
        else:
            params = {k: v for k, v in entry.items()
                      if k not in ("type", "name", "registers", "message", "value")}
            u = GATE_BUILDERS[entry["name"]](**params)
        return ConditionalOp(message=entry["message"], value=int(entry["value"]),
                             unitary=u, registers=tuple(entry["registers"]))
    raise ChannelError(f"unknown event type {etype!r}")


def scenario_from_dict(data: dict) -> NetworkScenario:
    """Build a scenario from its JSON/TOML dictionary form."""
    initial = [(r["name"], int(r["dim"])) for r in data.get("registers", [])]
    nodes = {k: list(v) for k, v in data.get("nodes", {}).items()}
    events = []
    for idx, entry in enumerate(data.get("events", [])):
        try:
            events.append(_event_from_dict(entry))
        except (ChannelError, KeyError) as exc:
            raise ChannelError(f"events[{idx}]: {exc}") from exc
    reports = []
    for rep in data.get("reports", []):
        if rep["type"] == "fidelity":
            target = (np.asarray(rep["target_re"], dtype=float)
                      + 1j * np.asarray(rep.get("target_im", 0.0 * np.asarray(rep["target_re"])), dtype=float))
            reports.append(FidelityReport(name=rep["name"],
                                          registers=tuple(rep["registers"]),
                                          target_state=target))
        elif rep["type"] == "state":
            reports.append(StateReport(name=rep["name"], registers=tuple(rep["registers"])))
        else:
            raise ChannelError(f"unknown report type {rep['type']!r}")
    declared = {name for name, _ in initial}
    for ev in events:
        if isinstance(ev, AddRegisters):
            declared.update(name for name, _ in ev.registers)
    for node, names in nodes.items():
        unknown = [n for n in names if n not in declared]
        if unknown:
            raise ChannelError(f"node {node!r} lists unknown registers {unknown}")
    return NetworkScenario(initial_registers=initial, nodes=nodes,
                           events=events, reports=reports)
