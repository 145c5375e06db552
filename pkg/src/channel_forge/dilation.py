"""Executable routines realizing arbitrary channels on perfect hardware.

Two constructions are provided. The ancilla-assisted route embeds the Kraus
operators as the first block-column of a unitary on ancilla (x) system and
traces the ancilla afterwards. The extended-qudit route packs the channel
branches into orthogonal level ranges of one larger qudit: a unitary built
from the SVD factors of the Kraus operators, a projective measurement onto
the level ranges, and per-outcome correction unitaries, after which the
outcome is erased by exact mixing. POVMs ride on the same machinery with the
outcome kept instead of erased, and channels of the measure-then-correct
form get a dedicated ancilla-free routine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import Channel, ChannelError
from .linalg import (
    RANK_CUTOFF,
    as_complex,
    complete_orthonormal_columns,
    dagger,
    hermitian_sqrt,
    partial_trace,
)
from .noise import bell_diagonal_weights, pauli_operators


@dataclass(frozen=True)
class StinespringDilation:
    """Unitary on ancilla (x) system whose partial trace realizes a channel.

    The ancilla starts in |0>; the block <i,k| U |0,l> equals <k| K_i |l>,
    so the first d columns stack the Kraus operators.
    """

    unitary: np.ndarray
    ancilla_dim: int
    system_dim: int

    def execute(self, rho: np.ndarray) -> np.ndarray:
        """tr_ancilla[ U (|0><0| (x) rho) U^dag ]."""
        rho = as_complex(rho)
        d = self.system_dim
        if rho.shape != (d, d):
            raise ChannelError(f"state shape {rho.shape} does not match system dim {d}")
        anc = np.zeros((self.ancilla_dim, self.ancilla_dim), dtype=np.complex128)
        anc[0, 0] = 1.0
        full = np.kron(anc, rho)
        evolved = self.unitary @ full @ dagger(self.unitary)
        return partial_trace(evolved, [self.ancilla_dim, d], keep=[1])

    def channel(self) -> Channel:
        """Effective channel realized by the dilation."""
        d = self.system_dim
        kraus = [self.unitary[i * d : (i + 1) * d, :d] for i in range(self.ancilla_dim)]
        return Channel.from_kraus(kraus)

    def overhead(self) -> float:
        """Ancilla cost in qubits: log2 of the ancilla dimension."""
        return float(np.log2(self.ancilla_dim))


def stinespring_dilate(kraus_ops: list[np.ndarray]) -> StinespringDilation:
    """Ancilla-assisted dilation of a Kraus set {K_i}.

    The supplied operators (r of them, including any redundant ones) fix the
    first d columns of an (r*d x r*d) unitary; the rest are completed by
    pivoted Gram-Schmidt, so the construction is deterministic.
    """
    ops = [as_complex(k) for k in kraus_ops]
    if not ops:
        raise ChannelError("empty Kraus set")
    d_out, d_in = ops[0].shape
    if d_out != d_in:
        raise ChannelError("stinespring_dilate supports square channels only")
    d = d_in
    completeness = sum(dagger(k) @ k for k in ops)
    dev = float(np.max(np.abs(completeness - np.eye(d))))
    if dev > 1e-10:
        raise ChannelError(f"Kraus completeness violated: ||sum K^dag K - 1||_max = {dev:.3e}")
    r = len(ops)
    first_cols = np.vstack(ops)  # (r*d, d); row (i*d + k), col l holds <k|K_i|l>
    unitary = complete_orthonormal_columns(first_cols, r * d)
    return StinespringDilation(unitary=unitary, ancilla_dim=r, system_dim=d)


def dilation_execute(dil: StinespringDilation, rho: np.ndarray) -> np.ndarray:
    """Apply the dilated channel to a state."""
    return dil.execute(rho)


@dataclass(frozen=True)
class QuditRoutine:
    """Channel realization inside one extended qudit.

    Data lives in the first ``data_dim`` levels of a ``total_dim``-level
    system. The routine applies ``unitary``, measures the projectors onto
    consecutive level ranges [boundaries[i], boundaries[i+1]), applies the
    branch correction ``corrections[i]``, and finally erases the outcome.
    """

    total_dim: int
    data_dim: int
    unitary: np.ndarray
    boundaries: tuple[int, ...]  # cumulative block edges, boundaries[0] == 0
    corrections: tuple[np.ndarray, ...]
    branch_ranks: tuple[int, ...]

    @property
    def n_branches(self) -> int:
        return len(self.branch_ranks)

    def projectors(self) -> list[np.ndarray]:
        projs = []
        for i in range(self.n_branches):
            p = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
            lo, hi = self.boundaries[i], self.boundaries[i + 1]
            p[lo:hi, lo:hi] = np.eye(hi - lo)
            projs.append(p)
        return projs

    def embed(self, rho: np.ndarray) -> np.ndarray:
        """rho (+) 0 on the full qudit space."""
        rho = as_complex(rho)
        if rho.shape != (self.data_dim, self.data_dim):
            raise ChannelError(f"state shape {rho.shape} does not match data dim {self.data_dim}")
        big = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
        big[: self.data_dim, : self.data_dim] = rho
        return big

    def branch_states(self, rho: np.ndarray):
        """Per-outcome (probability, corrected full-space state) pairs."""
        big = self.unitary @ self.embed(rho) @ dagger(self.unitary)
        out = []
        for proj, corr in zip(self.projectors(), self.corrections):
            sel = proj @ big @ proj
            p = float(np.trace(sel).real)
            state = corr @ sel @ dagger(corr)
            out.append((p, state))
        return out

    def branch_probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.array([p for p, _ in self.branch_states(rho)])

    def execute(self, rho: np.ndarray) -> np.ndarray:
        """Run the routine with outcome erasure; returns the data-subspace state."""
        total = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
        for p, state in self.branch_states(rho):
            total += state
        if self.total_dim > self.data_dim:
            residual = float(np.max(np.abs(total[self.data_dim:, :])))
            if residual > 1e-9:
                raise ChannelError(f"routine leaked {residual:.3e} outside the data subspace")
        return total[: self.data_dim, : self.data_dim]

    def channel(self) -> Channel:
        """Effective channel on the data subspace."""
        d = self.data_dim
        kraus = []
        for i in range(self.n_branches):
            lo, hi = self.boundaries[i], self.boundaries[i + 1]
            # branch flow (correction . projector . unitary) restricted to the
            # data subspace on both sides
            proj_rows = self.unitary[lo:hi, :d]
            corr_cols = self.corrections[i][:d, lo:hi]
            kraus.append(corr_cols @ proj_rows)
        return Channel.from_kraus(kraus)

    def overhead(self) -> float:
        """Level cost in qubits: log2(D) - log2(d)."""
        return float(np.log2(self.total_dim) - np.log2(self.data_dim))


def extended_qudit_routine(kraus_ops: list[np.ndarray]) -> QuditRoutine:
    """Extended-qudit realization of a Kraus set {K_i}.

    Each K_i = W_i S_i V_i^dag (singular values descending) contributes its
    rank-k_i reduced factor, the nonzero rows of S_i V_i^dag, as a block of
    the first d columns of the routine unitary. Branch i is corrected by
    (W_i (+) 1) X_D^{c_{i-1}}, with X_D the cyclic lowering shift. Zero Kraus
    operators contribute nothing and are skipped.
    """
    from .circuits import shift_operator

    ops = [as_complex(k) for k in kraus_ops]
    if not ops:
        raise ChannelError("empty Kraus set")
    d_out, d_in = ops[0].shape
    if d_out != d_in:
        raise ChannelError("extended_qudit_routine supports square channels only")
    d = d_in
    completeness = sum(dagger(k) @ k for k in ops)
    dev = float(np.max(np.abs(completeness - np.eye(d))))
    if dev > 1e-10:
        raise ChannelError(f"Kraus completeness violated: ||sum K^dag K - 1||_max = {dev:.3e}")

    reduced = []  # (W_i, Ktilde_i, kappa_i)
    for k in ops:
        w, s, vh = np.linalg.svd(k)
        kappa = int(np.sum(s > RANK_CUTOFF))
        if kappa == 0:
            continue
        ktilde = (s[:kappa, None] * vh[:kappa, :])
        reduced.append((w, ktilde, kappa))
    if not reduced:
        raise ChannelError("all Kraus operators are zero")

    ranks = [kappa for _, _, kappa in reduced]
    total = int(sum(ranks))
    first_cols = np.vstack([ktilde for _, ktilde, _ in reduced])  # (D, d)
    unitary = complete_orthonormal_columns(first_cols, total)

    boundaries = [0]
    for kappa in ranks:
        boundaries.append(boundaries[-1] + kappa)
    shift = shift_operator(total)
    corrections = []
    for (w, _, _), lo in zip(reduced, boundaries[:-1]):
        w_big = np.eye(total, dtype=np.complex128)
        w_big[:d, :d] = w
        corrections.append(w_big @ np.linalg.matrix_power(shift, lo))
    return QuditRoutine(
        total_dim=total,
        data_dim=d,
        unitary=unitary,
        boundaries=tuple(boundaries),
        corrections=tuple(corrections),
        branch_ranks=tuple(ranks),
    )


def qudit_overhead(routine: QuditRoutine) -> float:
    """Level overhead log2(D) - log2(d) of an extended-qudit routine."""
    return routine.overhead()


class NotMixedUnitary:
    """Marker returned when a channel is not recognized as mixed-unitary."""

    def __repr__(self) -> str:
        return "NotMixedUnitary"


NOT_MIXED_UNITARY = NotMixedUnitary()


def mixed_unitary_decompose(ch: Channel, atol: float = 1e-9):
    """Pauli mixture (unitaries, probabilities) of a Pauli-diagonal channel.

    Diagonalizes the Choi state in the Bell-type basis; if off-diagonal
    weight remains, the channel is not Pauli-diagonal and the
    :data:`NOT_MIXED_UNITARY` marker is returned (general mixed-unitary
    detection is out of scope).
    """
    if ch.dim_in != ch.dim_out:
        return NOT_MIXED_UNITARY
    weights = bell_diagonal_weights(ch, atol=atol)
    if weights is None:
        return NOT_MIXED_UNITARY
    n = int(round(np.log2(ch.dim_in)))
    ops = pauli_operators(n)
    unitaries, probs = [], []
    for w, op in zip(weights, ops):
        if w > RANK_CUTOFF:
            unitaries.append(op)
            probs.append(float(w))
    return unitaries, np.array(probs)


@dataclass(frozen=True)
class POVMSpec:
    """Generalized measurement {O_i >= 0} with sum O_i = 1."""

    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.elements:
            raise ChannelError("POVM needs at least one element")
        d = self.elements[0].shape[0]
        acc = np.zeros((d, d), dtype=np.complex128)
        for o in self.elements:
            if o.shape != (d, d):
                raise ChannelError("POVM elements must share one square shape")
            lo = float(np.linalg.eigvalsh((o + dagger(o)) / 2)[0])
            if lo < -1e-10:
                raise ChannelError(f"POVM element not PSD: min eigenvalue {lo:.3e}")
            acc += o
        dev = float(np.max(np.abs(acc - np.eye(d))))
        if dev > 1e-10:
            raise ChannelError(f"POVM completeness violated: residual {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]


@dataclass(frozen=True)
class POVMRoutine:
    """Qudit routine for a POVM; the measurement outcome is kept, not erased.

    ``branch_of_outcome[i]`` is the routine branch realizing POVM element i,
    or None when the element is zero (its probability is always 0).
    """

    povm: POVMSpec
    routine: QuditRoutine
    branch_of_outcome: tuple[int | None, ...]

    def outcome_probabilities(self, rho: np.ndarray) -> np.ndarray:
        """Born probabilities tr(O_i rho) as realized by the routine."""
        branch_probs = self.routine.branch_probabilities(rho)
        out = np.zeros(len(self.povm.elements))
        for i, b in enumerate(self.branch_of_outcome):
            if b is not None:
                out[i] = branch_probs[b]
        return out

    def post_measurement_state(self, rho: np.ndarray, outcome: int) -> np.ndarray:
        """Normalized data-subspace state after observing ``outcome``."""
        b = self.branch_of_outcome[outcome]
        if b is None:
            raise ChannelError(f"outcome {outcome} has zero POVM element")
        branches = self.routine.branch_states(rho)
        p, state = branches[b]
        if p <= 1e-15:
            raise ChannelError(f"outcome {outcome} has zero probability on this state")
        d = self.routine.data_dim
        return state[:d, :d] / p


def povm_to_routine(povm: POVMSpec) -> POVMRoutine:
    """Realize a POVM as the channel {sqrt(O_i)} on an extended qudit.

    Branch i of the routine occurs with probability tr(O_i rho) and leaves
    the data subspace in sqrt(O_i) rho sqrt(O_i) / p_i; the outcome is
    learned rather than erased.
    """
    roots = [hermitian_sqrt(o) for o in povm.elements]
    branch_of_outcome: list[int | None] = []
    kept = []
    for root in roots:
        if np.max(np.abs(root)) <= RANK_CUTOFF:
            branch_of_outcome.append(None)
        else:
            branch_of_outcome.append(len(kept))
            kept.append(root)
    routine = extended_qudit_routine(kept)
    return POVMRoutine(povm=povm, routine=routine, branch_of_outcome=tuple(branch_of_outcome))


@dataclass(frozen=True)
class ProjectiveRoutine:
    """Measure {P_i}, apply the correction U_i, erase the outcome.

    Realizes channels with Kraus form {U_i P_i} without any ancilla.
    """

    projectors: tuple[np.ndarray, ...]
    corrections: tuple[np.ndarray, ...]

    def execute(self, rho: np.ndarray) -> np.ndarray:
        rho = as_complex(rho)
        out = np.zeros_like(rho)
        for p, u in zip(self.projectors, self.corrections):
            out += u @ p @ rho @ p @ dagger(u)
        return out

    def channel(self) -> Channel:
        return Channel.from_kraus([u @ p for p, u in zip(self.projectors, self.corrections)])


def projective_channel_routine(projectors: list[np.ndarray],
                               corrections: list[np.ndarray]) -> ProjectiveRoutine:
    """Ancilla-free routine for a caller-supplied {(P_i, U_i)} factorization.

    Checks that each P_i is a projector, that they resolve the identity, and
    that each correction is unitary.
    """
    if len(projectors) != len(corrections):
        raise ChannelError("projectors and corrections must pair up")
    if not projectors:
        raise ChannelError("empty projective decomposition")
    projs = [as_complex(p) for p in projectors]
    corrs = [as_complex(u) for u in corrections]
    d = projs[0].shape[0]
    acc = np.zeros((d, d), dtype=np.complex128)
    for p in projs:
        if np.max(np.abs(p @ p - p)) > 1e-10:
            raise ChannelError("supplied operator is not a projector (P^2 != P)")
        acc += p
    if np.max(np.abs(acc - np.eye(d))) > 1e-10:
        raise ChannelError("projectors do not resolve the identity")
    for u in corrs:
        if np.max(np.abs(dagger(u) @ u - np.eye(d))) > 1e-10:
            raise ChannelError("correction operator is not unitary")
    return ProjectiveRoutine(projectors=tuple(projs), corrections=tuple(corrs))


def routine_to_dict(routine: QuditRoutine) -> dict:
    """JSON-friendly export: unitary, projector ranges, corrections."""
    return {
        "total_dim": routine.total_dim,
        "data_dim": routine.data_dim,
        "unitary_re": routine.unitary.real.tolist(),
        "unitary_im": routine.unitary.imag.tolist(),
        "projector_ranges": [
            [routine.boundaries[i], routine.boundaries[i + 1]]
            for i in range(routine.n_branches)
        ],
        "corrections_re": [c.real.tolist() for c in routine.corrections],
        "corrections_im": [c.imag.tolist() for c in routine.corrections],
        "branch_ranks": list(routine.branch_ranks),
        "overhead_qubits": routine.overhead(),
    }
