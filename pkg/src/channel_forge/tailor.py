"""Noise tailoring: reshape what the hardware gives into what the target needs.

Three strategies. Building-block optimization wraps a fixed noisy channel
with optimized correction channels applied before/after/both, mixed with
optimized probabilities (each correction itself decorated by hardware
noise). Tailored circuits adjust circuit parameters analytically or
numerically: Pauli-diagonal post-processing has a closed-form solution,
amplitude-damping repeats a discrete one, and rotation angles a 1-D search.
The black-box route optimizes any parameter-to-fidelity oracle with a
gradient-free method and no knowledge of the underlying noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, logm
from scipy.optimize import minimize, minimize_scalar

from .channels import Channel, ChannelError, choi_fidelity, compose, mix
from .linalg import reshuffle, uhlmann_fidelity
from .noise import (
    BlockModel,
    NoiseModel,
    PauliDiagonalSpec,
    amplitude_damping,
    apply_noise_model,
    pauli_operators,
    pauli_product_index,
)


@dataclass
class TailoringRecipe:
    """Outcome of a tailoring run.

    ``pre_channels``/``post_channels`` hold the ideal (undecorated)
    correction blocks; ``mixture`` is the joint probability table over
    (post choice, pre choice) with index 0 meaning "skip" on that side.
    ``circuit_params`` carries parameter-style recipes instead.
    """

    method: str
    achieved_fidelity: float
    pre_channels: list = field(default_factory=list)
    post_channels: list = field(default_factory=list)
    mixture: np.ndarray | None = None
    circuit_params: dict | None = None
    converged: bool = True
    evaluations: int = 0
    details: dict = field(default_factory=dict)


# -- CPTP parameterization ----------------------------------------------------


def _hermitian_from_params(v: np.ndarray, n: int) -> np.ndarray:
    h = np.zeros((n, n), dtype=np.complex128)
    idx = n
    h[np.diag_indices(n)] = v[:n]
    for i in range(n):
        for j in range(i + 1, n):
            h[i, j] = v[idx] + 1j * v[idx + 1]
            h[j, i] = v[idx] - 1j * v[idx + 1]
            idx += 2
    return h


def _params_from_hermitian(h: np.ndarray) -> np.ndarray:
    n = h.shape[0]
    v = np.zeros(n * n)
    v[:n] = np.diag(h).real
    idx = n
    for i in range(n):
        for j in range(i + 1, n):
            v[idx] = h[i, j].real
            v[idx + 1] = h[i, j].imag
            idx += 2
    return v


@dataclass(frozen=True)
class CPTPParameterization:
    """Channels encoded by a Stinespring unitary on system (x) ancilla.

    The unitary is exp(iH) for a Hermitian generator H parameterized by
    ``n_params`` reals; the decoded channel's Kraus operators are the
    ancilla blocks of the unitary's first block column; CPTP holds by
    construction for every parameter vector.
    """

    dim: int
    ancilla_dim: int

    @property
    def n_params(self) -> int:
        return (self.dim * self.ancilla_dim) ** 2

    def decode(self, params: np.ndarray) -> Channel:
        n = self.dim * self.ancilla_dim
        h = _hermitian_from_params(np.asarray(params, dtype=float), n)
        u = expm(1j * h)
        d = self.dim
        kraus = [u[i * d : (i + 1) * d, :d] for i in range(self.ancilla_dim)]
        return Channel.from_kraus(kraus)

    def encode(self, ch: Channel) -> np.ndarray:
        """Parameters reproducing ``ch`` exactly (for warm starts).

        The channel's Kraus set (padded with zero operators up to the
        ancilla dimension) is dilated to a unitary whose matrix log gives
        the generator.
        """
        if ch.dim_in != self.dim or ch.dim_out != self.dim:
            raise ChannelError("channel dims do not match the parameterization")
        kraus = ch.kraus()
        if len(kraus) > self.ancilla_dim:
            raise ChannelError(
                f"channel rank {len(kraus)} exceeds ancilla dim {self.ancilla_dim}"
            )
        from .dilation import stinespring_dilate

        padded = list(kraus) + [np.zeros((self.dim, self.dim), dtype=np.complex128)
                                for _ in range(self.ancilla_dim - len(kraus))]
        u = stinespring_dilate(padded).unitary
        h = logm(u) / 1j
        h = (h + h.conj().T) / 2
        return _params_from_hermitian(h)


# -- gradient-free maximization ------------------------------------------------


@dataclass
class OptimizerConfig:
    """Knobs for the gradient-free searches."""

    restarts: int = 8
    max_evals_per_restart: int = 2000
    xatol: float = 1e-8
    fatol: float = 1e-12
    seed: int = 0
    init_scale: float = 0.5
    method: str = "nelder-mead"


def _maximize(objective: Callable[[np.ndarray], float], n_params: int,
              config: OptimizerConfig, seeds: Sequence[np.ndarray] = ()):
    """Multi-start maximization; returns (best_x, best_f, evals, converged)."""
    rng = np.random.default_rng(config.seed)
    counter = {"n": 0}

    def neg(x):
        counter["n"] += 1
        return -objective(x)

    starts = [np.asarray(s, dtype=float) for s in seeds]
    while len(starts) < config.restarts + len(seeds):
        starts.append(config.init_scale * rng.standard_normal(n_params))
    best_x, best_f, converged = None, -np.inf, False
    for x0 in starts:
        if config.method == "nelder-mead":
            res = minimize(neg, x0, method="Nelder-Mead",
                           options={"maxfev": config.max_evals_per_restart,
                                    "xatol": config.xatol, "fatol": config.fatol})
            val, x, ok = -res.fun, res.x, bool(res.success)
        elif config.method == "coordinate-descent":
            x, val, ok = _coordinate_descent(neg, x0, config)
        else:
            raise ChannelError(f"unknown optimizer {config.method!r}")
        if val > best_f:
            best_x, best_f, converged = x, val, ok
    return best_x, best_f, counter["n"], converged


def _coordinate_descent(neg, x0: np.ndarray, config: OptimizerConfig):
    """Cyclic 1-D bounded refinement around the current point."""
    x = np.array(x0, dtype=float)
    f = neg(x)
    span = 1.0
    evals = 0
    budget = config.max_evals_per_restart
    while evals < budget and span > config.xatol:
        improved = False
        for i in range(x.size):
            def along(t, i=i):
                y = x.copy()
                y[i] = t
                return neg(y)

            res = minimize_scalar(along, bounds=(x[i] - span, x[i] + span),
                                  method="bounded", options={"xatol": config.xatol})
            evals += 25
            if res.fun < f - 1e-15:
                x[i] = res.x
                f = res.fun
                improved = True
            if evals >= budget:
                break
        if not improved:
            span /= 4
    return x, -f, span <= config.xatol


# -- Method 1: building blocks --------------------------------------------------


@dataclass
class BuildingBlockConfig:
    """Configuration for Method-1 optimization."""

    placement: str = "interleaved"  # pre | post | interleaved
    mixture_size: int = 2
    ancilla_dim: int | None = None  # default d^2
    noisy_blocks: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)


def _tensor_power(ch: Channel, n: int) -> Channel:
    out = ch
    for _ in range(n - 1):
        kraus = [np.kron(a, b) for a in out.kraus() for b in ch.kraus()]
        out = Channel.from_kraus(kraus)
    return out


def _block_decorator(hw: NoiseModel | None, dim: int) -> Channel | None:
    """Noise channel appended after a building block of the given dimension."""
    if hw is None:
        return None
    if isinstance(hw, BlockModel):
        noise = hw.trailing
    else:
        n_wires = max(1, int(round(np.log2(dim) / np.log2(hw.channel_for(1).dim_in))))
        noise = hw.channel_for(n_wires, "building-block")
    if noise.dim_in != dim:
        n_factors = int(round(np.log(dim) / np.log(noise.dim_in)))
        if noise.dim_in**n_factors != dim:
            raise ChannelError(
                f"hw noise dim {noise.dim_in} does not tile block dim {dim}"
            )
        noise = _tensor_power(noise, n_factors)
    return noise


def _mixture_output_choi(input_superop: np.ndarray, dim: int,
                         post_superops: list, pre_superops: list,
                         probs: np.ndarray) -> np.ndarray:
    """Choi of sum_ij p_ij post_i . input . pre_j (index 0 = skip)."""
    s = np.zeros_like(input_superop)
    for i, sp in enumerate(post_superops):
        left = sp @ input_superop if sp is not None else input_superop
        for j, sq in enumerate(pre_superops):
            if probs[i, j] == 0.0:
                continue
            term = left @ sq if sq is not None else left
            s += probs[i, j] * term
    return reshuffle(s, dim, dim) / dim


def _evaluate_recipe(input_impl: Channel, target: Channel,
                     post_blocks: list, pre_blocks: list,
                     probs: np.ndarray, decorator: Channel | None) -> float:
    post_sup = [None] + [
        (compose(decorator, b) if decorator is not None else b).superop() for b in post_blocks
    ]
    pre_sup = [None] + [
        (compose(decorator, b) if decorator is not None else b).superop() for b in pre_blocks
    ]
    choi = _mixture_output_choi(input_impl.superop(), input_impl.dim_in,
                                post_sup, pre_sup, probs)
    return uhlmann_fidelity(choi, target.choi)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def building_block_optimize(target: Channel, input_impl: Channel,
                            hw: NoiseModel | None = None,
                            config: BuildingBlockConfig | None = None,
                            extra_candidates: Sequence[tuple] = ()) -> TailoringRecipe:
    """Method 1: wrap a fixed noisy channel in optimized correction blocks.

    Maximizes F(sum_ij p_ij post'_i . input . pre'_j, target) over CPTP
    corrections (decoded from Stinespring parameterizations) and the joint
    mixture, where primes mean the block is itself decorated by ``hw``
    noise. Index 0 on each side is "skip" (no block, hence no decoration),
    so the plain input channel is always feasible and the result can only
    improve on it.

    ``extra_candidates`` are (post_blocks, pre_blocks, probs) triples
    evaluated alongside the optimizer (warm-start constructions).
    """
    config = config or BuildingBlockConfig()
    if target.dim_in != target.dim_out or input_impl.dim_in != input_impl.dim_out:
        raise ChannelError("building-block tailoring expects square channels")
    if input_impl.dim_in != target.dim_in:
        raise ChannelError("input and target dimensions differ")
    d = target.dim_in
    m = config.mixture_size
    d_a = config.ancilla_dim or d * d
    param = CPTPParameterization(dim=d, ancilla_dim=d_a)
    g = param.n_params
    decorator = _block_decorator(hw, d) if config.noisy_blocks else None

    use_post = config.placement in ("post", "interleaved")
    use_pre = config.placement in ("pre", "interleaved")
    if config.placement not in ("pre", "post", "interleaved"):
        raise ChannelError(f"unknown placement {config.placement!r}")
    n_post = m if use_post else 0
    n_pre = m if use_pre else 0
    n_logits = (n_post + 1) * (n_pre + 1)
    n_params = (n_post + n_pre) * g + n_logits

    input_sup = input_impl.superop()
    target_choi = target.choi

    def unpack(x: np.ndarray):
        posts = [param.decode(x[k * g : (k + 1) * g]) for k in range(n_post)]
        offset = n_post * g
        pres = [param.decode(x[offset + k * g : offset + (k + 1) * g]) for k in range(n_pre)]
        logits = x[(n_post + n_pre) * g :]
        probs = _softmax(logits).reshape(n_post + 1, n_pre + 1)
        return posts, pres, probs

    def objective(x: np.ndarray) -> float:
        posts, pres, probs = unpack(x)
        post_sup = [None] + [
            (compose(decorator, b) if decorator is not None else b).superop() for b in posts
        ]
        pre_sup = [None] + [
            (compose(decorator, b) if decorator is not None else b).superop() for b in pres
        ]
        choi = _mixture_output_choi(input_sup, d, post_sup, pre_sup, probs)
        try:
            return uhlmann_fidelity(choi, target_choi)
        except ValueError:
            return 0.0

    # seed at the direct corner (skip everything)
    direct_seed = np.zeros(n_params)
    direct_seed[(n_post + n_pre) * g] = 30.0
    best_x, best_f, evals, converged = _maximize(objective, n_params,
                                                 config.optimizer, seeds=[direct_seed])
    posts, pres, probs = unpack(best_x)

    # explicit candidates: the direct implementation, plus any provided ones
    direct_probs = np.zeros((1, 1))
    direct_probs[0, 0] = 1.0
    candidates = [([], [], direct_probs)]
    candidates.extend(extra_candidates)
    best = TailoringRecipe(
        method="building-block", achieved_fidelity=best_f,
        post_channels=posts, pre_channels=pres, mixture=probs,
        converged=converged, evaluations=evals,
        details={"placement": config.placement, "noisy_blocks": config.noisy_blocks},
    )
    for cand_posts, cand_pres, cand_probs in candidates:
        f = _evaluate_recipe(input_impl, target, list(cand_posts), list(cand_pres),
                             np.asarray(cand_probs, dtype=float), decorator)
        if f > best.achieved_fidelity:
            best = TailoringRecipe(
                method="building-block", achieved_fidelity=f,
                post_channels=list(cand_posts), pre_channels=list(cand_pres),
                mixture=np.asarray(cand_probs, dtype=float),
                converged=True, evaluations=evals,
                details={"placement": config.placement,
                         "noisy_blocks": config.noisy_blocks, "candidate": True},
            )
    return best


# -- Method 2: analytic/parametric tailoring -------------------------------------


@dataclass(frozen=True)
class Infeasible:
    """No probability distribution solves the tailoring system."""

    residual: float

    def __repr__(self) -> str:
        return f"Infeasible(residual={self.residual:.3e})"


@dataclass
class PauliTailorResult:
    """Mixing distribution over Pauli corrections plus solve diagnostics."""

    lam: np.ndarray
    residual: float
    unique: bool


def _is_depolarizing_spec(spec: PauliDiagonalSpec) -> bool:
    p = spec.as_array()
    rest = p[1:]
    return bool(p.size == 4 and np.max(np.abs(rest - rest.mean())) < 1e-14)


def pauli_tailor(hw_pauli: PauliDiagonalSpec, base: PauliDiagonalSpec,
                 target: PauliDiagonalSpec, atol: float = 1e-9):
    """Pick Pauli-correction probabilities turning base noise into target noise.

    The composite channel is hw . (sum_j lam_j P_j . P_j) . base; its Pauli
    distribution is linear in lam through the group convolution, so lam
    solves M lam = target with M built from the XOR-convolution of the
    hardware and base distributions. For single-qubit depolarizing hardware
    and base the closed form lam_i = (4 t_i + PQ - 1) / (4 PQ) applies, with
    P, Q the white-noise weights; targets outside the feasibility window
    [(1-PQ)/4, PQ + (1-PQ)/4] are Infeasible.
    """
    n = hw_pauli.n_qubits
    if base.n_qubits != n or target.n_qubits != n:
        raise ChannelError("Pauli specs act on different qubit counts")
    size = 4**n
    q, p, t = hw_pauli.as_array(), base.as_array(), target.as_array()

    if n == 1 and _is_depolarizing_spec(hw_pauli) and _is_depolarizing_spec(base):
        big_p = (4 * p[0] - 1) / 3
        big_q = (4 * q[0] - 1) / 3
        pq = big_p * big_q
        if abs(pq) < 1e-14:
            # everything maps to the uniform distribution
            resid = float(np.max(np.abs(t - 0.25)))
            if resid <= atol:
                return PauliTailorResult(lam=np.full(4, 0.25), residual=resid, unique=False)
            return Infeasible(residual=resid)
        lam = (4 * t + pq - 1) / (4 * pq)
        if lam.min() < -atol or lam.max() > 1 + atol:
            return Infeasible(residual=float(max(-lam.min(), lam.max() - 1, 0.0)))
        lam = np.clip(lam, 0.0, 1.0)
        lam = lam / lam.sum()
        return PauliTailorResult(lam=lam, residual=0.0, unique=True)

    conv = np.zeros(size)
    for i in range(size):
        for k in range(size):
            conv[pauli_product_index(i, k, n)] += q[i] * p[k]
    m_mat = np.zeros((size, size))
    for row in range(size):
        for j in range(size):
            m_mat[row, j] = conv[pauli_product_index(row, j, n)]

    lam, *_ = np.linalg.lstsq(m_mat, t, rcond=None)
    rank = np.linalg.matrix_rank(m_mat, tol=1e-12)
    unique = rank == size
    in_simplex = lam.min() >= -1e-12 and abs(lam.sum() - 1) <= 1e-9
    if not in_simplex:
        cons = ({"type": "eq", "fun": lambda x: x.sum() - 1.0},)
        res = minimize(lambda x: float(np.sum((m_mat @ x - t) ** 2)),
                       np.full(size, 1.0 / size), method="SLSQP",
                       bounds=[(0.0, 1.0)] * size, constraints=cons,
                       options={"maxiter": 500, "ftol": 1e-16})
        lam = res.x
    lam = np.clip(lam, 0.0, None)
    s = lam.sum()
    if s > 0:
        lam = lam / s
    residual = float(np.max(np.abs(m_mat @ lam - t)))
    if residual > atol:
        return Infeasible(residual=residual)
    return PauliTailorResult(lam=lam, residual=residual, unique=unique)


@dataclass
class ADRepeatResult:
    """Best discrete repeat count for amplitude-damping tailoring."""

    n: int
    fidelity: float
    effective_p: float


def ad_repeat_tailor(hw_p: float, target_p: float, n_max: int,
                     n_min: int = 1) -> ADRepeatResult:
    """Best n in [n_min, n_max] applications of AD(hw_p) approximating AD(target_p).

    n applications compose to AD(1 - (1-hw_p)^n); ties within 1e-12 go to
    the smallest n (less device time).
    """
    if not 0.0 < hw_p < 1.0:
        raise ChannelError("hw_p must lie strictly inside (0, 1)")
    if n_max < n_min or n_min < 1:
        raise ChannelError("need 1 <= n_min <= n_max")
    target = amplitude_damping(target_p)
    best: ADRepeatResult | None = None
    for n in range(n_min, n_max + 1):
        eff = 1.0 - (1.0 - hw_p) ** n
        f = choi_fidelity(amplitude_damping(eff), target)
        if best is None or f > best.fidelity + 1e-12:
            best = ADRepeatResult(n=n, fidelity=f, effective_p=eff)
    return best


def theta_tailor(target: Channel, circuit_builder: Callable[[float], "object"],
                 hw: NoiseModel | None = None,
                 theta_range: tuple[float, float] = (0.0, np.pi),
                 grid: int = 49, xatol: float = 1e-8) -> TailoringRecipe:
    """1-D tailoring of a rotation angle against a noisy circuit.

    The objective is the Choi fidelity of the (noise-decorated) circuit's
    extracted channel to the target; a coarse grid scan locates the basin
    and a bounded scalar minimization refines it.
    """
    from .circuits import extract_channel

    def fidelity_of(theta: float) -> float:
        c = circuit_builder(theta)
        if hw is not None:
            c = apply_noise_model(c, hw)
        return choi_fidelity(extract_channel(c).channel, target)

    lo, hi = theta_range
    thetas = np.linspace(lo, hi, grid)
    values = [fidelity_of(t) for t in thetas]
    i = int(np.argmax(values))
    step = (hi - lo) / (grid - 1)
    b_lo, b_hi = max(lo, thetas[i] - step), min(hi, thetas[i] + step)
    res = minimize_scalar(lambda t: -fidelity_of(t), bounds=(b_lo, b_hi),
                          method="bounded", options={"xatol": xatol})
    best_theta, best_f = (float(res.x), -float(res.fun))
    if values[i] > best_f:
        best_theta, best_f = float(thetas[i]), float(values[i])
    return TailoringRecipe(
        method="tailored-circuit", achieved_fidelity=best_f,
        circuit_params={"theta": best_theta},
        evaluations=grid + 30,
        details={"grid": grid, "range": theta_range},
    )


@dataclass(frozen=True)
class ParametricCircuit:
    """A circuit family with k free real parameters."""

    n_params: int
    build: Callable[[np.ndarray], "object"]
    default_params: tuple[float, ...] = ()
    name: str = ""


def full_circuit_tailor(target: Channel, template: ParametricCircuit,
                        hw: NoiseModel | None = None,
                        optimizer: OptimizerConfig | None = None,
                        seeds: Sequence[np.ndarray] = ()) -> TailoringRecipe:
    """Method 2 with full circuit flexibility: optimize all template parameters.

    Seeding with a restricted-parameterization optimum guarantees the
    result is at least as good as any restricted tailoring on the same
    template.
    """
    from .circuits import extract_channel

    optimizer = optimizer or OptimizerConfig(restarts=4, max_evals_per_restart=400)

    def objective(params: np.ndarray) -> float:
        c = template.build(np.asarray(params, dtype=float))
        if hw is not None:
            c = apply_noise_model(c, hw)
        try:
            return choi_fidelity(extract_channel(c).channel, target)
        except ChannelError:
            return 0.0

    all_seeds = list(seeds)
    if template.default_params:
        all_seeds.insert(0, np.asarray(template.default_params, dtype=float))
    best_x, best_f, evals, converged = _maximize(objective, template.n_params,
                                                 optimizer, seeds=all_seeds)
    return TailoringRecipe(
        method="tailored-circuit", achieved_fidelity=best_f,
        circuit_params={"params": np.asarray(best_x)},
        converged=converged, evaluations=evals,
        details={"template": template.name},
    )


# -- Method 3: variational black box ---------------------------------------------


def blackbox_optimize(oracle: Callable[[np.ndarray], float], dim: int,
                      budget: int = 2000, optimizer: str = "nelder-mead",
                      seed: int = 0, x0: np.ndarray | None = None,
                      init_scale: float = 1.0) -> TailoringRecipe:
    """Method 3: maximize a parameters-to-fidelity oracle within a budget.

    The oracle is the only interface to the simulation; no noise knowledge
    is used. Restarts are drawn from the seeded generator until the
    evaluation budget runs out; the best point found is returned with a
    flag when the budget was exhausted before convergence.
    """
    rng = np.random.default_rng(seed)
    counter = {"n": 0}
    budget_hit = {"flag": False}

    def neg(x):
        counter["n"] += 1
        if counter["n"] >= budget:
            budget_hit["flag"] = True
        return -float(oracle(np.asarray(x, dtype=float)))

    best_x, best_f = None, -np.inf
    converged = False
    while counter["n"] < budget:
        start = (np.asarray(x0, dtype=float) if (x0 is not None and best_x is None)
                 else init_scale * rng.standard_normal(dim))
        remaining = budget - counter["n"]
        if optimizer == "nelder-mead":
            res = minimize(neg, start, method="Nelder-Mead",
                           options={"maxfev": remaining, "xatol": 1e-9, "fatol": 1e-13})
            x, f, ok = res.x, -res.fun, bool(res.success)
        elif optimizer == "coordinate-descent":
            cfg = OptimizerConfig(max_evals_per_restart=remaining, xatol=1e-9)
            x, f, ok = _coordinate_descent(neg, start, cfg)
        else:
            raise ChannelError(f"unknown optimizer {optimizer!r}")
        if f > best_f:
            best_x, best_f, converged = x, f, ok
    return TailoringRecipe(
        method="black-box", achieved_fidelity=best_f,
        circuit_params={"params": np.asarray(best_x)},
        converged=converged and not budget_hit["flag"],
        evaluations=counter["n"],
        details={"optimizer": optimizer, "budget": budget,
                 "budget_exhausted": budget_hit["flag"]},
    )


def optimize_block_pair_mixture(target: Channel, input_impl: Channel,
                                blocks: Sequence[Channel],
                                decorator: Channel | None = None,
                                iterations: int = 120):
    """Best correlated (post, pre) mixture over a fixed block dictionary.

    Maximizes F(sum_ij p_ij post_i . input . pre_j, target) over the joint
    distribution only, with index 0 meaning skip; the blocks (optionally
    decorated by hardware noise) are held fixed, so all pair-product Choi
    states can be precomputed. Fidelity is concave in the distribution, so
    Frank-Wolfe over the simplex converges to the global optimum. Returns
    (posts, pres, probs, fidelity) ready to use as a building-block
    candidate.
    """
    d = target.dim_in
    blocks = list(blocks)
    decorated = [compose(decorator, b) if decorator is not None else b for b in blocks]
    sups = [None] + [b.superop() for b in decorated]
    s_in = input_impl.superop()
    n = len(sups)
    pair_chois = np.empty((n, n), dtype=object)
    for i, sp in enumerate(sups):
        left = sp @ s_in if sp is not None else s_in
        for j, sq in enumerate(sups):
            s = left @ sq if sq is not None else left
            pair_chois[i, j] = reshuffle(s, d, d) / d
    target_choi = target.choi

    def fidelity_of(probs: np.ndarray) -> float:
        choi = np.zeros_like(target_choi)
        for i in range(n):
            for j in range(n):
                if probs[i, j] > 0.0:
                    choi += probs[i, j] * pair_chois[i, j]
        try:
            return uhlmann_fidelity(choi, target_choi)
        except ValueError:
            return 0.0

    # start from the best vertex (includes the direct corner at (0, 0))
    vertex_f = np.array([[fidelity_of(_vertex(n, i, j)) for j in range(n)] for i in range(n)])
    i0, j0 = np.unravel_index(np.argmax(vertex_f), vertex_f.shape)
    probs = _vertex(n, i0, j0)
    f = vertex_f[i0, j0]
    eps = 1e-6
    for _ in range(iterations):
        # directional derivatives toward every vertex
        gains = np.full((n, n), -np.inf)
        for i in range(n):
            for j in range(n):
                step = probs + eps * (_vertex(n, i, j) - probs)
                gains[i, j] = fidelity_of(step) - f
        vi, vj = np.unravel_index(np.argmax(gains), gains.shape)
        if gains[vi, vj] <= 1e-14:
            break
        direction = _vertex(n, vi, vj) - probs
        res = minimize_scalar(lambda t: -fidelity_of(probs + t * direction),
                              bounds=(0.0, 1.0), method="bounded",
                              options={"xatol": 1e-10})
        t_best, f_best = float(res.x), -float(res.fun)
        if f_best <= f + 1e-14:
            break
        probs = probs + t_best * direction
        f = f_best
    return blocks, blocks, probs, f


def _vertex(n: int, i: int, j: int) -> np.ndarray:
    v = np.zeros((n, n))
    v[i, j] = 1.0
    return v


def standard_block_dictionary() -> list[Channel]:
    """Pauli conjugations plus the inverse 90-degree rotations: a compact
    dictionary covering twirling and rotation-recovery corrections."""
    ops = list(pauli_operators(1))
    for sigma in pauli_operators(1)[1:]:
        ops.append((np.eye(2) - 1j * sigma) / np.sqrt(2))
    return [Channel.from_unitary(u) for u in ops]


def pauli_mixture_channel(probs: np.ndarray, hw: Channel | None = None) -> Channel:
    """Channel sum_i probs_i P_i . P_i, each Pauli optionally noise-decorated."""
    probs = np.asarray(probs, dtype=float)
    n = int(round(np.log2(probs.size) / 2))
    chans = []
    for op in pauli_operators(n):
        c = Channel.from_unitary(op)
        chans.append(compose(hw, c) if hw is not None else c)
    return mix(chans, probs / probs.sum())


# -- tailoring jobs ---------------------------------------------------------------


def recipe_to_dict(rec: TailoringRecipe) -> dict:
    """Serialized recipe: achieved fidelity plus the full correction payload."""
    from .channels import channel_to_dict

    out = {
        "method": rec.method,
        "achieved_fidelity": rec.achieved_fidelity,
        "converged": rec.converged,
        "evaluations": rec.evaluations,
        "details": {k: (v if not isinstance(v, np.ndarray) else v.tolist())
                    for k, v in rec.details.items()},
    }
    if rec.mixture is not None:
        out["mixture"] = np.asarray(rec.mixture).tolist()
    if rec.pre_channels:
        out["pre_channels"] = [channel_to_dict(c) for c in rec.pre_channels]
    if rec.post_channels:
        out["post_channels"] = [channel_to_dict(c) for c in rec.post_channels]
    if rec.circuit_params is not None:
        out["circuit_params"] = {
            k: (v.tolist() if isinstance(v, np.ndarray) else float(v))
            for k, v in rec.circuit_params.items()
        }
    return out


def _channel_from_spec(spec: dict) -> Channel:
    from .channels import channel_from_dict
    from .noise import channel_by_name

    if "choi_re" in spec:
        return channel_from_dict(spec)
    params = {k: v for k, v in spec.items() if k != "name"}
    return channel_by_name(spec["name"], **params)


def run_tailoring_job(config: dict) -> dict:
    """Execute a tailoring job described by a config dictionary.

    Fields: ``method`` (building-block | theta | ad-repeat | pauli |
    black-box-theta), ``target`` (named or serialized channel),
    ``hardware`` (noise-model config, optional), method-specific settings,
    ``budgets`` ({restarts, max_evals}), and ``seed``. The returned dict
    carries the serialized recipe plus the full config as provenance.
    """
    from .noise import noise_model_from_config

    method = config.get("method")
    seed = int(config.get("seed", 0))
    budgets = config.get("budgets", {})
    opt = OptimizerConfig(restarts=int(budgets.get("restarts", 3)),
                          max_evals_per_restart=int(budgets.get("max_evals", 1200)),
                          seed=seed)
    hw = noise_model_from_config(config["hardware"]) if "hardware" in config else None

    if method == "building-block":
        target = _channel_from_spec(config["target"])
        if "input" in config:
            input_impl = _channel_from_spec(config["input"])
        else:
            deco = _block_decorator(hw, target.dim_in) if hw is not None else None
            input_impl = compose(deco, target) if deco is not None else target
        cfg = BuildingBlockConfig(
            placement=config.get("placement", "interleaved"),
            mixture_size=int(config.get("mixture_size", 2)),
            ancilla_dim=config.get("ancilla_dim"),
            noisy_blocks=bool(config.get("noisy_blocks", True)),
            optimizer=opt,
        )
        rec = building_block_optimize(target, input_impl, hw, cfg)
    elif method == "theta":
        from .circuits import build_ad_circuit

        target = _channel_from_spec(config["target"])
        rec = theta_tailor(target, lambda th: build_ad_circuit(th), hw)
    elif method == "black-box-theta":
        from .circuits import build_ad_circuit, extract_channel
        from .noise import apply_noise_model

        target = _channel_from_spec(config["target"])

        def oracle(params):
            c = build_ad_circuit(float(params[0]))
            if hw is not None:
                c = apply_noise_model(c, hw)
            return choi_fidelity(extract_channel(c).channel, target)

        x0 = np.array([float(config.get("theta0", np.pi / 2))])
        rec = blackbox_optimize(oracle, 1, budget=int(budgets.get("max_evals", 300)),
                                optimizer=config.get("optimizer", "nelder-mead"),
                                seed=seed, x0=x0)
    elif method == "ad-repeat":
        res = ad_repeat_tailor(float(config["hw_p"]), float(config["target_p"]),
                               int(config.get("n_max", 20)),
                               n_min=int(config.get("n_min", 1)))
        return {"method": "ad-repeat", "n": res.n, "achieved_fidelity": res.fidelity,
                "effective_p": res.effective_p, "settings": config}
    elif method == "pauli":
        from .noise import PauliDiagonalSpec

        res = pauli_tailor(PauliDiagonalSpec(tuple(config["hw"])),
                           PauliDiagonalSpec(tuple(config["base"])),
                           PauliDiagonalSpec(tuple(config["target"])))
        if isinstance(res, Infeasible):
            return {"method": "pauli", "feasible": False,
                    "residual": res.residual, "settings": config}
        return {"method": "pauli", "feasible": True, "lambda": res.lam.tolist(),
                "residual": res.residual, "unique": res.unique, "settings": config}
    else:
        raise ChannelError(f"unknown tailoring method {method!r}")
    payload = recipe_to_dict(rec)
    payload["settings"] = config
    return payload
