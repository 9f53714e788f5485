"""Completely positive maps: Choi matrices, Kraus sets, Stinespring
dilations, minimal dilations with intertwiners, and the tensor
decomposition with its explicit n-adjoint.

Two Choi layouts coexist and are bridged explicitly:
  * channel Choi (n=1): C = sum_ij E_ij (x) Phi(E_ij), factors (input, output);
  * multilinear Choi: sum over unit tuples of Phi(units) (x) units, factors
    (output, input_1, ..., input_n).
Superoperators act on column-stacked vectorizations throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.linalg as npl

from . import linalg, multilinear as ml
from .errors import (
    DimensionMismatchError,
    InconsistentDilationsError,
    NotCompletelyPositiveError,
)


# ---------------------------------------------------------------------------
# multilinear maps on operator slots


@dataclass(frozen=True)
class OperatorMultiMap:
    """Multilinear map M_{d_1} x ... x M_{d_n} -> M_m, stored as its matrix
    on vectorized slots, shape m^2 x prod(d_i^2)."""

    input_operator_dims: tuple[int, ...]
    output_operator_dim: int
    action_matrix: np.ndarray

    def __post_init__(self):
        a = linalg.as_matrix(self.action_matrix)
        cols = int(np.prod([d * d for d in self.input_operator_dims])) if self.input_operator_dims else 1
        if a.shape != (self.output_operator_dim**2, cols):
            raise DimensionMismatchError(
                f"action matrix shape {a.shape} does not match operator profile"
            )
        object.__setattr__(self, "action_matrix", a)
        object.__setattr__(
            self, "input_operator_dims", tuple(int(d) for d in self.input_operator_dims)
        )

    @property
    def arity(self) -> int:
        return len(self.input_operator_dims)


def multimap_from_function(fn, input_dims, output_dim) -> OperatorMultiMap:
    """Matrix of an operator-valued multilinear map from a callable on
    matrix arguments, by sweeping matrix-unit tuples."""
    input_dims = tuple(int(d) for d in input_dims)
    sq = [d * d for d in input_dims]
    cols = int(np.prod(sq)) if sq else 1
    a = np.zeros((output_dim**2, cols), dtype=complex)
    if not input_dims:
        a[:, 0] = linalg.vec(fn())
        return OperatorMultiMap(input_dims, output_dim, a)
    for flat, multi in enumerate(np.ndindex(*sq)):
        mats = [
            linalg.unvec(linalg.basis_vector(d * d, c), d) for d, c in zip(input_dims, multi)
        ]
        a[:, flat] = linalg.vec(fn(*mats))
    return OperatorMultiMap(input_dims, output_dim, a)


def apply_ops(mm: OperatorMultiMap, mats) -> np.ndarray:
    mats = [linalg.as_matrix(x) for x in mats]
    if len(mats) != mm.arity:
        raise DimensionMismatchError(f"expected {mm.arity} operator inputs, got {len(mats)}")
    for x, d in zip(mats, mm.input_operator_dims):
        if x.shape != (d, d):
            raise DimensionMismatchError(f"input shape {x.shape} does not match slot dim {d}")
    col = linalg.kron_vectors([linalg.vec(x) for x in mats])
    return linalg.unvec(mm.action_matrix @ col, mm.output_operator_dim)


def identity_multimap(d: int) -> OperatorMultiMap:
    return OperatorMultiMap((d,), d, np.eye(d * d, dtype=complex))


def transpose_multimap(d: int) -> OperatorMultiMap:
    return multimap_from_function(lambda x: x.T, (d,), d)


def partial_evaluation(mm: OperatorMultiMap, slot: int, states) -> np.ndarray:
    """Fix every slot except `slot` at the given states; returns the
    resulting superoperator, shape m^2 x d_slot^2."""
    states = list(states)
    if len(states) != mm.arity - 1:
        raise DimensionMismatchError("need one state per remaining slot")
    dims = mm.input_operator_dims
    tensor = mm.action_matrix.reshape((mm.output_operator_dim**2,) + tuple(d * d for d in dims))
    others = [i for i in range(mm.arity) if i != slot]
    for axis_owner, state in zip(others, states):
        d = dims[axis_owner]
        if linalg.as_matrix(state).shape != (d, d):
            raise DimensionMismatchError("state shape does not match its slot")
    # contract from the highest axis down so earlier axis numbers stay valid
    for axis_owner, state in sorted(zip(others, states), key=lambda p: -p[0]):
        tensor = np.tensordot(tensor, linalg.vec(state), axes=([1 + axis_owner], [0]))
        # tensordot drops the contracted axis; owners above it shift down,
        # but we consume in descending order so indices below are untouched
    return tensor.reshape(mm.output_operator_dim**2, dims[slot] ** 2)


# ---------------------------------------------------------------------------
# channels and Choi matrices


@dataclass(frozen=True)
class QuantumChannel:
    in_dim: int
    out_dim: int
    choi: np.ndarray

    def __post_init__(self):
        c = linalg.as_matrix(self.choi)
        side = self.in_dim * self.out_dim
        if c.shape != (side, side):
            raise DimensionMismatchError(f"Choi side {c.shape} does not match dims")
        object.__setattr__(self, "choi", c)


@dataclass(frozen=True)
class KrausSet:
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(linalg.as_matrix(k) for k in self.operators)
        if not ops:
            raise DimensionMismatchError("a Kraus set needs at least one operator")
        if len({k.shape for k in ops}) != 1:
            raise DimensionMismatchError("Kraus operators must share one shape")
        object.__setattr__(self, "operators", ops)

    @property
    def out_dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def in_dim(self) -> int:
        return self.operators[0].shape[1]


def kraus_apply(ks: KrausSet, rho) -> np.ndarray:
    rho = linalg.as_matrix(rho)
    return sum(k @ rho @ linalg.dagger(k) for k in ks.operators)


def kraus_to_superop(ks: KrausSet) -> np.ndarray:
    # vec(K X K^dag) = (conj(K) (x) K) vec(X)
    return sum(linalg.kron(np.conj(k), k) for k in ks.operators)


def superop_to_choi(s: np.ndarray, in_dim: int, out_dim: int) -> np.ndarray:
    d, m = in_dim, out_dim
    return s.reshape(m, m, d, d).transpose(3, 1, 2, 0).reshape(d * m, d * m)


def choi_to_superop(choi: np.ndarray, in_dim: int, out_dim: int) -> np.ndarray:
    d, m = in_dim, out_dim
    return choi.reshape(d, m, d, m).transpose(3, 1, 2, 0).reshape(m * m, d * d)


def choi_of(source) -> QuantumChannel:
    """Channel Choi matrix C = sum_ij E_ij (x) Phi(E_ij) from a 1-slot
    operator map or a Kraus set."""
    if isinstance(source, KrausSet):
        s = kraus_to_superop(source)
        d, m = source.in_dim, source.out_dim
    elif isinstance(source, OperatorMultiMap):
        if source.arity != 1:
            raise DimensionMismatchError("choi_of needs a 1-slot map; see multilinear_choi")
        s = source.action_matrix
        d, m = source.input_operator_dims[0], source.output_operator_dim
    else:
        raise TypeError(f"cannot build a Choi matrix from {type(source).__name__}")
    return QuantumChannel(d, m, superop_to_choi(s, d, m))


def superop_of(ch: QuantumChannel) -> np.ndarray:
    return choi_to_superop(ch.choi, ch.in_dim, ch.out_dim)


def channel_apply(ch: QuantumChannel, rho) -> np.ndarray:
    return linalg.unvec(superop_of(ch) @ linalg.vec(rho), ch.out_dim)


def channel_multimap(ch: QuantumChannel) -> OperatorMultiMap:
    return OperatorMultiMap((ch.in_dim,), ch.out_dim, superop_of(ch))


def multilinear_choi(mm: OperatorMultiMap) -> np.ndarray:
    """sum over unit tuples of Phi(E_k1l1, ..., E_knln) (x) E_k1l1 (x) ...,
    with the output factor first.  For n=1 this is choi_of up to the factor
    swap (output, input) <-> (input, output)."""
    dims = mm.input_operator_dims
    m = mm.output_operator_dim
    side = m * int(np.prod(dims))
    total = np.zeros((side, side), dtype=complex)
    sq = [d * d for d in dims]
    for multi in np.ndindex(*sq) if dims else [()]:
        units = [linalg.unvec(linalg.basis_vector(d * d, c), d) for d, c in zip(dims, multi)]
        total += linalg.kron_all([apply_ops(mm, units)] + units)
    return total


def choi_factor_bridge(in_dim: int, out_dim: int) -> np.ndarray:
    """Permutation P with multilinear_choi = P @ channel-choi @ P.T at n=1."""
    return linalg.factor_permutation((in_dim, out_dim), (1, 0))


def choi_min_eigenvalue(ch: QuantumChannel) -> float:
    herm = (ch.choi + linalg.dagger(ch.choi)) / 2
    return float(npl.eigvalsh(herm)[0])


def is_cp(ch: QuantumChannel, tol: float = 1e-10) -> bool:
    return choi_min_eigenvalue(ch) >= -tol


def is_tp(ch: QuantumChannel, tol: float = 1e-10) -> bool:
    marginal = linalg.partial_trace(ch.choi, (ch.in_dim, ch.out_dim), 1)
    return bool(np.max(np.abs(marginal - np.eye(ch.in_dim))) <= tol)


def _diagonal_state_pool(d: int):
    yield "maximally-mixed", np.eye(d, dtype=complex) / d
    for k in range(d):
        yield f"projector-{k}", linalg.matrix_unit(d, k, k)


def mcp_check(mm: OperatorMultiMap, sample_count: int = 5, seed: int = 0, tol: float = 1e-10) -> dict:
    """Slotwise complete-positivity scan: freeze the other slots at
    deterministic extreme states and Ginibre-random states, then certify
    each partial evaluation through its Choi spectrum.

    Deterministic tuples catch slot-wise sign flips that interior random
    states can average away.
    """
    rng = np.random.default_rng(seed)
    dims = mm.input_operator_dims
    violations = []
    cases = 0
    for slot in range(mm.arity):
        others = [i for i in range(mm.arity) if i != slot]
        pools = [list(_diagonal_state_pool(dims[i])) for i in others]
        tuples = [[]] if not others else None
        if tuples is None:
            tuples = []
            for combo in np.ndindex(*[len(p) for p in pools]):
                tuples.append([pools[i][c] for i, c in enumerate(combo)])
            for t in range(sample_count):
                drawn = []
                for i in others:
                    d = dims[i]
                    w = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                    state = linalg.dagger(w) @ w
                    drawn.append((f"ginibre-{t}", state / np.trace(state)))
                tuples.append(drawn)
        for labelled in tuples:
            states = [s for _, s in labelled]
            s_mat = partial_evaluation(mm, slot, states)
            sub = QuantumChannel(dims[slot], mm.output_operator_dim, superop_to_choi(s_mat, dims[slot], mm.output_operator_dim))
            low = choi_min_eigenvalue(sub)
            cases += 1
            if low < -tol:
                violations.append(
                    {"slot": slot, "states": [name for name, _ in labelled], "min_eigenvalue": low}
                )
    return {"passed": not violations, "cases": cases, "violations": violations}


def kraus_from_choi(ch: QuantumChannel, rank_tol: float = 1e-10) -> KrausSet:
    herm = (ch.choi + linalg.dagger(ch.choi)) / 2
    vals, vecs = npl.eigh(herm)
    cut = rank_tol * max(1.0, float(vals[-1]))
    if vals[0] < -cut:
        raise NotCompletelyPositiveError(
            f"Choi matrix has eigenvalue {vals[0]:.3e}", min_eigenvalue=float(vals[0])
        )
    ops = []
    d, m = ch.in_dim, ch.out_dim
    for lam, w in zip(vals, vecs.T):
        if lam > cut:
            ops.append(np.sqrt(lam) * w.reshape(d, m).T)
    if not ops:
        ops.append(np.zeros((m, d), dtype=complex))
    return KrausSet(tuple(ops))


def kraus_rank(ch: QuantumChannel, rank_tol: float = 1e-10) -> int:
    herm = (ch.choi + linalg.dagger(ch.choi)) / 2
    vals = npl.eigvalsh(herm)
    return int(np.sum(vals > rank_tol * max(1.0, float(vals[-1]))))


# ---------------------------------------------------------------------------
# dilations


@dataclass(frozen=True)
class ChannelDilation:
    """State-picture dilation rho -> Tr_env(V rho V^dag) with V mapping the
    input space into output (x) environment."""

    env_dim: int
    isometry: np.ndarray

    def __post_init__(self):
        v = linalg.as_matrix(self.isometry)
        if v.shape[0] % self.env_dim:
            raise DimensionMismatchError("isometry rows are not a multiple of env_dim")
        object.__setattr__(self, "isometry", v)

    @property
    def in_dim(self) -> int:
        return self.isometry.shape[1]

    @property
    def out_dim(self) -> int:
        return self.isometry.shape[0] // self.env_dim


def stinespring_from_kraus(ks: KrausSet) -> ChannelDilation:
    r = len(ks.operators)
    v = sum(
        linalg.kron(k, linalg.basis_vector(r, a).reshape(r, 1)) for a, k in enumerate(ks.operators)
    )
    return ChannelDilation(r, v)


def channel_from_dilation(cd: ChannelDilation) -> QuantumChannel:
    v = cd.isometry

    def act(rho):
        return linalg.partial_trace(v @ rho @ linalg.dagger(v), (cd.out_dim, cd.env_dim), 1)

    mm = multimap_from_function(act, (cd.in_dim,), cd.out_dim)
    return choi_of(mm)


@dataclass(frozen=True)
class StarRepresentation:
    """Unital *-representation of M_d on a carrier space, tabulated on
    matrix units: images has shape (d, d, carrier, carrier)."""

    algebra_dim: int
    carrier_dim: int
    images: np.ndarray

    def __post_init__(self):
        im = np.asarray(self.images, dtype=complex)
        d, c = self.algebra_dim, self.carrier_dim
        if im.shape != (d, d, c, c):
            raise DimensionMismatchError(f"images shape {im.shape} != {(d, d, c, c)}")
        object.__setattr__(self, "images", im)


def rep_apply(rep: StarRepresentation, a) -> np.ndarray:
    a = linalg.as_matrix(a)
    if a.shape != (rep.algebra_dim,) * 2:
        raise DimensionMismatchError("element does not match the represented algebra")
    return np.einsum("kl,klxy->xy", a, rep.images)


def representation_defects(rep: StarRepresentation) -> dict:
    d = rep.algebra_dim
    im = rep.images
    mult = 0.0
    for k in range(d):
        for l in range(d):
            for p in range(d):
                for q in range(d):
                    target = im[k, q] if l == p else np.zeros_like(im[0, 0])
                    mult = max(mult, float(np.max(np.abs(im[k, l] @ im[p, q] - target))))
    star = max(
        float(np.max(np.abs(linalg.dagger(im[k, l]) - im[l, k]))) for k in range(d) for l in range(d)
    )
    unit = float(np.max(np.abs(sum(im[k, k] for k in range(d)) - np.eye(rep.carrier_dim))))
    return {"multiplicativity": mult, "star": star, "unitality": unit}


def factor_representation(d: int, multiplicity: int, left_dim: int = 1, right_dim: int = 1) -> StarRepresentation:
    """a -> I_left (x) (a (x) I_mult) (x) I_right on the full carrier."""
    carrier = left_dim * d * multiplicity * right_dim
    images = np.zeros((d, d, carrier, carrier), dtype=complex)
    il = np.eye(left_dim, dtype=complex)
    im = np.eye(multiplicity, dtype=complex)
    ir = np.eye(right_dim, dtype=complex)
    for k, l, e in linalg.matrix_units(d):
        images[k, l] = linalg.kron_all([il, e, im, ir])
    return StarRepresentation(d, carrier, images)


@dataclass(frozen=True)
class MultilinearDilation:
    """Phi(a_1, ..., a_n) = V^dag pi_1(a_1) ... pi_n(a_n) V with commuting
    carrier-wide representations; V maps the source space into the carrier.

    factor_dims records the tensor factorization of the carrier when one is
    known; compressed (minimal) dilations carry None.
    """

    reps: tuple[StarRepresentation, ...]
    isometry: np.ndarray
    factor_dims: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        v = linalg.as_matrix(self.isometry)
        reps = tuple(self.reps)
        for rep in reps:
            if rep.carrier_dim != v.shape[0]:
                raise DimensionMismatchError("representation carrier != isometry target")
        if self.factor_dims is not None:
            if int(np.prod(self.factor_dims)) != v.shape[0]:
                raise DimensionMismatchError("factor dims do not multiply to the carrier dim")
            object.__setattr__(self, "factor_dims", tuple(int(x) for x in self.factor_dims))
        object.__setattr__(self, "isometry", v)
        object.__setattr__(self, "reps", reps)

    @property
    def carrier_dim(self) -> int:
        return self.isometry.shape[0]

    @property
    def source_dim(self) -> int:
        return self.isometry.shape[1]

    @property
    def algebra_dims(self) -> tuple[int, ...]:
        return tuple(rep.algebra_dim for rep in self.reps)


def dilation_reconstruct(dil: MultilinearDilation, inputs) -> np.ndarray:
    inputs = list(inputs)
    if len(inputs) != len(dil.reps):
        raise DimensionMismatchError("one input per representation required")
    acc = dil.isometry
    for rep, a in zip(reversed(dil.reps), reversed(inputs)):
        acc = rep_apply(rep, a) @ acc
    return linalg.dagger(dil.isometry) @ acc


def dilation_multimap(dil: MultilinearDilation) -> OperatorMultiMap:
    return multimap_from_function(
        lambda *mats: dilation_reconstruct(dil, mats), dil.algebra_dims, dil.source_dim
    )


def heisenberg_dilation(ks: KrausSet) -> MultilinearDilation:
    """Observable-picture dilation of a -> sum K^dag a K built on the same
    isometry as the state-picture Stinespring construction."""
    r = len(ks.operators)
    v = stinespring_from_kraus(ks).isometry
    rep = factor_representation(ks.out_dim, r)
    return MultilinearDilation((rep,), v, (ks.out_dim * r,))


def pad_dilation(dil: MultilinearDilation, extra_dim: int) -> MultilinearDilation:
    """Attach an unused environment factor of the given dimension."""
    e0 = linalg.basis_vector(extra_dim, 0).reshape(extra_dim, 1)
    v = linalg.kron(dil.isometry, e0)
    reps = []
    for rep in dil.reps:
        d, c = rep.algebra_dim, rep.carrier_dim
        images = np.zeros((d, d, c * extra_dim, c * extra_dim), dtype=complex)
        for k in range(d):
            for l in range(d):
                images[k, l] = linalg.kron(rep.images[k, l], np.eye(extra_dim))
        reps.append(StarRepresentation(d, c * extra_dim, images))
    return MultilinearDilation(tuple(reps), v, None)


def _generator_matrix(dil: MultilinearDilation) -> np.ndarray:
    """Columns (pi_1(E) ... pi_n(E)) V e_s over all matrix-unit tuples and
    source basis vectors, in a fixed sweep order shared across dilations."""
    dims = dil.algebra_dims
    cols = []
    sq = [d * d for d in dims]
    for multi in np.ndindex(*sq) if dims else [()]:
        acc = dil.isometry
        for rep, c in reversed(list(zip(dil.reps, multi))):
            unit = linalg.unvec(linalg.basis_vector(rep.algebra_dim**2, c), rep.algebra_dim)
            acc = rep_apply(rep, unit) @ acc
        for s in range(dil.source_dim):
            cols.append(acc[:, s])
    return np.column_stack(cols)


def minimal_dilation(dil: MultilinearDilation, rank_tol: float = 1e-9) -> MultilinearDilation:
    """Compress onto the span of all (pi_1(E)...pi_n(E)) V e_s.

    The span is invariant under every pi_j(E_kl) because matrix units
    multiply back into matrix units, so compression preserves the star
    structure and the reconstruction identity.
    """
    gens = _generator_matrix(dil)
    basis = linalg.gram_schmidt([gens[:, i] for i in range(gens.shape[1])], rank_tol)
    b = np.column_stack(basis) if basis else np.zeros((dil.carrier_dim, 0), dtype=complex)
    bh = linalg.dagger(b)
    v_min = bh @ dil.isometry
    reps = []
    for rep in dil.reps:
        d = rep.algebra_dim
        images = np.einsum("xc,klcd,dy->klxy", bh, rep.images, b)
        reps.append(StarRepresentation(d, b.shape[1], images))
    return MultilinearDilation(tuple(reps), v_min, None)


def intertwiner(d_min: MultilinearDilation, d_other: MultilinearDilation, tol: float = 1e-8):
    """The unique map U with U (pi_min(a)) V_min h = (pi_other(a)) V_other h
    on the cyclic generators of the minimal carrier.

    Returns (U, report).  U is an isometry on the minimal carrier; it is
    unitary exactly when d_other is minimal too.
    """
    if d_min.algebra_dims != d_other.algebra_dims or d_min.source_dim != d_other.source_dim:
        raise DimensionMismatchError("dilations have different profiles")
    a_map = dilation_multimap(d_min).action_matrix
    b_map = dilation_multimap(d_other).action_matrix
    agreement = float(np.max(np.abs(a_map - b_map)))
    if agreement > tol:
        raise InconsistentDilationsError(
            f"dilations reconstruct different maps (max deviation {agreement:.3e})"
        )
    g_min = _generator_matrix(d_min)
    g_oth = _generator_matrix(d_other)
    u = npl.lstsq(g_min.T, g_oth.T, rcond=None)[0].T
    uh = linalg.dagger(u)
    report = {
        "generator_residual": float(np.max(np.abs(u @ g_min - g_oth))),
        "isometry_defect": linalg.op_norm(uh @ u - np.eye(u.shape[1])),
        "co_isometry_defect": linalg.op_norm(u @ uh - np.eye(u.shape[0])),
        "maps_isometry_residual": float(np.max(np.abs(u @ d_min.isometry - d_other.isometry))),
        "intertwining_residual": max(
            float(np.max(np.abs(u @ rm.images[k, l] - ro.images[k, l] @ u)))
            for rm, ro in zip(d_min.reps, d_other.reps)
            for k in range(rm.algebra_dim)
            for l in range(rm.algebra_dim)
        ),
        "reconstruction_agreement": agreement,
    }
    return u, report


# ---------------------------------------------------------------------------
# tensor decomposition and the n-adjoint


@dataclass(frozen=True)
class KrausTensorDecomposition:
    """Phi(x_1..x_n) = sum_alpha outer(T_alpha(x_1..x_{n-1}), L_alpha(x_n)).

    T_alpha and L_alpha act on vectorized operator slots; T_alpha returns
    the column V^dag (prod_{j<n} pi_j(x_j)) e_alpha and L_alpha the row
    content e_alpha^dag pi_n(x_n) V, both as vectors in the source space.
    """

    t_maps: tuple[ml.MultilinearVectorMap, ...]
    l_maps: tuple[ml.MultilinearVectorMap, ...]
    input_operator_dims: tuple[int, ...]
    output_operator_dim: int


def kraus_tensor_decompose(dil: MultilinearDilation) -> KrausTensorDecomposition:
    dims = dil.algebra_dims
    m = dil.source_dim
    vh = linalg.dagger(dil.isometry)
    lead, last = dims[:-1], dims[-1]
    t_maps, l_maps = [], []
    for alpha in range(dil.carrier_dim):
        e_a = linalg.basis_vector(dil.carrier_dim, alpha)

        def t_fn(*vecs, e_a=e_a):
            acc = e_a
            for rep, v in zip(reversed(dil.reps[:-1]), reversed(vecs)):
                acc = rep_apply(rep, linalg.unvec(v, rep.algebra_dim)) @ acc
            return vh @ acc

        def l_fn(v, e_a=e_a):
            x = linalg.unvec(v, last)
            return np.conj(e_a) @ rep_apply(dil.reps[-1], x) @ dil.isometry

        t_maps.append(ml.from_function(t_fn, tuple(d * d for d in lead), m))
        l_maps.append(ml.from_function(l_fn, (last * last,), m))
    return KrausTensorDecomposition(tuple(t_maps), tuple(l_maps), dims, m)


def decomposition_apply(decomp: KrausTensorDecomposition, mats) -> np.ndarray:
    mats = [linalg.as_matrix(x) for x in mats]
    if len(mats) != len(decomp.input_operator_dims):
        raise DimensionMismatchError("wrong number of inputs for the decomposition")
    lead = [linalg.vec(x) for x in mats[:-1]]
    tail = linalg.vec(mats[-1])
    m = decomp.output_operator_dim
    out = np.zeros((m, m), dtype=complex)
    for t_map, l_map in zip(decomp.t_maps, decomp.l_maps):
        out += np.outer(ml.apply(t_map, lead), ml.apply(l_map, [tail]))
    return out


def n_adjoint(decomp: KrausTensorDecomposition) -> OperatorMultiMap:
    """The adjoint multimap on Hilbert-Schmidt Riesz data.

    Functionals are carried by their HS Riesz matrices (g = tr(G^dag .)).
    The returned map takes (G, F_1, ..., F_{n-1}) to the Riesz matrix of
    g(Phi(F_1, ..., F_{n-1}, .)); as with vector adjoints, the parameter
    slots enter conjugated, so evaluate through n_adjoint_apply.
    """
    dims = decomp.input_operator_dims
    m = decomp.output_operator_dim
    last = dims[-1]

    def fn(g, *fs):
        lead = [linalg.vec(x) for x in fs]
        vals = np.zeros(last * last, dtype=complex)
        gh = linalg.dagger(g)
        for t_map, l_map in zip(decomp.t_maps, decomp.l_maps):
            s = gh @ ml.apply(t_map, lead)
            vals += s @ l_map.matrix
        return np.conj(linalg.unvec(vals, last))

    return multimap_from_function(fn, (m,) + dims[:-1], last)


def n_adjoint_apply(adj: OperatorMultiMap, g_riesz, f_riesz) -> np.ndarray:
    args = [g_riesz] + [np.conj(linalg.as_matrix(f)) for f in f_riesz]
    return apply_ops(adj, args)


def n_adjoint_pairing_residual(
    decomp: KrausTensorDecomposition, adj: OperatorMultiMap, trials: int = 20, seed: int = 0
) -> float:
    """Max deviation in g(Phi(F..., X)) = <X, Y>_HS over random complex data."""
    rng = np.random.default_rng(seed)
    dims = decomp.input_operator_dims
    m = decomp.output_operator_dim
    worst = 0.0

    def rnd(d):
        return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))

    for _ in range(trials):
        g = rnd(m)
        fs = [rnd(d) for d in dims[:-1]]
        x = rnd(dims[-1])
        direct = np.trace(linalg.dagger(g) @ decomposition_apply(decomp, fs + [x]))
        y = n_adjoint_apply(adj, g, fs)
        worst = max(worst, abs(direct - np.trace(linalg.dagger(y) @ x)))
    return worst


def zigzag_check(dil: MultilinearDilation) -> dict:
    """Unit/counit coherence for the dilation isometry: both Z-shaped
    composites reduce to V^dag V = I numerically."""
    v = dil.isometry
    vh = linalg.dagger(v)
    gram_defect = linalg.op_norm(vh @ v - np.eye(dil.source_dim))
    zigzag = linalg.op_norm(vh @ v @ vh - vh)
    return {
        "isometry_defect": gram_defect,
        "zigzag_defect": zigzag,
        "isometric": bool(gram_defect <= 1e-9),
    }


# ---------------------------------------------------------------------------
# finite-dimensional C*-algebras, traces and Hilbert-space bookkeeping


@dataclass(frozen=True)
class FdCStarAlgebra:
    """Multi-matrix algebra M_{n_1} (+) ... (+) M_{n_k}, elements realized
    as block-diagonal matrices on the direct sum."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.block_dims)
        if not dims or any(d <= 0 for d in dims):
            raise DimensionMismatchError("block dims must be positive")
        object.__setattr__(self, "block_dims", dims)

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    @property
    def is_simple(self) -> bool:
        return len(self.block_dims) == 1


def block_diagonal(alg: FdCStarAlgebra, blocks) -> np.ndarray:
    blocks = [linalg.as_matrix(b) for b in blocks]
    if tuple(b.shape[0] for b in blocks) != alg.block_dims or any(
        b.shape[0] != b.shape[1] for b in blocks
    ):
        raise DimensionMismatchError("blocks do not match the algebra profile")
    n = alg.total_dim
    out = np.zeros((n, n), dtype=complex)
    at = 0
    for b in blocks:
        out[at : at + b.shape[0], at : at + b.shape[0]] = b
        at += b.shape[0]
    return out


def algebra_unit(alg: FdCStarAlgebra) -> np.ndarray:
    return np.eye(alg.total_dim, dtype=complex)


def blocks_of(alg: FdCStarAlgebra, element, tol: float = 1e-10):
    a = linalg.as_matrix(element)
    n = alg.total_dim
    if a.shape != (n, n):
        raise DimensionMismatchError(f"element side {a.shape} != algebra dim {n}")
    scale = max(1.0, float(np.max(np.abs(a))))
    blocks = []
    at = 0
    mask = np.ones((n, n), dtype=bool)
    for d in alg.block_dims:
        blocks.append(a[at : at + d, at : at + d])
        mask[at : at + d, at : at + d] = False
        at += d
    if mask.any() and np.max(np.abs(a[mask])) > tol * scale:
        raise DimensionMismatchError("element is not block-diagonal for this algebra")
    return blocks


def normalized_trace(alg: FdCStarAlgebra, element) -> complex:
    """Tr(element) / N on the direct-sum space: the block weights n_i/N
    applied to the block-normalized traces tr_i = Tr_i/n_i, so the unit
    traces to exactly 1 on every block profile."""
    blocks = blocks_of(alg, element)
    value = sum(np.trace(b) for b in blocks) / alg.total_dim
    return complex(value)


def hilb_to_cstar(h_dim: int) -> FdCStarAlgebra:
    if h_dim <= 0:
        raise DimensionMismatchError("Hilbert space dimension must be positive")
    return FdCStarAlgebra((h_dim,))


def cstar_to_hilb(alg: FdCStarAlgebra) -> int:
    if not alg.is_simple:
        raise ValueError(
            "only a simple (single-block) algebra corresponds to one Hilbert space; "
            "process direct sums blockwise"
        )
    return alg.block_dims[0]


# ---------------------------------------------------------------------------
# channel comparison and products


def channel_distance_bound(a: QuantumChannel, b: QuantumChannel) -> float:
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim):
        raise DimensionMismatchError("channels have different shapes")
    return linalg.trace_norm(a.choi - b.choi)


def channel_kron(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    s = linalg.superop_kron(
        [superop_of(a), superop_of(b)], (a.in_dim, b.in_dim), (a.out_dim, b.out_dim)
    )
    d, m = a.in_dim * b.in_dim, a.out_dim * b.out_dim
    return QuantumChannel(d, m, superop_to_choi(s, d, m))


def identity_channel(d: int) -> QuantumChannel:
    return choi_of(identity_multimap(d))


def depolarizing_channel(d: int, p: float) -> QuantumChannel:
    def act(rho):
        return (1 - p) * rho + p * np.trace(rho) * np.eye(d) / d

    return choi_of(multimap_from_function(act, (d,), d))
