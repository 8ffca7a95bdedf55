"""Dense linear algebra over truncated composite Fock spaces.

Everything is expressed in natural units (hbar = 1). States and operators are
immutable; every operation returns a new value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

HBAR = 1.0

#: largest composite dimension a single state may occupy
MAX_STATE_ENTRIES = 2**16

#: occupancies 0, 1, 2 for the cavity fields
FIELD_DIM = 3

FIELD_1 = "field-1"
ION_VIBRATION = "ion-vibration"
ION_ELECTRONIC = "ion-electronic"
FIELD_2 = "field-2"
MIRROR = "mirror"

NORM_RTOL = 1e-12
NORMALIZED_TOL = 1e-10


class InvalidDimensionError(ValueError):
    pass


class LayoutError(ValueError):
    """Raised for unknown or overlapping modes."""


class NumericalError(ArithmeticError):
    """Base class for failures that are numerical rather than user input."""


class TruncationError(NumericalError):
    pass


class NumericalOverflowError(NumericalError):
    pass


@dataclass(frozen=True)
class ModeLayout:
    """Ordered per-mode truncation dimensions with a label per mode."""

    dims: tuple
    labels: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(str(lab) for lab in self.labels)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        if len(dims) != len(labels):
            raise LayoutError("dims and labels differ in length")
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate mode labels in {labels}")
        for d, lab in zip(dims, labels):
            if d < 2:
                raise InvalidDimensionError(f"mode {lab!r} has dimension {d} < 2")
            if lab == ION_ELECTRONIC and d != 2:
                raise InvalidDimensionError("electronic mode must have dimension 2")
        if self.total > MAX_STATE_ENTRIES:
            raise InvalidDimensionError(
                f"composite dimension {self.total} exceeds cap {MAX_STATE_ENTRIES}"
            )

    @classmethod
    def single(cls, dim: int, label: str = "mode") -> "ModeLayout":
        return cls((dim,), (label,))

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self):
        return len(self.dims)

    def index(self, mode: Union[int, str]) -> int:
        if isinstance(mode, (int, np.integer)):
            if not 0 <= mode < len(self.dims):
                raise LayoutError(f"mode index {mode} out of range")
            return int(mode)
        try:
            return self.labels.index(mode)
        except ValueError:
            raise LayoutError(f"unknown mode {mode!r}; layout has {self.labels}") from None

    def dim(self, mode: Union[int, str]) -> int:
        return self.dims[self.index(mode)]

    def concat(self, other: "ModeLayout") -> "ModeLayout":
        overlap = set(self.labels) & set(other.labels)
        if overlap:
            raise LayoutError(f"layouts share modes {sorted(overlap)}")
        return ModeLayout(self.dims + other.dims, self.labels + other.labels)

    def without(self, modes: Iterable[Union[int, str]]) -> "ModeLayout":
        drop = {self.index(m) for m in modes}
        keep = [i for i in range(len(self.dims)) if i not in drop]
        return ModeLayout(
            tuple(self.dims[i] for i in keep), tuple(self.labels[i] for i in keep)
        )

    def replace_dim(self, mode: Union[int, str], dim: int) -> "ModeLayout":
        i = self.index(mode)
        dims = list(self.dims)
        dims[i] = dim
        return ModeLayout(tuple(dims), self.labels)

    def basis_index(self, occupations: Sequence[int]) -> int:
        if len(occupations) != len(self.dims):
            raise LayoutError("occupation tuple does not match layout")
        for n, d in zip(occupations, self.dims):
            if not 0 <= n < d:
                raise InvalidDimensionError(f"occupation {n} outside truncation {d}")
        return int(np.ravel_multi_index(tuple(occupations), self.dims))


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a layout.

    ``stored_norm`` is the squared norm of the amplitudes as stored; conditional
    evolution leaves states unnormalized on purpose.
    """

    layout: ModeLayout
    amplitudes: np.ndarray = field(repr=False)
    stored_norm: float = field(default=None)

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.layout.total,):
            raise LayoutError(
                f"amplitude length {amps.size} does not match layout total {self.layout.total}"
            )
        if not np.all(np.isfinite(amps)):
            raise NumericalOverflowError("state has non-finite amplitudes")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "stored_norm", float(np.vdot(amps, amps).real))

    @classmethod
    def basis(cls, layout: ModeLayout, occupations: Sequence[int]) -> "StateVector":
        amps = np.zeros(layout.total, dtype=complex)
        amps[layout.basis_index(occupations)] = 1.0
        return cls(layout, amps)

    @property
    def is_normalized(self) -> bool:
        return abs(self.stored_norm - 1.0) <= NORMALIZED_TOL

    def normalized(self) -> "StateVector":
        if self.stored_norm <= 0.0:
            raise ValueError("cannot normalize a zero state")
        return StateVector(self.layout, self.amplitudes / math.sqrt(self.stored_norm))

    def scaled(self, factor: complex) -> "StateVector":
        return StateVector(self.layout, self.amplitudes * factor)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def amplitude(self, occupations: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.layout.basis_index(occupations)])

    def apply(self, op: "Operator") -> "StateVector":
        if op.layout.dims != self.layout.dims:
            raise LayoutError("operator and state layouts differ")
        return StateVector(self.layout, op.matrix @ self.amplitudes)

    def apply_local(self, matrix: np.ndarray, modes: Sequence[Union[int, str]]) -> "StateVector":
        """Apply ``matrix`` acting on ``modes`` only, without forming the full operator."""
        axes = [self.layout.index(m) for m in modes]
        local_dims = [self.layout.dims[a] for a in axes]
        k = math.prod(local_dims)
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (k, k):
            raise LayoutError(f"local matrix shape {matrix.shape} does not match modes {local_dims}")
        psi = np.moveaxis(self.tensor_view(), axes, range(len(axes)))
        rest = psi.shape[len(axes):]
        out = (matrix @ psi.reshape(k, -1)).reshape(tuple(local_dims) + rest)
        out = np.moveaxis(out, range(len(axes)), axes)
        return StateVector(self.layout, out.reshape(-1))

    def project(self, mode: Union[int, str], occupation: int) -> "StateVector":
        """Contract ``mode`` with ``<occupation|``; the mode is removed from the layout."""
        i = self.layout.index(mode)
        sub = np.take(self.tensor_view(), occupation, axis=i)
        return StateVector(self.layout.without([i]), sub.reshape(-1))

    def vdot(self, other: "StateVector") -> complex:
        if other.layout.dims != self.layout.dims:
            raise LayoutError("layouts differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


class Hermiticity:
    HERMITIAN = "hermitian"
    NON_HERMITIAN = "anti-hermitian-part-present"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class Operator:
    layout: ModeLayout
    matrix: np.ndarray = field(repr=False)
    hermiticity: str = Hermiticity.UNKNOWN

    def __post_init__(self):
        m = _frozen(self.matrix)
        n = self.layout.total
        if m.shape != (n, n):
            raise LayoutError(f"matrix shape {m.shape} does not match layout total {n}")
        object.__setattr__(self, "matrix", m)
        if self.hermiticity == Hermiticity.HERMITIAN and not is_hermitian(m):
            raise ValueError("operator flagged hermitian but is not")

    @classmethod
    def identity(cls, layout: ModeLayout) -> "Operator":
        return cls(layout, np.eye(layout.total), Hermiticity.HERMITIAN)

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T, self.hermiticity)

    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.matrix + self.matrix.conj().T)

    def antihermitian_part(self) -> np.ndarray:
        return 0.5 * (self.matrix - self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if other.layout.dims != self.layout.dims:
                raise LayoutError("operator layouts differ")
            return Operator(self.layout, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return other.apply(self)
        return NotImplemented


def is_hermitian(matrix: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = np.max(np.abs(matrix)) if matrix.size else 0.0
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= rtol * max(scale, 1e-300))


def ladder(dim: int) -> Operator:
    """Annihilation operator on a single truncated mode; ``.dag()`` gives creation."""
    if dim < 2:
        raise InvalidDimensionError(f"ladder operator needs dim >= 2, got {dim}")
    return Operator(ModeLayout.single(dim), np.diag(np.sqrt(np.arange(1, dim)), 1))


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def embed(local: np.ndarray, layout: ModeLayout, mode: Union[int, str]) -> np.ndarray:
    """Full-space matrix of a single-mode operator."""
    i = layout.index(mode)
    out = np.ones((1, 1), dtype=complex)
    for j, d in enumerate(layout.dims):
        out = np.kron(out, local if j == i else np.eye(d))
    return out


def mirror_dim_for(alpha_max: float) -> int:
    """Smallest truncation that captures a coherent state of magnitude ``alpha_max``."""
    a = abs(alpha_max)
    return int(math.ceil(a * a + 6.0 * a + 10.0))


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    # log-space keeps n! from overflowing for large truncations
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    a = complex(alpha)
    log_mag = -0.5 * abs(a) ** 2 + n * math.log(abs(a)) - 0.5 * log_fact
    return np.exp(log_mag) * np.exp(1j * n * np.angle(a))


def coherent_state(
    alpha: complex, dim: int, label: str = MIRROR, normalize: bool = False, check: bool = True
) -> StateVector:
    if check and dim < mirror_dim_for(abs(alpha)):
        raise TruncationError(
            f"dim {dim} too small for |alpha|={abs(alpha):.4g}; need {mirror_dim_for(abs(alpha))}"
        )
    state = StateVector(ModeLayout.single(dim, label), coherent_amplitudes(alpha, dim))
    return state.normalized() if normalize else state


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """<alpha|beta> for untruncated coherent states."""
    alpha, beta = complex(alpha), complex(beta)
    return complex(np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2 + alpha.conjugate() * beta))


def tensor(a, b):
    """Kronecker composition of two states or two operators."""
    layout = a.layout.concat(b.layout)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(layout, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, Operator) and isinstance(b, Operator):
        flag = (
            Hermiticity.HERMITIAN
            if a.hermiticity == b.hermiticity == Hermiticity.HERMITIAN
            else Hermiticity.UNKNOWN
        )
        return Operator(layout, np.kron(a.matrix, b.matrix), flag)
    raise TypeError("tensor() needs two states or two operators")


def partial_trace(state: StateVector, keep: Union[int, str, Sequence[Union[int, str]]]) -> np.ndarray:
    """Reduced density matrix of ``|state><state|`` over the kept modes.

    Passing every mode returns the 1x1 matrix holding the stored norm.
    """
    if isinstance(keep, (int, str, np.integer)):
        keep = [keep]
    keep_idx = sorted({state.layout.index(m) for m in keep})
    if not keep_idx:
        raise ValueError("partial_trace needs at least one mode to keep")
    n = len(state.layout)
    traced = [i for i in range(n) if i not in keep_idx]
    psi = np.moveaxis(state.tensor_view(), keep_idx, range(len(keep_idx)))
    k = math.prod(state.layout.dims[i] for i in keep_idx)
    mat = psi.reshape(k, -1)
    rho = mat @ mat.conj().T
    if not traced:
        return np.array([[state.stored_norm]], dtype=complex)
    return rho


# Padé [6/6] coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
_PADE_Q = 6
_PADE_COEFFS = [
    math.factorial(2 * _PADE_Q - k) * math.factorial(_PADE_Q)
    / (math.factorial(2 * _PADE_Q) * math.factorial(k) * math.factorial(_PADE_Q - k))
    for k in range(_PADE_Q + 1)
]
_SCALED_NORM_MAX = 0.5


def expm(matrix: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Padé approximant.

    The matrix is scaled by 2**-s so that its infinity norm is at most 0.5,
    where the [6/6] approximant error is below 1e-16.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expm needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise NumericalOverflowError("matrix has non-finite entries")
    norm = np.max(np.sum(np.abs(a), axis=1), initial=0.0)
    s = 0
    if norm > _SCALED_NORM_MAX:
        s = int(math.ceil(math.log2(norm / _SCALED_NORM_MAX)))
    x = a / (2.0**s)
    n = a.shape[0]
    eye = np.eye(n, dtype=complex)
    num = _PADE_COEFFS[0] * eye
    den = _PADE_COEFFS[0] * eye
    power = eye
    for k in range(1, _PADE_Q + 1):
        power = power @ x
        term = _PADE_COEFFS[k] * power
        num = num + term
        den = den + term if k % 2 == 0 else den - term
    result = np.linalg.solve(den, num)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            result = result @ result
    if not np.all(np.isfinite(result)):
        raise NumericalOverflowError("matrix exponential overflowed")
    return result


def expm_apply(generator: Operator, t: float, state: StateVector) -> StateVector:
    """exp(-i * generator * t / hbar) applied to ``state``.

    The generator may carry an anti-Hermitian part, in which case the returned
    norm shrinks and ``stored_norm`` records it.
    """
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    if generator.layout.dims != state.layout.dims:
        raise LayoutError("generator and state layouts differ")
    if t == 0:
        return state
    propagator = expm(-1j * generator.matrix * (t / HBAR))
    return StateVector(state.layout, propagator @ state.amplitudes)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 between the normalized versions of ``a`` and ``b``."""
    return abs(a.vdot(b)) ** 2 / (a.stored_norm * b.stored_norm)
