"""Linear theory around an elliptic equilibrium.

Diagonalizes the quadratic part of a Hamiltonian into sum (omega_l/2)
(x_l^2 + y_l^2) by a real symplectic change of variables, with frequency
signs fixed by the Krein signature of each mode, and certifies the
frequency vector against low-order resonances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import polyalg as poly
from .errors import (
    ConditioningError,
    DimensionMismatchError,
    FormatError,
    GradingError,
    NotEllipticError,
    ResonanceError,
)

__all__ = [
    "LinearSymplecticMap",
    "ResonanceCertificate",
    "diagonalize_quadratic",
    "check_nonresonance",
    "default_tolerance",
]

_SYMPLECTIC_ATOL = 1e-10
_DIAG_RTOL = 1e-10
_ELLIPTIC_RTOL = 1e-9


def _symplectic_form(num_dof):
    n = num_dof
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


class LinearSymplecticMap:
    """A real linear symplectic change of variables old = M @ new.

    The constructor rejects matrices whose symplectic residual
    max |M^T J M - J| exceeds `atol` (relative to the largest entry of
    M^T J M when that is large).
    """

    __slots__ = ("matrix", "num_dof")

    def __init__(self, matrix, atol=_SYMPLECTIC_ATOL):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise DimensionMismatchError(
                f"expected a 2n x 2n matrix, got shape {M.shape}")
        n = M.shape[0] // 2
        J = _symplectic_form(n)
        G = M.T @ J @ M
        residual = np.max(np.abs(G - J))
        scale = max(1.0, np.max(np.abs(G)))
        if residual > atol * scale:
            raise ConditioningError(
                f"matrix is not symplectic: residual {residual:.3e} "
                f"(tolerance {atol * scale:.3e})")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "num_dof", n)

    def __setattr__(self, name, value):
        raise AttributeError("LinearSymplecticMap is immutable")

    def inverse(self):
        # symplectic inverse: M^{-1} = -J M^T J, no matrix solve needed
        J = _symplectic_form(self.num_dof)
        return LinearSymplecticMap(-J @ self.matrix.T @ J)

    def pushforward(self, f):
        """Express f (a polynomial or graded series in the old variables)
        in the new variables: returns f composed with the map."""
        if isinstance(f, poly.GradedSeries):
            parts = {d: self.pushforward(p) for d, p in f}
            return poly.GradedSeries(f.num_dof, parts, f.d_max, field=f.field)
        if f.num_dof != self.num_dof:
            raise DimensionMismatchError(
                f"polynomial has {f.num_dof} degrees of freedom, "
                f"map has {self.num_dof}")
        return poly.linear_substitute(f, self.matrix)

    def new_to_old(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T

    def old_to_new(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.inverse().matrix.T

    def __repr__(self):
        return f"LinearSymplecticMap(num_dof={self.num_dof})"


def _hessian(h2):
    n = h2.num_dof
    S = np.zeros((2 * n, 2 * n))
    for j, k, c in h2.terms():
        exps = list(j) + list(k)
        support = [i for i, e in enumerate(exps) if e]
        if len(support) == 1:
            i = support[0]
            S[i, i] += 2.0 * c
        else:
            i, t = support
            S[i, t] += c
            S[t, i] += c
    return S


def _canonical_phase(w, num_dof):
    # rotate the eigenvector so its largest x-block entry is real positive,
    # making the construction independent of the eig routine's phase choice
    xb = w[:num_dof]
    m = int(np.argmax(np.abs(xb)))
    pivot = xb[m]
    if abs(pivot) == 0.0:
        return w
    return w * (abs(pivot) / pivot)


def diagonalize_quadratic(h2):
    """Bring a quadratic Hamiltonian to sum (omega_l/2)(x_l^2 + y_l^2).

    Parameters
    ----------
    h2 : Polynomial
        Real, homogeneous of degree 2.

    Returns
    -------
    (omega, map) : (tuple of float, LinearSymplecticMap)
        Frequencies ordered by decreasing magnitude, signed by the Krein
        signature of each mode, and the symplectic map with old = M @ new
        realizing the diagonalization.

    Raises NotEllipticError when the linearization has eigenvalues off the
    imaginary axis or a vanishing frequency, and ConditioningError when a
    mode cannot be normalized reliably.
    """
    if h2.field != "real":
        raise ValueError("diagonalize_quadratic expects a real polynomial")
    if h2.is_zero or h2.degrees() != (2,):
        raise GradingError("expected a nonzero homogeneous quadratic")
    n = h2.num_dof
    J = _symplectic_form(n)
    A = J @ _hessian(h2)
    eigvals, eigvecs = np.linalg.eig(A)

    top = float(np.max(np.abs(eigvals)))
    if top == 0.0:
        raise NotEllipticError("linearization is nilpotent")
    off_axis = float(np.max(np.abs(eigvals.real)))
    if off_axis > _ELLIPTIC_RTOL * top:
        raise NotEllipticError(
            f"eigenvalue with real part {off_axis:.3e} "
            f"(largest magnitude {top:.3e}): equilibrium is not elliptic")

    modes = [(float(eigvals[i].imag), i)
             for i in range(len(eigvals)) if eigvals[i].imag > 0.0]
    if len(modes) != n:
        raise NotEllipticError(
            f"found {len(modes)} oscillatory modes, expected {n}")
    nu_top = max(nu for nu, _ in modes)
    if min(nu for nu, _ in modes) < _ELLIPTIC_RTOL * nu_top:
        raise NotEllipticError("a mode frequency vanishes to tolerance")

    # order modes by decreasing frequency magnitude, stable on ties
    modes.sort(key=lambda item: -item[0])

    omega = []
    cols_x = []
    cols_y = []
    for nu, i in modes:
        w = _canonical_phase(eigvecs[:, i], n)
        a = w.real.copy()
        b = w.imag.copy()
        sigma = 2.0 * float(a @ (J @ b))
        scale2 = np.max(a * a + b * b)
        if abs(sigma) < 1e-12 * max(scale2, 1e-300):
            raise ConditioningError(
                f"mode with frequency {nu:.6g} has a degenerate Krein "
                "pairing; eigenvectors are unreliable")
        factor = math.sqrt(2.0 / abs(sigma))
        a *= factor
        b *= factor
        if sigma > 0.0:
            omega.append(nu)
            cols_x.append(a)
            cols_y.append(b)
        else:
            # negative Krein signature: frequency flips sign and the
            # canonical pair comes from swapping the two real vectors
            omega.append(-nu)
            cols_x.append(b)
            cols_y.append(a)

    M = np.column_stack(cols_x + cols_y)
    smap = LinearSymplecticMap(M)

    target = poly.Polynomial(n, {
        key: 0.5 * om
        for l, om in enumerate(omega)
        for key in (
            (tuple(2 if t == l else 0 for t in range(n)), (0,) * n),
            ((0,) * n, tuple(2 if t == l else 0 for t in range(n))),
        )
    })
    pushed = smap.pushforward(h2)
    defect = poly.subtract(pushed, target).max_abs_coeff()
    if defect > _DIAG_RTOL * target.max_abs_coeff():
        raise ConditioningError(
            f"diagonalization residual {defect:.3e} exceeds tolerance; "
            "the quadratic part is too ill conditioned")
    return tuple(omega), smap


# -- nonresonance ------------------------------------------------------------

def default_tolerance(omega):
    return 1e-10 * max(abs(w) for w in omega)


def _half_lattice(num_dof, norm):
    """Integer vectors with |k|_1 == norm whose first nonzero entry is
    positive (one representative per +-k pair), in lexicographic order."""
    span = range(-norm, norm + 1)
    for k in itertools.product(span, repeat=num_dof):
        if sum(abs(e) for e in k) != norm:
            continue
        lead = next((e for e in k if e), 0)
        if lead > 0:
            yield k


@dataclass(frozen=True)
class ResonanceCertificate:
    """Exhaustive small-divisor audit of a frequency vector.

    Records the minimum of |<k, omega>| over all integer vectors with
    0 < |k|_1 <= k_max, the vector attaining it, and fitted constants
    (gamma, tau) such that every shell minimum satisfies
    min_{|k|_1 = K} |<k, omega>| >= gamma * K^(-tau).
    """

    omega: tuple
    k_max: int
    min_divisor: float
    argmin_k: tuple
    gamma: float
    tau_dioph: float
    tol: float
    certified: bool

    def to_text(self):
        lines = [
            f"NONRESONANCE n={len(self.omega)} kmax={self.k_max}",
            "omega " + " ".join(format(w, '.17g') for w in self.omega),
            f"min_divisor {self.min_divisor:.17g}",
            "argmin_k " + " ".join(str(e) for e in self.argmin_k),
            f"gamma {self.gamma:.17g}",
            f"tau_dioph {self.tau_dioph:.17g}",
            f"tol {self.tol:.17g}",
            f"certified {1 if self.certified else 0}",
            "END",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, path=None):
        fields = {}
        n = k_max = None
        ended = False
        for lineno, rawline in enumerate(text.splitlines(), start=1):
            line = rawline.split("#", 1)[0].strip()
            if not line:
                continue
            if ended:
                raise FormatError("content after END", line=lineno, path=path)
            tokens = line.split()
            if n is None:
                if tokens[0] != "NONRESONANCE":
                    raise FormatError("expected NONRESONANCE header",
                                      line=lineno, path=path)
                try:
                    kv = dict(t.split("=", 1) for t in tokens[1:])
                    n = int(kv["n"])
                    k_max = int(kv["kmax"])
                except (ValueError, KeyError) as exc:
                    raise FormatError(f"bad header: {exc}",
                                      line=lineno, path=path) from None
                continue
            if tokens[0] == "END":
                ended = True
                continue
            key, vals = tokens[0], tokens[1:]
            try:
                if key == "omega":
                    fields[key] = tuple(float(v) for v in vals)
                elif key == "argmin_k":
                    fields[key] = tuple(int(v) for v in vals)
                elif key == "certified":
                    fields[key] = bool(int(vals[0]))
                elif key in ("min_divisor", "gamma", "tau_dioph", "tol"):
                    fields[key] = float(vals[0])
                else:
                    raise FormatError(f"unknown key {key!r}",
                                      line=lineno, path=path)
            except (ValueError, IndexError) as exc:
                raise FormatError(f"bad value for {key!r}: {exc}",
                                  line=lineno, path=path) from None
        if n is None:
            raise FormatError("empty certificate", path=path)
        if not ended:
            raise FormatError("missing END", path=path)
        missing = {"omega", "min_divisor", "argmin_k", "gamma",
                   "tau_dioph", "tol", "certified"} - set(fields)
        if missing:
            raise FormatError(f"missing keys {sorted(missing)}", path=path)
        if len(fields["omega"]) != n or len(fields["argmin_k"]) != n:
            raise FormatError("vector length disagrees with header n",
                              path=path)
        return cls(k_max=k_max, **fields)


def check_nonresonance(omega, k_max, tol=None):
    """Scan all |k|_1 <= k_max for small divisors |<k, omega>|.

    Returns a ResonanceCertificate when the smallest divisor stays at or
    above tol (default 1e-10 max |omega_l|); otherwise raises
    ResonanceError carrying the failed certificate and the worst vector.
    """
    omega = tuple(float(w) for w in omega)
    if not omega:
        raise DimensionMismatchError("empty frequency vector")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if tol is None:
        tol = default_tolerance(omega)

    min_div = math.inf
    argmin = None
    shell_min = {}
    for K in range(1, k_max + 1):
        best = math.inf
        for k in _half_lattice(len(omega), K):
            d = abs(sum(e * w for e, w in zip(k, omega)))
            if d < best:
                best = d
            if d < min_div:
                min_div = d
                argmin = k
        shell_min[K] = best

    # fit m_K >= gamma K^(-tau): anchor gamma just under the K=1 minimum,
    # then take the smallest exponent that clears every deeper shell
    gamma = shell_min[1] * (1.0 - 1e-13)
    tau = 0.0
    for K in range(2, k_max + 1):
        m = shell_min[K]
        if m == 0.0:
            # exact resonance: no finite exponent clears this shell
            tau = math.inf
            break
        if m < gamma:
            tau = max(tau, math.log(gamma / m) / math.log(K))
    certified = min_div >= tol

    cert = ResonanceCertificate(
        omega=omega, k_max=k_max, min_divisor=min_div,
        argmin_k=tuple(argmin), gamma=gamma, tau_dioph=tau,
        tol=tol, certified=certified)
    if not certified:
        raise ResonanceError(
            f"resonance to tolerance: |<k, omega>| = {min_div:.3e} < "
            f"{tol:.3e} at k = {argmin}",
            k=tuple(argmin), divisor=min_div, certificate=cert)
    return cert
