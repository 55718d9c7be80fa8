"""Shared builders for the test suite."""

from bnfstab.polyalg import GradedSeries, Polynomial


def mono(n, j, k, c=1.0):
    return Polynomial.monomial(n, j, k, c)


def one_dof_series(perturbation, omega=1.0, d_max=8):
    """omega (x^2+y^2)/2 plus {(jx, ky): coeff} perturbation terms."""
    h = mono(1, (2,), (0,), omega / 2.0) + mono(1, (0,), (2,), omega / 2.0)
    for (jx, ky), c in perturbation.items():
        h = h + mono(1, (jx,), (ky,), c)
    return GradedSeries.from_polynomial(h, d_max=d_max)


TWO_DOF_OMEGA = (1.0, 2.0 ** 0.5)


def two_dof_even_series(d_max=20):
    """Even 2-DOF Hamiltonian with quartic and sextic couplings; strong
    enough that the optimal order walks through several values on a
    [0.25, 1] radius sweep."""
    w = TWO_DOF_OMEGA
    h = (mono(2, (2, 0), (0, 0), w[0] / 2) + mono(2, (0, 0), (2, 0), w[0] / 2)
         + mono(2, (0, 2), (0, 0), w[1] / 2) + mono(2, (0, 0), (0, 2), w[1] / 2)
         + mono(2, (4, 0), (0, 0), 0.25) + mono(2, (2, 2), (0, 0), 0.5)
         + mono(2, (0, 4), (0, 0), 0.25) + mono(2, (0, 0), (2, 2), 0.25)
         + mono(2, (1, 1), (1, 1), 0.25)
         + mono(2, (2, 4), (0, 0), 0.125) + mono(2, (2, 0), (0, 4), 0.125)
         + mono(2, (0, 2), (4, 0), 0.0625))
    return GradedSeries.from_polynomial(h, d_max=d_max)


def random_polynomial(rng, n, degree, num_terms=6, field="real",
                      scale=1.0, even_only=False):
    """Random homogeneous polynomial of the given total degree."""
    raw = {}
    for _ in range(20 * num_terms):
        if len(raw) >= num_terms:
            break
        cuts = rng.integers(0, degree + 1, size=2 * n - 1)
        cuts = sorted(cuts.tolist()) + [degree]
        exps = [cuts[0]] + [cuts[i + 1] - cuts[i] for i in range(2 * n - 1)]
        j, k = tuple(exps[:n]), tuple(exps[n:])
        if even_only and (sum(j) + sum(k)) % 2:
            continue
        c = scale * (rng.uniform(-1.0, 1.0))
        if field == "complex":
            c = c + 1j * scale * rng.uniform(-1.0, 1.0)
        raw[(j, k)] = c
    p = Polynomial.zero(n, field=field)
    for (j, k), c in raw.items():
        p = p + Polynomial.monomial(n, j, k, c, field=field)
    return p


def random_series(rng, n, omega, d_max, amplitude=0.3):
    """Random perturbed oscillator: diagonal H2 plus random homogeneous
    blocks of every degree from 3 through d_max."""
    h = Polynomial.zero(n)
    for l in range(n):
        j = tuple(2 if i == l else 0 for i in range(n))
        z = (0,) * n
        h = h + mono(n, j, z, omega[l] / 2.0) + mono(n, z, j, omega[l] / 2.0)
    for d in range(3, d_max + 1):
        h = h + random_polynomial(rng, n, d, num_terms=4,
                                  scale=amplitude ** (d - 2))
    return GradedSeries.from_polynomial(h, d_max=d_max)
