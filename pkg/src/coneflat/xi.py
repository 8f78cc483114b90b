"""Constant tensors in Hom(L^2 V, V), the contraction map, and Xi spaces.

Xi_V is the n-dimensional image of the contraction iota(eta)(u, v) =
eta(u) v - eta(v) u.  Xi_Z is cut out by the linear conditions
"grad f(u) . sigma(u, v) = 0 whenever u lies on the cone of Z and v is
tangent there"; it is computed as the kernel of a sampled constraint
matrix, exactly over one or more prime fields or numerically over the
complex numbers.

Tensor coordinates are flattened in the fixed order (k, i < j); every
matrix in this module uses that layout.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from coneflat import _modp
from coneflat.funcfield import BadPrimeError, MultiPoly, RatFunc
from coneflat.coframe import Coframe

DEFAULT_PRIMES = (2147483647, 2147483629)


class XiError(ValueError):
    """Inconsistent fields or malformed tensor data."""


class VarietySamplingError(RuntimeError):
    """Could not find enough smooth cone points."""


def pair_list(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def coordinate_triples(n: int) -> list[tuple[int, int, int]]:
    """Flattening order of Hom(L^2 V, V): k outer, (i < j) inner."""
    pairs = pair_list(n)
    return [(k, i, j) for k in range(n) for (i, j) in pairs]


def coordinate_dim(n: int) -> int:
    return n * (n * (n - 1) // 2)


class HomTensor:
    """Constant antisymmetric tensor c^k_{ij} over a stated field.

    field is "rational" (Fraction entries), a prime p (ints mod p), or
    "float" (complex entries).
    """

    def __init__(self, n: int, components: dict[tuple[int, int, int], object],
                 fieldtag="rational"):
        self.n = n
        self.field = fieldtag
        clean = {}
        for (k, i, j), val in components.items():
            if i >= j:
                raise XiError("tensor components must be stored with i < j")
            if isinstance(fieldtag, int):
                val %= fieldtag
            if _is_zero_scalar(val, fieldtag):
                continue
            clean[(k, i, j)] = val
        self.c = clean

    @staticmethod
    def zero(n: int, fieldtag="rational") -> HomTensor:
        return HomTensor(n, {}, fieldtag)

    @staticmethod
    def from_coordinates(n: int, vec: Sequence, fieldtag="rational") -> HomTensor:
        triples = coordinate_triples(n)
        if len(vec) != len(triples):
            raise XiError("coordinate vector has wrong length")
        return HomTensor(n, dict(zip(triples, vec)), fieldtag)

    def get(self, k: int, i: int, j: int):
        if i == j:
            return self._zero_scalar()
        if i < j:
            return self.c.get((k, i, j), self._zero_scalar())
        val = self.c.get((k, j, i))
        if val is None:
            return self._zero_scalar()
        return (-val) % self.field if isinstance(self.field, int) else -val

    def _zero_scalar(self):
        return 0 if isinstance(self.field, int) else \
            Fraction(0) if self.field == "rational" else 0.0

    def coordinates(self) -> list:
        return [self.c.get(t, self._zero_scalar()) for t in coordinate_triples(self.n)]

    def is_zero(self) -> bool:
        return not self.c

    def apply(self, u: Sequence, v: Sequence) -> list:
        """sigma(u, v) as a vector of field scalars."""
        out = []
        modulus = self.field if isinstance(self.field, int) else None
        for k in range(self.n):
            acc = self._zero_scalar()
            for (kk, i, j), c in self.c.items():
                if kk != k:
                    continue
                wedge = u[i] * v[j] - u[j] * v[i]
                acc = acc + c * wedge
            out.append(acc % modulus if modulus else acc)
        return out

    def reduce_mod(self, p: int) -> HomTensor:
        if self.field != "rational":
            raise XiError("only rational tensors reduce mod a prime")
        out = {}
        for key, val in self.c.items():
            den = val.denominator % p
            if den == 0:
                raise BadPrimeError(f"prime {p} divides a tensor denominator")
            out[key] = val.numerator % p * pow(den, -1, p) % p
        return HomTensor(self.n, out, p)

    def to_float(self) -> HomTensor:
        if isinstance(self.field, int):
            raise XiError("prime-field tensors have no canonical float image")
        return HomTensor(self.n, {k: complex(v) for k, v in self.c.items()}, "float")

    def __add__(self, other: HomTensor) -> HomTensor:
        self._check_compatible(other)
        out = dict(self.c)
        modulus = self.field if isinstance(self.field, int) else None
        for key, val in other.c.items():
            s = out.get(key, self._zero_scalar()) + val
            if modulus:
                s %= modulus
            if _is_zero_scalar(s, self.field):
                out.pop(key, None)
            else:
                out[key] = s
        return HomTensor(self.n, out, self.field)

    def scale(self, t) -> HomTensor:
        modulus = self.field if isinstance(self.field, int) else None
        out = {}
        for key, val in self.c.items():
            s = val * t
            if modulus:
                s %= modulus
            if not _is_zero_scalar(s, self.field):
                out[key] = s
        return HomTensor(self.n, out, self.field)

    def __sub__(self, other: HomTensor) -> HomTensor:
        return self + other.scale(-1)

    def __eq__(self, other):
        if not isinstance(other, HomTensor):
            return NotImplemented
        return (self.n == other.n and self.field == other.field
                and self.c == other.c)

    def _check_compatible(self, other: HomTensor):
        if self.n != other.n or self.field != other.field:
            raise XiError("tensor field or dimension mismatch")

    def norm_squared(self):
        if isinstance(self.field, int):
            raise XiError("no norm over a prime field")
        if self.field == "rational":
            return sum((v * v for v in self.c.values()), Fraction(0))
        return float(sum(abs(v) ** 2 for v in self.c.values()))

    def __repr__(self):
        return f"HomTensor(n={self.n}, field={self.field}, nonzero={len(self.c)})"


def _is_zero_scalar(val, fieldtag) -> bool:
    if isinstance(fieldtag, int):
        return val % fieldtag == 0
    return val == 0


class TensorSubspace:
    """Linear subspace of Hom(L^2 V, V) with a verified-independent basis."""

    def __init__(self, n: int, fieldtag, basis: Sequence[HomTensor],
                 meta: dict | None = None, tol: float = 1e-8):
        self.n = n
        self.field = fieldtag
        self.basis = list(basis)
        self.meta = dict(meta or {})
        self.tol = tol
        for b in self.basis:
            if b.n != n or b.field != fieldtag:
                raise XiError("basis tensor has wrong dimension or field")
        rows = [b.coordinates() for b in self.basis]
        if rows:
            if isinstance(fieldtag, int):
                rank = _modp.rank_mod(rows, fieldtag)
            elif fieldtag == "rational":
                rank = _rank_fractions(rows)
            else:
                rank = int(np.linalg.matrix_rank(np.array(rows, dtype=complex),
                                                 tol=tol))
            if rank != len(rows):
                raise XiError("subspace basis is linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __repr__(self):
        return f"TensorSubspace(n={self.n}, dim={self.dim}, field={self.field})"


def _rank_fractions(rows: Sequence[Sequence[Fraction]]) -> int:
    mat = [[Fraction(v) for v in row] for row in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        lead = mat[rank][col]
        mat[rank] = [v / lead for v in mat[rank]]
        for i in range(len(mat)):
            if i != rank and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


# ---------------------------------------------------------------------------
# the contraction map and Xi_V
# ---------------------------------------------------------------------------

def iota(eta: Sequence) -> HomTensor:
    """Contraction iota(eta): c^k_{ij} = eta_i d^k_j - eta_j d^k_i.

    The closed form is validated against the defining wedge identity by
    check_iota_identity (and by the test suite on random inputs).
    """
    n = len(eta)
    eta = [Fraction(v) for v in eta]
    comps = {}
    for i in range(n):
        for j in range(i + 1, n):
            # k = j picks up eta_i, k = i picks up -eta_j
            if eta[i] != 0:
                comps[(j, i, j)] = eta[i]
            if eta[j] != 0:
                comps[(i, i, j)] = -eta[j]
    return HomTensor(n, comps, "rational")


def xi_V(n: int) -> TensorSubspace:
    """The image of the contraction map; dimension is exactly n."""
    if n < 3:
        raise XiError("Xi_V requires dimension at least 3; "
                      "the closedness criterion fails on surfaces")
    basis = []
    for a in range(n):
        eta = [Fraction(0)] * n
        eta[a] = Fraction(1)
        basis.append(iota(eta))
    return TensorSubspace(n, "rational", basis, meta={"kind": "xi_V"})


@dataclass
class MembershipResult:
    member: bool
    coefficients: list | None
    residual: object
    field: object

    def __bool__(self):
        return self.member


def membership(sigma: HomTensor, space: TensorSubspace,
               tol: float = 1e-8) -> MembershipResult:
    """Decide sigma in span(space) with an exact or numeric residual.

    Rational mode solves the normal equations over the rationals, so the
    residual (squared distance) is exact; prime mode is an exact span
    test with a 0/1 indicator; float mode is least squares with the
    given relative tolerance.
    """
    if sigma.n != space.n:
        raise XiError("tensor dimension mismatch")
    if sigma.field != space.field:
        raise XiError(f"field mismatch: tensor {sigma.field}, space {space.field}")
    coords = sigma.coordinates()
    basis_rows = [b.coordinates() for b in space.basis]

    if isinstance(space.field, int):
        p = space.field
        if not basis_rows:
            member = all(v % p == 0 for v in coords)
            return MembershipResult(member, [] if member else None,
                                    0 if member else 1, p)
        member = _modp.in_row_span_mod(basis_rows, coords, p)
        coeffs = None
        if member:
            transposed = [[row[t] for row in basis_rows] for t in range(len(coords))]
            coeffs = _modp.solve_mod(transposed, coords, p)
        return MembershipResult(member, coeffs, 0 if member else 1, p)

    if space.field == "rational":
        if not basis_rows:
            norm = sum((v * v for v in coords), Fraction(0))
            return MembershipResult(norm == 0, [] if norm == 0 else None, norm,
                                    "rational")
        m = len(basis_rows)
        gram = [[sum((a * b for a, b in zip(basis_rows[r], basis_rows[s])),
                     Fraction(0)) for s in range(m)] for r in range(m)]
        rhs = [sum((a * b for a, b in zip(basis_rows[r], coords)), Fraction(0))
               for r in range(m)]
        coeffs = _solve_fractions(gram, rhs)
        norm = sum((v * v for v in coords), Fraction(0))
        residual_sq = norm - sum((c * r for c, r in zip(coeffs, rhs)), Fraction(0))
        member = residual_sq == 0
        return MembershipResult(member, coeffs if member else None,
                                residual_sq, "rational")

    a = np.array(basis_rows, dtype=complex).T
    b = np.array(coords, dtype=complex)
    if a.size == 0:
        res = float(np.linalg.norm(b))
        scale = max(res, 1.0)
        return MembershipResult(res < tol * scale, [] if res < tol * scale else None,
                                res, "float")
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    res = float(np.linalg.norm(a @ sol - b))
    scale = max(float(np.linalg.norm(b)), 1.0)
    member = res < tol * scale
    return MembershipResult(member, list(sol) if member else None, res, "float")


def _solve_fractions(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(mat)
    rows = [list(mat[i]) + [rhs[i]] for i in range(n)]
    for col in range(n):
        pivot = next((i for i in range(col, n) if rows[i][col] != 0), None)
        if pivot is None:
            raise XiError("singular normal system (dependent basis?)")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [v / lead for v in rows[col]]
        for i in range(n):
            if i != col and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[col])]
    return [rows[i][n] for i in range(n)]


def recover_eta(sigma: HomTensor):
    """Invert the contraction on its image via the trace formula
    eta_j = (1/(1-n)) sum_k c^k_{kj}; returns None off the image."""
    if sigma.field != "rational":
        raise XiError("recover_eta works on rational tensors")
    n = sigma.n
    if n < 3:
        raise XiError("dimension must be at least 3")
    eta = []
    for j in range(n):
        acc = Fraction(0)
        for k in range(n):
            acc += sigma.get(k, k, j)
        eta.append(acc / (1 - n))
    if iota(eta) == sigma:
        return eta
    return None


def check_iota_identity(eta: Sequence[Fraction], cf: Coframe) -> bool:
    """Defining property of the contraction: iota(eta)-sharp (w ^ w)
    equals (eta-sharp w) ^ w, exactly, in chart components."""
    n = cf.n
    tensor = iota(eta)
    eta = [Fraction(v) for v in eta]
    # s = eta-sharp omega as a scalar 1-form in the dx basis
    s = []
    for j in range(n):
        acc = RatFunc.const(n, 0)
        for a in range(n):
            if eta[a] != 0:
                acc = acc + cf.a[a][j] * eta[a]
        s.append(acc)
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                lhs = RatFunc.const(n, 0)
                for a in range(n):
                    for b in range(a + 1, n):
                        c = tensor.get(k, a, b)
                        if c != 0:
                            wedge = cf.a[a][i] * cf.a[b][j] - cf.a[b][i] * cf.a[a][j]
                            lhs = lhs + wedge * c
                rhs = s[i] * cf.a[k][j] - s[j] * cf.a[k][i]
                if lhs != rhs:
                    return False
    return True


# ---------------------------------------------------------------------------
# sampling the cone of a hypersurface
# ---------------------------------------------------------------------------

def _poly_of(z) -> MultiPoly:
    f = getattr(z, "f", z)
    if not isinstance(f, MultiPoly):
        raise XiError("expected a hypersurface or a defining polynomial")
    return f


def _eval_reduced(table: dict, point: Sequence[int], p: int) -> int:
    total = 0
    for exp, coeff in table.items():
        term = coeff
        for v, k in zip(point, exp):
            if k:
                term = term * pow(v, k, p) % p
        total = (total + term) % p
    return total


def sample_variety_points_modp(z, p: int, count: int, seed) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Points u on the cone {f = 0} over GF(p) with their gradients.

    Fixes all but one coordinate at random, solves the resulting
    univariate polynomial by exact root finding, and rejects the zero
    vector and points where the gradient vanishes.  Deterministic for a
    fixed seed: candidate index idx uses generator seed f"{seed}:u{idx}".
    """
    f = _poly_of(z)
    n = f.nvars
    f_mod = f.reduce_mod_prime(p)
    grads = [f.diff(i).reduce_mod_prime(p) for i in range(n)]
    found: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    index = 0
    limit = max(count * 150, 64)
    while len(found) < count and index < limit:
        rng = random.Random(f"{seed}:u{index}")
        index += 1
        free = rng.randrange(n)
        vals = [rng.randrange(p) for _ in range(n)]
        deg = f.degree_in(free)
        coeffs = [0] * (deg + 1)
        for exp, coeff in f_mod.items():
            term = coeff
            for i, e in enumerate(exp):
                if i != free and e:
                    term = term * pow(vals[i], e, p) % p
            coeffs[exp[free]] = (coeffs[exp[free]] + term) % p
        if any(coeffs):
            roots = _modp.poly_roots(coeffs, p, rng)
            if not roots:
                continue
            root = roots[rng.randrange(len(roots))]
        else:
            root = rng.randrange(p)
        u = list(vals)
        u[free] = root
        if not any(u):
            continue
        grad = tuple(_eval_reduced(g, u, p) for g in grads)
        if not any(grad):
            continue
        found.append((tuple(u), grad))
    if len(found) < count:
        raise VarietySamplingError(
            f"found {len(found)} of {count} cone points mod {p} after {limit} tries")
    return found


def sample_variety_points_complex(z, count: int, seed,
                                  polish: bool = True) -> list[tuple[np.ndarray, np.ndarray]]:
    """Complex cone points with gradients, |f(u)| polished below 1e-12.

    The float backend works over the complex numbers: real points of a
    positive form (a Fermat quartic, say) would be only the origin.
    """
    f = _poly_of(z)
    n = f.nvars
    gradients = [f.diff(i) for i in range(n)]
    found = []
    index = 0
    limit = max(count * 120, 64)
    while len(found) < count and index < limit:
        rng = random.Random(f"{seed}:c{index}")
        index += 1
        free = rng.randrange(n)
        vals = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]
        deg = f.degree_in(free)
        coeffs = [0j] * (deg + 1)
        for exp, coeff in f.terms.items():
            term = complex(coeff)
            for i, e in enumerate(exp):
                if i != free and e:
                    term *= vals[i] ** e
            coeffs[exp[free]] += term
        if all(abs(c) < 1e-14 for c in coeffs[1:]):
            continue
        roots = np.roots(coeffs[::-1])
        roots = [r for r in roots if np.isfinite(r)]
        if not roots:
            continue
        t = roots[rng.randrange(len(roots))]
        if polish:
            dcoeffs = [k * c for k, c in enumerate(coeffs)][1:]
            for _ in range(2):
                fval = sum(c * t ** k for k, c in enumerate(coeffs))
                dval = sum(c * t ** k for k, c in enumerate(dcoeffs))
                if abs(dval) < 1e-14:
                    break
                t = t - fval / dval
        u = np.array(vals, dtype=complex)
        u[free] = t
        norm = np.linalg.norm(u)
        if norm < 1e-8:
            continue
        u = u / norm
        if abs(f.evaluate(list(u))) > 1e-10:
            continue
        grad = np.array([g.evaluate(list(u)) for g in gradients], dtype=complex)
        if np.linalg.norm(grad) < 1e-8:
            continue
        found.append((u, grad))
    if len(found) < count:
        raise VarietySamplingError(
            f"found {len(found)} of {count} complex cone points after {limit} tries")
    return found


# ---------------------------------------------------------------------------
# the Xi_Z constraint system
# ---------------------------------------------------------------------------

@dataclass
class ConstraintBatch:
    n: int
    field: object
    rows: list
    provenance: list = field(default_factory=list)

    def matrix(self):
        return self.rows


@dataclass
class XiConfig:
    backend: str = "modp"
    primes: tuple[int, ...] = DEFAULT_PRIMES
    samples: int = 50
    seed: object = 0
    tol: float = 1e-8
    max_doublings: int = 3

    def __post_init__(self):
        for p in self.primes:
            if not _modp.is_probable_prime(p):
                raise XiError(f"{p} is not prime")


def assemble_xiZ_constraints(z, count: int, seed, fieldtag) -> ConstraintBatch:
    """One row per (cone point u, tangent-basis vector v): the functional
    sigma -> grad f(u) . sigma(u, v) in flattened tensor coordinates."""
    f = _poly_of(z)
    n = f.nvars
    triples = coordinate_triples(n)
    rows = []
    provenance = []
    if isinstance(fieldtag, int):
        p = fieldtag
        for u, grad in sample_variety_points_modp(z, p, count, seed):
            for v in _modp.kernel_mod([list(grad)], n, p):
                row = []
                wedge = {}
                for (i, j) in pair_list(n):
                    wedge[(i, j)] = (u[i] * v[j] - u[j] * v[i]) % p
                for (k, i, j) in triples:
                    row.append(grad[k] * wedge[(i, j)] % p)
                rows.append(row)
                provenance.append((u, tuple(v)))
    elif fieldtag == "float":
        for u, grad in sample_variety_points_complex(z, count, seed):
            pivot = int(np.argmax(np.abs(grad)))
            for i in range(n):
                if i == pivot:
                    continue
                v = np.zeros(n, dtype=complex)
                v[i] = 1.0
                v[pivot] = -grad[i] / grad[pivot]
                wedge = {(a, b): u[a] * v[b] - u[b] * v[a] for (a, b) in pair_list(n)}
                rows.append([grad[k] * wedge[(i2, j2)] for (k, i2, j2) in triples])
                provenance.append((tuple(u), tuple(v)))
    else:
        raise XiError("constraint assembly supports prime fields and float")
    return ConstraintBatch(n=n, field=fieldtag, rows=rows, provenance=provenance)


def _kernel_dim_stabilized(z, p: int, config: XiConfig):
    """Kernel basis mod p with sample doubling until the dimension stops
    moving; returns (basis, dim, samples_used, stabilized, all_rows)."""
    n = _poly_of(z).nvars
    count = max(config.samples, coordinate_dim(n))
    rows = []
    prev_dim = None
    used = 0
    stage = 0
    while True:
        batch = assemble_xiZ_constraints(z, count, f"{config.seed}:p{p}:s{stage}", p)
        rows.extend(batch.rows)
        used += count
        basis = _modp.kernel_mod(rows, coordinate_dim(n), p)
        dim = len(basis)
        if prev_dim is not None and dim == prev_dim:
            return basis, dim, used, True, rows
        if stage >= config.max_doublings:
            return basis, dim, used, prev_dim == dim, rows
        prev_dim = dim
        stage += 1
        count = used  # next batch doubles the running total


def xi_Z(z, config: XiConfig | None = None) -> TensorSubspace:
    """The sampled Xi_Z subspace with cross-backend stability checks.

    In prime mode the kernel is computed independently over each
    configured prime; the dimensions must agree and each iota basis
    tensor must be annihilated by every constraint row (containment of
    Xi_V), or the result is flagged unstable in meta.
    """
    config = config or XiConfig()
    f = _poly_of(z)
    n = f.nvars
    meta = {"backend": config.backend, "samples_requested": config.samples,
            "seed": str(config.seed), "dims": {}, "notes": []}
    xiv = xi_V(n)

    if config.backend == "float":
        batch = assemble_xiZ_constraints(z, max(config.samples, coordinate_dim(n)),
                                         config.seed, "float")
        a = np.array(batch.rows, dtype=complex)
        _, svals, vh = np.linalg.svd(a)
        cutoff = config.tol * (svals[0] if len(svals) else 1.0)
        rank = int(np.sum(svals > cutoff))
        kernel = vh[rank:].conj()
        basis = [HomTensor.from_coordinates(n, list(vec), "float") for vec in kernel]
        contains = all(
            float(np.linalg.norm(a @ np.array([complex(c) for c in b.coordinates()])))
            < config.tol * max(float(np.linalg.norm(a)), 1.0)
            for b in xiv.basis)
        meta["dims"]["float"] = len(basis)
        meta["contains_xi_V"] = contains
        meta["stable"] = True
        meta["singular_values"] = [float(s) for s in svals]
        return TensorSubspace(n, "float", basis, meta=meta, tol=config.tol)

    if config.backend != "modp":
        raise XiError(f"unknown backend {config.backend!r}")

    results = {}
    all_stable = True
    contains_all = True
    for p in config.primes:
        basis, dim, used, stabilized, rows = _kernel_dim_stabilized(z, p, config)
        results[p] = (basis, dim, used, rows)
        all_stable = all_stable and stabilized
        if not stabilized:
            meta["notes"].append(f"dimension did not stabilize mod {p}")
        for b in xiv.basis:
            vec = b.reduce_mod(p).coordinates()
            for row in rows:
                if sum(r * v for r, v in zip(row, vec)) % p != 0:
                    contains_all = False
                    meta["notes"].append(f"iota basis tensor violates a row mod {p}")
                    break
        meta["dims"][str(p)] = results[p][1]
        meta.setdefault("samples_used", {})[str(p)] = used
    dims = {results[p][1] for p in config.primes}
    if len(dims) != 1:
        all_stable = False
        meta["notes"].append(f"prime backends disagree on dimension: {meta['dims']}")
    meta["stable"] = all_stable
    meta["contains_xi_V"] = contains_all
    meta["primes"] = list(config.primes)
    p0 = config.primes[0]
    basis = [HomTensor.from_coordinates(n, vec, p0) for vec in results[p0][0]]
    return TensorSubspace(n, p0, basis, meta=meta, tol=config.tol)


def tangent_lines_nondegenerate(z, config: XiConfig | None = None) -> tuple[bool, int]:
    """Rank of the span of the wedges u ^ v over sampled tangent pairs;
    nondegenerate when it fills all of L^2 V (rank C(n,2))."""
    config = config or XiConfig()
    f = _poly_of(z)
    n = f.nvars
    pairs = pair_list(n)
    p = config.primes[0]
    rows = []
    for u, grad in sample_variety_points_modp(z, p, max(config.samples, 2 * len(pairs)),
                                              f"{config.seed}:w"):
        for v in _modp.kernel_mod([list(grad)], n, p):
            rows.append([(u[i] * v[j] - u[j] * v[i]) % p for (i, j) in pairs])
    rank = _modp.rank_mod(rows, p)
    return rank == len(pairs), rank


def span_check(z, config: XiConfig | None = None) -> tuple[bool, int]:
    """Do sampled cone points span V linearly? (Degenerate Z sits in a
    hyperplane and fails.)"""
    config = config or XiConfig()
    f = _poly_of(z)
    n = f.nvars
    p = config.primes[0]
    points = sample_variety_points_modp(z, p, max(config.samples, 2 * n),
                                        f"{config.seed}:span")
    rank = _modp.rank_mod([list(u) for (u, _) in points], p)
    return rank == n, rank
