"""Classical quadratic sieve: factor base, relations, GF(2) algebra, congruence of squares."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from qsieve.config import SieveConfig, load_config
from qsieve.errors import ErrorCode, QsieveError
from qsieve.numtheory import (
    LegendreValue,
    gcd,
    is_perfect_square,
    is_prime_by_trial_division,
    isqrt_ceil,
    legendre_symbol,
    modular_sqrts,
    perfect_power_root,
    sieve_of_eratosthenes,
)

logger = logging.getLogger(__name__)

# Exponent applied to ln(n)·ln(ln(n)) in the sieve half-width formula.
_HALF_WIDTH_EXPONENT = 3 * math.sqrt(2) / 4
_B_GRID_RATIO = 1.1
_EXPECTED_SURPLUS = 6
_MIN_N = 15


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class SieveError(QsieveError):
    """Base class for sieve pipeline failures."""


class InvalidParams(SieveError):
    code = ErrorCode.INVALID_INPUT


class DegenerateInput(SieveError):
    """n is even, a perfect power, or below the sieve minimum."""

    code = ErrorCode.INVALID_INPUT

    def __init__(self, detail: str, factor: int | None = None) -> None:
        super().__init__(detail)
        self.factor = factor


class InputIsPrime(SieveError):
    code = ErrorCode.INPUT_IS_PRIME


class InsufficientRelations(SieveError):
    code = ErrorCode.INSUFFICIENT_RELATIONS

    def __init__(self, detail: str, found: int) -> None:
        super().__init__(detail)
        self.found = found


class TrivialDependencies(SieveError):
    code = ErrorCode.ALL_DEPENDENCIES_TRIVIAL


class InvalidDependency(SieveError):
    code = ErrorCode.INVALID_DEPENDENCY


class FactorizationFailed(SieveError):
    code = ErrorCode.FACTORIZATION_FAILED

    def __init__(self, detail: str, history: Sequence[str]) -> None:
        super().__init__(detail)
        self.history = tuple(history)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SieveParams:
    """Inputs of one sieve run; validated at construction."""

    n: int
    smoothness_bound: int
    half_width: int
    max_relations: int

    def __post_init__(self) -> None:
        if self.smoothness_bound < 3:
            raise InvalidParams(f"smoothness bound must be >= 3, got {self.smoothness_bound}")
        if self.half_width < 1:
            raise InvalidParams(f"interval half-width must be >= 1, got {self.half_width}")
        if self.n < _MIN_N or self.n % 2 == 0:
            raise InvalidParams(f"n must be odd and >= {_MIN_N}, got {self.n}")
        if is_perfect_square(self.n):
            raise InvalidParams(f"n must not be a perfect square, got {self.n}")
        if self.max_relations < 1:
            raise InvalidParams(f"max_relations must be >= 1, got {self.max_relations}")

    @classmethod
    def for_bounds(
        cls, n: int, smoothness_bound: int, half_width: int, *, safety_margin: int = 5
    ) -> SieveParams:
        """Build params whose relation target is ``|fb(B)| + 1 + safety_margin``."""
        if smoothness_bound < 3:
            raise InvalidParams(f"smoothness bound must be >= 3, got {smoothness_bound}")
        fb = build_factor_base(n, smoothness_bound)
        return cls(n, smoothness_bound, half_width, len(fb.primes) + 1 + safety_margin)


@dataclass(frozen=True, slots=True)
class FactorBase:
    primes: tuple[int, ...]
    n: int

    def __len__(self) -> int:
        return len(self.primes)


@dataclass(frozen=True, slots=True)
class Relation:
    """A sieve hit: ``value = x^2 - n = prod(p_i ** exponents[i])``."""

    x: int
    value: int
    exponents: tuple[int, ...]

    @property
    def parity(self) -> tuple[int, ...]:
        return tuple(e & 1 for e in self.exponents)


@dataclass(frozen=True, eq=False)
class Gf2Matrix:
    """Exponent vectors mod 2, one row per relation."""

    rows: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        r, c = self.rows.shape
        return int(r), int(c)


@dataclass(frozen=True, slots=True)
class FactorResult:
    f1: int
    f2: int
    witness: tuple[int, int] | None
    attempts: int
    method: str = "sieve"
    params: SieveParams | None = None
    relations: int = 0
    history: tuple[str, ...] = field(default=())


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def formula_half_width(n: int) -> float:
    """``exp((ln n · ln ln n) ** (3√2/4))``; ``inf`` once it overflows a double."""
    ln_n = math.log(n)
    try:
        return math.exp((ln_n * math.log(ln_n)) ** _HALF_WIDTH_EXPONENT)
    except OverflowError:
        return math.inf


def _clamped_half_width(n: int, lower: int, upper: int) -> int:
    raw = formula_half_width(n)
    if not math.isfinite(raw) or raw >= upper:
        return upper
    return max(lower, math.ceil(raw))


def _expected_smooth(count: int, log_value: float, bound: float) -> float:
    """``count · u^-u`` with ``u = ln(value) / ln(B)``."""
    u = max(log_value / math.log(bound), 1.0)
    return count * math.exp(-u * math.log(u))


def _estimated_base_size(bound: float) -> float:
    return bound / (2 * math.log(bound))


def choose_smoothness_bound(n: int, half_width: int, config: SieveConfig) -> int:
    """Smallest grid B whose expected smooth count covers ``|fb(B)| + 6``.

    Falls back to the grid B with the best expected/required ratio when no B qualifies.
    """
    a = isqrt_ceil(n)
    b = a + 2 * half_width
    log_value = math.log(b * b - n)
    count = 2 * half_width + 1

    best_bound, best_ratio = config.min_smoothness_bound, -1.0
    bound = float(config.min_smoothness_bound)
    while bound <= config.max_smoothness_bound:
        expected = _expected_smooth(count, log_value, bound)
        required = _estimated_base_size(bound) + _EXPECTED_SURPLUS
        if expected >= required:
            return math.ceil(bound)
        ratio = expected / required
        if ratio > best_ratio:
            best_bound, best_ratio = math.ceil(bound), ratio
        bound *= _B_GRID_RATIO
    logger.debug("No smoothness bound meets the expected count; best ratio %.3f", best_ratio)
    return best_bound


def check_sievable(n: int, config: SieveConfig) -> None:
    """Raise for inputs the sieve cannot split: too small, even, a perfect power, or prime."""
    if n < _MIN_N:
        raise DegenerateInput(f"n={n} is below the sieve minimum of {_MIN_N}")
    if n % 2 == 0:
        raise DegenerateInput(f"n={n} is even", factor=2)
    if is_perfect_square(n):
        raise DegenerateInput(f"n={n} is a perfect square", factor=math.isqrt(n))
    power = perfect_power_root(n)
    if power is not None:
        raise DegenerateInput(f"n={n} is a perfect power", factor=power[0])
    if is_prime_by_trial_division(n, config.trial_division_limit):
        raise InputIsPrime(f"input is prime: {n}")


def default_params(
    n: int, *, config: SieveConfig | None = None, max_half_width: int | None = None
) -> SieveParams:
    """Pick M from the half-width formula (clamped) and B from the smoothness estimate."""
    config = config or load_config()
    check_sievable(n, config)
    upper = max_half_width if max_half_width is not None else config.max_half_width
    half_width = _clamped_half_width(n, min(config.min_half_width, upper), upper)
    bound = choose_smoothness_bound(n, half_width, config)
    params = SieveParams.for_bounds(n, bound, half_width, safety_margin=config.safety_margin)
    logger.info("Default params for n=%d: B=%d, M=%d", n, bound, half_width)
    return params


def escalate(params: SieveParams, attempt: int, config: SieveConfig) -> SieveParams:
    """Double B and recompute M under a cap that doubles with every attempt."""
    bound = params.smoothness_bound * 2
    cap = max(params.half_width, config.min_half_width) * 2
    half_width = _clamped_half_width(params.n, min(config.min_half_width, cap), cap)
    logger.warning(
        "Escalating sieve for n=%d (attempt %d): B %d -> %d, M %d -> %d",
        params.n,
        attempt,
        params.smoothness_bound,
        bound,
        params.half_width,
        half_width,
    )
    return SieveParams.for_bounds(params.n, bound, half_width, safety_margin=config.safety_margin)


# ---------------------------------------------------------------------------
# Factor base and relation collection
# ---------------------------------------------------------------------------


def build_factor_base(n: int, bound: int) -> FactorBase:
    """``[2]`` plus every odd prime ``p <= bound`` with ``(n/p) = 1``."""
    if bound < 3:
        raise InvalidParams(f"smoothness bound must be >= 3, got {bound}")
    odd = [
        p
        for p in sieve_of_eratosthenes(bound)
        if p > 2 and legendre_symbol(n, p) is LegendreValue.RESIDUE
    ]
    return FactorBase(primes=(2, *odd), n=n)


def sieve_interval(params: SieveParams) -> tuple[int, int]:
    """``[ceil(sqrt(n)), ceil(sqrt(n)) + 2M]``."""
    a = isqrt_ceil(params.n)
    return a, a + 2 * params.half_width


def _scan_block(
    n: int, fb: FactorBase, roots: Sequence[tuple[int, ...]], lo: int, hi: int
) -> list[Relation]:
    """Exact smoothness test for every ``x`` in ``[lo, hi)``."""
    hits: list[list[int]] = [[] for _ in range(hi - lo)]
    for index, (p, rs) in enumerate(zip(fb.primes, roots, strict=True)):
        for r in rs:
            for offset in range((r - lo) % p, hi - lo, p):
                hits[offset].append(index)

    found: list[Relation] = []
    for offset, divisors in enumerate(hits):
        x = lo + offset
        value = x * x - n
        residual = value
        exponents = [0] * len(fb.primes)
        for index in divisors:
            p = fb.primes[index]
            while residual % p == 0:
                residual //= p
                exponents[index] += 1
        if residual == 1:
            found.append(Relation(x=x, value=value, exponents=tuple(exponents)))
    return found


def collect_relations(
    params: SieveParams,
    fb: FactorBase,
    *,
    exhaustive: bool = False,
    minimum: int | None = None,
    config: SieveConfig | None = None,
) -> list[Relation]:
    """Sieve ``x^2 - n`` over the interval and keep the fully factored values.

    Stops once ``params.max_relations`` are found unless ``exhaustive``. Relations come
    back in ascending ``x`` regardless of the worker count.

    Raises:
        InsufficientRelations: Fewer than ``minimum`` (default ``|fb| + 1``) found.
    """
    config = config or load_config()
    a, b = sieve_interval(params)
    roots = [modular_sqrts(params.n, p) for p in fb.primes]
    target = None if exhaustive else params.max_relations
    required = len(fb) + 1 if minimum is None else minimum

    blocks = [
        (lo, min(lo + config.block_size, b + 1)) for lo in range(a, b + 1, config.block_size)
    ]
    relations: list[Relation] = []

    def _done() -> bool:
        return target is not None and len(relations) >= target

    if config.workers == 1:
        for lo, hi in blocks:
            relations.extend(_scan_block(params.n, fb, roots, lo, hi))
            if _done():
                break
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for start in range(0, len(blocks), config.workers):
                batch = blocks[start : start + config.workers]
                for chunk in pool.map(lambda blk: _scan_block(params.n, fb, roots, *blk), batch):
                    relations.extend(chunk)
                if _done():
                    break

    if target is not None:
        relations = relations[:target]
    logger.info(
        "Collected %d relations over [%d, %d] with |fb|=%d", len(relations), a, b, len(fb)
    )
    if len(relations) < required:
        raise InsufficientRelations(
            f"insufficient relations: found {len(relations)}, need {required}",
            found=len(relations),
        )
    return relations


# ---------------------------------------------------------------------------
# Linear algebra over GF(2)
# ---------------------------------------------------------------------------


def build_gf2_matrix(relations: Sequence[Relation]) -> Gf2Matrix:
    """Stack exponent vectors mod 2."""
    if not relations:
        raise InsufficientRelations("insufficient relations: none to build a matrix", found=0)
    width = len(relations[0].exponents)
    if any(len(r.exponents) != width for r in relations):
        raise SieveError(
            "inconsistent factor base: ragged exponent vectors", ErrorCode.INCONSISTENT_FACTOR_BASE
        )
    rows = np.array([r.exponents for r in relations], dtype=np.int64).reshape(-1, width)
    bits = (rows & 1).astype(np.uint8)
    bits.flags.writeable = False
    return Gf2Matrix(rows=bits)


def gf2_nullspace(m: Gf2Matrix) -> list[np.ndarray]:
    """Basis of ``{s : s·M = 0 (mod 2)}`` over the relations.

    Gaussian elimination on ``M^T`` with lowest-index pivots; one basis vector per free
    relation, in ascending order.
    """
    num_rows, _ = m.dims
    if num_rows == 0:
        raise InsufficientRelations("insufficient relations: empty matrix", found=0)
    a = m.rows.T.copy()
    pivots: list[int] = []
    r = 0
    for c in range(num_rows):
        if r == a.shape[0]:
            break
        hits = np.flatnonzero(a[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1

    pivot_set = set(pivots)
    basis: list[np.ndarray] = []
    for free in range(num_rows):
        if free in pivot_set:
            continue
        s = np.zeros(num_rows, dtype=np.uint8)
        s[free] = 1
        for row, c in enumerate(pivots):
            s[c] = a[row, free]
        basis.append(s)
    logger.debug("Null space of %dx%d matrix has dimension %d", *m.dims, len(basis))
    return basis


def _dependency_candidates(basis: Sequence[np.ndarray]) -> Iterator[np.ndarray]:
    yield from basis
    for u, v in combinations(basis, 2):
        combined = u ^ v
        if combined.any():
            yield combined


# ---------------------------------------------------------------------------
# Congruence of squares
# ---------------------------------------------------------------------------


def assemble_congruence(
    relations: Sequence[Relation], selection: np.ndarray, n: int, fb: FactorBase
) -> tuple[int, int]:
    """``x = prod(x_i)``, ``y = prod(p ** (e/2))`` over the selected relations, mod n."""
    x = 1
    totals = [0] * len(fb.primes)
    for relation, bit in zip(relations, selection, strict=True):
        if not bit:
            continue
        x = x * relation.x % n
        for i, e in enumerate(relation.exponents):
            totals[i] += e
    if any(t & 1 for t in totals):
        raise InvalidDependency("invalid dependency: odd summed exponent")
    y = 1
    for p, total in zip(fb.primes, totals, strict=True):
        if total:
            y = y * pow(p, total // 2, n) % n
    return x, y


def extract_factors(n: int, congruences: Iterable[tuple[int, int]]) -> FactorResult:
    """First congruence whose ``gcd(x - y, n)`` is nontrivial."""
    attempts = 0
    for x, y in congruences:
        attempts += 1
        f = gcd((x - y) % n, n)
        if 1 < f < n:
            f1, f2 = sorted((f, n // f))
            logger.debug("Dependency %d split n=%d into %d * %d", attempts, n, f1, f2)
            return FactorResult(f1=f1, f2=f2, witness=(x, y), attempts=attempts)
    raise TrivialDependencies(
        f"all dependencies trivial after {attempts} attempts; collect more relations"
    )


def factor_from_relations(
    relations: Sequence[Relation], fb: FactorBase, n: int
) -> FactorResult:
    """Matrix, null space, candidate dependencies, then gcd extraction."""
    basis = gf2_nullspace(build_gf2_matrix(relations))
    if not basis:
        raise InsufficientRelations(
            "insufficient relations: trivial null space", found=len(relations)
        )
    congruences = (
        assemble_congruence(relations, s, n, fb) for s in _dependency_candidates(basis)
    )
    result = extract_factors(n, congruences)
    return replace(result, relations=len(relations))


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def split_degenerate(n: int, config: SieveConfig) -> FactorResult | None:
    """Handle inputs that never reach the sieve; ``None`` means sieve it."""
    if n < 4:
        raise DegenerateInput(f"n must be >= 4, got {n}")
    if n % 2 == 0:
        return FactorResult(f1=2, f2=n // 2, witness=None, attempts=0, method="even")
    if is_perfect_square(n):
        r = math.isqrt(n)
        return FactorResult(f1=r, f2=r, witness=None, attempts=0, method="square")
    power = perfect_power_root(n)
    if power is not None:
        # Odd prime powers have no nontrivial congruence of squares.
        root = power[0]
        return FactorResult(f1=root, f2=n // root, witness=None, attempts=0, method="power")
    if n < _MIN_N or is_prime_by_trial_division(n, config.trial_division_limit):
        raise InputIsPrime(f"input is prime: {n}")
    return None


def sieve_once(params: SieveParams, config: SieveConfig) -> FactorResult:
    fb = build_factor_base(params.n, params.smoothness_bound)
    relations = collect_relations(params, fb, config=config)
    return replace(factor_from_relations(relations, fb, params.n), params=params)


def factor(
    n: int, params: SieveParams | None = None, *, config: SieveConfig | None = None
) -> FactorResult:
    """Split ``n`` into two nontrivial factors, escalating B and M on failure."""
    config = config or load_config()
    shortcut = split_degenerate(n, config)
    if shortcut is not None:
        return shortcut
    params = params or default_params(n, config=config)

    history: list[str] = []
    for attempt in range(config.max_retries + 1):
        try:
            result = sieve_once(params, config)
        except (InsufficientRelations, TrivialDependencies) as exc:
            history.append(f"B={params.smoothness_bound} M={params.half_width}: {exc.detail}")
            logger.info("Sieve attempt %d for n=%d failed: %s", attempt + 1, n, exc.detail)
            if attempt == config.max_retries:
                break
            params = escalate(params, attempt + 1, config)
            continue
        return replace(result, history=tuple(history))

    raise FactorizationFailed(
        f"factorization failed for n={n} after {len(history)} attempts", history
    )
