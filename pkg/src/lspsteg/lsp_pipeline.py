"""Frame-level LPC analysis, LPC/LSP conversion and predictive split VQ.

Conventions
-----------
* LPC predictor: ``x[n] ~ sum_j a[j] x[n-j]``, inverse filter
  ``A(z) = 1 - sum_j a[j] z^-j``.
* LSPs are angles in radians, strictly increasing inside (0, pi).
* The 10-dim residual is split into sub-vectors of sizes 3, 3 and 4, each
  quantized with its own 256-entry codebook.
"""

from dataclasses import dataclass, field
from statistics import NormalDist
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, ConversionError, DomainError

ORDER = 10
FRAME_LENGTH = 240
SAMPLE_RATE = 8000
FRAME_SECONDS = FRAME_LENGTH / SAMPLE_RATE
SPLIT = (3, 3, 4)
CODEBOOK_SIZE = 256
PREDICTOR = 12 / 32
NOISE_FLOOR = 1e-5
MIN_GAP = 1e-3
# grid resolution of the LSP root bracketing
GRID_POINTS = 4096
NEWTON_STEPS = 8
EXPANSION_LADDER = (0.994, 0.98, 0.95, 0.9)


def uniform_lsp(order: int = ORDER) -> np.ndarray:
    """LSPs of the flat spectrum, ``k*pi/(order+1)``."""
    return np.arange(1, order + 1) * np.pi / (order + 1)


@dataclass
class SpeechFrame:
    samples: np.ndarray
    padded: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16)
        if self.samples.shape != (FRAME_LENGTH,):
            raise DomainError(
                f"a speech frame holds {FRAME_LENGTH} samples, got {self.samples.shape}")


@dataclass
class LpcCoeffs:
    a: np.ndarray
    stable: bool = True


class IndexTriple(NamedTuple):
    ix: int
    iy: int
    iz: int


def check_triple(t) -> IndexTriple:
    if len(t) != 3:
        raise DomainError(f"index triple needs three entries, got {t!r}")
    vals = [int(v) for v in t]
    if any(not 0 <= v < CODEBOOK_SIZE for v in vals):
        raise DomainError(f"indices must lie in [0, 255], got {vals}")
    return IndexTriple(*vals)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Three sub-codebooks of shapes (256, 3), (256, 3), (256, 4)."""

    subs: Tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self):
        if len(self.subs) != len(SPLIT):
            raise ConfigurationError(f"expected {len(SPLIT)} sub-codebooks, got {len(self.subs)}")
        subs = []
        for m, (sub, dim) in enumerate(zip(self.subs, SPLIT)):
            arr = np.array(sub, dtype=np.float64)
            if arr.shape != (CODEBOOK_SIZE, dim):
                raise ConfigurationError(
                    f"sub-codebook {m} has shape {arr.shape}, expected {(CODEBOOK_SIZE, dim)}")
            arr.setflags(write=False)
            subs.append(arr)
        object.__setattr__(self, "subs", tuple(subs))

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.subs, other.subs))

    def codeword(self, t) -> np.ndarray:
        """Concatenated 10-dim codeword for an index triple."""
        t = check_triple(t)
        return np.concatenate([sub[i] for sub, i in zip(self.subs, t)])


@dataclass
class QuantConfig:
    dc: np.ndarray = field(default_factory=uniform_lsp)
    predictor: float = PREDICTOR

    def __post_init__(self):
        self.dc = np.asarray(self.dc, dtype=np.float64)
        if self.dc.shape != (ORDER,):
            raise ConfigurationError(f"p_dc must have {ORDER} entries")


@dataclass
class QuantState:
    """Sequential state of one stream: the previously decoded LSP vector."""

    prev_decoded: np.ndarray
    dc: np.ndarray
    b: float = PREDICTOR

    @classmethod
    def initial(cls, config: Optional[QuantConfig] = None) -> "QuantState":
        config = config or QuantConfig()
        return cls(config.dc.copy(), config.dc.copy(), config.predictor)

    def copy(self) -> "QuantState":
        return QuantState(self.prev_decoded.copy(), self.dc.copy(), self.b)


# ---------------------------------------------------------------------------
# LPC analysis

def autocorrelation(x, order: int = ORDER) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    return np.array([np.dot(x[:n - k], x[k:]) for k in range(order + 1)])


def levinson_durbin(r, order: int = ORDER):
    """Solve the Toeplitz normal equations ``R a = r[1:]``.

    Returns ``(a, k, err)``: predictor coefficients, reflection coefficients
    and final prediction error power.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.zeros(order)
    k = np.zeros(order)
    err = r[0]
    for i in range(order):
        if err <= 0:
            break
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        ki = acc / err
        k[i] = ki
        prev = a[:i].copy()
        a[:i] = prev - ki * prev[::-1]
        a[i] = ki
        err *= 1.0 - ki * ki
    return a, k, err


def lpc_coefficients(samples, order: int = ORDER, window: bool = True) -> LpcCoeffs:
    x = np.asarray(samples, dtype=np.float64)
    if window:
        x = x * np.hamming(len(x))
    r = autocorrelation(x, order)
    if r[0] <= 0:
        return LpcCoeffs(np.zeros(order), True)
    r[0] *= 1.0 + NOISE_FLOOR
    a, k, _ = levinson_durbin(r, order)
    return LpcCoeffs(a, bool(np.all(np.abs(k) < 1.0)))


def lpc_analyze(frame) -> LpcCoeffs:
    """10th-order LPC of one 240-sample frame (Hamming window, autocorrelation)."""
    if not isinstance(frame, SpeechFrame):
        frame = SpeechFrame(frame)
    return lpc_coefficients(frame.samples)


def reflection_coefficients(a) -> np.ndarray:
    """Step-down recursion; all ``|k| < 1`` iff the synthesis filter is stable.

    ``a`` may be one predictor or a stack of them (one per row).  Recursion
    stops for a row once some ``|k| >= 1``; later entries are then zero.
    """
    a = np.array(a, dtype=np.float64)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    p = a.shape[1]
    k = np.zeros_like(a)
    alive = np.ones(len(a), dtype=bool)
    for i in range(p - 1, -1, -1):
        ki = np.where(alive, a[:, i], 0.0)
        k[:, i] = np.where(alive, a[:, i], 0.0)
        alive &= np.abs(ki) < 1.0
        ki = np.where(alive, ki, 0.0)
        a = (a[:, :i] + ki[:, None] * a[:, :i][:, ::-1]) / (1.0 - ki * ki)[:, None]
    return k[0] if single else k


def is_stable(a):
    """True when all reflection coefficients lie inside (-1, 1); per row for stacks."""
    ok = np.all(np.abs(reflection_coefficients(a)) < 1.0, axis=-1)
    return bool(ok) if np.ndim(ok) == 0 else ok


# ---------------------------------------------------------------------------
# LPC <-> LSP

def _sum_difference_polys(a):
    A = np.concatenate(([1.0], -np.asarray(a, dtype=np.float64), [0.0]))
    P = A + A[::-1]
    Q = A - A[::-1]
    # deflate the trivial roots z = -1 (P) and z = +1 (Q)
    p = np.empty(len(A) - 1)
    q = np.empty(len(A) - 1)
    p[0], q[0] = P[0], Q[0]
    for i in range(1, len(p)):
        p[i] = P[i] - p[i - 1]
        q[i] = Q[i] + q[i - 1]
    return p, q


_GRID = np.linspace(0.0, np.pi, GRID_POINTS + 1)
_HARMONICS = np.arange(ORDER // 2, 0, -1)
_GRID_COS = 2.0 * np.cos(np.multiply.outer(_GRID, _HARMONICS))


def _brackets(c, n_roots):
    # c is palindromic of degree 2h: value = 2*sum c_k cos((h-k)w) + c_h
    g = _GRID_COS @ c[:n_roots] + c[n_roots]
    neg = np.signbit(g)
    idx = np.nonzero(neg[:-1] != neg[1:])[0]
    if len(idx) != n_roots:
        raise ConversionError(f"bracketed {len(idx)} roots, expected {n_roots}")
    return idx, g[idx]


def lpc_to_lsp(lpc) -> np.ndarray:
    """Line spectral pairs of ``A(z)``: interleaved zeros of P(z) and Q(z).

    Sign changes on a uniform grid bracket the roots, which are then refined
    together with Newton steps that fall back to bisection when they leave
    their bracket.
    """
    if isinstance(lpc, LpcCoeffs):
        if not lpc.stable:
            raise ConversionError("cannot convert an unstable predictor")
        a = lpc.a
    else:
        a = np.asarray(lpc, dtype=np.float64)
    if len(a) != ORDER:
        raise DomainError(f"predictor must have order {ORDER}")
    p, q = _sum_difference_polys(a)
    half = ORDER // 2
    ip, gp = _brackets(p, half)
    iq, gq = _brackets(q, half)
    coef = np.concatenate([np.tile(p[:half], (half, 1)), np.tile(q[:half], (half, 1))])
    const = np.concatenate([np.full(half, p[half]), np.full(half, q[half])])
    idx = np.concatenate([ip, iq])
    lo, hi = _GRID[idx], _GRID[idx + 1]
    glo = np.concatenate([gp, gq])
    w = 0.5 * (lo + hi)
    for _ in range(NEWTON_STEPS):
        mw = np.multiply.outer(w, _HARMONICS)
        g = 2.0 * np.einsum("rk,rk->r", coef, np.cos(mw)) + const
        dg = -2.0 * np.einsum("rk,rk->r", coef * _HARMONICS, np.sin(mw))
        same = np.signbit(g) == np.signbit(glo)
        lo = np.where(same, w, lo)
        glo = np.where(same, g, glo)
        hi = np.where(same, hi, w)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = w - g / dg
        inside = (step >= lo) & (step <= hi)
        w = np.where(inside, step, 0.5 * (lo + hi))
    roots = w
    lsp = np.empty(len(a))
    lsp[0::2], lsp[1::2] = roots[:half], roots[half:]
    if not np.all(np.diff(lsp) > 0) or lsp[0] <= 0 or lsp[-1] >= np.pi:
        raise ConversionError("P and Q roots do not interleave; predictor is not minimum phase")
    return lsp


def frame_lsp(frame) -> np.ndarray:
    """Unquantized LSP of a speech frame.

    If two roots are too close to bracket, the predictor is bandwidth
    expanded (``a_j * g**j``) with increasing strength until they separate.
    """
    lpc = lpc_analyze(frame)
    try:
        return lpc_to_lsp(lpc)
    except ConversionError:
        pass
    powers = np.arange(1, ORDER + 1)
    for g in EXPANSION_LADDER:
        try:
            return lpc_to_lsp(lpc.a * g ** powers)
        except ConversionError:
            continue
    raise ConversionError("LSP conversion failed even after bandwidth expansion")


def check_lsp(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or len(p) == 0:
        raise DomainError("LSP vector must be one-dimensional")
    if not (np.all(np.diff(p) > 0) and p[0] > 0 and p[-1] < np.pi):
        raise DomainError("LSP vector must be strictly increasing inside (0, pi)")
    return p


def _times_quadratic(poly, w):
    """Multiply each row of ``poly`` by ``1 - 2 cos(w) z^-1 + z^-2``."""
    out = np.zeros((poly.shape[0], poly.shape[1] + 2))
    out[:, :-2] += poly
    out[:, 1:-1] -= 2.0 * np.cos(w)[:, None] * poly
    out[:, 2:] += poly
    return out


def lsp_to_lpc_batch(lsps) -> Tuple[np.ndarray, np.ndarray]:
    """Predictors and stability flags for a stack of LSP vectors (one per row)."""
    p = np.asarray(lsps, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] % 2:
        raise DomainError("expected a stack of even-order LSP vectors")
    if p.size and not (np.all(np.diff(p, axis=1) > 0) and np.all(p[:, 0] > 0)
                       and np.all(p[:, -1] < np.pi)):
        raise DomainError("LSP vectors must be strictly increasing inside (0, pi)")
    n = len(p)
    P = np.tile([1.0, 1.0], (n, 1))
    Q = np.tile([1.0, -1.0], (n, 1))
    for j in range(0, p.shape[1], 2):
        P = _times_quadratic(P, p[:, j])
        Q = _times_quadratic(Q, p[:, j + 1])
    a = -0.5 * (P + Q)[:, 1:p.shape[1] + 1]
    return a, np.asarray(is_stable(a)).reshape(n)


def lsp_to_lpc(p) -> LpcCoeffs:
    a, stable = lsp_to_lpc_batch(check_lsp(p)[None, :])
    return LpcCoeffs(a[0], bool(stable[0]))


# ---------------------------------------------------------------------------
# Quantizer

def weight_matrix(p_unquantized) -> np.ndarray:
    """Diagonal weights ``1 / min(gap to left neighbour, gap to right neighbour)``.

    Works row-wise on a stack of LSP vectors too.
    """
    p = np.asarray(p_unquantized, dtype=np.float64)
    gaps = np.diff(p, axis=-1)
    if np.any(gaps <= 0) or not np.all(np.isfinite(gaps)):
        raise DomainError("weights need a strictly increasing LSP vector")
    nearest = np.empty(p.shape)
    nearest[..., 0] = gaps[..., 0]
    nearest[..., -1] = gaps[..., -1]
    nearest[..., 1:-1] = np.minimum(gaps[..., :-1], gaps[..., 1:])
    return 1.0 / nearest


_SLICES = tuple(slice(a - n, a) for n, a in zip(SPLIT, np.cumsum(SPLIT)))


def split(v) -> list:
    v = np.asarray(v)
    return [v[s] for s in _SLICES]


def predict(state: QuantState) -> np.ndarray:
    """DC-removed prediction from the previously decoded vector."""
    return state.b * (state.prev_decoded - state.dc)


def residual(p_prime, state: QuantState) -> np.ndarray:
    return (np.asarray(p_prime, dtype=np.float64) - state.dc) - predict(state)


def weighted_errors(e, w, cb: Codebook) -> list:
    """Weighted error of every codeword, one 256-vector per sub-vector."""
    return [((em - sub) ** 2) @ wm for em, wm, sub in zip(split(e), split(w), cb.subs)]


def repair_lsp(p, min_gap: float = MIN_GAP) -> np.ndarray:
    """Sort and push neighbours apart so the vector is a valid LSP set.

    Forward pass: p[i] = max(p[i], p[i-1] + gap); then, if the top value
    overshot, backward pass p[i] = min(p[i], p[i+1] - gap).  Both passes are
    running extrema of ``p - i*gap``.
    """
    p = np.clip(np.sort(np.asarray(p, dtype=np.float64)), min_gap, np.pi - min_gap)
    ramp = min_gap * np.arange(len(p))
    p = np.maximum.accumulate(p - ramp) + ramp
    p[-1] = min(p[-1], np.pi - min_gap)
    return np.minimum.accumulate((p - ramp)[::-1])[::-1] + ramp


def reconstruct(t, state: QuantState, cb: Codebook) -> np.ndarray:
    """Decoded LSP for a triple without touching the state."""
    return repair_lsp(predict(state) + cb.codeword(t) + state.dc)


def dequantize(t, state: QuantState, cb: Codebook) -> np.ndarray:
    decoded = reconstruct(t, state, cb)
    state.prev_decoded = decoded
    return decoded


def _check_codebook(cb):
    if not isinstance(cb, Codebook):
        raise ConfigurationError("quantizer needs a Codebook")
    if sum(SPLIT) != ORDER:
        raise ConfigurationError("split does not cover the LSP order")


def quantize(p_prime, state: QuantState, cb: Codebook):
    """Best index triple for one frame; advances ``state``.

    Returns ``(triple, decoded_lsp, sub_errors)``.
    """
    _check_codebook(cb)
    p_prime = np.asarray(p_prime, dtype=np.float64)
    if p_prime.shape != (ORDER,):
        raise ConfigurationError(f"LSP vector must have {ORDER} entries")
    errs = weighted_errors(residual(p_prime, state), weight_matrix(p_prime), cb)
    t = IndexTriple(*(int(np.argmin(err)) for err in errs))
    sub_errors = np.array([err[i] for err, i in zip(errs, t)])
    return t, dequantize(t, state, cb), sub_errors


# lattice levels per sub-codebook, slowest-varying component first
LATTICE_LEVELS = ((8, 8, 4), (8, 8, 4), (4, 4, 4, 4))
CODEBOOK_SCALE = 0.11


def _serpentine(levels):
    """Lattice points in boustrophedon order: consecutive points are neighbours."""
    if len(levels) == 1:
        return [[i] for i in range(levels[0])]
    inner = _serpentine(levels[1:])
    out = []
    for i in range(levels[0]):
        out += [[i] + rest for rest in (inner if i % 2 == 0 else inner[::-1])]
    return out


def _gaussian_levels(n, scale):
    """Centroid-ish levels: standard normal quantiles at (i + 1/2)/n."""
    nd = NormalDist(0.0, scale)
    return np.array([nd.inv_cdf((i + 0.5) / n) for i in range(n)])


def make_synthetic_codebook(seed: int = 0, scale: float = CODEBOOK_SCALE,
                            low: float = -0.35, high: float = 0.35) -> Codebook:
    """Seeded stand-in for the codec's LSP tables.

    Each sub-codebook is a product lattice walked in serpentine order, so the
    first component never decreases and neighbouring indices hold neighbouring
    codewords.  Levels sit at normal quantiles of spread ``scale`` (finer near
    zero, where prediction residuals concentrate).  The seed jitters all but
    the first component by a tenth of the local level spacing; everything is
    clipped to ``[low, high]``.
    """
    rng = np.random.default_rng(int(seed))
    subs = []
    for levels in LATTICE_LEVELS:
        grid = np.array(_serpentine(levels))
        pts = np.empty(grid.shape)
        for j, n in enumerate(levels):
            lv = _gaussian_levels(n, scale)
            pts[:, j] = lv[grid[:, j]]
            if j:
                spacing = np.gradient(lv)[grid[:, j]]
                pts[:, j] += 0.1 * spacing * rng.normal(size=len(pts))
        subs.append(np.clip(pts, low, high))
    return Codebook(tuple(subs))
