"""Regular LDPC code: construction, systematic encoding, belief propagation.

The parity-check matrix is a (column-weight, row-weight) regular bipartite
graph drawn from a random socket matching; seeds are retried until the
matrix has full rank so the code dimension is exactly n - m.  Encoding
solves the parity positions from the reduced row-echelon form; decoding is
log-domain sum-product message passing with early stopping on parity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jpeg import Bitstream

# Internal message clip keeps arctanh finite; external LLRs are clipped at 20.
_MSG_CLIP = 30.0
_TANH_EPS = 1e-12


def gf2_rref(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(2); returns (rref, pivot columns)."""
    m = matrix.copy().astype(np.uint8)
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hot = np.nonzero(m[r:, c])[0]
        if hot.size == 0:
            continue
        pivot = r + hot[0]
        if pivot != r:
            m[[r, pivot]] = m[[pivot, r]]
        mask = m[:, c].copy()
        mask[r] = 0
        m[mask == 1] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def gf2_rank(matrix: np.ndarray) -> int:
    return len(gf2_rref(matrix)[1])


def _sample_regular_matrix(n: int, m: int, col_weight: int, row_weight: int,
                           rng: np.random.Generator) -> np.ndarray | None:
    """Socket-matching sample of a regular bipartite graph.

    Double edges from the random matching are repaired by swapping check
    sockets; returns None if the repair loop does not converge.
    """
    var_sockets = np.repeat(np.arange(n), col_weight)
    chk_sockets = np.repeat(np.arange(m), row_weight)
    rng.shuffle(chk_sockets)
    for _ in range(1000):
        pair_ids = var_sockets.astype(np.int64) * m + chk_sockets
        order = np.argsort(pair_ids, kind="stable")
        dup = order[1:][np.diff(pair_ids[order]) == 0]
        if dup.size == 0:
            h = np.zeros((m, n), dtype=np.uint8)
            h[chk_sockets, var_sockets] = 1
            return h
        partners = rng.integers(0, chk_sockets.size, size=dup.size)
        chk_sockets[dup], chk_sockets[partners] = chk_sockets[partners], chk_sockets[dup]
    return None


@dataclass
class LdpcCode:
    """Linear code defined by a full-rank (n-k) x n parity-check matrix."""

    n: int
    k: int
    parity_check: np.ndarray
    message_cols: np.ndarray = field(repr=False)
    pivot_cols: np.ndarray = field(repr=False)
    encode_matrix: np.ndarray = field(repr=False)
    # Edge arrays (check-sorted) for message passing.
    edge_check: np.ndarray = field(repr=False)
    edge_var: np.ndarray = field(repr=False)
    check_starts: np.ndarray = field(repr=False)
    var_order: np.ndarray = field(repr=False)
    var_starts: np.ndarray = field(repr=False)

    @property
    def rate(self) -> float:
        return self.k / self.n


def _edge_structure(h: np.ndarray):
    chk, var = np.nonzero(h)
    order = np.lexsort((var, chk))
    edge_check, edge_var = chk[order], var[order]
    check_starts = np.searchsorted(edge_check, np.arange(h.shape[0]))
    var_order = np.argsort(edge_var, kind="stable")
    var_starts = np.searchsorted(edge_var[var_order], np.arange(h.shape[1]))
    return edge_check, edge_var, check_starts, var_order, var_starts


def make_regular_ldpc(n: int = 1024, k: int = 512, col_weight: int = 3,
                      row_weight: int = 6, seed: int = 0,
                      max_attempts: int = 200) -> LdpcCode:
    """Build a regular LDPC code with a full-rank parity-check matrix."""
    m = n - k
    if m * row_weight != n * col_weight:
        raise ValueError(f"degree constraint violated: ({n}-{k})*{row_weight} != {n}*{col_weight}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        h = _sample_regular_matrix(n, m, col_weight, row_weight, rng)
        if h is None:
            continue
        rref, pivots = gf2_rref(h)
        if len(pivots) != m:
            continue
        pivot_cols = np.array(pivots)
        message_cols = np.setdiff1d(np.arange(n), pivot_cols)
        encode_matrix = rref[:, message_cols]
        edge_check, edge_var, check_starts, var_order, var_starts = _edge_structure(h)
        return LdpcCode(n=n, k=k, parity_check=h, message_cols=message_cols,
                        pivot_cols=pivot_cols, encode_matrix=encode_matrix,
                        edge_check=edge_check, edge_var=edge_var,
                        check_starts=check_starts, var_order=var_order,
                        var_starts=var_starts)
    raise RuntimeError(f"no full-rank regular parity-check matrix found in {max_attempts} attempts")


def ldpc_encode(msg: Bitstream | np.ndarray, code: LdpcCode) -> Bitstream:
    """Systematic encoding: message bits land on the non-pivot columns,
    parity bits are solved so that H·c = 0 (mod 2)."""
    bits = msg.bits if isinstance(msg, Bitstream) else np.asarray(msg, dtype=np.uint8)
    if bits.size != code.k:
        raise ValueError(f"message length {bits.size} != k = {code.k}")
    codeword = np.zeros(code.n, dtype=np.uint8)
    codeword[code.message_cols] = bits
    codeword[code.pivot_cols] = (code.encode_matrix @ bits) % 2
    return Bitstream(codeword)


def parity_ok(codeword: np.ndarray, code: LdpcCode) -> bool:
    return not np.any((code.parity_check @ codeword) % 2)


def _group_sums(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    return np.add.reduceat(values, starts)


def ldpc_decode(llr: np.ndarray, code: LdpcCode,
                max_iters: int = 50) -> tuple[Bitstream, bool]:
    """Log-domain sum-product decoding.

    Returns (message bits, success); success means the hard decision
    satisfied every parity check within max_iters.  On failure the
    best-effort hard decision is returned.
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.size != code.n:
        raise ValueError(f"LLR length {llr.size} != n = {code.n}")
    ec, ev = code.edge_check, code.edge_var
    msg_vc = llr[ev].copy()
    posterior = llr.copy()
    success = False
    for _ in range(max_iters):
        # Check update: product of tanh(m/2) over the check, excluding each edge.
        t = np.tanh(np.clip(msg_vc, -_MSG_CLIP, _MSG_CLIP) / 2.0)
        sign = np.where(t < 0, -1.0, 1.0)
        logmag = np.log(np.clip(np.abs(t), _TANH_EPS, None))
        neg_counts = _group_sums((t < 0).astype(np.int64), code.check_starts)
        log_sums = _group_sums(logmag, code.check_starts)
        excl_sign = np.where((neg_counts[ec] - (t < 0)) % 2, -1.0, 1.0)
        excl_mag = np.exp(np.clip(log_sums[ec] - logmag, None, 0.0))
        prod = np.clip(excl_sign * excl_mag, -1.0 + _TANH_EPS, 1.0 - _TANH_EPS)
        msg_cv = 2.0 * np.arctanh(prod)
        # Variable update and posterior.
        sums = np.zeros(code.n)
        np.add.at(sums, ev, msg_cv)
        posterior = llr + sums
        msg_vc = np.clip(posterior[ev] - msg_cv, -_MSG_CLIP, _MSG_CLIP)
        hard = (posterior < 0).astype(np.uint8)
        if parity_ok(hard, code):
            success = True
            break
    hard = (posterior < 0).astype(np.uint8)
    return Bitstream(hard[code.message_cols]), success
