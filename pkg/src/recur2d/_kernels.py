"""numba kernels for the simulation and dynamic-programming hot loops.

Every Monte Carlo kernel takes `(out_slices..., index_offset, master, ...)`
and processes trajectories `index_offset + i` into slot `i` of its output
slices, drawing all randomness from the splitmix64 stream of
`(master, index_offset + i)`.  Results are therefore functions of the
(master seed, trajectory index) pairs alone: identical for any chunking,
thread count, or call order.  The stream derivation mirrors
:mod:`recur2d.rng` bit for bit (tested).

Kernels are serial; callers parallelize by chunking index ranges.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# splitmix64 constants
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWOBIT = np.uint64(3)
_S2 = np.uint64(2)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _stream_state(master, index):
    return _mix64(master + (np.uint64(index) + _ONE) * _GAMMA)


@njit(cache=True)
def _next_u64(state):
    state = state + _GAMMA
    return state, _mix64(state)


@njit(cache=True)
def _next_double(state):
    # uniform on [0, 1)
    state, x = _next_u64(state)
    return state, np.float64(x >> _S11) * _INV53


@njit(cache=True)
def _next_double_pos(state):
    # uniform on (0, 1]
    state, x = _next_u64(state)
    return state, (np.float64(x >> _S11) + 1.0) * _INV53


@njit(cache=True)
def _draw_cat(state, cdf_row):
    state, u = _next_double(state)
    j = 0
    last = cdf_row.shape[0] - 1
    while j < last and u >= cdf_row[j]:
        j += 1
    return state, j


@njit(cache=True)
def _next_normal_pair(state):
    state, u1 = _next_double_pos(state)
    state, u2 = _next_double(state)
    r = math.sqrt(-2.0 * math.log(u1))
    a = _TWO_PI * u2
    return state, r * math.cos(a), r * math.sin(a)


@njit(cache=True)
def stream_probe_kernel(out_u64, out_doubles, index_offset, master):
    """Raw draws per trajectory stream; exists to pin the jit generator to
    the pure-python reference bit for bit."""
    for i in range(out_u64.shape[0]):
        state = _stream_state(master, index_offset + i)
        for j in range(out_u64.shape[1]):
            state, x = _next_u64(state)
            out_u64[i, j] = x
            out_doubles[i, j] = np.float64(x >> _S11) * _INV53


# ---------------------------------------------------------------------------
# cylinder-mass fluctuations
# ---------------------------------------------------------------------------

@njit(cache=True)
def clt_samples_kernel(out, index_offset, master, p_cdf, pi_cdf, rev_cdf,
                       log_pi, log_p, k, dim):
    sqrt_k = math.sqrt(float(k))
    for i in range(out.shape[0]):
        state = _stream_state(master, index_offset + i)
        state, c = _draw_cat(state, p_cdf)
        acc = 0.0
        x = c
        for _ in range(k):
            state, nxt = _draw_cat(state, pi_cdf[x])
            acc += log_pi[x, nxt]
            x = nxt
        y = c
        for _ in range(k):
            state, prev = _draw_cat(state, rev_cdf[y])
            acc += log_pi[prev, y]
            y = prev
        acc += log_p[y]
        out[i] = (acc + k * dim) / sqrt_k


# ---------------------------------------------------------------------------
# cylinder returns (sliding-window word matching)
# ---------------------------------------------------------------------------

@njit(cache=True)
def cylinder_returns_kernel(out_r, out_logmass, index_offset, master,
                            p_cdf, pi_cdf, log_p, log_pi, k, fixed_word, budget):
    """First n >= 1 whose sliding radius-k window reproduces the start window.

    fixed_word: length 2k+1 target (conditional mode), or length 0 to draw
    the start window from the measure.  out_r[i] = 0 marks a censored record.
    """
    length = 2 * k + 1
    word = np.empty(length, dtype=np.int64)
    ring = np.empty(length, dtype=np.int64)
    for i in range(out_r.shape[0]):
        state = _stream_state(master, index_offset + i)
        if fixed_word.shape[0] == length:
            for j in range(length):
                word[j] = fixed_word[j]
            logm = log_p[word[0]]
            for j in range(length - 1):
                logm += log_pi[word[j], word[j + 1]]
        else:
            state, s0 = _draw_cat(state, p_cdf)
            word[0] = s0
            logm = log_p[s0]
            for j in range(1, length):
                state, nxt = _draw_cat(state, pi_cdf[word[j - 1]])
                word[j] = nxt
                logm += log_pi[word[j - 1], nxt]
        out_logmass[i] = logm
        for j in range(length):
            ring[j] = word[j]
        newest_slot = length - 1
        result = np.int64(0)
        n = np.int64(0)
        while n < budget:
            n += 1
            state, nxt = _draw_cat(state, pi_cdf[ring[newest_slot]])
            newest_slot += 1
            if newest_slot == length:
                newest_slot = 0
            ring[newest_slot] = nxt
            # compare newest-first: most positions fail on the first letter
            if nxt == word[length - 1]:
                ok = True
                slot = newest_slot
                for back in range(1, length):
                    slot -= 1
                    if slot < 0:
                        slot = length - 1
                    if ring[slot] != word[length - 1 - back]:
                        ok = False
                        break
                if ok:
                    result = n
                    break
        out_r[i] = result


# ---------------------------------------------------------------------------
# extension returns (displacement + window condition)
# ---------------------------------------------------------------------------

@njit(cache=True)
def extension_returns_kernel(out_tau, out_logmass, out_budget, index_offset,
                             master, p_cdf, pi_cdf, log_p, log_pi,
                             psi1, psi2, k, tmax, fixed_budget, ceiling):
    """tau = min{n >= 1 : S_n = 0 and the radius-k window recurs}.

    Per-trajectory budget: fixed_budget when tmax <= 0, otherwise
    ceil(exp(tmax / mass)) capped at `ceiling` (mass = drawn window's
    cylinder mass), so each record decides every threshold t <= tmax exactly.
    out_tau[i] = 0 marks a censored record.
    """
    length = 2 * k + 1
    word = np.empty(length, dtype=np.int64)
    ring = np.empty(length, dtype=np.int64)
    for i in range(out_tau.shape[0]):
        state = _stream_state(master, index_offset + i)
        state, s0 = _draw_cat(state, p_cdf)
        word[0] = s0
        logm = log_p[s0]
        for j in range(1, length):
            state, nxt = _draw_cat(state, pi_cdf[word[j - 1]])
            word[j] = nxt
            logm += log_pi[word[j - 1], nxt]
        out_logmass[i] = logm
        if tmax > 0.0:
            need = tmax / math.exp(logm)
            if need > 42.0:  # e^42 overflows any workable step count
                budget = ceiling
            else:
                b = math.ceil(math.exp(need))
                budget = np.int64(b)
                if budget > ceiling:
                    budget = ceiling
        else:
            budget = fixed_budget
        out_budget[i] = budget
        for j in range(length):
            ring[j] = word[j]
        # rolling slots: frontier symbol, and the displacement pair (lagging k)
        slot_f = length - 1
        slot_p1 = k - 1  # position f - k - 1 once the loop starts
        slot_p2 = k
        s1 = np.int64(0)
        s2 = np.int64(0)
        result = np.int64(0)
        n = np.int64(0)
        while n < budget:
            n += 1
            state, nxt = _draw_cat(state, pi_cdf[ring[slot_f]])
            slot_f += 1
            if slot_f == length:
                slot_f = 0
            ring[slot_f] = nxt
            slot_p1 += 1
            if slot_p1 == length:
                slot_p1 = 0
            slot_p2 += 1
            if slot_p2 == length:
                slot_p2 = 0
            a = ring[slot_p1]
            b = ring[slot_p2]
            s1 += psi1[a, b]
            s2 += psi2[a, b]
            if s1 == 0 and s2 == 0:
                ok = True
                slot = slot_f
                for back in range(length):
                    if ring[slot] != word[length - 1 - back]:
                        ok = False
                        break
                    slot -= 1
                    if slot < 0:
                        slot = length - 1
                if ok:
                    result = n
                    break
        out_tau[i] = result


@njit(cache=True)
def extension_returns_uniform_kernel(out_tau, out_logmass, out_budget, index_offset,
                                     master, n_sym, digits_per_lane, log_p, log_pi,
                                     psi1, psi2, k, tmax, fixed_budget, ceiling):
    """extension_returns_kernel for iid uniform symbols (full shift, flat rows).

    Symbols come from base-`n_sym` fixed-point extraction on the two 32-bit
    lanes of each generator word, `digits_per_lane` digits a lane; the caller
    bounds the lane depth so each digit's bias stays below 1e-6.  Same output
    contract as extension_returns_kernel, different draw sequence.
    """
    length = 2 * k + 1
    word = np.empty(length, dtype=np.int64)
    ring = np.empty(length, dtype=np.int64)
    base = np.uint64(n_sym)
    mask32 = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    for i in range(out_tau.shape[0]):
        state = _stream_state(master, index_offset + i)
        frac = np.uint64(0)
        spare = np.uint64(0)
        have_spare = False
        left = 0
        for j in range(length):
            if left == 0:
                if have_spare:
                    frac = spare
                    have_spare = False
                else:
                    state = state + _GAMMA
                    z = _mix64(state)
                    frac = z >> s32
                    spare = z & mask32
                    have_spare = True
                left = digits_per_lane
            prod = frac * base
            word[j] = np.int64(prod >> s32)
            frac = prod & mask32
            left -= 1
        logm = log_p[word[0]]
        for j in range(1, length):
            logm += log_pi[word[j - 1], word[j]]
        out_logmass[i] = logm
        if tmax > 0.0:
            need = tmax / math.exp(logm)
            if need > 42.0:  # e^42 overflows any workable step count
                budget = ceiling
            else:
                b = math.ceil(math.exp(need))
                budget = np.int64(b)
                if budget > ceiling:
                    budget = ceiling
        else:
            budget = fixed_budget
        out_budget[i] = budget
        for j in range(length):
            ring[j] = word[j]
        slot_f = length - 1
        slot_p1 = k - 1
        slot_p2 = k
        s1 = np.int64(0)
        s2 = np.int64(0)
        result = np.int64(0)
        n = np.int64(0)
        while n < budget:
            n += 1
            if left == 0:
                if have_spare:
                    frac = spare
                    have_spare = False
                else:
                    state = state + _GAMMA
                    z = _mix64(state)
                    frac = z >> s32
                    spare = z & mask32
                    have_spare = True
                left = digits_per_lane
            prod = frac * base
            nxt = np.int64(prod >> s32)
            frac = prod & mask32
            left -= 1
            slot_f += 1
            if slot_f == length:
                slot_f = 0
            ring[slot_f] = nxt
            slot_p1 += 1
            if slot_p1 == length:
                slot_p1 = 0
            slot_p2 += 1
            if slot_p2 == length:
                slot_p2 = 0
            a = ring[slot_p1]
            b = ring[slot_p2]
            s1 += psi1[a, b]
            s2 += psi2[a, b]
            if s1 == 0 and s2 == 0:
                ok = True
                slot = slot_f
                for back in range(length):
                    if ring[slot] != word[length - 1 - back]:
                        ok = False
                        break
                    slot -= 1
                    if slot < 0:
                        slot = length - 1
                if ok:
                    result = n
                    break
        out_tau[i] = result


@njit(cache=True)
def extension_nested_kernel(out_taus, out_first_zero, index_offset, master,
                            p_cdf, pi_cdf, psi1, psi2, kmax, budget):
    """One trajectory, every radius 1..kmax at once.

    Draws a single radius-kmax window; out_taus[i, k-1] is the first n with
    S_n = 0 and the radius-k *sub*-window recurring (0 = censored), so the
    records are pathwise nested.  out_first_zero[i] is the first n >= 1 with
    S_n = 0.
    """
    length = 2 * kmax + 1
    word = np.empty(length, dtype=np.int64)
    ring = np.empty(length, dtype=np.int64)
    for i in range(out_taus.shape[0]):
        state = _stream_state(master, index_offset + i)
        state, s0 = _draw_cat(state, p_cdf)
        word[0] = s0
        for j in range(1, length):
            state, nxt = _draw_cat(state, pi_cdf[word[j - 1]])
            word[j] = nxt
        for j in range(length):
            ring[j] = word[j]
        for kk in range(kmax):
            out_taus[i, kk] = 0
        out_first_zero[i] = 0
        slot_f = length - 1
        slot_p1 = kmax - 1
        slot_p2 = kmax
        s1 = np.int64(0)
        s2 = np.int64(0)
        found = 0
        n = np.int64(0)
        while n < budget and found < kmax:
            n += 1
            state, nxt = _draw_cat(state, pi_cdf[ring[slot_f]])
            slot_f += 1
            if slot_f == length:
                slot_f = 0
            ring[slot_f] = nxt
            slot_p1 += 1
            if slot_p1 == length:
                slot_p1 = 0
            slot_p2 += 1
            if slot_p2 == length:
                slot_p2 = 0
            s1 += psi1[ring[slot_p1], ring[slot_p2]]
            s2 += psi2[ring[slot_p1], ring[slot_p2]]
            if s1 == 0 and s2 == 0:
                if out_first_zero[i] == 0:
                    out_first_zero[i] = n
                # radius-k sub-window of the current window sits at ring
                # positions n+kmax-k .. n+kmax+k; absolute position t lives
                # in slot (t % length), and slot_f holds position n+2*kmax.
                for kk in range(1, kmax + 1):
                    if out_taus[i, kk - 1] != 0:
                        continue
                    ok = True
                    # positions n+kmax-kk .. n+kmax+kk vs word center +- kk
                    for off in range(-kk, kk + 1):
                        back = kmax - off  # distance behind the frontier
                        slot = slot_f - back
                        while slot < 0:
                            slot += length
                        if ring[slot] != word[kmax + off]:
                            ok = False
                            break
                    if ok:
                        out_taus[i, kk - 1] = n
                        found += 1


# ---------------------------------------------------------------------------
# toy model: lattice walk with spins
# ---------------------------------------------------------------------------

@njit(cache=True)
def srw_first_returns_kernel(out, index_offset, master, cap):
    """First return time to the origin of the simple walk on Z^2; 0 if > cap."""
    for i in range(out.shape[0]):
        state = _stream_state(master, index_offset + i)
        x = np.int64(0)
        y = np.int64(0)
        n = np.int64(0)
        result = np.int64(0)
        done = False
        while not done and n < cap:
            state, bits = _next_u64(state)
            for _ in range(32):
                d = bits & _TWOBIT
                bits = bits >> _S2
                if d == np.uint64(0):
                    x += 1
                elif d == np.uint64(1):
                    x -= 1
                elif d == np.uint64(2):
                    y += 1
                else:
                    y -= 1
                n += 1
                if x == 0 and y == 0:
                    result = n
                    done = True
                    break
                if n >= cap:
                    done = True
                    break
        out[i] = result


@njit(cache=True)
def _sampler_draw_log(state, log_vals, frac_unc, log_cap):
    """One draw of log R from the hybrid sampler.

    Below the cap: resample the stored empirical log-values.  Above: inverse
    transform of the survival law P(R > s | R > cap) = log(cap)/log(s),
    i.e. log R = log(cap) / U with U uniform on (0, 1].
    """
    state, u = _next_double(state)
    if u < frac_unc:
        state, u2 = _next_double(state)
        idx = np.int64(u2 * log_vals.shape[0])
        if idx >= log_vals.shape[0]:
            idx = log_vals.shape[0] - 1
        return state, log_vals[idx]
    state, u2 = _next_double_pos(state)
    return state, log_cap / u2


@njit(cache=True)
def _geometric_draw(state, log1m_delta):
    # support {1, 2, ...}, P(T = t) = delta (1-delta)^(t-1)
    state, u = _next_double_pos(state)
    t = np.int64(math.ceil(math.log(u) / log1m_delta))
    if t < 1:
        t = np.int64(1)
    return state, t


@njit(cache=True)
def toy_tau_kernel(out_logtau, index_offset, master, delta,
                   log_vals, frac_unc, log_cap):
    """log tau for tau = R_1 + ... + R_T, T geometric(delta), gaps from the sampler.

    Streaming log-sum-exp keeps the sum exact in log domain even when a gap
    is astronomically larger than the rest.
    """
    log1m = math.log1p(-delta)
    for i in range(out_logtau.shape[0]):
        state = _stream_state(master, index_offset + i)
        state, t = _geometric_draw(state, log1m)
        m = -np.inf
        s = 0.0
        for _ in range(t):
            state, lr = _sampler_draw_log(state, log_vals, frac_unc, log_cap)
            if lr <= m:
                s += math.exp(lr - m)
            else:
                if m == -np.inf:
                    s = 1.0
                else:
                    s = s * math.exp(m - lr) + 1.0
                m = lr
        out_logtau[i] = m + math.log(s)


@njit(cache=True)
def sampler_sums_kernel(out_logsum, index_offset, master, n_draws,
                        log_vals, frac_unc, log_cap):
    """log(R_1 + ... + R_n) with gaps from the sampler (fixed draw count)."""
    for i in range(out_logsum.shape[0]):
        state = _stream_state(master, index_offset + i)
        m = -np.inf
        s = 0.0
        for _ in range(n_draws):
            state, lr = _sampler_draw_log(state, log_vals, frac_unc, log_cap)
            if lr <= m:
                s += math.exp(lr - m)
            else:
                if m == -np.inf:
                    s = 1.0
                else:
                    s = s * math.exp(m - lr) + 1.0
                m = lr
        out_logsum[i] = m + math.log(s)


@njit(cache=True)
def toy_direct_kernel(out_tau, out_flag, index_offset, master, eps, budget, inset):
    """Direct simulation: tau = min{m >= 1 : |S_m + Y_m - Y_0| < eps}.

    Spins Y_m are drawn fresh every step.  out_flag bit 0: matched at a
    nonzero lattice point; bit 1: the eps-ball around Y_0 leaves the unit
    square.  With inset=True, Y_0 is uniform on [eps, 1-eps]^2 and both flags
    stay 0.  out_tau[i] = 0 marks a censored record.
    """
    eps2 = eps * eps
    for i in range(out_tau.shape[0]):
        state = _stream_state(master, index_offset + i)
        state, u = _next_double(state)
        state, v = _next_double(state)
        if inset:
            y0x = eps + u * (1.0 - 2.0 * eps)
            y0y = eps + v * (1.0 - 2.0 * eps)
        else:
            y0x = u
            y0y = v
        flag = np.int64(0)
        if y0x < eps or y0x > 1.0 - eps or y0y < eps or y0y > 1.0 - eps:
            flag |= 2
        x = np.int64(0)
        y = np.int64(0)
        result = np.int64(0)
        n = np.int64(0)
        while n < budget:
            n += 1
            state, bits = _next_u64(state)
            d = bits & _TWOBIT
            if d == np.uint64(0):
                x += 1
            elif d == np.uint64(1):
                x -= 1
            elif d == np.uint64(2):
                y += 1
            else:
                y -= 1
            state, sx = _next_double(state)
            state, sy = _next_double(state)
            dx = np.float64(x) + sx - y0x
            dy = np.float64(y) + sy - y0y
            if dx * dx + dy * dy < eps2:
                result = n
                if x != 0 or y != 0:
                    flag |= 1
                break
        out_tau[i] = result
        out_flag[i] = flag


@njit(cache=True)
def toy_decomposed_kernel(out_tau, index_offset, master, eps, budget):
    """Gap/thinning simulation: walk gap by gap, spin drawn only at returns.

    Y_0 uniform on the inset square [eps, 1-eps]^2 (where the decomposition
    is exact).  tau = sum of first-return gaps until a return's spin lands
    within eps of Y_0.  out_tau[i] = 0 marks a censored record.
    """
    eps2 = eps * eps
    for i in range(out_tau.shape[0]):
        state = _stream_state(master, index_offset + i)
        state, u = _next_double(state)
        state, v = _next_double(state)
        y0x = eps + u * (1.0 - 2.0 * eps)
        y0y = eps + v * (1.0 - 2.0 * eps)
        total = np.int64(0)
        result = np.int64(0)
        while total < budget:
            # one first-return gap
            x = np.int64(0)
            y = np.int64(0)
            returned = False
            while total < budget:
                state, bits = _next_u64(state)
                d = bits & _TWOBIT
                if d == np.uint64(0):
                    x += 1
                elif d == np.uint64(1):
                    x -= 1
                elif d == np.uint64(2):
                    y += 1
                else:
                    y -= 1
                total += 1
                if x == 0 and y == 0:
                    returned = True
                    break
            if not returned:
                break
            state, sx = _next_double(state)
            state, sy = _next_double(state)
            dx = sx - y0x
            dy = sy - y0y
            if dx * dx + dy * dy < eps2:
                result = total
                break
        out_tau[i] = result


# ---------------------------------------------------------------------------
# planar walks
# ---------------------------------------------------------------------------

@njit(cache=True)
def planar_endpoint_r2_kernel(out_r2, index_offset, master, n_steps,
                              law, param, block):
    """|S_n|^2 after n_steps.  law 0: standard gaussian steps, advanced in
    exact N(0, m I) blocks of size <= block; law 1: uniform on the disc of
    radius param; law 2: simple lattice steps."""
    for i in range(out_r2.shape[0]):
        state = _stream_state(master, index_offset + i)
        sx = 0.0
        sy = 0.0
        if law == 0:
            left = n_steps
            while left > 0:
                m = block if left > block else left
                state, z1, z2 = _next_normal_pair(state)
                root = math.sqrt(np.float64(m))
                sx += root * z1
                sy += root * z2
                left -= m
        elif law == 1:
            for _ in range(n_steps):
                state, u = _next_double(state)
                state, w = _next_double(state)
                r = param * math.sqrt(u)
                a = _TWO_PI * w
                sx += r * math.cos(a)
                sy += r * math.sin(a)
        else:
            ix = np.int64(0)
            iy = np.int64(0)
            for _ in range(n_steps):
                state, bits = _next_u64(state)
                d = bits & _TWOBIT
                if d == np.uint64(0):
                    ix += 1
                elif d == np.uint64(1):
                    ix -= 1
                elif d == np.uint64(2):
                    iy += 1
                else:
                    iy -= 1
            sx = np.float64(ix)
            sy = np.float64(iy)
        out_r2[i] = sx * sx + sy * sy


@njit(cache=True)
def planar_tau_kernel(out_tau, index_offset, master, eps, budget, law, param):
    """First n >= 1 with |S_n| < eps (stepwise; no blocking: first passage).

    out_tau[i] = 0 marks a censored record.
    """
    eps2 = eps * eps
    for i in range(out_tau.shape[0]):
        state = _stream_state(master, index_offset + i)
        sx = 0.0
        sy = 0.0
        result = np.int64(0)
        n = np.int64(0)
        if law == 2:
            ix = np.int64(0)
            iy = np.int64(0)
            while n < budget:
                n += 1
                state, bits = _next_u64(state)
                d = bits & _TWOBIT
                if d == np.uint64(0):
                    ix += 1
                elif d == np.uint64(1):
                    ix -= 1
                elif d == np.uint64(2):
                    iy += 1
                else:
                    iy -= 1
                if np.float64(ix * ix + iy * iy) < eps2:
                    result = n
                    break
        else:
            while n < budget:
                n += 1
                if law == 0:
                    state, z1, z2 = _next_normal_pair(state)
                    sx += z1
                    sy += z2
                else:
                    state, u = _next_double(state)
                    state, w = _next_double(state)
                    r = param * math.sqrt(u)
                    a = _TWO_PI * w
                    sx += r * math.cos(a)
                    sy += r * math.sin(a)
                if sx * sx + sy * sy < eps2:
                    result = n
                    break
        out_tau[i] = result


# ---------------------------------------------------------------------------
# chain partial sums (empirical covariance cross-check)
# ---------------------------------------------------------------------------

@njit(cache=True)
def pair_sums_kernel(out_s1, out_s2, index_offset, master,
                     p_cdf, pi_cdf, psi1, psi2, n_steps):
    for i in range(out_s1.shape[0]):
        state = _stream_state(master, index_offset + i)
        state, x = _draw_cat(state, p_cdf)
        s1 = np.int64(0)
        s2 = np.int64(0)
        for _ in range(n_steps):
            state, nxt = _draw_cat(state, pi_cdf[x])
            s1 += psi1[x, nxt]
            s2 += psi2[x, nxt]
            x = nxt
        out_s1[i] = s1
        out_s2[i] = s2


# ---------------------------------------------------------------------------
# displacement-distribution sweep
# ---------------------------------------------------------------------------

@njit(cache=True)
def dp_step_kernel(old, new, pi, psi1, psi2, cx, cy, rcur, max_norm, forced_b):
    """One step of the exact displacement DP.

    new[b, x + psi1(a,b), y + psi2(a,b)] += old[a, x, y] * pi[a, b] over the
    active box |x - cx|, |y - cy| <= rcur (conditioned starts are off-center).
    forced_b >= 0 restricts the landing symbol.  Fixed loop order keeps the
    accumulation deterministic.  Returns the new active radius.
    """
    a_sym = old.shape[0]
    rnew = rcur + max_norm
    for b in range(a_sym):
        for x in range(cx - rnew, cx + rnew + 1):
            row = new[b, x]
            for y in range(cy - rnew, cy + rnew + 1):
                row[y] = 0.0
    for a in range(a_sym):
        for b in range(a_sym):
            if forced_b >= 0 and b != forced_b:
                continue
            w = pi[a, b]
            if w == 0.0:
                continue
            dx = psi1[a, b]
            dy = psi2[a, b]
            for x in range(cx - rcur, cx + rcur + 1):
                src = old[a, x]
                dst = new[b, x + dx]
                for y in range(cy - rcur, cy + rcur + 1):
                    dst[y + dy] += src[y] * w
    return rnew
